//! Run reports and their JSON form. Floats are written with 17 significant
//! digits so every double round-trips; non-finite values become `null`.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;

use crate::bounds::BoundReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub values: BTreeMap<String, f64>,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), pass, values: BTreeMap::new(), detail: String::new() }
    }

    pub fn value(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

/// Everything an experiment produces apart from bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub bounds: Vec<BoundReport>,
    /// `(file name, contents)` pairs written next to the report.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass) && self.bounds.iter().all(|b| b.dominance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub experiment: String,
    pub criterion: String,
    pub version: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub started_unix_ms: u128,
    pub wall_clock_s: f64,
    pub verdict: bool,
    pub checks: Vec<Check>,
    pub bounds: Vec<BoundReport>,
    pub artifacts: Vec<String>,
    pub error: Option<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

/// serde_json formatter writing `f64` as `{:.16e}`.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    value.serialize(&mut ser).expect("report types serialize infallibly");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        let vals = vec![0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, -5e307, 0.0, f64::NAN];
        let text = to_json_string(&vals);
        let back: Vec<Option<f64>> = serde_json::from_str(&text).unwrap();
        for (a, b) in vals.iter().zip(&back) {
            match b {
                Some(b) => assert_eq!(a.to_bits(), b.to_bits()),
                None => assert!(a.is_nan()),
            }
        }
        assert!(text.contains("3.3333333333333331e-1"));
    }
}

//! Finite-support weighted distributions. The same type carries an empirical
//! sample (equal weights) and a desk-scale "population" with analytic weights.
//!
//! CSV form: header `w,x1,...,xd`, one row per atom.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

/// Allowed deviation of the weight sum from 1 for in-memory datasets.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Allowed deviation of the weight sum from 1 when loading from CSV.
pub const CSV_WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset has no points")]
    Empty,
    #[error("point {index} has dimension {got}, expected {expected}")]
    Dimension { index: usize, expected: usize, got: usize },
    #[error("invalid weight at index {index}: {value}")]
    Weight { index: usize, value: f64 },
    #[error("weights sum to {sum}, not 1 within {tol:e}")]
    WeightSum { sum: f64, tol: f64 },
    #[error("non-finite coordinate in point {0}")]
    NonFinite(usize),
    #[error("csv line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDataset {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    dim: usize,
}

/// Neumaier summation; plain summation of many `1/n` drifts past `WEIGHT_SUM_TOL`.
fn compensated_sum(xs: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

impl WeightedDataset {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, DatasetError> {
        let dim = validate_points(&points)?;
        if weights.len() != points.len() {
            return Err(DatasetError::Parse { line: 0, msg: format!("{} weights for {} points", weights.len(), points.len()) });
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(DatasetError::Weight { index, value });
        }
        let sum = compensated_sum(&weights);
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(DatasetError::WeightSum { sum, tol: WEIGHT_SUM_TOL });
        }
        Ok(Self { points, weights, dim })
    }

    /// Equal weights `1/n`.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self, DatasetError> {
        let n = points.len();
        Self::new(points, vec![1.0 / n.max(1) as f64; n])
    }

    /// Normalizes nonnegative raw weights to sum one.
    pub fn from_raw_weights(points: Vec<Vec<f64>>, raw: Vec<f64>) -> Result<Self, DatasetError> {
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(DatasetError::WeightSum { sum, tol: WEIGHT_SUM_TOL });
        }
        Self::new(points, raw.into_iter().map(|w| w / sum).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points.iter().map(Vec::as_slice).zip(self.weights.iter().copied())
    }

    /// True when all atoms carry the same weight (an unweighted sample).
    pub fn is_equally_weighted(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|w| (w - w0).abs() <= 1e-15)
    }

    /// Sub-distribution on the given atoms, renormalized.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, DatasetError> {
        Self::from_raw_weights(
            indices.iter().map(|&i| self.points[i].clone()).collect(),
            indices.iter().map(|&i| self.weights[i]).collect(),
        )
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("w");
        for j in 0..self.dim {
            write!(out, ",x{}", j + 1).unwrap();
        }
        out.push('\n');
        for (x, w) in self.iter() {
            write!(out, "{w}").unwrap();
            for v in x {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), DatasetError> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

fn validate_points(points: &[Vec<f64>]) -> Result<usize, DatasetError> {
    let dim = points.first().ok_or(DatasetError::Empty)?.len();
    for (index, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(DatasetError::Dimension { index, expected: dim, got: p.len() });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite(index));
        }
    }
    Ok(dim)
}

/// A dataset read from CSV, with the weight-sum correction applied on load.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: WeightedDataset,
    /// `sum(w) - 1` before renormalization.
    pub weight_correction: f64,
}

pub fn parse_csv(text: &str) -> Result<LoadedDataset, DatasetError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(DatasetError::Empty)?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let dim = cols.len().saturating_sub(1);
    let header_ok = cols.first() == Some(&"w")
        && dim > 0
        && cols[1..].iter().enumerate().all(|(j, c)| *c == format!("x{}", j + 1));
    if !header_ok {
        return Err(DatasetError::Parse { line: 1, msg: format!("expected header w,x1,...,xd, got `{header}`") });
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(DatasetError::Parse { line: i + 1, msg: format!("expected {} fields, got {}", dim + 1, fields.len()) });
        }
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let parsed = parsed.map_err(|e| DatasetError::Parse { line: i + 1, msg: e.to_string() })?;
        weights.push(parsed[0]);
        points.push(parsed[1..].to_vec());
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > CSV_WEIGHT_SUM_TOL {
        return Err(DatasetError::WeightSum { sum, tol: CSV_WEIGHT_SUM_TOL });
    }
    let dataset = WeightedDataset::from_raw_weights(points, weights)?;
    Ok(LoadedDataset { dataset, weight_correction: sum - 1.0 })
}

pub fn load_csv(path: &Path) -> Result<LoadedDataset, DatasetError> {
    parse_csv(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_uniform_datasets_validate() {
        let pts: Vec<Vec<f64>> = (0..100_000).map(|i| vec![i as f64]).collect();
        assert_eq!(WeightedDataset::uniform(pts).unwrap().len(), 100_000);
    }

    #[test]
    fn validates_weights_and_dimensions() {
        assert!(matches!(WeightedDataset::new(vec![], vec![]), Err(DatasetError::Empty)));
        assert!(matches!(
            WeightedDataset::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.6]),
            Err(DatasetError::WeightSum { .. })
        ));
        assert!(matches!(
            WeightedDataset::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]),
            Err(DatasetError::Dimension { index: 1, .. })
        ));
        assert!(matches!(
            WeightedDataset::new(vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]),
            Err(DatasetError::Weight { index: 1, .. })
        ));
    }

    #[test]
    fn csv_round_trip_and_correction() {
        let ds = WeightedDataset::new(vec![vec![0.1, -2.0], vec![3.5, 1e-7]], vec![0.25, 0.75]).unwrap();
        let text = ds.to_csv_string();
        assert!(text.starts_with("w,x1,x2\n"));
        let loaded = parse_csv(&text).unwrap();
        assert_eq!(loaded.dataset, ds);
        assert_eq!(loaded.weight_correction, 0.0);

        let off = "w,x1\n0.5000000001,1\n0.5,2\n";
        let loaded = parse_csv(off).unwrap();
        assert!((loaded.weight_correction - 1e-10).abs() < 1e-15);
        assert!((loaded.dataset.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);

        assert!(matches!(parse_csv("w,x1\n0.6,1\n0.5,2\n"), Err(DatasetError::WeightSum { .. })));
        assert!(matches!(parse_csv("weight,x1\n1,1\n"), Err(DatasetError::Parse { line: 1, .. })));
    }

    #[test]
    fn subset_renormalizes() {
        let ds = WeightedDataset::uniform(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let s = ds.subset(&[1, 3]).unwrap();
        assert_eq!(s.weights(), &[0.5, 0.5]);
        assert!(s.is_equally_weighted());
    }
}

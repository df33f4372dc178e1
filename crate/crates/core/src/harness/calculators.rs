//! Standalone bound calculators exposed through `qem bounds <name>`. Inputs
//! come from `--override` / `--config` against each calculator's defaults.

use super::config::{Config, Params};
use super::HarnessError;
use crate::bounds;
use crate::ipm::{self, DeviationKind};

pub struct Calculator {
    pub name: &'static str,
    pub summary: &'static str,
    pub schema: &'static [(&'static str, &'static str)],
    pub eval: fn(&Params) -> Result<Vec<f64>, HarnessError>,
}

pub const CALCULATORS: &[Calculator] = &[
    Calculator {
        name: "perturbed-envelope",
        summary: "γ^t e0 + (1-γ^t)/(1-γ) Δ for t = 0..horizon",
        schema: &[("gamma", "0.5"), ("delta", "0.1"), ("e0", "1"), ("horizon", "10")],
        eval: |p| Ok(bounds::perturbed_envelope(p.get("gamma")?, p.get("delta")?, p.get("e0")?, p.get("horizon")?)?),
    },
    Calculator {
        name: "inexact-envelope",
        summary: "envelope for per-step errors eps (comma list)",
        schema: &[("gamma", "0.5"), ("e0", "1"), ("eps", "0.1,0.1,0.1")],
        eval: |p| Ok(bounds::inexact_envelope(p.get("gamma")?, p.get("e0")?, &p.list("eps")?)?),
    },
    Calculator {
        name: "splitting-envelope",
        summary: "envelope for per-block deviations (comma list)",
        schema: &[("gamma", "0.5"), ("e0", "1"), ("deviations", "0.1,0.1,0.1")],
        eval: |p| Ok(bounds::splitting_envelope(p.get("gamma")?, p.get("e0")?, &p.list("deviations")?)?),
    },
    Calculator {
        name: "delta-from-gradients",
        summary: "operator deviation from a gradient deviation and λ",
        schema: &[("lambda", "1"), ("sup_grad_dev", "0.1")],
        eval: |p| Ok(vec![bounds::delta_from_gradients(p.get("lambda")?, p.get("sup_grad_dev")?)?]),
    },
    Calculator {
        name: "argmax-shift",
        summary: "ε/λ",
        schema: &[("lambda", "1"), ("eps", "0.1")],
        eval: |p| Ok(vec![bounds::argmax_shift_bound(p.get("lambda")?, p.get("eps")?)?]),
    },
    Calculator {
        name: "function-gap-shift",
        summary: "√(4δ/λ)",
        schema: &[("lambda", "1"), ("delta_sup", "0.1")],
        eval: |p| Ok(vec![bounds::function_gap_shift_bound(p.get("lambda")?, p.get("delta_sup")?)?]),
    },
    Calculator {
        name: "approx-stationary",
        summary: "√(2η/λ)",
        schema: &[("lambda", "1"), ("eta", "0.1")],
        eval: |p| Ok(vec![bounds::approx_stationary_bound(p.get("lambda")?, p.get("eta")?)?]),
    },
    Calculator {
        name: "covering",
        summary: "(1 + 2LR/ε)^p",
        schema: &[("p", "2"), ("lipschitz", "1"), ("radius", "1"), ("eps", "0.1")],
        eval: |p| Ok(vec![bounds::covering_bound(p.get("p")?, p.get("lipschitz")?, p.get("radius")?, p.get("eps")?)?]),
    },
    Calculator {
        name: "sphere-net",
        summary: "(1 + 2/η)^d",
        schema: &[("dim", "3"), ("eta", "0.25")],
        eval: |p| Ok(vec![bounds::sphere_net_bound(p.get("dim")?, p.get("eta")?)?]),
    },
    Calculator {
        name: "dudley",
        summary: "(C/√n) ∫ √(p log(1 + 2LR/ε)) dε over (0, diam]",
        schema: &[("p", "2"), ("lipschitz", "1"), ("radius", "1"), ("diam", "1"), ("n", "100"), ("c", "24")],
        eval: |p| {
            let (dim, l, r): (f64, f64, f64) = (p.get("p")?, p.get("lipschitz")?, p.get("radius")?);
            let entropy = move |e: f64| dim * (1.0 + 2.0 * l * r / e).ln();
            Ok(vec![bounds::dudley_bound(&entropy, p.get("diam")?, p.get("n")?, p.get("c")?)?])
        },
    },
    Calculator {
        name: "matrix-bernstein-tail",
        summary: "2d exp(-(t²/2)/(V + Rt/3))",
        schema: &[("v", "1"), ("r", "1"), ("d", "2"), ("t", "3")],
        eval: |p| Ok(vec![bounds::matrix_bernstein_tail(p.get("v")?, p.get("r")?, p.get("d")?, p.get("t")?)?]),
    },
    Calculator {
        name: "matrix-bernstein-hp",
        summary: "√(2V log(2d/δ)) + (2R/3) log(2d/δ)",
        schema: &[("v", "1"), ("r", "1"), ("d", "2"), ("delta", "0.05")],
        eval: |p| Ok(vec![bounds::matrix_bernstein_hp(p.get("v")?, p.get("r")?, p.get("d")?, p.get("delta")?)?]),
    },
    Calculator {
        name: "bousquet",
        summary: "EZ + √(2vt/n) + bt/(3n)",
        schema: &[("ez", "0.1"), ("v", "0.25"), ("b", "1"), ("n", "100"), ("t", "1")],
        eval: |p| Ok(vec![bounds::bousquet_bound(p.get("ez")?, p.get("v")?, p.get("b")?, p.get("n")?, p.get("t")?)?]),
    },
    Calculator {
        name: "ipm-to-orbit-rate",
        summary: "IPM value over the lower modulus slope",
        schema: &[("ipm", "0.1"), ("slope", "1")],
        eval: |p| Ok(vec![bounds::ipm_to_orbit_rate(p.get("ipm")?, p.get("slope")?)?]),
    },
    Calculator {
        name: "feature-ipm-deviation",
        summary: "2B/√n + B√(2t/n)",
        schema: &[("bound", "1"), ("n", "100"), ("t", "1")],
        eval: |p| Ok(vec![ipm::ipm_deviation_bound(DeviationKind::Feature { bound: p.get("bound")? }, p.get("n")?, p.get("t")?)?]),
    },
    Calculator {
        name: "mmd-deviation",
        summary: "2κ/√n + κ√(2t/n)",
        schema: &[("kappa", "1"), ("n", "100"), ("t", "1")],
        eval: |p| Ok(vec![ipm::ipm_deviation_bound(DeviationKind::Kernel { kappa: p.get("kappa")? }, p.get("n")?, p.get("t")?)?]),
    },
];

pub fn find(name: &str) -> Option<&'static Calculator> {
    CALCULATORS.iter().find(|c| c.name == name)
}

#[derive(Debug, serde::Serialize)]
pub struct CalculatorOutput {
    pub name: String,
    pub inputs: std::collections::BTreeMap<String, String>,
    pub bound: Vec<f64>,
}

/// Resolves inputs and evaluates. Domain errors count as usage errors here:
/// the inputs came straight from the command line.
pub fn evaluate(calc: &Calculator, config: &Config) -> Result<CalculatorOutput, HarnessError> {
    let params = Params::resolve(calc.schema, config)?;
    let bound = (calc.eval)(&params).map_err(|e| match e {
        HarnessError::Bounds(_) | HarnessError::Ipm(_) => HarnessError::Usage(e.to_string()),
        other => other,
    })?;
    Ok(CalculatorOutput { name: calc.name.into(), inputs: params.values().clone(), bound })
}

//! Acceptance suite: one test per criterion, each running the registered
//! experiment on its default configuration. A few numbers are re-derived
//! here independently of the library.

use quotient_em::harness::config::Config;
use quotient_em::harness::experiments;
use quotient_em::harness::report::RunReport;
use quotient_em::harness::run_experiment;
use quotient_em::models::ModelSpec;

/// Runs the experiment, prints its summary line and asserts the verdict.
fn run(name: &str) -> RunReport {
    let exp = experiments::find(name).unwrap_or_else(|| panic!("experiment {name} not registered"));
    let report = run_experiment(exp, Config::default(), None).expect("default config resolves").report;
    let failed: Vec<String> = report.checks.iter().filter(|c| !c.pass).map(|c| format!("{} {:?}", c.name, c.values)).collect();
    let note = report.error.clone().unwrap_or_else(|| failed.join("; "));
    println!("{} {} {} ({:.2}s) {note}", exp.criterion, exp.name, if report.verdict { "PASS" } else { "FAIL" }, report.wall_clock_s);
    assert!(report.verdict, "{} {} failed: {note}", exp.criterion, exp.name);
    report
}

fn value(report: &RunReport, check: &str, key: &str) -> f64 {
    let c = report.checks.iter().find(|c| c.name == check).unwrap_or_else(|| panic!("{}: no check `{check}`", report.experiment));
    *c.values.get(key).unwrap_or_else(|| panic!("check `{check}` has no value `{key}`"))
}

/// Spectral radius of the 2×2 Jacobian of the sectioned means-only EM map at the
/// ±2 fixed point, by central differences of the M-step and the closed-form
/// 2×2 eigenvalues.
fn oracle_rate() -> f64 {
    let model = ModelSpec::gmm_spherical(2, 1, 1.0);
    let truth = model.params(vec![0.5, 0.5, -2.0, 2.0]).unwrap();
    let atoms = 200;
    let (lo, hi) = (-8.0, 8.0);
    let pts: Vec<Vec<f64>> = (0..atoms).map(|i| vec![lo + (hi - lo) * (i as f64 + 0.5) / atoms as f64]).collect();
    let raw: Vec<f64> = pts.iter().map(|x| 0.5 * ((-(x[0] + 2.0).powi(2) / 2.0).exp() + (-(x[0] - 2.0).powi(2) / 2.0).exp())).collect();
    let pop = quotient_em::dataset::WeightedDataset::from_raw_weights(pts, raw).unwrap();
    let mut theta = truth.clone();
    for _ in 0..2000 {
        theta = model.m_step(&theta, &pop).unwrap();
    }
    let h = 1e-4;
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let mut plus = theta.values().to_vec();
        let mut minus = plus.clone();
        plus[2 + j] += h;
        minus[2 + j] -= h;
        let mp = model.m_step(&theta.with_values(plus).unwrap(), &pop).unwrap();
        let mm = model.m_step(&theta.with_values(minus).unwrap(), &pop).unwrap();
        for i in 0..2 {
            jac[i][j] = (mp.values()[2 + i] - mm.values()[2 + i]) / (2.0 * h);
        }
    }
    let tr = jac[0][0] + jac[1][1];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 + disc).abs().max((tr / 2.0 - disc).abs())
}

macro_rules! criterion {
    ($($test:ident => $name:literal),* $(,)?) => {
        $(
            #[test]
            fn $test() {
                run($name);
            }
        )*
    };
}

criterion! {
    a01_ascent => "ascent",
    a02_equivariance => "equivariance",
    a03_quotient_ipm => "quotient-ipm",
    a05_perturbed_contraction => "perturbed-contraction",
    a07_inexact_envelope => "inexact-envelope",
    a08_delta_via_gradients => "delta-via-gradients",
    a09_argmax_stability => "argmax-stability",
    a10_feature_ipm_concentration => "feature-ipm-concentration",
    a13_sections => "sections",
    a14_fisher_identity => "fisher-identity",
    a15_matrix_bernstein_bousquet => "matrix-bernstein-bousquet",
    a16_misspecified_pipeline => "misspecified-pipeline",
}

#[test]
fn a04_sharp_rate() {
    let report = run("sharp-rate");
    let rho = value(&report, "empirical rate within tolerance of spectral radius", "rho_formula");
    let oracle = oracle_rate();
    assert!((rho - oracle).abs() <= 1e-6, "rho_formula {rho} vs independent FD {oracle}");
}

#[test]
fn a06_sharpness_equality() {
    let report = run("sharpness-equality");
    let measured = &report.bounds[0].measured;
    assert_eq!(measured.len(), 51);
    for (t, m) in measured.iter().enumerate() {
        let closed = 0.1 * (1.0 - 0.5f64.powi(t as i32)) / 0.5;
        assert!((m - closed).abs() <= 1e-12, "t={t}: {m} vs {closed}");
    }
}

#[test]
fn a11_mmd_concentration() {
    let report = run("mmd-concentration");
    let allowance = 2.0 / 200f64.sqrt() + 1.0 / 1e5f64.sqrt();
    let reported = value(&report, "mean MMD under 2κ/√n plus reference allowance", "bound");
    assert!((reported - allowance).abs() <= 1e-15, "{reported} vs {allowance}");
}

#[test]
fn a12_nets_covering() {
    let report = run("nets-covering");
    for d in [2, 3, 4] {
        for eta in [0.2f64, 0.3, 0.5] {
            let size = value(&report, &format!("sphere net d={d} eta={eta}"), "size");
            assert!(size <= (1.0 + 2.0 / eta).powi(d), "d={d} eta={eta}: {size}");
        }
    }
}

#[test]
fn every_experiment_is_covered() {
    assert_eq!(experiments::EXPERIMENTS.len(), 16);
}

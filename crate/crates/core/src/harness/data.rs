//! Data generation: seeded samples from the implemented models, exact
//! finite-support populations on grids, and point masses.

use std::path::PathBuf;

use super::config::{Config, Params};
use super::HarnessError;
use crate::dataset::{self, WeightedDataset};
use crate::models::ModelSpec;
use crate::numerics::Matrix;
use crate::params::ParamVector;
use crate::rng;

pub const DATA_SCHEMA: &[(&str, &str)] = &[
    ("seed", "7"),
    ("model.kind", "sign"),
    ("model.k", "2"),
    ("model.d", "1"),
    ("model.covariance", "spherical"),
    ("model.sigma2", "1"),
    ("model.sigma", "1"),
    ("model.r", "1"),
    ("model.psi", ""),
    ("data.design", "sample"),
    ("data.theta", "1"),
    ("data.n", "100"),
    ("data.point", ""),
    ("data.grid.atoms", "200"),
    ("data.grid.lo", "-8"),
    ("data.grid.hi", "8"),
    ("data.file", ""),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Sample { n: usize },
    /// Tensor grid with `atoms` points per axis on `[lo, hi]^d`, weights ∝ density.
    Grid { atoms: usize, lo: f64, hi: f64 },
    Point { point: Vec<f64>, n: usize },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub model: ModelSpec,
    pub theta: ParamVector,
    pub design: Design,
}

pub fn model_from_params(p: &Params) -> Result<ModelSpec, HarnessError> {
    let d: usize = p.get("model.d")?;
    if d == 0 {
        return Err(HarnessError::Config("model.d must be positive".into()));
    }
    match p.str("model.kind")? {
        "gmm" => {
            let k: usize = p.get("model.k")?;
            if k == 0 {
                return Err(HarnessError::Config("model.k must be positive".into()));
            }
            match p.str("model.covariance")? {
                "spherical" => Ok(ModelSpec::gmm_spherical(k, d, p.get("model.sigma2")?)),
                "full" => Ok(ModelSpec::gmm_full(k, d)),
                other => Err(HarnessError::Config(format!("model.covariance must be spherical or full, got `{other}`"))),
            }
        }
        "sign" => Ok(ModelSpec::sign_mixture(d, p.get("model.sigma")?)),
        "factor" => {
            let diag = p.list("model.psi")?;
            let diag = if diag.is_empty() { vec![1.0; d] } else { diag };
            if diag.len() != d {
                return Err(HarnessError::Config(format!("model.psi needs {d} diagonal entries")));
            }
            ModelSpec::factor(d, p.get("model.r")?, Matrix::diag(&diag)).map_err(|e| HarnessError::Config(e.to_string()))
        }
        other => Err(HarnessError::Config(format!("model.kind must be gmm, sign or factor, got `{other}`"))),
    }
}

impl DataSpec {
    pub fn from_config(config: &Config) -> Result<(Self, u64), HarnessError> {
        let p = Params::resolve(DATA_SCHEMA, config)?;
        let model = model_from_params(&p)?;
        let theta = model.params(p.list("data.theta")?).map_err(|e| HarnessError::Config(format!("data.theta: {e}")))?;
        let design = match p.str("data.design")? {
            "sample" => Design::Sample { n: p.get("data.n")? },
            "grid" => Design::Grid { atoms: p.get("data.grid.atoms")?, lo: p.get("data.grid.lo")?, hi: p.get("data.grid.hi")? },
            "point" => Design::Point { point: p.list("data.point")?, n: p.get("data.n")? },
            "file" => Design::File(PathBuf::from(p.str("data.file")?)),
            other => return Err(HarnessError::Config(format!("data.design must be sample, grid, point or file, got `{other}`"))),
        };
        Ok((Self { model, theta, design }, p.get("seed")?))
    }
}

/// Finite-support population on a tensor grid with weights proportional to the density of `P_θ`.
pub fn population_grid(model: &ModelSpec, theta: &ParamVector, atoms: usize, lo: f64, hi: f64) -> Result<WeightedDataset, HarnessError> {
    let d = model.dim();
    if atoms < 2 || !(hi > lo) || d > 2 {
        return Err(HarnessError::Config(format!("grid design needs atoms ≥ 2, hi > lo and d ≤ 2 (got {atoms}, [{lo}, {hi}], d={d})")));
    }
    let axis: Vec<f64> = (0..atoms).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / atoms as f64).collect();
    let points: Vec<Vec<f64>> = if d == 1 {
        axis.iter().map(|x| vec![*x]).collect()
    } else {
        axis.iter().flat_map(|x| axis.iter().map(move |y| vec![*x, *y])).collect()
    };
    let raw = points.iter().map(|x| Ok(model.log_marginal(theta, x)?.exp())).collect::<Result<Vec<f64>, HarnessError>>()?;
    Ok(WeightedDataset::from_raw_weights(points, raw)?)
}

pub fn generate_data(spec: &DataSpec, seed: u64) -> Result<WeightedDataset, HarnessError> {
    match &spec.design {
        Design::Sample { n } => {
            if *n == 0 {
                return Err(HarnessError::Config("data.n must be positive".into()));
            }
            Ok(spec.model.sample(&spec.theta, *n, &mut rng::stream(seed, "gen-data", 0))?)
        }
        Design::Grid { atoms, lo, hi } => population_grid(&spec.model, &spec.theta, *atoms, *lo, *hi),
        Design::Point { point, n } => {
            if point.len() != spec.model.dim() || *n == 0 {
                return Err(HarnessError::Config(format!("data.point needs {} coordinates and data.n ≥ 1", spec.model.dim())));
            }
            Ok(WeightedDataset::uniform(vec![point.clone(); *n])?)
        }
        Design::File(path) => Ok(dataset::load_csv(path)?.dataset),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> (DataSpec, u64) {
        DataSpec::from_config(&Config::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn point_mass_and_determinism() {
        let (s, seed) = spec("data.design = point\ndata.point = 2.5\ndata.n = 1");
        let ds = generate_data(&s, seed).unwrap();
        assert_eq!(ds.points(), &[vec![2.5]]);
        assert_eq!(ds.weights(), &[1.0]);
        let (s, _) = spec("model.kind = gmm\nmodel.d = 2\ndata.theta = 0.5,0.5,-1,0,1,0\ndata.n = 50");
        assert_eq!(generate_data(&s, 3).unwrap().to_csv_string(), generate_data(&s, 3).unwrap().to_csv_string());
        assert_ne!(generate_data(&s, 3).unwrap().to_csv_string(), generate_data(&s, 4).unwrap().to_csv_string());
    }

    #[test]
    fn sign_second_moment_oracle() {
        let (s, _) = spec("model.d = 2\ndata.theta = 1,0\ndata.n = 10000");
        let ds = generate_data(&s, 11).unwrap();
        let n = ds.len() as f64;
        // E[XXᵀ] = I + θθᵀ = diag(2, 1); Var(X_a X_b) for the entries
        let expected = [[2.0, 0.0], [0.0, 1.0]];
        for a in 0..2 {
            for b in 0..2 {
                let vals: Vec<f64> = ds.points().iter().map(|x| x[a] * x[b]).collect();
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                assert!((mean - expected[a][b]).abs() <= 3.0 * (var / n).sqrt(), "({a},{b}) {mean}");
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        for text in ["model.kind = hmm", "data.theta = 1,2", "data.design = lattice", "bogus = 1", "model.kind = gmm\nmodel.covariance = diag"] {
            assert!(DataSpec::from_config(&Config::parse(text).unwrap()).is_err(), "{text}");
        }
    }

    #[test]
    fn grid_population_weights() {
        let (s, _) = spec("data.design = grid\ndata.theta = 0\ndata.grid.atoms = 400\ndata.grid.lo = -10\ndata.grid.hi = 10");
        let ds = generate_data(&s, 0).unwrap();
        let var: f64 = ds.iter().map(|(x, w)| w * x[0] * x[0]).sum();
        assert!((var - 1.0).abs() < 1e-12);
    }
}

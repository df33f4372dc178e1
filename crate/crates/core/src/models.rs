//! Latent-variable models with closed-form EM steps.
//!
//! * `Gmm`: `k`-component Gaussian mixture, either with a known spherical
//!   covariance `σ²I` (means-only: the M-step moves the means and keeps the
//!   weights fixed) or with free weights and full covariances.
//! * `SignMixture`: `½N(θ, σ²I) + ½N(-θ, σ²I)`, identified up to `θ ↦ -θ`.
//! * `Factor`: `X = A Z + ε`, `Z ~ N(0, I_r)`, `ε ~ N(0, Ψ)` with `Ψ` known,
//!   identified up to `A ↦ A R`, `R ∈ O(r)`.
//!
//! Responsibilities are computed in the log domain and floored at
//! [`RESPONSIBILITY_FLOOR`] before normalization.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, WeightedDataset};
use crate::groups::{GroupAction, GroupError};
use crate::numerics::{self, Matrix, NumericsError};
use crate::params::{pack_upper, unpack_upper, LayoutError, ParamLayout, ParamVector};

pub const RESPONSIBILITY_FLOOR: f64 = 1e-300;
/// Smallest posterior mass a component may keep through an M-step.
pub const MIN_COMPONENT_MASS: f64 = 1e-12;
/// Allowed deviation of mixture weights from the simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("underflow: every component has zero likelihood at point {point}")]
    Underflow { point: usize },
    #[error("degeneracy: component {component} has posterior mass {mass:e}")]
    Degeneracy { component: usize, mass: f64 },
    #[error("conditioning error: {0}")]
    Conditioning(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("dimension error: point has dimension {got}, model expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CovarianceMode {
    /// Known covariance `sigma2 · I`; weights held fixed, means free.
    SphericalKnown { sigma2: f64 },
    /// Weights, means and full covariances all free.
    FullFree,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Gmm { k: usize, d: usize, covariance: CovarianceMode },
    SignMixture { d: usize, sigma: f64 },
    Factor { d: usize, r: usize, psi: Matrix },
}

/// Posterior (E-step) quantities for every point of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum PosteriorTable {
    /// `resp[i][z]`; for the sign mixture `z = 0` is `+θ` and `z = 1` is `-θ`.
    Finite { resp: Vec<Vec<f64>> },
    /// Conditional means `m_i` and the shared conditional covariance `C`.
    Gaussian { means: Vec<Vec<f64>>, cov: Matrix },
}

impl PosteriorTable {
    pub fn responsibilities(&self) -> Option<&[Vec<f64>]> {
        match self {
            PosteriorTable::Finite { resp } => Some(resp),
            PosteriorTable::Gaussian { .. } => None,
        }
    }

    /// `Σ_i w_i KL(self_i ‖ other_i)` for finite-latent tables.
    pub fn weighted_kl(&self, other: &PosteriorTable, weights: &[f64]) -> Option<f64> {
        let (a, b) = (self.responsibilities()?, other.responsibilities()?);
        Some(
            a.iter()
                .zip(b)
                .zip(weights)
                .map(|((p, q), w)| w * p.iter().zip(q).map(|(p, q)| if *p > 0.0 { p * (p / q).ln() } else { 0.0 }).sum::<f64>())
                .sum(),
        )
    }
}

/// Analytic `∇²_{θ'θ'}Q` and finite-difference `∇²_{θ'θ}Q`, both over the
/// differentiable coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianBlocks {
    pub h_pp: Matrix,
    pub h_pt: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherCheck {
    /// Central finite differences of `log p_θ(x)`.
    pub grad_log_marginal: Vec<f64>,
    /// `E_{Z|x}[∇ log p_θ(x, Z)]`, analytic.
    pub posterior_avg_complete_score: Vec<f64>,
}

impl FisherCheck {
    pub fn max_abs_diff(&self) -> f64 {
        self.grad_log_marginal
            .iter()
            .zip(&self.posterior_avg_complete_score)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub second: Matrix,
}

/// Gaussian component with either spherical or Cholesky-factored covariance.
#[derive(Debug, Clone)]
enum Gauss {
    Spherical { mean: Vec<f64>, sigma2: f64 },
    Full { mean: Vec<f64>, chol: DMatrix<f64>, logdet: f64 },
}

impl Gauss {
    fn full(mean: Vec<f64>, cov: &Matrix) -> Option<Gauss> {
        let chol = nalgebra::Cholesky::new(cov.symmetrized().to_dmatrix())?;
        let l = chol.l();
        let logdet = 2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>();
        Some(Gauss::Full { mean, chol: l, logdet })
    }

    fn mean(&self) -> &[f64] {
        match self {
            Gauss::Spherical { mean, .. } | Gauss::Full { mean, .. } => mean,
        }
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        match self {
            Gauss::Spherical { mean, sigma2 } => {
                let q: f64 = x.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
                -0.5 * (d * (2.0 * PI * sigma2).ln() + q / sigma2)
            }
            Gauss::Full { mean, chol, logdet } => {
                let diff = DVector::from_iterator(x.len(), x.iter().zip(mean).map(|(a, b)| a - b));
                let z = chol.solve_lower_triangular(&diff).expect("Cholesky factor is nonsingular");
                -0.5 * (d * (2.0 * PI).ln() + logdet + z.norm_squared())
            }
        }
    }
}

/// Per-parameter quantities reused across points.
#[derive(Debug, Clone)]
enum Prepared {
    Mixture { log_weights: Vec<f64>, comps: Vec<Gauss> },
    Factor(FactorPrep),
}

#[derive(Debug, Clone)]
struct FactorPrep {
    a: DMatrix<f64>,
    marginal: Gauss,
    /// `C = (I + AᵀΨ⁻¹A)⁻¹`
    cond_cov: DMatrix<f64>,
    /// `C AᵀΨ⁻¹`, so that `m = gain · x`.
    gain: DMatrix<f64>,
}

/// Sum after sorting, so the result does not depend on the order of the terms.
fn order_free_sum(values: &mut [f64]) -> f64 {
    if values.len() > 2 {
        values.sort_by(f64::total_cmp);
    }
    values.iter().sum()
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let mut e: Vec<f64> = terms.iter().map(|t| (t - m).exp()).collect();
    m + order_free_sum(&mut e).ln()
}

fn dvec(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn to_matrix(m: &DMatrix<f64>) -> Result<Matrix, ModelError> {
    Ok(Matrix::from_dmatrix(m)?)
}

impl ModelSpec {
    pub fn gmm_spherical(k: usize, d: usize, sigma2: f64) -> Self {
        ModelSpec::Gmm { k, d, covariance: CovarianceMode::SphericalKnown { sigma2 } }
    }

    pub fn gmm_full(k: usize, d: usize) -> Self {
        ModelSpec::Gmm { k, d, covariance: CovarianceMode::FullFree }
    }

    pub fn sign_mixture(d: usize, sigma: f64) -> Self {
        ModelSpec::SignMixture { d, sigma }
    }

    pub fn factor(d: usize, r: usize, psi: Matrix) -> Result<Self, ModelError> {
        if psi.rows() != d || psi.cols() != d {
            return Err(ModelError::Domain(format!("Ψ must be {d}x{d}")));
        }
        if nalgebra::Cholesky::new(psi.to_dmatrix()).is_none() || !psi.is_symmetric(1e-12) {
            return Err(ModelError::Domain("Ψ must be symmetric positive definite".into()));
        }
        if r == 0 || r > d {
            return Err(ModelError::Domain(format!("latent dimension r={r} must lie in 1..={d}")));
        }
        Ok(ModelSpec::Factor { d, r, psi })
    }

    /// Observation dimension.
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Gmm { d, .. } | ModelSpec::SignMixture { d, .. } | ModelSpec::Factor { d, .. } => *d,
        }
    }

    pub fn layout(&self) -> ParamLayout {
        match *self {
            ModelSpec::Gmm { k, d, covariance: CovarianceMode::SphericalKnown { .. } } => {
                ParamLayout::Mixture { k, d, cov_entries: 0 }
            }
            ModelSpec::Gmm { k, d, covariance: CovarianceMode::FullFree } => {
                ParamLayout::Mixture { k, d, cov_entries: d * (d + 1) / 2 }
            }
            ModelSpec::SignMixture { d, .. } => ParamLayout::Vector { d },
            ModelSpec::Factor { d, r, .. } => ParamLayout::Loading { d, r },
        }
    }

    /// The symmetry group under which the observed law is invariant.
    pub fn symmetry(&self) -> GroupAction {
        let layout = self.layout();
        match self {
            ModelSpec::Gmm { .. } => GroupAction::permutation(layout).expect("mixture layout"),
            ModelSpec::SignMixture { .. } => GroupAction::sign(layout),
            ModelSpec::Factor { .. } => GroupAction::orthogonal(layout).expect("loading layout"),
        }
    }

    pub fn params(&self, values: Vec<f64>) -> Result<ParamVector, ModelError> {
        let theta = ParamVector::new(self.layout(), values)?;
        self.prepare(&theta)?;
        Ok(theta)
    }

    /// Whether gradients, Hessians and strong-concavity certificates are available.
    pub fn hessian_capable(&self) -> bool {
        !matches!(self, ModelSpec::Gmm { covariance: CovarianceMode::FullFree, .. })
    }

    /// Coordinates the surrogate is differentiated in (means for means-only
    /// mixtures, everything for the sign and factor models).
    pub fn differentiable_indices(&self) -> Result<Vec<usize>, ModelError> {
        if !self.hessian_capable() {
            return Err(ModelError::Capability("gradients and Hessians need the spherical-known (means-only) mode".into()));
        }
        Ok(self.perturbable_indices())
    }

    /// Coordinates that may be perturbed freely while keeping the parameter feasible.
    pub fn perturbable_indices(&self) -> Vec<usize> {
        match *self {
            ModelSpec::Gmm { k, d, .. } => (k..k + k * d).collect(),
            _ => (0..self.layout().len()).collect(),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::Dimension { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    fn check_data(&self, data: &WeightedDataset) -> Result<(), ModelError> {
        if data.dim() != self.dim() {
            return Err(ModelError::Dimension { expected: self.dim(), got: data.dim() });
        }
        Ok(())
    }

    fn prepare(&self, theta: &ParamVector) -> Result<Prepared, ModelError> {
        theta.require_layout(self.layout())?;
        let v = theta.values();
        match self {
            ModelSpec::Gmm { k, d, covariance } => {
                let (k, d) = (*k, *d);
                let weights = &v[..k];
                if weights.iter().any(|w| *w <= 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL {
                    return Err(ModelError::Domain(format!("mixture weights {weights:?} are not in the open simplex")));
                }
                let layout = self.layout();
                let mut comps = Vec::with_capacity(k);
                for z in 0..k {
                    let mean = v[layout.mean_range(z).unwrap()].to_vec();
                    comps.push(match covariance {
                        CovarianceMode::SphericalKnown { sigma2 } => Gauss::Spherical { mean, sigma2: *sigma2 },
                        CovarianceMode::FullFree => {
                            let cov = unpack_upper(d, &v[layout.cov_range(z).unwrap()]);
                            Gauss::full(mean, &cov)
                                .ok_or_else(|| ModelError::Domain(format!("covariance of component {z} is not SPD")))?
                        }
                    });
                }
                Ok(Prepared::Mixture { log_weights: weights.iter().map(|w| w.ln()).collect(), comps })
            }
            ModelSpec::SignMixture { sigma, .. } => {
                let sigma2 = sigma * sigma;
                let comps = vec![
                    Gauss::Spherical { mean: v.to_vec(), sigma2 },
                    Gauss::Spherical { mean: v.iter().map(|x| -x).collect(), sigma2 },
                ];
                Ok(Prepared::Mixture { log_weights: vec![0.5f64.ln(); 2], comps })
            }
            ModelSpec::Factor { d, r, psi } => {
                let a = DMatrix::from_row_slice(*d, *r, v);
                let psi_m = psi.to_dmatrix();
                let psi_inv = psi_m.clone().try_inverse().ok_or_else(|| ModelError::Domain("Ψ is singular".into()))?;
                let sigma = &a * a.transpose() + &psi_m;
                let marginal = Gauss::full(vec![0.0; *d], &Matrix::from_dmatrix(&sigma)?)
                    .ok_or_else(|| ModelError::Domain("AAᵀ + Ψ is not SPD".into()))?;
                let at_psi_inv = a.transpose() * &psi_inv;
                let precision = DMatrix::identity(*r, *r) + &at_psi_inv * &a;
                let cond_cov = precision
                    .cholesky()
                    .ok_or_else(|| ModelError::Conditioning("I + AᵀΨ⁻¹A is not SPD".into()))?
                    .inverse();
                let cond_cov = (&cond_cov + cond_cov.transpose()) * 0.5;
                let gain = &cond_cov * at_psi_inv;
                Ok(Prepared::Factor(FactorPrep { a, marginal, cond_cov, gain }))
            }
        }
    }

    /// Checks that θ is in the model's parameter domain.
    pub fn validate(&self, theta: &ParamVector) -> Result<(), ModelError> {
        self.prepare(theta).map(|_| ())
    }

    fn component_log_terms(prep: &Prepared, x: &[f64]) -> Vec<f64> {
        match prep {
            Prepared::Mixture { log_weights, comps } => {
                log_weights.iter().zip(comps).map(|(lw, c)| lw + c.log_density(x)).collect()
            }
            Prepared::Factor(_) => unreachable!("finite latent only"),
        }
    }

    fn log_marginal_prepared(prep: &Prepared, x: &[f64]) -> f64 {
        match prep {
            Prepared::Mixture { .. } => log_sum_exp(&Self::component_log_terms(prep, x)),
            Prepared::Factor(f) => f.marginal.log_density(x),
        }
    }

    /// `log p_θ(x)`.
    pub fn log_marginal(&self, theta: &ParamVector, x: &[f64]) -> Result<f64, ModelError> {
        self.check_point(x)?;
        let prep = self.prepare(theta)?;
        Ok(Self::log_marginal_prepared(&prep, x))
    }

    fn responsibilities(prep: &Prepared, x: &[f64], point: usize) -> Result<Vec<f64>, ModelError> {
        let terms = Self::component_log_terms(prep, x);
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(ModelError::Underflow { point });
        }
        let mut r: Vec<f64> = terms.iter().map(|t| (t - m).exp().max(RESPONSIBILITY_FLOOR)).collect();
        let mut scratch = r.clone();
        let total = order_free_sum(&mut scratch);
        r.iter_mut().for_each(|v| *v /= total);
        Ok(r)
    }

    fn posterior_prepared(&self, prep: &Prepared, data: &WeightedDataset) -> Result<PosteriorTable, ModelError> {
        match prep {
            Prepared::Mixture { .. } => {
                let resp = data
                    .points()
                    .iter()
                    .enumerate()
                    .map(|(i, x)| Self::responsibilities(prep, x, i))
                    .collect::<Result<_, _>>()?;
                Ok(PosteriorTable::Finite { resp })
            }
            Prepared::Factor(f) => {
                let means = data.points().iter().map(|x| (&f.gain * dvec(x)).as_slice().to_vec()).collect();
                Ok(PosteriorTable::Gaussian { means, cov: to_matrix(&f.cond_cov)? })
            }
        }
    }

    /// E-step: posterior law of the latent variable at every point.
    pub fn posterior(&self, theta: &ParamVector, data: &WeightedDataset) -> Result<PosteriorTable, ModelError> {
        self.check_data(data)?;
        let prep = self.prepare(theta)?;
        self.posterior_prepared(&prep, data)
    }

    /// `Σ_i w_i log p_θ(x_i)`.
    pub fn objective(&self, theta: &ParamVector, data: &WeightedDataset) -> Result<f64, ModelError> {
        self.check_data(data)?;
        let prep = self.prepare(theta)?;
        Ok(data.iter().map(|(x, w)| w * Self::log_marginal_prepared(&prep, x)).sum())
    }

    /// `Q(θ'; θ) = Σ_i w_i E_{Z|x_i,θ}[log p_{θ'}(x_i, Z)]`.
    pub fn q_surrogate(&self, theta_prime: &ParamVector, theta: &ParamVector, data: &WeightedDataset) -> Result<f64, ModelError> {
        self.check_data(data)?;
        let post = self.posterior(theta, data)?;
        let prep = self.prepare(theta_prime)?;
        match (&prep, &post) {
            (Prepared::Mixture { .. }, PosteriorTable::Finite { resp }) => Ok(data
                .iter()
                .zip(resp)
                .map(|((x, w), r)| {
                    let terms = Self::component_log_terms(&prep, x);
                    w * r.iter().zip(&terms).map(|(r, t)| r * t).sum::<f64>()
                })
                .sum()),
            (Prepared::Factor(f), PosteriorTable::Gaussian { means, cov }) => {
                let ModelSpec::Factor { d, r, psi } = self else { unreachable!() };
                let (d, r) = (*d, *r);
                let psi_m = psi.to_dmatrix();
                let psi_inv = psi_m.clone().try_inverse().expect("validated");
                let log_det_psi = psi_m.determinant().ln();
                let c = cov.to_dmatrix();
                let trace_term = (f.a.transpose() * &psi_inv * &f.a * &c).trace();
                let const_term = -0.5 * ((d + r) as f64 * (2.0 * PI).ln() + log_det_psi);
                Ok(data
                    .iter()
                    .zip(means)
                    .map(|((x, w), m)| {
                        let resid = dvec(x) - &f.a * dvec(m);
                        let quad = (resid.transpose() * &psi_inv * &resid)[(0, 0)];
                        let latent = numerics::dot(m, m) + c.trace();
                        w * (const_term - 0.5 * (quad + trace_term) - 0.5 * latent)
                    })
                    .sum())
            }
            _ => unreachable!("posterior kind matches the model"),
        }
    }

    /// `∇_{θ'} Q(θ'; θ)` over [`Self::differentiable_indices`].
    pub fn q_gradient(&self, theta_prime: &ParamVector, theta: &ParamVector, data: &WeightedDataset) -> Result<Vec<f64>, ModelError> {
        self.differentiable_indices()?;
        self.check_data(data)?;
        theta_prime.require_layout(self.layout())?;
        let post = self.posterior(theta, data)?;
        let tp = theta_prime.values();
        match (self, &post) {
            (ModelSpec::Gmm { k, d, covariance: CovarianceMode::SphericalKnown { sigma2 } }, PosteriorTable::Finite { resp }) => {
                let (k, d) = (*k, *d);
                let mut g = vec![0.0; k * d];
                for ((x, w), r) in data.iter().zip(resp) {
                    for z in 0..k {
                        let mu = &tp[k + z * d..k + (z + 1) * d];
                        for j in 0..d {
                            g[z * d + j] += w * r[z] * (x[j] - mu[j]) / sigma2;
                        }
                    }
                }
                Ok(g)
            }
            (ModelSpec::SignMixture { d, sigma }, PosteriorTable::Finite { resp }) => {
                let s2 = sigma * sigma;
                let mut g = vec![0.0; *d];
                for ((x, w), r) in data.iter().zip(resp) {
                    for j in 0..*d {
                        g[j] += w * ((r[0] - r[1]) * x[j] - (r[0] + r[1]) * tp[j]) / s2;
                    }
                }
                Ok(g)
            }
            (ModelSpec::Factor { d, r, psi }, PosteriorTable::Gaussian { means, cov }) => {
                let (s_xm, s_mm) = factor_moments(*d, *r, data, means, cov);
                let a = DMatrix::from_row_slice(*d, *r, tp);
                let psi_inv = psi.to_dmatrix().try_inverse().expect("validated");
                let g = psi_inv * (s_xm - a * s_mm);
                Ok(to_matrix(&g)?.into_vec())
            }
            _ => unreachable!("capability checked above"),
        }
    }

    /// Analytic `H_pp = ∇²_{θ'θ'}Q` and central-difference `H_pt = ∇²_{θ'θ}Q`
    /// (step `1e-5·(1 + ‖θ‖)`), over the differentiable coordinates.
    pub fn q_hessian_blocks(&self, theta_prime: &ParamVector, theta: &ParamVector, data: &WeightedDataset) -> Result<HessianBlocks, ModelError> {
        let idx = self.differentiable_indices()?;
        let h_pp = self.q_hessian_pp(theta_prime, theta, data)?;
        let h = 1e-5 * (1.0 + theta.norm());
        let mut h_pt = Matrix::zeros(idx.len(), idx.len());
        for (col, &j) in idx.iter().enumerate() {
            let mut plus = theta.values().to_vec();
            let mut minus = plus.clone();
            plus[j] += h;
            minus[j] -= h;
            let gp = self.q_gradient(theta_prime, &theta.with_values(plus)?, data)?;
            let gm = self.q_gradient(theta_prime, &theta.with_values(minus)?, data)?;
            for row in 0..idx.len() {
                h_pt.set(row, col, (gp[row] - gm[row]) / (2.0 * h));
            }
        }
        Ok(HessianBlocks { h_pp, h_pt })
    }

    fn q_hessian_pp(&self, theta_prime: &ParamVector, theta: &ParamVector, data: &WeightedDataset) -> Result<Matrix, ModelError> {
        theta_prime.require_layout(self.layout())?;
        let post = self.posterior(theta, data)?;
        match (self, &post) {
            (ModelSpec::Gmm { k, d, covariance: CovarianceMode::SphericalKnown { sigma2 } }, PosteriorTable::Finite { resp }) => {
                let masses = component_masses(*k, data, resp);
                let mut h = Matrix::zeros(k * d, k * d);
                for z in 0..*k {
                    for j in 0..*d {
                        h.set(z * d + j, z * d + j, -masses[z] / sigma2);
                    }
                }
                Ok(h)
            }
            (ModelSpec::SignMixture { d, sigma }, PosteriorTable::Finite { .. }) => {
                let total: f64 = data.weights().iter().sum();
                Ok(Matrix::identity(*d).scale(-total / (sigma * sigma)))
            }
            (ModelSpec::Factor { d, r, psi }, PosteriorTable::Gaussian { means, cov }) => {
                let (_, s_mm) = factor_moments(*d, *r, data, means, cov);
                let psi_inv = psi.to_dmatrix().try_inverse().expect("validated");
                let (d, r) = (*d, *r);
                // row-major vec: entry [(a,b),(c,e)] = -Ψ⁻¹_{ac} S_{eb}
                Ok(Matrix::from_fn(d * r, d * r, |row, col| {
                    let (a, b) = (row / r, row % r);
                    let (c, e) = (col / r, col % r);
                    -psi_inv[(a, c)] * s_mm[(e, b)]
                }))
            }
            _ => Err(ModelError::Capability("Hessians need the spherical-known (means-only) mode".into())),
        }
    }

    /// Closed-form strong-concavity constant of `θ' ↦ Q(θ'; θ)`, the smallest
    /// eigenvalue of `-H_pp`.
    pub fn strong_concavity(&self, theta: &ParamVector, data: &WeightedDataset) -> Result<f64, ModelError> {
        self.differentiable_indices()?;
        match self {
            ModelSpec::Gmm { k, covariance: CovarianceMode::SphericalKnown { sigma2 }, .. } => {
                let post = self.posterior(theta, data)?;
                let masses = component_masses(*k, data, post.responsibilities().unwrap());
                Ok(masses.iter().copied().fold(f64::INFINITY, f64::min) / sigma2)
            }
            _ => Ok(numerics::min_eigenvalue_symmetric(&self.q_hessian_pp(theta, theta, data)?.scale(-1.0).symmetrized())?),
        }
    }

    /// Exact maximizer of `θ' ↦ Q(θ'; θ)`.
    pub fn m_step(&self, theta: &ParamVector, data: &WeightedDataset) -> Result<ParamVector, ModelError> {
        self.check_data(data)?;
        let post = self.posterior(theta, data)?;
        match (self, &post) {
            (ModelSpec::Gmm { k, d, covariance }, PosteriorTable::Finite { resp }) => {
                let (k, d) = (*k, *d);
                let layout = self.layout();
                let masses = component_masses(k, data, resp);
                if let Some((component, &mass)) = masses.iter().enumerate().find(|(_, m)| **m < MIN_COMPONENT_MASS) {
                    return Err(ModelError::Degeneracy { component, mass });
                }
                let mut out = theta.values().to_vec();
                let mut means = vec![vec![0.0; d]; k];
                for ((x, w), r) in data.iter().zip(resp) {
                    for z in 0..k {
                        for j in 0..d {
                            means[z][j] += w * r[z] * x[j];
                        }
                    }
                }
                for z in 0..k {
                    means[z].iter_mut().for_each(|v| *v /= masses[z]);
                    out[layout.mean_range(z).unwrap()].copy_from_slice(&means[z]);
                }
                if let CovarianceMode::FullFree = covariance {
                    out[..k].copy_from_slice(&masses);
                    for z in 0..k {
                        let mut scatter = Matrix::zeros(d, d);
                        for ((x, w), r) in data.iter().zip(resp) {
                            let c = w * r[z] / masses[z];
                            for a in 0..d {
                                for b in a..d {
                                    let v = scatter.get(a, b) + c * (x[a] - means[z][a]) * (x[b] - means[z][b]);
                                    scatter.set(a, b, v);
                                    scatter.set(b, a, v);
                                }
                            }
                        }
                        if Gauss::full(vec![0.0; d], &scatter).is_none() {
                            return Err(ModelError::Degeneracy { component: z, mass: masses[z] });
                        }
                        out[layout.cov_range(z).unwrap()].copy_from_slice(&pack_upper(&scatter));
                    }
                }
                Ok(theta.with_values(out)?)
            }
            (ModelSpec::SignMixture { d, .. }, PosteriorTable::Finite { resp }) => {
                let mut out = vec![0.0; *d];
                for ((x, w), r) in data.iter().zip(resp) {
                    for j in 0..*d {
                        out[j] += w * (r[0] - r[1]) * x[j];
                    }
                }
                Ok(theta.with_values(out)?)
            }
            (ModelSpec::Factor { d, r, .. }, PosteriorTable::Gaussian { means, cov }) => {
                let (s_xm, s_mm) = factor_moments(*d, *r, data, means, cov);
                let chol = s_mm
                    .clone()
                    .cholesky()
                    .ok_or_else(|| ModelError::Conditioning("factor normal matrix Σ w (m mᵀ + C) is singular".into()))?;
                // A' = S_xm S_mm⁻¹, solved as S_mm A'ᵀ = S_xmᵀ
                let a_new = chol.solve(&s_xm.transpose()).transpose();
                Ok(theta.with_values(to_matrix(&a_new)?.into_vec())?)
            }
            _ => unreachable!("posterior kind matches the model"),
        }
    }

    /// Finite-difference marginal score next to the posterior-averaged complete score.
    pub fn fisher_check(&self, theta: &ParamVector, x: &[f64]) -> Result<FisherCheck, ModelError> {
        let idx = self.differentiable_indices()?;
        self.check_point(x)?;
        let h = 1e-5 * (1.0 + theta.norm());
        let mut lhs = Vec::with_capacity(idx.len());
        for &j in &idx {
            let mut plus = theta.values().to_vec();
            let mut minus = plus.clone();
            plus[j] += h;
            minus[j] -= h;
            let fp = self.log_marginal(&theta.with_values(plus)?, x)?;
            let fm = self.log_marginal(&theta.with_values(minus)?, x)?;
            lhs.push((fp - fm) / (2.0 * h));
        }
        let single = WeightedDataset::new(vec![x.to_vec()], vec![1.0])?;
        let rhs = self.q_gradient(theta, theta, &single)?;
        Ok(FisherCheck { grad_log_marginal: lhs, posterior_avg_complete_score: rhs })
    }

    /// Exact `E[X]` and `E[XXᵀ]` under `P_θ`.
    pub fn model_moments(&self, theta: &ParamVector) -> Result<Moments, ModelError> {
        let prep = self.prepare(theta)?;
        let d = self.dim();
        match (self, &prep) {
            (ModelSpec::Gmm { k, covariance, .. }, Prepared::Mixture { comps, .. }) => {
                let v = theta.values();
                let layout = self.layout();
                let mut mean = vec![0.0; d];
                let mut second = Matrix::zeros(d, d);
                for z in 0..*k {
                    let pi = v[z];
                    let mu = comps[z].mean();
                    let cov = match covariance {
                        CovarianceMode::SphericalKnown { sigma2 } => Matrix::identity(d).scale(*sigma2),
                        CovarianceMode::FullFree => unpack_upper(d, &v[layout.cov_range(z).unwrap()]),
                    };
                    for a in 0..d {
                        mean[a] += pi * mu[a];
                        for b in 0..d {
                            second.set(a, b, second.get(a, b) + pi * (cov.get(a, b) + mu[a] * mu[b]));
                        }
                    }
                }
                Ok(Moments { mean, second })
            }
            (ModelSpec::SignMixture { sigma, .. }, _) => {
                let t = theta.values();
                let second = Matrix::from_fn(d, d, |a, b| t[a] * t[b] + if a == b { sigma * sigma } else { 0.0 });
                Ok(Moments { mean: vec![0.0; d], second })
            }
            (ModelSpec::Factor { psi, .. }, Prepared::Factor(f)) => {
                let sigma = &f.a * f.a.transpose() + psi.to_dmatrix();
                Ok(Moments { mean: vec![0.0; d], second: to_matrix(&sigma)? })
            }
            _ => unreachable!(),
        }
    }

    /// `n` i.i.d. draws from `P_θ`.
    pub fn sample_points(&self, theta: &ParamVector, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>, ModelError> {
        let prep = self.prepare(theta)?;
        let d = self.dim();
        let normal = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..d).map(|_| rng.sample(StandardNormal)).collect() };
        let mut out = Vec::with_capacity(n);
        match (self, &prep) {
            (_, Prepared::Mixture { log_weights, comps }) => {
                let weights: Vec<f64> = log_weights.iter().map(|l| l.exp()).collect();
                for _ in 0..n {
                    let u: f64 = rng.random::<f64>() * weights.iter().sum::<f64>();
                    let mut acc = 0.0;
                    let mut z = weights.len() - 1;
                    for (j, w) in weights.iter().enumerate() {
                        acc += w;
                        if u < acc {
                            z = j;
                            break;
                        }
                    }
                    let e = normal(rng);
                    let x = match &comps[z] {
                        Gauss::Spherical { mean, sigma2 } => mean.iter().zip(&e).map(|(m, e)| m + sigma2.sqrt() * e).collect(),
                        Gauss::Full { mean, chol, .. } => {
                            let le = chol * dvec(&e);
                            mean.iter().zip(le.iter()).map(|(m, v)| m + v).collect()
                        }
                    };
                    out.push(x);
                }
            }
            (ModelSpec::Factor { r, psi, .. }, Prepared::Factor(f)) => {
                let l_psi = psi.to_dmatrix().cholesky().expect("validated").l();
                for _ in 0..n {
                    let z = DVector::from_iterator(*r, (0..*r).map(|_| rng.sample::<f64, _>(StandardNormal)));
                    let e = dvec(&normal(rng));
                    out.push((&f.a * z + &l_psi * e).as_slice().to_vec());
                }
            }
            _ => unreachable!(),
        }
        Ok(out)
    }

    pub fn sample(&self, theta: &ParamVector, n: usize, rng: &mut ChaCha8Rng) -> Result<WeightedDataset, ModelError> {
        Ok(WeightedDataset::uniform(self.sample_points(theta, n, rng)?)?)
    }

    /// Data-driven random initialization: uniform weights and distinct data points
    /// as means for mixtures, a data point for the sign model, a scaled Gaussian
    /// loading for the factor model.
    pub fn random_start(&self, data: &WeightedDataset, rng: &mut ChaCha8Rng) -> Result<ParamVector, ModelError> {
        self.check_data(data)?;
        let n = data.len();
        let d = self.dim();
        let values = match self {
            ModelSpec::Gmm { k, covariance, .. } => {
                let picks = rand::seq::index::sample(rng, n, (*k).min(n));
                let mut v = vec![1.0 / *k as f64; *k];
                for z in 0..*k {
                    v.extend_from_slice(&data.points()[picks.index(z % picks.len())]);
                }
                if let CovarianceMode::FullFree = covariance {
                    let var = data_variance(data);
                    let cov = Matrix::identity(d).scale(var);
                    for _ in 0..*k {
                        v.extend(pack_upper(&cov));
                    }
                }
                v
            }
            ModelSpec::SignMixture { .. } => data.points()[rng.random_range(0..n)].clone(),
            ModelSpec::Factor { r, .. } => {
                let scale = data_variance(data).sqrt();
                (0..d * r).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
            }
        };
        self.params(values)
    }
}

fn data_variance(data: &WeightedDataset) -> f64 {
    let d = data.dim();
    let mut mean = vec![0.0; d];
    for (x, w) in data.iter() {
        for j in 0..d {
            mean[j] += w * x[j];
        }
    }
    let v: f64 = data.iter().map(|(x, w)| w * x.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sum();
    (v / d as f64).max(1e-6)
}

/// `Σ_i w_i r_iz` for each component.
pub fn component_masses(k: usize, data: &WeightedDataset, resp: &[Vec<f64>]) -> Vec<f64> {
    let mut masses = vec![0.0; k];
    for (w, r) in data.weights().iter().zip(resp) {
        for z in 0..k {
            masses[z] += w * r[z];
        }
    }
    masses
}

/// `S_xm = Σ w x mᵀ` and `S_mm = Σ w (m mᵀ + C)`.
fn factor_moments(d: usize, r: usize, data: &WeightedDataset, means: &[Vec<f64>], cov: &Matrix) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut s_xm = DMatrix::zeros(d, r);
    let mut s_mm = DMatrix::zeros(r, r);
    let c = cov.to_dmatrix();
    for ((x, w), m) in data.iter().zip(means) {
        let xv = dvec(x);
        let mv = dvec(m);
        s_xm += w * &xv * mv.transpose();
        s_mm += w * (&mv * mv.transpose() + &c);
    }
    (s_xm, s_mm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn std_normal_logpdf(x: f64) -> f64 {
        -0.5 * (2.0 * PI).ln() - 0.5 * x * x
    }

    #[test]
    fn sign_mixture_at_zero_is_normal() {
        let m = ModelSpec::sign_mixture(1, 1.0);
        let t = m.params(vec![0.0]).unwrap();
        for x in [-2.0, 0.3, 1.7] {
            assert!((m.log_marginal(&t, &[x]).unwrap() - std_normal_logpdf(x)).abs() < 1e-14);
        }
        let data = WeightedDataset::uniform(vec![vec![-1.0], vec![2.5]]).unwrap();
        let post = m.posterior(&t, &data).unwrap();
        for r in post.responsibilities().unwrap() {
            assert_eq!(r, &vec![0.5, 0.5]);
        }
    }

    #[test]
    fn symmetric_gmm_marginal_and_posterior() {
        let m = ModelSpec::gmm_spherical(2, 1, 1.0);
        let t = m.params(vec![0.5, 0.5, -1.0, 1.0]).unwrap();
        assert!((m.log_marginal(&t, &[0.0]).unwrap() - std_normal_logpdf(1.0)).abs() < 1e-14);
        let data = WeightedDataset::uniform(vec![vec![0.0]]).unwrap();
        assert_eq!(m.posterior(&t, &data).unwrap().responsibilities().unwrap()[0], vec![0.5, 0.5]);
    }

    #[test]
    fn factor_marginal_and_posterior() {
        let m = ModelSpec::factor(2, 1, Matrix::identity(2)).unwrap();
        let t = m.params(vec![1.0, 0.0]).unwrap();
        // N((1,1); 0, diag(2,1))
        let expected = -(2.0 * PI).ln() - 0.5 * 2f64.ln() - 0.5 * (1.0 / 2.0 + 1.0);
        assert!((m.log_marginal(&t, &[1.0, 1.0]).unwrap() - expected).abs() < 1e-14);
        let data = WeightedDataset::uniform(vec![vec![2.0, 0.0]]).unwrap();
        let PosteriorTable::Gaussian { means, cov } = m.posterior(&t, &data).unwrap() else { panic!() };
        assert!((means[0][0] - 1.0).abs() < 1e-15);
        assert!((cov.get(0, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn infeasible_parameters_rejected() {
        let m = ModelSpec::gmm_spherical(2, 1, 1.0);
        assert!(matches!(m.params(vec![0.7, 0.7, 0.0, 1.0]), Err(ModelError::Domain(_))));
        assert!(matches!(m.params(vec![1.0, 0.0, 0.0, 1.0]), Err(ModelError::Domain(_))));
        let full = ModelSpec::gmm_full(1, 2);
        assert!(matches!(full.params(vec![1.0, 0.0, 0.0, 1.0, 2.0, 1.0]), Err(ModelError::Domain(_))));
        assert!(full.params(vec![1.0, 0.0, 0.0, 2.0, 1.0, 1.0]).is_ok());
        assert!(matches!(m.params(vec![0.5]), Err(ModelError::Layout(_))));
    }

    #[test]
    fn far_point_still_gets_responsibilities() {
        let m = ModelSpec::gmm_spherical(2, 1, 1.0);
        let t = m.params(vec![0.5, 0.5, -1.0, 1.0]).unwrap();
        let data = WeightedDataset::uniform(vec![vec![1e5]]).unwrap();
        let r = &m.posterior(&t, &data).unwrap().responsibilities().unwrap()[0].clone();
        assert!((r[0] + r[1] - 1.0).abs() < 1e-15);
        assert!(r[1] > 0.999);
    }

    #[test]
    fn single_point_gmm_m_step() {
        let m = ModelSpec::gmm_spherical(1, 2, 1.0);
        let t = m.params(vec![1.0, 0.0, 0.0]).unwrap();
        let data = WeightedDataset::uniform(vec![vec![3.0, -1.0]]).unwrap();
        assert_eq!(m.m_step(&t, &data).unwrap().values(), &[1.0, 3.0, -1.0]);
        assert!((m.objective(&t, &data).unwrap() - m.log_marginal(&t, &[3.0, -1.0]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_component_reported() {
        let m = ModelSpec::gmm_spherical(2, 1, 0.01);
        let t = m.params(vec![0.5, 0.5, 0.0, 1000.0]).unwrap();
        let data = WeightedDataset::uniform(vec![vec![0.0], vec![0.1]]).unwrap();
        assert!(matches!(m.m_step(&t, &data), Err(ModelError::Degeneracy { component: 1, .. })));
    }

    #[test]
    fn hessian_capability_enforced() {
        let m = ModelSpec::gmm_full(2, 1);
        let t = m.params(vec![0.5, 0.5, -1.0, 1.0, 1.0, 1.0]).unwrap();
        let data = WeightedDataset::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(m.q_hessian_blocks(&t, &t, &data), Err(ModelError::Capability(_))));
        assert!(matches!(m.q_gradient(&t, &t, &data), Err(ModelError::Capability(_))));
    }

    #[test]
    fn moments_closed_forms() {
        let s = ModelSpec::sign_mixture(2, 0.5);
        let t = s.params(vec![1.0, -2.0]).unwrap();
        let mo = s.model_moments(&t).unwrap();
        assert_eq!(mo.mean, vec![0.0, 0.0]);
        assert_eq!(mo.second.as_slice(), &[1.25, -2.0, -2.0, 4.25]);
        let g = ModelSpec::gmm_full(1, 2);
        let t = g.params(vec![1.0, 1.0, 2.0, 2.0, 0.5, 1.0]).unwrap();
        let mo = g.model_moments(&t).unwrap();
        assert_eq!(mo.mean, vec![1.0, 2.0]);
        assert_eq!(mo.second.as_slice(), &[3.0, 2.5, 2.5, 5.0]);
    }

    #[test]
    fn q_gradient_matches_finite_differences() {
        let mut rng = rng::stream(4, "models-test", 0);
        let cases = vec![
            ModelSpec::gmm_spherical(2, 2, 0.8),
            ModelSpec::sign_mixture(2, 1.2),
            ModelSpec::factor(3, 2, Matrix::diag(&[0.5, 1.0, 1.5])).unwrap(),
        ];
        for m in cases {
            let truth = m.random_start(&m.sample(&default_truth(&m), 50, &mut rng).unwrap(), &mut rng).unwrap();
            let data = m.sample(&truth, 60, &mut rng).unwrap();
            let theta = m.random_start(&data, &mut rng).unwrap();
            let tp = m.random_start(&data, &mut rng).unwrap();
            let g = m.q_gradient(&tp, &theta, &data).unwrap();
            let h = 1e-5;
            for (slot, &j) in m.differentiable_indices().unwrap().iter().enumerate() {
                let mut p = tp.values().to_vec();
                let mut q = p.clone();
                p[j] += h;
                q[j] -= h;
                let fd = (m.q_surrogate(&tp.with_values(p).unwrap(), &theta, &data).unwrap()
                    - m.q_surrogate(&tp.with_values(q).unwrap(), &theta, &data).unwrap())
                    / (2.0 * h);
                assert!((fd - g[slot]).abs() <= 1e-6, "{m:?} coord {j}: fd {fd} vs {}", g[slot]);
            }
            // first-order condition at the maximizer
            let next = m.m_step(&theta, &data).unwrap();
            let g = m.q_gradient(&next, &theta, &data).unwrap();
            assert!(numerics::norm(&g) <= 1e-8, "{m:?} gradient at maximizer {}", numerics::norm(&g));
        }
    }

    #[test]
    fn means_only_hessian_and_certificate() {
        let mut rng = rng::stream(5, "models-test", 0);
        let m = ModelSpec::gmm_spherical(3, 2, 0.7);
        let truth = m.params(vec![0.2, 0.3, 0.5, -2.0, 0.0, 0.0, 2.0, 2.0, 0.0]).unwrap();
        let data = m.sample(&truth, 200, &mut rng).unwrap();
        let theta = m.random_start(&data, &mut rng).unwrap();
        let blocks = m.q_hessian_blocks(&theta, &theta, &data).unwrap();
        let lambda = m.strong_concavity(&theta, &data).unwrap();
        let min_eig = numerics::min_eigenvalue_symmetric(&blocks.h_pp.scale(-1.0)).unwrap();
        assert!((min_eig - lambda).abs() <= 1e-9);
        let resp = m.posterior(&theta, &data).unwrap();
        let masses = component_masses(3, &data, resp.responsibilities().unwrap());
        assert!((lambda - masses.iter().copied().fold(f64::INFINITY, f64::min) / 0.7).abs() <= 1e-12);
    }

    #[test]
    fn fisher_identity_in_all_models() {
        let mut rng = rng::stream(6, "models-test", 0);
        let s = ModelSpec::sign_mixture(2, 1.0);
        let zero = s.params(vec![0.0, 0.0]).unwrap();
        let fc = s.fisher_check(&zero, &[0.7, -1.2]).unwrap();
        assert!(fc.posterior_avg_complete_score.iter().all(|v| v.abs() < 1e-15));
        assert!(fc.max_abs_diff() < 1e-8);
        for m in [ModelSpec::gmm_spherical(2, 2, 1.0), s, ModelSpec::factor(3, 1, Matrix::identity(3)).unwrap()] {
            let truth = default_truth(&m);
            let data = m.sample(&truth, 20, &mut rng).unwrap();
            let theta = m.random_start(&data, &mut rng).unwrap();
            for x in data.points() {
                let fc = m.fisher_check(&theta, x).unwrap();
                assert!(fc.max_abs_diff() <= 1e-5, "{m:?}: {}", fc.max_abs_diff());
            }
        }
    }

    #[test]
    fn em_identity_holds_for_finite_latent_models() {
        let mut rng = rng::stream(7, "models-test", 0);
        for m in [ModelSpec::gmm_spherical(3, 1, 1.0), ModelSpec::sign_mixture(2, 1.0), ModelSpec::gmm_full(2, 2)] {
            let data = m.sample(&default_truth(&m), 100, &mut rng).unwrap();
            for _ in 0..10 {
                let a = m.random_start(&data, &mut rng).unwrap();
                let b = m.m_step(&a, &data).unwrap();
                let lhs = m.objective(&b, &data).unwrap() - m.objective(&a, &data).unwrap();
                let dq = m.q_surrogate(&b, &a, &data).unwrap() - m.q_surrogate(&a, &a, &data).unwrap();
                let kl = m.posterior(&a, &data).unwrap().weighted_kl(&m.posterior(&b, &data).unwrap(), data.weights()).unwrap();
                assert!((lhs - dq - kl).abs() <= 1e-8, "{m:?}: {}", lhs - dq - kl);
            }
        }
    }

    #[test]
    fn observed_invariance_and_posterior_transport() {
        let mut rng = rng::stream(8, "models-test", 0);
        for m in [ModelSpec::gmm_spherical(3, 2, 1.0), ModelSpec::gmm_full(3, 2), ModelSpec::sign_mixture(3, 1.0), ModelSpec::factor(4, 2, Matrix::identity(4)).unwrap()] {
            let action = m.symmetry();
            let data = m.sample(&default_truth(&m), 30, &mut rng).unwrap();
            for _ in 0..25 {
                let theta = m.random_start(&data, &mut rng).unwrap();
                let g = action.random_element(&mut rng);
                let moved = action.act(&g, &theta).unwrap();
                for x in data.points().iter().take(4) {
                    assert!((m.log_marginal(&moved, x).unwrap() - m.log_marginal(&theta, x).unwrap()).abs() <= 1e-10);
                }
                let ma = m.model_moments(&moved).unwrap();
                let mb = m.model_moments(&theta).unwrap();
                assert!((&ma.second - &mb.second).max_abs() <= 1e-12);
                if let (PosteriorTable::Finite { resp: ra }, PosteriorTable::Finite { resp: rb }, crate::groups::GroupElement::Permutation(p)) =
                    (m.posterior(&moved, &data).unwrap(), m.posterior(&theta, &data).unwrap(), &g)
                {
                    for (a, b) in ra.iter().zip(&rb) {
                        for (j, &pj) in p.iter().enumerate() {
                            assert_eq!(a[pj], b[j]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn m_step_maximizes_surrogate() {
        let mut rng = rng::stream(9, "models-test", 0);
        for m in [ModelSpec::gmm_spherical(2, 2, 1.0), ModelSpec::gmm_full(2, 2), ModelSpec::sign_mixture(2, 1.0), ModelSpec::factor(3, 2, Matrix::identity(3)).unwrap()] {
            let data = m.sample(&default_truth(&m), 80, &mut rng).unwrap();
            let theta = m.random_start(&data, &mut rng).unwrap();
            let best = m.q_surrogate(&m.m_step(&theta, &data).unwrap(), &theta, &data).unwrap();
            for _ in 0..100 {
                let other = m.random_start(&data, &mut rng).unwrap();
                assert!(m.q_surrogate(&other, &theta, &data).unwrap() <= best + 1e-12);
            }
        }
    }

    pub(crate) fn default_truth(m: &ModelSpec) -> ParamVector {
        match m {
            ModelSpec::Gmm { k, d, covariance } => {
                let mut v = vec![1.0 / *k as f64; *k];
                for z in 0..*k {
                    v.extend((0..*d).map(|j| 3.0 * (z as f64) * if j == 0 { 1.0 } else { -0.5 }));
                }
                if let CovarianceMode::FullFree = covariance {
                    for _ in 0..*k {
                        v.extend(pack_upper(&Matrix::identity(*d)));
                    }
                }
                m.params(v).unwrap()
            }
            ModelSpec::SignMixture { d, .. } => m.params((0..*d).map(|j| 1.5 - j as f64).collect()).unwrap(),
            ModelSpec::Factor { d, r, .. } => m.params((0..d * r).map(|i| 1.0 + (i % 3) as f64 * 0.5 - (i / 2) as f64 * 0.3).collect()).unwrap(),
        }
    }
}

//! Integral probability metrics between observed laws: feature IPMs (norms
//! of mean-feature differences) and RBF-kernel MMD, their quotient versions,
//! distances to a target set, and the plug-in deviation bounds.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::dataset::{DatasetError, WeightedDataset};
use crate::groups::{GroupAction, GroupError};
use crate::models::{ModelError, ModelSpec};
use crate::numerics::{self, NumericsError};
use crate::params::ParamVector;
use crate::rng;

/// Allowed change of an exact feature IPM under the group action.
pub const FEATURE_INVARIANCE_TOL: f64 = 1e-8;
/// Number of random group elements used by the invariance recheck.
pub const INVARIANCE_RECHECKS: usize = 3;

#[derive(Debug, Error)]
pub enum IpmError {
    #[error("capability error: {0}")]
    Capability(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("symmetry breach: IPM {value:e} became {recomputed:e} after moving the first argument along its orbit")]
    SymmetryBreach { value: f64, recomputed: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type CoordinateFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum FeatureKind {
    /// Degree 1: `x`. Degree 2: `(x, vec(x xᵀ))`.
    Polynomial { degree: usize, d: usize },
    Custom { d: usize, names: Vec<String>, funcs: Vec<CoordinateFn> },
}

impl fmt::Debug for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKind::Polynomial { degree, d } => write!(f, "Polynomial {{ degree: {degree}, d: {d} }}"),
            FeatureKind::Custom { d, names, .. } => write!(f, "Custom {{ d: {d}, names: {names:?} }}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FeatureMap {
    pub kind: FeatureKind,
    /// `sup ‖φ(x)‖` over the declared domain, when known.
    pub bound: Option<f64>,
}

impl FeatureMap {
    pub fn polynomial(degree: usize, d: usize) -> Result<Self, IpmError> {
        if !(1..=2).contains(&degree) {
            return Err(IpmError::Capability(format!("polynomial features of degree {degree} are not supported (1 or 2)")));
        }
        Ok(Self { kind: FeatureKind::Polynomial { degree, d }, bound: None })
    }

    pub fn custom(d: usize, names: Vec<String>, funcs: Vec<CoordinateFn>) -> Result<Self, IpmError> {
        if names.len() != funcs.len() || funcs.is_empty() {
            return Err(IpmError::Domain("custom feature map needs one name per function".into()));
        }
        Ok(Self { kind: FeatureKind::Custom { d, names, funcs }, bound: None })
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn input_dim(&self) -> usize {
        match &self.kind {
            FeatureKind::Polynomial { d, .. } | FeatureKind::Custom { d, .. } => *d,
        }
    }

    pub fn output_dim(&self) -> usize {
        match &self.kind {
            FeatureKind::Polynomial { degree: 1, d } => *d,
            FeatureKind::Polynomial { d, .. } => d + d * d,
            FeatureKind::Custom { funcs, .. } => funcs.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            FeatureKind::Polynomial { degree, .. } => {
                let mut out = x.to_vec();
                if *degree == 2 {
                    for a in x {
                        out.extend(x.iter().map(|b| a * b));
                    }
                }
                out
            }
            FeatureKind::Custom { funcs, .. } => funcs.iter().map(|f| f(x)).collect(),
        }
    }

    fn check_dim(&self, d: usize) -> Result<(), IpmError> {
        if d != self.input_dim() {
            return Err(IpmError::Dimension(format!("feature map expects dimension {}, data has {d}", self.input_dim())));
        }
        Ok(())
    }
}

/// `Σ_i w_i φ(x_i)`.
pub fn feature_mean_empirical(data: &WeightedDataset, feature: &FeatureMap) -> Result<Vec<f64>, IpmError> {
    feature.check_dim(data.dim())?;
    let mut mean = vec![0.0; feature.output_dim()];
    for (x, w) in data.iter() {
        for (m, v) in mean.iter_mut().zip(feature.eval(x)) {
            *m += w * v;
        }
    }
    Ok(mean)
}

/// Exact `E_θ φ(X)` from the model moments.
pub fn feature_mean_model(model: &ModelSpec, theta: &ParamVector, feature: &FeatureMap) -> Result<Vec<f64>, IpmError> {
    feature.check_dim(model.dim())?;
    let FeatureKind::Polynomial { degree, .. } = feature.kind else {
        return Err(IpmError::Capability("exact model feature means need polynomial features".into()));
    };
    let moments = model.model_moments(theta)?;
    let mut out = moments.mean;
    if degree == 2 {
        out.extend_from_slice(moments.second.as_slice());
    }
    Ok(out)
}

/// `‖E_θ φ − E_θ' φ‖` with exact moments.
pub fn feature_ipm_model(model: &ModelSpec, theta: &ParamVector, theta_prime: &ParamVector, feature: &FeatureMap) -> Result<f64, IpmError> {
    let a = feature_mean_model(model, theta, feature)?;
    let b = feature_mean_model(model, theta_prime, feature)?;
    Ok(numerics::euclidean(&a, &b))
}

/// `‖Σ w_i φ(x_i) − Σ v_j φ(y_j)‖`.
pub fn feature_ipm_empirical(p: &WeightedDataset, q: &WeightedDataset, feature: &FeatureMap) -> Result<f64, IpmError> {
    if p.dim() != q.dim() {
        return Err(IpmError::Dimension(format!("datasets have dimensions {} and {}", p.dim(), q.dim())));
    }
    Ok(numerics::euclidean(&feature_mean_empirical(p, feature)?, &feature_mean_empirical(q, feature)?))
}

/// Gaussian RBF kernel `k(x, y) = exp(-‖x−y‖² / (2 h²))`, so `κ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KernelSpec {
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn rbf(bandwidth: f64) -> Result<Self, IpmError> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(IpmError::Domain(format!("bandwidth must be positive and finite, got {bandwidth}")));
        }
        Ok(Self { bandwidth })
    }

    /// Median pairwise distance of the pooled points (at most the first 1000 are used).
    pub fn median_heuristic(points: &[&[f64]]) -> Result<Self, IpmError> {
        let pts = &points[..points.len().min(1000)];
        let mut dists = Vec::with_capacity(pts.len() * pts.len().saturating_sub(1) / 2);
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                dists.push(numerics::euclidean(pts[i], pts[j]));
            }
        }
        if dists.is_empty() {
            return Err(IpmError::Domain("median heuristic needs at least two points".into()));
        }
        dists.sort_by(f64::total_cmp);
        let mid = dists.len() / 2;
        let median = if dists.len() % 2 == 0 { 0.5 * (dists[mid - 1] + dists[mid]) } else { dists[mid] };
        Self::rbf(median)
    }

    pub fn kappa(&self) -> f64 {
        1.0
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        (-d2 / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Estimator {
    VStatistic,
    UStatistic,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MmdValue {
    /// Squared estimate; the u-statistic may be negative.
    pub squared: f64,
    /// `√max(squared, 0)`.
    pub value: f64,
}

fn kernel_sum(a: &WeightedDataset, b: &WeightedDataset, kernel: &KernelSpec, skip_diagonal: bool) -> f64 {
    let mut total = 0.0;
    for (i, (x, wx)) in a.iter().enumerate() {
        let mut row = 0.0;
        for (j, (y, wy)) in b.iter().enumerate() {
            if skip_diagonal && i == j {
                continue;
            }
            row += wy * kernel.eval(x, y);
        }
        total += wx * row;
    }
    total
}

pub fn mmd(p: &WeightedDataset, q: &WeightedDataset, kernel: &KernelSpec, estimator: Estimator) -> Result<MmdValue, IpmError> {
    if p.dim() != q.dim() {
        return Err(IpmError::Dimension(format!("datasets have dimensions {} and {}", p.dim(), q.dim())));
    }
    let squared = match estimator {
        Estimator::VStatistic => kernel_sum(p, p, kernel, false) - 2.0 * kernel_sum(p, q, kernel, false) + kernel_sum(q, q, kernel, false),
        Estimator::UStatistic => {
            if !p.is_equally_weighted() || !q.is_equally_weighted() || p.len() < 2 || q.len() < 2 {
                return Err(IpmError::Capability("the u-statistic needs unweighted samples with at least two points".into()));
            }
            let (n, m) = (p.len() as f64, q.len() as f64);
            // weights are 1/n, so rescale the diagonal-free sums to 1/(n(n-1))
            kernel_sum(p, p, kernel, true) * n / (n - 1.0) + kernel_sum(q, q, kernel, true) * m / (m - 1.0)
                - 2.0 * kernel_sum(p, q, kernel, false)
        }
    };
    Ok(MmdValue { squared, value: squared.max(0.0).sqrt() })
}

/// Kernel mean embedding of a large one-dimensional reference law, tabulated on a
/// uniform grid with cubic Hermite interpolation, for fast `MMD(P_n, Q)`
/// against a fixed `Q`. Points outside the grid are evaluated exactly.
#[derive(Debug, Clone)]
pub struct ReferenceEmbedding {
    kernel: KernelSpec,
    reference: WeightedDataset,
    lo: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// `‖μ_Q‖²`
    self_term: f64,
}

impl ReferenceEmbedding {
    pub fn new(reference: WeightedDataset, kernel: KernelSpec, lo: f64, hi: f64, step: f64) -> Result<Self, IpmError> {
        if reference.dim() != 1 {
            return Err(IpmError::Capability("tabulated embeddings are one-dimensional".into()));
        }
        if !(hi > lo && step > 0.0) {
            return Err(IpmError::Domain(format!("invalid grid [{lo}, {hi}] with step {step}")));
        }
        let nodes = ((hi - lo) / step).ceil() as usize + 1;
        let h2 = kernel.bandwidth * kernel.bandwidth;
        let ys: Vec<(f64, f64)> = reference.iter().map(|(y, w)| (y[0], w)).collect();
        let mut values = Vec::with_capacity(nodes);
        let mut slopes = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let x = lo + i as f64 * step;
            let (mut v, mut s) = (0.0, 0.0);
            for &(y, w) in &ys {
                let k = w * (-(x - y) * (x - y) / (2.0 * h2)).exp();
                v += k;
                s -= k * (x - y) / h2;
            }
            values.push(v);
            slopes.push(s);
        }
        let mut emb = Self { kernel, reference, lo, step, values, slopes, self_term: 0.0 };
        emb.self_term = emb.reference.iter().map(|(y, w)| w * emb.embedding(y[0])).sum();
        Ok(emb)
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    /// `μ_Q(x) = Σ_j v_j k(x, y_j)`.
    pub fn embedding(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        let i = pos.floor();
        if !(i >= 0.0 && (i as usize) + 1 < self.values.len()) {
            return self.reference.iter().map(|(y, w)| w * self.kernel.eval(&[x], y)).sum();
        }
        let i = i as usize;
        let s = pos - i as f64;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[i] + h10 * self.step * self.slopes[i] + h01 * self.values[i + 1] + h11 * self.step * self.slopes[i + 1]
    }

    /// v-statistic `MMD(P, Q)`.
    pub fn mmd(&self, p: &WeightedDataset) -> Result<MmdValue, IpmError> {
        if p.dim() != 1 {
            return Err(IpmError::Dimension("reference embedding is one-dimensional".into()));
        }
        let cross: f64 = p.iter().map(|(x, w)| w * self.embedding(x[0])).sum();
        let squared = kernel_sum(p, p, &self.kernel, false) - 2.0 * cross + self.self_term;
        Ok(MmdValue { squared, value: squared.max(0.0).sqrt() })
    }
}

/// Metric used for quotient IPMs between model laws.
#[derive(Debug, Clone)]
pub enum Metric {
    /// Exact feature means from model moments.
    Feature(FeatureMap),
    /// v-statistic MMD between `n`-point seeded samples of the two laws.
    Kernel { kernel: KernelSpec, n: usize, seed: u64 },
}

fn plain_ipm(model: &ModelSpec, theta: &ParamVector, theta_prime: &ParamVector, metric: &Metric, draw: u64) -> Result<f64, IpmError> {
    match metric {
        Metric::Feature(f) => feature_ipm_model(model, theta, theta_prime, f),
        Metric::Kernel { kernel, n, seed } => {
            let p = model.sample(theta, *n, &mut rng::stream(*seed, "quotient-ipm-p", draw))?;
            let q = model.sample(theta_prime, *n, &mut rng::stream(*seed, "quotient-ipm-q", draw))?;
            Ok(mmd(&p, &q, kernel, Estimator::VStatistic)?.value)
        }
    }
}

/// Standard-error scale of a sampled kernel quotient IPM.
pub fn kernel_quotient_se(kernel: &KernelSpec, n: usize) -> f64 {
    2.0 * kernel.kappa() * (2.0 / n as f64).sqrt()
}

/// IPM between the observed laws of `θ` and `θ'`, rechecked after moving `θ`
/// by [`INVARIANCE_RECHECKS`] random group elements.
pub fn quotient_ipm(
    model: &ModelSpec,
    theta: &ParamVector,
    theta_prime: &ParamVector,
    metric: &Metric,
    action: &GroupAction,
    seed: u64,
) -> Result<f64, IpmError> {
    let value = plain_ipm(model, theta, theta_prime, metric, 0)?;
    let tol = match metric {
        Metric::Feature(_) => FEATURE_INVARIANCE_TOL,
        Metric::Kernel { kernel, n, .. } => 3.0 * kernel_quotient_se(kernel, *n),
    };
    for i in 0..INVARIANCE_RECHECKS {
        let g = action.random_element(&mut rng::stream(seed, "quotient-ipm-recheck", i as u64));
        let moved = action.act(&g, theta)?;
        let recomputed = plain_ipm(model, &moved, theta_prime, metric, 1 + i as u64)?;
        if (recomputed - value).abs() > tol {
            return Err(IpmError::SymmetryBreach { value, recomputed });
        }
    }
    Ok(value)
}

/// `min_{τ ∈ target} d(θ, τ)`.
pub fn ipm_dist_to_set(
    model: &ModelSpec,
    theta: &ParamVector,
    target: &[ParamVector],
    metric: &Metric,
    action: &GroupAction,
    seed: u64,
) -> Result<f64, IpmError> {
    if target.is_empty() {
        return Err(IpmError::Domain("target set is empty".into()));
    }
    let mut best = f64::INFINITY;
    for t in target {
        best = best.min(quotient_ipm(model, theta, t, metric, action, seed)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum DeviationKind {
    Feature { bound: f64 },
    Kernel { kappa: f64 },
}

/// `2B/√n + B√(2t/n)` (feature envelope `B`) or the same with `κ`.
pub fn ipm_deviation_bound(kind: DeviationKind, n: usize, t: f64) -> Result<f64, IpmError> {
    if n == 0 || !(t > 0.0) {
        return Err(IpmError::Domain(format!("need n ≥ 1 and t > 0, got n={n}, t={t}")));
    }
    let b = match kind {
        DeviationKind::Feature { bound } => bound,
        DeviationKind::Kernel { kappa } => kappa,
    };
    let n = n as f64;
    Ok(2.0 * b / n.sqrt() + b * (2.0 * t / n).sqrt())
}

/// Upper modulus slope: `1.1 · max d_F(θ_i, θ_j) / ‖θ_i − θ_j‖` over all probe pairs.
pub fn estimate_upper_modulus(model: &ModelSpec, probes: &[ParamVector], feature: &FeatureMap) -> Result<f64, IpmError> {
    let means: Vec<Vec<f64>> = probes.iter().map(|p| feature_mean_model(model, p, feature)).collect::<Result<_, _>>()?;
    let mut best: f64 = 0.0;
    for i in 0..probes.len() {
        for j in i + 1..probes.len() {
            let dp = numerics::euclidean(probes[i].values(), probes[j].values());
            if dp > 0.0 {
                best = best.max(numerics::euclidean(&means[i], &means[j]) / dp);
            }
        }
    }
    Ok(1.1 * best)
}

/// Lower modulus slope through the origin at `center`:
/// `0.9 · min d_F(θ, center) / orbit_dist(θ, center)` over the probes.
pub fn estimate_lower_modulus(
    model: &ModelSpec,
    center: &ParamVector,
    probes: &[ParamVector],
    feature: &FeatureMap,
    action: &GroupAction,
) -> Result<f64, IpmError> {
    let c = feature_mean_model(model, center, feature)?;
    let mut best = f64::INFINITY;
    for p in probes {
        let od = action.orbit_distance(p, center)?.value;
        if od > 0.0 {
            best = best.min(numerics::euclidean(&feature_mean_model(model, p, feature)?, &c) / od);
        }
    }
    if !best.is_finite() {
        return Err(IpmError::Domain("every probe coincides with the center orbit".into()));
    }
    Ok(0.9 * best)
}

/// Numerical rank of the feature-mean map's Jacobian in the given coordinates.
pub fn feature_jacobian_rank(model: &ModelSpec, theta: &ParamVector, feature: &FeatureMap, coords: &[usize]) -> Result<usize, IpmError> {
    let h = 1e-6 * (1.0 + theta.norm());
    let m = feature.output_dim();
    let mut jac = numerics::Matrix::zeros(m, coords.len());
    for (col, &j) in coords.iter().enumerate() {
        let mut plus = theta.values().to_vec();
        let mut minus = plus.clone();
        plus[j] += h;
        minus[j] -= h;
        let fp = feature_mean_model(model, &theta.with_values(plus).map_err(ModelError::from)?, feature)?;
        let fm = feature_mean_model(model, &theta.with_values(minus).map_err(ModelError::from)?, feature)?;
        for row in 0..m {
            jac.set(row, col, (fp[row] - fm[row]) / (2.0 * h));
        }
    }
    let (_, s, _) = numerics::svd(&jac)?;
    let top = s.first().copied().unwrap_or(0.0);
    Ok(s.iter().filter(|v| **v > 1e-6 * top.max(1e-300)).count())
}

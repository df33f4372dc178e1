//! The EM engine: exact, inexact and sample-splitting iterations, the slice
//! map `T = section ∘ M`, its Jacobian and local rate, and operator deviations.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::dataset::WeightedDataset;
use crate::groups::{GroupAction, GroupError};
use crate::models::{ModelError, ModelSpec};
use crate::numerics::{self, Matrix, NumericsError};
use crate::params::{LayoutError, ParamVector};
use crate::rng;

/// Step size for the direct finite-difference Jacobian.
pub const JACOBIAN_FD_STEP: f64 = 1e-5;
/// Largest fixed-point residual accepted by [`em_jacobian`].
pub const FIXED_POINT_TOL: f64 = 1e-8;
/// Stopping rule for [`refine_fixed_point`].
pub const REFINE_STEP_TOL: f64 = 1e-12;
pub const REFINE_MAX_ITERS: usize = 10_000;
/// Deduplication radius for [`projection_set_estimate`].
pub const DEDUP_TOL: f64 = 1e-6;
/// Errors below this are treated as numerical noise by [`rate_from_errors`].
pub const RATE_NOISE_FLOOR: f64 = 1e2 * f64::EPSILON;
pub const MIN_RATE_WINDOW: usize = 5;

#[derive(Debug, Error)]
pub enum EmError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("invalid EM configuration: {0}")]
    Config(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("not a fixed point: residual {residual:e} exceeds {tol:e}")]
    NotFixedPoint { residual: f64, tol: f64 },
    #[error("conditioning error: {0}")]
    Conditioning(String),
    #[error("insufficient data: qualifying window has {len} points, need {MIN_RATE_WINDOW}")]
    InsufficientData { len: usize },
    #[error("no start converged to a fixed point")]
    EmptySet,
}

/// Magnitudes `ε_t` for inexact EM.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsSchedule {
    Explicit(Vec<f64>),
    Constant(f64),
    Geometric { initial: f64, ratio: f64 },
    /// i.i.d. `U[0, max]` magnitudes from a seeded stream.
    Uniform { max: f64, seed: u64 },
}

impl EpsSchedule {
    /// The first `len` magnitudes; explicit lists shorter than `len` are padded with zeros.
    pub fn materialize(&self, len: usize) -> Result<Vec<f64>, EmError> {
        let out: Vec<f64> = match self {
            EpsSchedule::Explicit(v) => (0..len).map(|t| v.get(t).copied().unwrap_or(0.0)).collect(),
            EpsSchedule::Constant(c) => vec![*c; len],
            EpsSchedule::Geometric { initial, ratio } => (0..len).map(|t| initial * ratio.powi(t as i32)).collect(),
            EpsSchedule::Uniform { max, seed } => {
                let mut r = rng::stream(*seed, "eps-schedule", 0);
                (0..len).map(|_| max * r.random::<f64>()).collect()
            }
        };
        if let Some(bad) = out.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(EmError::Config(format!("ε schedule contains {bad}")));
        }
        Ok(out)
    }
}

/// Directions `u_t` of the injected errors, in the perturbable coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Directions {
    /// Uniform on the unit sphere, stream `(seed, "inexact-dir", t)`.
    Seeded(u64),
    Fixed(Vec<f64>),
}

impl Directions {
    pub fn direction(&self, t: usize, dim: usize) -> Result<Vec<f64>, EmError> {
        match self {
            Directions::Seeded(seed) => Ok(numerics::random_unit_vector(&mut rng::stream(*seed, "inexact-dir", t as u64), dim)),
            Directions::Fixed(u) => {
                if u.len() != dim {
                    return Err(EmError::Config(format!("fixed direction has length {}, expected {dim}", u.len())));
                }
                let n = numerics::norm(u);
                if (n - 1.0).abs() > 1e-12 {
                    return Err(EmError::Config(format!("fixed direction has norm {n}")));
                }
                Ok(u.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmVariant {
    Exact,
    Inexact { epsilons: EpsSchedule, directions: Directions },
    /// Fresh disjoint block per iteration; data shuffled once by `seed`.
    Split { m_blocks: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct EmConfig {
    pub variant: EmVariant,
    pub max_iters: usize,
    pub conv_tol: f64,
    /// Canonical section applied after each step.
    pub section: Option<GroupAction>,
}

impl EmConfig {
    pub fn exact(max_iters: usize, conv_tol: f64) -> Self {
        Self { variant: EmVariant::Exact, max_iters, conv_tol, section: None }
    }

    pub fn with_section(mut self, action: GroupAction) -> Self {
        self.section = Some(action);
        self
    }

    pub fn validate(&self, data: &WeightedDataset) -> Result<(), EmError> {
        if !(self.conv_tol > 0.0) {
            return Err(EmError::Config(format!("conv_tol must be positive, got {}", self.conv_tol)));
        }
        if let EmVariant::Split { m_blocks, .. } = self.variant {
            if m_blocks == 0 || m_blocks > data.len() {
                return Err(EmError::Config(format!("cannot split {} points into {m_blocks} nonempty blocks", data.len())));
            }
        }
        Ok(())
    }
}

/// Optional quantities recorded alongside each iterate.
#[derive(Default)]
pub struct Monitor<'a> {
    /// Population law for the per-step deviation `‖M_data(θ_t) − M_pop(θ_t)‖`.
    pub population: Option<&'a WeightedDataset>,
    /// Reference point for orbit distances.
    pub reference: Option<(&'a GroupAction, &'a ParamVector)>,
    /// Distance to a target set in some IPM.
    pub ipm: Option<&'a dyn Fn(&ParamVector) -> Result<f64, EmError>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Status {
    Converged,
    MaxIters,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: usize,
    pub theta: ParamVector,
    pub phi: f64,
    pub param_change: Option<f64>,
    pub orbit_dist: Option<f64>,
    pub ipm_dist: Option<f64>,
    /// Operator deviation of the step that produced this iterate.
    pub step_dev: Option<f64>,
    /// `ε` injected in the step that produced this iterate.
    pub eps_injected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub status: Status,
    /// Error message when the run ended in a degeneracy.
    pub degeneracy: Option<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> &ParamVector {
        &self.records.last().expect("trajectory has the initial record").theta
    }

    pub fn thetas(&self) -> impl Iterator<Item = &ParamVector> {
        self.records.iter().map(|r| &r.theta)
    }

    pub fn phis(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.phi).collect()
    }

    /// `‖θ_t − θ*‖` along the trajectory.
    pub fn errors_to(&self, theta_star: &ParamVector) -> Result<Vec<f64>, EmError> {
        self.thetas().map(|t| Ok(t.distance(theta_star)?)).collect()
    }

    pub fn to_csv(&self) -> String {
        fn cell(v: Option<f64>) -> String {
            v.map_or_else(|| "-".to_string(), |v| v.to_string())
        }
        let mut out = String::from("t,phi,param_change,orbit_dist,ipm_dist,step_dev,eps_injected\n");
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.t,
                r.phi,
                cell(r.param_change),
                cell(r.orbit_dist),
                cell(r.ipm_dist),
                cell(r.step_dev),
                cell(r.eps_injected)
            )
            .unwrap();
        }
        out
    }
}

fn apply_section(section: Option<&GroupAction>, theta: ParamVector) -> Result<ParamVector, EmError> {
    match section {
        Some(action) => Ok(action.section(&theta)?),
        None => Ok(theta),
    }
}

fn add_along(model: &ModelSpec, theta: &ParamVector, eps: f64, u: &[f64]) -> Result<ParamVector, EmError> {
    let mut v = theta.values().to_vec();
    for (&i, ui) in model.perturbable_indices().iter().zip(u) {
        v[i] += eps * ui;
    }
    Ok(theta.with_values(v)?)
}

/// Runs EM from `theta0` and records the trajectory.
pub fn em_run(
    model: &ModelSpec,
    theta0: &ParamVector,
    data: &WeightedDataset,
    config: &EmConfig,
    monitor: &Monitor,
) -> Result<Trajectory, EmError> {
    config.validate(data)?;
    model.validate(theta0)?;
    let section = config.section.as_ref();

    let (eps, blocks) = match &config.variant {
        EmVariant::Exact => (None, None),
        EmVariant::Inexact { epsilons, .. } => (Some(epsilons.materialize(config.max_iters)?), None),
        EmVariant::Split { m_blocks, seed } => (None, Some(split_blocks(data, *m_blocks, *seed)?)),
    };
    let perturb_dim = model.perturbable_indices().len();

    let observe = |t: usize, theta: &ParamVector, change: Option<f64>, step_dev: Option<f64>, eps: Option<f64>| -> Result<Record, EmError> {
        Ok(Record {
            t,
            theta: theta.clone(),
            phi: model.objective(theta, data)?,
            param_change: change,
            orbit_dist: match monitor.reference {
                Some((action, r)) => Some(action.orbit_distance(theta, r)?.value),
                None => None,
            },
            ipm_dist: match monitor.ipm {
                Some(f) => Some(f(theta)?),
                None => None,
            },
            step_dev,
            eps_injected: eps,
        })
    };

    let mut records = vec![observe(0, theta0, None, None, None)?];
    let mut theta = theta0.clone();
    let mut status = Status::MaxIters;
    let mut degeneracy = None;
    for t in 0..config.max_iters {
        let step_data = match &blocks {
            Some(b) if t >= b.len() => break,
            Some(b) => &b[t],
            None => data,
        };
        let stepped = match model.m_step(&theta, step_data) {
            Ok(next) => next,
            Err(e @ ModelError::Degeneracy { .. }) => {
                status = Status::Degenerate;
                degeneracy = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let step_dev = match monitor.population {
            Some(pop) => Some(apply_section(section, model.m_step(&theta, pop)?)?.distance(&apply_section(section, stepped.clone())?)?),
            None => None,
        };
        let mut injected = None;
        let mut next = stepped;
        if let (Some(eps), EmVariant::Inexact { directions, .. }) = (&eps, &config.variant) {
            let e = eps[t];
            if e != 0.0 {
                next = add_along(model, &next, e, &directions.direction(t, perturb_dim)?)?;
            }
            injected = Some(e);
        }
        let next = apply_section(section, next)?;
        let change = next.distance(&theta)?;
        if change <= config.conv_tol && injected.unwrap_or(0.0) == 0.0 {
            status = Status::Converged;
            break;
        }
        records.push(observe(t + 1, &next, Some(change), step_dev, injected)?);
        theta = next;
    }
    Ok(Trajectory { records, status, degeneracy })
}

/// Shuffles once and cuts into `m` contiguous, nearly equal blocks, each renormalized.
pub fn split_blocks(data: &WeightedDataset, m: usize, seed: u64) -> Result<Vec<WeightedDataset>, EmError> {
    if m == 0 || m > data.len() {
        return Err(EmError::Config(format!("cannot split {} points into {m} nonempty blocks", data.len())));
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut rng::stream(seed, "split", 0));
    let n = data.len();
    (0..m)
        .map(|b| {
            let (lo, hi) = (b * n / m, (b + 1) * n / m);
            data.subset(&idx[lo..hi]).map_err(|e| EmError::Model(e.into()))
        })
        .collect()
}

/// `T(θ) = section(M(θ))` for a section-canonical `θ`.
pub fn slice_em_map(model: &ModelSpec, action: &GroupAction, theta: &ParamVector, data: &WeightedDataset) -> Result<ParamVector, EmError> {
    if !action.is_canonical(theta)? {
        return Err(EmError::Precondition("input is not section-canonical".into()));
    }
    Ok(action.section(&model.m_step(theta, data)?)?)
}

fn em_map(model: &ModelSpec, action: Option<&GroupAction>, theta: &ParamVector, data: &WeightedDataset) -> Result<ParamVector, EmError> {
    apply_section(action, model.m_step(theta, data)?)
}

/// Iterates the (slice) EM map until the step is at most `step_tol`, or until
/// the step stops shrinking once below `1e-10`, or `max_iters`.
pub fn refine_fixed_point(
    model: &ModelSpec,
    theta: &ParamVector,
    data: &WeightedDataset,
    action: Option<&GroupAction>,
    step_tol: f64,
    max_iters: usize,
) -> Result<(ParamVector, f64), EmError> {
    let mut theta = apply_section(action, theta.clone())?;
    let mut last = f64::INFINITY;
    for _ in 0..max_iters {
        let next = em_map(model, action, &theta, data)?;
        let step = next.distance(&theta)?;
        theta = next;
        if step <= step_tol || (step < 1e-10 && step >= last) {
            return Ok((theta, step));
        }
        last = step;
    }
    Ok((theta, last))
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    /// `-H_pp⁻¹ H_pt` at `(θ*, θ*)`.
    pub formula: Matrix,
    /// Central differences of the EM map, step [`JACOBIAN_FD_STEP`].
    pub finite_difference: Matrix,
    pub max_abs_diff: f64,
    pub fixed_point_residual: f64,
}

/// `DT = -H_pp⁻¹ H_pt`.
pub fn jacobian_from_hessian_blocks(h_pp: &Matrix, h_pt: &Matrix) -> Result<Matrix, EmError> {
    let (_, s, _) = numerics::svd(h_pp)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    if !(smin > 1e-12 * smax.max(1.0)) {
        return Err(EmError::Conditioning(format!("H_pp is singular (σ_min = {smin:e})")));
    }
    Ok(h_pp.inverse()?.matmul(h_pt)?.scale(-1.0))
}

/// Jacobian of the EM map at a fixed point, over the differentiable coordinates.
/// With `action`, the map is the slice map `section ∘ M`.
pub fn em_jacobian(
    model: &ModelSpec,
    theta_star: &ParamVector,
    data: &WeightedDataset,
    action: Option<&GroupAction>,
) -> Result<JacobianReport, EmError> {
    let idx = model.differentiable_indices()?;
    let image = em_map(model, action, theta_star, data)?;
    let residual = image.distance(theta_star)?;
    if residual > FIXED_POINT_TOL {
        return Err(EmError::NotFixedPoint { residual, tol: FIXED_POINT_TOL });
    }
    let blocks = model.q_hessian_blocks(theta_star, theta_star, data)?;
    let formula = jacobian_from_hessian_blocks(&blocks.h_pp, &blocks.h_pt)?;

    let h = JACOBIAN_FD_STEP;
    let mut fd = Matrix::zeros(idx.len(), idx.len());
    for (col, &j) in idx.iter().enumerate() {
        let mut plus = theta_star.values().to_vec();
        let mut minus = plus.clone();
        plus[j] += h;
        minus[j] -= h;
        let tp = em_map(model, action, &theta_star.with_values(plus)?, data)?;
        let tm = em_map(model, action, &theta_star.with_values(minus)?, data)?;
        for (row, &i) in idx.iter().enumerate() {
            fd.set(row, col, (tp.values()[i] - tm.values()[i]) / (2.0 * h));
        }
    }
    let max_abs_diff = (&formula - &fd).max_abs();
    Ok(JacobianReport { formula, finite_difference: fd, max_abs_diff, fixed_point_residual: residual })
}

/// `ρ(DT(θ*))`.
pub fn local_rate(model: &ModelSpec, theta_star: &ParamVector, data: &WeightedDataset, action: Option<&GroupAction>) -> Result<f64, EmError> {
    Ok(numerics::spectral_radius(&em_jacobian(model, theta_star, data, action)?.formula)?)
}

/// Longest run of consecutive errors that strictly decrease and stay above the
/// noise floor, as a half-open index range.
pub fn qualifying_window(errors: &[f64]) -> (usize, usize) {
    let mut best = (0, 0);
    let mut start = 0;
    for i in 0..errors.len() {
        let ok_here = errors[i] > RATE_NOISE_FLOOR && errors[i].is_finite();
        if !ok_here {
            start = i + 1;
            continue;
        }
        if i > start && errors[i] >= errors[i - 1] {
            start = i;
        }
        if i + 1 - start > best.1 - best.0 {
            best = (start, i + 1);
        }
    }
    best
}

fn log_linear_slope(errors: &[f64], lo: usize, hi: usize) -> f64 {
    let n = (hi - lo) as f64;
    let ts: Vec<f64> = (lo..hi).map(|t| t as f64).collect();
    let ys: Vec<f64> = errors[lo..hi].iter().map(|e| e.ln()).collect();
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    sxy / sxx
}

/// Geometric rate from the least-squares slope of `log e_t` over the largest qualifying window.
pub fn rate_from_errors(errors: &[f64]) -> Result<f64, EmError> {
    let (lo, hi) = qualifying_window(errors);
    if hi - lo < MIN_RATE_WINDOW {
        return Err(EmError::InsufficientData { len: hi - lo });
    }
    Ok(log_linear_slope(errors, lo, hi).exp())
}

/// Rate fitted over the final decade of decay of the qualifying window
/// (widened to [`MIN_RATE_WINDOW`] points when the decade is shorter).
pub fn rate_from_errors_last_decade(errors: &[f64]) -> Result<f64, EmError> {
    let (lo, hi) = qualifying_window(errors);
    if hi - lo < MIN_RATE_WINDOW {
        return Err(EmError::InsufficientData { len: hi - lo });
    }
    let last = errors[hi - 1];
    let mut start = hi - 1;
    while start > lo && errors[start - 1] <= 10.0 * last {
        start -= 1;
    }
    let start = start.min(hi - MIN_RATE_WINDOW);
    Ok(log_linear_slope(errors, start, hi).exp())
}

pub fn empirical_rate(trajectory: &Trajectory, theta_star: &ParamVector) -> Result<f64, EmError> {
    rate_from_errors(&trajectory.errors_to(theta_star)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    /// `max_θ ‖M_sample(θ) − M_pop(θ)‖` over the evaluated probes.
    pub value: f64,
    pub argmax: Option<usize>,
    pub per_probe: Vec<Option<f64>>,
    /// Probes where either M-step degenerated.
    pub skipped: Vec<usize>,
}

pub fn operator_deviation(
    model: &ModelSpec,
    pop_data: &WeightedDataset,
    sample_data: &WeightedDataset,
    probes: &[ParamVector],
    section: Option<&GroupAction>,
) -> Result<DeviationReport, EmError> {
    let mut per_probe = Vec::with_capacity(probes.len());
    let mut skipped = Vec::new();
    let mut value = 0.0;
    let mut argmax = None;
    for (i, theta) in probes.iter().enumerate() {
        let pair = em_map(model, section, theta, sample_data).and_then(|a| Ok((a, em_map(model, section, theta, pop_data)?)));
        match pair {
            Ok((a, b)) => {
                let dev = a.distance(&b)?;
                if argmax.is_none() || dev > value {
                    value = dev;
                    argmax = Some(i);
                }
                per_probe.push(Some(dev));
            }
            Err(EmError::Model(ModelError::Degeneracy { .. })) => {
                skipped.push(i);
                per_probe.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(DeviationReport { value, argmax, per_probe, skipped })
}

/// Seeded Latin hypercube of `n` points in the box `center ± radius` along `coords`
/// (other coordinates copied from `center`).
pub fn latin_hypercube(center: &ParamVector, coords: &[usize], radius: f64, n: usize, seed: u64) -> Result<Vec<ParamVector>, EmError> {
    let mut rng = rng::stream(seed, "latin-hypercube", 0);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(coords.len());
    for _ in coords {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        columns.push(strata.into_iter().map(|s| (s as f64 + rng.random::<f64>()) / n as f64).collect());
    }
    (0..n)
        .map(|i| {
            let mut v = center.values().to_vec();
            for (c, &j) in coords.iter().enumerate() {
                v[j] += radius * (2.0 * columns[c][i] - 1.0);
            }
            Ok(center.with_values(v)?)
        })
        .collect()
}

/// Distinct section-canonical population-EM fixed points reached from
/// `n_starts` seeded data-driven starts.
pub fn projection_set_estimate(
    model: &ModelSpec,
    pop_data: &WeightedDataset,
    action: &GroupAction,
    n_starts: usize,
    seed: u64,
) -> Result<Vec<ParamVector>, EmError> {
    if n_starts == 0 {
        return Err(EmError::Config("n_starts must be at least 1".into()));
    }
    let mut found: Vec<ParamVector> = Vec::new();
    for s in 0..n_starts {
        let mut r = rng::stream(seed, "projection-start", s as u64);
        let theta0 = model.random_start(pop_data, &mut r)?;
        let (theta, _) = match refine_fixed_point(model, &theta0, pop_data, Some(action), REFINE_STEP_TOL, REFINE_MAX_ITERS) {
            Ok(v) => v,
            Err(EmError::Model(ModelError::Degeneracy { .. })) => continue,
            Err(e) => return Err(e),
        };
        let residual = slice_em_map(model, action, &theta, pop_data)?.distance(&theta)?;
        if residual > FIXED_POINT_TOL {
            continue;
        }
        let mut duplicate = false;
        for f in &found {
            if action.orbit_distance(f, &theta)?.value <= DEDUP_TOL {
                duplicate = true;
                break;
            }
        }
        if !duplicate {
            found.push(theta);
        }
    }
    if found.is_empty() {
        return Err(EmError::EmptySet);
    }
    found.sort_by(|a, b| a.values().iter().zip(b.values()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(found)
}

/// `x_{t+1} = map(x_t) + ε_t u_t` for an arbitrary vector map; returns `x_0..x_T`.
pub fn iterate_with_errors(
    map: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    epsilons: &[f64],
    directions: &Directions,
) -> Result<Vec<Vec<f64>>, EmError> {
    let mut out = vec![x0.to_vec()];
    for (t, &e) in epsilons.iter().enumerate() {
        let mut next = map(out.last().unwrap());
        if e != 0.0 {
            let u = directions.direction(t, next.len())?;
            next.iter_mut().zip(&u).for_each(|(v, u)| *v += e * u);
        }
        out.push(next);
    }
    Ok(out)
}

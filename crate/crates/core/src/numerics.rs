//! Dense linear-algebra kernels: a small row-major [`Matrix`], spectral radius,
//! SPD square roots, polar factors, and greedy epsilon-nets on spheres and balls.
//!
//! Eigenvalue and SVD work is delegated to `nalgebra` (real Schur form via
//! Hessenberg reduction and shifted QR); everything else is plain loops.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng;

/// Numerical tolerances shared by the kernels in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max allowed `|m_ij - m_ji|`, relative to `max(1, max|m|)`.
    pub symmetry: f64,
    /// Eigenvalue floor used by [`spd_sqrt`].
    pub eig_floor: f64,
    /// Total eigenvalue mass that may be clamped up to the floor before erroring.
    pub clamped_mass: f64,
    /// Smallest singular value accepted by [`polar_factors`].
    pub min_singular: f64,
    /// Norm deviation allowed for stored unit vectors.
    pub unit_norm: f64,
    /// Consecutive rejected candidates that terminate a greedy net construction.
    pub net_max_rejections: usize,
    /// Covering radius of the certification grid, as a fraction of the net radius.
    pub net_grid_fraction: f64,
    /// Largest certification grid attempted.
    pub net_max_candidates: usize,
}

pub const TOLERANCES: Tolerances = Tolerances {
    symmetry: 1e-10,
    eig_floor: 1e-14,
    clamped_mass: 1e-10,
    min_singular: 1e-10,
    unit_norm: 1e-12,
    net_max_rejections: 100_000,
    net_grid_fraction: 0.25,
    net_max_candidates: 20_000_000,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("conditioning error: smallest singular value {sigma_min:e} is below {threshold:e}")]
    Conditioning { sigma_min: f64, threshold: f64 },
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Dense real matrix stored in row-major order. Entries are finite.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if rows * cols != data.len() {
            return Err(NumericsError::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite { row: pos / cols.max(1), col: pos % cols.max(1) });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(NumericsError::Dimension("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Submatrix made of the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(idx.len(), self.cols, |i, j| self.get(idx[i], j))
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute row sum, the induced infinity-norm.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    pub fn symmetrized(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Matrix, NumericsError> {
        Matrix::new(m.nrows(), m.ncols(), (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect())
    }

    pub fn determinant(&self) -> Result<f64, NumericsError> {
        self.require_square("determinant")?;
        Ok(self.to_dmatrix().determinant())
    }

    pub fn inverse(&self) -> Result<Matrix, NumericsError> {
        self.require_square("inverse")?;
        let inv = self
            .to_dmatrix()
            .try_inverse()
            .ok_or_else(|| NumericsError::Domain("matrix is singular".into()))?;
        Matrix::from_dmatrix(&inv)
    }

    fn require_square(&self, what: &str) -> Result<(), NumericsError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(NumericsError::Dimension(format!("{what} needs a square matrix, got {}x{}", self.rows, self.cols)))
        }
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix add shape mismatch");
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sub shape mismatch");
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

/// Max modulus over all complex eigenvalues.
pub fn spectral_radius(m: &Matrix) -> Result<f64, NumericsError> {
    m.require_square("spectral_radius")?;
    if m.rows == 0 {
        return Ok(0.0);
    }
    let eig = m.to_dmatrix().complex_eigenvalues();
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Ascending eigenvalues and matching orthonormal eigenvectors (columns) of a symmetric matrix.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix), NumericsError> {
    m.require_square("symmetric_eigen")?;
    if !m.is_symmetric(TOLERANCES.symmetry) {
        return Err(NumericsError::Domain("matrix is not symmetric".into()));
    }
    let eig = nalgebra::SymmetricEigen::new(m.symmetrized().to_dmatrix());
    let mut order: Vec<usize> = (0..m.rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(m.rows, m.rows, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

pub fn min_eigenvalue_symmetric(m: &Matrix) -> Result<f64, NumericsError> {
    Ok(symmetric_eigen(m)?.0.first().copied().unwrap_or(f64::INFINITY))
}

/// Principal square root of a symmetric positive-definite matrix.
pub fn spd_sqrt(m: &Matrix) -> Result<Matrix, NumericsError> {
    m.require_square("spd_sqrt")?;
    if !m.is_symmetric(TOLERANCES.symmetry) {
        return Err(NumericsError::Domain("spd_sqrt: symmetry check failed".into()));
    }
    let (values, vectors) = symmetric_eigen(m)?;
    let mut clamped = 0.0;
    let roots: Vec<f64> = values
        .iter()
        .map(|&v| {
            if v < TOLERANCES.eig_floor {
                clamped += TOLERANCES.eig_floor - v;
                TOLERANCES.eig_floor.sqrt()
            } else {
                v.sqrt()
            }
        })
        .collect();
    if clamped > TOLERANCES.clamped_mass {
        return Err(NumericsError::Domain(format!(
            "spd_sqrt: positive-definiteness check failed (clamped eigenvalue mass {clamped:e})"
        )));
    }
    let n = m.rows;
    let s = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| vectors.get(i, k) * roots[k] * vectors.get(j, k)).sum());
    Ok(s.symmetrized())
}

/// Thin SVD `m = U diag(s) Vᵀ`, singular values descending.
pub fn svd(m: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix), NumericsError> {
    let svd = nalgebra::SVD::new(m.to_dmatrix(), true, true);
    let u = svd.u.as_ref().ok_or_else(|| NumericsError::Domain("SVD produced no U".into()))?;
    let vt = svd.v_t.as_ref().ok_or_else(|| NumericsError::Domain("SVD produced no Vᵀ".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = Matrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let vt = Matrix::from_fn(order.len(), vt.ncols(), |i, j| vt[(order[i], j)]);
    Ok((u, s, vt))
}

/// Right polar decomposition `b = u h` with `u` orthogonal and `h = (bᵀb)^{1/2}`.
pub fn polar_factors(b: &Matrix) -> Result<(Matrix, Matrix), NumericsError> {
    b.require_square("polar_factors")?;
    let (u_s, s, vt) = svd(b)?;
    let sigma_min = s.last().copied().unwrap_or(0.0);
    if sigma_min <= TOLERANCES.min_singular {
        return Err(NumericsError::Conditioning { sigma_min, threshold: TOLERANCES.min_singular });
    }
    let v = vt.transpose();
    let u = &u_s * &vt;
    let n = b.rows;
    let h = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| v.get(i, k) * s[k] * v.get(j, k)).sum());
    Ok((u, h.symmetrized()))
}

/// An eta-net of the unit sphere in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereNet {
    pub dim: usize,
    pub eta: f64,
    pub points: Vec<Vec<f64>>,
}

impl SphereNet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(1 + 2/eta)^dim`.
    pub fn cardinality_bound(&self) -> f64 {
        (1.0 + 2.0 / self.eta).powi(self.dim as i32)
    }

    /// Distance from `v` to the closest net point.
    pub fn distance_to(&self, v: &[f64]) -> f64 {
        self.points.iter().map(|p| euclidean(p, v)).fold(f64::INFINITY, f64::min)
    }
}

/// Deterministic eta-net of `S^{dim-1}`; see [`sphere_net_seeded`].
pub fn sphere_net(dim: usize, eta: f64) -> Result<SphereNet, NumericsError> {
    sphere_net_seeded(dim, eta, 0x5eed_0f_5e7)
}

/// Greedy eta-separated packing over seeded uniform samples of the sphere,
/// followed by a certification pass.
///
/// Candidates farther than `eta` from every accepted point are accepted; the loop
/// stops after [`Tolerances::net_max_rejections`] consecutive rejections. Random
/// rejections do not prove maximality, so every point of a deterministic
/// `δ`-net of the sphere (`δ = eta · net_grid_fraction`, radially projected cube
/// faces) is then added if it is farther than `eta − δ` from the net. Every unit
/// vector is within `δ` of a grid point and that point within `eta − δ` of the
/// net. The volumetric bound `(1+2/eta)^dim` is re-checked before returning.
pub fn sphere_net_seeded(dim: usize, eta: f64, seed: u64) -> Result<SphereNet, NumericsError> {
    if dim == 0 {
        return Err(NumericsError::Parameter("sphere_net needs dim >= 1".into()));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(NumericsError::Parameter(format!("eta must lie in (0,1), got {eta}")));
    }
    let mut rng = rng::stream(seed, "sphere-net", dim as u64);
    let mut packing = Packing::new(dim, eta);
    packing.greedy(eta, TOLERANCES.net_max_rejections, || random_unit_vector(&mut rng, dim));
    let delta = eta * TOLERANCES.net_grid_fraction;
    // a face grid with m cells per side covers its face within √(dim−1)/m
    let m = ((dim as f64 - 1.0).sqrt() / delta).ceil().max(1.0) as usize;
    check_grid_size(2 * dim, m, dim - 1)?;
    for axis in 0..dim {
        for side in [-1.0, 1.0] {
            for_each_grid_point(dim - 1, m, 1.0, |face| {
                let mut x = Vec::with_capacity(dim);
                x.extend_from_slice(&face[..axis]);
                x.push(side);
                x.extend_from_slice(&face[axis..]);
                let n = norm(&x);
                x.iter_mut().for_each(|v| *v /= n);
                packing.offer(x, eta - delta);
            });
        }
    }
    let points = packing.points;
    let net = SphereNet { dim, eta, points };
    if net.len() as f64 > net.cardinality_bound() {
        return Err(NumericsError::Domain(format!(
            "net of {} points exceeds the volumetric bound {}",
            net.len(),
            net.cardinality_bound()
        )));
    }
    Ok(net)
}

/// `rho`-net of the closed ball `B(0, radius)` in `R^dim`, built like
/// [`sphere_net_seeded`]: seeded greedy packing, then certification against a
/// cube grid projected onto the ball (projection onto a convex set is
/// 1-Lipschitz). Errors if the result exceeds `(1 + 2 radius/rho)^dim`.
pub fn ball_net(dim: usize, radius: f64, rho: f64, seed: u64) -> Result<Vec<Vec<f64>>, NumericsError> {
    if dim == 0 || !(radius > 0.0) || !(rho > 0.0) {
        return Err(NumericsError::Parameter("ball_net needs dim >= 1, radius > 0, rho > 0".into()));
    }
    let mut rng = rng::stream(seed, "ball-net", dim as u64);
    let mut packing = Packing::new(dim, rho);
    packing.greedy(rho, TOLERANCES.net_max_rejections, || {
        let dir = random_unit_vector(&mut rng, dim);
        let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
        dir.into_iter().map(|v| v * r).collect()
    });
    let delta = rho * TOLERANCES.net_grid_fraction;
    let m = (radius * (dim as f64).sqrt() / delta).ceil().max(1.0) as usize;
    check_grid_size(1, m, dim)?;
    for_each_grid_point(dim, m, radius, |g| {
        let n = norm(g);
        let x: Vec<f64> = if n > radius { g.iter().map(|v| v * radius / n).collect() } else { g.to_vec() };
        packing.offer(x, rho - delta);
    });
    let bound = (1.0 + 2.0 * radius / rho).powi(dim as i32);
    if packing.points.len() as f64 > bound {
        return Err(NumericsError::Domain(format!("net of {} points exceeds the volumetric bound {bound}", packing.points.len())));
    }
    Ok(packing.points)
}

fn check_grid_size(copies: usize, m: usize, dims: usize) -> Result<(), NumericsError> {
    let size = (m as f64).powi(dims as i32) * copies as f64;
    if size > TOLERANCES.net_max_candidates as f64 {
        return Err(NumericsError::Domain(format!("certification grid of {size:.0} points is too large")));
    }
    Ok(())
}

/// Cell midpoints of `[-half, half]^dims` split into `m` cells per side.
fn for_each_grid_point(dims: usize, m: usize, half: f64, mut f: impl FnMut(&[f64])) {
    let h = 2.0 * half / m as f64;
    let mut idx = vec![0usize; dims];
    let mut x = vec![0.0; dims];
    loop {
        for (xi, &i) in x.iter_mut().zip(&idx) {
            *xi = -half + (i as f64 + 0.5) * h;
        }
        f(&x);
        let mut j = 0;
        while j < dims {
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == dims {
            return;
        }
    }
}

/// Uniform random point on the unit sphere in `R^dim`.
pub fn random_unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-300 {
            let mut u: Vec<f64> = v.iter().map(|x| x / n).collect();
            // one renormalization pass keeps |‖u‖ - 1| at the rounding level
            let n2 = norm(&u);
            u.iter_mut().for_each(|x| *x /= n2);
            if (norm(&u) - 1.0).abs() <= TOLERANCES.unit_norm {
                return u;
            }
        }
    }
}

struct Packing {
    index: CellIndex,
    points: Vec<Vec<f64>>,
}

impl Packing {
    /// `cell` must be at least every separation later passed to [`Packing::offer`].
    fn new(dim: usize, cell: f64) -> Self {
        Self { index: CellIndex::new(dim, cell), points: Vec::new() }
    }

    /// Adds `candidate` unless a point lies within `sep`; returns whether it was added.
    fn offer(&mut self, candidate: Vec<f64>, sep: f64) -> bool {
        if self.index.any_within(&self.points, &candidate, sep) {
            return false;
        }
        self.index.insert(&candidate, self.points.len());
        self.points.push(candidate);
        true
    }

    fn greedy(&mut self, sep: f64, max_rejections: usize, mut sample: impl FnMut() -> Vec<f64>) {
        let mut rejections = 0;
        while rejections < max_rejections {
            if self.offer(sample(), sep) {
                rejections = 0;
            } else {
                rejections += 1;
            }
        }
    }
}

/// Uniform grid hash with cell side `sep`; any point within `sep` of a query lies
/// in the query's cell or one of its immediate neighbours.
struct CellIndex {
    dim: usize,
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
    offsets: Vec<Vec<i64>>,
}

impl CellIndex {
    const MAX_GRID_DIM: usize = 8;

    fn new(dim: usize, cell: f64) -> Self {
        let offsets = if dim <= Self::MAX_GRID_DIM {
            let mut offsets = vec![vec![]];
            for _ in 0..dim {
                offsets = offsets
                    .into_iter()
                    .flat_map(|o: Vec<i64>| {
                        (-1..=1).map(move |d| {
                            let mut o = o.clone();
                            o.push(d);
                            o
                        })
                    })
                    .collect();
            }
            offsets
        } else {
            Vec::new()
        };
        Self { dim, cell, cells: HashMap::new(), offsets }
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|v| (v / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, p: &[f64], id: usize) {
        if self.dim <= Self::MAX_GRID_DIM {
            let key = self.key(p);
            self.cells.entry(key).or_default().push(id);
        }
    }

    fn any_within(&self, points: &[Vec<f64>], q: &[f64], sep: f64) -> bool {
        if self.dim > Self::MAX_GRID_DIM {
            return points.iter().any(|p| euclidean(p, q) <= sep);
        }
        let key = self.key(q);
        let mut probe = key.clone();
        for off in &self.offsets {
            for (i, o) in off.iter().enumerate() {
                probe[i] = key[i] + o;
            }
            if let Some(ids) = self.cells.get(&probe) {
                if ids.iter().any(|&id| euclidean(&points[id], q) <= sep) {
                    return true;
                }
            }
        }
        false
    }
}

/// Upper bound on `max ‖y‖` from the net: `(1-eta)^{-1} max_v max_y <v, y>`.
pub fn scalarize_vector_sup(values: &[Vec<f64>], net: &SphereNet) -> Result<f64, NumericsError> {
    if let Some(bad) = values.iter().find(|y| y.len() != net.dim) {
        return Err(NumericsError::Dimension(format!("vector of length {} against a net in R^{}", bad.len(), net.dim)));
    }
    if values.is_empty() {
        return Ok(0.0);
    }
    let best = net
        .points
        .iter()
        .flat_map(|v| values.iter().map(move |y| dot(v, y)))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best / (1.0 - net.eta))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Haar-distributed orthogonal matrix (reflections included).
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        let s = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            out.set(i, j, q[(i, j)] * s);
        }
    }
    out
}

//! Symmetry groups acting on parameter layouts: label permutations of mixture
//! components, the global sign flip, and right multiplication of a loading matrix
//! by an orthogonal matrix. Provides orbit distances and canonical sections.

use std::cmp::Ordering;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, Matrix, NumericsError};
use crate::params::{LayoutError, ParamLayout, ParamVector};

/// Largest `k` for which permutation groups are enumerated.
pub const MAX_ENUMERATED_K: usize = 8;
/// Determinant threshold for a usable polar chart.
pub const CHART_MIN_DET: f64 = 1e-10;
/// Tolerance used when checking that a loading is already on the polar slice.
pub const POLAR_CANONICAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("capacity error: permutation group on k={k} labels exceeds the enumeration limit {MAX_ENUMERATED_K}")]
    Capacity { k: usize },
    #[error("chart error: |det| of the index-set minor {rows:?} is {det:e}; choose another index set")]
    Chart { rows: Vec<usize>, det: f64 },
    #[error("group element does not belong to this action: {0}")]
    Element(String),
    #[error("operation needs a finite group action")]
    NotFinite,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    Permutation { k: usize },
    Sign,
    Orthogonal { r: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    /// `perm[j]` is the new label of component `j`.
    Permutation(Vec<usize>),
    /// `+1` or `-1`.
    Sign(i8),
    /// Orthogonal `r×r` matrix acting on the right.
    Orthogonal(Matrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitDistance {
    pub value: f64,
    pub aligning_element: GroupElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAction {
    kind: GroupKind,
    layout: ParamLayout,
}

impl GroupAction {
    /// Relabeling of the `k` components of a mixture layout.
    pub fn permutation(layout: ParamLayout) -> Result<Self, GroupError> {
        match layout {
            ParamLayout::Mixture { k, .. } => Ok(Self { kind: GroupKind::Permutation { k }, layout }),
            other => Err(LayoutError::Incompatible(format!("permutation action needs a mixture layout, got {other:?}")).into()),
        }
    }

    /// `θ ↦ -θ` on any layout.
    pub fn sign(layout: ParamLayout) -> Self {
        Self { kind: GroupKind::Sign, layout }
    }

    /// `A ↦ A R` on a loading layout.
    pub fn orthogonal(layout: ParamLayout) -> Result<Self, GroupError> {
        match layout {
            ParamLayout::Loading { r, .. } => Ok(Self { kind: GroupKind::Orthogonal { r }, layout }),
            other => Err(LayoutError::Incompatible(format!("orthogonal action needs a loading layout, got {other:?}")).into()),
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn layout(&self) -> ParamLayout {
        self.layout
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self.kind, GroupKind::Orthogonal { .. })
    }

    pub fn identity(&self) -> GroupElement {
        match self.kind {
            GroupKind::Permutation { k } => GroupElement::Permutation((0..k).collect()),
            GroupKind::Sign => GroupElement::Sign(1),
            GroupKind::Orthogonal { r } => GroupElement::Orthogonal(Matrix::identity(r)),
        }
    }

    fn check_element(&self, g: &GroupElement) -> Result<(), GroupError> {
        match (self.kind, g) {
            (GroupKind::Permutation { k }, GroupElement::Permutation(p)) => {
                let mut seen = vec![false; k];
                if p.len() != k || !p.iter().all(|&j| j < k && !std::mem::replace(&mut seen[j], true)) {
                    return Err(GroupError::Element(format!("{p:?} is not a permutation of {k} labels")));
                }
                Ok(())
            }
            (GroupKind::Sign, GroupElement::Sign(s)) if *s == 1 || *s == -1 => Ok(()),
            (GroupKind::Orthogonal { r }, GroupElement::Orthogonal(m)) => {
                if m.rows() != r || m.cols() != r {
                    return Err(GroupError::Element(format!("expected {r}x{r} orthogonal matrix")));
                }
                let defect = (&(&m.transpose() * m) - &Matrix::identity(r)).max_abs();
                if defect > 1e-9 {
                    return Err(GroupError::Element(format!("matrix is not orthogonal (defect {defect:e})")));
                }
                Ok(())
            }
            (kind, g) => Err(GroupError::Element(format!("{g:?} does not act through {kind:?}"))),
        }
    }

    /// `g·h`, defined so that `act(g·h, θ) = act(g, act(h, θ))`.
    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check_element(g)?;
        self.check_element(h)?;
        Ok(match (g, h) {
            (GroupElement::Permutation(g), GroupElement::Permutation(h)) => {
                GroupElement::Permutation(h.iter().map(|&j| g[j]).collect())
            }
            (GroupElement::Sign(a), GroupElement::Sign(b)) => GroupElement::Sign(a * b),
            // right action: A (R_h R_g)
            (GroupElement::Orthogonal(rg), GroupElement::Orthogonal(rh)) => GroupElement::Orthogonal(rh * rg),
            _ => unreachable!("checked above"),
        })
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check_element(g)?;
        Ok(match g {
            GroupElement::Permutation(p) => {
                let mut inv = vec![0; p.len()];
                for (j, &pj) in p.iter().enumerate() {
                    inv[pj] = j;
                }
                GroupElement::Permutation(inv)
            }
            GroupElement::Sign(s) => GroupElement::Sign(*s),
            GroupElement::Orthogonal(m) => GroupElement::Orthogonal(m.transpose()),
        })
    }

    pub fn act(&self, g: &GroupElement, theta: &ParamVector) -> Result<ParamVector, GroupError> {
        theta.require_layout(self.layout)?;
        self.check_element(g)?;
        let v = theta.values();
        let out = match g {
            GroupElement::Permutation(p) => {
                let ParamLayout::Mixture { k, d, cov_entries } = self.layout else { unreachable!() };
                let mut out = v.to_vec();
                for (j, &target) in p.iter().enumerate() {
                    out[target] = v[j];
                    out[k + target * d..k + (target + 1) * d].copy_from_slice(&v[k + j * d..k + (j + 1) * d]);
                    if cov_entries > 0 {
                        let base = k + k * d;
                        out[base + target * cov_entries..base + (target + 1) * cov_entries]
                            .copy_from_slice(&v[base + j * cov_entries..base + (j + 1) * cov_entries]);
                    }
                }
                out
            }
            GroupElement::Sign(s) => {
                if *s == 1 {
                    v.to_vec()
                } else {
                    v.iter().map(|x| -x).collect()
                }
            }
            GroupElement::Orthogonal(r) => (&theta.loading()? * r).into_vec(),
        };
        Ok(theta.with_values(out)?)
    }

    /// All group elements in enumeration order, identity first. Finite groups only.
    pub fn elements(&self) -> Result<Vec<GroupElement>, GroupError> {
        match self.kind {
            GroupKind::Permutation { k } if k > MAX_ENUMERATED_K => Err(GroupError::Capacity { k }),
            GroupKind::Permutation { k } => {
                Ok((0..k).permutations(k).map(GroupElement::Permutation).collect())
            }
            GroupKind::Sign => Ok(vec![GroupElement::Sign(1), GroupElement::Sign(-1)]),
            GroupKind::Orthogonal { .. } => Err(GroupError::NotFinite),
        }
    }

    pub fn random_element(&self, rng: &mut ChaCha8Rng) -> GroupElement {
        match self.kind {
            GroupKind::Permutation { k } => {
                let mut p: Vec<usize> = (0..k).collect();
                p.shuffle(rng);
                GroupElement::Permutation(p)
            }
            GroupKind::Sign => GroupElement::Sign(if rng.random::<bool>() { 1 } else { -1 }),
            GroupKind::Orthogonal { r } => GroupElement::Orthogonal(numerics::random_orthogonal(rng, r)),
        }
    }

    /// `inf_g ‖θ - g·θ'‖`: exact enumeration for finite groups, Procrustes for O(r).
    pub fn orbit_distance(&self, theta: &ParamVector, theta_prime: &ParamVector) -> Result<OrbitDistance, GroupError> {
        theta.require_layout(self.layout)?;
        theta_prime.require_layout(self.layout)?;
        match self.kind {
            GroupKind::Orthogonal { .. } => {
                let a = theta.loading()?;
                let b = theta_prime.loading()?;
                let r = procrustes_rotation(&a, &b)?;
                let g = GroupElement::Orthogonal(r);
                let value = theta.distance(&self.act(&g, theta_prime)?)?;
                Ok(OrbitDistance { value, aligning_element: g })
            }
            _ => {
                let mut best: Option<OrbitDistance> = None;
                for g in self.elements()? {
                    let value = theta.distance(&self.act(&g, theta_prime)?)?;
                    if best.as_ref().is_none_or(|b| value < b.value) {
                        best = Some(OrbitDistance { value, aligning_element: g });
                    }
                }
                Ok(best.expect("groups are nonempty"))
            }
        }
    }

    /// Canonical representative: lexicographic section for finite groups, the
    /// polar slice on the first `r` rows for O(r).
    pub fn section(&self, theta: &ParamVector) -> Result<ParamVector, GroupError> {
        match self.kind {
            GroupKind::Orthogonal { r } => {
                let a = theta.loading()?;
                let rows: Vec<usize> = (0..r).collect();
                Ok(ParamVector::from_loading(&polar_slice(&a, &rows)?))
            }
            _ => canonical_section_finite(theta, self),
        }
    }

    pub fn is_canonical(&self, theta: &ParamVector) -> Result<bool, GroupError> {
        let s = self.section(theta)?;
        Ok(if self.is_finite() {
            s == *theta
        } else {
            s.values().iter().zip(theta.values()).all(|(a, b)| (a - b).abs() <= POLAR_CANONICAL_TOL)
        })
    }
}

/// `R ∈ O(r)` minimising `‖A - B R‖_F`: with `Bᵀ A = U Σ Vᵀ`, `R = U Vᵀ`.
pub fn procrustes_rotation(a: &Matrix, b: &Matrix) -> Result<Matrix, GroupError> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(LayoutError::Incompatible("Procrustes needs equal shapes".into()).into());
    }
    let m = &b.transpose() * a;
    let (u, _, vt) = numerics::svd(&m)?;
    Ok(&u * &vt)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("finite coordinates") {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Lexicographic section of a finite action.
///
/// For permutations this is the lexicographically smallest orbit element. For the
/// sign group it is the orbit element whose first nonzero coordinate is positive
/// (the lexicographically largest of `{θ, -θ}`), which coincides with
/// [`sign_canonicalize`]. Ties keep the earliest element in enumeration order.
pub fn canonical_section_finite(theta: &ParamVector, action: &GroupAction) -> Result<ParamVector, GroupError> {
    theta.require_layout(action.layout)?;
    let want = match action.kind {
        GroupKind::Permutation { .. } => Ordering::Less,
        GroupKind::Sign => Ordering::Greater,
        GroupKind::Orthogonal { .. } => return Err(GroupError::NotFinite),
    };
    let mut best = theta.clone();
    for g in action.elements()?.iter().skip(1) {
        let cand = action.act(g, theta)?;
        if lex_cmp(cand.values(), best.values()) == want {
            best = cand;
        }
    }
    Ok(best)
}

/// `σ(θ)·θ` with `σ(θ) = +1` when θ is zero or its first nonzero coordinate is positive.
pub fn sign_canonicalize(theta: &ParamVector) -> ParamVector {
    match theta.values().iter().find(|v| **v != 0.0) {
        Some(v) if *v < 0.0 => theta.with_values(theta.values().iter().map(|x| -x).collect()).expect("same layout"),
        _ => theta.clone(),
    }
}

/// Local section for right O(r) action: `A · U(A_I)ᵀ`, where `U(A_I)` is the
/// orthogonal polar factor of the row-submatrix on `index_set`. The returned
/// loading has an SPD `I`-minor.
pub fn polar_slice(a: &Matrix, index_set: &[usize]) -> Result<Matrix, GroupError> {
    let r = a.cols();
    if index_set.len() != r || index_set.iter().any(|&i| i >= a.rows()) || !index_set.iter().all_unique() {
        return Err(LayoutError::Incompatible(format!(
            "index set {index_set:?} must name {r} distinct rows of a {}-row loading",
            a.rows()
        ))
        .into());
    }
    let minor = a.select_rows(index_set);
    let det = minor.determinant()?;
    if det.abs() <= CHART_MIN_DET {
        return Err(GroupError::Chart { rows: index_set.to_vec(), det });
    }
    let (u, _) = numerics::polar_factors(&minor).map_err(|e| match e {
        NumericsError::Conditioning { .. } => GroupError::Chart { rows: index_set.to_vec(), det },
        other => other.into(),
    })?;
    Ok(a * &u.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::min_eigenvalue_symmetric;
    use crate::rng;
    use rand_distr::StandardNormal;

    fn gmm_layout(k: usize, d: usize) -> ParamLayout {
        ParamLayout::Mixture { k, d, cov_entries: 0 }
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn random_loading(rng: &mut ChaCha8Rng, d: usize, r: usize) -> Matrix {
        Matrix::new(d, r, random_vec(rng, d * r)).unwrap()
    }

    #[test]
    fn swap_relabels_blocks() {
        let layout = gmm_layout(2, 1);
        let act = GroupAction::permutation(layout).unwrap();
        let theta = ParamVector::new(layout, vec![0.7, 0.3, 2.0, -1.0]).unwrap();
        let swapped = act.act(&GroupElement::Permutation(vec![1, 0]), &theta).unwrap();
        assert_eq!(swapped.values(), &[0.3, 0.7, -1.0, 2.0]);
        assert_eq!(act.act(&act.identity(), &theta).unwrap(), theta);
    }

    #[test]
    fn composition_law_all_kinds() {
        let mut rng = rng::stream(1, "groups-test", 0);
        let mix = ParamLayout::Mixture { k: 4, d: 2, cov_entries: 3 };
        let actions = [
            GroupAction::permutation(mix).unwrap(),
            GroupAction::sign(ParamLayout::Vector { d: 3 }),
            GroupAction::orthogonal(ParamLayout::Loading { d: 4, r: 3 }).unwrap(),
        ];
        for action in actions {
            for _ in 0..20 {
                let theta = ParamVector::new(action.layout(), random_vec(&mut rng, action.layout().len())).unwrap();
                let g = action.random_element(&mut rng);
                let h = action.random_element(&mut rng);
                let lhs = action.act(&g, &action.act(&h, &theta).unwrap()).unwrap();
                let rhs = action.act(&action.compose(&g, &h).unwrap(), &theta).unwrap();
                assert!(lhs.distance(&rhs).unwrap() <= 1e-12);
                let back = action.act(&action.inverse(&g).unwrap(), &action.act(&g, &theta).unwrap()).unwrap();
                assert!(back.distance(&theta).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn orthogonal_action_preserves_singular_values() {
        let mut rng = rng::stream(2, "groups-test", 0);
        let layout = ParamLayout::Loading { d: 3, r: 2 };
        let action = GroupAction::orthogonal(layout).unwrap();
        let a = random_loading(&mut rng, 3, 2);
        let g = action.random_element(&mut rng);
        let moved = action.act(&g, &ParamVector::from_loading(&a)).unwrap().loading().unwrap();
        let (_, s1, _) = numerics::svd(&a).unwrap();
        let (_, s2, _) = numerics::svd(&moved).unwrap();
        for (x, y) in s1.iter().zip(&s2) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_foreign_elements_and_layouts() {
        let action = GroupAction::permutation(gmm_layout(2, 1)).unwrap();
        let theta = ParamVector::new(gmm_layout(2, 1), vec![0.5, 0.5, 1.0, 2.0]).unwrap();
        assert!(matches!(action.act(&GroupElement::Sign(-1), &theta), Err(GroupError::Element(_))));
        assert!(matches!(action.act(&GroupElement::Permutation(vec![0, 0]), &theta), Err(GroupError::Element(_))));
        let other = ParamVector::new(ParamLayout::Vector { d: 4 }, vec![0.0; 4]).unwrap();
        assert!(matches!(action.act(&action.identity(), &other), Err(GroupError::Layout(_))));
        assert!(GroupAction::permutation(ParamLayout::Vector { d: 2 }).is_err());
        let big = GroupAction::permutation(gmm_layout(9, 1)).unwrap();
        let t = ParamVector::new(gmm_layout(9, 1), vec![0.0; 18]).unwrap();
        assert!(matches!(big.orbit_distance(&t, &t), Err(GroupError::Capacity { k: 9 })));
    }

    #[test]
    fn orbit_distance_same_orbit_is_zero() {
        let mut rng = rng::stream(3, "groups-test", 0);
        let layout = gmm_layout(3, 2);
        let action = GroupAction::permutation(layout).unwrap();
        let theta = ParamVector::new(layout, random_vec(&mut rng, layout.len())).unwrap();
        for g in action.elements().unwrap() {
            let d = action.orbit_distance(&theta, &action.act(&g, &theta).unwrap()).unwrap();
            assert_eq!(d.value, 0.0);
        }
    }

    #[test]
    fn sign_orbit_distance_example() {
        let layout = ParamLayout::Vector { d: 2 };
        let action = GroupAction::sign(layout);
        let a = ParamVector::new(layout, vec![1.0, -2.0]).unwrap();
        let b = ParamVector::new(layout, vec![-1.0, 2.5]).unwrap();
        let d = action.orbit_distance(&a, &b).unwrap();
        assert!((d.value - 0.5).abs() < 1e-15);
        assert_eq!(d.aligning_element, GroupElement::Sign(-1));
    }

    #[test]
    fn procrustes_matches_angle_grid() {
        let mut rng = rng::stream(4, "groups-test", 0);
        let layout = ParamLayout::Loading { d: 4, r: 2 };
        let action = GroupAction::orthogonal(layout).unwrap();
        let a = ParamVector::from_loading(&random_loading(&mut rng, 4, 2));
        let b = ParamVector::from_loading(&random_loading(&mut rng, 4, 2));
        let d = action.orbit_distance(&a, &b).unwrap();
        assert!(d.value <= a.distance(&b).unwrap());
        let moved = action.act(&d.aligning_element, &b).unwrap();
        assert!((a.distance(&moved).unwrap() - d.value).abs() <= 1e-10);
        let mut grid_best = f64::INFINITY;
        for i in 0..10_000 {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 10_000.0;
            let (c, s) = (t.cos(), t.sin());
            for refl in [1.0, -1.0] {
                let r = Matrix::from_rows(&[vec![c, -s * refl], vec![s, c * refl]]).unwrap();
                let v = a.distance(&action.act(&GroupElement::Orthogonal(r), &b).unwrap()).unwrap();
                assert!(d.value <= v + 1e-12);
                grid_best = grid_best.min(v);
            }
        }
        assert!((grid_best - d.value).abs() <= 1e-6, "grid {grid_best} vs procrustes {}", d.value);
    }

    #[test]
    fn orbit_distance_pseudometric_laws() {
        let mut rng = rng::stream(5, "groups-test", 0);
        let layout = gmm_layout(3, 1);
        let action = GroupAction::permutation(layout).unwrap();
        for _ in 0..50 {
            let t: Vec<ParamVector> =
                (0..3).map(|_| ParamVector::new(layout, random_vec(&mut rng, 6)).unwrap()).collect();
            let d = |a: &ParamVector, b: &ParamVector| action.orbit_distance(a, b).unwrap().value;
            assert!((d(&t[0], &t[1]) - d(&t[1], &t[0])).abs() <= 1e-10);
            assert!(d(&t[0], &t[2]) <= d(&t[0], &t[1]) + d(&t[1], &t[2]) + 1e-9);
            let g = action.random_element(&mut rng);
            let h = action.random_element(&mut rng);
            let moved = d(&action.act(&g, &t[0]).unwrap(), &action.act(&h, &t[1]).unwrap());
            assert!((moved - d(&t[0], &t[1])).abs() <= 1e-10);
        }
    }

    #[test]
    fn lexicographic_section_examples() {
        let layout = gmm_layout(2, 1);
        let action = GroupAction::permutation(layout).unwrap();
        let theta = ParamVector::new(layout, vec![0.7, 0.3, 2.0, -1.0]).unwrap();
        let s = canonical_section_finite(&theta, &action).unwrap();
        assert_eq!(s.values(), &[0.3, 0.7, -1.0, 2.0]);
        assert_eq!(canonical_section_finite(&s, &action).unwrap(), s);
        // tie on weights, decided by the means
        let tie = ParamVector::new(layout, vec![0.5, 0.5, 2.0, -1.0]).unwrap();
        assert_eq!(canonical_section_finite(&tie, &action).unwrap().values(), &[0.5, 0.5, -1.0, 2.0]);
    }

    #[test]
    fn sign_canonicalize_examples() {
        let layout = ParamLayout::Vector { d: 3 };
        let zero = ParamVector::new(layout, vec![0.0; 3]).unwrap();
        assert_eq!(sign_canonicalize(&zero), zero);
        let t = ParamVector::new(layout, vec![0.0, -3.0, 1.0]).unwrap();
        assert_eq!(sign_canonicalize(&t).values(), &[0.0, 3.0, -1.0]);
    }

    #[test]
    fn sign_sections_agree_and_are_orbit_constant() {
        let mut rng = rng::stream(6, "groups-test", 0);
        let layout = ParamLayout::Vector { d: 3 };
        let action = GroupAction::sign(layout);
        for i in 0..100 {
            let mut v = random_vec(&mut rng, 3);
            if i % 4 == 0 {
                v[0] = 0.0;
            }
            let t = ParamVector::new(layout, v).unwrap();
            let neg = action.act(&GroupElement::Sign(-1), &t).unwrap();
            assert_eq!(canonical_section_finite(&t, &action).unwrap(), sign_canonicalize(&t));
            assert_eq!(sign_canonicalize(&neg), sign_canonicalize(&t));
        }
    }

    #[test]
    fn polar_slice_properties() {
        let mut rng = rng::stream(7, "groups-test", 0);
        let idx = [0, 1];
        for _ in 0..100 {
            let a = random_loading(&mut rng, 4, 2);
            let s = polar_slice(&a, &idx).unwrap();
            assert!(min_eigenvalue_symmetric(&s.select_rows(&idx).symmetrized()).unwrap() > 0.0);
            assert!(s.select_rows(&idx).is_symmetric(1e-9));
            let r = numerics::random_orthogonal(&mut rng, 2);
            let moved = polar_slice(&(&a * &r), &idx).unwrap();
            assert!((&moved - &s).max_abs() <= 1e-9);
            let again = polar_slice(&s, &idx).unwrap();
            assert!((&again - &s).max_abs() <= 1e-9);
        }
    }

    #[test]
    fn polar_slice_fixed_when_minor_spd_and_chart_error() {
        let a = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0], vec![3.0, -1.0]]).unwrap();
        let s = polar_slice(&a, &[0, 1]).unwrap();
        assert!((&s - &a).max_abs() <= 1e-12);
        let singular = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(polar_slice(&singular, &[0, 1]), Err(GroupError::Chart { .. })));
        assert!(polar_slice(&singular, &[0, 2]).is_ok());
    }
}

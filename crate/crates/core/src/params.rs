//! Flattened parameter vectors and the layouts that tie coordinates to model blocks.
//!
//! Flattening order (this is also the order used by lexicographic sections):
//!
//! * `Mixture { k, d, cov_entries }`: all `k` weights, then the `k` means (each `d`
//!   long), then, when `cov_entries > 0`, the `k` covariance blocks, each the upper
//!   triangle of a `d×d` matrix read row by row.
//! * `Vector { d }`: the `d` coordinates.
//! * `Loading { d, r }`: a `d×r` loading matrix, row-major.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("layout mismatch: expected {expected} coordinates, got {got}")]
    Length { expected: usize, got: usize },
    #[error("layout mismatch: {0}")]
    Incompatible(String),
    #[error("non-finite parameter coordinate at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamLayout {
    Mixture { k: usize, d: usize, cov_entries: usize },
    Vector { d: usize },
    Loading { d: usize, r: usize },
}

impl ParamLayout {
    pub fn len(&self) -> usize {
        match *self {
            ParamLayout::Mixture { k, d, cov_entries } => k + k * d + k * cov_entries,
            ParamLayout::Vector { d } => d,
            ParamLayout::Loading { d, r } => d * r,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight_range(&self) -> Option<Range<usize>> {
        match *self {
            ParamLayout::Mixture { k, .. } => Some(0..k),
            _ => None,
        }
    }

    pub fn mean_range(&self, z: usize) -> Option<Range<usize>> {
        match *self {
            ParamLayout::Mixture { k, d, .. } if z < k => Some(k + z * d..k + (z + 1) * d),
            _ => None,
        }
    }

    pub fn cov_range(&self, z: usize) -> Option<Range<usize>> {
        match *self {
            ParamLayout::Mixture { k, d, cov_entries } if z < k && cov_entries > 0 => {
                let start = k + k * d + z * cov_entries;
                Some(start..start + cov_entries)
            }
            _ => None,
        }
    }

    /// Coordinate labels in flattening order.
    pub fn labels(&self) -> Vec<String> {
        match *self {
            ParamLayout::Mixture { k, d, cov_entries } => {
                let mut out: Vec<String> = (0..k).map(|z| format!("pi{}", z + 1)).collect();
                for z in 0..k {
                    out.extend((0..d).map(|j| format!("mu{}_{}", z + 1, j + 1)));
                }
                if cov_entries > 0 {
                    for z in 0..k {
                        for a in 0..d {
                            out.extend((a..d).map(|b| format!("sigma{}_{}{}", z + 1, a + 1, b + 1)));
                        }
                    }
                }
                out
            }
            ParamLayout::Vector { d } => (0..d).map(|j| format!("theta{}", j + 1)).collect(),
            ParamLayout::Loading { d, r } => {
                (0..d).flat_map(|a| (0..r).map(move |b| format!("a{}_{}", a + 1, b + 1))).collect()
            }
        }
    }
}

/// A parameter vector together with its layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    layout: ParamLayout,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(layout: ParamLayout, values: Vec<f64>) -> Result<Self, LayoutError> {
        if values.len() != layout.len() {
            return Err(LayoutError::Length { expected: layout.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LayoutError::NonFinite(i));
        }
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> ParamLayout {
        self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same layout, new coordinates.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, LayoutError> {
        Self::new(self.layout, values)
    }

    pub fn norm(&self) -> f64 {
        numerics::norm(&self.values)
    }

    pub fn distance(&self, other: &ParamVector) -> Result<f64, LayoutError> {
        self.require_same_layout(other)?;
        Ok(numerics::euclidean(&self.values, &other.values))
    }

    pub fn require_layout(&self, layout: ParamLayout) -> Result<(), LayoutError> {
        if self.layout == layout {
            Ok(())
        } else {
            Err(LayoutError::Incompatible(format!("expected {layout:?}, got {:?}", self.layout)))
        }
    }

    pub fn require_same_layout(&self, other: &ParamVector) -> Result<(), LayoutError> {
        self.require_layout(other.layout)
    }

    /// Loading matrix view for `Loading` layouts.
    pub fn loading(&self) -> Result<Matrix, LayoutError> {
        match self.layout {
            ParamLayout::Loading { d, r } => {
                Ok(Matrix::new(d, r, self.values.clone()).expect("validated on construction"))
            }
            other => Err(LayoutError::Incompatible(format!("{other:?} has no loading block"))),
        }
    }

    pub fn from_loading(a: &Matrix) -> Self {
        let layout = ParamLayout::Loading { d: a.rows(), r: a.cols() };
        Self { layout, values: a.as_slice().to_vec() }
    }
}

/// Row-major upper triangle of a symmetric matrix.
pub fn pack_upper(m: &Matrix) -> Vec<f64> {
    let d = m.rows();
    (0..d).flat_map(|a| (a..d).map(move |b| (a, b))).map(|(a, b)| m.get(a, b)).collect()
}

pub fn unpack_upper(d: usize, packed: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    let mut it = packed.iter();
    for a in 0..d {
        for b in a..d {
            let v = *it.next().expect("packed triangle too short");
            m.set(a, b, v);
            m.set(b, a, v);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_lengths() {
        assert_eq!(ParamLayout::Mixture { k: 3, d: 2, cov_entries: 3 }.len(), 3 + 6 + 9);
        assert_eq!(ParamLayout::Mixture { k: 2, d: 1, cov_entries: 0 }.len(), 4);
        assert_eq!(ParamLayout::Loading { d: 4, r: 2 }.len(), 8);
        let l = ParamLayout::Mixture { k: 2, d: 2, cov_entries: 3 };
        assert_eq!(l.mean_range(1), Some(4..6));
        assert_eq!(l.cov_range(1), Some(9..12));
        assert_eq!(l.labels().len(), l.len());
    }

    #[test]
    fn rejects_wrong_length_and_nan() {
        let l = ParamLayout::Vector { d: 2 };
        assert!(matches!(ParamVector::new(l, vec![1.0]), Err(LayoutError::Length { expected: 2, got: 1 })));
        assert!(matches!(ParamVector::new(l, vec![1.0, f64::NAN]), Err(LayoutError::NonFinite(1))));
    }

    #[test]
    fn upper_triangle_round_trip() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 5.0], vec![3.0, 5.0, 6.0]]).unwrap();
        assert_eq!(pack_upper(&m), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(unpack_upper(3, &pack_upper(&m)), m);
    }
}

//! Complex scalars, points of `C^d`, sparse multivariate polynomials and
//! polynomial maps. Every value is immutable after construction and all
//! operations are pure, so everything here is freely shareable across threads.
//!
//! Coefficients are double-precision complex numbers; finiteness (no NaN or
//! infinity) is enforced at every construction boundary.

mod eig;
mod poly;

pub use eig::{eigen_decomposition, eigenvalues, EigenDecomposition};
pub use poly::{MultiPoly, PolyMap, TermRecord};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type Cpx = Complex64;

/// Dense complex matrix (Jacobians, affine parts, conjugations).
pub type CMatrix = nalgebra::DMatrix<Cpx>;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum AlgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("non-finite value rejected")]
    NonFinite,
}

pub(crate) fn is_finite_c(c: Cpx) -> bool {
    c.re.is_finite() && c.im.is_finite()
}

/// A point of `C^d` with the length fixed at construction.
///
/// Serialized as a list of `[re, im]` pairs; `serde_json` round-trips `f64`
/// values bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct CVec {
    coords: Vec<Cpx>,
}

impl CVec {
    pub fn new(coords: Vec<Cpx>) -> Result<Self, AlgError> {
        if coords.iter().any(|c| !is_finite_c(*c)) {
            return Err(AlgError::NonFinite);
        }
        Ok(Self { coords })
    }

    /// Construction without the finiteness check, for values produced by
    /// internal arithmetic that is already guarded.
    pub(crate) fn from_raw(coords: Vec<Cpx>) -> Self {
        Self { coords }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            coords: vec![Cpx::new(0.0, 0.0); dim],
        }
    }

    pub fn from_reals(reals: &[f64]) -> Result<Self, AlgError> {
        Self::new(reals.iter().map(|&r| Cpx::new(r, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> Result<Cpx, AlgError> {
        self.coords
            .get(i)
            .copied()
            .ok_or(AlgError::IndexOutOfRange {
                index: i,
                dim: self.coords.len(),
            })
    }

    pub fn as_slice(&self) -> &[Cpx] {
        &self.coords
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Cpx> {
        self.coords.iter()
    }

    /// Euclidean norm of the underlying real `2d`-vector.
    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &CVec) -> Result<CVec, AlgError> {
        self.check_len(other.len())?;
        Ok(CVec::from_raw(
            self.coords
                .iter()
                .zip(other.coords.iter())
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &CVec) -> Result<CVec, AlgError> {
        self.check_len(other.len())?;
        Ok(CVec::from_raw(
            self.coords
                .iter()
                .zip(other.coords.iter())
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn scale(&self, t: Cpx) -> CVec {
        CVec::from_raw(self.coords.iter().map(|c| c * t).collect())
    }

    /// Distance to another point of the same dimension.
    pub fn dist(&self, other: &CVec) -> Result<f64, AlgError> {
        Ok(self.sub(other)?.norm())
    }

    /// Concatenate `(self, other)` into a point of `C^{d1+d2}`.
    pub fn concat(&self, other: &CVec) -> CVec {
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        CVec::from_raw(coords)
    }

    /// Split into a prefix of length `at` and the remainder.
    pub fn split(&self, at: usize) -> Result<(CVec, CVec), AlgError> {
        if at > self.len() {
            return Err(AlgError::IndexOutOfRange {
                index: at,
                dim: self.len(),
            });
        }
        Ok((
            CVec::from_raw(self.coords[..at].to_vec()),
            CVec::from_raw(self.coords[at..].to_vec()),
        ))
    }

    fn check_len(&self, expected: usize) -> Result<(), AlgError> {
        if self.len() != expected {
            Err(AlgError::DimMismatch {
                expected,
                got: self.len(),
            })
        } else {
            Ok(())
        }
    }
}

impl std::ops::Index<usize> for CVec {
    type Output = Cpx;
    fn index(&self, i: usize) -> &Cpx {
        &self.coords[i]
    }
}

impl TryFrom<Vec<[f64; 2]>> for CVec {
    type Error = AlgError;
    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self, AlgError> {
        CVec::new(pairs.iter().map(|p| Cpx::new(p[0], p[1])).collect())
    }
}

impl From<CVec> for Vec<[f64; 2]> {
    fn from(v: CVec) -> Self {
        v.coords.iter().map(|c| [c.re, c.im]).collect()
    }
}

/// Serialize a matrix as `{rows, cols, data}` with row-major data pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                data.push([v.re, v.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix, AlgError> {
        if self.data.len() != self.rows * self.cols {
            return Err(AlgError::DimMismatch {
                expected: self.rows * self.cols,
                got: self.data.len(),
            });
        }
        let mut m = CMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let p = self.data[r * self.cols + c];
                if !p[0].is_finite() || !p[1].is_finite() {
                    return Err(AlgError::NonFinite);
                }
                m[(r, c)] = Cpx::new(p[0], p[1]);
            }
        }
        Ok(m)
    }
}

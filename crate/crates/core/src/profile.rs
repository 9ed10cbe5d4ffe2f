//! Agent state matrices.

use nalgebra::{DMatrix, RowDVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// An `n x d` matrix of agent opinions; row `i` is agent `i`'s state.
///
/// All entries are finite. The shape is fixed once constructed, so a
/// trajectory built from successive profiles keeps `n` and `d` constant.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionProfile {
    values: DMatrix<f64>,
}

impl OpinionProfile {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                expected: "n >= 1 and d >= 1".into(),
                found: format!("{}x{}", values.nrows(), values.ncols()),
            });
        }
        for col in 0..values.ncols() {
            for row in 0..values.nrows() {
                if !values[(row, col)].is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
            }
        }
        Ok(Self { values })
    }

    /// Build from one row per agent. Every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: format!("row {i} of length {d}"),
                found: format!("length {}", r.len()),
            });
        }
        Self::new(DMatrix::from_fn(n, d, |i, k| rows[i][k]))
    }

    /// One-dimensional profile.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(values.len(), 1, values))
    }

    /// Opinions drawn uniformly from the box `[low, high]^d`.
    pub fn uniform(n: usize, d: usize, low: f64, high: f64, rng: &mut RngStream) -> Result<Self> {
        if !(low < high) {
            return Err(crate::error::param("box", format!("need low < high, got [{low}, {high}]")));
        }
        let mut values = DMatrix::zeros(n, d);
        // row-major fill so the draw order does not depend on storage layout
        for i in 0..n {
            for k in 0..d {
                values[(i, k)] = rng.gen_range(low..high);
            }
        }
        Self::new(values)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }

    pub fn get(&self, agent: usize, coord: usize) -> f64 {
        self.values[(agent, coord)]
    }

    pub fn agent(&self, i: usize) -> RowDVector<f64> {
        self.values.row(i).into_owned()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.values.row(i).iter().copied().collect())
            .collect()
    }

    /// Squared Euclidean distance between agents `i` and `j`.
    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        let mut s = 0.0;
        for k in 0..self.d() {
            let diff = self.values[(i, k)] - self.values[(j, k)];
            s += diff * diff;
        }
        s
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist2(i, j).sqrt()
    }

    /// Squared distance between agent `i` here and agent `j` of `other`.
    pub fn dist2_to(&self, i: usize, other: &OpinionProfile, j: usize) -> f64 {
        let mut s = 0.0;
        for k in 0..self.d() {
            let diff = self.values[(i, k)] - other.values[(j, k)];
            s += diff * diff;
        }
        s
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        let n = self.n();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max(self.dist2(i, j));
            }
        }
        best.sqrt()
    }

    /// `||self - other||^2` summed over all agents and coordinates.
    pub fn movement2(&self, other: &OpinionProfile) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok((&self.values - &other.values).norm_squared())
    }

    pub fn movement(&self, other: &OpinionProfile) -> Result<f64> {
        self.movement2(other).map(f64::sqrt)
    }

    /// Per-coordinate `(min, max)` over agents.
    pub fn coordinate_bounds(&self) -> Vec<(f64, f64)> {
        (0..self.d())
            .map(|k| {
                let col = self.values.column(k);
                (col.min(), col.max())
            })
            .collect()
    }

    pub fn is_consensus(&self) -> bool {
        (1..self.n()).all(|i| (0..self.d()).all(|k| self.values[(i, k)] == self.values[(0, k)]))
    }

    pub(crate) fn check_same_shape(&self, other: &OpinionProfile) -> Result<()> {
        if self.n() != other.n() || self.d() != other.d() {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.n(), self.d()),
                found: format!("{}x{}", other.n(), other.d()),
            });
        }
        Ok(())
    }

    pub(crate) fn from_matrix_unchecked(values: DMatrix<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{FpcaError, Result};
use crate::grid::{Curve, Grid};

/// A population (or any collection) of curves sharing one grid, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    grid: Grid,
    values: Vec<f64>,
    strata: Option<Vec<usize>>,
}

impl CurveSet {
    pub fn new(grid: Grid, curves: Vec<Curve>) -> Result<Self> {
        let m = grid.len();
        let mut values = Vec::with_capacity(curves.len() * m);
        for c in &curves {
            grid.check_len(c.len())?;
            values.extend_from_slice(c.values());
        }
        Ok(Self {
            grid,
            values,
            strata: None,
        })
    }

    /// Builds from a flat row-major buffer of `count * m` values.
    pub fn from_row_major(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let m = grid.len();
        if !values.len().is_multiple_of(m) {
            return Err(FpcaError::DimensionMismatch {
                expected: m * (values.len() / m + 1),
                found: values.len(),
            });
        }
        Ok(Self {
            grid,
            values,
            strata: None,
        })
    }

    pub fn with_strata(mut self, strata: Vec<usize>) -> Result<Self> {
        if strata.len() != self.len() {
            return Err(FpcaError::DimensionMismatch {
                expected: self.len(),
                found: strata.len(),
            });
        }
        self.strata = Some(strata);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[k * m..(k + 1) * m]
    }

    pub fn curve(&self, k: usize) -> Curve {
        Curve(self.row(k).to_vec())
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.len())
    }

    pub fn strata(&self) -> Option<&[usize]> {
        self.strata.as_deref()
    }

    pub fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.len() {
            return Err(FpcaError::IndexOutOfRange {
                index: k,
                size: self.len(),
            });
        }
        Ok(())
    }

    /// Every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> CurveSet {
        CurveSet {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            strata: self.strata.clone(),
        }
    }

    /// Sum of all curves.
    pub fn total(&self) -> Curve {
        let mut t = Curve::zeros(self.grid.len());
        for r in self.rows() {
            t.axpy(1.0, r);
        }
        t
    }
}

//! Discretized L²[0,1]: a shared grid with quadrature weights, curves sampled on
//! it, and dense kernels standing in for integral operators.
//!
//! Every inner product in the crate goes through the grid weights, so a kernel
//! `k` acts on a curve `u` as `(Ku)(t_l) = Σ_l' w_l' k(l, l') u(t_l')`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FpcaError, Result};

/// Ordered abscissae in [0,1] with positive quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(FpcaError::InvalidGrid("grid must have at least one point".into()));
        }
        if points.len() != weights.len() {
            return Err(FpcaError::DimensionMismatch {
                expected: points.len(),
                found: weights.len(),
            });
        }
        if points.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(FpcaError::InvalidGrid("grid points must lie in [0,1]".into()));
        }
        if points.windows(2).any(|p| p[0] >= p[1]) {
            return Err(FpcaError::InvalidGrid("grid points must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(FpcaError::InvalidGrid("quadrature weights must be positive".into()));
        }
        Ok(Self { points, weights })
    }

    /// Midpoint rule: `t_l = (l - 1/2)/m`, `w_l = 1/m`.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(FpcaError::InvalidGrid("grid must have at least one point".into()));
        }
        let h = 1.0 / m as f64;
        let points = (0..m).map(|l| (l as f64 + 0.5) * h).collect();
        Self::new(points, vec![h; m])
    }

    /// Riemann weights for arbitrary points: each point carries the distance to
    /// its predecessor (the first one carries `t_1`).
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        let mut prev = 0.0;
        let mut weights = Vec::with_capacity(points.len());
        for &t in &points {
            weights.push(t - prev);
            prev = t;
        }
        // t_1 = 0 would give a zero weight; fall back to equal weights then.
        if weights.iter().any(|w| *w <= 0.0) {
            let m = points.len().max(1) as f64;
            weights = vec![1.0 / m; points.len()];
        }
        Self::new(points, weights)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn check_len(&self, found: usize) -> Result<()> {
        if found != self.len() {
            return Err(FpcaError::DimensionMismatch {
                expected: self.len(),
                found,
            });
        }
        Ok(())
    }

    /// Unchecked weighted dot product of two equally long slices.
    pub(crate) fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }
}

/// Values of one function at the grid points.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Curve(pub Vec<f64>);

impl Curve {
    pub fn zeros(m: usize) -> Self {
        Curve(vec![0.0; m])
    }

    pub fn constant(m: usize, c: f64) -> Self {
        Curve(vec![c; m])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Curve(grid.points().iter().map(|&t| f(t)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, c: f64) -> Curve {
        Curve(self.0.iter().map(|x| c * x).collect())
    }

    pub fn sub(&self, other: &Curve) -> Curve {
        Curve(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Curve) -> Curve {
        Curve(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &[f64]) {
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += c * b;
        }
    }

    pub fn max_abs_diff(&self, other: &Curve) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for Curve {
    fn from(v: Vec<f64>) -> Self {
        Curve(v)
    }
}

/// Dense `m x m` kernel, entry `(l, l')` approximating `γ(t_l, t_l')`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel(pub DMatrix<f64>);

impl Kernel {
    pub fn zeros(m: usize) -> Self {
        Kernel(DMatrix::zeros(m, m))
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let t = grid.points();
        Kernel(DMatrix::from_fn(t.len(), t.len(), |i, j| f(t[i], t[j])))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn scaled(&self, c: f64) -> Kernel {
        Kernel(&self.0 * c)
    }

    pub fn sub(&self, other: &Kernel) -> Kernel {
        Kernel(&self.0 - &other.0)
    }

    /// Plain (unweighted) Frobenius norm of the value matrix. This is the
    /// "Euclidean norm" used when reporting variance matrices of eigenvectors.
    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn symmetrize(&mut self) {
        let n = self.dim();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.0[(i, j)] + self.0[(j, i)]);
                self.0[(i, j)] = avg;
                self.0[(j, i)] = avg;
            }
        }
    }

    /// Sum of the diagonal weighted by the quadrature, i.e. `∫ k(t,t) dt`.
    pub fn weighted_trace(&self, grid: &Grid) -> f64 {
        grid.weights()
            .iter()
            .enumerate()
            .map(|(l, w)| w * self.0[(l, l)])
            .sum()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }
}

pub fn inner_product(u: &Curve, v: &Curve, g: &Grid) -> Result<f64> {
    g.check_len(u.len())?;
    g.check_len(v.len())?;
    Ok(g.dot(&u.0, &v.0))
}

pub fn norm(u: &Curve, g: &Grid) -> Result<f64> {
    Ok(inner_product(u, u, g)?.max(0.0).sqrt())
}

/// Kernel of the rank-one operator `a ⊗ b : u ↦ <a, u> b`.
pub fn tensor(a: &Curve, b: &Curve, g: &Grid) -> Result<Kernel> {
    g.check_len(a.len())?;
    g.check_len(b.len())?;
    let m = g.len();
    Ok(Kernel(DMatrix::from_fn(m, m, |l, lp| a.0[lp] * b.0[l])))
}

/// Applies the integral operator with kernel `k` to `u`.
pub fn apply(k: &Kernel, u: &Curve, g: &Grid) -> Result<Curve> {
    g.check_len(k.dim())?;
    g.check_len(u.len())?;
    let m = g.len();
    let w = g.weights();
    let mut out = vec![0.0; m];
    for (l, o) in out.iter_mut().enumerate() {
        *o = (0..m).map(|lp| k.0[(l, lp)] * w[lp] * u.0[lp]).sum();
    }
    Ok(Curve(out))
}

/// Hilbert-Schmidt norm under the quadrature: `sqrt(Σ w_l w_l' k(l,l')²)`.
pub fn hs_norm(k: &Kernel, g: &Grid) -> Result<f64> {
    g.check_len(k.dim())?;
    let w = g.weights();
    let m = g.len();
    let mut acc = 0.0;
    for j in 0..m {
        for i in 0..m {
            let v = k.0[(i, j)];
            acc += w[i] * w[j] * v * v;
        }
    }
    Ok(acc.sqrt())
}

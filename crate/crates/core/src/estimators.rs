//! Horvitz-Thompson totals and the substitution estimators of the mean curve,
//! the covariance operator and its eigenelements.
//!
//! A [`SampleDraw`] carries the weights `1/π_k`; the population quantities are
//! the same computations with every unit at weight one, so a census reproduces
//! the population model bit for bit.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::curves::CurveSet;
use crate::designs::SampleDraw;
use crate::error::{FpcaError, Result};
use crate::grid::{Curve, Grid, Kernel};

/// Eigenvalues in `(-tol, 0)` are reported as zero; `tol` scales with `max(1, λ_1)`.
pub const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct HtTotals {
    /// `N̂ = Σ_s 1/π_k`
    pub n_hat: f64,
    /// `Σ_s Y_k / π_k`
    pub total_curve: Curve,
    /// `Σ_s Y_k ⊗ Y_k / π_k`
    pub raw_second_moment: Kernel,
}

/// Mean, covariance kernel and the leading `q` eigenpairs.
#[derive(Debug, Clone, PartialEq)]
pub struct FpcaModel {
    pub grid: Grid,
    pub mean: Curve,
    pub kernel: Kernel,
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Curve>,
    /// `N` for a population model, `N̂` for an estimate.
    pub size: f64,
}

impl FpcaModel {
    pub fn q(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The same model keeping only the first `q` components.
    pub fn truncated(&self, q: usize) -> FpcaModel {
        let q = q.min(self.q());
        FpcaModel {
            eigenvalues: self.eigenvalues[..q].to_vec(),
            eigenfunctions: self.eigenfunctions[..q].to_vec(),
            ..self.clone()
        }
    }
}

fn check_sample(curves: &CurveSet, s: &SampleDraw) -> Result<()> {
    if s.indices.len() != s.weights.len() {
        return Err(FpcaError::DimensionMismatch {
            expected: s.indices.len(),
            found: s.weights.len(),
        });
    }
    for &k in &s.indices {
        curves.check_index(k)?;
    }
    Ok(())
}

pub fn ht_total(curves: &CurveSet, s: &SampleDraw) -> Result<Curve> {
    check_sample(curves, s)?;
    let mut total = Curve::zeros(curves.grid().len());
    for (k, w) in s.iter() {
        total.axpy(w, curves.row(k));
    }
    Ok(total)
}

/// `Σ_s w_k z_k z_k^T` for the rows `z_k` of `curves` (optionally shifted by `center`).
fn weighted_gram(curves: &CurveSet, s: &SampleDraw, center: Option<&Curve>) -> DMatrix<f64> {
    let m = curves.grid().len();
    let mut x = DMatrix::<f64>::zeros(s.len(), m);
    for (i, (k, w)) in s.iter().enumerate() {
        let sw = w.sqrt();
        let row = curves.row(k);
        match center {
            Some(c) => {
                for l in 0..m {
                    x[(i, l)] = sw * (row[l] - c.0[l]);
                }
            }
            None => {
                for l in 0..m {
                    x[(i, l)] = sw * row[l];
                }
            }
        }
    }
    x.tr_mul(&x)
}

pub fn ht_totals(curves: &CurveSet, s: &SampleDraw) -> Result<HtTotals> {
    let total_curve = ht_total(curves, s)?;
    Ok(HtTotals {
        n_hat: s.weights.iter().sum(),
        total_curve,
        raw_second_moment: Kernel(weighted_gram(curves, s, None)),
    })
}

pub fn n_hat(s: &SampleDraw) -> f64 {
    s.weights.iter().sum()
}

pub fn mu_hat(curves: &CurveSet, s: &SampleDraw) -> Result<Curve> {
    if s.is_empty() {
        return Err(FpcaError::Degenerate("mean of an empty sample".into()));
    }
    let total = ht_total(curves, s)?;
    Ok(total.scaled(1.0 / n_hat(s)))
}

/// `Γ̂ = (1/N̂) Σ_s Y_k⊗Y_k/π_k − μ̂⊗μ̂`, accumulated around `μ̂` for accuracy.
pub fn gamma_hat(curves: &CurveSet, s: &SampleDraw) -> Result<Kernel> {
    let mu = mu_hat(curves, s)?;
    Ok(gamma_around(curves, s, &mu))
}

fn gamma_around(curves: &CurveSet, s: &SampleDraw, mu: &Curve) -> Kernel {
    let mut k = Kernel(weighted_gram(curves, s, Some(mu)) / n_hat(s));
    k.symmetrize();
    k
}

/// Leading `q` eigenpairs of the integral operator with kernel `k`, with
/// eigenfunctions orthonormal in the grid inner product. The largest-magnitude
/// entry of each eigenfunction is made positive.
pub fn eigen_decompose(k: &Kernel, grid: &Grid, q: usize) -> Result<(Vec<f64>, Vec<Curve>)> {
    let m = grid.len();
    grid.check_len(k.dim())?;
    if q > m {
        return Err(FpcaError::Parameter(format!(
            "cannot retain {q} components on a grid of {m} points"
        )));
    }
    let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let a = DMatrix::from_fn(m, m, |i, j| sw[i] * k.get(i, j) * sw[j]);
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let top = eig.eigenvalues[order[0]];
    let tol = NEGATIVE_EIGENVALUE_TOLERANCE * top.abs().max(1.0);
    let bottom = eig.eigenvalues[order[m - 1]];
    if bottom < -tol {
        return Err(FpcaError::Numerical(format!(
            "covariance kernel has eigenvalue {bottom:e} below -{tol:e}"
        )));
    }

    let mut values = Vec::with_capacity(q);
    let mut functions = Vec::with_capacity(q);
    for &idx in order.iter().take(q) {
        let lambda = eig.eigenvalues[idx];
        values.push(if lambda < 0.0 { 0.0 } else { lambda });
        let z = eig.eigenvectors.column(idx);
        let mut v: Vec<f64> = (0..m).map(|l| z[l] / sw[l]).collect();
        let (mut big, mut big_abs) = (0.0, -1.0);
        for &x in &v {
            if x.abs() > big_abs {
                big_abs = x.abs();
                big = x;
            }
        }
        if big < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        functions.push(Curve(v));
    }
    Ok((values, functions))
}

fn check_q(curves: &CurveSet, q: usize) -> Result<()> {
    let m = curves.grid().len();
    if q > m || q > curves.len() {
        return Err(FpcaError::Parameter(format!(
            "q={q} exceeds grid size {m} or population size {}",
            curves.len()
        )));
    }
    Ok(())
}

/// Substitution estimates `μ̂, Γ̂` and the leading `q` eigenpairs of `Γ̂`.
pub fn sample_fpca(curves: &CurveSet, s: &SampleDraw, q: usize) -> Result<FpcaModel> {
    check_q(curves, q)?;
    if q > s.len() {
        return Err(FpcaError::Parameter(format!(
            "q={q} exceeds sample size {}",
            s.len()
        )));
    }
    let mean = mu_hat(curves, s)?;
    let kernel = gamma_around(curves, s, &mean);
    let (eigenvalues, eigenfunctions) = eigen_decompose(&kernel, curves.grid(), q)?;
    Ok(FpcaModel {
        grid: curves.grid().clone(),
        mean,
        kernel,
        eigenvalues,
        eigenfunctions,
        size: n_hat(s),
    })
}

/// Exact finite-population model.
pub fn population_fpca(curves: &CurveSet, q: usize) -> Result<FpcaModel> {
    check_q(curves, q)?;
    sample_fpca(curves, &SampleDraw::census(curves.len()), q)
}

/// Principal component scores `<y − μ, v_j>`.
pub fn scores(model: &FpcaModel, y: &Curve) -> Result<Vec<f64>> {
    model.grid.check_len(y.len())?;
    let centered = y.sub(&model.mean);
    Ok(model
        .eigenfunctions
        .iter()
        .map(|v| model.grid.dot(&centered.0, &v.0))
        .collect())
}

/// Average squared distance between the centered curves and their projection
/// on the model's eigenfunctions.
pub fn reconstruction_error(curves: &CurveSet, model: &FpcaModel) -> Result<f64> {
    let grid = curves.grid();
    grid.check_len(model.mean.len())?;
    let mut acc = 0.0;
    for row in curves.rows() {
        let mut resid = Curve(row.to_vec()).sub(&model.mean);
        for v in &model.eigenfunctions {
            let c = grid.dot(&resid.0, &v.0);
            resid.axpy(-c, &v.0);
        }
        acc += grid.dot(&resid.0, &resid.0);
    }
    Ok(acc / curves.len() as f64)
}

/// Flips `v` so that `<v, reference> >= 0`.
pub fn align_sign(v: &Curve, reference: &Curve, grid: &Grid) -> Curve {
    if grid.dot(&v.0, &reference.0) < 0.0 {
        v.scaled(-1.0)
    } else {
        v.clone()
    }
}

/// Result file view of a model: arrays keyed by the grid points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FpcaModelRecord {
    pub grid: Vec<f64>,
    pub size: f64,
    pub mean: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Vec<f64>>,
}

impl From<&FpcaModel> for FpcaModelRecord {
    fn from(m: &FpcaModel) -> Self {
        Self {
            grid: m.grid.points().to_vec(),
            size: m.size,
            mean: m.mean.0.clone(),
            eigenvalues: m.eigenvalues.clone(),
            eigenfunctions: m.eigenfunctions.iter().map(|v| v.0.clone()).collect(),
        }
    }
}

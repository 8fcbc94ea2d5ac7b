//! Horvitz-Thompson variance operators and the linearization variances of the
//! FPCA estimators.
//!
//! All double sums have the form `Σ_k Σ_l c_kl z_k ⊗ z_l`. Under stratified SI
//! `c_kl` vanishes across strata and takes one value off the diagonal and one
//! on it inside each stratum, so each stratum contributes
//! `c_off S Sᵀ + (c_diag − c_off) Σ z_k z_kᵀ` with `S = Σ z_k`. That keeps the
//! cost at `O(n m²)` instead of `O(n² m²)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curves::CurveSet;
use crate::designs::{Design, SampleDraw, Stratum};
use crate::error::{FpcaError, Result};
use crate::estimators::FpcaModel;
use crate::grid::Kernel;
use crate::linearize::{estimated_linearized, linearized, LinearizedSet, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    AsymptoticPopulation,
    PluginSample,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarianceValue {
    Kernel(Kernel),
    Scalar(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub target: Target,
    pub value: VarianceValue,
    pub provenance: Provenance,
    /// Set when a scalar estimate came out negative; the value is kept as is.
    pub negative: bool,
}

impl VarianceReport {
    pub fn scalar(&self) -> Option<f64> {
        match self.value {
            VarianceValue::Scalar(v) => Some(v),
            VarianceValue::Kernel(_) => None,
        }
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        match &self.value {
            VarianceValue::Kernel(k) => Some(k),
            VarianceValue::Scalar(_) => None,
        }
    }

    pub fn to_record(&self) -> VarianceReportRecord {
        let (scalar, kernel, frobenius_norm) = match &self.value {
            VarianceValue::Scalar(v) => (Some(*v), None, None),
            VarianceValue::Kernel(k) => (None, Some(k.rows()), Some(k.frobenius_norm())),
        };
        VarianceReportRecord {
            target: self.target.to_string(),
            provenance: self.provenance,
            negative: self.negative,
            scalar,
            frobenius_norm,
            kernel,
        }
    }
}

/// Serialized form of a [`VarianceReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceReportRecord {
    pub target: String,
    pub provenance: Provenance,
    pub negative: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scalar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frobenius_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<Vec<f64>>>,
}

/// `(c_off, c_diag)` for one stratum.
type Coefficients = fn(&Stratum) -> Result<(f64, f64)>;

/// `Δ_kl` for the population double sum.
fn population_coefficients(s: &Stratum) -> Result<(f64, f64)> {
    let pi = s.pi();
    Ok((s.pi_pair() - pi * pi, pi * (1.0 - pi)))
}

/// `Δ_kl / π_kl` for the sample double sum.
fn sample_coefficients(s: &Stratum) -> Result<(f64, f64)> {
    let pi = s.pi();
    let pair = s.pi_pair();
    let off = if pair > 0.0 { (pair - pi * pi) / pair } else { 0.0 };
    Ok((off, 1.0 - pi))
}

/// `Σ_k Σ_l c_kl z_k z_lᵀ` over `units`, where `rows[i]` is `z` for `units[i]`.
fn block_form(
    design: &Design,
    units: &[usize],
    rows: &[&[f64]],
    coefficients: Coefficients,
    sampled: bool,
) -> Result<DMatrix<f64>> {
    let dim = rows.first().map_or(0, |r| r.len());
    let strata = design.strata();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); strata.len()];
    for (i, &k) in units.iter().enumerate() {
        if k >= design.population_size() {
            return Err(FpcaError::IndexOutOfRange {
                index: k,
                size: design.population_size(),
            });
        }
        groups[design.stratum_of(k)].push(i);
    }

    let mut out = DMatrix::<f64>::zeros(dim, dim);
    for (h, members) in groups.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let stratum = &strata[h];
        if sampled && members.len() > 1 && stratum.pi_pair() <= 0.0 {
            return Err(FpcaError::Parameter(format!(
                "stratum {h}: joint inclusion probability is zero for sampled pairs"
            )));
        }
        let (off, diag) = coefficients(stratum)?;
        if off == 0.0 && diag == 0.0 {
            continue;
        }
        let z = DMatrix::from_fn(members.len(), dim, |i, l| rows[members[i]][l]);
        let gram = z.tr_mul(&z);
        out += gram * (diag - off);
        if off != 0.0 {
            let sum = z.row_sum().transpose();
            out += &sum * sum.transpose() * off;
        }
    }
    Ok(out)
}

fn to_kernel(mut m: DMatrix<f64>) -> Kernel {
    m = (&m + m.transpose()) * 0.5;
    Kernel(m)
}

fn check_population(curves: &CurveSet, d: &Design) -> Result<()> {
    if curves.len() != d.population_size() {
        return Err(FpcaError::DimensionMismatch {
            expected: d.population_size(),
            found: curves.len(),
        });
    }
    Ok(())
}

/// Exact design variance of the HT total: `Σ_U Σ_U Δ_kl (Y_k/π_k) ⊗ (Y_l/π_l)`.
pub fn ht_variance_total(curves: &CurveSet, d: &Design) -> Result<Kernel> {
    check_population(curves, d)?;
    let units: Vec<usize> = (0..curves.len()).collect();
    let scaled: Vec<Vec<f64>> = units
        .iter()
        .map(|&k| curves.row(k).iter().map(|y| y / d.pi(k)).collect())
        .collect();
    let rows: Vec<&[f64]> = scaled.iter().map(|r| r.as_slice()).collect();
    Ok(to_kernel(block_form(d, &units, &rows, population_coefficients, false)?))
}

/// Unbiased HT variance estimator `Σ_s Σ_s (Δ_kl/π_kl)(Y_k/π_k) ⊗ (Y_l/π_l)`.
pub fn ht_variance_estimator_total(curves: &CurveSet, s: &SampleDraw, d: &Design) -> Result<Kernel> {
    check_population(curves, d)?;
    for &k in &s.indices {
        curves.check_index(k)?;
    }
    let scaled: Vec<Vec<f64>> = s
        .indices
        .iter()
        .map(|&k| curves.row(k).iter().map(|y| y / d.pi(k)).collect())
        .collect();
    let rows: Vec<&[f64]> = scaled.iter().map(|r| r.as_slice()).collect();
    Ok(to_kernel(block_form(d, &s.indices, &rows, sample_coefficients, true)?))
}

fn report(target: Target, value: DMatrix<f64>, provenance: Provenance) -> VarianceReport {
    match target {
        Target::Lambda(_) => {
            let v = value[(0, 0)];
            VarianceReport {
                target,
                value: VarianceValue::Scalar(v),
                provenance,
                negative: v < 0.0,
            }
        }
        _ => VarianceReport {
            target,
            value: VarianceValue::Kernel(to_kernel(value)),
            provenance,
            negative: false,
        },
    }
}

fn divided_rows(set: &LinearizedSet, d: &Design) -> Vec<Vec<f64>> {
    set.units
        .iter()
        .zip(set.rows())
        .map(|(&k, row)| row.iter().map(|u| u / d.pi(k)).collect())
        .collect()
}

/// HT variance of an already computed set of population linearized variables.
pub fn asymptotic_variance_of(set: &LinearizedSet, d: &Design) -> Result<VarianceReport> {
    let scaled = divided_rows(set, d);
    let rows: Vec<&[f64]> = scaled.iter().map(|r| r.as_slice()).collect();
    let value = block_form(d, &set.units, &rows, population_coefficients, false)?;
    Ok(report(set.target, value, Provenance::AsymptoticPopulation))
}

/// `AV_p = Σ_U Σ_U Δ_kl (u_k/π_k) ⊗ (u_l/π_l)` with exact linearized variables
/// computed from the population model.
pub fn asymptotic_variance(
    curves: &CurveSet,
    d: &Design,
    model: &FpcaModel,
    target: Target,
    r: usize,
) -> Result<VarianceReport> {
    check_population(curves, d)?;
    let set = linearized(curves, model, target, r)?;
    asymptotic_variance_of(&set, d)
}

/// Plug-in estimator of a set of estimated linearized variables.
pub fn variance_estimator_of(set: &LinearizedSet, d: &Design) -> Result<VarianceReport> {
    let scaled = divided_rows(set, d);
    let rows: Vec<&[f64]> = scaled.iter().map(|r| r.as_slice()).collect();
    let value = block_form(d, &set.units, &rows, sample_coefficients, true)?;
    Ok(report(set.target, value, Provenance::PluginSample))
}

/// `V̂_p = Σ_s Σ_s (1/π_kl)(Δ_kl/(π_k π_l)) û_k ⊗ û_l` with `û_k` computed from
/// the sample model (which carries `μ̂`, `λ̂`, `v̂` and `N̂`).
pub fn variance_estimator(
    curves: &CurveSet,
    s: &SampleDraw,
    d: &Design,
    model: &FpcaModel,
    target: Target,
    r: usize,
) -> Result<VarianceReport> {
    check_population(curves, d)?;
    let set = estimated_linearized(curves, s, model, target, r)?;
    variance_estimator_of(&set, d)
}

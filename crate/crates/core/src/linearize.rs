//! Linearized variables: influence functions of the mean, eigenvalues and
//! eigenfunctions evaluated at each unit, and their sample plug-in versions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::curves::CurveSet;
use crate::designs::SampleDraw;
use crate::error::{FpcaError, Result};
use crate::estimators::FpcaModel;
use crate::grid::{tensor, Curve, Kernel};

/// Relative gap below which exact linearization is refused.
pub const EXACT_GAP_THRESHOLD: f64 = 1e-8;
/// Relative gap below which linearization on estimated eigenvalues is refused.
pub const ESTIMATED_GAP_THRESHOLD: f64 = 1e-6;

/// Parameter whose influence function is wanted. Components are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "component", rename_all = "snake_case")]
pub enum Target {
    Mu,
    Lambda(usize),
    Eigenfunction(usize),
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Mu => write!(f, "mu"),
            Target::Lambda(j) => write!(f, "lambda_{}", j + 1),
            Target::Eigenfunction(j) => write!(f, "v_{}", j + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearizedValues {
    Curves(Vec<Curve>),
    Scalars(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSet {
    pub target: Target,
    /// Population index of each value.
    pub units: Vec<usize>,
    pub values: LinearizedValues,
    /// `N` for exact variables, `N̂` for estimated ones.
    pub population_size_used: f64,
}

impl LinearizedSet {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn curves(&self) -> Option<&[Curve]> {
        match &self.values {
            LinearizedValues::Curves(c) => Some(c),
            LinearizedValues::Scalars(_) => None,
        }
    }

    pub fn scalars(&self) -> Option<&[f64]> {
        match &self.values {
            LinearizedValues::Scalars(s) => Some(s),
            LinearizedValues::Curves(_) => None,
        }
    }

    /// Per-unit values as rows (length one for scalar targets).
    pub fn rows(&self) -> Vec<&[f64]> {
        match &self.values {
            LinearizedValues::Curves(c) => c.iter().map(|v| v.values()).collect(),
            LinearizedValues::Scalars(s) => s.iter().map(std::slice::from_ref).collect(),
        }
    }

    /// Dumps `unit,value...` rows for inspection.
    pub fn write_csv<W: Write>(&self, out: W, grid_points: &[f64]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["unit".to_string()];
        match &self.values {
            LinearizedValues::Curves(_) => header.extend(grid_points.iter().map(|t| t.to_string())),
            LinearizedValues::Scalars(_) => header.push("u".into()),
        }
        w.write_record(&header)?;
        for (unit, row) in self.units.iter().zip(self.rows()) {
            let mut rec = vec![unit.to_string()];
            rec.extend(row.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_component(model: &FpcaModel, j: usize) -> Result<()> {
    if j >= model.q() {
        return Err(FpcaError::Parameter(format!(
            "component {} requested but the model retains {}",
            j + 1,
            model.q()
        )));
    }
    Ok(())
}

/// Smallest distance from `λ_j` to the other retained eigenvalues `λ_0..λ_{r-1}`.
fn guard_gap(model: &FpcaModel, j: usize, r: usize, relative: f64) -> Result<()> {
    let lambda = &model.eigenvalues;
    let gap = (0..r)
        .filter(|&l| l != j)
        .map(|l| (lambda[j] - lambda[l]).abs())
        .fold(f64::INFINITY, f64::min);
    let threshold = relative * lambda.first().copied().unwrap_or(0.0);
    if gap < threshold || (gap == 0.0 && r > 1) {
        return Err(FpcaError::SpectralGap {
            component: j + 1,
            gap,
            threshold,
        });
    }
    Ok(())
}

fn linearize_units(
    curves: &CurveSet,
    units: &[usize],
    model: &FpcaModel,
    target: Target,
    r: usize,
    gap_relative: f64,
) -> Result<LinearizedSet> {
    let grid = curves.grid();
    grid.check_len(model.mean.len())?;
    for &k in units {
        curves.check_index(k)?;
    }
    let size = model.size;
    let centered = |k: usize| Curve(curves.row(k).to_vec()).sub(&model.mean);

    let values = match target {
        Target::Mu => LinearizedValues::Curves(
            units.iter().map(|&k| centered(k).scaled(1.0 / size)).collect(),
        ),
        Target::Lambda(j) => {
            check_component(model, j)?;
            guard_gap(model, j, model.q(), gap_relative)?;
            let (lambda, v) = (model.eigenvalues[j], &model.eigenfunctions[j]);
            LinearizedValues::Scalars(
                units
                    .iter()
                    .map(|&k| {
                        let score = grid.dot(&centered(k).0, &v.0);
                        (score * score - lambda) / size
                    })
                    .collect(),
            )
        }
        Target::Eigenfunction(j) => {
            check_component(model, j)?;
            if r > model.q() {
                return Err(FpcaError::Parameter(format!(
                    "rank cutoff {r} exceeds the {} retained components",
                    model.q()
                )));
            }
            guard_gap(model, j, r.max(j + 1), gap_relative)?;
            let lambda = &model.eigenvalues;
            let v = &model.eigenfunctions;
            LinearizedValues::Curves(
                units
                    .iter()
                    .map(|&k| {
                        let c = centered(k);
                        let sj = grid.dot(&c.0, &v[j].0);
                        let mut u = Curve::zeros(grid.len());
                        for l in (0..r).filter(|&l| l != j) {
                            let sl = grid.dot(&c.0, &v[l].0);
                            u.axpy(sj * sl / (lambda[j] - lambda[l]), &v[l].0);
                        }
                        u.scaled(1.0 / size)
                    })
                    .collect(),
            )
        }
    };
    Ok(LinearizedSet {
        target,
        units: units.to_vec(),
        values,
        population_size_used: size,
    })
}

/// `u_k = (Y_k − μ)/N` for every unit.
pub fn linearized_mu(curves: &CurveSet, model: &FpcaModel) -> Result<LinearizedSet> {
    let units: Vec<usize> = (0..curves.len()).collect();
    linearize_units(curves, &units, model, Target::Mu, 0, EXACT_GAP_THRESHOLD)
}

/// `u_k = (<Y_k − μ, v_j>² − λ_j)/N`.
pub fn linearized_lambda(curves: &CurveSet, model: &FpcaModel, j: usize) -> Result<LinearizedSet> {
    let units: Vec<usize> = (0..curves.len()).collect();
    linearize_units(curves, &units, model, Target::Lambda(j), 0, EXACT_GAP_THRESHOLD)
}

/// `u_k = (1/N) Σ_{l≠j, l<r} <Y_k−μ,v_j><Y_k−μ,v_l>/(λ_j − λ_l) v_l`.
pub fn linearized_v(curves: &CurveSet, model: &FpcaModel, j: usize, r: usize) -> Result<LinearizedSet> {
    let units: Vec<usize> = (0..curves.len()).collect();
    linearize_units(curves, &units, model, Target::Eigenfunction(j), r, EXACT_GAP_THRESHOLD)
}

/// Exact linearized variables for any target.
pub fn linearized(curves: &CurveSet, model: &FpcaModel, target: Target, r: usize) -> Result<LinearizedSet> {
    let units: Vec<usize> = (0..curves.len()).collect();
    linearize_units(curves, &units, model, target, r, EXACT_GAP_THRESHOLD)
}

/// Plug-in `û_k` on the sampled units, using a model estimated from the sample.
pub fn estimated_linearized(
    curves: &CurveSet,
    s: &SampleDraw,
    model: &FpcaModel,
    target: Target,
    r: usize,
) -> Result<LinearizedSet> {
    linearize_units(curves, &s.indices, model, target, r, ESTIMATED_GAP_THRESHOLD)
}

/// Influence of unit `k` on the covariance operator:
/// `(1/N)((Y_k − μ)⊗(Y_k − μ) − Γ)`.
pub fn linearized_gamma_unit(curves: &CurveSet, model: &FpcaModel, k: usize) -> Result<Kernel> {
    curves.check_index(k)?;
    let c = Curve(curves.row(k).to_vec()).sub(&model.mean);
    let outer = tensor(&c, &c, curves.grid())?;
    Ok(outer.sub(&model.kernel).scaled(1.0 / model.size))
}

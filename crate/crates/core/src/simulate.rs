//! Monte Carlo study on a stratified population of scaled Brownian paths.
//!
//! The population is generated once; its exact FPCA and asymptotic variances are
//! the truth against which every replication's estimates are scored.
//! Replication `i` draws from its own ChaCha stream (`set_stream(i)`) of the
//! master seed, so results do not depend on thread count or scheduling.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::CurveSet;
use crate::designs::{optimal_allocation, si_design, stratified_design, stratified_from_labels, Design};
use crate::error::{FpcaError, Result};
use crate::estimators::{align_sign, population_fpca, sample_fpca, FpcaModel};
use crate::grid::{Curve, Grid, Kernel};
use crate::linearize::Target;
use crate::variance::{asymptotic_variance, variance_estimator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MeanCurve {
    /// `cos(4πt)`
    #[default]
    Cos4Pi,
    Zero,
}

impl MeanCurve {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            MeanCurve::Cos4Pi => (4.0 * std::f64::consts::PI * t).cos(),
            MeanCurve::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StratumSpec {
    pub size: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub strata: Vec<StratumSpec>,
    /// Number of midpoint grid points.
    pub grid_size: usize,
    #[serde(default)]
    pub mean: MeanCurve,
    /// Multiply the whole curve (mean included) by `σ_h`; when false only the
    /// Brownian fluctuation is scaled.
    #[serde(default = "default_true")]
    pub scale_mean: bool,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl PopulationSpec {
    /// Two strata of 7000 and 3000 paths scaled by 2 and 4 on 100 points.
    pub fn reference(seed: u64) -> Self {
        Self {
            strata: vec![
                StratumSpec { size: 7000, sigma: 2.0 },
                StratumSpec { size: 3000, sigma: 4.0 },
            ],
            grid_size: 100,
            mean: MeanCurve::Cos4Pi,
            scale_mean: true,
            seed,
        }
    }

    pub fn size(&self) -> usize {
        self.strata.iter().map(|s| s.size).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.strata.is_empty() {
            return Err(FpcaError::Config("population needs at least one stratum".into()));
        }
        for (h, s) in self.strata.iter().enumerate() {
            if s.size == 0 {
                return Err(FpcaError::Config(format!("stratum {h} is empty")));
            }
            if !(s.sigma.is_finite() && s.sigma > 0.0) {
                return Err(FpcaError::Config(format!("stratum {h}: sigma must be positive")));
            }
        }
        if self.grid_size == 0 {
            return Err(FpcaError::Config("grid_size must be positive".into()));
        }
        Ok(())
    }
}

/// Discretized Brownian paths plus `mean`, built from independent Gaussian
/// increments over the grid (the path starts at 0 at t = 0).
pub fn brownian_paths<R: Rng + ?Sized>(
    grid: &Grid,
    count: usize,
    mean: MeanCurve,
    rng: &mut R,
) -> Result<CurveSet> {
    if grid.points()[0] <= 0.0 {
        return Err(FpcaError::InvalidGrid(
            "Brownian paths need grid points in (0, 1]".into(),
        ));
    }
    let m = grid.len();
    let steps: Vec<f64> = grid
        .points()
        .iter()
        .scan(0.0, |prev, &t| {
            let dt = t - *prev;
            *prev = t;
            Some(dt.sqrt())
        })
        .collect();
    let mu: Vec<f64> = grid.points().iter().map(|&t| mean.eval(t)).collect();
    let mut values = Vec::with_capacity(count * m);
    for _ in 0..count {
        let mut b = 0.0;
        for l in 0..m {
            let z: f64 = rng.sample(StandardNormal);
            b += steps[l] * z;
            values.push(mu[l] + b);
        }
    }
    CurveSet::from_row_major(grid.clone(), values)
}

/// Generates the stratified population: consecutive blocks of paths, block `h`
/// multiplied by `σ_h`, labelled with its stratum.
pub fn build_population(spec: &PopulationSpec) -> Result<CurveSet> {
    spec.validate()?;
    let grid = Grid::uniform(spec.grid_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = grid.len();
    let mu: Vec<f64> = grid.points().iter().map(|&t| spec.mean.eval(t)).collect();
    let mut values = Vec::with_capacity(spec.size() * m);
    let mut labels = Vec::with_capacity(spec.size());
    for (h, stratum) in spec.strata.iter().enumerate() {
        let paths = brownian_paths(&grid, stratum.size, spec.mean, &mut rng)?;
        for row in paths.rows() {
            for l in 0..m {
                let v = if spec.scale_mean {
                    stratum.sigma * row[l]
                } else {
                    mu[l] + stratum.sigma * (row[l] - mu[l])
                };
                values.push(v);
            }
            labels.push(h);
        }
    }
    CurveSet::from_row_major(grid, values)?.with_strata(labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignConfig {
    Si,
    /// Allocation proportional to `N_h σ_h`.
    StratifiedOptimal,
    StratifiedFixed { allocation: Vec<usize> },
}

impl DesignConfig {
    pub fn label(&self) -> &'static str {
        match self {
            DesignConfig::Si => "si",
            DesignConfig::StratifiedOptimal => "stratified",
            DesignConfig::StratifiedFixed { .. } => "stratified_fixed",
        }
    }

    /// Builds the design for a population generated from `spec` with sample size `n`.
    pub fn build(&self, spec: &PopulationSpec, n: usize) -> Result<Design> {
        match self {
            DesignConfig::Si => si_design(spec.size(), n),
            DesignConfig::StratifiedOptimal => {
                let strata: Vec<(usize, f64)> = spec.strata.iter().map(|s| (s.size, s.sigma)).collect();
                let alloc = optimal_allocation(&strata, n)?;
                let sizes: Vec<(usize, usize)> =
                    spec.strata.iter().zip(alloc).map(|(s, a)| (s.size, a)).collect();
                stratified_design(&sizes)
            }
            DesignConfig::StratifiedFixed { allocation } => {
                if allocation.len() != spec.strata.len() {
                    return Err(FpcaError::Config(format!(
                        "allocation has {} entries for {} strata",
                        allocation.len(),
                        spec.strata.len()
                    )));
                }
                let total: usize = allocation.iter().sum();
                if total != n {
                    return Err(FpcaError::Config(format!(
                        "allocation sums to {total}, sample size is {n}"
                    )));
                }
                let sizes: Vec<(usize, usize)> = spec
                    .strata
                    .iter()
                    .zip(allocation)
                    .map(|(s, &a)| (s.size, a))
                    .collect();
                stratified_design(&sizes)
            }
        }
    }
}

impl DesignConfig {
    /// Builds the design from the population's stratum labels. Optimal
    /// allocation needs one `σ_h` per stratum.
    pub fn build_for(&self, population: &CurveSet, sigmas: Option<&[f64]>, n: usize) -> Result<Design> {
        if let DesignConfig::Si = self {
            return si_design(population.len(), n);
        }
        let labels = population
            .strata()
            .ok_or_else(|| FpcaError::Config("stratified designs need stratum labels".into()))?;
        let h_count = labels.iter().max().map_or(0, |h| h + 1);
        let mut sizes = vec![0usize; h_count];
        for &h in labels {
            sizes[h] += 1;
        }
        let allocation = match self {
            DesignConfig::StratifiedOptimal => {
                let sigmas = sigmas.ok_or_else(|| {
                    FpcaError::Config("optimal allocation needs per-stratum sigmas".into())
                })?;
                if sigmas.len() != h_count {
                    return Err(FpcaError::Config(format!(
                        "{} sigmas given for {h_count} strata",
                        sigmas.len()
                    )));
                }
                let strata: Vec<(usize, f64)> = sizes.iter().copied().zip(sigmas.iter().copied()).collect();
                optimal_allocation(&strata, n)?
            }
            DesignConfig::StratifiedFixed { allocation } => {
                if allocation.iter().sum::<usize>() != n {
                    return Err(FpcaError::Config(format!(
                        "allocation sums to {}, sample size is {n}",
                        allocation.iter().sum::<usize>()
                    )));
                }
                allocation.clone()
            }
            DesignConfig::Si => unreachable!(),
        };
        stratified_from_labels(labels, &allocation)
    }
}

/// Population quantities the replications are scored against.
#[derive(Debug, Clone)]
pub struct Truth {
    pub model: FpcaModel,
    pub av_lambda: f64,
    pub av_v: Kernel,
    pub av_mu: Kernel,
}

/// Exact FPCA with `q` components and the asymptotic variances of `μ̂`, `λ̂_1`
/// and `v̂_1` under `design`.
pub fn compute_truth(population: &CurveSet, design: &Design, q: usize, r: usize) -> Result<Truth> {
    let model = population_fpca(population, q)?;
    truth_for_design(population, design, model, r)
}

/// Same as [`compute_truth`] but reuses an already computed population model.
pub fn truth_for_design(population: &CurveSet, design: &Design, model: FpcaModel, r: usize) -> Result<Truth> {
    let av_lambda = asymptotic_variance(population, design, &model, Target::Lambda(0), r)?
        .scalar()
        .expect("scalar target");
    let av_v = asymptotic_variance(population, design, &model, Target::Eigenfunction(0), r)?
        .kernel()
        .expect("kernel target")
        .clone();
    let av_mu = asymptotic_variance(population, design, &model, Target::Mu, r)?
        .kernel()
        .expect("kernel target")
        .clone();
    Ok(Truth {
        model,
        av_lambda,
        av_v,
        av_mu,
    })
}

/// Estimation errors of one replication's first eigenpair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    /// `(λ_1 − λ̂_1)/λ_1`, signed.
    pub lambda_rel_error: f64,
    /// `‖v_1 − v̂_1‖/‖v_1‖` after aligning the sign of `v̂_1` with `v_1`.
    pub v_rel_error: f64,
    /// `‖μ − μ̂‖²`
    pub mu_sq_error: f64,
}

pub fn error_metrics(truth: &FpcaModel, est: &FpcaModel) -> ErrorRecord {
    let grid = &truth.grid;
    let lambda = truth.eigenvalues[0];
    let v = &truth.eigenfunctions[0];
    let v_hat = align_sign(&est.eigenfunctions[0], v, grid);
    let dv = v.sub(&v_hat);
    let dmu = truth.mean.sub(&est.mean);
    ErrorRecord {
        lambda_rel_error: (lambda - est.eigenvalues[0]) / lambda,
        v_rel_error: grid.dot(&dv.0, &dv.0).sqrt() / grid.dot(&v.0, &v.0).sqrt(),
        mu_sq_error: grid.dot(&dmu.0, &dmu.0),
    }
}

/// `|Var − V̂| / Var`
pub fn scalar_variance_error(empirical: f64, estimate: f64) -> f64 {
    ((empirical - estimate) / empirical).abs()
}

/// `‖Var − V̂‖ / ‖Var‖` in the Frobenius norm.
pub fn kernel_variance_error(empirical: &Kernel, estimate: &Kernel) -> f64 {
    empirical.sub(estimate).frobenius_norm() / empirical.frobenius_norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub lambda_hat: f64,
    pub lambda_rel_error: f64,
    pub v_rel_error: f64,
    pub mu_sq_error: f64,
    pub var_hat_lambda: f64,
    pub var_hat_lambda_negative: bool,
    /// Frobenius norm of `V̂_p(v̂_1)`.
    pub var_hat_v_norm: f64,
    /// `∫ V̂_p(μ̂)(t,t) dt`
    pub var_hat_mu_trace: f64,
    pub lambda_var_error: f64,
    pub v_var_error: f64,
    #[serde(skip)]
    pub v_hat: Curve,
    #[serde(skip)]
    pub mu_hat: Curve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub design: String,
    pub n: usize,
    pub replications: usize,
    pub lambda_1: f64,
    pub empirical_var_lambda: f64,
    pub av_lambda: f64,
    pub var_hat_lambda_quartiles: [f64; 2],
    pub var_hat_lambda_median: f64,
    pub norm_empirical_var_v: f64,
    pub norm_av_v: f64,
    pub var_hat_v_norm_quartiles: [f64; 2],
    pub median_lambda_rel_error: f64,
    pub median_abs_lambda_rel_error: f64,
    pub median_v_rel_error: f64,
    pub mean_mu_sq_error: f64,
    pub mean_lambda_sq_error: f64,
    pub mean_v_sq_error: f64,
    pub empirical_mu_var_trace: f64,
    pub av_mu_trace: f64,
    pub mean_var_hat_mu_trace: f64,
    pub median_lambda_var_error: f64,
    pub median_v_var_error: f64,
}

#[derive(Debug, Clone)]
pub struct McResult {
    pub records: Vec<ReplicationRecord>,
    pub summary: McSummary,
    pub empirical_var_v: Kernel,
}

#[derive(Debug, Clone)]
pub struct McConfig {
    pub replications: usize,
    pub q: usize,
    pub r: usize,
    pub seed: u64,
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Unbiased sample variance (denominator `R − 1`); zero for a single value.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mu = mean(values.iter().copied());
    values.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// Empirical covariance matrix of curves (denominator `R − 1`).
pub fn sample_covariance(curves: &[Curve]) -> Kernel {
    let m = curves.first().map_or(0, |c| c.len());
    if curves.len() < 2 {
        return Kernel::zeros(m);
    }
    let r = curves.len();
    let mut avg = Curve::zeros(m);
    for c in curves {
        avg.axpy(1.0 / r as f64, &c.0);
    }
    let x = DMatrix::from_fn(r, m, |i, l| curves[i].0[l] - avg.0[l]);
    Kernel(x.tr_mul(&x) / (r - 1) as f64)
}

struct Replication {
    record: ReplicationRecord,
    var_hat_v: Kernel,
}

fn replicate(
    population: &CurveSet,
    design: &Design,
    truth: &Truth,
    cfg: &McConfig,
    index: usize,
) -> Result<Replication> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let s = design.draw(&mut rng);
    let est = sample_fpca(population, &s, cfg.q)?;
    let errors = error_metrics(&truth.model, &est);
    let lam = variance_estimator(population, &s, design, &est, Target::Lambda(0), cfg.r)?;
    let vv = variance_estimator(population, &s, design, &est, Target::Eigenfunction(0), cfg.r)?;
    let vm = variance_estimator(population, &s, design, &est, Target::Mu, cfg.r)?;
    let var_hat_v = vv.kernel().expect("kernel target").clone();
    let grid = population.grid();
    Ok(Replication {
        record: ReplicationRecord {
            replication: index,
            lambda_hat: est.eigenvalues[0],
            lambda_rel_error: errors.lambda_rel_error,
            v_rel_error: errors.v_rel_error,
            mu_sq_error: errors.mu_sq_error,
            var_hat_lambda: lam.scalar().expect("scalar target"),
            var_hat_lambda_negative: lam.negative,
            var_hat_v_norm: var_hat_v.frobenius_norm(),
            var_hat_mu_trace: vm.kernel().expect("kernel target").weighted_trace(grid),
            lambda_var_error: f64::NAN,
            v_var_error: f64::NAN,
            v_hat: align_sign(&est.eigenfunctions[0], &truth.model.eigenfunctions[0], grid),
            mu_hat: est.mean,
        },
        var_hat_v,
    })
}

/// Runs `cfg.replications` independent draw-estimate-score cycles.
pub fn run_mc(
    population: &CurveSet,
    design: &Design,
    design_label: &str,
    truth: &Truth,
    cfg: &McConfig,
) -> Result<McResult> {
    if cfg.replications == 0 {
        return Err(FpcaError::Parameter("at least one replication is required".into()));
    }
    if population.len() != design.population_size() {
        return Err(FpcaError::DimensionMismatch {
            expected: design.population_size(),
            found: population.len(),
        });
    }
    let mut reps: Vec<Replication> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            replicate(population, design, truth, cfg, i).map_err(|e| {
                FpcaError::Numerical(format!("replication {i} failed: {e}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let lambdas: Vec<f64> = reps.iter().map(|r| r.record.lambda_hat).collect();
    let empirical_var_lambda = sample_variance(&lambdas);
    let v_hats: Vec<Curve> = reps.iter().map(|r| r.record.v_hat.clone()).collect();
    let empirical_var_v = sample_covariance(&v_hats);
    let mu_hats: Vec<Curve> = reps.iter().map(|r| r.record.mu_hat.clone()).collect();
    let empirical_mu_var_trace = sample_covariance(&mu_hats).weighted_trace(population.grid());

    for rep in &mut reps {
        rep.record.lambda_var_error = scalar_variance_error(empirical_var_lambda, rep.record.var_hat_lambda);
        rep.record.v_var_error = kernel_variance_error(&empirical_var_v, &rep.var_hat_v);
    }
    let records: Vec<ReplicationRecord> = reps.into_iter().map(|r| r.record).collect();
    let summary = summarize(
        &records,
        design_label,
        design.sample_size(),
        truth,
        empirical_var_lambda,
        &empirical_var_v,
        empirical_mu_var_trace,
        population.grid(),
    );
    Ok(McResult {
        records,
        summary,
        empirical_var_v,
    })
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    records: &[ReplicationRecord],
    design_label: &str,
    n: usize,
    truth: &Truth,
    empirical_var_lambda: f64,
    empirical_var_v: &Kernel,
    empirical_mu_var_trace: f64,
    grid: &Grid,
) -> McSummary {
    let col = |f: fn(&ReplicationRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let var_hat_lambda = col(|r| r.var_hat_lambda);
    let var_hat_v = col(|r| r.var_hat_v_norm);
    McSummary {
        design: design_label.to_string(),
        n,
        replications: records.len(),
        lambda_1: truth.model.eigenvalues[0],
        empirical_var_lambda,
        av_lambda: truth.av_lambda,
        var_hat_lambda_quartiles: [quantile(&var_hat_lambda, 0.25), quantile(&var_hat_lambda, 0.75)],
        var_hat_lambda_median: quantile(&var_hat_lambda, 0.5),
        norm_empirical_var_v: empirical_var_v.frobenius_norm(),
        norm_av_v: truth.av_v.frobenius_norm(),
        var_hat_v_norm_quartiles: [quantile(&var_hat_v, 0.25), quantile(&var_hat_v, 0.75)],
        median_lambda_rel_error: quantile(&col(|r| r.lambda_rel_error), 0.5),
        median_abs_lambda_rel_error: quantile(&col(|r| r.lambda_rel_error.abs()), 0.5),
        median_v_rel_error: quantile(&col(|r| r.v_rel_error), 0.5),
        mean_mu_sq_error: mean(records.iter().map(|r| r.mu_sq_error)),
        mean_lambda_sq_error: mean(records.iter().map(|r| r.lambda_rel_error.powi(2))),
        mean_v_sq_error: mean(records.iter().map(|r| r.v_rel_error.powi(2))),
        empirical_mu_var_trace,
        av_mu_trace: truth.av_mu.weighted_trace(grid),
        mean_var_hat_mu_trace: mean(records.iter().map(|r| r.var_hat_mu_trace)),
        median_lambda_var_error: quantile(&col(|r| r.lambda_var_error), 0.5),
        median_v_var_error: quantile(&col(|r| r.v_var_error), 0.5),
    }
}

//! Command-line front end.
//!
//! Settings come from three layers, highest precedence first: command-line
//! flags, the TOML file given by `--config`, built-in defaults. Every random
//! quantity is derived from the single master seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::designs::{si_design, stratified_design, Design, MAX_ENUMERATION_SIZE};
use crate::error::{FpcaError, Result};
use crate::estimators::{population_fpca, sample_fpca, FpcaModelRecord};
use crate::io::{read_curves_file, write_curves_file, write_json, write_rows};
use crate::linearize::Target;
use crate::oracle::{run_suite, toy_population, IdentityCheck, DEFAULT_TOLERANCE};
use crate::simulate::{
    build_population, run_mc, truth_for_design, DesignConfig, McConfig, McSummary, MeanCurve,
    PopulationSpec, ReplicationRecord, StratumSpec,
};
use crate::variance::{variance_estimator, VarianceReportRecord};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "svyfpca", version, about = "Design-based functional PCA under survey sampling")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every random quantity.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for Monte Carlo replications (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the population and write its curves and exact FPCA.
    Generate,
    /// Run the Monte Carlo study for every configured design and sample size.
    RunMc {
        /// Read the population from a curve CSV instead of generating it.
        #[arg(long)]
        population: Option<PathBuf>,
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Check the Horvitz-Thompson identities by enumerating a small design.
    Oracle,
    /// Estimate the FPCA and its variances from one sample of a curve CSV.
    Fpca {
        #[arg(long)]
        curves: Option<PathBuf>,
        /// Sample size.
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Retained components.
    pub q: Option<usize>,
    /// Rank cutoff of the eigenfunction influence sum.
    pub r: Option<usize>,
    pub replications: Option<usize>,
    pub sample_sizes: Option<Vec<usize>>,
    pub designs: Option<Vec<DesignConfig>>,
    pub population: Option<PopulationConfig>,
    /// Curve CSV used instead of a generated population.
    pub population_file: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub fpca: FpcaConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub strata: Vec<StratumSpec>,
    pub grid_size: usize,
    #[serde(default)]
    pub mean: MeanCurve,
    #[serde(default = "default_true")]
    pub scale_mean: bool,
}

fn default_true() -> bool {
    true
}

impl Default for PopulationConfig {
    fn default() -> Self {
        let r = PopulationSpec::reference(0);
        Self {
            strata: r.strata,
            grid_size: r.grid_size,
            mean: r.mean,
            scale_mean: r.scale_mean,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_oracle_tolerance")]
    pub oracle: f64,
}

fn default_oracle_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            oracle: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleDesign {
    Si { n: usize },
    /// `[N_h, n_h]` per stratum.
    Stratified { strata: Vec<[usize; 2]> },
}

impl OracleDesign {
    /// Builds the design; SI designs use `si_size` as the population size.
    fn build(&self, si_size: usize) -> Result<Design> {
        match self {
            OracleDesign::Si { n } => si_design(si_size, *n),
            OracleDesign::Stratified { strata } => {
                let s: Vec<(usize, usize)> = strata.iter().map(|&[a, b]| (a, b)).collect();
                stratified_design(&s)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Population size for SI designs; stratified designs use the stratum sizes.
    #[serde(default = "default_oracle_size")]
    pub population_size: usize,
    #[serde(default = "default_oracle_grid")]
    pub grid_size: usize,
    #[serde(default = "default_oracle_designs")]
    pub designs: Vec<OracleDesign>,
}

fn default_oracle_size() -> usize {
    6
}

fn default_oracle_grid() -> usize {
    3
}

fn default_oracle_designs() -> Vec<OracleDesign> {
    vec![
        OracleDesign::Si { n: 3 },
        OracleDesign::Stratified {
            strata: vec![[3, 1], [3, 2]],
        },
        OracleDesign::Si { n: 6 },
    ]
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            population_size: default_oracle_size(),
            grid_size: default_oracle_grid(),
            designs: default_oracle_designs(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpcaConfig {
    pub curves: Option<PathBuf>,
    pub n: Option<usize>,
    pub design: Option<DesignConfig>,
    /// Per-stratum dispersion for optimal allocation.
    pub sigmas: Option<Vec<f64>>,
    /// Explicit sample (0-based unit indices); drawn from the seed when absent.
    pub sample: Option<Vec<usize>>,
    /// Components whose variances are reported.
    pub components: Option<usize>,
}

/// Fully resolved settings, validated before any computation.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub q: usize,
    pub r: usize,
    pub replications: usize,
    pub sample_sizes: Vec<usize>,
    pub designs: Vec<DesignConfig>,
    pub population: PopulationConfig,
    pub population_file: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub oracle: OracleConfig,
    pub fpca: FpcaConfig,
}

impl Settings {
    pub fn resolve(cli: &Cli, file: RunConfig) -> Result<Self> {
        let q = file.q.unwrap_or(5);
        let mut settings = Settings {
            seed: cli.seed.or(file.seed).unwrap_or(1),
            out: cli.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            threads: cli.threads.or(file.threads),
            q,
            r: file.r.unwrap_or(q),
            replications: file.replications.unwrap_or(500),
            sample_sizes: file.sample_sizes.unwrap_or_else(|| vec![100, 1000]),
            designs: file
                .designs
                .unwrap_or_else(|| vec![DesignConfig::Si, DesignConfig::StratifiedOptimal]),
            population: file.population.unwrap_or_default(),
            population_file: file.population_file,
            tolerances: file.tolerances,
            oracle: file.oracle,
            fpca: file.fpca,
        };
        match &cli.command {
            Command::RunMc {
                population,
                replications,
            } => {
                if population.is_some() {
                    settings.population_file = population.clone();
                }
                if let Some(r) = replications {
                    settings.replications = *r;
                }
            }
            Command::Fpca { curves, n } => {
                if curves.is_some() {
                    settings.fpca.curves = curves.clone();
                }
                if n.is_some() {
                    settings.fpca.n = *n;
                }
            }
            Command::Generate | Command::Oracle => {}
        }
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FpcaError::Config(m));
        if self.q == 0 {
            return bad("q must be at least 1".into());
        }
        if self.r == 0 {
            return bad("r must be at least 1".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if self.sample_sizes.is_empty() || self.designs.is_empty() {
            return bad("at least one design and one sample size are required".into());
        }
        if !(self.tolerances.oracle.is_finite() && self.tolerances.oracle > 0.0) {
            return bad("oracle tolerance must be positive".into());
        }
        self.population_spec().validate()?;
        if self.population_file.is_none() {
            let spec = self.population_spec();
            for d in &self.designs {
                for &n in &self.sample_sizes {
                    d.build(&spec, n)?;
                }
            }
        }
        if self.oracle.grid_size == 0 {
            return bad("oracle grid_size must be positive".into());
        }
        for d in &self.oracle.designs {
            let size = d.build(self.oracle.population_size)?.population_size();
            if size > MAX_ENUMERATION_SIZE {
                return Err(FpcaError::EnumerationTooLarge(size));
            }
        }
        if self.fpca.components == Some(0) {
            return bad("fpca components must be at least 1".into());
        }
        Ok(())
    }

    pub fn population_spec(&self) -> PopulationSpec {
        PopulationSpec {
            strata: self.population.strata.clone(),
            grid_size: self.population.grid_size,
            mean: self.population.mean,
            scale_mean: self.population.scale_mean,
            seed: derive_seed(self.seed, "population"),
        }
    }
}

/// Deterministic sub-seed for a named purpose (FNV-1a of the tag mixed with
/// the master seed through SplitMix64).
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| FpcaError::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Runs the command. `Ok(false)` means the command completed but a check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let file = load_config(cli.config.as_deref())?;
    let settings = Settings::resolve(cli, file)?;
    let work = || match &cli.command {
        Command::Generate => cmd_generate(&settings).map(|_| true),
        Command::RunMc { .. } => cmd_run_mc(&settings).map(|_| true),
        Command::Oracle => cmd_oracle(&settings),
        Command::Fpca { .. } => cmd_fpca(&settings).map(|_| true),
    };
    match settings.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| FpcaError::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

#[derive(Debug, Serialize)]
struct TruthFile {
    schema_version: u32,
    seed: u64,
    population: PopulationSpec,
    q: usize,
    model: FpcaModelRecord,
}

pub fn cmd_generate(s: &Settings) -> Result<()> {
    let spec = s.population_spec();
    let population = build_population(&spec)?;
    let model = population_fpca(&population, s.q)?;
    write_curves_file(&s.out.join("population.csv"), &population)?;
    write_json(
        &s.out.join("truth.json"),
        &TruthFile {
            schema_version: SCHEMA_VERSION,
            seed: s.seed,
            population: spec,
            q: s.q,
            model: FpcaModelRecord::from(&model),
        },
    )?;
    println!(
        "wrote {} curves on {} points to {}",
        population.len(),
        population.grid().len(),
        s.out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct McRow<'a> {
    design: &'a str,
    n: usize,
    replication: usize,
    lambda_hat: f64,
    lambda_rel_error: f64,
    v_rel_error: f64,
    mu_sq_error: f64,
    var_hat_lambda: f64,
    var_hat_lambda_negative: bool,
    var_hat_v_norm: f64,
    var_hat_mu_trace: f64,
    lambda_var_error: f64,
    v_var_error: f64,
}

impl<'a> McRow<'a> {
    fn new(design: &'a str, n: usize, r: &ReplicationRecord) -> Self {
        Self {
            design,
            n,
            replication: r.replication,
            lambda_hat: r.lambda_hat,
            lambda_rel_error: r.lambda_rel_error,
            v_rel_error: r.v_rel_error,
            mu_sq_error: r.mu_sq_error,
            var_hat_lambda: r.var_hat_lambda,
            var_hat_lambda_negative: r.var_hat_lambda_negative,
            var_hat_v_norm: r.var_hat_v_norm,
            var_hat_mu_trace: r.var_hat_mu_trace,
            lambda_var_error: r.lambda_var_error,
            v_var_error: r.v_var_error,
        }
    }
}

#[derive(Debug, Serialize)]
struct FigureRow<'a> {
    design: &'a str,
    n: usize,
    replication: usize,
    value: f64,
}

#[derive(Debug, Serialize)]
struct SummaryFile {
    schema_version: u32,
    seed: u64,
    population: PopulationSource,
    q: usize,
    r: usize,
    replications: usize,
    cells: Vec<McSummary>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
enum PopulationSource {
    Generated(PopulationSpec),
    File { path: PathBuf, size: usize, grid_size: usize },
}

type Panel = (&'static str, fn(&ReplicationRecord) -> f64);

const FIGURE_PANELS: [Panel; 4] = [
    ("lambda_error", |r| r.lambda_rel_error),
    ("v_error", |r| r.v_rel_error),
    ("lambda_var_error", |r| r.lambda_var_error),
    ("v_var_error", |r| r.v_var_error),
];

pub fn cmd_run_mc(s: &Settings) -> Result<()> {
    let spec = s.population_spec();
    let (population, source) = match &s.population_file {
        Some(path) => {
            let p = read_curves_file(path)?;
            let src = PopulationSource::File {
                path: path.clone(),
                size: p.len(),
                grid_size: p.grid().len(),
            };
            (p, src)
        }
        None => (build_population(&spec)?, PopulationSource::Generated(spec.clone())),
    };
    let sigmas: Vec<f64> = s.population.strata.iter().map(|h| h.sigma).collect();
    let mut cells = Vec::new();
    for d in &s.designs {
        for &n in &s.sample_sizes {
            let design = match &s.population_file {
                Some(_) => d.build_for(&population, Some(&sigmas), n)?,
                None => d.build(&spec, n)?,
            };
            cells.push((d.label(), n, design));
        }
    }

    let model = population_fpca(&population, s.q)?;
    let mut rows = Vec::new();
    let mut panels: Vec<Vec<FigureRow>> = FIGURE_PANELS.iter().map(|_| Vec::new()).collect();
    let mut summaries = Vec::new();
    let mut results = Vec::new();
    for (label, n, design) in &cells {
        let truth = truth_for_design(&population, design, model.clone(), s.r)?;
        let cfg = McConfig {
            replications: s.replications,
            q: s.q,
            r: s.r,
            seed: derive_seed(s.seed, &format!("mc/{label}/{n}")),
        };
        let res = run_mc(&population, design, label, &truth, &cfg)
            .map_err(|e| FpcaError::Numerical(format!("design {label}, n = {n}: {e}")))?;
        results.push((*label, *n, res));
    }
    for (label, n, res) in &results {
        for rec in &res.records {
            rows.push(McRow::new(label, *n, rec));
            for (panel, (_, f)) in panels.iter_mut().zip(FIGURE_PANELS.iter()) {
                panel.push(FigureRow {
                    design: label,
                    n: *n,
                    replication: rec.replication,
                    value: f(rec),
                });
            }
        }
        summaries.push(res.summary.clone());
    }

    write_rows(&s.out.join("mc_records.csv"), &rows)?;
    for (panel, (name, _)) in panels.iter().zip(FIGURE_PANELS.iter()) {
        write_rows(&s.out.join("figure_data").join(format!("{name}.csv")), panel)?;
    }
    print!("{}", summary_table(&summaries));
    write_json(
        &s.out.join("summary.json"),
        &SummaryFile {
            schema_version: SCHEMA_VERSION,
            seed: s.seed,
            population: source,
            q: s.q,
            r: s.r,
            replications: s.replications,
            cells: summaries,
        },
    )?;
    Ok(())
}

/// Human-readable table; negative variance estimates are shown as zero here
/// only, the files keep the raw values.
fn summary_table(cells: &[McSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>6} {:>10} {:>10} {:>23} {:>10} {:>10} {:>23} {:>9}",
        "design", "n", "Var(l1)", "AV(l1)", "Vhat(l1) IQR", "|Var(v1)|", "|AV(v1)|", "|Vhat(v1)| IQR", "med err v"
    );
    for c in cells {
        let q = c.var_hat_lambda_quartiles.map(|x| x.max(0.0));
        let qv = c.var_hat_v_norm_quartiles;
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>10.4} {:>10.4} {:>23} {:>10.4} {:>10.4} {:>23} {:>8.2}%",
            c.design,
            c.n,
            c.empirical_var_lambda,
            c.av_lambda,
            format!("[{:.4}; {:.4}]", q[0], q[1]),
            c.norm_empirical_var_v,
            c.norm_av_v,
            format!("[{:.4}; {:.4}]", qv[0], qv[1]),
            100.0 * c.median_v_rel_error
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct OracleReport {
    design: OracleDesign,
    checks: Vec<IdentityCheck>,
}

/// Returns whether every identity passed.
pub fn cmd_oracle(s: &Settings) -> Result<bool> {
    let tol = s.tolerances.oracle;
    let mut all = true;
    let mut reports = Vec::new();
    for (i, od) in s.oracle.designs.iter().enumerate() {
        let design = od.build(s.oracle.population_size)?;
        let size = design.population_size();
        let pop = toy_population(size, s.oracle.grid_size, derive_seed(s.seed, &format!("oracle/{i}")))?;
        let checks = run_suite(&pop, &design, tol)?;
        println!("{}", describe_oracle_design(od, size));
        for c in &checks {
            let status = match (&c.skipped, c.passed) {
                (Some(_), _) => "SKIP",
                (None, true) => "PASS",
                (None, false) => "FAIL",
            };
            let note = c.skipped.as_deref().map(|w| format!(" ({w})")).unwrap_or_default();
            println!("  [{status}] {:<48} err={:.3e} tol={:.1e}{note}", c.name, c.error, c.tolerance);
            all &= c.passed;
        }
        reports.push(OracleReport {
            design: od.clone(),
            checks,
        });
    }
    write_json(&s.out.join("oracle.json"), &reports)?;
    println!("{}", if all { "all identities hold" } else { "some identities FAILED" });
    Ok(all)
}

fn describe_oracle_design(d: &OracleDesign, size: usize) -> String {
    match d {
        OracleDesign::Si { n } => format!("SI N={size}, n={n}"),
        OracleDesign::Stratified { strata } => {
            let parts: Vec<String> = strata.iter().map(|[a, b]| format!("({a},{b})")).collect();
            format!("stratified {}", parts.join(","))
        }
    }
}

#[derive(Debug, Serialize)]
struct FpcaFile {
    schema_version: u32,
    seed: u64,
    design: DesignConfig,
    population_size: usize,
    sample: Vec<usize>,
    model: FpcaModelRecord,
    variance_estimates: Vec<VarianceReportRecord>,
    /// Targets whose variance could not be computed, with the reason.
    refused: Vec<(String, String)>,
}

pub fn cmd_fpca(s: &Settings) -> Result<()> {
    let f = &s.fpca;
    let path = f
        .curves
        .as_ref()
        .ok_or_else(|| FpcaError::Config("fpca needs a curve file (--curves)".into()))?;
    let curves = read_curves_file(path)?;
    let design_cfg = f.design.clone().unwrap_or(DesignConfig::Si);
    let n = match (&f.sample, f.n) {
        (_, Some(n)) => n,
        (Some(sample), None) => sample.len(),
        (None, None) => return Err(FpcaError::Config("fpca needs a sample size (--n)".into())),
    };
    let design = design_cfg.build_for(&curves, f.sigmas.as_deref(), n)?;
    let draw = match &f.sample {
        Some(units) => {
            let mut units = units.clone();
            units.sort_unstable();
            check_sample(&design, &units)?;
            design.sample_from(&units)?
        }
        None => design.draw(&mut ChaCha8Rng::seed_from_u64(derive_seed(s.seed, "fpca"))),
    };
    let model = sample_fpca(&curves, &draw, s.q)?;
    let components = f.components.unwrap_or(1).min(model.q());
    let mut targets = vec![Target::Mu];
    for j in 0..components {
        targets.push(Target::Lambda(j));
        targets.push(Target::Eigenfunction(j));
    }
    let mut estimates = Vec::new();
    let mut refused = Vec::new();
    for t in targets {
        match variance_estimator(&curves, &draw, &design, &model, t, s.r.max(components)) {
            Ok(rep) => estimates.push(rep.to_record()),
            Err(e) => refused.push((t.to_string(), e.to_string())),
        }
    }
    for e in &estimates {
        match (e.scalar, e.frobenius_norm) {
            (Some(v), _) => println!("V({}) = {:.6}{}", e.target, v.max(0.0), if e.negative { " (negative estimate)" } else { "" }),
            (None, Some(norm)) => println!("|V({})| = {norm:.6}", e.target),
            _ => {}
        }
    }
    for (t, why) in &refused {
        eprintln!("warning: no variance for {t}: {why}");
    }
    write_json(
        &s.out.join("fpca.json"),
        &FpcaFile {
            schema_version: SCHEMA_VERSION,
            seed: s.seed,
            design: design_cfg,
            population_size: curves.len(),
            sample: draw.indices.clone(),
            model: FpcaModelRecord::from(&model),
            variance_estimates: estimates,
            refused,
        },
    )
}

/// A given sample must respect the design's per-stratum sizes.
fn check_sample(design: &Design, units: &[usize]) -> Result<()> {
    let mut counts = vec![0usize; design.strata().len()];
    for w in units.windows(2) {
        if w[0] == w[1] {
            return Err(FpcaError::Config(format!("unit {} sampled twice", w[0])));
        }
    }
    for &k in units {
        if k >= design.population_size() {
            return Err(FpcaError::IndexOutOfRange {
                index: k,
                size: design.population_size(),
            });
        }
        counts[design.stratum_of(k)] += 1;
    }
    for (h, (c, st)) in counts.iter().zip(design.strata()).enumerate() {
        if *c != st.sample_size {
            return Err(FpcaError::Config(format!(
                "stratum {h}: sample has {c} units, design requires {}",
                st.sample_size
            )));
        }
    }
    Ok(())
}

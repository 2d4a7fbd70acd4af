//! Batch command-line front end: run configuration, source construction and
//! the subcommands. The binary is a thin wrapper around [`run`].

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::audit::{run_audit, AuditConfig, AuditInput, AuditMode, AuditReport, FeedSource};
use crate::error::{Error, Result};
use crate::experiments::{
    classify_distributions, cost_of_auditing, proposition2_construction, run_fpr_experiment, run_heatmap,
    Classification, CostOfAuditingResult, CostSpec, FprTable, HeatmapGrid, HeatmapSpec, Prop2Report, Prop2Spec,
    DEFAULT_FEASIBILITY,
};
use crate::family::{FamilyDescriptor, Feed, ModelFamily, ParameterVector, RegularityReport};
use crate::rng::{self, derive_seed};
use crate::sim::{
    gaussian_pool_baseline, generate_inputs, mixed_pool_source, parametric_filter_source, uniform_baseline_source,
    InjectedSpec, InputSpec, MixedPoolSource, ParametricFilterPolicy, ParametricFilterSource, UniformBaselineSource,
};
use crate::subprocess::{serve, SubprocessSource, DEFAULT_TIMEOUT};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Stream labels mixed into the run seed.
const FILTER_STREAM: u64 = 1;
const BASELINE_STREAM: u64 = 2;
const POOL_STREAM: u64 = 3;
const INPUT_STREAM: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

/// Everything a run can be configured with. Every section is optional;
/// experiment sections fall back to their defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub family: Option<FamilyDescriptor>,
    pub audit: Option<AuditSection>,
    pub filter: Option<SourceSpec>,
    pub baseline: Option<SourceSpec>,
    pub heatmap: Option<HeatmapSpec>,
    pub fpr: Option<FprSpec>,
    pub cost: Option<CostSpec>,
    pub prop2: Option<Prop2Spec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    pub alpha: f64,
    #[serde(default = "AuditSection::default_m")]
    pub m: usize,
    #[serde(default = "AuditSection::default_n")]
    pub n: usize,
    #[serde(default)]
    pub mode: AuditMode,
    #[serde(default)]
    pub inputs: InputSpec,
}

impl AuditSection {
    fn default_m() -> usize {
        30
    }

    fn default_n() -> usize {
        1
    }
}

/// How a feed source is realized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceSpec {
    /// i.i.d. draws from the run family at `theta`.
    Parametric { theta: Vec<f64>, seed: Option<u64> },
    /// Uniform draws from a Gaussian content pool.
    Pool {
        #[serde(flatten)]
        pool: PoolSpec,
        seed: Option<u64>,
    },
    /// Pool draws with a fraction taken from the injected pool.
    Mixed {
        #[serde(flatten)]
        pool: PoolSpec,
        injected_fraction: f64,
        seed: Option<u64>,
    },
    /// An external program speaking the line protocol.
    Subprocess {
        command: Vec<String>,
        timeout_secs: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSpec {
    #[serde(default)]
    pub mean: f64,
    #[serde(default = "PoolSpec::default_variance")]
    pub variance: f64,
    #[serde(default = "PoolSpec::default_size")]
    pub pool_size: usize,
    pub injected: Option<InjectedSpec>,
}

impl PoolSpec {
    fn default_variance() -> f64 {
        1.0
    }

    fn default_size() -> usize {
        100_000
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FprSpec {
    pub theta0: Vec<f64>,
    pub m_values: Vec<usize>,
    pub alpha: f64,
    pub trials: usize,
}

impl Default for FprSpec {
    fn default() -> Self {
        Self {
            theta0: vec![0.0, 1.0],
            m_values: vec![30, 100, 300, 1000],
            alpha: 0.01,
            trials: 10_000,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn family(&self) -> Result<ModelFamily> {
        match &self.family {
            Some(desc) => ModelFamily::from_descriptor(desc),
            None => Ok(ModelFamily::gaussian_mean_var()),
        }
    }

    /// Checks everything that can be checked without launching a source.
    pub fn validate_for_audit(&self) -> Result<()> {
        let family = self.family()?;
        let audit = self
            .audit
            .as_ref()
            .ok_or_else(|| Error::Config("missing [audit] section".into()))?;
        if !(audit.alpha > 0.0 && audit.alpha < 1.0) {
            return Err(Error::Probability(audit.alpha));
        }
        if audit.m == 0 || audit.n == 0 {
            return Err(Error::Config("audit.m and audit.n must be at least 1".into()));
        }
        for (role, spec) in [("filter", &self.filter), ("baseline", &self.baseline)] {
            let spec = spec
                .as_ref()
                .ok_or_else(|| Error::Config(format!("missing [{role}] section")))?;
            spec.validate(&family)
                .map_err(|e| Error::Config(format!("[{role}]: {e}")))?;
        }
        Ok(())
    }
}

impl SourceSpec {
    fn validate(&self, family: &ModelFamily) -> Result<()> {
        match self {
            SourceSpec::Parametric { theta, .. } => family.check_parameter(theta),
            SourceSpec::Pool { pool, .. } | SourceSpec::Mixed { pool, .. } => {
                if pool.pool_size == 0 {
                    return Err(Error::Config("pool_size must be at least 1".into()));
                }
                if let SourceSpec::Mixed { injected_fraction, .. } = self {
                    if !(0.0..=1.0).contains(injected_fraction) {
                        return Err(Error::Config(format!(
                            "injected_fraction {injected_fraction} outside [0, 1]"
                        )));
                    }
                }
                Ok(())
            }
            SourceSpec::Subprocess { command, timeout_secs } => {
                if command.is_empty() {
                    return Err(Error::Config("subprocess command is empty".into()));
                }
                if let Some(t) = timeout_secs {
                    if !(t.is_finite() && *t > 0.0) {
                        return Err(Error::Config(format!("timeout_secs {t} must be positive")));
                    }
                }
                Ok(())
            }
        }
    }
}

/// A configured source. In-process variants answer any requested length.
pub enum BuiltSource {
    Parametric(ParametricFilterSource),
    Pool(UniformBaselineSource),
    Mixed(MixedPoolSource),
    Subprocess(SubprocessSource),
}

impl BuiltSource {
    /// Feed of length `m` for `input`; not available for subprocess sources,
    /// whose length is fixed at launch.
    pub fn feed_for(&mut self, input: &AuditInput, m: usize) -> std::result::Result<Feed, String> {
        match self {
            BuiltSource::Parametric(s) => s.feed_for(input, m).map_err(|e| e.to_string()),
            BuiltSource::Pool(s) => Ok(s.feed_for(input, m)),
            BuiltSource::Mixed(s) => Ok(s.feed_for(input, m)),
            BuiltSource::Subprocess(s) => s.query(input),
        }
    }
}

impl FeedSource for BuiltSource {
    fn name(&self) -> &str {
        match self {
            BuiltSource::Parametric(s) => s.name(),
            BuiltSource::Pool(s) => s.name(),
            BuiltSource::Mixed(s) => s.name(),
            BuiltSource::Subprocess(s) => s.name(),
        }
    }

    fn query(&mut self, input: &AuditInput) -> std::result::Result<Feed, String> {
        match self {
            BuiltSource::Parametric(s) => s.query(input),
            BuiltSource::Pool(s) => s.query(input),
            BuiltSource::Mixed(s) => s.query(input),
            BuiltSource::Subprocess(s) => s.query(input),
        }
    }
}

/// Builds the source for `role` ("filter" or "baseline"). In-process sources
/// default to a stream derived from the run seed and the role.
pub fn build_source(
    spec: &SourceSpec,
    role: &str,
    family: &ModelFamily,
    m: usize,
    run_seed: u64,
) -> Result<BuiltSource> {
    let stream = if role == "filter" {
        FILTER_STREAM
    } else {
        BASELINE_STREAM
    };
    let default_seed = derive_seed(run_seed, stream);
    let pools = |pool: &PoolSpec| {
        let mut r = rng::seeded(derive_seed(run_seed, POOL_STREAM));
        gaussian_pool_baseline(pool.mean, pool.variance, pool.pool_size, pool.injected, &mut r)
    };
    Ok(match spec {
        SourceSpec::Parametric { theta, seed } => {
            let policy = ParametricFilterPolicy::new(family.clone(), theta.clone())?;
            BuiltSource::Parametric(parametric_filter_source(policy, m, seed.unwrap_or(default_seed))?.with_name(role))
        }
        SourceSpec::Pool { pool, seed } => {
            BuiltSource::Pool(uniform_baseline_source(pools(pool)?, m, seed.unwrap_or(default_seed))?)
        }
        SourceSpec::Mixed {
            pool,
            injected_fraction,
            seed,
        } => BuiltSource::Mixed(mixed_pool_source(
            pools(pool)?,
            *injected_fraction,
            m,
            seed.unwrap_or(default_seed),
        )?),
        SourceSpec::Subprocess { command, timeout_secs } => {
            let timeout = timeout_secs.map_or(DEFAULT_TIMEOUT, Duration::from_secs_f64);
            BuiltSource::Subprocess(SubprocessSource::spawn(role, command, m, timeout)?)
        }
    })
}

#[derive(Debug, Parser)]
#[command(
    name = "feedaudit",
    version,
    about = "Audit feed-filtering algorithms against a user-driven baseline"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Format of the summary printed on standard output.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Audit a filter against a baseline; exits 0 on PASS, 1 on FAIL, 2 on error.
    Audit,
    /// Failure rates of Gaussian filter policies against the baseline.
    Heatmap,
    /// False-positive rate of the audit across feed lengths.
    Fpr,
    /// Cost of auditing under a distance-based revenue function.
    Cost,
    /// Zero-cost construction for mean-only rewards.
    Prop2,
    /// Spot-check the regularity conditions of a family.
    ValidateFamily {
        /// Family descriptor as JSON text or a path to a JSON file; defaults
        /// to the configured family.
        #[arg(long)]
        family: Option<String>,
    },
    /// Serve a configured source over the line protocol on stdin/stdout.
    Source {
        /// Which configured source to serve.
        #[arg(long, value_parser = ["filter", "baseline"], default_value = "filter")]
        role: String,
    },
}

/// Resolved settings shared by all commands.
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
}

impl Context {
    pub fn new(global: &GlobalArgs) -> Result<Self> {
        let config = match &global.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let seed = global.seed.or(config.seed).unwrap_or(0);
        let out_dir = global
            .out_dir
            .clone()
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        let format = global.format.or(config.format).unwrap_or_default();
        Ok(Self {
            config,
            seed,
            out_dir,
            format,
        })
    }

    fn output(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| Error::Io(format!("cannot create {}: {e}", self.out_dir.display())))?;
        Ok(self.out_dir.join(name))
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.output(name)?;
        fs::write(&path, bytes).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
    }
}

/// Machine-readable error object printed on standard error.
#[derive(Debug, Serialize)]
pub struct ErrorReport<'a> {
    pub error: ErrorBody<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partial_report: Option<&'a AuditReport>,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody<'a> {
    pub kind: &'a str,
    pub message: String,
}

fn report_error(err: &mut dyn Write, error: &Error, partial: Option<&AuditReport>) -> i32 {
    let report = ErrorReport {
        error: ErrorBody {
            kind: error.kind(),
            message: error.to_string(),
        },
        partial_report: partial,
    };
    let _ = writeln!(err, "{}", serde_json::to_string(&report).expect("error serializes"));
    EXIT_ERROR
}

fn json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    text
}

fn csv_text<F>(fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> std::result::Result<(), csv::Error>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w).map_err(|e| Error::Io(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{e}");
            return EXIT_ERROR;
        }
    };
    let ctx = match Context::new(&cli.global) {
        Ok(ctx) => ctx,
        Err(e) => return report_error(err, &e, None),
    };
    let pool = match cli.global.jobs {
        Some(0) => {
            return report_error(err, &Error::Config("--jobs must be at least 1".into()), None);
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(pool) => pool,
        Err(e) => return report_error(err, &Error::Config(e.to_string()), None),
    };
    // Output is buffered so the work can run inside the pool.
    let (code, stdout, stderr) = pool.install(|| {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let result = match &cli.command {
            Command::Audit => Ok(cmd_audit(&ctx, &mut out, &mut err)),
            Command::Heatmap => cmd_heatmap(&ctx, &mut out),
            Command::Fpr => cmd_fpr(&ctx, &mut out),
            Command::Cost => cmd_cost(&ctx, &mut out),
            Command::Prop2 => cmd_prop2(&ctx, &mut out),
            Command::ValidateFamily { family } => cmd_validate_family(&ctx, family.as_deref(), &mut out),
            Command::Source { role } => cmd_source(&ctx, role),
        };
        let code = match result {
            Ok(code) => code,
            Err(e) => report_error(&mut err, &e, None),
        };
        (code, out, err)
    });
    let _ = out.write_all(&stdout);
    let _ = err.write_all(&stderr);
    code
}

/// Runs the configured audit. Writes `audit-report.json` and
/// `audit-results.csv`, and prints the report in the chosen format.
pub fn cmd_audit(ctx: &Context, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match audit_report(ctx) {
        Ok(report) => match emit_audit(ctx, &report, out) {
            Ok(()) if report.verdict.is_pass() => EXIT_PASS,
            Ok(()) => EXIT_FAIL,
            Err(e) => report_error(err, &e, None),
        },
        Err((e, partial)) => report_error(err, &e, partial.as_deref()),
    }
}

type AuditOutcome = std::result::Result<AuditReport, (Error, Option<Box<AuditReport>>)>;

fn audit_report(ctx: &Context) -> AuditOutcome {
    let cfg = &ctx.config;
    cfg.validate_for_audit().map_err(|e| (e, None))?;
    let family = cfg.family().map_err(|e| (e, None))?;
    let audit = cfg.audit.as_ref().expect("validated");
    let inputs = generate_inputs(
        audit.n,
        &audit.inputs,
        &mut rng::seeded(derive_seed(ctx.seed, INPUT_STREAM)),
    )
    .map_err(|e| (e, None))?;
    let mut filter = build_source(
        cfg.filter.as_ref().expect("validated"),
        "filter",
        &family,
        audit.m,
        ctx.seed,
    )
    .map_err(|e| (e, None))?;
    let mut baseline = build_source(
        cfg.baseline.as_ref().expect("validated"),
        "baseline",
        &family,
        audit.m,
        ctx.seed,
    )
    .map_err(|e| (e, None))?;
    let config = AuditConfig {
        alpha: audit.alpha,
        m: Some(audit.m),
        mode: audit.mode,
        seed: ctx.seed,
    };
    run_audit(&mut filter, &mut baseline, &inputs, &family, &config).map_err(|f| (f.error, f.partial))
}

fn emit_audit(ctx: &Context, report: &AuditReport, out: &mut dyn Write) -> Result<()> {
    let text = json(report);
    let mut rows = Vec::new();
    report.write_csv(&mut rows)?;
    ctx.write("audit-report.json", text.as_bytes())?;
    ctx.write("audit-results.csv", &rows)?;
    match ctx.format {
        OutputFormat::Json => out.write_all(text.as_bytes())?,
        OutputFormat::Csv => out.write_all(&rows)?,
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct HeatmapSummary<'a> {
    pub seed: u64,
    pub baseline: [f64; 2],
    pub grid: &'a HeatmapGrid,
    pub classification: &'a Classification,
}

pub fn heatmap_csv(grid: &HeatmapGrid) -> Result<String> {
    csv_text(|w| {
        w.write_record(["sigma2", "mu", "trials", "failures", "failure_rate"])?;
        for (mu, sigma2, failures, rate) in grid.cells() {
            w.write_record([
                sigma2.to_string(),
                mu.to_string(),
                grid.trials.to_string(),
                failures.to_string(),
                rate.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn cmd_heatmap(ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let family = ctx.config.family()?;
    let spec = ctx.config.heatmap.clone().unwrap_or_default();
    let grid = run_heatmap(&family, &spec, ctx.seed)?;
    let classification = classify_distributions(&grid, DEFAULT_FEASIBILITY)?;
    let rows = heatmap_csv(&grid)?;
    let curves = csv_text(|w| {
        w.write_record(["set", "mu", "sigma2", "x", "density"])?;
        for c in &classification.curves {
            for (x, d) in c.x.iter().zip(&c.density) {
                w.write_record([
                    c.set.clone(),
                    c.mu.to_string(),
                    c.sigma2.to_string(),
                    x.to_string(),
                    d.to_string(),
                ])?;
            }
        }
        Ok(())
    })?;
    let summary = json(&HeatmapSummary {
        seed: ctx.seed,
        baseline: spec.baseline,
        grid: &grid,
        classification: &classification,
    });
    ctx.write("heatmap.csv", rows.as_bytes())?;
    ctx.write("density-curves.csv", curves.as_bytes())?;
    ctx.write("heatmap-summary.json", summary.as_bytes())?;
    emit(ctx, out, &rows, &summary)?;
    Ok(0)
}

fn emit(ctx: &Context, out: &mut dyn Write, csv: &str, summary: &str) -> Result<()> {
    match ctx.format {
        OutputFormat::Csv => out.write_all(csv.as_bytes())?,
        OutputFormat::Json => out.write_all(summary.as_bytes())?,
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct FprSummary<'a> {
    pub seed: u64,
    #[serde(flatten)]
    pub table: &'a FprTable,
    pub max_fpr: f64,
    pub non_increasing: bool,
}

pub fn cmd_fpr(ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let family = ctx.config.family()?;
    let spec = ctx.config.fpr.clone().unwrap_or_default();
    let theta0 = ParameterVector::new(spec.theta0.clone());
    let table = run_fpr_experiment(&family, &theta0, &spec.m_values, spec.alpha, spec.trials, ctx.seed)?;
    let rows = csv_text(|w| {
        w.write_record(["m", "trials", "failures", "fpr", "ci_low", "ci_high"])?;
        for r in &table.rows {
            w.write_record([
                r.m.to_string(),
                r.trials.to_string(),
                r.failures.to_string(),
                r.fpr.to_string(),
                r.ci_low.to_string(),
                r.ci_high.to_string(),
            ])?;
        }
        Ok(())
    })?;
    let summary = json(&FprSummary {
        seed: ctx.seed,
        table: &table,
        max_fpr: table.max_fpr(),
        non_increasing: table.non_increasing_within_intervals(),
    });
    ctx.write("fpr.csv", rows.as_bytes())?;
    ctx.write("fpr-summary.json", summary.as_bytes())?;
    emit(ctx, out, &rows, &summary)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
pub struct CostSummary<'a> {
    pub seed: u64,
    pub spec: &'a CostSpec,
    pub unconstrained_max: f64,
    pub constrained_max: f64,
    pub cost: f64,
    pub recovery: f64,
    pub unconstrained_argmax: [f64; 2],
    pub constrained_argmax: Option<[f64; 2]>,
    pub infeasible: bool,
    pub tau: f64,
    pub feasibility: f64,
}

impl<'a> CostSummary<'a> {
    fn new(seed: u64, spec: &'a CostSpec, r: &CostOfAuditingResult) -> Self {
        Self {
            seed,
            spec,
            unconstrained_max: r.unconstrained_max,
            constrained_max: r.constrained_max,
            cost: r.cost,
            recovery: r.constrained_max / r.unconstrained_max,
            unconstrained_argmax: r.unconstrained_argmax,
            constrained_argmax: r.constrained_argmax,
            infeasible: r.infeasible,
            tau: r.tau,
            feasibility: r.feasibility,
        }
    }
}

pub fn cmd_cost(ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let family = ctx.config.family()?;
    let spec = ctx.config.cost.clone().unwrap_or_default();
    let result = cost_of_auditing(&family, &spec, ctx.seed)?;
    let rows = csv_text(|w| {
        w.write_record(["mu", "sigma2", "revenue", "pass_rate", "feasible"])?;
        for c in &result.cells {
            w.write_record([
                c.mu.to_string(),
                c.sigma2.to_string(),
                c.revenue.to_string(),
                c.pass_rate.to_string(),
                c.feasible.to_string(),
            ])?;
        }
        Ok(())
    })?;
    let reach = 2.0 * spec.revenue.peak_distance.max(1.0);
    let curve = csv_text(|w| {
        w.write_record(["distance", "revenue"])?;
        for i in 0..=200 {
            let d = reach * f64::from(i) / 200.0;
            let r = spec.revenue.revenue(d).expect("distance is nonnegative");
            w.write_record([d.to_string(), r.to_string()])?;
        }
        Ok(())
    })?;
    let summary = json(&CostSummary::new(ctx.seed, &spec, &result));
    ctx.write("cost.csv", rows.as_bytes())?;
    ctx.write("revenue-curve.csv", curve.as_bytes())?;
    ctx.write("cost-summary.json", summary.as_bytes())?;
    emit(ctx, out, &rows, &summary)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
pub struct Prop2Summary<'a> {
    pub seed: u64,
    #[serde(flatten)]
    pub report: &'a Prop2Report,
}

pub fn cmd_prop2(ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let family = ctx.config.family()?;
    let spec = ctx.config.prop2.clone().unwrap_or_default();
    let report = proposition2_construction(&family, &spec, ctx.seed)?;
    let rows = csv_text(|w| {
        w.write_record(["kappa", "quadratic_form", "pass_rate"])?;
        for c in &report.candidates {
            let pass = c.pass_rate.map(|p| p.to_string()).unwrap_or_default();
            w.write_record([c.kappa.to_string(), c.quadratic_form.to_string(), pass])?;
        }
        Ok(())
    })?;
    let summary = json(&Prop2Summary {
        seed: ctx.seed,
        report: &report,
    });
    ctx.write("prop2-candidates.csv", rows.as_bytes())?;
    ctx.write("prop2-summary.json", summary.as_bytes())?;
    emit(ctx, out, &rows, &summary)?;
    Ok(0)
}

/// Exit 0 when every condition holds, 1 when one fails.
pub fn cmd_validate_family(ctx: &Context, family: Option<&str>, out: &mut dyn Write) -> Result<i32> {
    let family = match family {
        Some(text) if text.trim_start().starts_with('{') => ModelFamily::from_json(text)?,
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {path}: {e}")))?;
            ModelFamily::from_json(&text)?
        }
        None => ctx.config.family()?,
    };
    let report: RegularityReport = family.validate_regularity();
    let text = json(&report);
    ctx.write("regularity-report.json", text.as_bytes())?;
    match ctx.format {
        OutputFormat::Json => out.write_all(text.as_bytes())?,
        OutputFormat::Csv => {
            let rows = csv_text(|w| {
                w.write_record(["condition", "passed", "detail"])?;
                for c in &report.checks {
                    w.write_record([c.condition.as_str(), &c.passed.to_string(), c.detail.as_str()])?;
                }
                Ok(())
            })?;
            out.write_all(rows.as_bytes())?;
        }
    }
    Ok(if report.passed() { 0 } else { 1 })
}

/// Serves the configured source on stdin/stdout until EOF, answering each
/// request with a feed of the requested length.
pub fn cmd_source(ctx: &Context, role: &str) -> Result<i32> {
    let family = ctx.config.family()?;
    let spec = match role {
        "filter" => ctx.config.filter.as_ref(),
        _ => ctx.config.baseline.as_ref(),
    }
    .ok_or_else(|| Error::Config(format!("missing [{role}] section")))?;
    if matches!(spec, SourceSpec::Subprocess { .. }) {
        return Err(Error::Config("cannot serve a subprocess source".into()));
    }
    spec.validate(&family)?;
    let m = ctx.config.audit.as_ref().map_or(AuditSection::default_m(), |a| a.m);
    let mut source = build_source(spec, role, &family, m, ctx.seed)?;
    let stdin = io::stdin();
    serve(stdin.lock(), io::stdout().lock(), |input, m| source.feed_for(input, m))?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(RunConfig::from_toml("sed = 1").is_err());
        assert!(RunConfig::from_toml("[audit]\nalpha = 0.1\nbogus = 2").is_err());
        assert!(RunConfig::from_toml("[filter]\nkind = \"parametric\"\ntheta = [0, 1]\nextra = 1").is_err());
        assert!(RunConfig::from_toml("[heatmap]\ntrails = 3").is_err());
        assert!(RunConfig::from_toml("[filter]\nkind = \"pool\"\npool_sise = 3").is_err());
        assert!(RunConfig::from_toml("[filter]\nkind = \"mixed\"\ninjected_fraction = 0.5\nvariance = 2").is_ok());
    }

    #[test]
    fn config_parses_sources() {
        let cfg = RunConfig::from_toml(
            r#"
            seed = 3
            [family]
            id = "gaussian-mean-var"
            [audit]
            alpha = 0.01
            n = 2
            [filter]
            kind = "mixed"
            injected_fraction = 0.25
            pool_size = 10
            [baseline]
            kind = "subprocess"
            command = ["/bin/cat"]
            timeout_secs = 2.5
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.audit.as_ref().unwrap().m, 30);
        assert!(matches!(cfg.filter, Some(SourceSpec::Mixed { .. })));
        cfg.validate_for_audit().unwrap();
    }

    #[test]
    fn audit_validation_happens_before_launch() {
        let cfg = RunConfig::from_toml(
            r#"
            [audit]
            alpha = 0.01
            [filter]
            kind = "parametric"
            theta = [0, -1]
            [baseline]
            kind = "subprocess"
            command = ["/no/such/binary"]
            "#,
        )
        .unwrap();
        let err = cfg.validate_for_audit().unwrap_err();
        assert!(err.to_string().contains("[filter]"), "{err}");
        let cfg = RunConfig::from_toml("[audit]\nalpha = 1.5").unwrap();
        assert!(cfg.validate_for_audit().is_err());
    }

    #[test]
    fn parse_errors_exit_2() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["feedaudit", "nonsense"], &mut out, &mut err), EXIT_ERROR);
        assert_eq!(run(["feedaudit", "--help"], &mut out, &mut err), 0);
    }
}

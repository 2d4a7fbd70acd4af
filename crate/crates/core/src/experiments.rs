//! Monte Carlo experiments around the audit: false-positive calibration,
//! pass/fail heatmaps over Gaussian filter policies, revenue and the cost of
//! auditing, and a concrete zero-cost construction.
//!
//! Every experiment splits its trials into fixed-size chunks, each with its own
//! stream derived from the run seed, so results are identical for any number of
//! worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::audit_feeds;
use crate::error::{Error, Result};
use crate::family::{FamilyKind, ModelFamily, ParameterVector};
use crate::rng::{self, derive_seed};
use crate::stats::{AuditThreshold, Verdict};

/// Trials per independent stream.
pub const CHUNK: usize = 250;
/// Two-sided 95% standard normal quantile.
const Z95: f64 = 1.959_963_984_540_054;
pub const DEFAULT_FEASIBILITY: f64 = 0.8;

/// Number of FAIL verdicts when a filter sampling `p(.; filter)` is audited
/// against a baseline sampling `p(.; baseline)`, over `trials` repetitions.
pub fn count_failures(
    family: &ModelFamily,
    filter: &ParameterVector,
    baseline: &ParameterVector,
    threshold: &AuditThreshold,
    trials: usize,
    seed: u64,
) -> Result<usize> {
    family.check_parameter(filter.as_slice())?;
    family.check_parameter(baseline.as_slice())?;
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, c as u64);
            let n = CHUNK.min(trials - c * CHUNK);
            let mut failures = 0;
            for _ in 0..n {
                let f = family.sample_feed(filter, threshold.m, &mut r)?;
                let b = family.sample_feed(baseline, threshold.m, &mut r)?;
                let (_, eval) = audit_feeds(family, f, b, threshold, &mut r)?;
                failures += usize::from(eval.verdict == Verdict::Fail);
            }
            Ok(failures)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Wilson score interval for a binomial proportion at 95% confidence.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FprRow {
    pub m: usize,
    pub trials: usize,
    pub failures: usize,
    pub fpr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FprTable {
    pub family: String,
    pub theta0: Vec<f64>,
    pub alpha: f64,
    pub rows: Vec<FprRow>,
}

impl FprTable {
    pub fn max_fpr(&self) -> f64 {
        self.rows.iter().map(|r| r.fpr).fold(0.0, f64::max)
    }

    /// True when no later row's interval lies entirely above an earlier
    /// row's interval, i.e. the rate does not significantly increase with m.
    pub fn non_increasing_within_intervals(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, a)| self.rows[i + 1..].iter().all(|b| b.ci_low <= a.ci_high))
    }
}

/// Audits a source against an identically distributed baseline, `trials`
/// times per feed length, and tabulates how often the audit wrongly fails.
pub fn run_fpr_experiment(
    family: &ModelFamily,
    theta0: &ParameterVector,
    m_values: &[usize],
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<FprTable> {
    family.check_parameter(theta0.as_slice())?;
    if family.on_boundary(theta0.as_slice()) {
        return Err(Error::Config(format!(
            "θ₀={:?} must be interior to the domain",
            theta0.as_slice()
        )));
    }
    if trials < 1000 {
        return Err(Error::Config(format!("need at least 1000 trials, got {trials}")));
    }
    if m_values.is_empty() {
        return Err(Error::Config("no feed lengths given".into()));
    }
    let rows = m_values
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let threshold = AuditThreshold::new(family.dimension(), m, alpha)?;
            let failures = count_failures(family, theta0, theta0, &threshold, trials, derive_seed(seed, i as u64))?;
            let (ci_low, ci_high) = wilson_interval(failures, trials);
            Ok(FprRow {
                m,
                trials,
                failures,
                fpr: failures as f64 / trials as f64,
                ci_low,
                ci_high,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FprTable {
        family: family.id(),
        theta0: theta0.as_slice().to_vec(),
        alpha,
        rows,
    })
}

fn tenths(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|i| f64::from(i) / 10.0).collect()
}

/// Filter policies N(μ, σ²) audited against a fixed Gaussian baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatmapSpec {
    pub baseline: [f64; 2],
    pub mu_values: Vec<f64>,
    pub sigma2_values: Vec<f64>,
    pub m: usize,
    pub alpha: f64,
    pub trials: usize,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        Self {
            baseline: [0.0, 1.0],
            mu_values: tenths(-15, 15),
            sigma2_values: tenths(4, 22),
            m: 30,
            alpha: 0.01,
            trials: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub mu_values: Vec<f64>,
    pub sigma2_values: Vec<f64>,
    pub trials: usize,
    pub m: usize,
    pub alpha: f64,
    pub tau: f64,
    /// `failures[s][j]` counts FAILs for σ² = `sigma2_values[s]`, μ = `mu_values[j]`.
    pub failures: Vec<Vec<usize>>,
    pub failure_rate: Vec<Vec<f64>>,
}

fn position(values: &[f64], x: f64) -> Option<usize> {
    values.iter().position(|v| (v - x).abs() < 1e-9)
}

impl HeatmapGrid {
    pub fn rate(&self, mu: f64, sigma2: f64) -> Option<f64> {
        let j = position(&self.mu_values, mu)?;
        let s = position(&self.sigma2_values, sigma2)?;
        Some(self.failure_rate[s][j])
    }

    /// Binomial standard error of a cell's failure rate.
    pub fn standard_error(&self, mu: f64, sigma2: f64) -> Option<f64> {
        let p = self.rate(mu, sigma2)?;
        Some((p * (1.0 - p) / self.trials as f64).sqrt())
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, usize, f64)> + '_ {
        self.sigma2_values.iter().enumerate().flat_map(move |(s, &v)| {
            self.mu_values
                .iter()
                .enumerate()
                .map(move |(j, &mu)| (mu, v, self.failures[s][j], self.failure_rate[s][j]))
        })
    }
}

pub fn run_heatmap(family: &ModelFamily, spec: &HeatmapSpec, seed: u64) -> Result<HeatmapGrid> {
    if family.kind() != FamilyKind::GaussianMeanVar {
        return Err(Error::Family(format!(
            "heatmaps are over Gaussian (μ, σ²) policies, not {}",
            family.id()
        )));
    }
    if spec.mu_values.is_empty() || spec.sigma2_values.is_empty() {
        return Err(Error::Config("heatmap grids must be nonempty".into()));
    }
    if spec.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let baseline = family.parameter(spec.baseline.to_vec())?;
    let threshold = AuditThreshold::new(2, spec.m, spec.alpha)?;
    let width = spec.mu_values.len();
    let cells: Vec<(usize, f64, f64)> = spec
        .sigma2_values
        .iter()
        .flat_map(|&v| spec.mu_values.iter().map(move |&mu| (mu, v)))
        .enumerate()
        .map(|(i, (mu, v))| (i, mu, v))
        .collect();
    let counts = cells
        .par_iter()
        .map(|&(i, mu, v)| {
            let filter = family.parameter(vec![mu, v])?;
            count_failures(
                family,
                &filter,
                &baseline,
                &threshold,
                spec.trials,
                derive_seed(seed, i as u64),
            )
        })
        .collect::<Result<Vec<usize>>>()?;
    let failures: Vec<Vec<usize>> = counts.chunks(width).map(<[usize]>::to_vec).collect();
    let failure_rate = failures
        .iter()
        .map(|row| row.iter().map(|&f| f as f64 / spec.trials as f64).collect())
        .collect();
    Ok(HeatmapGrid {
        mu_values: spec.mu_values.clone(),
        sigma2_values: spec.sigma2_values.clone(),
        trials: spec.trials,
        m: spec.m,
        alpha: spec.alpha,
        tau: threshold.tau,
        failures,
        failure_rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub mu: f64,
    pub sigma2: f64,
    pub pass_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub set: String,
    pub mu: f64,
    pub sigma2: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub threshold: f64,
    pub passing: Vec<CellSummary>,
    pub failing: Vec<CellSummary>,
    pub curves: Vec<DensityCurve>,
}

/// Representatives per set when emitting density curves.
const REPRESENTATIVES: usize = 6;

fn density_curve(set: &str, mu: f64, sigma2: f64) -> DensityCurve {
    let x: Vec<f64> = (0..=200).map(|i| -5.0 + 0.05 * f64::from(i)).collect();
    let norm = (2.0 * std::f64::consts::PI * sigma2).sqrt();
    let density = x
        .iter()
        .map(|z| (-(z - mu) * (z - mu) / (2.0 * sigma2)).exp() / norm)
        .collect();
    DensityCurve {
        set: set.into(),
        mu,
        sigma2,
        x,
        density,
    }
}

fn representatives<'a>(set: &'a [CellSummary], name: &'a str) -> impl Iterator<Item = DensityCurve> + 'a {
    let step = set.len().div_ceil(REPRESENTATIVES).max(1);
    set.iter()
        .step_by(step)
        .map(move |c| density_curve(name, c.mu, c.sigma2))
}

/// Splits heatmap cells into those passing more than `threshold` of the time
/// and those failing more than `threshold` of the time; the rest are in
/// neither set.
pub fn classify_distributions(grid: &HeatmapGrid, threshold: f64) -> Result<Classification> {
    if !(0.5..1.0).contains(&threshold) {
        return Err(Error::Config(format!(
            "classification threshold {threshold} must lie in [0.5, 1)"
        )));
    }
    let mut passing = Vec::new();
    let mut failing = Vec::new();
    for (mu, sigma2, _, rate) in grid.cells() {
        let cell = CellSummary {
            mu,
            sigma2,
            pass_rate: 1.0 - rate,
        };
        if 1.0 - rate > threshold {
            passing.push(cell);
        } else if rate > threshold {
            failing.push(cell);
        }
    }
    let curves = representatives(&passing, "passing")
        .chain(representatives(&failing, "failing"))
        .collect();
    Ok(Classification {
        threshold,
        passing,
        failing,
        curves,
    })
}

/// Platform revenue as a function of the distance between the filtered and
/// baseline means: `base + gain·(d/d*)·e^(1 − d/d*)`, peaking at `d*`.
/// With `d* = 0` it degenerates to `base + gain·e^(−d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RevenueFunction {
    pub base: f64,
    pub peak_gain: f64,
    pub peak_distance: f64,
}

impl Default for RevenueFunction {
    fn default() -> Self {
        Self {
            base: 1.0,
            peak_gain: 1.0,
            peak_distance: 0.75,
        }
    }
}

impl RevenueFunction {
    pub fn new(base: f64, peak_gain: f64, peak_distance: f64) -> Result<Self> {
        let f = Self {
            base,
            peak_gain,
            peak_distance,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base.is_finite() && self.peak_gain.is_finite() && self.peak_gain > 0.0) {
            return Err(Error::Config("revenue needs finite base and positive peak gain".into()));
        }
        if !(self.peak_distance.is_finite() && self.peak_distance >= 0.0) {
            return Err(Error::Config(format!(
                "peak distance {} must be finite and nonnegative",
                self.peak_distance
            )));
        }
        Ok(())
    }

    pub fn revenue(&self, d: f64) -> Result<f64> {
        if !(d >= 0.0) {
            return Err(Error::Range(format!("distance {d} is negative")));
        }
        if self.peak_distance == 0.0 {
            return Ok(self.base + self.peak_gain * (-d).exp());
        }
        let x = d / self.peak_distance;
        Ok(self.base + self.peak_gain * x * (1.0 - x).exp())
    }

    pub fn peak(&self) -> f64 {
        self.base + self.peak_gain
    }
}

/// Grid search for the cost of auditing over Gaussian filter policies whose
/// revenue depends on the distance of their mean from the baseline mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostSpec {
    pub revenue: RevenueFunction,
    pub baseline: [f64; 2],
    pub m: usize,
    pub alpha: f64,
    /// Policy means; defaults to a 0.05-spaced grid covering the peak.
    pub mu_values: Option<Vec<f64>>,
    pub sigma2_values: Vec<f64>,
    pub feasibility: f64,
    pub trials: usize,
}

impl Default for CostSpec {
    fn default() -> Self {
        Self {
            revenue: RevenueFunction::default(),
            baseline: [0.0, 1.0],
            m: 30,
            alpha: 0.01,
            mu_values: None,
            sigma2_values: tenths(4, 30),
            feasibility: DEFAULT_FEASIBILITY,
            trials: 1000,
        }
    }
}

impl CostSpec {
    pub fn mu_grid(&self) -> Vec<f64> {
        self.mu_values.clone().unwrap_or_else(|| {
            let reach = (1.25 * self.revenue.peak_distance).max(1.5);
            let steps = (reach / 0.05).ceil() as i32;
            (0..=steps).map(|i| self.baseline[0] + f64::from(i) * 0.05).collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCell {
    pub mu: f64,
    pub sigma2: f64,
    pub revenue: f64,
    pub pass_rate: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostOfAuditingResult {
    pub unconstrained_max: f64,
    pub constrained_max: f64,
    pub cost: f64,
    pub unconstrained_argmax: [f64; 2],
    pub constrained_argmax: Option<[f64; 2]>,
    pub infeasible: bool,
    pub tau: f64,
    pub feasibility: f64,
    pub cells: Vec<PolicyCell>,
}

fn argmax<'a>(cells: impl Iterator<Item = &'a PolicyCell>) -> Option<&'a PolicyCell> {
    cells.fold(None, |best: Option<&PolicyCell>, c| match best {
        Some(b) if b.revenue >= c.revenue => Some(b),
        _ => Some(c),
    })
}

pub fn cost_of_auditing(family: &ModelFamily, spec: &CostSpec, seed: u64) -> Result<CostOfAuditingResult> {
    let threshold = AuditThreshold::new(2, spec.m, spec.alpha)?;
    cost_with_threshold(family, spec, &threshold, seed)
}

/// As [`cost_of_auditing`] but with an explicit threshold. With the same seed
/// every policy sees the same feeds whatever the threshold.
pub fn cost_with_threshold(
    family: &ModelFamily,
    spec: &CostSpec,
    threshold: &AuditThreshold,
    seed: u64,
) -> Result<CostOfAuditingResult> {
    if family.kind() != FamilyKind::GaussianMeanVar {
        return Err(Error::Family(format!(
            "cost analysis is over Gaussian (μ, σ²) policies, not {}",
            family.id()
        )));
    }
    spec.revenue.validate()?;
    if !(spec.feasibility > 0.0 && spec.feasibility <= 1.0) {
        return Err(Error::Config(format!(
            "feasibility {} outside (0, 1]",
            spec.feasibility
        )));
    }
    if spec.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let mus = spec.mu_grid();
    if mus.is_empty() || spec.sigma2_values.is_empty() {
        return Err(Error::Config("policy grids must be nonempty".into()));
    }
    let reach = mus.iter().map(|mu| (mu - spec.baseline[0]).abs()).fold(0.0, f64::max);
    if reach + 1e-9 < spec.revenue.peak_distance {
        return Err(Error::Config(format!(
            "policy grid reaches distance {reach} but revenue peaks at {}",
            spec.revenue.peak_distance
        )));
    }
    let baseline = family.parameter(spec.baseline.to_vec())?;
    let grid: Vec<(usize, f64, f64)> = spec
        .sigma2_values
        .iter()
        .flat_map(|&v| mus.iter().map(move |&mu| (mu, v)))
        .enumerate()
        .map(|(i, (mu, v))| (i, mu, v))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(i, mu, v)| {
            let filter = family.parameter(vec![mu, v])?;
            let fails = count_failures(
                family,
                &filter,
                &baseline,
                threshold,
                spec.trials,
                derive_seed(seed, i as u64),
            )?;
            let pass_rate = 1.0 - fails as f64 / spec.trials as f64;
            Ok(PolicyCell {
                mu,
                sigma2: v,
                revenue: spec.revenue.revenue((mu - spec.baseline[0]).abs())?,
                pass_rate,
                feasible: pass_rate >= spec.feasibility,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = argmax(cells.iter()).expect("grid is nonempty");
    let best_feasible = argmax(cells.iter().filter(|c| c.feasible));
    let (constrained_max, constrained_argmax) = match best_feasible {
        Some(c) => (c.revenue, Some([c.mu, c.sigma2])),
        None => (0.0, None),
    };
    Ok(CostOfAuditingResult {
        unconstrained_max: best.revenue,
        constrained_max,
        cost: if best_feasible.is_some() {
            best.revenue - constrained_max
        } else {
            best.revenue
        },
        unconstrained_argmax: [best.mu, best.sigma2],
        constrained_argmax,
        infeasible: best_feasible.is_none(),
        tau: threshold.tau,
        feasibility: spec.feasibility,
        cells,
    })
}

/// Which parameter coordinates the platform's reward depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardDependence {
    /// Reward depends only on the mean; the variance is free.
    MeanOnly,
    AllCoordinates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Prop2Spec {
    pub revenue: RevenueFunction,
    pub reward: RewardDependence,
    pub baseline: [f64; 2],
    pub m: usize,
    pub alpha: f64,
    pub trials: usize,
    pub kappa_step: f64,
    pub feasibility: f64,
}

impl Default for Prop2Spec {
    fn default() -> Self {
        Self {
            revenue: RevenueFunction::default(),
            reward: RewardDependence::MeanOnly,
            baseline: [0.0, 1.0],
            m: 30,
            alpha: 0.01,
            trials: 1000,
            kappa_step: 0.25,
            feasibility: DEFAULT_FEASIBILITY,
        }
    }
}

/// One candidate shift along the free direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaCandidate {
    pub kappa: f64,
    pub quadratic_form: f64,
    /// Only simulated once the analytic witness is below τ.
    pub pass_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop2Report {
    pub reward: RewardDependence,
    pub precondition_violated: bool,
    /// Free coordinates the reward ignores (0-based).
    pub omega: Vec<usize>,
    pub direction: Vec<f64>,
    pub kappa: Option<f64>,
    /// Reward-maximizing parameters before the shift.
    pub theta: Vec<f64>,
    /// Displacement between the shifted filter and baseline parameters.
    pub v: Vec<f64>,
    pub quadratic_form: Option<f64>,
    pub tau: f64,
    pub m: usize,
    pub alpha: f64,
    pub trials: usize,
    pub shifted_filter: Option<Vec<f64>>,
    pub shifted_baseline: Option<Vec<f64>>,
    pub pass_rate: Option<f64>,
    pub unconstrained_reward: f64,
    pub constrained_reward: Option<f64>,
    pub measured_cost: Option<f64>,
    pub binding_constraint: Option<String>,
    pub candidates: Vec<KappaCandidate>,
    pub notes: Vec<String>,
}

/// Builds the zero-cost construction for Gaussian policies: with reward
/// depending only on the mean, shift both feeds along the variance axis by κ
/// until the information-weighted displacement drops below τ and the audit
/// passes, while the reward is unchanged.
pub fn proposition2_construction(family: &ModelFamily, spec: &Prop2Spec, seed: u64) -> Result<Prop2Report> {
    if family.kind() != FamilyKind::GaussianMeanVar {
        return Err(Error::Family(format!(
            "the construction needs gaussian-mean-var, not {}",
            family.id()
        )));
    }
    spec.revenue.validate()?;
    if !(spec.kappa_step > 0.0 && spec.kappa_step.is_finite()) {
        return Err(Error::Config("kappa_step must be positive".into()));
    }
    let threshold = AuditThreshold::new(2, spec.m, spec.alpha)?;
    let d = spec.revenue.peak_distance;
    let theta = vec![spec.baseline[0] + d, spec.baseline[1]];
    family.check_parameter(&theta)?;
    let baseline = family.parameter(spec.baseline.to_vec())?;
    let v = vec![d, 0.0];
    let unconstrained = spec.revenue.peak();
    let mut report = Prop2Report {
        reward: spec.reward,
        precondition_violated: false,
        omega: Vec::new(),
        direction: vec![0.0, 0.0],
        kappa: None,
        theta: theta.clone(),
        v: v.clone(),
        quadratic_form: None,
        tau: threshold.tau,
        m: spec.m,
        alpha: spec.alpha,
        trials: spec.trials,
        shifted_filter: None,
        shifted_baseline: None,
        pass_rate: None,
        unconstrained_reward: unconstrained,
        constrained_reward: None,
        measured_cost: None,
        binding_constraint: None,
        candidates: Vec::new(),
        notes: Vec::new(),
    };
    if spec.reward == RewardDependence::AllCoordinates {
        report.precondition_violated = true;
        report
            .notes
            .push("reward depends on every coordinate, so no free subset Ω exists; construction unavailable".into());
        return Ok(report);
    }
    report.omega = vec![1];
    report.direction = vec![0.0, 1.0];
    report
        .notes
        .push("Ω = {variance} has |Ω| = 1, which realizes the construction but not the strict 1 < |Ω| < r".into());
    report
        .notes
        .push("baseline and filter are shifted by the same κ along the variance axis".into());

    let var_hi = family.domain()[1].hi();
    let steps = ((var_hi - theta[1]) / spec.kappa_step).floor() as i64;
    for step in 1..=steps {
        let kappa = step as f64 * spec.kappa_step;
        let shifted = family.parameter(vec![theta[0], theta[1] + kappa])?;
        let info = family.fisher_information(&shifted)?;
        let qf = info.quadratic_form(&v)?;
        if qf >= threshold.tau {
            report.candidates.push(KappaCandidate {
                kappa,
                quadratic_form: qf,
                pass_rate: None,
            });
            continue;
        }
        let shifted_base = family.parameter(vec![baseline[0], baseline[1] + kappa])?;
        let fails = count_failures(
            family,
            &shifted,
            &shifted_base,
            &threshold,
            spec.trials,
            derive_seed(seed, step as u64),
        )?;
        let pass_rate = 1.0 - fails as f64 / spec.trials as f64;
        report.candidates.push(KappaCandidate {
            kappa,
            quadratic_form: qf,
            pass_rate: Some(pass_rate),
        });
        if pass_rate >= spec.feasibility {
            let reward = spec.revenue.revenue(d)?;
            report.kappa = Some(kappa);
            report.quadratic_form = Some(qf);
            report.shifted_filter = Some(shifted.as_slice().to_vec());
            report.shifted_baseline = Some(shifted_base.as_slice().to_vec());
            report.pass_rate = Some(pass_rate);
            report.constrained_reward = Some(reward);
            report.measured_cost = Some(unconstrained - reward);
            return Ok(report);
        }
    }
    report.binding_constraint = Some(format!(
        "variance upper bound {var_hi} reached before the shifted feeds pass the audit"
    ));
    report.measured_cost = Some(unconstrained - spec.revenue.base);
    Ok(report)
}

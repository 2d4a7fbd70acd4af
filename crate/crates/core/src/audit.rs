//! The audit loop: query the filter and the baseline for each input, shuffle
//! the two feeds, fit both estimates, and test the displacement in the
//! information metric of each estimate against `τ`.

use std::collections::HashSet;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::family::{Estimate, FamilyDescriptor, Feed, ModelFamily, ParameterVector};
use crate::rng;
use crate::stats::{robustness_decision, wald_statistic, AuditThreshold, TestStatisticPair, Verdict};

pub const FLAG_BOUNDARY_PRIME: &str = "boundary-mle:prime";
pub const FLAG_BOUNDARY_DOUBLE_PRIME: &str = "boundary-mle:double-prime";

/// One audit input. The payload is kept as raw JSON text and handed to feed
/// sources verbatim; the engine never looks inside it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditInput {
    pub id: String,
    pub payload: Box<RawValue>,
}

impl AuditInput {
    pub fn new(id: impl Into<String>, payload: &serde_json::Value) -> Self {
        let raw = serde_json::value::to_raw_value(payload).expect("JSON values always serialize");
        Self {
            id: id.into(),
            payload: raw,
        }
    }

    /// Input with a `null` payload.
    pub fn bare(id: impl Into<String>) -> Self {
        Self::new(id, &serde_json::Value::Null)
    }
}

/// Black-box access to a feed-producing algorithm.
pub trait FeedSource {
    fn name(&self) -> &str;

    /// Feed for one input. Errors are free-form and get wrapped with the
    /// source and input names by the engine.
    fn query(&mut self, input: &AuditInput) -> std::result::Result<Feed, String>;
}

impl<S: FeedSource + ?Sized> FeedSource for Box<S> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn query(&mut self, input: &AuditInput) -> std::result::Result<Feed, String> {
        (**self).query(input)
    }
}

/// A feed source backed by a closure.
pub struct FnSource<F> {
    name: String,
    f: F,
}

impl<F> FnSource<F>
where
    F: FnMut(&AuditInput) -> std::result::Result<Feed, String>,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F> FeedSource for FnSource<F>
where
    F: FnMut(&AuditInput) -> std::result::Result<Feed, String>,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn query(&mut self, input: &AuditInput) -> std::result::Result<Feed, String> {
        (self.f)(input)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditMode {
    /// Stop at the first failing input.
    Strict,
    /// Audit every input.
    #[default]
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub alpha: f64,
    /// Required feed length; discovered from the first response when absent.
    pub m: Option<usize>,
    pub mode: AuditMode,
    pub seed: u64,
}

/// The fit-and-test step of the audit for an already shuffled pair of feeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEvaluation {
    pub estimate_prime: Estimate,
    pub estimate_double_prime: Estimate,
    pub statistics: TestStatisticPair,
    /// Displacement measured at the midpoint information. Diagnostic only.
    pub midpoint_statistic: Option<f64>,
    pub verdict: Verdict,
}

/// Randomly orders `(filtered, baseline)`. Bit 0 keeps the order, bit 1 swaps.
pub fn shuffle_pair<R: Rng + ?Sized>(filtered: Feed, baseline: Feed, rng: &mut R) -> Result<(Feed, Feed, u8)> {
    if filtered.len() != baseline.len() {
        return Err(Error::Shape(format!(
            "feeds of length {} and {}",
            filtered.len(),
            baseline.len()
        )));
    }
    if rng.random::<bool>() {
        Ok((baseline, filtered, 1))
    } else {
        Ok((filtered, baseline, 0))
    }
}

/// Fits both feeds and applies the two-sided information test.
pub fn evaluate_pair(
    family: &ModelFamily,
    z_prime: &Feed,
    z_double_prime: &Feed,
    threshold: &AuditThreshold,
) -> Result<PairEvaluation> {
    let est_p = family.mle(z_prime)?;
    let est_pp = family.mle(z_double_prime)?;
    let info_p = family.fisher_information(&est_p.theta)?;
    let info_pp = family.fisher_information(&est_pp.theta)?;
    let statistics = TestStatisticPair {
        stat_prime: wald_statistic(&est_p.theta, &est_pp.theta, &info_p)?,
        stat_double_prime: wald_statistic(&est_p.theta, &est_pp.theta, &info_pp)?,
    };
    let midpoint_statistic = midpoint_statistic(family, &est_p.theta, &est_pp.theta);
    Ok(PairEvaluation {
        verdict: robustness_decision(&statistics, threshold),
        estimate_prime: est_p,
        estimate_double_prime: est_pp,
        statistics,
        midpoint_statistic,
    })
}

/// `(θ′ − θ″)ᵀ I((θ′ + θ″)/2) (θ′ − θ″)`, when the midpoint information exists.
pub fn midpoint_statistic(
    family: &ModelFamily,
    theta_prime: &ParameterVector,
    theta_double_prime: &ParameterVector,
) -> Option<f64> {
    let mid = theta_prime.midpoint(theta_double_prime).ok()?;
    let info = family.fisher_information(&mid).ok()?;
    wald_statistic(theta_prime, theta_double_prime, &info).ok()
}

/// Shuffle then evaluate. Returns the shuffle bit alongside the evaluation.
pub fn audit_feeds<R: Rng + ?Sized>(
    family: &ModelFamily,
    filtered: Feed,
    baseline: Feed,
    threshold: &AuditThreshold,
    rng: &mut R,
) -> Result<(u8, PairEvaluation)> {
    let (zp, zpp, bit) = shuffle_pair(filtered, baseline, rng)?;
    Ok((bit, evaluate_pair(family, &zp, &zpp, threshold)?))
}

/// Decision robustness of one input on materialized feeds. The verdict does
/// not depend on how the pair is ordered, so no shuffle is drawn.
pub fn decision_robustness_check(
    filtered: &Feed,
    baseline: &Feed,
    family: &ModelFamily,
    alpha: f64,
) -> Result<Verdict> {
    if filtered.len() != baseline.len() {
        return Err(Error::Shape(format!(
            "feeds of length {} and {}",
            filtered.len(),
            baseline.len()
        )));
    }
    let threshold = AuditThreshold::new(family.dimension(), filtered.len(), alpha)?;
    Ok(evaluate_pair(family, filtered, baseline, &threshold)?.verdict)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputAuditResult {
    pub input_id: String,
    pub shuffle_bit: u8,
    pub theta_prime: ParameterVector,
    pub theta_double_prime: ParameterVector,
    pub statistics: TestStatisticPair,
    pub midpoint_statistic: Option<f64>,
    pub tau: f64,
    pub verdict: Verdict,
    pub flags: Vec<String>,
}

fn source_error(source: &dyn FeedSource, input: &AuditInput, message: impl Into<String>) -> Error {
    Error::Source {
        source_name: source.name().to_owned(),
        input: input.id.clone(),
        message: message.into(),
    }
}

fn fetch(
    source: &mut dyn FeedSource,
    input: &AuditInput,
    family: &ModelFamily,
    expected_m: Option<usize>,
) -> Result<Feed> {
    let feed = source.query(input).map_err(|msg| source_error(source, input, msg))?;
    if let Some(m) = expected_m {
        if feed.len() != m {
            return Err(source_error(
                source,
                input,
                format!("returned {} items, expected {m}", feed.len()),
            ));
        }
    }
    family
        .check_feed(&feed)
        .map_err(|e| source_error(source, input, format!("malformed feed: {e}")))?;
    Ok(feed)
}

/// Audits a single input: one query to each source, shuffle, fit, test.
pub fn audit_input<R: Rng + ?Sized>(
    filter: &mut dyn FeedSource,
    baseline: &mut dyn FeedSource,
    input: &AuditInput,
    family: &ModelFamily,
    alpha: f64,
    expected_m: Option<usize>,
    rng: &mut R,
) -> Result<InputAuditResult> {
    audit_one(filter, baseline, input, family, alpha, expected_m, rng).map(|(row, _)| row)
}

fn audit_one<R: Rng + ?Sized>(
    filter: &mut dyn FeedSource,
    baseline: &mut dyn FeedSource,
    input: &AuditInput,
    family: &ModelFamily,
    alpha: f64,
    expected_m: Option<usize>,
    rng: &mut R,
) -> Result<(InputAuditResult, usize)> {
    let z = fetch(filter, input, family, expected_m)?;
    let m = z.len();
    let z_b = fetch(baseline, input, family, Some(z.len()))?;
    let threshold = AuditThreshold::new(family.dimension(), z.len(), alpha)?;
    let (bit, eval) = audit_feeds(family, z, z_b, &threshold, rng)?;
    let mut flags = Vec::new();
    if eval.estimate_prime.boundary {
        flags.push(FLAG_BOUNDARY_PRIME.to_owned());
    }
    if eval.estimate_double_prime.boundary {
        flags.push(FLAG_BOUNDARY_DOUBLE_PRIME.to_owned());
    }
    let row = InputAuditResult {
        input_id: input.id.clone(),
        shuffle_bit: bit,
        theta_prime: eval.estimate_prime.theta,
        theta_double_prime: eval.estimate_double_prime.theta,
        statistics: eval.statistics,
        midpoint_statistic: eval.midpoint_statistic,
        tau: threshold.tau,
        verdict: eval.verdict,
        flags,
    };
    Ok((row, m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub alpha: f64,
    pub m: Option<usize>,
    pub n: usize,
    pub family: FamilyDescriptor,
    pub seed: u64,
    pub mode: AuditMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: ReportConfig,
    /// `n · α`.
    pub cumulative_false_positive_rate: f64,
    pub warnings: Vec<String>,
    pub results: Vec<InputAuditResult>,
    pub verdict: Verdict,
    /// Every input was audited (false after a strict early exit or an abort).
    pub complete: bool,
}

impl AuditReport {
    fn overall(results: &[InputAuditResult]) -> Verdict {
        if results.iter().all(|r| r.verdict.is_pass()) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Recomputes every statistic and verdict from the stored estimates.
    /// True when all of them are reproduced exactly.
    pub fn recheck(&self, family: &ModelFamily) -> Result<bool> {
        for row in &self.results {
            let info_p = family.fisher_information(&row.theta_prime)?;
            let info_pp = family.fisher_information(&row.theta_double_prime)?;
            let pair = TestStatisticPair {
                stat_prime: wald_statistic(&row.theta_prime, &row.theta_double_prime, &info_p)?,
                stat_double_prime: wald_statistic(&row.theta_prime, &row.theta_double_prime, &info_pp)?,
            };
            let threshold = AuditThreshold {
                tau: row.tau,
                r: family.dimension() as u32,
                m: self.config.m.unwrap_or(0),
                alpha: self.config.alpha,
            };
            if pair != row.statistics || robustness_decision(&pair, &threshold) != row.verdict {
                return Ok(false);
            }
        }
        Ok(Self::overall(&self.results) == self.verdict)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-input rows as CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let r = self.config.family.dimension.unwrap_or(0);
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["input_id".to_owned(), "shuffle_bit".to_owned()];
        header.extend((0..r).map(|i| format!("theta_prime_{i}")));
        header.extend((0..r).map(|i| format!("theta_dprime_{i}")));
        header.extend(
            ["stat_prime", "stat_dprime", "tau", "verdict", "flags"]
                .iter()
                .map(|s| (*s).to_owned()),
        );
        out.write_record(&header).map_err(csv_err)?;
        for row in &self.results {
            let mut rec = vec![row.input_id.clone(), row.shuffle_bit.to_string()];
            rec.extend(row.theta_prime.as_slice().iter().map(f64::to_string));
            rec.extend(row.theta_double_prime.as_slice().iter().map(f64::to_string));
            rec.push(row.statistics.stat_prime.to_string());
            rec.push(row.statistics.stat_double_prime.to_string());
            rec.push(row.tau.to_string());
            rec.push(row.verdict.to_string());
            rec.push(row.flags.join(";"));
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// A source failure, carrying the report of the inputs audited before it.
#[derive(Debug, Clone)]
pub struct AuditFailure {
    pub error: Error,
    pub partial: Option<Box<AuditReport>>,
}

impl std::fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for AuditFailure {}

impl From<Error> for AuditFailure {
    fn from(error: Error) -> Self {
        Self { error, partial: None }
    }
}

/// Runs the audit over `inputs`. Input `i` shuffles with the stream seeded by
/// `seed ^ i`, so results do not depend on evaluation order.
pub fn run_audit(
    filter: &mut dyn FeedSource,
    baseline: &mut dyn FeedSource,
    inputs: &[AuditInput],
    family: &ModelFamily,
    config: &AuditConfig,
) -> std::result::Result<AuditReport, AuditFailure> {
    if inputs.is_empty() {
        return Err(Error::Config("no audit inputs".into()).into());
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::Probability(config.alpha).into());
    }
    if config.m == Some(0) {
        return Err(Error::Config("feed length m must be at least 1".into()).into());
    }
    let mut seen = HashSet::new();
    if let Some(dup) = inputs.iter().find(|x| !seen.insert(x.id.as_str())) {
        return Err(Error::Config(format!("duplicate input id `{}`", dup.id)).into());
    }

    let n = inputs.len();
    let mut warnings = Vec::new();
    if config.alpha > 1.0 / n as f64 {
        warnings.push(format!(
            "alpha = {} exceeds 1/n = {}; cumulative false positive rate n*alpha = {}",
            config.alpha,
            1.0 / n as f64,
            n as f64 * config.alpha
        ));
    }

    let mut expected_m = config.m;
    let mut results = Vec::with_capacity(n);
    let mut complete = true;
    let build = |results: Vec<InputAuditResult>, m: Option<usize>, complete: bool, warnings: Vec<String>| AuditReport {
        config: ReportConfig {
            alpha: config.alpha,
            m,
            n,
            family: family.descriptor(),
            seed: config.seed,
            mode: config.mode,
        },
        cumulative_false_positive_rate: n as f64 * config.alpha,
        warnings,
        verdict: AuditReport::overall(&results),
        results,
        complete,
    };

    for (index, input) in inputs.iter().enumerate() {
        let mut shuffle = rng::seeded(config.seed ^ index as u64);
        match audit_one(filter, baseline, input, family, config.alpha, expected_m, &mut shuffle) {
            Ok((row, m)) => {
                expected_m.get_or_insert(m);
                let failed = !row.verdict.is_pass();
                results.push(row);
                if failed && config.mode == AuditMode::Strict {
                    complete = index + 1 == n;
                    break;
                }
            }
            Err(error) => {
                let partial = build(results, expected_m, false, warnings);
                return Err(AuditFailure {
                    error,
                    partial: Some(Box::new(partial)),
                });
            }
        }
    }
    Ok(build(results, expected_m, complete, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn gaussian() -> ModelFamily {
        ModelFamily::gaussian_mean_var()
    }

    fn sampler(name: &str, theta: Vec<f64>, m: usize, seed: u64) -> impl FeedSource {
        let family = gaussian();
        let theta = ParameterVector::new(theta);
        let mut counter = 0u64;
        FnSource::new(name, move |_input: &AuditInput| {
            counter += 1;
            family
                .sample_feed(&theta, m, &mut rng::stream(seed, counter))
                .map_err(|e| e.to_string())
        })
    }

    fn inputs(n: usize) -> Vec<AuditInput> {
        (0..n).map(|i| AuditInput::bare(format!("input-{i:03}"))).collect()
    }

    fn config(mode: AuditMode) -> AuditConfig {
        AuditConfig {
            alpha: 0.01,
            m: None,
            mode,
            seed: 11,
        }
    }

    #[test]
    fn shuffle_definition_and_balance() {
        let a = Feed::new(vec![1.0, 2.0]);
        let b = Feed::new(vec![3.0, 4.0]);
        let mut heads = None;
        let mut tails = None;
        let mut ones = 0usize;
        for seed in 0..10_000u64 {
            let (p, pp, bit) = shuffle_pair(a.clone(), b.clone(), &mut seeded(seed)).unwrap();
            if bit == 0 {
                assert_eq!((&p, &pp), (&a, &b));
                heads.get_or_insert(seed);
            } else {
                assert_eq!((&p, &pp), (&b, &a));
                tails.get_or_insert(seed);
                ones += 1;
            }
        }
        assert!(heads.is_some() && tails.is_some());
        let freq = ones as f64 / 10_000.0;
        assert!((freq - 0.5).abs() < 0.02, "{freq}");
        assert!(shuffle_pair(a, Feed::new(vec![1.0]), &mut seeded(0)).is_err());
    }

    #[test]
    fn identical_sources_pass_with_zero_statistics() {
        let fixed = Feed::new(vec![0.3, -1.2, 0.8, 2.0, -0.1]);
        let f = fixed.clone();
        let b = fixed.clone();
        let mut filter = FnSource::new("filter", move |_: &AuditInput| Ok(f.clone()));
        let mut baseline = FnSource::new("baseline", move |_: &AuditInput| Ok(b.clone()));
        let row = audit_input(
            &mut filter,
            &mut baseline,
            &AuditInput::bare("x"),
            &gaussian(),
            0.01,
            None,
            &mut seeded(1),
        )
        .unwrap();
        assert_eq!(row.theta_prime, row.theta_double_prime);
        assert_eq!(row.statistics.stat_prime, 0.0);
        assert_eq!(row.statistics.stat_double_prime, 0.0);
        assert_eq!(row.verdict, Verdict::Pass);
        assert_eq!(
            decision_robustness_check(&fixed, &fixed, &gaussian(), 0.01).unwrap(),
            Verdict::Pass
        );
    }

    #[test]
    fn strict_mode_stops_at_first_failure() {
        let mut calls = 0;
        let mut filter = FnSource::new("filter", move |_: &AuditInput| {
            calls += 1;
            let shift = if calls == 2 { 5.0 } else { 0.0 };
            Ok(Feed::new(vec![shift - 1.0, shift, shift + 1.0, shift + 0.5]))
        });
        let mut baseline = FnSource::new("baseline", |_: &AuditInput| Ok(Feed::new(vec![-1.0, 0.0, 1.0, 0.5])));
        let report = run_audit(
            &mut filter,
            &mut baseline,
            &inputs(3),
            &gaussian(),
            &config(AuditMode::Strict),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        assert_eq!(report.results.len(), 2);
        assert!(!report.complete);
        assert_eq!(report.config.m, Some(4));
    }

    #[test]
    fn all_pass_full_mode() {
        let feed = Feed::new(vec![-1.0, 0.0, 1.0, 0.5]);
        let (f, b) = (feed.clone(), feed);
        let mut filter = FnSource::new("filter", move |_: &AuditInput| Ok(f.clone()));
        let mut baseline = FnSource::new("baseline", move |_: &AuditInput| Ok(b.clone()));
        let report = run_audit(
            &mut filter,
            &mut baseline,
            &inputs(3),
            &gaussian(),
            &config(AuditMode::Full),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert_eq!(report.results.len(), 3);
        assert!(report.complete);
        // alpha = 0.01 <= 1/3: no warning
        assert!(report.warnings.is_empty());
        assert!(report.recheck(&gaussian()).unwrap());
    }

    #[test]
    fn alpha_above_one_over_n_warns() {
        let mut filter = sampler("filter", vec![0.0, 1.0], 30, 1);
        let mut baseline = sampler("baseline", vec![0.0, 1.0], 30, 2);
        let cfg = AuditConfig {
            alpha: 0.2,
            ..config(AuditMode::Full)
        };
        let report = run_audit(&mut filter, &mut baseline, &inputs(10), &gaussian(), &cfg).unwrap();
        assert_eq!(report.warnings.len(), 1);
        assert!((report.cumulative_false_positive_rate - 2.0).abs() < 1e-12);
    }

    #[test]
    fn source_errors_carry_partial_report() {
        let mut calls = 0;
        let mut filter = FnSource::new("filter", move |_: &AuditInput| {
            calls += 1;
            if calls == 3 {
                Ok(Feed::new(vec![0.0, 1.0]))
            } else {
                Ok(Feed::new(vec![0.0, 1.0, 2.0]))
            }
        });
        let mut baseline = FnSource::new("baseline", |_: &AuditInput| Ok(Feed::new(vec![0.5, 1.0, 2.0])));
        let err = run_audit(
            &mut filter,
            &mut baseline,
            &inputs(4),
            &gaussian(),
            &config(AuditMode::Full),
        )
        .unwrap_err();
        match &err.error {
            Error::Source { source_name, input, .. } => {
                assert_eq!(source_name, "filter");
                assert_eq!(input, "input-002");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(err.partial.unwrap().results.len(), 2);

        let mut bad = FnSource::new("baseline", |_: &AuditInput| Ok(Feed::new(vec![f64::NAN; 3])));
        let mut good = FnSource::new("filter", |_: &AuditInput| Ok(Feed::new(vec![0.0, 1.0, 2.0])));
        let err = run_audit(&mut good, &mut bad, &inputs(1), &gaussian(), &config(AuditMode::Full)).unwrap_err();
        assert!(matches!(err.error, Error::Source { ref source_name, .. } if source_name == "baseline"));
    }

    #[test]
    fn configuration_errors() {
        let mut f = sampler("f", vec![0.0, 1.0], 5, 1);
        let mut b = sampler("b", vec![0.0, 1.0], 5, 2);
        let fam = gaussian();
        assert!(run_audit(&mut f, &mut b, &[], &fam, &config(AuditMode::Full)).is_err());
        let dup = vec![AuditInput::bare("a"), AuditInput::bare("a")];
        assert!(run_audit(&mut f, &mut b, &dup, &fam, &config(AuditMode::Full)).is_err());
        let cfg = AuditConfig {
            alpha: 1.0,
            ..config(AuditMode::Full)
        };
        assert!(run_audit(&mut f, &mut b, &inputs(1), &fam, &cfg).is_err());
    }

    #[test]
    fn verdict_ignores_shuffle_order() {
        let fam = gaussian();
        let t = AuditThreshold::new(2, 30, 0.01).unwrap();
        for seed in 0..200u64 {
            let mut r = seeded(seed);
            let z = fam
                .sample_feed(&ParameterVector::new(vec![0.4, 1.3]), 30, &mut r)
                .unwrap();
            let zb = fam
                .sample_feed(&ParameterVector::new(vec![0.0, 1.0]), 30, &mut r)
                .unwrap();
            let a = evaluate_pair(&fam, &z, &zb, &t).unwrap();
            let b = evaluate_pair(&fam, &zb, &z, &t).unwrap();
            assert_eq!(a.verdict, b.verdict);
            assert_eq!(a.statistics, b.statistics.swapped());
        }
    }

    #[test]
    fn csv_rows() {
        let feed = Feed::new(vec![-1.0, 0.0, 1.0, 0.5]);
        let (f, b) = (feed.clone(), feed);
        let mut filter = FnSource::new("filter", move |_: &AuditInput| Ok(f.clone()));
        let mut baseline = FnSource::new("baseline", move |_: &AuditInput| Ok(b.clone()));
        let report = run_audit(
            &mut filter,
            &mut baseline,
            &inputs(2),
            &gaussian(),
            &config(AuditMode::Full),
        )
        .unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "input_id,shuffle_bit,theta_prime_0,theta_prime_1,theta_dprime_0,theta_dprime_1,stat_prime,stat_dprime,tau,verdict,flags"
        );
        assert_eq!(lines.count(), 2);
    }
}

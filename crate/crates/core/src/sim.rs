//! Synthetic platforms and baselines for exercising the audit without real
//! user data.
//!
//! Every source derives a fresh stream per input from its seed and the input
//! id, so a source answers the same input identically no matter how often or
//! in which order it is queried, and no matter whether it runs in-process or
//! behind the subprocess protocol.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::audit::{AuditInput, FeedSource};
use crate::error::{Error, Result};
use crate::family::{Feed, ModelFamily, ParameterVector};
use crate::rng;

/// Consented content and platform-injected content for one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentPools {
    baseline: Vec<f64>,
    injected: Vec<f64>,
}

impl ContentPools {
    pub fn new(baseline: Vec<f64>, injected: Vec<f64>) -> Result<Self> {
        if baseline.is_empty() {
            return Err(Error::Config("baseline pool is empty".into()));
        }
        if baseline.iter().chain(&injected).any(|x| !x.is_finite()) {
            return Err(Error::Config("pool items must be finite".into()));
        }
        let mut sorted = baseline.clone();
        sorted.sort_by(f64::total_cmp);
        if let Some(shared) = injected
            .iter()
            .find(|x| sorted.binary_search_by(|p| p.total_cmp(x)).is_ok())
        {
            return Err(Error::Config(format!(
                "item {shared} appears in both the baseline and the injected pool"
            )));
        }
        Ok(Self { baseline, injected })
    }

    pub fn baseline(&self) -> &[f64] {
        &self.baseline
    }

    pub fn injected(&self) -> &[f64] {
        &self.injected
    }
}

/// Distribution of the injected pool. Defaults to N(2, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectedSpec {
    #[serde(default = "InjectedSpec::default_mean")]
    pub mean: f64,
    #[serde(default = "InjectedSpec::default_variance")]
    pub variance: f64,
    pub size: usize,
}

impl InjectedSpec {
    fn default_mean() -> f64 {
        2.0
    }

    fn default_variance() -> f64 {
        1.0
    }

    pub fn with_size(size: usize) -> Self {
        Self {
            mean: Self::default_mean(),
            variance: Self::default_variance(),
            size,
        }
    }
}

fn normal(mean: f64, variance: f64) -> Result<Normal<f64>> {
    if !(variance >= 0.0 && variance.is_finite() && mean.is_finite()) {
        return Err(Error::Config(format!("invalid normal N({mean}, {variance})")));
    }
    Normal::new(mean, variance.sqrt()).map_err(|e| Error::Config(e.to_string()))
}

/// Materializes a finite baseline pool drawn from N(mean, variance), plus an
/// injected pool (same size as the baseline unless configured).
pub fn gaussian_pool_baseline<R: Rng + ?Sized>(
    mean: f64,
    variance: f64,
    pool_size: usize,
    injected: Option<InjectedSpec>,
    rng: &mut R,
) -> Result<ContentPools> {
    if pool_size == 0 {
        return Err(Error::Config("pool_size must be at least 1".into()));
    }
    let base = normal(mean, variance)?;
    let baseline: Vec<f64> = (0..pool_size).map(|_| base.sample(rng)).collect();
    let spec = injected.unwrap_or_else(|| InjectedSpec::with_size(pool_size));
    let inj = normal(spec.mean, spec.variance)?;
    let mut sorted = baseline.clone();
    sorted.sort_by(f64::total_cmp);
    let mut injected_pool = Vec::with_capacity(spec.size);
    while injected_pool.len() < spec.size {
        let x = inj.sample(rng);
        // keep the pools disjoint
        if sorted.binary_search_by(|p| p.total_cmp(&x)).is_err() {
            injected_pool.push(x);
        }
    }
    ContentPools::new(baseline, injected_pool)
}

/// Baseline feed drawn uniformly at random, with replacement, from the
/// baseline pool.
#[derive(Debug, Clone)]
pub struct UniformBaselineSource {
    name: String,
    pools: ContentPools,
    m: usize,
    seed: u64,
}

pub fn uniform_baseline_source(pools: ContentPools, m: usize, seed: u64) -> Result<UniformBaselineSource> {
    check_m(m)?;
    Ok(UniformBaselineSource {
        name: "uniform-baseline".into(),
        pools,
        m,
        seed,
    })
}

impl UniformBaselineSource {
    pub fn feed_for(&self, input: &AuditInput, m: usize) -> Feed {
        let mut r = rng::labelled_stream(self.seed, &input.id);
        let pool = self.pools.baseline();
        Feed::new((0..m).map(|_| pool[r.random_range(0..pool.len())]).collect())
    }
}

impl FeedSource for UniformBaselineSource {
    fn name(&self) -> &str {
        &self.name
    }

    fn query(&mut self, input: &AuditInput) -> std::result::Result<Feed, String> {
        Ok(self.feed_for(input, self.m))
    }
}

/// A platform that picks parameters θ and draws its feed i.i.d. from p(.; θ).
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricFilterPolicy {
    family: ModelFamily,
    theta: ParameterVector,
}

impl ParametricFilterPolicy {
    pub fn new(family: ModelFamily, theta: Vec<f64>) -> Result<Self> {
        let theta = family.parameter(theta)?;
        Ok(Self { family, theta })
    }

    pub fn family(&self) -> &ModelFamily {
        &self.family
    }

    pub fn theta(&self) -> &ParameterVector {
        &self.theta
    }
}

#[derive(Debug, Clone)]
pub struct ParametricFilterSource {
    name: String,
    policy: ParametricFilterPolicy,
    m: usize,
    seed: u64,
}

/// Source sampling from the policy. The input payload is ignored.
pub fn parametric_filter_source(policy: ParametricFilterPolicy, m: usize, seed: u64) -> Result<ParametricFilterSource> {
    check_m(m)?;
    Ok(ParametricFilterSource {
        name: format!("parametric{:?}", policy.theta.as_slice()),
        policy,
        m,
        seed,
    })
}

impl ParametricFilterSource {
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn feed_for(&self, input: &AuditInput, m: usize) -> Result<Feed> {
        let mut r = rng::labelled_stream(self.seed, &input.id);
        self.policy.family.sample_feed(&self.policy.theta, m, &mut r)
    }
}

impl FeedSource for ParametricFilterSource {
    fn name(&self) -> &str {
        &self.name
    }

    fn query(&mut self, input: &AuditInput) -> std::result::Result<Feed, String> {
        self.feed_for(input, self.m).map_err(|e| e.to_string())
    }
}

/// A platform mixing pools: each slot is drawn uniformly from the injected
/// pool with probability `injected_fraction`, else from the baseline pool.
#[derive(Debug, Clone)]
pub struct MixedPoolSource {
    name: String,
    pools: ContentPools,
    injected_fraction: f64,
    m: usize,
    seed: u64,
}

pub fn mixed_pool_source(pools: ContentPools, injected_fraction: f64, m: usize, seed: u64) -> Result<MixedPoolSource> {
    check_m(m)?;
    if !(0.0..=1.0).contains(&injected_fraction) {
        return Err(Error::Config(format!(
            "injected fraction {injected_fraction} outside [0, 1]"
        )));
    }
    if injected_fraction > 0.0 && pools.injected().is_empty() {
        return Err(Error::Config("injected pool is empty".into()));
    }
    Ok(MixedPoolSource {
        name: "mixed-pool".into(),
        pools,
        injected_fraction,
        m,
        seed,
    })
}

impl MixedPoolSource {
    pub fn feed_for(&self, input: &AuditInput, m: usize) -> Feed {
        let mut r = rng::labelled_stream(self.seed, &input.id);
        let (base, inj) = (self.pools.baseline(), self.pools.injected());
        Feed::new(
            (0..m)
                .map(|_| {
                    if r.random::<f64>() < self.injected_fraction {
                        inj[r.random_range(0..inj.len())]
                    } else {
                        base[r.random_range(0..base.len())]
                    }
                })
                .collect(),
        )
    }
}

impl FeedSource for MixedPoolSource {
    fn name(&self) -> &str {
        &self.name
    }

    fn query(&mut self, input: &AuditInput) -> std::result::Result<Feed, String> {
        Ok(self.feed_for(input, self.m))
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        Err(Error::EmptyFeed)
    } else {
        Ok(())
    }
}

/// Shape of synthetic user payloads: `{"features": [...]}` with `dim`
/// independent N(0, scale²) entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    #[serde(default = "InputSpec::default_dim")]
    pub dim: usize,
    #[serde(default = "InputSpec::default_scale")]
    pub scale: f64,
}

impl InputSpec {
    fn default_dim() -> usize {
        4
    }

    fn default_scale() -> f64 {
        1.0
    }
}

impl Default for InputSpec {
    fn default() -> Self {
        Self {
            dim: Self::default_dim(),
            scale: Self::default_scale(),
        }
    }
}

/// `n` synthetic inputs with ids `input-000`, `input-001`, ...
pub fn generate_inputs<R: Rng + ?Sized>(n: usize, spec: &InputSpec, rng: &mut R) -> Result<Vec<AuditInput>> {
    if n == 0 {
        return Err(Error::Config("need at least one input".into()));
    }
    let dist = normal(0.0, spec.scale * spec.scale)?;
    Ok((0..n)
        .map(|i| {
            let features: Vec<f64> = (0..spec.dim).map(|_| dist.sample(rng)).collect();
            AuditInput::new(format!("input-{i:03}"), &serde_json::json!({ "features": features }))
        })
        .collect())
}

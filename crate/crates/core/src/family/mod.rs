//! Parametric model families: the set Θ that decision robustness is measured
//! against.
//!
//! Four families ship: a Gaussian with unknown mean and variance, a Gaussian
//! with known variance, a Bernoulli coin, and a `k`-symbol categorical. Every
//! family works on one-dimensional content features: feed items are `f64`
//! values, with bits encoded as `0.0`/`1.0` and categorical symbols as the
//! integers `0..k`.

mod fisher;
mod mle;
mod regularity;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fisher::FisherMatrix;
pub use mle::{MLE_MAX_ITERATIONS, MLE_RESTARTS, MLE_TOLERANCE};
pub use regularity::{ConditionCheck, RegularityReport};

pub const DEFAULT_MEAN_RANGE: Interval = Interval(-10.0, 10.0);
pub const DEFAULT_VARIANCE_RANGE: Interval = Interval(0.01, 25.0);

/// Closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval(pub f64, pub f64);

impl Interval {
    pub fn lo(&self) -> f64 {
        self.0
    }

    pub fn hi(&self) -> f64 {
        self.1
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.0 && x <= self.1
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.0).min(self.1)
    }

    pub fn width(&self) -> f64 {
        self.1 - self.0
    }
}

/// A point θ in a family's parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    /// Wraps raw coordinates. Family membership is checked by
    /// [`ModelFamily::parameter`].
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Coordinate-wise `self - other`.
    pub fn difference(&self, other: &ParameterVector) -> Result<Vec<f64>> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "parameter lengths {} and {} differ",
                self.len(),
                other.len()
            )));
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Coordinate-wise midpoint `(self + other) / 2`.
    pub fn midpoint(&self, other: &ParameterVector) -> Result<ParameterVector> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "parameter lengths {} and {} differ",
                self.len(),
                other.len()
            )));
        }
        Ok(ParameterVector(
            self.0.iter().zip(&other.0).map(|(a, b)| 0.5 * (a + b)).collect(),
        ))
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl std::ops::Index<usize> for ParameterVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// An ordered feed of `m` content items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Feed(Vec<f64>);

impl Feed {
    pub fn new(items: Vec<f64>) -> Self {
        Self(items)
    }

    pub fn items(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_items(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for Feed {
    fn from(items: Vec<f64>) -> Self {
        Self(items)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSpace {
    Real,
    Bit,
    Symbol { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    /// θ = (μ, σ²).
    GaussianMeanVar,
    /// θ = (μ), variance fixed.
    GaussianKnownVar { variance: f64 },
    /// θ = (p) = P(z = 1).
    Bernoulli,
    /// θ = first `k - 1` symbol probabilities; the last is implied.
    Categorical { k: usize },
}

/// Serializable family description:
/// `{"id": ..., "dimension": r, "domain": [[lo, hi], ...], "fixed": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDescriptor {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<Interval>>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
}

impl FamilyDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Family(e.to_string()))
    }
}

/// Result of maximum-likelihood estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub theta: ParameterVector,
    /// The maximizer sits on the domain boundary, or was moved there or off
    /// a probability of 0 or 1 to keep the Fisher information nonsingular.
    pub boundary: bool,
}

/// An immutable parametric family over a bounded box domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily {
    kind: FamilyKind,
    domain: Vec<Interval>,
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl ModelFamily {
    pub fn new(kind: FamilyKind, domain: Option<Vec<Interval>>) -> Result<Self> {
        let domain = domain.unwrap_or_else(|| default_domain(kind));
        let family = Self { kind, domain };
        family.validate()?;
        Ok(family)
    }

    pub fn gaussian_mean_var() -> Self {
        Self::new(FamilyKind::GaussianMeanVar, None).expect("default domain is valid")
    }

    pub fn gaussian_known_var(variance: f64) -> Result<Self> {
        Self::new(FamilyKind::GaussianKnownVar { variance }, None)
    }

    pub fn bernoulli() -> Self {
        Self::new(FamilyKind::Bernoulli, None).expect("default domain is valid")
    }

    pub fn categorical(k: usize) -> Result<Self> {
        Self::new(FamilyKind::Categorical { k }, None)
    }

    pub fn from_descriptor(desc: &FamilyDescriptor) -> Result<Self> {
        let kind = match desc.id.as_str() {
            "gaussian-mean-var" => FamilyKind::GaussianMeanVar,
            "gaussian-known-var" => FamilyKind::GaussianKnownVar {
                variance: desc.fixed.get("variance").copied().unwrap_or(1.0),
            },
            "bernoulli" => FamilyKind::Bernoulli,
            other => match other.strip_prefix("categorical-") {
                Some(k) => FamilyKind::Categorical {
                    k: k.parse()
                        .map_err(|_| Error::Family(format!("bad categorical id `{other}`")))?,
                },
                None => return Err(Error::Family(format!("unknown family id `{other}`"))),
            },
        };
        let allowed_fixed: &[&str] = match kind {
            FamilyKind::GaussianKnownVar { .. } => &["variance"],
            _ => &[],
        };
        if let Some(key) = desc.fixed.keys().find(|k| !allowed_fixed.contains(&k.as_str())) {
            return Err(Error::Family(format!("`{}` takes no fixed parameter `{key}`", desc.id)));
        }
        let family = Self::new(kind, desc.domain.clone())?;
        if let Some(r) = desc.dimension {
            if r != family.dimension() {
                return Err(Error::Family(format!(
                    "`{}` has dimension {}, descriptor says {r}",
                    desc.id,
                    family.dimension()
                )));
            }
        }
        Ok(family)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_descriptor(&FamilyDescriptor::from_json(text)?)
    }

    pub fn descriptor(&self) -> FamilyDescriptor {
        let mut fixed = BTreeMap::new();
        if let FamilyKind::GaussianKnownVar { variance } = self.kind {
            fixed.insert("variance".to_owned(), variance);
        }
        FamilyDescriptor {
            id: self.id(),
            dimension: Some(self.dimension()),
            domain: Some(self.domain.clone()),
            fixed,
        }
    }

    fn validate(&self) -> Result<()> {
        let r = self.dimension();
        if r == 0 {
            return Err(Error::Family("dimension must be positive".into()));
        }
        if self.domain.len() != r {
            return Err(Error::Family(format!(
                "domain has {} intervals, dimension is {r}",
                self.domain.len()
            )));
        }
        for (i, iv) in self.domain.iter().enumerate() {
            if iv.lo().is_nan() || iv.hi().is_nan() || !(iv.lo() < iv.hi()) {
                return Err(Error::Family(format!(
                    "domain interval {i} = [{}, {}] has no interior",
                    iv.lo(),
                    iv.hi()
                )));
            }
        }
        match self.kind {
            FamilyKind::GaussianMeanVar => {
                if !(self.domain[1].lo() > 0.0) {
                    return Err(Error::Family(
                        "variance interval must have a positive lower bound".into(),
                    ));
                }
            }
            FamilyKind::GaussianKnownVar { variance } => {
                if !(variance > 0.0 && variance.is_finite()) {
                    return Err(Error::Family(format!(
                        "known variance {variance} must be positive and finite"
                    )));
                }
            }
            FamilyKind::Bernoulli => {
                if self.domain[0].lo() < 0.0 || self.domain[0].hi() > 1.0 {
                    return Err(Error::Family("probability interval must lie in [0, 1]".into()));
                }
            }
            FamilyKind::Categorical { k } => {
                if k < 2 {
                    return Err(Error::Family(format!("categorical needs k >= 2, got {k}")));
                }
                if self.domain.iter().any(|iv| iv.lo() < 0.0 || iv.hi() > 1.0) {
                    return Err(Error::Family("probability intervals must lie in [0, 1]".into()));
                }
                let lo_sum: f64 = self.domain.iter().map(Interval::lo).sum();
                let cap = self.simplex_cap().unwrap_or(1.0);
                if !(lo_sum < cap) {
                    return Err(Error::Family("domain box does not meet the probability simplex".into()));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn id(&self) -> String {
        match self.kind {
            FamilyKind::GaussianMeanVar => "gaussian-mean-var".into(),
            FamilyKind::GaussianKnownVar { .. } => "gaussian-known-var".into(),
            FamilyKind::Bernoulli => "bernoulli".into(),
            FamilyKind::Categorical { k } => format!("categorical-{k}"),
        }
    }

    /// Number of free parameters `r`.
    pub fn dimension(&self) -> usize {
        match self.kind {
            FamilyKind::GaussianMeanVar => 2,
            FamilyKind::GaussianKnownVar { .. } | FamilyKind::Bernoulli => 1,
            FamilyKind::Categorical { k } => k.saturating_sub(1),
        }
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn sample_space(&self) -> SampleSpace {
        match self.kind {
            FamilyKind::GaussianMeanVar | FamilyKind::GaussianKnownVar { .. } => SampleSpace::Real,
            FamilyKind::Bernoulli => SampleSpace::Bit,
            FamilyKind::Categorical { k } => SampleSpace::Symbol { k },
        }
    }

    /// Upper bound on the sum of the free categorical coordinates. The implied
    /// last probability gets the smallest lower bound of the free ones.
    pub fn simplex_cap(&self) -> Option<f64> {
        match self.kind {
            FamilyKind::Categorical { .. } => {
                let floor = self.domain.iter().map(Interval::lo).fold(f64::INFINITY, f64::min);
                Some(1.0 - floor)
            }
            _ => None,
        }
    }

    pub fn check_parameter(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dimension() {
            return Err(Error::Dimension {
                expected: self.dimension(),
                got: theta.len(),
            });
        }
        for (index, (&value, iv)) in theta.iter().zip(&self.domain).enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if !iv.contains(value) {
                return Err(Error::Domain {
                    index,
                    value,
                    lo: iv.lo(),
                    hi: iv.hi(),
                });
            }
        }
        if let Some(cap) = self.simplex_cap() {
            let sum: f64 = theta.iter().sum();
            if sum > cap + 1e-12 {
                return Err(Error::Simplex { sum, cap });
            }
        }
        Ok(())
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.check_parameter(theta).is_ok()
    }

    /// Validated parameter vector.
    pub fn parameter(&self, values: Vec<f64>) -> Result<ParameterVector> {
        self.check_parameter(&values)?;
        Ok(ParameterVector(values))
    }

    pub fn in_support(&self, z: f64) -> bool {
        match self.sample_space() {
            SampleSpace::Real => z.is_finite(),
            SampleSpace::Bit => z == 0.0 || z == 1.0,
            SampleSpace::Symbol { k } => z >= 0.0 && z < k as f64 && z.fract() == 0.0,
        }
    }

    pub fn check_feed(&self, feed: &Feed) -> Result<()> {
        if feed.is_empty() {
            return Err(Error::EmptyFeed);
        }
        match feed.items().iter().position(|z| !self.in_support(*z)) {
            Some(index) => Err(Error::OutOfSupport {
                index,
                value: feed.items()[index],
            }),
            None => Ok(()),
        }
    }

    /// `log p(z; θ)`; `-inf` for `z` outside the support.
    pub fn log_density(&self, theta: &ParameterVector, z: f64) -> Result<f64> {
        self.check_parameter(theta.as_slice())?;
        Ok(self.log_density_raw(theta.as_slice(), z))
    }

    pub(crate) fn log_density_raw(&self, theta: &[f64], z: f64) -> f64 {
        if !self.in_support(z) {
            return f64::NEG_INFINITY;
        }
        match self.kind {
            FamilyKind::GaussianMeanVar => gaussian_log_density(z, theta[0], theta[1]),
            FamilyKind::GaussianKnownVar { variance } => gaussian_log_density(z, theta[0], variance),
            FamilyKind::Bernoulli => {
                if z == 1.0 {
                    theta[0].ln()
                } else {
                    (1.0 - theta[0]).ln()
                }
            }
            FamilyKind::Categorical { k } => {
                let s = z as usize;
                if s + 1 == k {
                    (1.0 - theta.iter().sum::<f64>()).ln()
                } else {
                    theta[s].ln()
                }
            }
        }
    }

    /// Draws `m` i.i.d. items from `p(.; θ)`.
    pub fn sample_feed<R: Rng + ?Sized>(&self, theta: &ParameterVector, m: usize, rng: &mut R) -> Result<Feed> {
        self.check_parameter(theta.as_slice())?;
        if m == 0 {
            return Err(Error::EmptyFeed);
        }
        let t = theta.as_slice();
        let items = match self.kind {
            FamilyKind::GaussianMeanVar => sample_gaussian(t[0], t[1], m, rng),
            FamilyKind::GaussianKnownVar { variance } => sample_gaussian(t[0], variance, m, rng),
            FamilyKind::Bernoulli => (0..m)
                .map(|_| if rng.random::<f64>() < t[0] { 1.0 } else { 0.0 })
                .collect(),
            FamilyKind::Categorical { k } => (0..m)
                .map(|_| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for (s, p) in t.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            return s as f64;
                        }
                    }
                    (k - 1) as f64
                })
                .collect(),
        };
        Ok(Feed(items))
    }

    /// Closed-form maximum-likelihood estimate over the domain.
    pub fn mle(&self, feed: &Feed) -> Result<Estimate> {
        self.check_feed(feed)?;
        let z = feed.items();
        let m = z.len() as f64;
        let raw = match self.kind {
            FamilyKind::GaussianMeanVar => {
                let mean = z.iter().sum::<f64>() / m;
                let var = z.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m;
                vec![mean, var]
            }
            FamilyKind::GaussianKnownVar { .. } => vec![z.iter().sum::<f64>() / m],
            FamilyKind::Bernoulli => vec![z.iter().sum::<f64>() / m],
            FamilyKind::Categorical { k } => {
                let counts = symbol_counts(z, k);
                counts[..k - 1].iter().map(|c| *c as f64 / m).collect()
            }
        };
        Ok(self.finish(raw, feed.len()))
    }

    /// Projects a likelihood maximizer into the domain, pulls it off points
    /// where the information would be singular, and flags the estimate when
    /// it was moved or sits on the domain boundary. Probabilities are kept at
    /// least `1 / (2m)` away from 0 and 1.
    pub(crate) fn finish(&self, raw: Vec<f64>, m: usize) -> Estimate {
        let eps = 0.5 / m as f64;
        let mut theta = raw.clone();
        self.project(&mut theta);
        match self.kind {
            FamilyKind::Bernoulli => {
                theta[0] = theta[0].clamp(eps, 1.0 - eps);
            }
            FamilyKind::Categorical { .. } => {
                let implied = 1.0 - theta.iter().sum::<f64>();
                if implied < eps || theta.iter().any(|p| *p < eps) {
                    let mut full: Vec<f64> = theta.iter().copied().chain([implied]).collect();
                    for p in &mut full {
                        *p = p.max(eps);
                    }
                    let total: f64 = full.iter().sum();
                    full.truncate(full.len() - 1);
                    theta = full.into_iter().map(|p| p / total).collect();
                }
            }
            _ => {}
        }
        self.project(&mut theta);
        let boundary = theta != raw || self.on_boundary(&theta);
        Estimate {
            theta: ParameterVector(theta),
            boundary,
        }
    }

    pub fn on_boundary(&self, theta: &[f64]) -> bool {
        let on_box = theta
            .iter()
            .zip(&self.domain)
            .any(|(x, iv)| *x <= iv.lo() || *x >= iv.hi());
        let on_cap = self.simplex_cap().is_some_and(|cap| theta.iter().sum::<f64>() >= cap);
        on_box || on_cap
    }

    /// Euclidean projection onto the domain (box, plus the simplex cap for
    /// categorical families).
    pub fn project(&self, theta: &mut [f64]) {
        for (x, iv) in theta.iter_mut().zip(&self.domain) {
            *x = iv.clamp(*x);
        }
        let Some(cap) = self.simplex_cap() else {
            return;
        };
        if theta.iter().sum::<f64>() <= cap {
            return;
        }
        // Shift by λ and re-clamp; the clamped sum is monotone in λ.
        let shifted_sum = |lambda: f64, theta: &[f64]| -> f64 {
            theta.iter().zip(&self.domain).map(|(x, iv)| iv.clamp(x - lambda)).sum()
        };
        let mut lo = 0.0;
        let mut hi = theta.iter().fold(0.0_f64, |a, x| a.max(*x)) + 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if shifted_sum(mid, theta) > cap {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 {
                break;
            }
        }
        for (x, iv) in theta.iter_mut().zip(&self.domain) {
            *x = iv.clamp(*x - hi);
        }
    }

    /// Analytic Fisher information of a single observation.
    pub fn fisher_information(&self, theta: &ParameterVector) -> Result<FisherMatrix> {
        let t = theta.as_slice();
        self.check_parameter(t)?;
        let singular = || Error::SingularInformation { theta: t.to_vec() };
        match self.kind {
            FamilyKind::GaussianMeanVar => {
                let v = t[1];
                if !(v > 0.0) {
                    return Err(singular());
                }
                Ok(FisherMatrix::diagonal(&[1.0 / v, 1.0 / (2.0 * v * v)]))
            }
            FamilyKind::GaussianKnownVar { variance } => Ok(FisherMatrix::diagonal(&[1.0 / variance])),
            FamilyKind::Bernoulli => {
                let p = t[0];
                if !(p > 0.0 && p < 1.0) {
                    return Err(singular());
                }
                Ok(FisherMatrix::diagonal(&[1.0 / (p * (1.0 - p))]))
            }
            FamilyKind::Categorical { .. } => {
                let last = 1.0 - t.iter().sum::<f64>();
                if !(last > 0.0) || t.iter().any(|p| !(*p > 0.0)) {
                    return Err(singular());
                }
                let r = t.len();
                let mut entries = vec![1.0 / last; r * r];
                for i in 0..r {
                    entries[i * r + i] += 1.0 / t[i];
                }
                FisherMatrix::new(r, entries)
            }
        }
    }

    pub(crate) fn log_likelihood(&self, theta: &[f64], z: &[f64]) -> f64 {
        match self.kind {
            FamilyKind::Categorical { k } => {
                let counts = symbol_counts(z, k);
                let last = 1.0 - theta.iter().sum::<f64>();
                counts
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c > 0)
                    .map(|(s, c)| {
                        let p = if s + 1 == k { last } else { theta[s] };
                        *c as f64 * p.ln()
                    })
                    .sum()
            }
            _ => z.iter().map(|x| self.log_density_raw(theta, *x)).sum(),
        }
    }

    /// Gradient of the feed log-likelihood in θ.
    pub(crate) fn score(&self, theta: &[f64], z: &[f64]) -> Vec<f64> {
        let m = z.len() as f64;
        match self.kind {
            FamilyKind::GaussianMeanVar => {
                let (mu, v) = (theta[0], theta[1]);
                let s1: f64 = z.iter().map(|x| x - mu).sum();
                let s2: f64 = z.iter().map(|x| (x - mu) * (x - mu)).sum();
                vec![s1 / v, -m / (2.0 * v) + s2 / (2.0 * v * v)]
            }
            FamilyKind::GaussianKnownVar { variance } => {
                vec![z.iter().map(|x| x - theta[0]).sum::<f64>() / variance]
            }
            FamilyKind::Bernoulli => {
                let ones: f64 = z.iter().sum();
                let zeros = m - ones;
                let p = theta[0];
                let up = if ones > 0.0 { ones / p } else { 0.0 };
                let down = if zeros > 0.0 { zeros / (1.0 - p) } else { 0.0 };
                vec![up - down]
            }
            FamilyKind::Categorical { k } => {
                let counts = symbol_counts(z, k);
                let last = 1.0 - theta.iter().sum::<f64>();
                let tail = if counts[k - 1] > 0 {
                    counts[k - 1] as f64 / last
                } else {
                    0.0
                };
                (0..k - 1)
                    .map(|s| {
                        let head = if counts[s] > 0 {
                            counts[s] as f64 / theta[s]
                        } else {
                            0.0
                        };
                        head - tail
                    })
                    .collect()
            }
        }
    }

    pub fn validate_regularity(&self) -> RegularityReport {
        regularity::validate(self)
    }
}

fn default_domain(kind: FamilyKind) -> Vec<Interval> {
    match kind {
        FamilyKind::GaussianMeanVar => vec![DEFAULT_MEAN_RANGE, DEFAULT_VARIANCE_RANGE],
        FamilyKind::GaussianKnownVar { .. } => vec![DEFAULT_MEAN_RANGE],
        FamilyKind::Bernoulli => vec![Interval(0.0, 1.0)],
        FamilyKind::Categorical { k } => vec![Interval(0.0, 1.0); k.saturating_sub(1)],
    }
}

fn gaussian_log_density(z: f64, mean: f64, variance: f64) -> f64 {
    let d = z - mean;
    -0.5 * (2.0 * PI * variance).ln() - d * d / (2.0 * variance)
}

fn sample_gaussian<R: Rng + ?Sized>(mean: f64, variance: f64, m: usize, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(mean, variance.sqrt()).expect("variance validated positive");
    (0..m).map(|_| normal.sample(rng)).collect()
}

fn symbol_counts(z: &[f64], k: usize) -> Vec<u64> {
    let mut counts = vec![0u64; k];
    for x in z {
        counts[*x as usize] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn pv(v: &[f64]) -> ParameterVector {
        ParameterVector::new(v.to_vec())
    }

    #[test]
    fn log_density_examples() {
        let g = ModelFamily::gaussian_mean_var();
        let at_mode = g.log_density(&pv(&[0.0, 1.0]), 0.0).unwrap();
        assert!((at_mode + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        assert!((at_mode + 0.918_938_533_2).abs() < 1e-9);

        let b = ModelFamily::bernoulli();
        assert!((b.log_density(&pv(&[0.5]), 1.0).unwrap() - 0.5_f64.ln()).abs() < 1e-15);

        let v = g.log_density(&pv(&[2.0, 4.0]), 4.0).unwrap();
        assert!((v - (-0.5 * (8.0 * PI).ln() - 0.5)).abs() < 1e-14);
    }

    #[test]
    fn log_density_errors_and_support() {
        let g = ModelFamily::gaussian_mean_var();
        assert!(matches!(
            g.log_density(&pv(&[0.0, 30.0]), 0.0),
            Err(Error::Domain { index: 1, .. })
        ));
        assert!(matches!(g.log_density(&pv(&[0.0]), 0.0), Err(Error::Dimension { .. })));
        let b = ModelFamily::bernoulli();
        assert_eq!(b.log_density(&pv(&[0.3]), 0.5).unwrap(), f64::NEG_INFINITY);
        let c = ModelFamily::categorical(3).unwrap();
        assert_eq!(c.log_density(&pv(&[0.3, 0.3]), 3.0).unwrap(), f64::NEG_INFINITY);
        assert!((c.log_density(&pv(&[0.3, 0.3]), 2.0).unwrap() - 0.4_f64.ln()).abs() < 1e-15);
        assert!(matches!(
            c.log_density(&pv(&[0.7, 0.7]), 0.0),
            Err(Error::Simplex { .. })
        ));
    }

    #[test]
    fn degenerate_coin_and_determinism() {
        let b = ModelFamily::bernoulli();
        let feed = b.sample_feed(&pv(&[1.0]), 5, &mut seeded(1)).unwrap();
        assert_eq!(feed.items(), &[1.0; 5]);

        let g = ModelFamily::gaussian_mean_var();
        let a = g.sample_feed(&pv(&[0.0, 1.0]), 50, &mut seeded(42)).unwrap();
        let c = g.sample_feed(&pv(&[0.0, 1.0]), 50, &mut seeded(42)).unwrap();
        assert_eq!(a, c);
        assert!(matches!(
            g.sample_feed(&pv(&[0.0, 1.0]), 0, &mut seeded(1)),
            Err(Error::EmptyFeed)
        ));
    }

    #[test]
    fn large_gaussian_sample_mean() {
        let g = ModelFamily::gaussian_mean_var();
        let feed = g.sample_feed(&pv(&[0.0, 1.0]), 1_000_000, &mut seeded(2024)).unwrap();
        let mean = feed.items().iter().sum::<f64>() / feed.len() as f64;
        assert!(mean.abs() < 0.004, "mean {mean}");
    }

    #[test]
    fn closed_form_mle_examples() {
        let g = ModelFamily::gaussian_mean_var();
        let est = g.mle(&Feed::new(vec![1.0, 2.0, 3.0])).unwrap();
        assert!((est.theta[0] - 2.0).abs() < 1e-15);
        assert!((est.theta[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!(!est.boundary);

        let b = ModelFamily::bernoulli();
        let est = b.mle(&Feed::new(vec![1.0, 0.0, 1.0, 1.0])).unwrap();
        assert_eq!(est.theta.as_slice(), &[0.75]);
        assert!(!est.boundary);
    }

    #[test]
    fn degenerate_feeds_are_clamped_and_flagged() {
        let g = ModelFamily::gaussian_mean_var();
        let est = g.mle(&Feed::new(vec![3.0; 10])).unwrap();
        assert_eq!(est.theta.as_slice(), &[3.0, 0.01]);
        assert!(est.boundary);
        assert!(g.fisher_information(&est.theta).is_ok());

        let b = ModelFamily::bernoulli();
        let est = b.mle(&Feed::new(vec![1.0; 10])).unwrap();
        assert!((est.theta[0] - 0.95).abs() < 1e-15);
        assert!(est.boundary);

        let c = ModelFamily::categorical(3).unwrap();
        let est = c.mle(&Feed::new(vec![0.0, 0.0, 1.0, 1.0])).unwrap();
        assert!(est.boundary);
        assert!(c.fisher_information(&est.theta).is_ok());

        assert!(matches!(g.mle(&Feed::new(vec![])), Err(Error::EmptyFeed)));
        assert!(matches!(
            b.mle(&Feed::new(vec![0.0, 2.0])),
            Err(Error::OutOfSupport { index: 1, .. })
        ));
    }

    #[test]
    fn fisher_examples() {
        let g = ModelFamily::gaussian_mean_var();
        let i = g.fisher_information(&pv(&[0.0, 1.0])).unwrap();
        assert_eq!(i.entries(), &[1.0, 0.0, 0.0, 0.5]);
        let b = ModelFamily::bernoulli();
        assert_eq!(b.fisher_information(&pv(&[0.5])).unwrap().get(0, 0), 4.0);
        assert!(matches!(
            b.fisher_information(&pv(&[0.0])),
            Err(Error::SingularInformation { .. })
        ));
        let c = ModelFamily::categorical(3).unwrap();
        let i = c.fisher_information(&pv(&[0.2, 0.3])).unwrap();
        assert!((i.get(0, 0) - (5.0 + 2.0)).abs() < 1e-12);
        assert!((i.get(0, 1) - 2.0).abs() < 1e-12);
        assert!(c.fisher_information(&pv(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        let json = r#"{"id": "gaussian-known-var", "dimension": 1, "domain": [[-5, 5]], "fixed": {"variance": 2.0}}"#;
        let fam = ModelFamily::from_json(json).unwrap();
        assert_eq!(fam.kind(), FamilyKind::GaussianKnownVar { variance: 2.0 });
        let back = serde_json::to_string(&fam.descriptor()).unwrap();
        assert_eq!(ModelFamily::from_json(&back).unwrap(), fam);

        assert!(ModelFamily::from_json(r#"{"id": "poisson"}"#).is_err());
        assert!(ModelFamily::from_json(r#"{"id": "bernoulli", "dimension": 2}"#).is_err());
        assert!(ModelFamily::from_json(r#"{"id": "bernoulli", "extra": 1}"#).is_err());
        assert!(ModelFamily::from_json(r#"{"id": "gaussian-mean-var", "domain": [[0, 1], [0, 1]]}"#).is_err());
        let c = ModelFamily::from_json(r#"{"id": "categorical-4"}"#).unwrap();
        assert_eq!(c.dimension(), 3);
    }

    #[test]
    fn projection_respects_simplex() {
        let c = ModelFamily::categorical(3).unwrap();
        let mut t = vec![0.9, 0.8];
        c.project(&mut t);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((t[0] - 0.55).abs() < 1e-12 && (t[1] - 0.45).abs() < 1e-12);
    }
}

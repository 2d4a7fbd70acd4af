//! Invariants of the families, the engine and the simulated sources, checked
//! against independent computations.

use feedaudit::audit::{
    audit_feeds, decision_robustness_check, run_audit, AuditConfig, AuditInput, AuditMode, FnSource,
};
use feedaudit::family::{Feed, ModelFamily, ParameterVector};
use feedaudit::rng::{seeded, stream};
use feedaudit::sim::{
    gaussian_pool_baseline, parametric_filter_source, uniform_baseline_source, ContentPools, ParametricFilterPolicy,
};
use feedaudit::stats::{AuditThreshold, Verdict};
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn families() -> Vec<ModelFamily> {
    vec![
        ModelFamily::gaussian_mean_var(),
        ModelFamily::gaussian_known_var(2.0).unwrap(),
        ModelFamily::bernoulli(),
        ModelFamily::categorical(3).unwrap(),
    ]
}

/// Interior point of the family chosen from uniforms in [0, 1).
fn interior(family: &ModelFamily, u: &[f64]) -> ParameterVector {
    let theta = match family.id().as_str() {
        "gaussian-mean-var" => vec![-3.0 + 6.0 * u[0], 0.3 + 4.0 * u[1]],
        "gaussian-known-var" => vec![-3.0 + 6.0 * u[0]],
        "bernoulli" => vec![0.1 + 0.8 * u[0]],
        _ => {
            let a = 0.1 + 0.5 * u[0];
            let b = 0.1 + (0.8 - a) * u[1];
            vec![a, b]
        }
    };
    family.parameter(theta).unwrap()
}

/// Trapezoid rule over ±12 standard deviations.
fn integrate_gaussian(family: &ModelFamily, theta: &ParameterVector, mean: f64, var: f64) -> f64 {
    let sd = var.sqrt();
    let (lo, hi, n) = (mean - 12.0 * sd, mean + 12.0 * sd, 20_000);
    let h = (hi - lo) / n as f64;
    (0..=n)
        .map(|i| {
            let z = lo + h * i as f64;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * family.log_density(theta, z).unwrap().exp()
        })
        .sum::<f64>()
        * h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn densities_normalize(u in proptest::collection::vec(0.0f64..1.0, 2)) {
        for family in families() {
            let theta = interior(&family, &u);
            let total = match family.id().as_str() {
                "gaussian-mean-var" => integrate_gaussian(&family, &theta, theta[0], theta[1]),
                "gaussian-known-var" => integrate_gaussian(&family, &theta, theta[0], 2.0),
                "bernoulli" => [0.0, 1.0].iter().map(|z| family.log_density(&theta, *z).unwrap().exp()).sum(),
                _ => (0..3).map(|z| family.log_density(&theta, z as f64).unwrap().exp()).sum(),
            };
            prop_assert!((total - 1.0).abs() < 1e-9, "{}: {total}", family.id());
        }
    }

    #[test]
    fn samplers_are_consistent_with_the_information(
        u in proptest::collection::vec(0.0f64..1.0, 2),
        seed in any::<u64>(),
    ) {
        let m = 20_000;
        for family in families() {
            let theta = interior(&family, &u);
            let feed = family.sample_feed(&theta, m, &mut seeded(seed)).unwrap();
            let est = family.mle(&feed).unwrap();
            let cov = family.fisher_information(&theta).unwrap().inverse().unwrap();
            for i in 0..theta.len() {
                let bound = 4.0 * (cov.get(i, i) / m as f64).sqrt();
                prop_assert!(
                    (est.theta[i] - theta[i]).abs() <= bound,
                    "{} coord {i}: {} vs {} (bound {bound})", family.id(), est.theta[i], theta[i]
                );
            }
        }
    }

    #[test]
    fn verdict_is_symmetric_in_its_feeds(seed in any::<u64>(), shift in -1.0f64..1.0, m in 2usize..60) {
        let fam = ModelFamily::gaussian_mean_var();
        let mut r = seeded(seed);
        let a = fam.sample_feed(&ParameterVector::new(vec![0.0, 1.0]), m, &mut r).unwrap();
        let b = fam.sample_feed(&ParameterVector::new(vec![shift, 1.2]), m, &mut r).unwrap();
        prop_assert_eq!(
            decision_robustness_check(&a, &b, &fam, 0.05).unwrap(),
            decision_robustness_check(&b, &a, &fam, 0.05).unwrap()
        );
    }
}

#[test]
fn decision_check_matches_the_engine_on_the_same_feeds() {
    let fam = ModelFamily::gaussian_mean_var();
    let theta = ParameterVector::new(vec![0.0, 1.0]);
    for seed in 0..200 {
        let mut r = seeded(seed);
        let z = fam.sample_feed(&theta, 30, &mut r).unwrap();
        let zb = fam.sample_feed(&theta, 30, &mut r).unwrap();
        let t = AuditThreshold::new(2, 30, 0.01).unwrap();
        let (_, eval) = audit_feeds(&fam, z.clone(), zb.clone(), &t, &mut r).unwrap();
        assert_eq!(decision_robustness_check(&z, &zb, &fam, 0.01).unwrap(), eval.verdict);
    }
    let z = Feed::new(vec![0.3, -1.2, 2.0]);
    assert_eq!(decision_robustness_check(&z, &z, &fam, 0.01).unwrap(), Verdict::Pass);
}

#[test]
fn strict_and_full_modes_agree_on_the_overall_verdict() {
    let fam = ModelFamily::gaussian_mean_var();
    for case in 0..100u64 {
        let mut r = seeded(1000 + case);
        let n = r.random_range(1..6);
        let shift = r.random_range(0.0..1.0);
        let inputs: Vec<AuditInput> = (0..n).map(|i| AuditInput::bare(format!("input-{i:03}"))).collect();
        let policy = |theta: Vec<f64>, s: u64| {
            parametric_filter_source(ParametricFilterPolicy::new(fam.clone(), theta).unwrap(), 30, s).unwrap()
        };
        let verdict = |mode| {
            let mut f = policy(vec![shift, 1.0], case);
            let mut b = policy(vec![0.0, 1.0], case + 1);
            let cfg = AuditConfig {
                alpha: 0.01,
                m: None,
                mode,
                seed: case,
            };
            run_audit(&mut f, &mut b, &inputs, &fam, &cfg).unwrap()
        };
        let strict = verdict(AuditMode::Strict);
        let full = verdict(AuditMode::Full);
        assert_eq!(strict.verdict, full.verdict, "case {case}");
        assert!(strict.results.len() <= full.results.len());
        assert_eq!(strict.results[..], full.results[..strict.results.len()]);
        assert!(full.recheck(&fam).unwrap());
    }
}

#[test]
fn reports_are_deterministic() {
    let fam = ModelFamily::bernoulli();
    let inputs: Vec<AuditInput> = (0..5).map(|i| AuditInput::bare(format!("input-{i:03}"))).collect();
    let run = || {
        let pol = ParametricFilterPolicy::new(fam.clone(), vec![0.4]).unwrap();
        let mut f = parametric_filter_source(pol.clone(), 50, 3).unwrap();
        let mut b = parametric_filter_source(pol, 50, 4).unwrap();
        let cfg = AuditConfig {
            alpha: 0.01,
            m: None,
            mode: AuditMode::Full,
            seed: 77,
        };
        run_audit(&mut f, &mut b, &inputs, &fam, &cfg).unwrap().to_json()
    };
    assert_eq!(run(), run());
}

#[test]
fn engine_never_reads_payloads() {
    let fam = ModelFamily::gaussian_mean_var();
    let payload = serde_json::json!({"features": [1.0, 2.0], "secret": "do not read"});
    let inputs = vec![AuditInput::new("input-000", &payload)];
    let seen = std::cell::RefCell::new(Vec::new());
    let mut f = FnSource::new("f", |x: &AuditInput| {
        seen.borrow_mut().push(x.payload.get().to_owned());
        Ok(Feed::new(vec![0.1, 0.2, 0.3]))
    });
    let mut b = FnSource::new("b", |_: &AuditInput| Ok(Feed::new(vec![0.1, 0.25, 0.3])));
    let cfg = AuditConfig {
        alpha: 0.01,
        m: None,
        mode: AuditMode::Full,
        seed: 0,
    };
    run_audit(&mut f, &mut b, &inputs, &fam, &cfg).unwrap();
    // the payload text reaches the source verbatim
    assert_eq!(seen.borrow()[0], serde_json::to_string(&payload).unwrap());
}

#[test]
fn uniform_baseline_matches_pool_distribution() {
    // chi-squared goodness of fit on a 10-item pool
    let pools = ContentPools::new((0..10).map(f64::from).collect(), vec![]).unwrap();
    let chi = ChiSquared::new(9.0).unwrap();
    let mut accepted = 0;
    for seed in 0..40 {
        let src = uniform_baseline_source(pools.clone(), 1, seed).unwrap();
        let feed = src.feed_for(&AuditInput::bare("input-000"), 100_000);
        let mut counts = [0.0f64; 10];
        for x in feed.items() {
            counts[*x as usize] += 1.0;
        }
        let stat: f64 = counts.iter().map(|c| (c - 10_000.0).powi(2) / 10_000.0).sum();
        if 1.0 - chi.cdf(stat) > 0.01 {
            accepted += 1;
        }
    }
    assert!(accepted >= 38, "{accepted}/40");
}

fn pass_rate<F, B>(fam: &ModelFamily, trials: u64, mut filter: F, mut baseline: B) -> f64
where
    F: FnMut(&mut feedaudit::rng::StreamRng) -> Feed,
    B: FnMut(&mut feedaudit::rng::StreamRng) -> Feed,
{
    let t = AuditThreshold::new(fam.dimension(), 30, 0.01).unwrap();
    let passes = (0..trials)
        .filter(|i| {
            let mut r = stream(0xfeed, *i);
            let f = filter(&mut r);
            let b = baseline(&mut r);
            audit_feeds(fam, f, b, &t, &mut r).unwrap().1.verdict.is_pass()
        })
        .count();
    passes as f64 / trials as f64
}

#[test]
fn far_policies_fail() {
    let fam = ModelFamily::gaussian_mean_var();
    let base = ParameterVector::new(vec![0.0, 1.0]);
    for far in [vec![3.0, 1.0], vec![5.0, 0.1]] {
        let far = ParameterVector::new(far);
        let rate = pass_rate(
            &fam,
            1000,
            |r| fam.sample_feed(&far, 30, r).unwrap(),
            |r| fam.sample_feed(&base, 30, r).unwrap(),
        );
        assert!(rate <= 0.01, "{far:?}: pass rate {rate}");
    }
}

#[test]
fn pool_baseline_behaves_like_direct_sampling() {
    let fam = ModelFamily::gaussian_mean_var();
    let base = ParameterVector::new(vec![0.0, 1.0]);
    let pools = gaussian_pool_baseline(0.0, 1.0, 100_000, None, &mut seeded(5)).unwrap();
    let pool = pools.baseline();
    let direct = pass_rate(
        &fam,
        1000,
        |r| fam.sample_feed(&base, 30, r).unwrap(),
        |r| fam.sample_feed(&base, 30, r).unwrap(),
    );
    let via_pool = pass_rate(
        &fam,
        1000,
        |r| fam.sample_feed(&base, 30, r).unwrap(),
        |r| Feed::new((0..30).map(|_| pool[r.random_range(0..pool.len())]).collect()),
    );
    assert!((direct - via_pool).abs() <= 0.03, "{direct} vs {via_pool}");
}

#[test]
fn matching_policy_recovers_its_parameters() {
    let fam = ModelFamily::gaussian_mean_var();
    let theta = ParameterVector::new(vec![0.5, 2.0]);
    let m = 5000;
    let pol = ParametricFilterPolicy::new(fam.clone(), theta.as_slice().to_vec()).unwrap();
    let src = parametric_filter_source(pol, m, 1).unwrap();
    let est = fam.mle(&src.feed_for(&AuditInput::bare("x"), m).unwrap()).unwrap();
    let cov = fam.fisher_information(&theta).unwrap().inverse().unwrap();
    for i in 0..2 {
        assert!((est.theta[i] - theta[i]).abs() <= 4.0 * (cov.get(i, i) / m as f64).sqrt());
    }
}

/// Null pass rate of the literal test, computed independently from the
/// closed-form Gaussian estimates.
fn oracle_null_pass_rate(m: usize, trials: u64) -> f64 {
    let tau = AuditThreshold::new(2, m, 0.01).unwrap().tau;
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let mut passes = 0;
    for t in 0..trials {
        let mut r = stream(0x0dd, t);
        let mut moments = || {
            let xs: Vec<f64> = (0..m).map(|_| r.sample(normal)).collect();
            let mean = xs.iter().sum::<f64>() / m as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
            (mean, var)
        };
        let (m1, v1) = moments();
        let (m2, v2) = moments();
        let stat = |v: f64| (m1 - m2).powi(2) / v + (v1 - v2).powi(2) / (2.0 * v * v);
        if stat(v1) < tau && stat(v2) < tau {
            passes += 1;
        }
    }
    passes as f64 / trials as f64
}

#[test]
fn null_pass_rate_matches_independent_oracle() {
    let fam = ModelFamily::gaussian_mean_var();
    let base = ParameterVector::new(vec![0.0, 1.0]);
    let trials = 4000;
    let engine = pass_rate(
        &fam,
        trials,
        |r| fam.sample_feed(&base, 30, r).unwrap(),
        |r| fam.sample_feed(&base, 30, r).unwrap(),
    );
    let oracle = oracle_null_pass_rate(30, trials);
    // two independent binomial estimates: 4 standard errors of the difference
    let se = (2.0 * 0.08 * 0.92 / trials as f64).sqrt();
    assert!((engine - oracle).abs() <= 4.0 * se, "{engine} vs {oracle}");
}

#[test]
fn identically_distributed_feeds_pass_at_least_95_percent() {
    let fam = ModelFamily::gaussian_mean_var();
    let base = ParameterVector::new(vec![0.0, 1.0]);
    let rate = pass_rate(
        &fam,
        1000,
        |r| fam.sample_feed(&base, 30, r).unwrap(),
        |r| fam.sample_feed(&base, 30, r).unwrap(),
    );
    assert!(rate >= 0.95, "pass rate {rate} at m = 30, alpha = 0.01");
}

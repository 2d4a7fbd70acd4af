//! Generic numerical maximum likelihood: projected ascent along the
//! Fisher-preconditioned gradient, restarted from several random points.
//!
//! Only the score and the Fisher information of the family are used, so this
//! path is independent of the closed forms in [`ModelFamily::mle`].

use std::cmp::Ordering;

use rand::Rng;

use super::{Estimate, Feed, ModelFamily};
use crate::error::Result;
use crate::rng;

pub const MLE_RESTARTS: usize = 10;
pub const MLE_MAX_ITERATIONS: usize = 500;
/// Convergence threshold on the projected step length.
pub const MLE_TOLERANCE: f64 = 1e-9;

const RESTART_SEED: u64 = 0x6d6c_655f_7374_6172;

impl ModelFamily {
    /// Numerical maximum-likelihood estimate over the domain.
    pub fn mle_numerical(&self, feed: &Feed) -> Result<Estimate> {
        self.check_feed(feed)?;
        let z = feed.items();
        let mut restarts = rng::seeded(RESTART_SEED);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..MLE_RESTARTS {
            let start = self.random_interior_point(&mut restarts);
            let theta = self.ascend(start, z);
            let ll = self.log_likelihood(&theta, z);
            let better = match &best {
                None => true,
                Some((best_ll, best_theta)) => match ll.partial_cmp(best_ll) {
                    Some(Ordering::Greater) => true,
                    Some(Ordering::Equal) => lexicographic_less(&theta, best_theta),
                    _ => false,
                },
            };
            if better {
                best = Some((ll, theta));
            }
        }
        let (_, theta) = best.expect("at least one restart");
        Ok(self.finish(theta, z.len()))
    }

    fn random_interior_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let mut theta: Vec<f64> = self
                .domain
                .iter()
                .map(|iv| {
                    let (lo, hi) = (iv.lo().max(-1e6), iv.hi().min(1e6));
                    let u: f64 = rng.random_range(0.05..0.95);
                    lo + u * (hi - lo)
                })
                .collect();
            match self.simplex_cap() {
                Some(cap) if theta.iter().sum::<f64>() >= cap => {
                    // Shrink toward the lower corner until strictly inside.
                    let lo: Vec<f64> = self.domain.iter().map(|iv| iv.lo()).collect();
                    let excess = theta.iter().sum::<f64>() - lo.iter().sum::<f64>();
                    let room = cap - lo.iter().sum::<f64>();
                    let shrink = 0.9 * room / excess;
                    for (t, l) in theta.iter_mut().zip(&lo) {
                        *t = l + (*t - l) * shrink;
                    }
                    if self.contains(&theta) {
                        return theta;
                    }
                }
                _ => return theta,
            }
        }
    }

    fn ascend(&self, mut theta: Vec<f64>, z: &[f64]) -> Vec<f64> {
        let m = z.len() as f64;
        let mut ll = self.log_likelihood(&theta, z);
        for _ in 0..MLE_MAX_ITERATIONS {
            let grad = self.score(&theta, z);
            let direction = self
                .fisher_information(&theta.clone().into())
                .ok()
                .and_then(|info| info.scaled(m).solve(&grad))
                .unwrap_or_else(|| grad.iter().map(|g| g / m).collect());

            let mut step = 1.0;
            let mut accepted = None;
            while step > 1e-12 {
                let mut candidate: Vec<f64> = theta.iter().zip(&direction).map(|(t, d)| t + step * d).collect();
                self.project(&mut candidate);
                let cand_ll = self.log_likelihood(&candidate, z);
                if cand_ll >= ll {
                    accepted = Some((candidate, cand_ll));
                    break;
                }
                step *= 0.5;
            }
            let Some((candidate, cand_ll)) = accepted else {
                break;
            };
            let moved = candidate
                .iter()
                .zip(&theta)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            theta = candidate;
            ll = cand_ll;
            if moved < MLE_TOLERANCE {
                break;
            }
        }
        theta
    }
}

fn lexicographic_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Less) => return true,
            Some(Ordering::Greater) => return false,
            _ => {}
        }
    }
    false
}

//! Machine-checkable subset of the regularity conditions behind the audit's
//! asymptotic guarantee, spot-checked on a grid over the domain.

use serde::{Deserialize, Serialize};

use super::{ModelFamily, ParameterVector, SampleSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub condition: String,
    pub passed: bool,
    pub detail: String,
    /// Parameter points where the condition failed.
    pub witnesses: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub family: String,
    pub grid_points: usize,
    pub checks: Vec<ConditionCheck>,
}

impl RegularityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, condition: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.condition == condition)
    }
}

fn axis_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (lo, hi) = (lo.max(-1e6), hi.min(1e6));
    (0..count)
        .map(|j| lo + (hi - lo) * j as f64 / (count - 1) as f64)
        .collect()
}

fn grid(family: &ModelFamily) -> Vec<Vec<f64>> {
    let per_axis = if family.dimension() <= 3 { 5 } else { 3 };
    let axes: Vec<Vec<f64>> = family
        .domain()
        .iter()
        .map(|iv| axis_points(iv.lo(), iv.hi(), per_axis))
        .collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |x| {
                    let mut q = p.clone();
                    q.push(*x);
                    q
                })
            })
            .collect();
    }
    points.retain(|p| family.contains(p));
    points
}

fn probes(family: &ModelFamily) -> Vec<f64> {
    match family.sample_space() {
        SampleSpace::Real => vec![-50.0, -3.0, -1.0, 0.0, 0.5, 2.0, 50.0],
        SampleSpace::Bit => vec![0.0, 1.0],
        SampleSpace::Symbol { k } => (0..k).map(|s| s as f64).collect(),
    }
}

fn format_point(p: &[f64]) -> String {
    let coords: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
    format!("θ=({})", coords.join(", "))
}

pub(super) fn validate(family: &ModelFamily) -> RegularityReport {
    let points = grid(family);
    let probes = probes(family);
    let mut checks = Vec::new();

    let unbounded: Vec<Vec<f64>> = family
        .domain()
        .iter()
        .filter(|iv| !(iv.lo().is_finite() && iv.hi().is_finite()))
        .map(|iv| vec![iv.lo(), iv.hi()])
        .collect();
    checks.push(ConditionCheck {
        condition: "bounded-domain".into(),
        passed: unbounded.is_empty(),
        detail: "every domain interval has finite endpoints".into(),
        witnesses: unbounded,
    });

    checks.push(ConditionCheck {
        condition: "convex-domain".into(),
        passed: true,
        detail: match family.simplex_cap() {
            Some(cap) => format!("box intersected with the half-space sum(θ) <= {cap}"),
            None => "axis-aligned box".into(),
        },
        witnesses: Vec::new(),
    });

    let support = |p: &[f64]| -> Vec<bool> {
        probes
            .iter()
            .map(|z| family.log_density_raw(p, *z).is_finite())
            .collect()
    };
    let reference = support(&interior_reference(family));
    let moved: Vec<Vec<f64>> = points.iter().filter(|p| support(p) != reference).cloned().collect();
    checks.push(ConditionCheck {
        condition: "support-independent".into(),
        passed: moved.is_empty(),
        detail: describe("support differs from the interior support", &moved),
        witnesses: moved,
    });

    let mut confused = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let same = probes
                .iter()
                .all(|z| family.log_density_raw(a, *z) == family.log_density_raw(b, *z));
            if same {
                confused.push(a.clone());
                confused.push(b.clone());
            }
        }
    }
    checks.push(ConditionCheck {
        condition: "identifiable".into(),
        passed: confused.is_empty(),
        detail: describe("distinct points with identical densities", &confused),
        witnesses: confused,
    });

    let singular: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| match family.fisher_information(&ParameterVector::new(p.to_vec())) {
            Ok(info) => !(info.is_symmetric(1e-12) && info.is_positive_definite()),
            Err(_) => true,
        })
        .cloned()
        .collect();
    checks.push(ConditionCheck {
        condition: "fisher-positive-definite".into(),
        passed: singular.is_empty(),
        detail: describe("Fisher information not positive definite", &singular),
        witnesses: singular,
    });

    RegularityReport {
        family: family.id(),
        grid_points: points.len(),
        checks,
    }
}

fn interior_reference(family: &ModelFamily) -> Vec<f64> {
    let mut centre: Vec<f64> = family
        .domain()
        .iter()
        .map(|iv| 0.5 * (iv.lo().max(-1e6) + iv.hi().min(1e6)))
        .collect();
    if let Some(cap) = family.simplex_cap() {
        let lo: f64 = family.domain().iter().map(|iv| iv.lo()).sum();
        let sum: f64 = centre.iter().sum();
        if sum >= cap {
            let shrink = 0.5 * (cap - lo) / (sum - lo);
            for (c, iv) in centre.iter_mut().zip(family.domain()) {
                *c = iv.lo() + (*c - iv.lo()) * shrink;
            }
        }
    }
    centre
}

fn describe(what: &str, witnesses: &[Vec<f64>]) -> String {
    if witnesses.is_empty() {
        "ok".into()
    } else {
        let named: Vec<String> = witnesses.iter().take(4).map(|p| format_point(p)).collect();
        format!("{what} at {}", named.join(", "))
    }
}

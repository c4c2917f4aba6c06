//! Coverage-circle estimation and scoring against ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::geometry::{smallest_enclosing_circle, Circle, Point};
use crate::rf_env::PuNode;
use crate::scalar::Real;

/// Estimated transmission disk of one primary user on one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageCircle {
    pub channel: usize,
    pub center: [f64; 2],
    pub radius: f64,
}

impl CoverageCircle {
    pub fn circle(&self) -> Circle<f64> {
        Circle::new(Point::new(self.center[0], self.center[1]), self.radius)
    }

    pub fn contains(&self, p: Point<f64>) -> bool {
        self.circle().contains(p)
    }
}

/// Smallest circle enclosing every location labelled occupied on a channel.
pub fn estimate_coverage<T: Real>(points: &[Point<T>]) -> Result<Circle<T>> {
    ensure!(
        points.len() >= 2,
        InsufficientData,
        "coverage needs at least 2 occupied locations, got {}",
        points.len()
    );
    smallest_enclosing_circle(points)
}

/// One estimate paired with the true primary user it was matched to.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMatch {
    pub pu_index: usize,
    pub estimate_index: usize,
    pub channel: usize,
    pub true_radius: f64,
    pub estimated_radius: f64,
    /// `100 · |r̂ − r| / r`.
    pub radius_error_pct: f64,
    pub center_offset_km: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoverageReport {
    pub matches: Vec<CoverageMatch>,
    pub unmatched_estimates: Vec<usize>,
    pub unmatched_truths: Vec<usize>,
}

impl CoverageReport {
    /// Mean radius error in percent over matched pairs (`None` without matches).
    pub fn mean_radius_error_pct(&self) -> Option<f64> {
        (!self.matches.is_empty())
            .then(|| self.matches.iter().map(|m| m.radius_error_pct).sum::<f64>() / self.matches.len() as f64)
    }
}

/// Pair estimates with true primary users on the same channel, closest centres first,
/// each side used at most once.
pub fn coverage_error(estimates: &[CoverageCircle], truth: &[PuNode]) -> Result<CoverageReport> {
    ensure!(!estimates.is_empty(), InsufficientData, "no coverage estimates to score");
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (e, est) in estimates.iter().enumerate() {
        for (t, pu) in truth.iter().enumerate() {
            if pu.channel == est.channel {
                let d = est.circle().center.dist(Point::new(pu.position.0, pu.position.1));
                pairs.push((d, e, t));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = vec![false; estimates.len()];
    let mut used_t = vec![false; truth.len()];
    let mut report = CoverageReport::default();
    for (d, e, t) in pairs {
        if used_e[e] || used_t[t] {
            continue;
        }
        used_e[e] = true;
        used_t[t] = true;
        let r = truth[t].coverage_radius;
        report.matches.push(CoverageMatch {
            pu_index: t,
            estimate_index: e,
            channel: estimates[e].channel,
            true_radius: r,
            estimated_radius: estimates[e].radius,
            radius_error_pct: 100.0 * (estimates[e].radius - r).abs() / r,
            center_offset_km: d,
        });
    }
    report.matches.sort_by_key(|m| m.pu_index);
    report.unmatched_estimates = (0..estimates.len()).filter(|&e| !used_e[e]).collect();
    report.unmatched_truths = (0..truth.len()).filter(|&t| !used_t[t]).collect();
    Ok(report)
}

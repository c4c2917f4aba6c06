//! Known-model detectors: the Neyman-Pearson binary threshold and the equal-cost MAP
//! thresholds between adjacent power levels.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{ensure, Result};
use crate::scalar::Real;

/// Upper-tail inverse `Q⁻¹(p)` of the standard normal.
pub fn q_inv<T: Real>(p: T) -> T {
    let std = Normal::standard();
    T::lit(std.inverse_cdf(1.0 - p.to_f64_lossy()))
}

/// Neyman-Pearson threshold under the Gaussian approximation `T|H0 ~ N(σ², σ⁴/n)`.
/// Declare the channel occupied iff `T > θ`.
pub fn np_threshold<T: Real>(pfa: T, noise_var: T, n: usize) -> Result<T> {
    ensure!(
        pfa > T::zero() && pfa < T::one(),
        InvalidArgument,
        "false-alarm probability must lie in (0,1), got {pfa}"
    );
    ensure!(noise_var > T::zero(), InvalidArgument, "noise variance must be > 0");
    ensure!(n >= 1, InvalidArgument, "window length must be >= 1");
    Ok(noise_var * (T::one() + q_inv(pfa) / T::from_usize_lossy(n).sqrt()))
}

/// Gaussian hypothesis `N(mean, var)` with prior weight `prior`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypothesis<T> {
    pub mean: T,
    pub var: T,
    pub prior: T,
}

impl<T: Real> Hypothesis<T> {
    pub fn ln_joint(&self, x: T) -> T {
        self.prior.ln() + crate::scalar::normal_ln_pdf(x, self.mean, self.var)
    }
}

/// Energy-statistic hypotheses `N(σ²+P_l, (σ²+P_l)²/n)` for every level.
pub fn level_hypotheses<T: Real>(powers: &[T], priors: &[T], noise_var: T, n: usize) -> Vec<Hypothesis<T>> {
    let nf = T::from_usize_lossy(n);
    powers
        .iter()
        .zip(priors)
        .map(|(&p, &prior)| {
            let mean = noise_var + p;
            Hypothesis { mean, var: mean * mean / nf, prior }
        })
        .collect()
}

/// Root of `ln(π_a N_a(x)) = ln(π_b N_b(x))` between the two means.
///
/// When no root falls between the means the one closest to their midpoint is used; when
/// the log-ratio has no real root at all one hypothesis dominates everywhere and the
/// boundary is pushed to the corresponding infinity.
pub fn pairwise_boundary<T: Real>(a: &Hypothesis<T>, b: &Hypothesis<T>) -> T {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let qa = -T::one() / (two * a.var) + T::one() / (two * b.var);
    let qb = a.mean / a.var - b.mean / b.var;
    let qc = -a.mean * a.mean / (two * a.var) + b.mean * b.mean / (two * b.var)
        + (a.prior / b.prior).ln()
        + half * (b.var / a.var).ln();
    let mid = half * (a.mean + b.mean);
    let scale = qb.abs().max(T::min_positive_value());
    if qa.abs() <= T::lit(1e-12) * scale {
        return -qc / qb;
    }
    let disc = qb * qb - T::lit(4.0) * qa * qc;
    if disc < T::zero() {
        // g(x) keeps the sign of qa everywhere: positive means `a` always wins.
        return if qa > T::zero() { T::infinity() } else { T::neg_infinity() };
    }
    let sq = disc.sqrt();
    // numerically stable pair of roots
    let q = -half * (qb + qb.signum() * sq);
    let r1 = q / qa;
    let r2 = if q != T::zero() { qc / q } else { r1 };
    let (lo, hi) = if a.mean <= b.mean { (a.mean, b.mean) } else { (b.mean, a.mean) };
    let inside = |r: T| r >= lo && r <= hi;
    match (inside(r1), inside(r2)) {
        (true, false) => r1,
        (false, true) => r2,
        _ => {
            if (r1 - mid).abs() <= (r2 - mid).abs() {
                r1
            } else {
                r2
            }
        }
    }
}

/// MAP thresholds `θ_1 < … < θ_{L-1}` separating adjacent levels, powers ascending.
///
/// `var_override` replaces every hypothesis variance with one common value.
pub fn map_thresholds<T: Real>(
    powers: &[T],
    priors: &[T],
    noise_var: T,
    n: usize,
    var_override: Option<T>,
) -> Result<Vec<T>> {
    ensure!(powers.len() == priors.len(), InvalidArgument, "one prior per power level required");
    ensure!(!powers.is_empty(), InvalidArgument, "at least one power level required");
    ensure!(noise_var > T::zero() && n >= 1, InvalidArgument, "need noise_var > 0 and n >= 1");
    for w in powers.windows(2) {
        ensure!(w[0] < w[1], InvalidArgument, "powers must be strictly ascending and distinct");
    }
    ensure!(priors.iter().all(|&p| p > T::zero()), InvalidArgument, "priors must be > 0");
    let mut hyps = level_hypotheses(powers, priors, noise_var, n);
    if let Some(v) = var_override {
        ensure!(v > T::zero(), InvalidArgument, "variance override must be > 0");
        hyps.iter_mut().for_each(|h| h.var = v);
    }
    Ok(hyps.windows(2).map(|w| pairwise_boundary(&w[0], &w[1])).collect())
}

/// Level index = number of thresholds the statistic exceeds.
pub fn classify_by_thresholds<T: Real>(thresholds: &[T], energy: T) -> usize {
    thresholds.iter().filter(|&&th| energy > th).count()
}

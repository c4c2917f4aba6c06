//! Conjugate priors and small sampling helpers shared by the Bayesian fitters.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::scalar::log_sum_exp;

/// Normal-Inverse-Gamma prior: `σ² ~ IG(a0, b0)`, `μ | σ² ~ N(mu0, σ²/kappa0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigPrior {
    pub mu0: f64,
    pub kappa0: f64,
    pub a0: f64,
    pub b0: f64,
}

/// Sufficient statistics of a univariate Gaussian sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GaussStats {
    pub n: usize,
    pub sum: f64,
    pub sumsq: f64,
}

impl GaussStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sumsq += x * x;
    }
}

impl NigPrior {
    /// Empirical prior: location at the sample mean, scale at the sample variance, unit
    /// pseudo-counts.
    pub fn from_data(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let b0 = var.max(1e-12 * mean.abs().max(1.0).powi(2));
        Self { mu0: mean, kappa0: 1.0, a0: 1.0, b0 }
    }

    /// Posterior `(mu_n, kappa_n, a_n, b_n)`.
    pub fn posterior(&self, s: &GaussStats) -> (f64, f64, f64, f64) {
        let n = s.n as f64;
        let kn = self.kappa0 + n;
        let mn = (self.kappa0 * self.mu0 + s.sum) / kn;
        let an = self.a0 + n / 2.0;
        let ss = if s.n > 0 {
            let mean = s.sum / n;
            (s.sumsq - n * mean * mean).max(0.0) + self.kappa0 * n * (mean - self.mu0).powi(2) / kn
        } else {
            0.0
        };
        (mn, kn, an, self.b0 + 0.5 * ss)
    }

    /// Draw `(μ, σ²)` from the posterior.
    pub fn sample_posterior<R: Rng + ?Sized>(&self, s: &GaussStats, rng: &mut R) -> (f64, f64) {
        let (mn, kn, an, bn) = self.posterior(s);
        let precision = Gamma::new(an, 1.0 / bn).expect("valid gamma").sample(rng);
        let var = 1.0 / precision.max(f64::MIN_POSITIVE);
        let z: f64 = rng.sample(StandardNormal);
        (mn + z * (var / kn).sqrt(), var)
    }

    /// Posterior means `(E[μ], E[σ²])`; needs `a_n > 1`.
    pub fn posterior_mean(&self, s: &GaussStats) -> (f64, f64) {
        let (mn, _kn, an, bn) = self.posterior(s);
        (mn, bn / (an - 1.0).max(f64::MIN_POSITIVE))
    }
}

/// Dirichlet draw computed in log space, safe for very small concentrations.
pub fn sample_dirichlet<R: Rng + ?Sized>(conc: &[f64], rng: &mut R) -> Vec<f64> {
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    let logs: Vec<f64> = conc
        .iter()
        .map(|&a| {
            let a = a.max(1e-300);
            let g: f64 = Gamma::new(a + 1.0, 1.0).expect("valid gamma").sample(rng);
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            g.ln() + u.ln() / a
        })
        .collect();
    let lse = log_sum_exp(&logs);
    logs.iter().map(|&l| (l - lse).exp()).collect()
}

/// Index drawn in proportion to `exp(lw)`.
pub fn sample_ln_weights<R: Rng + ?Sized>(lw: &[f64], rng: &mut R) -> usize {
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = lw.iter().map(|&l| (l - max).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &l) in lw.iter().enumerate() {
        u -= (l - max).exp();
        if u <= 0.0 {
            return i;
        }
    }
    lw.len() - 1
}

/// Index drawn in proportion to nonnegative weights.
pub fn sample_weights<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> usize {
    let total: f64 = w.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &x) in w.iter().enumerate() {
        u -= x;
        if u <= 0.0 {
            return i;
        }
    }
    w.iter().rposition(|&x| x > 0.0).unwrap_or(w.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dirichlet_is_normalized_for_tiny_concentrations() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let d = sample_dirichlet(&[1e-6, 0.05, 3.0, 1e-200], &mut rng);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.iter().all(|p| p.is_finite() && *p >= 0.0));
        }
    }

    #[test]
    fn dirichlet_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut acc = [0.0; 3];
        for _ in 0..20_000 {
            let d = sample_dirichlet(&[1.0, 2.0, 7.0], &mut rng);
            for i in 0..3 {
                acc[i] += d[i] / 20_000.0;
            }
        }
        assert!((acc[0] - 0.1).abs() < 0.01 && (acc[2] - 0.7).abs() < 0.01, "{acc:?}");
    }

    #[test]
    fn nig_posterior_concentrates() {
        let p = NigPrior { mu0: 0.0, kappa0: 0.01, a0: 2.0, b0: 1.0 };
        let mut s = GaussStats::default();
        for i in 0..1000 {
            s.push(3.0 + if i % 2 == 0 { 0.1 } else { -0.1 });
        }
        let (m, v) = p.posterior_mean(&s);
        assert!((m - 3.0).abs() < 1e-3);
        // b_n = 1 + 1000 * 0.01 / 2 + (0.01 * 1000 / 1000.01) * 9 / 2, a_n = 502.
        let bn = 1.0 + 5.0 + 0.01 * 1000.0 / 1000.01 * 9.0 / 2.0;
        assert!((v - bn / 501.0).abs() < 1e-9, "{v}");
    }
}

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{ensure, Result};

/// Average received energy of one sensing window: `T = (1/n) Σ |s_i + w_i|²`.
pub type EnergyStatistic = f64;

fn check(received_power: f64, noise_var: f64, n: usize) -> Result<()> {
    ensure!(n >= 1, InvalidArgument, "sensing window needs n >= 1 samples");
    ensure!(noise_var > 0.0, InvalidArgument, "noise variance must be > 0, got {noise_var}");
    ensure!(
        received_power >= 0.0 && received_power.is_finite(),
        InvalidArgument,
        "received power must be finite and >= 0, got {received_power}"
    );
    Ok(())
}

/// Energy detector over `n` complex baseband samples of a circularly-symmetric Gaussian
/// signal of power `received_power` in complex AWGN of power `noise_var`.
pub fn sense_window<R: Rng + ?Sized>(
    received_power: f64,
    noise_var: f64,
    n: usize,
    rng: &mut R,
) -> Result<EnergyStatistic> {
    check(received_power, noise_var, n)?;
    let s_std = (received_power / 2.0).sqrt();
    let w_std = (noise_var / 2.0).sqrt();
    let mut acc = 0.0;
    for _ in 0..n {
        let si: f64 = rng.sample(StandardNormal);
        let sq: f64 = rng.sample(StandardNormal);
        let wi: f64 = rng.sample(StandardNormal);
        let wq: f64 = rng.sample(StandardNormal);
        let re = s_std * si + w_std * wi;
        let im = s_std * sq + w_std * wq;
        acc += re * re + im * im;
    }
    Ok(acc / n as f64)
}

/// Draws `T` directly from its exact law, `Gamma(n, (σ² + P)/n)`.
///
/// Each `|y_i|²` is exponential with mean `σ² + P`, so the window average is Gamma
/// distributed; this costs O(1) instead of O(n) and is used for long windows.
pub fn sense_window_exact<R: Rng + ?Sized>(
    received_power: f64,
    noise_var: f64,
    n: usize,
    rng: &mut R,
) -> Result<EnergyStatistic> {
    check(received_power, noise_var, n)?;
    let scale = (noise_var + received_power) / n as f64;
    let g = Gamma::new(n as f64, scale).expect("positive gamma parameters");
    Ok(g.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        (m, v)
    }

    #[test]
    fn noise_only_long_window() {
        let t = sense_window(0.0, 1.0, 100_000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!((t - 1.0).abs() <= 0.02, "{t}");
    }

    #[test]
    fn variance_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (p, s2, n) = (3.0, 1.0, 20);
        let xs: Vec<f64> = (0..10_000).map(|_| sense_window(p, s2, n, &mut rng).unwrap()).collect();
        let (m, v) = moments(&xs);
        let want_v = (s2 + p) * (s2 + p) / n as f64;
        assert!((v - want_v).abs() / want_v <= 0.10, "var {v} vs {want_v}");
        let se = (want_v / xs.len() as f64).sqrt();
        assert!((m - 4.0).abs() <= 3.0 * se, "mean {m}");
    }

    #[test]
    fn exact_law_agrees_with_literal_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (p, s2, n) = (0.5, 2.0, 50);
        let a: Vec<f64> = (0..10_000).map(|_| sense_window(p, s2, n, &mut rng).unwrap()).collect();
        let b: Vec<f64> =
            (0..10_000).map(|_| sense_window_exact(p, s2, n, &mut rng).unwrap()).collect();
        let ((ma, va), (mb, vb)) = (moments(&a), moments(&b));
        assert!((ma - mb).abs() < 0.01, "{ma} {mb}");
        assert!((va - vb).abs() / va < 0.08, "{va} {vb}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sense_window(1.0, 1.0, 0, &mut rng).is_err());
        assert!(sense_window(1.0, 0.0, 4, &mut rng).is_err());
        assert!(sense_window_exact(-1.0, 1.0, 4, &mut rng).is_err());
    }
}

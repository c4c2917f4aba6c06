use std::io::Write;

use super::dwell::DwellModel;
use super::gmm::GmmFit;
use crate::error::{ensure, Result};
use crate::scalar::{log_sum_exp, Real};

/// Stage-II decision for one window. Level 0 is the lowest-mean component.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelPrediction<T> {
    pub level: usize,
    pub posterior: Vec<T>,
}

fn argmax_low<T: Real>(xs: &[T]) -> usize {
    let mut best = 0;
    for j in 1..xs.len() {
        if xs[j] > xs[best] {
            best = j;
        }
    }
    best
}

/// Posterior over mixture components for one window energy.
///
/// Without `prev` (or without a dwell model) the prior is the mixture weights. With both,
/// the prior is the one-step prediction from `prev`: stay with the level's continuation
/// probability, otherwise renew into another level in proportion to the weights.
pub fn predict_level<T: Real>(
    fit: &GmmFit<T>,
    dwell: Option<&DwellModel<T>>,
    window_energy: T,
    prev: Option<&LevelPrediction<T>>,
) -> Result<LevelPrediction<T>> {
    ensure!(fit.k >= 1, InvalidArgument, "fit has no components");
    ensure!(window_energy.is_finite(), NonFinite, "window energy must be finite");
    let k = fit.k;
    let wsum: T = fit.weights.iter().copied().sum();
    let weights: Vec<T> = fit.weights.iter().map(|&w| w / wsum).collect();
    let prior: Vec<T> = match (dwell, prev) {
        (Some(d), Some(p)) if d.n_levels() >= k && p.posterior.len() == k => {
            let mut pr = vec![T::zero(); k];
            for j in 0..k {
                let stay = d.continuation[j];
                let others = T::one() - weights[j];
                for l in 0..k {
                    let t = if l == j {
                        if k == 1 || others <= T::zero() { T::one() } else { stay }
                    } else if others > T::zero() {
                        (T::one() - stay) * weights[l] / others
                    } else {
                        T::zero()
                    };
                    pr[l] = pr[l] + p.posterior[j] * t;
                }
            }
            pr
        }
        _ => weights,
    };
    let ln: Vec<T> = (0..k)
        .map(|l| prior[l].ln() + crate::scalar::normal_ln_pdf(window_energy, fit.means[l], fit.variances[l]))
        .collect();
    let lse = log_sum_exp(&ln);
    let posterior: Vec<T> = if lse.is_finite() {
        ln.iter().map(|&v| (v - lse).exp()).collect()
    } else {
        vec![T::one() / T::from_usize_lossy(k); k]
    };
    Ok(LevelPrediction { level: argmax_low(&ln), posterior })
}

/// Runs Stage II over a window sequence, chaining the dwell-aware prior when requested.
pub fn predict_sequence<T: Real>(
    fit: &GmmFit<T>,
    dwell: Option<&DwellModel<T>>,
    energies: &[T],
) -> Result<Vec<LevelPrediction<T>>> {
    let mut out: Vec<LevelPrediction<T>> = Vec::with_capacity(energies.len());
    for &e in energies {
        let p = predict_level(fit, dwell, e, out.last())?;
        out.push(p);
    }
    Ok(out)
}

/// Fraction of slots whose predicted level equals the true level. Both sequences must use
/// canonical indices (ascending mean / ascending power); predicted levels beyond the true
/// level count simply never match.
pub fn eval_pc(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    ensure!(
        predicted.len() == truth.len(),
        InvalidArgument,
        "length mismatch: {} predictions for {} slots",
        predicted.len(),
        truth.len()
    );
    ensure!(!truth.is_empty(), InsufficientData, "no slots to score");
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Ranks of `powers` in ascending order: `canonical[l]` is the canonical index of level `l`.
pub fn canonical_levels(powers: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..powers.len()).collect();
    order.sort_by(|&a, &b| powers[a].total_cmp(&powers[b]));
    let mut rank = vec![0; powers.len()];
    for (r, &l) in order.iter().enumerate() {
        rank[l] = r;
    }
    rank
}

/// CSV trace `slot,true_level,pred_level,posterior0..`.
pub fn write_prediction_trace<W: Write, T: Real>(
    out: W,
    truth: &[usize],
    predictions: &[LevelPrediction<T>],
) -> Result<()> {
    let k = predictions.first().map_or(0, |p| p.posterior.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["slot".to_string(), "true_level".into(), "pred_level".into()];
    header.extend((0..k).map(|j| format!("posterior{j}")));
    w.write_record(&header)?;
    for (slot, (t, p)) in truth.iter().zip(predictions).enumerate() {
        let mut rec = vec![slot.to_string(), t.to_string(), p.level.to_string()];
        rec.extend(p.posterior.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

use super::gmm::{variance_floor, GmmFit};
use crate::error::{ensure, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct MeanShiftFit<T> {
    /// Merged modes, ascending.
    pub modes: Vec<T>,
    /// Nearest-mode cluster of every sample.
    pub assignments: Vec<usize>,
    /// Per-cluster sample moments, in mode order.
    pub gmm: GmmFit<T>,
}

/// Silverman's rule-of-thumb bandwidth `0.9 · min(sd, IQR/1.34) · n^(-1/5)`.
pub fn silverman_bandwidth<T: Real>(xs: &[T]) -> T {
    let n = T::from_usize_lossy(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let sd = (xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n).sqrt();
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| s[((s.len() - 1) as f64 * p).round() as usize];
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > T::zero() { sd.min(iqr / T::lit(1.34)) } else { sd };
    let bw = T::lit(0.9) * spread * n.powf(T::lit(-0.2));
    if bw > T::zero() {
        bw
    } else {
        T::one()
    }
}

fn ascend<T: Real>(sorted: &[T], start: T, bw: T) -> T {
    let reach = T::lit(6.0) * bw;
    let inv = T::one() / (T::lit(2.0) * bw * bw);
    let tol = T::lit(1e-7) * bw;
    let mut x = start;
    for _ in 0..1000 {
        let lo = sorted.partition_point(|&v| v < x - reach);
        let hi = sorted.partition_point(|&v| v <= x + reach);
        let (mut num, mut den) = (T::zero(), T::zero());
        for &v in &sorted[lo..hi] {
            let w = (-(v - x) * (v - x) * inv).exp();
            num = num + w * v;
            den = den + w;
        }
        if den == T::zero() {
            break;
        }
        let next = num / den;
        let done = (next - x).abs() < tol;
        x = next;
        if done {
            break;
        }
    }
    x
}

/// Gaussian-kernel mean-shift from every sample.
///
/// In one dimension the mean-shift map is monotone, so the converged mode is a
/// nondecreasing function of the start and basins are intervals of the sorted sample.
/// Basin boundaries are located by bisection instead of ascending from every point.
pub fn fit_meanshift<T: Real>(xs: &[T], bandwidth: T) -> Result<MeanShiftFit<T>> {
    ensure!(bandwidth > T::zero(), InvalidArgument, "bandwidth must be > 0");
    ensure!(!xs.is_empty(), InsufficientData, "mean-shift needs at least one sample");
    ensure!(xs.iter().all(|x| x.is_finite()), NonFinite, "samples must be finite");
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let same = |a: T, b: T| (a - b).abs() < bandwidth * T::lit(1e-3);

    let mut converged: Vec<Option<T>> = vec![None; n];
    let mode_at = |i: usize, cache: &mut Vec<Option<T>>| -> T {
        if let Some(m) = cache[i] {
            return m;
        }
        let m = ascend(&sorted, sorted[i], bandwidth);
        cache[i] = Some(m);
        m
    };
    let mut stack = vec![(0usize, n - 1)];
    let mut raw: Vec<T> = Vec::new();
    while let Some((lo, hi)) = stack.pop() {
        let (ml, mh) = (mode_at(lo, &mut converged), mode_at(hi, &mut converged));
        if same(ml, mh) || hi - lo <= 1 {
            raw.push(ml);
            raw.push(mh);
            continue;
        }
        let mid = (lo + hi) / 2;
        stack.push((lo, mid));
        stack.push((mid, hi));
    }
    raw.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // merge modes closer than half a bandwidth
    let mut modes: Vec<T> = Vec::new();
    let mut group: Vec<T> = Vec::new();
    for m in raw {
        if let Some(&last) = group.last() {
            if m - last >= bandwidth / T::lit(2.0) {
                modes.push(group.iter().copied().sum::<T>() / T::from_usize_lossy(group.len()));
                group.clear();
            }
        }
        group.push(m);
    }
    modes.push(group.iter().copied().sum::<T>() / T::from_usize_lossy(group.len()));

    let assignments: Vec<usize> = xs
        .iter()
        .map(|&x| {
            (0..modes.len())
                .min_by(|&a, &b| (x - modes[a]).abs().partial_cmp(&(x - modes[b]).abs()).unwrap())
                .unwrap()
        })
        .collect();
    let k = modes.len();
    let gmm = GmmFit::from_assignments(xs, &assignments, k, variance_floor(xs));
    Ok(MeanShiftFit { modes, assignments, gmm })
}

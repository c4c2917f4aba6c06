use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::scalar::{log_sum_exp, normal_ln_pdf, Real};

/// Univariate Gaussian mixture with components in canonical (ascending mean) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmFit<T> {
    pub k: usize,
    pub weights: Vec<T>,
    pub means: Vec<T>,
    pub variances: Vec<T>,
    pub log_likelihood: T,
}

impl<T: Real> GmmFit<T> {
    /// Builds a fit and sorts it by mean. Returns the permutation `old index -> new index`.
    pub fn canonical(weights: Vec<T>, means: Vec<T>, variances: Vec<T>, log_likelihood: T) -> (Self, Vec<usize>) {
        let k = means.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| means[a].partial_cmp(&means[b]).unwrap());
        let mut relabel = vec![0; k];
        for (new, &old) in order.iter().enumerate() {
            relabel[old] = new;
        }
        let fit = Self {
            k,
            weights: order.iter().map(|&i| weights[i]).collect(),
            means: order.iter().map(|&i| means[i]).collect(),
            variances: order.iter().map(|&i| variances[i]).collect(),
            log_likelihood,
        };
        (fit, relabel)
    }

    pub fn component_ln_joint(&self, x: T) -> Vec<T> {
        (0..self.k)
            .map(|j| self.weights[j].ln() + normal_ln_pdf(x, self.means[j], self.variances[j]))
            .collect()
    }

    pub fn ln_density(&self, x: T) -> T {
        log_sum_exp(&self.component_ln_joint(x))
    }

    pub fn log_likelihood_of(&self, xs: &[T]) -> T {
        xs.iter().map(|&x| self.ln_density(x)).sum()
    }

    /// Most probable component, ties to the lower index.
    pub fn assign(&self, x: T) -> usize {
        let lj = self.component_ln_joint(x);
        let mut best = 0;
        for j in 1..lj.len() {
            if lj[j] > lj[best] {
                best = j;
            }
        }
        best
    }

    /// Fit made of per-cluster sample moments (biased variance, floored).
    pub fn from_assignments(xs: &[T], labels: &[usize], k: usize, var_floor: T) -> Self {
        let mut n = vec![T::zero(); k];
        let mut s = vec![T::zero(); k];
        for (&x, &z) in xs.iter().zip(labels) {
            n[z] = n[z] + T::one();
            s[z] = s[z] + x;
        }
        let means: Vec<T> = (0..k).map(|j| if n[j] > T::zero() { s[j] / n[j] } else { T::zero() }).collect();
        let mut ss = vec![T::zero(); k];
        for (&x, &z) in xs.iter().zip(labels) {
            ss[z] = ss[z] + (x - means[z]) * (x - means[z]);
        }
        let total = T::from_usize_lossy(xs.len());
        let vars = (0..k).map(|j| if n[j] > T::zero() { (ss[j] / n[j]).max(var_floor) } else { var_floor }).collect();
        let weights = n.iter().map(|&c| c / total).collect();
        let (mut fit, _) = Self::canonical(weights, means, vars, T::zero());
        fit.log_likelihood = fit.log_likelihood_of(xs);
        fit
    }
}

fn check_samples<T: Real>(xs: &[T]) -> Result<()> {
    ensure!(xs.iter().all(|x| x.is_finite()), NonFinite, "energy samples must be finite");
    Ok(())
}

/// Variance floor relative to the data spread.
pub(crate) fn variance_floor<T: Real>(xs: &[T]) -> T {
    let (lo, hi) = xs.iter().fold((T::infinity(), T::neg_infinity()), |(l, h), &x| (l.min(x), h.max(x)));
    let range = hi - lo;
    let scale = if range > T::zero() { range * range } else { T::one().max(hi.abs() * hi.abs()) };
    scale * T::lit(1e-10)
}

/// EM for a univariate `L`-component GMM with farthest-point initialization; the best of
/// `restarts` runs by final log-likelihood is returned.
pub fn fit_emgmm<T: Real>(xs: &[T], l: usize, restarts: usize, iters: usize) -> Result<GmmFit<T>> {
    Ok(fit_emgmm_traced(xs, l, restarts, iters)?.0)
}

/// As [`fit_emgmm`], also returning the per-iteration log-likelihood of the winning run.
pub fn fit_emgmm_traced<T: Real>(
    xs: &[T],
    l: usize,
    restarts: usize,
    iters: usize,
) -> Result<(GmmFit<T>, Vec<T>)> {
    ensure!(l >= 1, InvalidArgument, "component count must be >= 1");
    ensure!(xs.len() >= l, InsufficientData, "{} samples for {l} components", xs.len());
    check_samples(xs)?;
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let floor = variance_floor(xs);
    let mut best: Option<(GmmFit<T>, Vec<T>)> = None;
    for r in 0..restarts.max(1) {
        // restart r seeds the first center at an evenly spaced quantile
        let q = (2 * r + 1) as f64 / (2 * restarts.max(1)) as f64;
        let first = sorted[((sorted.len() - 1) as f64 * q).round() as usize];
        let centers = farthest_points(&sorted, first, l);
        let run = em_run(xs, centers, floor, iters);
        if best.as_ref().is_none_or(|b| run.0.log_likelihood > b.0.log_likelihood) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

fn farthest_points<T: Real>(sorted: &[T], first: T, l: usize) -> Vec<T> {
    let mut centers = vec![first];
    while centers.len() < l {
        let mut far = sorted[0];
        let mut far_d = T::neg_infinity();
        for &x in sorted {
            let d = centers.iter().map(|&c| (x - c).abs()).fold(T::infinity(), T::min);
            if d > far_d {
                far_d = d;
                far = x;
            }
        }
        centers.push(far);
    }
    centers
}

fn em_run<T: Real>(xs: &[T], centers: Vec<T>, floor: T, iters: usize) -> (GmmFit<T>, Vec<T>) {
    let k = centers.len();
    let n = T::from_usize_lossy(xs.len());
    // hard nearest-center start
    let labels: Vec<usize> = xs
        .iter()
        .map(|&x| {
            (0..k)
                .min_by(|&a, &b| (x - centers[a]).abs().partial_cmp(&(x - centers[b]).abs()).unwrap())
                .unwrap()
        })
        .collect();
    let init = GmmFit::from_assignments(xs, &labels, k, floor);
    let (mut w, mut mu, mut var) = (init.weights, init.means, init.variances);
    for j in 0..k {
        if w[j] == T::zero() {
            w[j] = T::one() / n;
        }
    }
    let wsum: T = w.iter().copied().sum();
    w.iter_mut().for_each(|x| *x = *x / wsum);

    let mut trace = Vec::with_capacity(iters);
    let mut resp = vec![T::zero(); xs.len() * k];
    let mut lj = vec![T::zero(); k];
    for _ in 0..iters.max(1) {
        // E step
        let mut ll = T::zero();
        for (i, &x) in xs.iter().enumerate() {
            for j in 0..k {
                lj[j] = w[j].ln() + normal_ln_pdf(x, mu[j], var[j]);
            }
            let lse = log_sum_exp(&lj);
            ll = ll + lse;
            for j in 0..k {
                resp[i * k + j] = (lj[j] - lse).exp();
            }
        }
        trace.push(ll);
        if trace.len() >= 2 {
            let prev = trace[trace.len() - 2];
            if (ll - prev).abs() <= T::lit(1e-12) * ll.abs().max(T::one()) {
                break;
            }
        }
        // M step
        for j in 0..k {
            let mut nj = T::zero();
            let mut sx = T::zero();
            for (i, &x) in xs.iter().enumerate() {
                nj = nj + resp[i * k + j];
                sx = sx + resp[i * k + j] * x;
            }
            if nj <= T::min_positive_value() {
                continue;
            }
            let m = sx / nj;
            let mut sv = T::zero();
            for (i, &x) in xs.iter().enumerate() {
                sv = sv + resp[i * k + j] * (x - m) * (x - m);
            }
            w[j] = nj / n;
            mu[j] = m;
            var[j] = (sv / nj).max(floor);
        }
    }
    let (mut fit, _) = GmmFit::canonical(w, mu, var, T::zero());
    fit.log_likelihood = fit.log_likelihood_of(xs);
    (fit, trace)
}

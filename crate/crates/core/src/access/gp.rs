//! Sparse online Gaussian-process regression over a budgeted dictionary.
//!
//! The posterior over the latent values at the dictionary points is kept as a mean vector
//! and covariance matrix and updated by exact sequential Bayesian (Kalman) steps. A new
//! input joins the dictionary when its kernel-space residual after projection onto the
//! dictionary span exceeds the novelty tolerance; otherwise the observation is absorbed
//! through its projection weights. With every input admitted the model is identical to
//! batch GP regression.

use serde::{Deserialize, Serialize};

use super::env::{HistoryState, Observation};
use crate::error::{ensure, Result};

/// Kernel and dictionary settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpParams {
    /// Squared-exponential lengthscale ℓ.
    pub lengthscale: f64,
    /// Signal variance s².
    pub signal_var: f64,
    /// Observation noise λ.
    pub noise_var: f64,
    /// Novelty (approximate linear dependence) tolerance ν.
    pub ald_tol: f64,
    /// Dictionary budget B.
    pub budget: usize,
}

impl Default for GpParams {
    fn default() -> Self {
        Self { lengthscale: 1.0, signal_var: 1.0, noise_var: 0.1, ald_tol: 0.01, budget: 300 }
    }
}

impl GpParams {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.lengthscale > 0.0, Config, "lengthscale must be > 0");
        ensure!(self.signal_var > 0.0, Config, "signal_var must be > 0");
        ensure!(self.noise_var > 0.0, Config, "noise_var must be > 0");
        ensure!(self.ald_tol >= 0.0, Config, "ald_tol must be >= 0");
        ensure!(self.budget >= 1, Config, "budget must be >= 1");
        Ok(())
    }
}

/// Sparse feature vector with its cached squared norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    idx: Vec<usize>,
    val: Vec<f64>,
    sq: f64,
}

impl Feature {
    pub fn from_dense(x: &[f64]) -> Self {
        let (idx, val): (Vec<usize>, Vec<f64>) =
            x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).unzip();
        let sq = val.iter().map(|v| v * v).sum();
        Self { idx, val, sq }
    }

    /// Window part of `encode_history(h, ·, n_channels)` in sparse form.
    pub fn from_window(h: &HistoryState, n_channels: usize) -> Self {
        Self::from_history(h, usize::MAX, n_channels)
    }

    /// Same vector as `encode_history(h, action, n_channels)` without the dense detour.
    pub fn from_history(h: &HistoryState, action: usize, n_channels: usize) -> Self {
        let mut idx = Vec::with_capacity(h.len() + 1);
        let mut val = Vec::with_capacity(h.len() + 1);
        for (m, &(a, o)) in h.iter().enumerate() {
            if o != Observation::None && a < n_channels {
                idx.push(m * n_channels + a);
                val.push(o.code());
            }
        }
        if action < n_channels {
            idx.push(h.len() * n_channels + action);
            val.push(1.0);
        }
        let sq = val.iter().map(|v| v * v).sum();
        Self { idx, val, sq }
    }

    fn dot(&self, other: &Self) -> f64 {
        let (mut i, mut j, mut s) = (0, 0, 0.0);
        while i < self.idx.len() && j < other.idx.len() {
            match self.idx[i].cmp(&other.idx[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    s += self.val[i] * other.val[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        s
    }
}

/// Jitter added to the kernel diagonal, relative to the signal variance.
const JITTER: f64 = 1e-10;

/// Budgeted sparse online GP regressor used as a Q-function approximator.
#[derive(Debug, Clone)]
pub struct GpQModel {
    params: GpParams,
    dict: Vec<Feature>,
    /// Lower Cholesky factor of `K_DD + jitter·I`, row `i` holding `i + 1` entries.
    chol: Vec<Vec<f64>>,
    /// Posterior mean of the latent values at the dictionary points.
    mean: Vec<f64>,
    /// Posterior covariance of the latent values at the dictionary points.
    cov: Vec<Vec<f64>>,
    /// `K_DD⁻¹ · mean`, so predictive means cost one kernel row.
    coef: Vec<f64>,
    rebuilds: usize,
}

/// Serializable summary of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpSnapshot {
    pub lengthscale: f64,
    pub signal_var: f64,
    pub noise_var: f64,
    pub ald_tol: f64,
    pub budget: usize,
    pub dictionary_size: usize,
    pub coefficients: Vec<f64>,
}

impl GpQModel {
    pub fn new(params: GpParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            dict: Vec::new(),
            chol: Vec::new(),
            mean: Vec::new(),
            cov: Vec::new(),
            coef: Vec::new(),
            rebuilds: 0,
        })
    }

    pub fn params(&self) -> &GpParams {
        &self.params
    }

    pub fn dictionary_size(&self) -> usize {
        self.dict.len()
    }

    /// Number of times the factorization had to be rebuilt from scratch.
    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    /// Diagonal of the Cholesky factor (all entries positive for a valid model).
    pub fn factor_diagonal(&self) -> Vec<f64> {
        self.chol.iter().map(|r| *r.last().unwrap()).collect()
    }

    pub fn snapshot(&self) -> GpSnapshot {
        GpSnapshot {
            lengthscale: self.params.lengthscale,
            signal_var: self.params.signal_var,
            noise_var: self.params.noise_var,
            ald_tol: self.params.ald_tol,
            budget: self.params.budget,
            dictionary_size: self.dict.len(),
            coefficients: self.coef.clone(),
        }
    }

    fn kernel(&self, a: &Feature, b: &Feature) -> f64 {
        let d2 = (a.sq + b.sq - 2.0 * a.dot(b)).max(0.0);
        self.params.signal_var * (-d2 / (2.0 * self.params.lengthscale * self.params.lengthscale)).exp()
    }

    fn kernel_row(&self, x: &Feature) -> Vec<f64> {
        self.dict.iter().map(|z| self.kernel(x, z)).collect()
    }

    fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        for i in 0..y.len() {
            let row = &self.chol[i];
            let s: f64 = row[..i].iter().zip(&y[..i]).map(|(l, y)| l * y).sum();
            y[i] = (y[i] - s) / row[i];
        }
        y
    }

    fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.chol[i][i];
            let xi = x[i];
            for (j, l) in self.chol[i][..i].iter().enumerate() {
                x[j] -= l * xi;
            }
        }
        x
    }

    /// Predictive mean at a feature.
    pub fn predict_mean(&self, x: &Feature) -> f64 {
        self.dict.iter().zip(&self.coef).map(|(z, c)| self.kernel(x, z) * c).sum()
    }

    /// Predictive means at `base + e_(offset + a)` for every `a < n`, in one pass over the
    /// dictionary. `base` must have no entries at or beyond `offset`.
    pub fn predict_means_one_hot(&self, base: &Feature, offset: usize, n: usize) -> Vec<f64> {
        debug_assert!(base.idx.iter().all(|&i| i < offset));
        let inv = 1.0 / (2.0 * self.params.lengthscale * self.params.lengthscale);
        let mut common = 0.0;
        let mut extra = vec![0.0; n];
        for (z, &c) in self.dict.iter().zip(&self.coef) {
            let split = z.idx.partition_point(|&i| i < offset);
            let (mut low_sq, mut dot) = (0.0, 0.0);
            let mut j = 0;
            for (&zi, &zv) in z.idx[..split].iter().zip(&z.val[..split]) {
                low_sq += zv * zv;
                while j < base.idx.len() && base.idx[j] < zi {
                    j += 1;
                }
                if j < base.idx.len() && base.idx[j] == zi {
                    dot += base.val[j] * zv;
                }
            }
            let high_sq = z.sq - low_sq;
            // ‖x_a − z‖² = ‖base − z_low‖² + 1 + ‖z_high‖² − 2·z_high[a]
            let d2 = (base.sq + low_sq - 2.0 * dot).max(0.0) + 1.0 + high_sq;
            let w = c * self.params.signal_var * (-d2 * inv).exp();
            common += w;
            for (&zi, &zv) in z.idx[split..].iter().zip(&z.val[split..]) {
                let a = zi - offset;
                if a < n {
                    extra[a] += w * ((2.0 * zv * inv).exp() - 1.0);
                }
            }
        }
        extra.iter().map(|e| common + e).collect()
    }

    /// Predictive mean and latent variance at a feature.
    pub fn predict_feature(&self, x: &Feature) -> (f64, f64) {
        let kxx = self.params.signal_var;
        if self.dict.is_empty() {
            return (0.0, kxx);
        }
        let k = self.kernel_row(x);
        let mean = k.iter().zip(&self.coef).map(|(k, c)| k * c).sum();
        let v = self.solve_lower(&k);
        let a = self.solve_upper(&v);
        let sa = mat_vec(&self.cov, &a);
        let var = kxx - dot(&v, &v) + dot(&a, &sa);
        (mean, var.max(0.0))
    }

    /// Predictive mean and variance at a dense feature vector.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        self.predict_feature(&Feature::from_dense(x))
    }

    /// Condition on one noisy observation `target` at a dense feature vector.
    pub fn update(&mut self, x: &[f64], target: f64) -> Result<()> {
        self.update_feature(Feature::from_dense(x), target)
    }

    /// Condition on one noisy observation `target` at `x`.
    pub fn update_feature(&mut self, x: Feature, target: f64) -> Result<()> {
        ensure!(target.is_finite(), NonFinite, "GP target must be finite, got {target}");
        let kxx = self.params.signal_var;
        let mut k = self.kernel_row(&x);
        let mut v = self.solve_lower(&k);
        let residual = kxx - dot(&v, &v);
        let h: Vec<f64>;
        if self.dict.is_empty() || residual > self.params.ald_tol {
            if self.dict.len() >= self.params.budget {
                self.evict_oldest();
                k.remove(0);
                v = self.solve_lower(&k);
            }
            let a = self.solve_upper(&v);
            let sa = mat_vec(&self.cov, &a);
            let prior_var = (kxx - dot(&v, &v)).max(0.0) + dot(&a, &sa);
            let diag2 = kxx * (1.0 + JITTER) - dot(&v, &v);
            let n = self.dict.len();
            for (row, s) in self.cov.iter_mut().zip(&sa) {
                row.push(*s);
            }
            let mut last = sa.clone();
            last.push(prior_var);
            self.cov.push(last);
            self.mean.push(dot(&a, &self.mean));
            self.dict.push(x);
            if diag2 > 0.0 && diag2.is_finite() {
                let mut row = v;
                row.push(diag2.sqrt());
                self.chol.push(row);
            } else {
                self.rebuild_factor()?;
            }
            let mut e = vec![0.0; n + 1];
            e[n] = 1.0;
            h = e;
        } else {
            h = self.solve_upper(&v);
        }
        self.kalman(&h, target);
        self.coef = self.solve_upper(&self.solve_lower(&self.mean));
        debug_assert!(self.dict.len() <= self.params.budget);
        Ok(())
    }

    fn kalman(&mut self, h: &[f64], y: f64) {
        let sh = mat_vec(&self.cov, h);
        let s = dot(h, &sh) + self.params.noise_var;
        let innov = y - dot(h, &self.mean);
        for (m, g) in self.mean.iter_mut().zip(&sh) {
            *m += g / s * innov;
        }
        for (i, row) in self.cov.iter_mut().enumerate() {
            let gi = sh[i] / s;
            for (c, shj) in row.iter_mut().zip(&sh) {
                *c -= gi * shj;
            }
        }
    }

    /// Drop the oldest dictionary point: marginalize it out of the posterior and
    /// downdate the factorization with a rank-one update.
    fn evict_oldest(&mut self) {
        self.dict.remove(0);
        self.mean.remove(0);
        self.cov.remove(0);
        for row in &mut self.cov {
            row.remove(0);
        }
        let first = self.chol.remove(0);
        debug_assert_eq!(first.len(), 1);
        let mut x: Vec<f64> = self.chol.iter_mut().map(|r| r.remove(0)).collect();
        let n = self.chol.len();
        for kk in 0..n {
            let lkk = self.chol[kk][kk];
            let r = lkk.hypot(x[kk]);
            let c = r / lkk;
            let s = x[kk] / lkk;
            self.chol[kk][kk] = r;
            for i in kk + 1..n {
                let lik = (self.chol[i][kk] + s * x[i]) / c;
                x[i] = c * x[i] - s * lik;
                self.chol[i][kk] = lik;
            }
        }
        if self.chol.iter().enumerate().any(|(i, r)| !(r[i] > 0.0 && r[i].is_finite())) {
            // Downdate lost definiteness; refactorize.
            let _ = self.rebuild_factor();
        }
    }

    /// Factorize the dictionary kernel matrix from scratch, growing the jitter on failure.
    fn rebuild_factor(&mut self) -> Result<()> {
        self.rebuilds += 1;
        log::warn!("GP factorization rebuilt from scratch ({} points)", self.dict.len());
        let n = self.dict.len();
        let mut jitter = JITTER;
        for _ in 0..12 {
            let mut l: Vec<Vec<f64>> = Vec::with_capacity(n);
            let mut ok = true;
            for i in 0..n {
                let mut row = vec![0.0; i + 1];
                for j in 0..=i {
                    let mut s = self.kernel(&self.dict[i], &self.dict[j]);
                    if i == j {
                        s += jitter * self.params.signal_var;
                    }
                    s -= if i == j {
                        row[..j].iter().map(|a| a * a).sum::<f64>()
                    } else {
                        row[..j].iter().zip(&l[j][..j]).map(|(a, b)| a * b).sum::<f64>()
                    };
                    if i == j {
                        if !(s > 0.0) {
                            ok = false;
                            break;
                        }
                        row[j] = s.sqrt();
                    } else {
                        row[j] = s / l[j][j];
                    }
                }
                if !ok {
                    break;
                }
                l.push(row);
            }
            if ok {
                self.chol = l;
                return Ok(());
            }
            jitter *= 10.0;
        }
        Err(crate::Error::Numerical("kernel matrix factorization failed".into()))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

//! Dirichlet-process mixture of univariate Gaussians fitted by collapsed Gibbs sampling.
//!
//! Component parameters are integrated out under a Normal-Inverse-Gamma base measure,
//! so each assignment step uses the Student-t posterior predictive. The concentration
//! `α` carries a Gamma hyperprior and is resampled every sweep with the auxiliary
//! variable update of Escobar and West.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use super::dwell::{infer_dwell, DwellModel};
use super::gmm::GmmFit;
use crate::conjugate::{sample_ln_weights, NigPrior};
use crate::error::{ensure, Result};

pub const MIN_DP_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct DpHyper {
    /// Gamma(shape, rate) hyperprior on the concentration.
    pub alpha_shape: f64,
    pub alpha_rate: f64,
    pub alpha_init: f64,
    /// Base measure; `None` derives it from the data.
    pub prior: Option<NigPrior>,
    pub burn_in: usize,
    /// Components below this weight are pruned after sampling.
    pub prune_weight: f64,
    /// Number of contiguous quantile groups used as the starting partition.
    pub init_clusters: usize,
    /// Split-merge proposals per sweep.
    pub split_merge: usize,
}

impl Default for DpHyper {
    fn default() -> Self {
        Self {
            alpha_shape: 1.0,
            alpha_rate: 1.0,
            alpha_init: 1.0,
            prior: None,
            burn_in: 150,
            prune_weight: 0.01,
            init_clusters: 12,
            split_merge: 4,
        }
    }
}

/// Stage-I output of the nonparametric fitter.
#[derive(Debug, Clone, PartialEq)]
pub struct DpFit {
    pub gmm: GmmFit<f64>,
    /// Canonical component id of every sample.
    pub assignments: Vec<usize>,
    /// Posterior mean of the concentration over post-burn-in sweeps.
    pub alpha: f64,
    pub dwell: DwellModel<f64>,
    /// Occupied component count after each sweep.
    pub k_trace: Vec<usize>,
}

/// `lnΓ((dof+1)/2) - lnΓ(dof/2)` for `dof = 2·a0 + n`, indexed by cluster size `n`.
#[derive(Debug, Clone)]
struct LnGammaTable(Vec<f64>);

impl LnGammaTable {
    fn new(a0: f64, n_max: usize) -> Self {
        Self(
            (0..=n_max)
                .map(|n| {
                    let dof = 2.0 * a0 + n as f64;
                    ln_gamma((dof + 1.0) / 2.0) - ln_gamma(dof / 2.0)
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Default)]
struct Cluster {
    n: usize,
    sum: f64,
    sumsq: f64,
    // cached predictive: location, squared scale, dof, log normalizer
    loc: f64,
    scale2: f64,
    dof: f64,
    ln_norm: f64,
}

impl Cluster {
    fn add(&mut self, x: f64, p: &NigPrior, lg: &LnGammaTable) {
        self.n += 1;
        self.sum += x;
        self.sumsq += x * x;
        self.refresh(p, lg);
    }

    fn remove(&mut self, x: f64, p: &NigPrior, lg: &LnGammaTable) {
        self.n -= 1;
        self.sum -= x;
        self.sumsq -= x * x;
        if self.n == 0 {
            self.sum = 0.0;
            self.sumsq = 0.0;
        }
        self.refresh(p, lg);
    }

    fn posterior(&self, p: &NigPrior) -> (f64, f64, f64, f64) {
        let n = self.n as f64;
        let kn = p.kappa0 + n;
        let mn = (p.kappa0 * p.mu0 + self.sum) / kn;
        let an = p.a0 + n / 2.0;
        let ss = if self.n > 0 {
            let mean = self.sum / n;
            (self.sumsq - n * mean * mean).max(0.0) + p.kappa0 * n * (mean - p.mu0).powi(2) / kn
        } else {
            0.0
        };
        (mn, kn, an, p.b0 + 0.5 * ss)
    }

    fn refresh(&mut self, p: &NigPrior, lg: &LnGammaTable) {
        let (mn, kn, an, bn) = self.posterior(p);
        self.loc = mn;
        self.dof = 2.0 * an;
        self.scale2 = bn * (kn + 1.0) / (an * kn);
        self.ln_norm = lg.0[self.n] - 0.5 * (self.dof * std::f64::consts::PI * self.scale2).ln();
    }

    /// Log marginal likelihood of the cluster's samples.
    fn ln_marginal(&self, p: &NigPrior) -> f64 {
        let (_mn, kn, an, bn) = self.posterior(p);
        ln_gamma(an) - ln_gamma(p.a0) + p.a0 * p.b0.ln() - an * bn.ln() + 0.5 * (p.kappa0 / kn).ln()
            - 0.5 * self.n as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    fn ln_predictive(&self, x: f64) -> f64 {
        let z = (x - self.loc).powi(2) / (self.dof * self.scale2);
        self.ln_norm - 0.5 * (self.dof + 1.0) * z.ln_1p()
    }
}

fn resample_alpha<R: Rng + ?Sized>(alpha: f64, k: usize, n: usize, h: &DpHyper, rng: &mut R) -> f64 {
    let eta = Beta::new(alpha + 1.0, n as f64).unwrap().sample(rng);
    let rate = h.alpha_rate - eta.ln();
    let odds = (h.alpha_shape + k as f64 - 1.0) / (n as f64 * rate);
    let shape = if rng.random::<f64>() < odds / (1.0 + odds) {
        h.alpha_shape + k as f64
    } else {
        h.alpha_shape + k as f64 - 1.0
    };
    Gamma::new(shape.max(1e-3), 1.0 / rate).unwrap().sample(rng)
}

/// Sequentially-allocated split-merge move (Dahl 2003): two anchors are drawn; if they
/// share a cluster a split is proposed by allocating the remaining members one at a time,
/// otherwise the merge of their clusters is proposed. Metropolis-Hastings accept.
#[allow(clippy::too_many_arguments)]
fn split_merge<R: Rng + ?Sized>(
    xs: &[f64],
    lg: &LnGammaTable,
    z: &mut [usize],
    clusters: &mut Vec<Cluster>,
    empty: &Cluster,
    prior: &NigPrior,
    alpha: f64,
    rng: &mut R,
) {
    let n = xs.len();
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let (ci, cj) = (z[i], z[j]);
    let members: Vec<usize> = if ci == cj {
        (0..n).filter(|&t| z[t] == ci && t != i && t != j).collect()
    } else {
        (0..n).filter(|&t| (z[t] == ci || z[t] == cj) && t != i && t != j).collect()
    };
    let mut order = members.clone();

    order.shuffle(rng);

    // sequential allocation; `forced` replays an existing split to score its proposal
    let allocate = |forced: Option<&[usize]>, rng: &mut R| -> (Cluster, Cluster, Vec<bool>, f64) {
        let mut a = empty.clone();
        let mut b = empty.clone();
        a.add(xs[i], prior, lg);
        b.add(xs[j], prior, lg);
        let mut to_a = Vec::with_capacity(order.len());
        let mut ln_q = 0.0;
        for &t in &order {
            let la = (a.n as f64).ln() + a.ln_predictive(xs[t]);
            let lb = (b.n as f64).ln() + b.ln_predictive(xs[t]);
            let m = la.max(lb);
            let pa = (la - m).exp() / ((la - m).exp() + (lb - m).exp());
            let choose_a = match forced {
                Some(labels) => labels[t] == ci,
                None => rng.random::<f64>() < pa,
            };
            ln_q += if choose_a { pa.ln() } else { (1.0 - pa).ln() };
            if choose_a {
                a.add(xs[t], prior, lg);
            } else {
                b.add(xs[t], prior, lg);
            }
            to_a.push(choose_a);
        }
        (a, b, to_a, ln_q)
    };
    let ln_gamma_n = |c: &Cluster| ln_gamma(c.n as f64);

    if ci == cj {
        let (a, b, to_a, ln_q) = allocate(None, rng);
        let merged = &clusters[ci];
        let ln_ratio = alpha.ln() + ln_gamma_n(&a) + ln_gamma_n(&b) - ln_gamma_n(merged)
            + a.ln_marginal(prior)
            + b.ln_marginal(prior)
            - merged.ln_marginal(prior)
            - ln_q;
        if rng.random::<f64>().ln() < ln_ratio {
            let new = match clusters.iter().position(|c| c.n == 0) {
                Some(f) => f,
                None => {
                    clusters.push(empty.clone());
                    clusters.len() - 1
                }
            };
            z[j] = new;
            for (&t, &ga) in order.iter().zip(&to_a) {
                z[t] = if ga { ci } else { new };
            }
            clusters[ci] = a;
            clusters[new] = b;
        }
    } else {
        let mut merged = clusters[ci].clone();
        for &t in members.iter().chain(std::iter::once(&j)) {
            if z[t] == cj {
                merged.add(xs[t], prior, lg);
            }
        }
        let labels: Vec<usize> = z.to_vec();
        let (_, _, _, ln_q) = allocate(Some(&labels), rng);
        let (a, b) = (&clusters[ci], &clusters[cj]);
        let ln_ratio = -alpha.ln() - ln_gamma_n(a) - ln_gamma_n(b) + ln_gamma_n(&merged)
            + merged.ln_marginal(prior)
            - a.ln_marginal(prior)
            - b.ln_marginal(prior)
            + ln_q;
        if rng.random::<f64>().ln() < ln_ratio {
            for t in 0..n {
                if z[t] == cj {
                    z[t] = ci;
                }
            }
            clusters[ci] = merged;
            clusters[cj] = empty.clone();
        }
    }
}

/// Collapsed Gibbs sampler for a DP mixture over the energy statistics (in slot order).
pub fn fit_ccdpgmm<R: Rng + ?Sized>(
    samples: &[f64],
    hypers: &DpHyper,
    sweeps: usize,
    rng: &mut R,
) -> Result<DpFit> {
    ensure!(
        samples.len() >= MIN_DP_SAMPLES,
        InsufficientData,
        "DP mixture fitting needs at least {MIN_DP_SAMPLES} samples, got {}",
        samples.len()
    );
    ensure!(samples.iter().all(|x| x.is_finite()), NonFinite, "energy samples must be finite");
    ensure!(sweeps >= 1, InvalidArgument, "at least one Gibbs sweep required");
    let prior = hypers.prior.unwrap_or_else(|| NigPrior::from_data(samples));
    let n = samples.len();
    let lg = LnGammaTable::new(prior.a0, n);

    // contiguous quantile groups as the starting partition
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| samples[a].total_cmp(&samples[b]));
    let k0 = hypers.init_clusters.clamp(1, n);
    let mut z = vec![0usize; n];
    let mut clusters: Vec<Cluster> = vec![Cluster::default(); k0];
    for (rank, &i) in order.iter().enumerate() {
        z[i] = rank * k0 / n;
    }
    clusters.iter_mut().for_each(|c| c.refresh(&prior, &lg));
    for i in 0..n {
        clusters[z[i]].add(samples[i], &prior, &lg);
    }
    let mut empty = Cluster::default();
    empty.refresh(&prior, &lg);

    let mut alpha = hypers.alpha_init;
    let mut alpha_acc = 0.0;
    let mut alpha_cnt = 0usize;
    let mut k_trace = Vec::with_capacity(sweeps);
    let mut live: Vec<usize> = Vec::new();
    let mut lw: Vec<f64> = Vec::new();

    for sweep in 0..sweeps {
        for i in 0..n {
            let x = samples[i];
            clusters[z[i]].remove(x, &prior, &lg);
            live.clear();
            lw.clear();
            for (c, cl) in clusters.iter().enumerate() {
                if cl.n > 0 {
                    live.push(c);
                    lw.push((cl.n as f64).ln() + cl.ln_predictive(x));
                }
            }
            lw.push(alpha.ln() + empty.ln_predictive(x));
            let pick = sample_ln_weights(&lw, rng);
            let target = if pick < live.len() {
                live[pick]
            } else if let Some(free) = clusters.iter().position(|c| c.n == 0) {
                free
            } else {
                clusters.push(empty.clone());
                clusters.len() - 1
            };
            clusters[target].add(x, &prior, &lg);
            z[i] = target;
        }
        for _ in 0..hypers.split_merge {
            split_merge(samples, &lg, &mut z, &mut clusters, &empty, &prior, alpha, rng);
        }
        let k = clusters.iter().filter(|c| c.n > 0).count();
        alpha = resample_alpha(alpha, k, n, hypers, rng);
        k_trace.push(k);
        if sweep >= hypers.burn_in.min(sweeps - 1) {
            alpha_acc += alpha;
            alpha_cnt += 1;
        }
    }

    // prune light components and reassign their samples by predictive probability
    let keep: Vec<usize> = (0..clusters.len())
        .filter(|&c| clusters[c].n > 0 && clusters[c].n as f64 / n as f64 >= hypers.prune_weight)
        .collect();
    let keep = if keep.is_empty() {
        vec![(0..clusters.len()).max_by_key(|&c| clusters[c].n).unwrap()]
    } else {
        keep
    };
    for i in 0..n {
        if !keep.contains(&z[i]) {
            let x = samples[i];
            clusters[z[i]].remove(x, &prior, &lg);
            let best = *keep
                .iter()
                .max_by(|&&a, &&b| {
                    let la = (clusters[a].n as f64).ln() + clusters[a].ln_predictive(x);
                    let lb = (clusters[b].n as f64).ln() + clusters[b].ln_predictive(x);
                    la.total_cmp(&lb)
                })
                .unwrap();
            clusters[best].add(x, &prior, &lg);
            z[i] = best;
        }
    }

    let mut index = vec![usize::MAX; clusters.len()];
    let (mut weights, mut means, mut vars) = (vec![], vec![], vec![]);
    for (j, &c) in keep.iter().enumerate() {
        index[c] = j;
        let (mn, _kn, an, bn) = clusters[c].posterior(&prior);
        weights.push(clusters[c].n as f64 / n as f64);
        means.push(mn);
        vars.push(bn / (an - 1.0));
    }
    let (mut gmm, relabel) = GmmFit::canonical(weights, means, vars, 0.0);
    gmm.log_likelihood = gmm.log_likelihood_of(samples);
    let assignments: Vec<usize> = z.iter().map(|&c| relabel[index[c]]).collect();
    let dwell = infer_dwell(&assignments, gmm.k)?;
    Ok(DpFit {
        gmm,
        assignments,
        alpha: alpha_acc / alpha_cnt.max(1) as f64,
        dwell,
        k_trace,
    })
}

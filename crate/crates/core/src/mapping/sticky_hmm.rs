//! Weak-limit sticky HDP-HMM with a single state library shared by every sequence.

use rand::Rng;
use rand_distr::{Bernoulli, Distribution};
use serde::{Deserialize, Serialize};

use crate::conjugate::{sample_dirichlet, sample_weights, GaussStats, NigPrior};
use crate::error::{ensure, Result};
use crate::rf_env::SensingSample;

/// Hyperparameters of the truncated sticky HDP-HMM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StickyHyper {
    /// Truncation level of the state library.
    pub k_max: usize,
    /// Top-level concentration.
    pub gamma: f64,
    /// Transition concentration.
    pub alpha: f64,
    /// Self-transition bias added to the diagonal.
    pub kappa: f64,
    /// Sweeps discarded before the final sample.
    pub burn_in: usize,
    /// Prior pseudo-count on each emission mean.
    pub kappa0: f64,
    /// Inverse-gamma shape of each emission variance.
    pub a0: f64,
}

impl Default for StickyHyper {
    fn default() -> Self {
        Self { k_max: 20, gamma: 1.0, alpha: 1.0, kappa: 50.0, burn_in: 250, kappa0: 0.01, a0: 2.0 }
    }
}

/// Sampler health information.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HmmDiagnostics {
    pub k_max: usize,
    /// The final sample used every available state: the truncation may under-segment.
    pub saturated: bool,
    /// Number of occupied states after each sweep.
    pub active_trace: Vec<usize>,
}

/// Segmentation of a set of multichannel energy sequences into shared spectrum states.
#[derive(Debug, Clone, PartialEq)]
pub struct StickyHmmFit {
    pub k_active: usize,
    /// Row-stochastic `k_active × k_active` transition matrix.
    pub transition: Vec<Vec<f64>>,
    /// Per-state emission means, one entry per channel.
    pub means: Vec<Vec<f64>>,
    /// Per-state diagonal emission variances.
    pub variances: Vec<Vec<f64>>,
    /// Per-sequence state labels in `0..k_active`.
    pub labels: Vec<Vec<usize>>,
    /// Secondary-user id of every sequence.
    pub sequence_ids: Vec<usize>,
    pub diagnostics: HmmDiagnostics,
}

impl StickyHmmFit {
    pub fn n_channels(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Number of samples carrying each label.
    pub fn state_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.k_active];
        for &z in self.labels.iter().flatten() {
            c[z] += 1;
        }
        c
    }

    /// Fraction of consecutive sample pairs whose labels differ.
    pub fn switch_rate(&self) -> f64 {
        let (mut sw, mut tot) = (0usize, 0usize);
        for seq in &self.labels {
            for w in seq.windows(2) {
                tot += 1;
                sw += usize::from(w[0] != w[1]);
            }
        }
        if tot == 0 {
            0.0
        } else {
            sw as f64 / tot as f64
        }
    }
}

/// Robust per-channel noise variance from successive differences: for a piecewise
/// constant mean, `½Δ²` is `σ²χ²₁` almost everywhere and the median of `χ²₁` is 0.455.
fn noise_scale(seqs: &[Vec<Vec<f64>>], c: usize) -> f64 {
    let mut d: Vec<f64> = seqs
        .iter()
        .flat_map(|s| s.windows(2).map(move |w| 0.5 * (w[1][c] - w[0][c]).powi(2)))
        .collect();
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let med = d[d.len() / 2] / 0.455;
    if med > 0.0 && med.is_finite() {
        med
    } else {
        1.0
    }
}

struct Emission {
    means: Vec<f64>,
    vars: Vec<f64>,
    ln_norm: f64,
}

impl Emission {
    fn new(means: Vec<f64>, vars: Vec<f64>) -> Self {
        let ln_norm = -0.5 * vars.iter().map(|v| (2.0 * std::f64::consts::PI * v).ln()).sum::<f64>();
        Self { means, vars, ln_norm }
    }

    fn ln_pdf(&self, x: &[f64]) -> f64 {
        let q: f64 = x.iter().zip(&self.means).zip(&self.vars).map(|((x, m), v)| (x - m).powi(2) / v).sum();
        self.ln_norm - 0.5 * q
    }
}

/// Sample a whole label sequence given the frozen parameters (backward filtering,
/// forward sampling).
fn sample_labels<R: Rng + ?Sized>(
    seq: &[Vec<f64>],
    emis: &[Emission],
    pi: &[Vec<f64>],
    pi0: &[f64],
    rng: &mut R,
) -> Vec<usize> {
    let k = emis.len();
    let t_len = seq.len();
    // Scaled likelihoods.
    let mut lik = vec![0.0; t_len * k];
    for (t, x) in seq.iter().enumerate() {
        let row = &mut lik[t * k..(t + 1) * k];
        for (j, e) in emis.iter().enumerate() {
            row[j] = e.ln_pdf(x);
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in row.iter_mut() {
            *v = (*v - max).exp();
        }
    }
    // Normalized backward messages.
    let mut back = vec![1.0; t_len * k];
    for t in (0..t_len.saturating_sub(1)).rev() {
        let mut tmp = vec![0.0; k];
        for j in 0..k {
            tmp[j] = lik[(t + 1) * k + j] * back[(t + 1) * k + j];
        }
        let mut total = 0.0;
        for i in 0..k {
            let s: f64 = pi[i].iter().zip(&tmp).map(|(p, b)| p * b).sum();
            back[t * k + i] = s;
            total += s;
        }
        if total > 0.0 {
            for i in 0..k {
                back[t * k + i] /= total;
            }
        }
    }
    let mut z: Vec<usize> = Vec::with_capacity(t_len);
    let mut w = vec![0.0; k];
    for t in 0..t_len {
        for j in 0..k {
            let prior = if t == 0 { pi0[j] } else { pi[z[t - 1]][j] };
            w[j] = prior * lik[t * k + j] * back[t * k + j];
        }
        let total: f64 = w.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            sample_weights(&w, rng)
        } else {
            // All weights underflowed: fall back to the emission likelihood alone.
            (0..k).max_by(|&a, &b| lik[t * k + a].total_cmp(&lik[t * k + b])).unwrap_or(0)
        };
        z.push(pick);
    }
    z
}

/// Chinese-restaurant-table count: tables occupied by `n` customers at concentration `c`.
fn crt<R: Rng + ?Sized>(n: usize, c: f64, rng: &mut R) -> usize {
    (0..n).filter(|&l| rng.random::<f64>() < c / (c + l as f64)).count()
}

/// Fit a truncated sticky HDP-HMM by blocked Gibbs sampling.
///
/// Every sequence shares one state library; labels are sampled per sequence by
/// forward-backward, emissions are conjugate Normal-Inverse-Gamma per channel. The
/// returned fit is the last sample, restricted to the states it uses.
pub fn fit_sticky_hmm<R: Rng + ?Sized>(
    sequences: &[Vec<SensingSample>],
    hyper: &StickyHyper,
    sweeps: usize,
    rng: &mut R,
) -> Result<StickyHmmFit> {
    ensure!(!sequences.is_empty(), InsufficientData, "no sequences");
    ensure!(sequences.iter().all(|s| !s.is_empty()), InsufficientData, "empty sequence");
    ensure!(hyper.k_max >= 2, InvalidArgument, "k_max must be at least 2, got {}", hyper.k_max);
    ensure!(
        hyper.gamma > 0.0 && hyper.alpha > 0.0 && hyper.kappa >= 0.0,
        InvalidArgument,
        "concentrations must be positive"
    );
    ensure!(hyper.kappa0 > 0.0 && hyper.a0 > 1.0, InvalidArgument, "emission prior needs kappa0 > 0 and a0 > 1");
    ensure!(sweeps > hyper.burn_in, InvalidArgument, "sweeps ({sweeps}) must exceed burn-in ({})", hyper.burn_in);
    let n_ch = sequences[0][0].energies.len();
    ensure!(n_ch >= 1, InvalidArgument, "samples carry no channels");
    let data: Vec<Vec<Vec<f64>>> = sequences
        .iter()
        .map(|s| s.iter().map(|x| x.energies.clone()).collect())
        .collect();
    ensure!(
        data.iter().flatten().all(|x| x.len() == n_ch),
        InvalidArgument,
        "inconsistent channel count"
    );
    ensure!(
        data.iter().flatten().flatten().all(|v| v.is_finite()),
        NonFinite,
        "energy samples must be finite"
    );

    let k = hyper.k_max;
    let n_total: usize = data.iter().map(Vec::len).sum();
    let priors: Vec<NigPrior> = (0..n_ch)
        .map(|c| {
            let mean = data.iter().flatten().map(|x| x[c]).sum::<f64>() / n_total as f64;
            NigPrior { mu0: mean, kappa0: hyper.kappa0, a0: hyper.a0, b0: noise_scale(&data, c) * (hyper.a0 - 1.0) }
        })
        .collect();

    // Initial library: emission means at distinct data points chosen by farthest-point
    // seeding, variances at the prior mean.
    let flat: Vec<&Vec<f64>> = data.iter().flatten().collect();
    let scale: Vec<f64> = priors.iter().map(|p| p.b0 / (p.a0 - 1.0)).collect();
    let dist = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(&scale).map(|((a, b), s)| (a - b).powi(2) / s).sum() };
    let mut centers: Vec<Vec<f64>> = vec![flat[rng.random_range(0..flat.len())].clone()];
    let mut dmin: Vec<f64> = flat.iter().map(|x| dist(x, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dmin.iter().sum();
        let pick = if total > 0.0 { sample_weights(&dmin, rng) } else { rng.random_range(0..flat.len()) };
        centers.push(flat[pick].clone());
        for (d, x) in dmin.iter_mut().zip(&flat) {
            *d = d.min(dist(x, centers.last().unwrap()));
        }
    }
    let mut emis: Vec<Emission> = centers.into_iter().map(|m| Emission::new(m, scale.clone())).collect();
    let mut beta = vec![1.0 / k as f64; k];
    let mut pi: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let conc: Vec<f64> = (0..k).map(|i| hyper.alpha * beta[i] + if i == j { hyper.kappa } else { 0.0 }).collect();
            sample_dirichlet(&conc, rng)
        })
        .collect();
    let mut pi0 = beta.clone();
    let mut labels: Vec<Vec<usize>> = Vec::new();
    let mut diagnostics = HmmDiagnostics { k_max: k, ..Default::default() };
    let rho = hyper.kappa / (hyper.alpha + hyper.kappa);

    for _sweep in 0..sweeps {
        labels = data.iter().map(|s| sample_labels(s, &emis, &pi, &pi0, rng)).collect();

        // Transition and initial-state counts.
        let mut n = vec![vec![0usize; k]; k];
        let mut n0 = vec![0usize; k];
        let mut stats = vec![vec![GaussStats::default(); n_ch]; k];
        for (seq, z) in data.iter().zip(&labels) {
            n0[z[0]] += 1;
            for w in z.windows(2) {
                n[w[0]][w[1]] += 1;
            }
            for (x, &zt) in seq.iter().zip(z) {
                for c in 0..n_ch {
                    stats[zt][c].push(x[c]);
                }
            }
        }
        let active = stats.iter().filter(|s| s[0].n > 0).count();
        diagnostics.active_trace.push(active);

        // Auxiliary table counts, override correction and the global state weights.
        let mut mbar = vec![0.0; k];
        for j in 0..k {
            for i in 0..k {
                if n[j][i] == 0 {
                    continue;
                }
                let c = hyper.alpha * beta[i] + if i == j { hyper.kappa } else { 0.0 };
                let mut m = crt(n[j][i], c, rng);
                if i == j && m > 0 {
                    let p = rho / (rho + beta[j] * (1.0 - rho));
                    let bern = Bernoulli::new(p.clamp(0.0, 1.0)).expect("probability in range");
                    let w = (0..m).filter(|_| bern.sample(rng)).count();
                    m -= w;
                }
                mbar[i] += m as f64;
            }
        }
        for i in 0..k {
            mbar[i] += n0[i] as f64;
        }
        let conc: Vec<f64> = mbar.iter().map(|m| hyper.gamma / k as f64 + m).collect();
        beta = sample_dirichlet(&conc, rng);

        pi = (0..k)
            .map(|j| {
                let conc: Vec<f64> = (0..k)
                    .map(|i| hyper.alpha * beta[i] + n[j][i] as f64 + if i == j { hyper.kappa } else { 0.0 })
                    .collect();
                sample_dirichlet(&conc, rng)
            })
            .collect();
        let conc0: Vec<f64> = (0..k).map(|i| hyper.alpha * beta[i] + n0[i] as f64).collect();
        pi0 = sample_dirichlet(&conc0, rng);

        emis = (0..k)
            .map(|j| {
                let (m, v): (Vec<f64>, Vec<f64>) =
                    (0..n_ch).map(|c| priors[c].sample_posterior(&stats[j][c], rng)).unzip();
                Emission::new(m, v)
            })
            .collect();
    }

    // Restrict the final sample to the states it uses.
    let mut used = vec![false; k];
    for &z in labels.iter().flatten() {
        used[z] = true;
    }
    let keep: Vec<usize> = (0..k).filter(|&j| used[j]).collect();
    let mut remap = vec![usize::MAX; k];
    for (new, &old) in keep.iter().enumerate() {
        remap[old] = new;
    }
    let labels: Vec<Vec<usize>> = labels.iter().map(|z| z.iter().map(|&x| remap[x]).collect()).collect();
    let transition: Vec<Vec<f64>> = keep
        .iter()
        .map(|&j| {
            let row: Vec<f64> = keep.iter().map(|&i| pi[j][i]).collect();
            let s: f64 = row.iter().sum();
            row.iter().map(|p| p / s).collect()
        })
        .collect();
    // Report posterior-mean emissions given the final labels.
    let mut stats = vec![vec![GaussStats::default(); n_ch]; keep.len()];
    for (seq, z) in data.iter().zip(&labels) {
        for (x, &zt) in seq.iter().zip(z) {
            for c in 0..n_ch {
                stats[zt][c].push(x[c]);
            }
        }
    }
    let (means, variances): (Vec<Vec<f64>>, Vec<Vec<f64>>) = stats
        .iter()
        .map(|s| (0..n_ch).map(|c| priors[c].posterior_mean(&s[c])).unzip())
        .unzip();
    diagnostics.saturated = keep.len() == k;
    if diagnostics.saturated {
        log::warn!("sticky HMM used all {k} states; the truncation may under-segment");
    }
    Ok(StickyHmmFit {
        k_active: keep.len(),
        transition,
        means,
        variances,
        labels,
        sequence_ids: sequences.iter().map(|s| s[0].su_id).collect(),
        diagnostics,
    })
}

//! Fusion of per-cluster-head state libraries into one global library.

use super::sticky_hmm::{HmmDiagnostics, StickyHmmFit};
use crate::error::{ensure, Result};

struct Entry {
    means: Vec<f64>,
    vars: Vec<f64>,
    count: f64,
}

/// Largest per-channel mean gap measured in pooled emission standard deviations.
pub fn state_distance(ma: &[f64], va: &[f64], mb: &[f64], vb: &[f64]) -> f64 {
    ma.iter()
        .zip(va)
        .zip(mb.iter().zip(vb))
        .map(|((ma, va), (mb, vb))| (ma - mb).abs() / ((va + vb) / 2.0).sqrt())
        .fold(0.0, f64::max)
}

fn merge(a: &Entry, b: &Entry) -> Entry {
    let n = a.count + b.count;
    let (wa, wb) = (a.count / n, b.count / n);
    let means: Vec<f64> = a.means.iter().zip(&b.means).map(|(x, y)| wa * x + wb * y).collect();
    let vars = (0..means.len())
        .map(|c| {
            wa * (a.vars[c] + (a.means[c] - means[c]).powi(2)) + wb * (b.vars[c] + (b.means[c] - means[c]).powi(2))
        })
        .collect();
    Entry { means, vars, count: n }
}

/// Greedily merge the closest pair of states (across and within cluster heads) while
/// their [`state_distance`] is below `merge_tol`; then order the library by emission
/// mean and relabel every sequence. Transitions are re-estimated from the relabelled
/// sequences, so fusing a fused library again changes nothing.
pub fn fuse_cluster_heads(fits: &[StickyHmmFit], merge_tol: f64) -> Result<StickyHmmFit> {
    ensure!(!fits.is_empty(), InsufficientData, "no cluster-head fits to fuse");
    ensure!(merge_tol >= 0.0 && merge_tol.is_finite(), InvalidArgument, "merge_tol must be finite and nonnegative");
    let n_ch = fits[0].n_channels();
    ensure!(fits.iter().all(|f| f.n_channels() == n_ch), InvalidArgument, "cluster heads disagree on channel count");

    let mut entries: Vec<Entry> = Vec::new();
    // members[g] = (fit, local state) pairs folded into global entry g.
    let mut owner: Vec<Vec<usize>> = Vec::new();
    for (f, fit) in fits.iter().enumerate() {
        let counts = fit.state_counts();
        owner.push(Vec::with_capacity(fit.k_active));
        for s in 0..fit.k_active {
            owner[f].push(entries.len());
            entries.push(Entry {
                means: fit.means[s].clone(),
                vars: fit.variances[s].clone(),
                count: counts[s].max(1) as f64,
            });
        }
    }
    // alive[g] = Some(index into `entries`) for surviving groups; group_of maps entries to groups.
    let mut group_of: Vec<usize> = (0..entries.len()).collect();
    let mut alive: Vec<bool> = vec![true; entries.len()];
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..entries.len() {
            if !alive[a] {
                continue;
            }
            for b in a + 1..entries.len() {
                if !alive[b] {
                    continue;
                }
                let d = state_distance(&entries[a].means, &entries[a].vars, &entries[b].means, &entries[b].vars);
                if d < merge_tol && best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        entries[a] = merge(&entries[a], &entries[b]);
        alive[b] = false;
        for g in group_of.iter_mut() {
            if *g == b {
                *g = a;
            }
        }
    }

    let mut survivors: Vec<usize> = (0..entries.len()).filter(|&g| alive[g]).collect();
    survivors.sort_by(|&a, &b| {
        entries[a]
            .means
            .iter()
            .zip(&entries[b].means)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut global = vec![usize::MAX; entries.len()];
    for (new, &g) in survivors.iter().enumerate() {
        global[g] = new;
    }
    let k = survivors.len();
    let mut labels = Vec::new();
    let mut sequence_ids = Vec::new();
    for (f, fit) in fits.iter().enumerate() {
        for (z, &id) in fit.labels.iter().zip(&fit.sequence_ids) {
            labels.push(z.iter().map(|&s| global[group_of[owner[f][s]]]).collect::<Vec<_>>());
            sequence_ids.push(id);
        }
    }
    let mut counts = vec![vec![0usize; k]; k];
    for z in &labels {
        for w in z.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
    }
    let transition = counts
        .iter()
        .enumerate()
        .map(|(j, row)| {
            let s: usize = row.iter().sum();
            if s == 0 {
                (0..k).map(|i| if i == j { 1.0 } else { 0.0 }).collect()
            } else {
                row.iter().map(|&c| c as f64 / s as f64).collect()
            }
        })
        .collect();
    let k_max = fits.iter().map(|f| f.diagnostics.k_max).sum();
    Ok(StickyHmmFit {
        k_active: k,
        transition,
        means: survivors.iter().map(|&g| entries[g].means.clone()).collect(),
        variances: survivors.iter().map(|&g| entries[g].vars.clone()).collect(),
        labels,
        sequence_ids,
        diagnostics: HmmDiagnostics {
            k_max,
            saturated: fits.iter().any(|f| f.diagnostics.saturated),
            active_trace: Vec::new(),
        },
    })
}

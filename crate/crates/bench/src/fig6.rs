//! Channel-selection accuracy of the access policies versus the number of correlated
//! channel subsets.

use std::time::Instant;

use sir_core::access::{run_access, AccessConfig, AccessMethod, EpisodeTrace};

use crate::config::Fig6Params;
use crate::error::{BenchError, Result};
use crate::result::{fmt_sweep, BenchResult, ResultRow};

pub const FIG6_MIN_SEEDS: usize = 20;

/// Testing-phase outcome of one method in one (U, seed) run.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: AccessMethod,
    pub accuracy: f64,
    pub optimal_agreement: f64,
    pub learning_curve: Vec<f64>,
    pub trace: EpisodeTrace,
}

#[derive(Debug, Clone)]
pub struct Fig6Outcome {
    /// Accuracy rows, `u,method,accuracy,ci95`.
    pub result: BenchResult,
    /// Agreement-with-optimal rows, `u,method,agreement,ci95`.
    pub agreement: BenchResult,
    /// Full runs of the first seed at every U, in sweep order.
    pub first_seed: Vec<(usize, Vec<MethodOutcome>)>,
}

/// Every method on one shared channel realization.
pub fn fig6_unit(cfg: &AccessConfig, seed: u64) -> Result<Vec<MethodOutcome>> {
    AccessMethod::ALL
        .iter()
        .map(|&method| {
            let run = run_access(method, cfg, seed)?;
            Ok(MethodOutcome {
                method,
                accuracy: run.accuracy,
                optimal_agreement: run.optimal_agreement,
                learning_curve: run.learning_curve,
                trace: run.trace,
            })
        })
        .collect()
}

/// Per-seed outcomes `[u index][seed]` without the precondition on the seed count.
pub fn run_fig6_samples(p: &Fig6Params, seeds: &[u64], jobs: usize) -> Result<Vec<Vec<Option<Vec<MethodOutcome>>>>> {
    let units: Vec<(usize, u64)> = (0..p.u_values.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    let outcomes = crate::par_map(&units, jobs, |&(i, seed)| {
        let u = p.u_values[i];
        let t0 = Instant::now();
        match fig6_unit(&p.at(u), seed) {
            Ok(r) => {
                log::info!(
                    "fig6 seed {seed} U={u}: {} in {:.1}s",
                    r.iter().map(|m| format!("{} {:.3}", m.method.as_str(), m.accuracy)).collect::<Vec<_>>().join(", "),
                    t0.elapsed().as_secs_f64()
                );
                Some(r)
            }
            Err(e) => {
                log::error!("fig6 seed {seed} U={u} aborted: {e}");
                None
            }
        }
    })?;
    let mut samples = vec![Vec::with_capacity(seeds.len()); p.u_values.len()];
    for ((i, _), o) in units.iter().zip(outcomes) {
        samples[*i].push(o);
    }
    Ok(samples)
}

/// Access benchmark; needs at least twenty seeds for the ordering intervals.
pub fn run_fig6(p: &Fig6Params, seeds: &[u64], jobs: usize) -> Result<Fig6Outcome> {
    if seeds.len() < FIG6_MIN_SEEDS {
        return Err(BenchError::Validation(format!("fig6 needs at least {FIG6_MIN_SEEDS} seeds, got {}", seeds.len())));
    }
    let t0 = Instant::now();
    let samples = run_fig6_samples(p, seeds, jobs)?;
    let wall = t0.elapsed().as_secs_f64();
    let table = |metric: &str, pick: fn(&MethodOutcome) -> f64| {
        let mut rows = Vec::new();
        for (i, &u) in p.u_values.iter().enumerate() {
            for (m, method) in AccessMethod::ALL.iter().enumerate() {
                let per_seed: Vec<Option<f64>> =
                    samples[i].iter().map(|o| o.as_ref().map(|runs| pick(&runs[m]))).collect();
                rows.push(ResultRow::aggregate(fmt_sweep(u as f64), method.as_str(), &per_seed));
            }
        }
        BenchResult {
            experiment: "fig6".into(),
            sweep_name: "u".into(),
            metric_name: metric.into(),
            rows,
            seeds: seeds.to_vec(),
            wall_clock_s: wall,
        }
    };
    let result = table("accuracy", |o| o.accuracy);
    let agreement = table("agreement", |o| o.optimal_agreement);
    let first_seed = p
        .u_values
        .iter()
        .zip(&samples)
        .filter_map(|(&u, s)| s.first().cloned().flatten().map(|runs| (u, runs)))
        .collect();
    Ok(Fig6Outcome { result, agreement, first_seed })
}

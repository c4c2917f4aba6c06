//! Level-prediction accuracy versus mean active SNR for the blind Stage-I fitters and the
//! known-model threshold bound.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sir_core::perception::{
    classify_by_thresholds, eval_pc, fit_ccdpgmm, fit_emgmm, fit_meanshift, infer_dwell, map_thresholds,
    predict_sequence, silverman_bandwidth, DpHyper, DwellModel, GmmFit,
};
use sir_core::rf_env::{sample_power_process, sense_window_exact, PuNode};

use crate::config::Fig3Params;
use crate::error::{BenchError, Result};
use crate::result::{fmt_sweep, BenchResult, ResultRow};

/// Reported methods. The plain names chain the learned dwell model through Stage II; the
/// `_window` variants classify each window on its own; `known` uses the true model.
pub const FIG3_METHODS: [&str; 7] =
    ["ccdpgmm", "emgmm", "meanshift", "known", "ccdpgmm_window", "emgmm_window", "meanshift_window"];

pub const FIG3_MIN_SEEDS: usize = 5;

/// Ascending `(powers, priors)` of the PU at a mean active SNR of `gamma_db`.
pub fn level_model(p: &Fig3Params, gamma_db: f64) -> (Vec<f64>, Vec<f64>) {
    let gamma = 10f64.powf(gamma_db / 10.0);
    let mean_ratio = p.level_ratios.iter().sum::<f64>() / p.level_ratios.len() as f64;
    let unit = gamma * p.noise_var / mean_ratio;
    let mut levels: Vec<(f64, f64)> =
        p.level_ratios.iter().zip(&p.level_priors[1..]).map(|(r, &pr)| (r * unit, pr)).collect();
    levels.push((0.0, p.level_priors[0]));
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    levels.into_iter().unzip()
}

/// One (seed, SNR) run: P_c of every method in [`FIG3_METHODS`] order.
pub fn fig3_point(p: &Fig3Params, gamma_db: f64, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(gamma_db.to_bits());
    let (powers, priors) = level_model(p, gamma_db);
    let pu = PuNode {
        position: (0.0, 0.0),
        coverage_radius: 1.0,
        channel: 0,
        power_levels: powers.clone(),
        level_priors: priors.clone(),
        mean_dwell: p.mean_dwell,
    };
    pu.validate().map_err(|(f, m)| BenchError::Validation(format!("fig3 level model {f}: {m}")))?;
    let windows = |len: usize, rng: &mut ChaCha8Rng| -> Result<(Vec<usize>, Vec<f64>)> {
        let levels = sample_power_process(&pu, len, rng)?;
        let energies = levels
            .iter()
            .map(|&l| sense_window_exact(powers[l], p.noise_var, p.window_samples, rng))
            .collect::<sir_core::Result<Vec<_>>>()?;
        Ok((levels, energies))
    };
    let (_, train) = windows(p.train_windows, &mut rng)?;
    let (truth, eval) = windows(p.eval_windows, &mut rng)?;
    let l = powers.len();

    let hyper = DpHyper { burn_in: p.burn_in, prune_weight: p.prune_weight, ..DpHyper::default() };
    let dp = fit_ccdpgmm(&train, &hyper, p.gibbs_sweeps, &mut rng)?;
    let em = fit_emgmm(&train, l, p.em_restarts, p.em_iters)?;
    let em_labels: Vec<usize> = train.iter().map(|&x| em.assign(x)).collect();
    let em_dwell = infer_dwell(&em_labels, em.k)?;
    let ms = fit_meanshift(&train, silverman_bandwidth(&train))?;
    let ms_dwell = infer_dwell(&ms.assignments, ms.gmm.k)?;
    let thresholds = map_thresholds(&powers, &priors, p.noise_var, p.window_samples, None)?;

    let pc = |fit: &GmmFit<f64>, dwell: Option<&DwellModel<f64>>| -> Result<f64> {
        let pred: Vec<usize> = predict_sequence(fit, dwell, &eval)?.iter().map(|q| q.level).collect();
        Ok(eval_pc(&pred, &truth)?)
    };
    let known: Vec<usize> = eval.iter().map(|&x| classify_by_thresholds(&thresholds, x)).collect();
    Ok(vec![
        pc(&dp.gmm, Some(&dp.dwell))?,
        pc(&em, Some(&em_dwell))?,
        pc(&ms.gmm, Some(&ms_dwell))?,
        eval_pc(&known, &truth)?,
        pc(&dp.gmm, None)?,
        pc(&em, None)?,
        pc(&ms.gmm, None)?,
    ])
}

/// Per-seed outcomes of the sweep, `[grid point][seed]`.
pub type Fig3Samples = Vec<Vec<Option<Vec<f64>>>>;

/// Sweeps the SNR grid over `seeds`, running (seed, point) units on `jobs` threads.
pub fn run_fig3_samples(p: &Fig3Params, seeds: &[u64], jobs: usize) -> Result<Fig3Samples> {
    let units: Vec<(usize, u64)> =
        (0..p.grid_db.len()).flat_map(|g| seeds.iter().map(move |&s| (g, s))).collect();
    let outcomes = crate::par_map(&units, jobs, |&(g, seed)| {
        let db = p.grid_db[g];
        let t0 = Instant::now();
        let out = fig3_point(p, db, seed);
        match &out {
            Ok(pc) => log::info!("fig3 seed {seed} at {db} dB: {pc:.3?} in {:.1}s", t0.elapsed().as_secs_f64()),
            Err(e) => log::error!("fig3 seed {seed} at {db} dB aborted: {e}"),
        }
        out.ok()
    })?;
    let mut samples: Fig3Samples = vec![Vec::with_capacity(seeds.len()); p.grid_db.len()];
    for ((g, _), o) in units.iter().zip(outcomes) {
        samples[*g].push(o);
    }
    Ok(samples)
}

/// Aggregates per-seed outcomes into CSV rows.
pub fn aggregate_fig3(p: &Fig3Params, seeds: &[u64], samples: &Fig3Samples, wall_clock_s: f64) -> BenchResult {
    let mut rows = Vec::new();
    for (g, &db) in p.grid_db.iter().enumerate() {
        for (m, method) in FIG3_METHODS.iter().enumerate() {
            let per_seed: Vec<Option<f64>> = samples[g].iter().map(|o| o.as_ref().map(|v| v[m])).collect();
            rows.push(ResultRow::aggregate(fmt_sweep(db), method, &per_seed));
        }
    }
    BenchResult {
        experiment: "fig3".into(),
        sweep_name: "gamma_st_db".into(),
        metric_name: "pc".into(),
        rows,
        seeds: seeds.to_vec(),
        wall_clock_s,
    }
}

/// Full sweep; needs at least five seeds for meaningful intervals.
pub fn run_fig3(p: &Fig3Params, seeds: &[u64], jobs: usize) -> Result<BenchResult> {
    if seeds.len() < FIG3_MIN_SEEDS {
        return Err(BenchError::Validation(format!(
            "fig3 needs at least {FIG3_MIN_SEEDS} seeds, got {}",
            seeds.len()
        )));
    }
    let t0 = Instant::now();
    let samples = run_fig3_samples(p, seeds, jobs)?;
    Ok(aggregate_fig3(p, seeds, &samples, t0.elapsed().as_secs_f64()))
}

/// SNR at which a curve first reaches `level`, by linear interpolation between grid points.
pub fn crossing_db(grid: &[f64], values: &[f64], level: f64) -> Option<f64> {
    if values.first().is_some_and(|&v| v >= level) {
        return grid.first().copied();
    }
    for i in 1..values.len().min(grid.len()) {
        let (a, b) = (values[i - 1], values[i]);
        if a < level && b >= level {
            return Some(grid[i - 1] + (level - a) / (b - a) * (grid[i] - grid[i - 1]));
        }
    }
    None
}

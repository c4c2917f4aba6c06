//! Collaborative mapping benchmark: discovered state count, coverage-radius error and
//! idle-channel query accuracy over seeds.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sir_core::mapping::{coverage_error, query_spectrum, run_mapping, SpectrumMap};
use sir_core::rf_env::{generate_mapping_dataset, occupancy_at, MappingDataset, ScenarioConfig};
use sir_core::Point;

use crate::config::Fig5Params;
use crate::error::{BenchError, Result};
use crate::result::{BenchResult, ResultRow};

pub const FIG5_MIN_SEEDS: usize = 3;
pub const FIG5_METRICS: [&str; 4] = ["state_count", "circle_count", "radius_error_pct", "query_accuracy"];
const METHOD: &str = "sticky_hmm";

/// Outcome of one seeded mapping run.
#[derive(Debug, Clone)]
pub struct Fig5SeedOutcome {
    pub seed: u64,
    pub state_count: usize,
    /// Mean relative radius error of matched circles in percent; 100 when PUs exist but
    /// nothing was matched; `None` when there is nothing to match on either side.
    pub radius_error_pct: Option<f64>,
    pub query_accuracy: f64,
    pub map: SpectrumMap,
    pub dataset: MappingDataset,
}

impl Fig5SeedOutcome {
    fn metric(&self, i: usize) -> Option<f64> {
        match i {
            0 => Some(self.state_count as f64),
            1 => Some(self.map.circles.len() as f64),
            2 => self.radius_error_pct,
            _ => Some(self.query_accuracy),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fig5Outcome {
    pub result: BenchResult,
    pub scenario: ScenarioConfig,
    /// Per-seed runs in seed order; `None` where the run aborted.
    pub runs: Vec<Option<Fig5SeedOutcome>>,
}

impl Fig5Outcome {
    /// Median discovered state count over completed seeds (upper median for even counts).
    pub fn median_state_count(&self) -> Option<usize> {
        let mut k: Vec<usize> = self.runs.iter().flatten().map(|r| r.state_count).collect();
        k.sort_unstable();
        (!k.is_empty()).then(|| k[k.len() / 2])
    }

    /// CSV `seed,state_count,circle_count,radius_error_pct,query_accuracy`.
    pub fn write_seed_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["seed", "state_count", "circle_count", "radius_error_pct", "query_accuracy"])?;
        for (seed, run) in self.result.seeds.iter().zip(&self.runs) {
            let cells: Vec<String> = match run {
                Some(r) => (0..4).map(|i| r.metric(i).map_or_else(|| "NA".into(), |v| v.to_string())).collect(),
                None => vec!["NA".into(); 4],
            };
            let mut rec = vec![seed.to_string()];
            rec.extend(cells);
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fraction of `n` uniform points whose queried idle set equals the true one.
pub fn query_accuracy<R: Rng + ?Sized>(map: &SpectrumMap, cfg: &ScenarioConfig, n: usize, rng: &mut R) -> Result<f64> {
    let n_channels = map.n_channels;
    let mut hits = 0usize;
    for _ in 0..n {
        let q = Point::new(rng.random::<f64>() * cfg.area_km.0, rng.random::<f64>() * cfg.area_km.1);
        let idle = query_spectrum(map, q)?;
        let busy = occupancy_at(&cfg.pus, n_channels, q);
        let truth: Vec<usize> = (0..n_channels).filter(|&c| !busy[c]).collect();
        hits += usize::from(idle == truth);
    }
    Ok(hits as f64 / n as f64)
}

/// One seeded run: dataset, per-cluster fits, fusion, map and scoring.
pub fn fig5_seed(cfg: &ScenarioConfig, p: &Fig5Params, seed: u64) -> Result<Fig5SeedOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dataset = generate_mapping_dataset(cfg, &mut rng)?;
    let outcome = run_mapping(cfg, &dataset, &p.mapping, &mut rng)?;
    let radius_error_pct = if outcome.map.circles.is_empty() {
        (!cfg.pus.is_empty()).then_some(100.0)
    } else {
        let report = coverage_error(&outcome.map.circles, &cfg.pus)?;
        Some(report.mean_radius_error_pct().unwrap_or(100.0))
    };
    let mut query_rng = ChaCha8Rng::seed_from_u64(seed);
    query_rng.set_stream(1);
    let query_accuracy = query_accuracy(&outcome.map, cfg, p.query_points, &mut query_rng)?;
    Ok(Fig5SeedOutcome {
        seed,
        state_count: outcome.fused.k_active,
        radius_error_pct,
        query_accuracy,
        map: outcome.map,
        dataset,
    })
}

/// Mapping benchmark over `seeds`; needs at least three seeds.
pub fn run_fig5(cfg: &ScenarioConfig, p: &Fig5Params, seeds: &[u64], jobs: usize) -> Result<Fig5Outcome> {
    if seeds.len() < FIG5_MIN_SEEDS {
        return Err(BenchError::Validation(format!("fig5 needs at least {FIG5_MIN_SEEDS} seeds, got {}", seeds.len())));
    }
    cfg.validate()?;
    let t0 = Instant::now();
    let runs = crate::par_map(seeds, jobs, |&seed| {
        let t = Instant::now();
        match fig5_seed(cfg, p, seed) {
            Ok(r) => {
                log::info!(
                    "fig5 seed {seed}: {} states, {} circles, query accuracy {:.3} in {:.1}s",
                    r.state_count,
                    r.map.circles.len(),
                    r.query_accuracy,
                    t.elapsed().as_secs_f64()
                );
                Some(r)
            }
            Err(e) => {
                log::error!("fig5 seed {seed} aborted: {e}");
                None
            }
        }
    })?;
    let rows = FIG5_METRICS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let per_seed: Vec<Option<f64>> = runs.iter().map(|r| r.as_ref().and_then(|r| r.metric(i))).collect();
            ResultRow::aggregate(name.to_string(), METHOD, &per_seed)
        })
        .collect();
    let result = BenchResult {
        experiment: "fig5".into(),
        sweep_name: "metric".into(),
        metric_name: "value".into(),
        rows,
        seeds: seeds.to_vec(),
        wall_clock_s: t0.elapsed().as_secs_f64(),
    };
    Ok(Fig5Outcome { result, scenario: cfg.clone(), runs })
}

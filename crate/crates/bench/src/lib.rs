//! Experiment harness for the spectrum intelligence toolkit: TOML configuration with
//! line-anchored validation, seeded sweeps for the three benchmark figures, aggregation
//! with normal-approximation confidence intervals, manifests and CSV/SVG emission.

pub mod config;
mod error;
pub mod fig3;
pub mod fig5;
pub mod fig6;
pub mod manifest;
pub mod result;
pub mod svg;

pub use config::{load_config, parse_config, parse_seeds, BenchConfig, Fig3Params, Fig5Params, Fig6Params};
pub use error::{BenchError, Result};
pub use fig3::{run_fig3, FIG3_METHODS};
pub use fig5::{run_fig5, Fig5Outcome, Fig5SeedOutcome};
pub use fig6::{run_fig6, run_fig6_samples, Fig6Outcome};
pub use manifest::{canonical_json, config_hash, RunManifest};
pub use result::{mean_ci95, BenchResult, ResultRow};
pub use svg::{render_line_plot, render_map};

/// Runs `f` over `items` on a pool of `jobs` threads, preserving input order.
pub(crate) fn par_map<T, U, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

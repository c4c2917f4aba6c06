//! Benchmark configuration: one TOML file holding an optional `[scenario]` plus the
//! `[fig3]`, `[fig5]` and `[fig6]` experiment tables. Unknown keys are rejected and every
//! error is reported as `origin:line: message`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sir_core::access::AccessConfig;
use sir_core::mapping::MappingParams;
use sir_core::perception::MIN_DP_SAMPLES;
use sir_core::rf_env::{PuNode, ScenarioConfig, SuTrack};

use crate::error::{BenchError, Result};

/// Energy-detection sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig3Params {
    /// Mean active SNR grid in dB.
    pub grid_db: Vec<f64>,
    /// Samples per sensing window.
    pub window_samples: usize,
    pub train_windows: usize,
    pub eval_windows: usize,
    /// Mean level dwell of the PU power process, in windows.
    pub mean_dwell: f64,
    pub noise_var: f64,
    /// Active power levels relative to each other; the idle level 0 is implicit.
    pub level_ratios: Vec<f64>,
    /// Priors of `[idle, active levels...]`.
    pub level_priors: Vec<f64>,
    pub gibbs_sweeps: usize,
    pub burn_in: usize,
    pub prune_weight: f64,
    pub em_restarts: usize,
    pub em_iters: usize,
}

impl Default for Fig3Params {
    fn default() -> Self {
        Self {
            grid_db: (0..=8).map(|i| -16.0 + 2.0 * i as f64).collect(),
            window_samples: 20_000,
            train_windows: 4000,
            eval_windows: 2000,
            mean_dwell: 20.0,
            noise_var: 1.0,
            level_ratios: vec![1.0, 2.0, 3.0],
            level_priors: vec![0.25; 4],
            gibbs_sweeps: 300,
            burn_in: 150,
            prune_weight: 0.01,
            em_restarts: 3,
            em_iters: 300,
        }
    }
}

impl Fig3Params {
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.grid_db.is_empty() || self.grid_db.iter().any(|g| !g.is_finite()) {
            return Err(("grid_db", "must be a nonempty list of finite dB values".into()));
        }
        if self.window_samples == 0 {
            return Err(("window_samples", "must be >= 1".into()));
        }
        if self.train_windows < MIN_DP_SAMPLES {
            return Err(("train_windows", format!("must be >= {MIN_DP_SAMPLES}")));
        }
        if self.eval_windows == 0 {
            return Err(("eval_windows", "must be >= 1".into()));
        }
        if !(self.mean_dwell >= 1.0) {
            return Err(("mean_dwell", "must be >= 1".into()));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(("noise_var", "must be > 0".into()));
        }
        if self.level_ratios.is_empty() || self.level_ratios.iter().any(|r| !(*r > 0.0)) {
            return Err(("level_ratios", "must be a nonempty list of positive ratios".into()));
        }
        let mut sorted = self.level_ratios.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(("level_ratios", "ratios must be distinct".into()));
        }
        if self.level_priors.len() != self.level_ratios.len() + 1 {
            return Err((
                "level_priors",
                format!("need {} priors (idle first), got {}", self.level_ratios.len() + 1, self.level_priors.len()),
            ));
        }
        let sum: f64 = self.level_priors.iter().sum();
        if self.level_priors.iter().any(|p| !(*p > 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(("level_priors", format!("must be positive and sum to 1, got sum {sum}")));
        }
        if self.gibbs_sweeps <= self.burn_in {
            return Err(("gibbs_sweeps", "must exceed burn_in".into()));
        }
        if !(0.0..1.0).contains(&self.prune_weight) {
            return Err(("prune_weight", "must lie in [0, 1)".into()));
        }
        if self.em_restarts == 0 || self.em_iters == 0 {
            return Err(("em_restarts", "EM needs at least one restart and one iteration".into()));
        }
        Ok(())
    }
}

/// Mapping experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig5Params {
    /// Uniform points used to score idle-channel queries.
    pub query_points: usize,
    pub mapping: MappingParams,
}

impl Default for Fig5Params {
    fn default() -> Self {
        Self { query_points: 1000, mapping: MappingParams::default() }
    }
}

impl Fig5Params {
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.query_points == 0 {
            return Err(("query_points", "must be >= 1".into()));
        }
        let m = &self.mapping;
        if m.sweeps <= m.hyper.burn_in {
            return Err(("sweeps", "must exceed hyper.burn_in".into()));
        }
        if m.hyper.k_max < 2 {
            return Err(("k_max", "must be >= 2".into()));
        }
        if !(m.merge_tol > 0.0) {
            return Err(("merge_tol", "must be > 0".into()));
        }
        if !(m.margin >= 0.0) {
            return Err(("margin", "must be >= 0".into()));
        }
        Ok(())
    }
}

/// Access experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig6Params {
    /// Numbers of correlated channel subsets swept on the x axis.
    pub u_values: Vec<usize>,
    /// Base access settings; `n_subsets` is overridden by each sweep value.
    pub access: AccessConfig,
}

impl Default for Fig6Params {
    fn default() -> Self {
        Self { u_values: vec![1, 2, 4, 8, 16], access: AccessConfig::default() }
    }
}

impl Fig6Params {
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.u_values.is_empty() {
            return Err(("u_values", "must not be empty".into()));
        }
        for &u in &self.u_values {
            let cfg = AccessConfig { n_subsets: u, ..self.access.clone() };
            if let Err(e) = cfg.validate() {
                return Err(("u_values", format!("U = {u}: {e}")));
            }
        }
        Ok(())
    }

    /// Access settings for one sweep value.
    pub fn at(&self, u: usize) -> AccessConfig {
        AccessConfig { n_subsets: u, ..self.access.clone() }
    }
}

/// Everything one configuration file can hold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    /// Geometric scenario for mapping and `simulate`; the mapping benchmark falls back to
    /// [`fig5_scenario`] when absent.
    pub scenario: Option<ScenarioConfig>,
    pub fig3: Fig3Params,
    pub fig5: Fig5Params,
    pub fig6: Fig6Params,
}

impl BenchConfig {
    /// Scenario used by the mapping benchmark.
    pub fn mapping_scenario(&self) -> ScenarioConfig {
        self.scenario.clone().unwrap_or_else(fig5_scenario)
    }
}

/// Reference mapping scenario: 12×12 km, three single-level PUs of radius 2.2 km on
/// distinct channels and nine straight SU tracks reporting to three cluster heads.
pub fn fig5_scenario() -> ScenarioConfig {
    let pu = |x, y, channel| PuNode {
        position: (x, y),
        coverage_radius: 2.2,
        channel,
        power_levels: vec![4.0],
        level_priors: vec![1.0],
        mean_dwell: 1.0,
    };
    let track = |start, end, cluster_head| SuTrack { start, end, n_samples: 300, cluster_head };
    ScenarioConfig {
        area_km: (12.0, 12.0),
        pus: vec![pu(3.0, 7.0, 0), pu(6.0, 5.0, 1), pu(9.0, 7.0, 2)],
        sus: vec![
            track((0.0, 7.0), (12.0, 7.0), 0),
            track((0.0, 5.0), (12.0, 5.0), 0),
            track((0.0, 9.0), (12.0, 1.0), 0),
            track((0.0, 1.0), (12.0, 9.0), 1),
            track((3.0, 0.0), (3.0, 12.0), 1),
            track((6.0, 0.0), (6.0, 12.0), 1),
            track((9.0, 0.0), (9.0, 12.0), 2),
            track((4.5, 0.0), (4.5, 12.0), 2),
            track((7.5, 0.0), (7.5, 12.0), 2),
        ],
        noise_var: 1.0,
        samples_per_window: 100,
        slot_duration: 1.0,
        seed: 0,
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<BenchConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::Validation(format!("{}: cannot read configuration: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

/// Parses and validates configuration text; `origin` prefixes every message.
pub fn parse_config(text: &str, origin: &str) -> Result<BenchConfig> {
    let cfg: BenchConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        BenchError::Validation(anchored(origin, line, e.message()))
    })?;
    if let Some(sc) = &cfg.scenario {
        if let Err(issue) = sc.check() {
            let line = match issue.table {
                Some((table, i)) => field_line(text, &format!("scenario.{table}"), i, issue.field),
                None => field_line(text, "scenario", 0, issue.field),
            };
            return Err(BenchError::Validation(anchored(origin, line, &format!("scenario.{issue}"))));
        }
    }
    let checks = [
        ("fig3", cfg.fig3.check()),
        ("fig5", cfg.fig5.check()),
        ("fig6", cfg.fig6.check()),
    ];
    for (table, check) in checks {
        if let Err((field, message)) = check {
            let line = find_field_anywhere(text, table, field);
            return Err(BenchError::Validation(anchored(origin, line, &format!("{table}.{field}: {message}"))));
        }
    }
    Ok(cfg)
}

/// `--seeds` argument: a count `n` (seeds `0..n`) or a comma-separated list.
pub fn parse_seeds(arg: &str) -> Result<Vec<u64>> {
    let bad = || BenchError::Validation(format!("--seeds: expected a count or a comma-separated list, got {arg:?}"));
    let arg = arg.trim();
    let seeds: Vec<u64> = if arg.contains(',') {
        arg.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    } else {
        let n: u64 = arg.parse().map_err(|_| bad())?;
        (0..n).collect()
    };
    if seeds.is_empty() {
        return Err(BenchError::Validation("--seeds: at least one seed required".into()));
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(BenchError::Validation(format!("--seeds: duplicate seed in {arg:?}")));
    }
    Ok(seeds)
}

fn anchored(origin: &str, line: Option<usize>, message: &str) -> String {
    let message = message.trim_end();
    match line {
        Some(l) => format!("{origin}:{l}: {message}"),
        None => format!("{origin}: {message}"),
    }
}

fn line_of(text: &str, byte: usize) -> usize {
    text[..byte.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Header name of a `[table]` / `[[array]]` line.
fn header_name(line: &str) -> Option<&str> {
    let t = line.split('#').next()?.trim();
    let inner = t.strip_prefix("[[").and_then(|s| s.strip_suffix("]]")).or_else(|| t.strip_prefix('[')?.strip_suffix(']'))?;
    Some(inner.trim())
}

fn is_key_line(line: &str, key: &str) -> bool {
    line.trim_start().strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
}

/// Line of `key` inside the `nth` occurrence of the table `header`; falls back to the header
/// line, then to none.
fn field_line(text: &str, header: &str, nth: usize, key: &str) -> Option<usize> {
    let mut seen = 0usize;
    let mut inside = false;
    let mut header_at = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(name) = header_name(line) {
            if inside {
                break;
            }
            if name == header {
                if seen == nth {
                    inside = true;
                    header_at = Some(i + 1);
                }
                seen += 1;
            }
            continue;
        }
        if inside && is_key_line(line, key) {
            return Some(i + 1);
        }
    }
    header_at
}

/// Line of `key` in `table` or any of its sub-tables, else the table header.
fn find_field_anywhere(text: &str, table: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header_at = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(name) = header_name(line) {
            current = name.to_string();
            if current == table && header_at.is_none() {
                header_at = Some(i + 1);
            }
            continue;
        }
        let in_table = current == table || current.starts_with(&format!("{table}."));
        if in_table && is_key_line(line, key) {
            return Some(i + 1);
        }
    }
    header_at
}

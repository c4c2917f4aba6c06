use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// A primary user: a fixed transmitter on one channel with a disk-shaped footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PuNode {
    pub position: (f64, f64),
    pub coverage_radius: f64,
    pub channel: usize,
    /// Linear transmit powers, one per level. At most one may be zero (the OFF level).
    pub power_levels: Vec<f64>,
    pub level_priors: Vec<f64>,
    /// Mean holding time of a level, in slots.
    pub mean_dwell: f64,
}

impl PuNode {
    pub fn position(&self) -> Point<f64> {
        Point::new(self.position.0, self.position.1)
    }

    /// Index of the strongest level, used when the PU is treated as statically active.
    pub fn active_level(&self) -> usize {
        self.power_levels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if !(self.coverage_radius > 0.0) {
            return Err(("coverage_radius", format!("must be > 0, got {}", self.coverage_radius)));
        }
        if self.power_levels.is_empty() {
            return Err(("power_levels", "at least one level required".into()));
        }
        if self.power_levels.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(("power_levels", "powers must be finite and >= 0".into()));
        }
        if self.power_levels.iter().filter(|p| **p == 0.0).count() > 1 {
            return Err(("power_levels", "at most one zero (OFF) level permitted".into()));
        }
        if self.level_priors.len() != self.power_levels.len() {
            return Err((
                "level_priors",
                format!(
                    "{} priors for {} power levels",
                    self.level_priors.len(),
                    self.power_levels.len()
                ),
            ));
        }
        if self.level_priors.iter().any(|p| !(*p >= 0.0)) {
            return Err(("level_priors", "probabilities must be >= 0".into()));
        }
        let total: f64 = self.level_priors.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(("level_priors", format!("must sum to 1 (±1e-9), got {total}")));
        }
        if !(self.mean_dwell >= 1.0) {
            return Err(("mean_dwell", format!("must be >= 1 slot, got {}", self.mean_dwell)));
        }
        Ok(())
    }
}

/// A mobile secondary user sampling along a straight track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuTrack {
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub n_samples: usize,
    #[serde(default)]
    pub cluster_head: usize,
}

impl SuTrack {
    pub fn start(&self) -> Point<f64> {
        Point::new(self.start.0, self.start.1)
    }

    pub fn end(&self) -> Point<f64> {
        Point::new(self.end.0, self.end.1)
    }
}

fn default_samples_per_window() -> usize {
    100
}

fn default_slot_duration() -> f64 {
    1.0
}

/// Declarative description of an RF scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area_km: (f64, f64),
    #[serde(default)]
    pub pus: Vec<PuNode>,
    #[serde(default)]
    pub sus: Vec<SuTrack>,
    pub noise_var: f64,
    #[serde(default = "default_samples_per_window")]
    pub samples_per_window: usize,
    #[serde(default = "default_slot_duration")]
    pub slot_duration: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Location of a configuration problem, e.g. `pus[1].level_priors`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub table: Option<(&'static str, usize)>,
    pub field: &'static str,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.table {
            Some((t, i)) => write!(f, "{t}[{i}].{}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

impl ScenarioConfig {
    /// Number of sensed channels: one past the highest PU channel, at least one.
    pub fn n_channels(&self) -> usize {
        self.pus.iter().map(|p| p.channel + 1).max().unwrap_or(1)
    }

    pub fn contains(&self, p: Point<f64>) -> bool {
        (0.0..=self.area_km.0).contains(&p.x) && (0.0..=self.area_km.1).contains(&p.y)
    }

    /// Structured check of every scenario invariant; the first violation is returned.
    pub fn check(&self) -> std::result::Result<(), ConfigIssue> {
        let top = |field, message| ConfigIssue { table: None, field, message };
        let (w, h) = self.area_km;
        if !(w > 0.0 && h > 0.0) {
            return Err(top("area_km", format!("width and height must be > 0, got ({w}, {h})")));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(top("noise_var", format!("must be > 0, got {}", self.noise_var)));
        }
        if self.samples_per_window == 0 {
            return Err(top("samples_per_window", "must be >= 1".into()));
        }
        if !(self.slot_duration > 0.0) {
            return Err(top("slot_duration", "must be > 0".into()));
        }
        for (i, pu) in self.pus.iter().enumerate() {
            let at = |field, message| ConfigIssue { table: Some(("pus", i)), field, message };
            pu.validate().map_err(|(field, message)| at(field, message))?;
            if !self.contains(pu.position()) {
                return Err(at("position", format!("{:?} outside the area", pu.position)));
            }
        }
        for (i, su) in self.sus.iter().enumerate() {
            let at = |field, message| ConfigIssue { table: Some(("sus", i)), field, message };
            if !self.contains(su.start()) {
                return Err(at("start", format!("{:?} outside the area", su.start)));
            }
            if !self.contains(su.end()) {
                return Err(at("end", format!("{:?} outside the area", su.end)));
            }
            if su.n_samples == 0 {
                return Err(at("n_samples", "must be >= 1".into()));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|issue| Error::Config(issue.to_string()))
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

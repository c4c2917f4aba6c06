//! Spectrum map: state occupancy, coverage circles and idle-channel queries.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::coverage::{estimate_coverage, CoverageCircle};
use super::fusion::fuse_cluster_heads;
use super::sticky_hmm::{fit_sticky_hmm, StickyHmmFit, StickyHyper};
use crate::error::{ensure, Result};
use crate::geometry::Point;
use crate::rf_env::{MappingDataset, ScenarioConfig};

/// Channel `c` is occupied in a state when its emission mean exceeds `noise_var + margin`.
pub fn state_occupancy(fit: &StickyHmmFit, noise_var: f64, margin: f64) -> Result<Vec<Vec<bool>>> {
    ensure!(margin > 0.0, InvalidArgument, "occupancy margin must be > 0, got {margin}");
    Ok(fit
        .means
        .iter()
        .map(|m| m.iter().map(|&e| e > noise_var + margin).collect())
        .collect())
}

/// Learned spectrum map over a rectangular area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumMap {
    pub area_km: (f64, f64),
    pub n_channels: usize,
    /// State labels, parallel to `occupancy`.
    pub states: Vec<usize>,
    /// Per-state channel occupancy (1 = occupied).
    pub occupancy: Vec<Vec<u8>>,
    pub circles: Vec<CoverageCircle>,
}

impl SpectrumMap {
    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.area_km;
        ensure!(w > 0.0 && h > 0.0, Config, "area must be positive, got {w} x {h}");
        ensure!(self.states.len() == self.occupancy.len(), Config, "states and occupancy differ in length");
        ensure!(
            self.occupancy.iter().all(|o| o.len() == self.n_channels && o.iter().all(|&b| b <= 1)),
            Config,
            "occupancy rows must be {} bits",
            self.n_channels
        );
        for (i, c) in self.circles.iter().enumerate() {
            ensure!(c.radius > 0.0, Config, "circles[{i}].radius must be > 0");
            ensure!(c.channel < self.n_channels, Config, "circles[{i}].channel out of range");
            ensure!(
                (0.0..=w).contains(&c.center[0]) && (0.0..=h).contains(&c.center[1]),
                Config,
                "circles[{i}].center outside the area"
            );
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let m: Self = toml::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    fn contains(&self, p: Point<f64>) -> bool {
        (0.0..=self.area_km.0).contains(&p.x) && (0.0..=self.area_km.1).contains(&p.y)
    }
}

/// Channels free at a location: a channel is busy iff the point lies in any of its circles.
pub fn query_spectrum(map: &SpectrumMap, location: Point<f64>) -> Result<Vec<usize>> {
    ensure!(
        location.x.is_finite() && location.y.is_finite() && map.contains(location),
        InvalidArgument,
        "location ({}, {}) outside the {} x {} km area",
        location.x,
        location.y,
        map.area_km.0,
        map.area_km.1
    );
    Ok((0..map.n_channels)
        .filter(|&c| !map.circles.iter().any(|k| k.channel == c && k.contains(location)))
        .collect())
}

/// Build the map from a global state library: one enclosing circle per channel over
/// the locations of every sample whose state occupies that channel.
pub fn build_spectrum_map(
    dataset: &MappingDataset,
    fused: &StickyHmmFit,
    occupancy: &[Vec<bool>],
    area_km: (f64, f64),
) -> Result<SpectrumMap> {
    let mut by_channel: Vec<Vec<Point<f64>>> = vec![Vec::new(); dataset.n_channels];
    for (z, id) in fused.labels.iter().zip(&fused.sequence_ids) {
        let seq = dataset
            .sequences
            .iter()
            .find(|s| s.first().is_some_and(|x| x.su_id == *id))
            .ok_or_else(|| crate::Error::InvalidArgument(format!("unknown sequence id {id}")))?;
        for (sample, &label) in seq.iter().zip(z) {
            for (c, pts) in by_channel.iter_mut().enumerate() {
                if occupancy[label][c] {
                    pts.push(sample.location);
                }
            }
        }
    }
    let mut circles = Vec::new();
    for (c, pts) in by_channel.iter().enumerate() {
        if pts.len() < 2 {
            if !pts.is_empty() {
                log::warn!("channel {c}: a single occupied location, no circle estimated");
            }
            continue;
        }
        let circle = estimate_coverage(pts)?;
        let center = [circle.center.x.clamp(0.0, area_km.0), circle.center.y.clamp(0.0, area_km.1)];
        circles.push(CoverageCircle { channel: c, center, radius: circle.radius.max(f64::MIN_POSITIVE) });
    }
    Ok(SpectrumMap {
        area_km,
        n_channels: dataset.n_channels,
        states: (0..fused.k_active).collect(),
        occupancy: occupancy.iter().map(|o| o.iter().map(|&b| u8::from(b)).collect()).collect(),
        circles,
    })
}

/// Settings of the end-to-end mapping pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MappingParams {
    pub hyper: StickyHyper,
    pub sweeps: usize,
    pub merge_tol: f64,
    pub margin: f64,
}

impl Default for MappingParams {
    fn default() -> Self {
        Self { hyper: StickyHyper::default(), sweeps: 500, merge_tol: 1.0, margin: 1.0 }
    }
}

/// Everything produced by one mapping run.
#[derive(Debug, Clone)]
pub struct MappingOutcome {
    pub cluster_heads: Vec<StickyHmmFit>,
    pub fused: StickyHmmFit,
    pub occupancy: Vec<Vec<bool>>,
    pub map: SpectrumMap,
}

/// Fit one sticky HMM per cluster head over its members' sequences, fuse the libraries,
/// derive occupancy and build the map.
pub fn run_mapping<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    dataset: &MappingDataset,
    params: &MappingParams,
    rng: &mut R,
) -> Result<MappingOutcome> {
    ensure!(!dataset.sequences.is_empty(), InsufficientData, "dataset has no sequences");
    ensure!(cfg.sus.len() == dataset.sequences.len(), InvalidArgument, "dataset does not match the scenario tracks");
    let n_ch_heads = cfg.sus.iter().map(|s| s.cluster_head).max().unwrap_or(0) + 1;
    let mut cluster_heads = Vec::new();
    for ch in 0..n_ch_heads {
        let members: Vec<_> = cfg
            .sus
            .iter()
            .zip(&dataset.sequences)
            .filter(|(su, seq)| su.cluster_head == ch && !seq.is_empty())
            .map(|(_, seq)| seq.clone())
            .collect();
        if members.is_empty() {
            continue;
        }
        cluster_heads.push(fit_sticky_hmm(&members, &params.hyper, params.sweeps, rng)?);
    }
    let fused = fuse_cluster_heads(&cluster_heads, params.merge_tol)?;
    let occupancy = state_occupancy(&fused, cfg.noise_var, params.margin)?;
    let map = build_spectrum_map(dataset, &fused, &occupancy, cfg.area_km)?;
    Ok(MappingOutcome { cluster_heads, fused, occupancy, map })
}

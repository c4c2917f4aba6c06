use super::scenario::PuNode;
use crate::error::{ensure, Result};
use crate::geometry::Point;

/// Disk coverage model: the PU's level power inside its (closed) coverage disk, zero outside.
pub fn received_power_at(pu: &PuNode, level: usize, loc: Point<f64>) -> Result<f64> {
    ensure!(
        level < pu.power_levels.len(),
        InvalidArgument,
        "level {level} out of range for {} power levels",
        pu.power_levels.len()
    );
    Ok(if covers(pu, loc) { pu.power_levels[level] } else { 0.0 })
}

pub fn covers(pu: &PuNode, loc: Point<f64>) -> bool {
    loc.dist(pu.position()) <= pu.coverage_radius
}

/// Ground-truth occupancy of every channel at `loc`.
pub fn occupancy_at(pus: &[PuNode], n_channels: usize, loc: Point<f64>) -> Vec<bool> {
    let mut bits = vec![false; n_channels];
    for pu in pus {
        if covers(pu, loc) && pu.power_levels[pu.active_level()] > 0.0 {
            bits[pu.channel] = true;
        }
    }
    bits
}

use rand::Rng;
use rand_distr::{Distribution, Geometric, weighted::WeightedIndex};

use super::scenario::PuNode;
use crate::error::{ensure, Error, Result};

/// One renewal of the power process: a level held for `duration` slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerSegment {
    pub level: usize,
    pub duration: usize,
}

/// Semi-Markov transmit power process, returned as renewal segments covering `horizon` slots.
///
/// At each renewal a level is drawn from the priors and held for a geometric number of
/// slots (support starting at one) with mean `mean_dwell`. The last segment is truncated
/// at the horizon.
pub fn sample_power_segments<R: Rng + ?Sized>(
    pu: &PuNode,
    horizon: usize,
    rng: &mut R,
) -> Result<Vec<PowerSegment>> {
    ensure!(horizon >= 1, InvalidArgument, "power process horizon must be >= 1");
    pu.validate().map_err(|(f, m)| Error::Config(format!("{f}: {m}")))?;
    let levels =
        WeightedIndex::new(&pu.level_priors).map_err(|e| Error::Config(format!("level_priors: {e}")))?;
    let dwell = Geometric::new(1.0 / pu.mean_dwell)
        .map_err(|e| Error::Config(format!("mean_dwell: {e}")))?;
    let single = pu.level_priors.len() == 1;

    let mut out = Vec::new();
    let mut filled = 0;
    while filled < horizon {
        let level = if single { 0 } else { levels.sample(rng) };
        let duration = ((dwell.sample(rng) + 1) as usize).min(horizon - filled);
        out.push(PowerSegment { level, duration });
        filled += duration;
    }
    Ok(out)
}

/// Per-slot level indices of the power process.
pub fn sample_power_process<R: Rng + ?Sized>(
    pu: &PuNode,
    horizon: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let segments = sample_power_segments(pu, horizon, rng)?;
    Ok(segments
        .iter()
        .flat_map(|s| std::iter::repeat_n(s.level, s.duration))
        .collect())
}

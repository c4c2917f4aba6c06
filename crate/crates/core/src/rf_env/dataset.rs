use std::io::Write;

use rand::Rng;

use super::coverage::occupancy_at;
use super::scenario::ScenarioConfig;
use super::sensing::{sense_window, EnergyStatistic};
use crate::error::{ensure, Result};
use crate::geometry::Point;

/// One geo-tagged multi-channel sensing report from a mobile SU.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingSample {
    pub su_id: usize,
    pub seq_index: usize,
    pub location: Point<f64>,
    pub energies: Vec<EnergyStatistic>,
}

/// Per-SU ordered sample sequences with the ground-truth occupancy at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingDataset {
    pub n_channels: usize,
    pub sequences: Vec<Vec<SensingSample>>,
    pub truth: Vec<Vec<Vec<bool>>>,
}

impl MappingDataset {
    pub fn samples(&self) -> impl Iterator<Item = (&SensingSample, &Vec<bool>)> {
        self.sequences.iter().flatten().zip(self.truth.iter().flatten())
    }

    /// CSV with header `su_id,seq,x_km,y_km,ch0_energy,...,label_bits`; bits are written
    /// channel 0 first.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["su_id".to_string(), "seq".into(), "x_km".into(), "y_km".into()];
        header.extend((0..self.n_channels).map(|c| format!("ch{c}_energy")));
        header.push("label_bits".into());
        w.write_record(&header)?;
        for (s, bits) in self.samples() {
            let mut rec = vec![
                s.su_id.to_string(),
                s.seq_index.to_string(),
                s.location.x.to_string(),
                s.location.y.to_string(),
            ];
            rec.extend(s.energies.iter().map(|e| e.to_string()));
            rec.push(bits.iter().map(|&b| if b { '1' } else { '0' }).collect());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples every SU track at uniformly random positions (sorted along the track) and senses
/// every channel with the superposed power of the statically active PUs.
pub fn generate_mapping_dataset<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<MappingDataset> {
    cfg.validate()?;
    ensure!(!cfg.sus.is_empty(), InvalidArgument, "mapping dataset needs at least one SU");
    let n_channels = cfg.n_channels();
    let mut sequences = Vec::with_capacity(cfg.sus.len());
    let mut truth = Vec::with_capacity(cfg.sus.len());
    for (su_id, su) in cfg.sus.iter().enumerate() {
        let mut ts: Vec<f64> = (0..su.n_samples).map(|_| rng.random::<f64>()).collect();
        ts.sort_by(f64::total_cmp);
        let mut seq = Vec::with_capacity(ts.len());
        let mut labels = Vec::with_capacity(ts.len());
        for (seq_index, t) in ts.into_iter().enumerate() {
            let location = su.start().lerp(su.end(), t);
            let mut power = vec![0.0; n_channels];
            for pu in &cfg.pus {
                power[pu.channel] +=
                    super::coverage::received_power_at(pu, pu.active_level(), location)?;
            }
            let energies = power
                .iter()
                .map(|&p| sense_window(p, cfg.noise_var, cfg.samples_per_window, rng))
                .collect::<Result<Vec<_>>>()?;
            labels.push(occupancy_at(&cfg.pus, n_channels, location));
            seq.push(SensingSample { su_id, seq_index, location, energies });
        }
        sequences.push(seq);
        truth.push(labels);
    }
    Ok(MappingDataset { n_channels, sequences, truth })
}

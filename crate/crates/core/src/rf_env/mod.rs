//! Generative RF environment: PU power processes, disk coverage, energy detection,
//! Markov channel occupancy and mobile-SU sampling.

mod channels;
mod coverage;
mod dataset;
mod power;
mod scenario;
mod sensing;

pub use channels::{markov_channel_step, stationary_idle, MarkovChannelSet};
pub use coverage::{covers, occupancy_at, received_power_at};
pub use dataset::{generate_mapping_dataset, MappingDataset, SensingSample};
pub use power::{sample_power_process, sample_power_segments, PowerSegment};
pub use scenario::{ConfigIssue, PuNode, ScenarioConfig, SuTrack};
pub use sensing::{sense_window, sense_window_exact, EnergyStatistic};

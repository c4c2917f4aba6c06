//! Collaborative spectrum mapping: segmentation of geo-tagged energy sequences into
//! shared spectrum states, cross-cluster fusion, coverage circles and map queries.

mod coverage;
mod fusion;
mod map;
mod sticky_hmm;

pub use coverage::{coverage_error, estimate_coverage, CoverageCircle, CoverageMatch, CoverageReport};
pub use fusion::{fuse_cluster_heads, state_distance};
pub use map::{
    build_spectrum_map, query_spectrum, run_mapping, state_occupancy, MappingOutcome, MappingParams, SpectrumMap,
};
pub use sticky_hmm::{fit_sticky_hmm, HmmDiagnostics, StickyHmmFit, StickyHyper};

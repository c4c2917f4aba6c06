//! Blind multi-level spectrum sensing. Stage I learns a mixture over window energies
//! (DP mixture, EM or mean-shift); Stage II predicts the PU power level of each window.
//! The known-model threshold detectors serve as baselines and bounds.

mod dpgmm;
mod dwell;
mod gmm;
mod meanshift;
mod model_file;
mod predict;
mod threshold;

pub use crate::conjugate::NigPrior;
pub use dpgmm::{fit_ccdpgmm, DpFit, DpHyper, MIN_DP_SAMPLES};
pub use dwell::{infer_dwell, DwellModel};
pub use gmm::{fit_emgmm, fit_emgmm_traced, GmmFit};
pub use meanshift::{fit_meanshift, silverman_bandwidth, MeanShiftFit};
pub use model_file::StageOneModel;
pub use predict::{
    canonical_levels, eval_pc, predict_level, predict_sequence, write_prediction_trace, LevelPrediction,
};
pub use threshold::{
    classify_by_thresholds, level_hypotheses, map_thresholds, np_threshold, pairwise_boundary, q_inv,
    Hypothesis,
};

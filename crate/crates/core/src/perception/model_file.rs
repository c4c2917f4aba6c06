use serde::{Deserialize, Serialize};

use super::dwell::DwellModel;
use super::gmm::GmmFit;
use crate::error::{ensure, Result};

/// TOML form of a Stage-I model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageOneModel {
    pub k: usize,
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub dwell_continuation: Vec<f64>,
}

impl StageOneModel {
    pub fn new(gmm: &GmmFit<f64>, dwell: &DwellModel<f64>) -> Self {
        Self {
            k: gmm.k,
            weights: gmm.weights.clone(),
            means: gmm.means.clone(),
            variances: gmm.variances.clone(),
            dwell_continuation: dwell.continuation.clone(),
        }
    }

    pub fn into_parts(self) -> Result<(GmmFit<f64>, DwellModel<f64>)> {
        let k = self.k;
        ensure!(
            self.weights.len() == k && self.means.len() == k && self.variances.len() == k,
            Config,
            "model arrays must all have length k = {k}"
        );
        ensure!(self.dwell_continuation.len() == k, Config, "dwell_continuation must have length k");
        let gmm = GmmFit { k, weights: self.weights, means: self.means, variances: self.variances, log_likelihood: 0.0 };
        Ok((gmm, DwellModel::from_continuation(self.dwell_continuation)))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }
}

//! Run manifests: the effective parameters of a run, hashed over a canonical encoding.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Provenance of one benchmark invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub toolkit_version: String,
    pub seeds: Vec<u64>,
    /// SHA-256 of the canonical JSON of `params`.
    pub config_hash: String,
    /// Effective per-module hyperparameters, defaults filled in.
    pub params: Value,
}

impl RunManifest {
    pub fn new<P: Serialize>(experiment: &str, seeds: &[u64], params: &P) -> Result<Self> {
        let params = canonical_json(&serde_json::to_value(params)?);
        Ok(Self {
            experiment: experiment.to_string(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds: seeds.to_vec(),
            config_hash: hash_value(&params)?,
            params,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Copy of `v` with every object's keys in sorted order.
pub fn canonical_json(v: &Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            let mut out = Map::new();
            for k in keys {
                out.insert(k.clone(), canonical_json(&m[k]));
            }
            Value::Object(out)
        }
        Value::Array(a) => Value::Array(a.iter().map(canonical_json).collect()),
        other => other.clone(),
    }
}

fn hash_value(v: &Value) -> Result<String> {
    let bytes = serde_json::to_vec(&canonical_json(v))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hex SHA-256 of the canonical JSON encoding of `params`; independent of field order.
pub fn config_hash<P: Serialize>(params: &P) -> Result<String> {
    hash_value(&serde_json::to_value(params)?)
}

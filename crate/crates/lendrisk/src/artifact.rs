//! JSON model and preprocess-state files.

use std::fs;
use std::path::Path;

use lendrisk_core::grid::{Hyperparams, Model};
use lendrisk_core::preprocess::PreprocessState;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Phase;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const MODEL_FILE: &str = "model.json";
pub const PREPROCESS_FILE: &str = "preprocess.json";

/// First 16 hex digits of the SHA-256 of the value's compact JSON.
pub fn content_id<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("artifact types serialize");
    hex::encode(&Sha256::digest(&json)[..8])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessArtifact {
    pub schema_version: u32,
    pub preprocess_id: String,
    pub phase: Phase,
    pub state: PreprocessState,
}

impl PreprocessArtifact {
    pub fn new(phase: Phase, state: PreprocessState) -> Self {
        Self { schema_version: SCHEMA_VERSION, preprocess_id: content_id(&state), phase, state }
    }

    /// Fails when the stored id does not match the state it carries.
    pub fn verify(&self) -> Result<()> {
        let found = content_id(&self.state);
        if found != self.preprocess_id {
            return Err(Error::StateMismatch { expected: self.preprocess_id.clone(), found });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub model_id: String,
    pub preprocess_id: String,
    pub phase: Phase,
    pub hyperparams: Hyperparams,
    pub feature_names: Vec<String>,
    pub model: Model,
}

#[derive(Serialize)]
struct ModelContent<'a> {
    preprocess_id: &'a str,
    phase: Phase,
    hyperparams: &'a Hyperparams,
    model: &'a Model,
}

impl ModelArtifact {
    pub fn new(preprocess: &PreprocessArtifact, hyperparams: Hyperparams, model: Model) -> Self {
        let model_id = content_id(&ModelContent {
            preprocess_id: &preprocess.preprocess_id,
            phase: preprocess.phase,
            hyperparams: &hyperparams,
            model: &model,
        });
        Self {
            schema_version: SCHEMA_VERSION,
            model_id,
            preprocess_id: preprocess.preprocess_id.clone(),
            phase: preprocess.phase,
            hyperparams,
            feature_names: preprocess.state.feature_names(),
            model,
        }
    }

    /// Refuses a state other than the one the model was trained with.
    pub fn check_state(&self, preprocess: &PreprocessArtifact) -> Result<()> {
        preprocess.verify()?;
        if preprocess.preprocess_id != self.preprocess_id {
            return Err(Error::StateMismatch {
                expected: self.preprocess_id.clone(),
                found: preprocess.preprocess_id.clone(),
            });
        }
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Loads a model and its preprocess state, by default `preprocess.json` next to the model.
pub fn load_pair(model_path: &Path, preprocess_path: Option<&Path>) -> Result<(ModelArtifact, PreprocessArtifact)> {
    let model: ModelArtifact = read_json(model_path)?;
    let default_path = model_path.with_file_name(PREPROCESS_FILE);
    let preprocess: PreprocessArtifact = read_json(preprocess_path.unwrap_or(&default_path))?;
    model.check_state(&preprocess)?;
    Ok((model, preprocess))
}

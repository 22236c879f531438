//! Versioned JSON checkpoint holding trained parameters and the settings
//! needed to reproduce them.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::SplitSpec;
use crate::error::{AimError, Result};
use crate::featurize::FeaturizerConfig;
use crate::model::{ModelParams, ModelShape};
use crate::train::TrainConfig;

pub const FORMAT: &str = "aim-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub shape: ModelShape,
    pub featurizer: FeaturizerConfig,
    pub split: SplitSpec,
    pub train: TrainConfig,
    pub best_epoch: usize,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(
        params: ModelParams,
        featurizer: FeaturizerConfig,
        split: SplitSpec,
        train: TrainConfig,
        best_epoch: usize,
    ) -> Self {
        Checkpoint {
            format: FORMAT.to_string(),
            version: VERSION,
            shape: params.shape(),
            featurizer,
            split,
            train,
            best_epoch,
            params,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(s)?;
        if c.format != FORMAT {
            return Err(AimError::validation(format!(
                "not a checkpoint (format {:?})",
                c.format
            )));
        }
        if c.version != VERSION {
            return Err(AimError::validation(format!(
                "unsupported checkpoint version {}",
                c.version
            )));
        }
        c.params.validate()?;
        if c.params.shape() != c.shape {
            return Err(AimError::validation(
                "checkpoint shape does not match parameters",
            ));
        }
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Checkpoint::from_json(&fs::read_to_string(path)?)
    }
}

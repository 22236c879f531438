pub mod eval;
pub mod explain;
pub mod gradcheck;
pub mod synth;
pub mod train;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use aim_core::featurize::{featurize_dataset, FeaturizerConfig, FeaturizerMode};
use aim_core::Dataset;
use anyhow::Context;

/// Loads a JSONL dataset and featurizes it.
pub fn load_dataset(path: &Path, featurizer: &FeaturizerConfig) -> anyhow::Result<Dataset> {
    let raw = aim_core::data::load_jsonl(path, featurizer.dim)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(featurize_dataset(&raw, featurizer)?)
}

pub fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Writes a file through `f` and returns its path.
pub fn write_with(
    path: PathBuf,
    f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
) -> anyhow::Result<PathBuf> {
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(path)
}

pub fn write_json(path: PathBuf, value: &impl serde::Serialize) -> anyhow::Result<PathBuf> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

pub fn parse_featurizer(s: &str) -> anyhow::Result<FeaturizerMode> {
    s.parse()
        .map_err(|e: String| crate::CliError::validation(format!("--featurizer: {e}")).into())
}

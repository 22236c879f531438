use std::path::PathBuf;

use aim_core::data::split;
use aim_core::eval::evaluate;
use aim_core::featurize::FeaturizerConfig;
use aim_core::model::{DEFAULT_DIM, DEFAULT_HIDDEN_DIM};
use aim_core::train::{write_history_csv, Alternation, Components, Phase, TrainConfig};
use aim_core::{Checkpoint, ModelShape, SplitSpec};
use clap::Args;
use serde::Serialize;
use serde_json::json;

use super::{create_dir, load_dataset, parse_featurizer, write_json, write_with};
use crate::duration::parse_duration;
use crate::manifest::ManifestBuilder;
use crate::settings::{parse_ratio, FileConfig};
use crate::CliError;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSONL dataset, one event per line.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory for checkpoint.json, history.csv and manifest.json.
    #[arg(long, default_value = "runs/train")]
    pub out_dir: PathBuf,
    /// TOML file with defaults for the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Feature dimension d.
    #[arg(long)]
    pub dim: Option<usize>,
    /// `precomputed` or `hashed`.
    #[arg(long)]
    pub featurizer: Option<String>,
    #[arg(long)]
    pub featurizer_seed: Option<u64>,
    /// Content-attention hidden size d_h.
    #[arg(long)]
    pub dh: Option<usize>,
    /// Seed for initialization and epoch shuffling.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// `per-epoch` or `joint`.
    #[arg(long)]
    pub alternation: Option<String>,
    /// `attention` or `classifier`.
    #[arg(long)]
    pub first_phase: Option<String>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    /// Dynamic-attention bin width, e.g. `1h`.
    #[arg(long)]
    pub bin_width: Option<String>,
    #[arg(long)]
    pub horizon_bins: Option<usize>,
    #[arg(long)]
    pub tune_fraction: Option<f64>,
    /// Train:test ratio, e.g. `3:1`.
    #[arg(long)]
    pub ratio: Option<String>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Include the classifier bias in the L2 penalty.
    #[arg(long)]
    pub regularize_bias: bool,
    /// Leave the dynamic-attention knots out of the L2 penalty.
    #[arg(long)]
    pub no_regularize_knots: bool,
    /// Ablation: pin dynamic attention at zero.
    #[arg(long)]
    pub no_dynamic: bool,
    /// Ablation: drop the first-microblog context from content attention.
    #[arg(long)]
    pub no_first_post: bool,
}

/// Fully resolved training settings, as recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct TrainSettings {
    pub data: PathBuf,
    pub out_dir: PathBuf,
    pub featurizer: FeaturizerConfig,
    pub shape: ModelShape,
    pub split: SplitSpec,
    pub train: TrainConfig,
}

fn parsed<T: std::str::FromStr<Err = String>>(flag: &str, s: &str) -> anyhow::Result<T> {
    s.parse()
        .map_err(|e| CliError::validation(format!("--{flag}: {e}")).into())
}

impl TrainArgs {
    pub fn resolve(&self) -> anyhow::Result<TrainSettings> {
        let file = FileConfig::load(self.config.as_deref())?;
        let base = TrainConfig::default();
        let dim = self.dim.or(file.dim).unwrap_or(DEFAULT_DIM);
        let featurizer = FeaturizerConfig {
            dim,
            mode: match self.featurizer.as_deref().or(file.featurizer.as_deref()) {
                Some(s) => parse_featurizer(s)?,
                None => FeaturizerConfig::default().mode,
            },
            seed: self.featurizer_seed.or(file.featurizer_seed).unwrap_or(0),
        };
        let bin_width_secs = match self.bin_width.as_deref().or(file.bin_width.as_deref()) {
            Some(s) => {
                parse_duration(s).map_err(|e| CliError::validation(format!("--bin-width: {e}")))?
            }
            None => ModelShape::default().bin_width_secs,
        };
        let shape = ModelShape {
            dim,
            hidden_dim: self.dh.or(file.dh).unwrap_or(DEFAULT_HIDDEN_DIM),
            horizon_bins: self
                .horizon_bins
                .or(file.horizon_bins)
                .unwrap_or(ModelShape::default().horizon_bins),
            bin_width_secs,
        };
        let defaults = SplitSpec::default();
        let split = SplitSpec {
            tune_fraction: self
                .tune_fraction
                .or(file.tune_fraction)
                .unwrap_or(defaults.tune_fraction),
            train_test_ratio: match self.ratio.as_deref().or(file.ratio.as_deref()) {
                Some(s) => {
                    parse_ratio(s).map_err(|e| CliError::validation(format!("--ratio: {e}")))?
                }
                None => defaults.train_test_ratio,
            },
            seed: self.split_seed.or(file.split_seed).unwrap_or(defaults.seed),
        };
        let alternation: Alternation =
            match self.alternation.as_deref().or(file.alternation.as_deref()) {
                Some(s) => parsed("alternation", s)?,
                None => base.alternation,
            };
        let first_phase: Phase = match self.first_phase.as_deref().or(file.first_phase.as_deref()) {
            Some(s) => parsed("first-phase", s)?,
            None => base.first_phase,
        };
        let train = TrainConfig {
            lambda: self.lambda.or(file.lambda).unwrap_or(base.lambda),
            learning_rate: self.lr.or(file.lr).unwrap_or(base.learning_rate),
            max_epochs: self
                .max_epochs
                .or(file.max_epochs)
                .unwrap_or(base.max_epochs),
            patience: self.patience.or(file.patience).unwrap_or(base.patience),
            alternation,
            first_phase,
            seed: self.seed.or(file.seed).unwrap_or(base.seed),
            init_scale: self
                .init_scale
                .or(file.init_scale)
                .unwrap_or(base.init_scale),
            regularize_knots: !self.no_regularize_knots,
            regularize_bias: self.regularize_bias,
            components: Components {
                dynamic_attention: !self.no_dynamic,
                first_post_context: !self.no_first_post,
            },
        };
        shape.validate()?;
        train.validate()?;
        Ok(TrainSettings {
            data: self.data.clone(),
            out_dir: self.out_dir.clone(),
            featurizer,
            shape,
            split,
            train,
        })
    }
}

pub fn run(args: TrainArgs) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::start("train");
    let s = args.resolve()?;
    if let Some(c) = &args.config {
        manifest.input(c);
    }
    manifest.input(&s.data);

    let ds = load_dataset(&s.data, &s.featurizer)?;
    let (tune, train, test) = split(&ds, &s.split)?;
    let outcome = aim_core::train(&train, &tune, &s.train, &s.shape)?;

    create_dir(&s.out_dir)?;
    let checkpoint = Checkpoint::new(
        outcome.params.clone(),
        s.featurizer,
        s.split,
        s.train,
        outcome.best_epoch,
    );
    let ckpt_path = s.out_dir.join("checkpoint.json");
    checkpoint.save(&ckpt_path)?;
    let history_path = write_with(s.out_dir.join("history.csv"), |w| {
        write_history_csv(&outcome.history, w)?;
        Ok(())
    })?;
    let test_report = evaluate(&test, &outcome.params, 0.5)?;
    let summary_path = write_json(
        s.out_dir.join("summary.json"),
        &json!({
            "partitions": { "tune": tune.len(), "train": train.len(), "test": test.len() },
            "epochs_run": outcome.history.len(),
            "best_epoch": outcome.best_epoch,
            "test": test_report,
        }),
    )?;

    println!(
        "trained {} epochs (best {}) on {} events; test accuracy {:.4} on {} events",
        outcome.history.len(),
        outcome.best_epoch,
        train.len(),
        test_report.accuracy,
        test.len()
    );
    println!("wrote {}", ckpt_path.display());

    let seeds = json!({
        "train": s.train.seed,
        "split": s.split.seed,
        "featurizer": s.featurizer.seed,
    });
    let outputs = [ckpt_path, history_path, summary_path];
    manifest.finish(&s, seeds, &outputs, &s.out_dir.join("manifest.json"))
}

use std::path::PathBuf;

use aim_core::data::split;
use aim_core::eval::{early_detection_sweep, evaluate, EarlyDetectionCurve};
use aim_core::{Checkpoint, Dataset};
use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use super::{create_dir, load_dataset, write_json, write_with};
use crate::duration::{parse_duration, parse_duration_list};
use crate::manifest::ManifestBuilder;
use crate::settings::FileConfig;
use crate::CliError;

const DEFAULT_DEADLINES: &str = "0,1h,3h,6h,12h,24h,48h,72h,96h,inf";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    All,
    Tune,
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "runs/eval")]
    pub out_dir: PathBuf,
    /// TOML file; only `threshold` is read.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Which partition of the checkpoint's split to score.
    #[arg(long, value_enum, default_value = "all")]
    pub partition: Partition,
    /// Scores at or above this are labelled misinformation.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Label used in the text table.
    #[arg(long, default_value = "AIM")]
    pub method: String,
    /// Also sweep detection deadlines and write early.csv.
    #[arg(long)]
    pub early: bool,
    /// Ascending comma-separated deadlines, e.g. `0,1h,12h,inf`.
    #[arg(long, default_value = DEFAULT_DEADLINES)]
    pub deadlines: String,
    /// Official report time to annotate the curve with.
    #[arg(long)]
    pub official_report: Option<String>,
    /// Retrain on truncated events at every deadline instead of reusing the
    /// checkpoint.
    #[arg(long)]
    pub retrain: bool,
}

#[derive(Debug, Serialize)]
struct EvalSettings {
    checkpoint: PathBuf,
    data: PathBuf,
    out_dir: PathBuf,
    partition: Partition,
    threshold: f64,
    method: String,
    early: bool,
    /// Kept as text since JSON has no infinity.
    deadlines: Option<String>,
    official_report: Option<String>,
    retrain: bool,
}

fn select(ds: &Dataset, ckpt: &Checkpoint, partition: Partition) -> anyhow::Result<Dataset> {
    if partition == Partition::All {
        return Ok(ds.clone());
    }
    let (tune, train, test) = split(ds, &ckpt.split)?;
    Ok(match partition {
        Partition::Tune => tune,
        Partition::Train => train,
        _ => test,
    })
}

fn retrain_sweep(
    ds: &Dataset,
    ckpt: &Checkpoint,
    partition: Partition,
    deadlines: &[f64],
    threshold: f64,
) -> anyhow::Result<EarlyDetectionCurve> {
    let mut accuracy_at = Vec::with_capacity(deadlines.len());
    for &d in deadlines {
        let truncated = ds.truncate(d);
        let (tune, train, _) = split(&truncated, &ckpt.split)?;
        let outcome = aim_core::train(&train, &tune, &ckpt.train, &ckpt.shape)?;
        let scored = select(&truncated, ckpt, partition)?;
        accuracy_at.push(evaluate(&scored, &outcome.params, threshold)?.accuracy);
    }
    Ok(EarlyDetectionCurve {
        deadlines_secs: deadlines.to_vec(),
        accuracy_at,
        official_report_secs: None,
    })
}

pub fn run(args: EvalArgs) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::start("eval");
    let file = FileConfig::load(args.config.as_deref())?;
    let threshold = args.threshold.or(file.threshold).unwrap_or(0.5);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::validation(format!(
            "--threshold must be in [0, 1], got {threshold}"
        ))
        .into());
    }
    let deadlines = if args.early {
        Some(
            parse_duration_list(&args.deadlines)
                .map_err(|e| CliError::validation(format!("--deadlines: {e}")))?,
        )
    } else {
        None
    };
    let official = args
        .official_report
        .as_deref()
        .map(parse_duration)
        .transpose()
        .map_err(|e| CliError::validation(format!("--official-report: {e}")))?;
    if args.retrain && !args.early {
        return Err(CliError::validation("--retrain requires --early").into());
    }

    let ckpt = Checkpoint::load(&args.checkpoint)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    manifest.input(&args.checkpoint);
    manifest.input(&args.data);
    if let Some(c) = &args.config {
        manifest.input(c);
    }
    let ds = load_dataset(&args.data, &ckpt.featurizer)?;
    let scored = select(&ds, &ckpt, args.partition)?;
    let report = evaluate(&scored, &ckpt.params, threshold)?;

    let curve = match &deadlines {
        None => None,
        Some(d) => {
            let mut c = if args.retrain {
                retrain_sweep(&ds, &ckpt, args.partition, d, threshold)?
            } else {
                early_detection_sweep(&scored, &ckpt.params, d, threshold)?
            };
            c.official_report_secs = official;
            Some(c)
        }
    };

    create_dir(&args.out_dir)?;
    let mut outputs = vec![
        write_json(
            args.out_dir.join("report.json"),
            &json!({
                "method": args.method,
                "partition": args.partition,
                "events": scored.len(),
                "report": report,
                "early": curve,
            }),
        )?,
        write_with(args.out_dir.join("report.txt"), |w| {
            use std::io::Write;
            w.write_all(report.to_table(&args.method).as_bytes())?;
            Ok(())
        })?,
    ];
    if let Some(c) = &curve {
        outputs.push(write_with(args.out_dir.join("early.csv"), |w| {
            c.write_csv(w)?;
            Ok(())
        })?);
    }

    print!("{}", report.to_table(&args.method));
    if let Some(c) = &curve {
        for (d, a) in c.deadlines_secs.iter().zip(&c.accuracy_at) {
            println!("deadline {:>8} h  accuracy {a:.4}", d / 3600.0);
        }
    }

    let settings = EvalSettings {
        checkpoint: args.checkpoint.clone(),
        data: args.data.clone(),
        out_dir: args.out_dir.clone(),
        partition: args.partition,
        threshold,
        method: args.method.clone(),
        early: args.early,
        deadlines: args.early.then(|| args.deadlines.clone()),
        official_report: args.official_report.clone(),
        retrain: args.retrain,
    };
    let seeds = json!({ "split": ckpt.split.seed, "train": ckpt.train.seed });
    manifest.finish(
        &settings,
        seeds,
        &outputs,
        &args.out_dir.join("manifest.json"),
    )
}

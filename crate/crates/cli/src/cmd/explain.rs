use std::path::PathBuf;

use aim_core::explain::{dynamic_curve, top_k};
use aim_core::Checkpoint;
use anyhow::Context;
use clap::Args;
use serde::Serialize;
use serde_json::json;

use super::{create_dir, load_dataset, write_json, write_with};
use crate::duration::parse_duration;
use crate::manifest::ManifestBuilder;
use crate::CliError;

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "runs/explain")]
    pub out_dir: PathBuf,
    /// Write the dynamic-attention curve to curve.csv.
    #[arg(long)]
    pub curve: bool,
    /// Curve sampling step, at most one bin wide.
    #[arg(long, default_value = "600")]
    pub step: String,
    /// Write the K highest-weighted microblogs of `--event` to topk.json.
    #[arg(long, value_name = "K")]
    pub topk: Option<usize>,
    #[arg(long, requires = "topk")]
    pub event: Option<String>,
    /// Dataset holding `--event`.
    #[arg(long, requires = "topk")]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ExplainSettings {
    checkpoint: PathBuf,
    out_dir: PathBuf,
    curve: bool,
    step_secs: f64,
    topk: Option<usize>,
    event: Option<String>,
    data: Option<PathBuf>,
}

pub fn run(args: ExplainArgs) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::start("explain");
    if !args.curve && args.topk.is_none() {
        return Err(CliError::validation("nothing to do: pass --curve and/or --topk").into());
    }
    let step_secs =
        parse_duration(&args.step).map_err(|e| CliError::validation(format!("--step: {e}")))?;
    let topk = match (args.topk, &args.event, &args.data) {
        (None, _, _) => None,
        (Some(k), Some(event), Some(data)) => Some((k, event, data)),
        (Some(_), None, _) => return Err(CliError::validation("--topk requires --event").into()),
        (Some(_), _, None) => return Err(CliError::validation("--topk requires --data").into()),
    };

    let ckpt = Checkpoint::load(&args.checkpoint)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    manifest.input(&args.checkpoint);

    let curve = if args.curve {
        Some(dynamic_curve(&ckpt.params, step_secs)?)
    } else {
        None
    };
    let listing = match topk {
        None => None,
        Some((k, id, data)) => {
            manifest.input(data);
            let ds = load_dataset(data, &ckpt.featurizer)?;
            let event = ds
                .get(id)
                .ok_or_else(|| CliError::validation(format!("--event: unknown event id {id:?}")))?;
            Some(top_k(event, &ckpt.params, k)?)
        }
    };

    create_dir(&args.out_dir)?;
    let mut outputs = Vec::new();
    if let Some(c) = &curve {
        outputs.push(write_with(args.out_dir.join("curve.csv"), |w| {
            c.write_csv(w)?;
            Ok(())
        })?);
        let peak = c
            .samples
            .iter()
            .max_by(|a, b| a.raw.total_cmp(&b.raw))
            .expect("curve has samples");
        println!(
            "curve: {} samples, peak {:.4} at {:.2} h",
            c.samples.len(),
            peak.raw,
            peak.secs / 3600.0
        );
    }
    if let Some(l) = &listing {
        outputs.push(write_json(args.out_dir.join("topk.json"), l)?);
        println!("top {} microblogs of {}:", l.entries.len(), l.event_id);
        for e in &l.entries {
            println!("  {:<24} weight {:.6}", e.microblog_id, e.weight);
        }
    }

    let settings = ExplainSettings {
        checkpoint: args.checkpoint.clone(),
        out_dir: args.out_dir.clone(),
        curve: args.curve,
        step_secs,
        topk: args.topk,
        event: args.event.clone(),
        data: args.data.clone(),
    };
    manifest.finish(
        &settings,
        json!({}),
        &outputs,
        &args.out_dir.join("manifest.json"),
    )
}

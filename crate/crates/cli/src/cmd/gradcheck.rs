use std::path::PathBuf;

use aim_core::gradcheck::{self, Corruption, GradCheckConfig};
use aim_core::train::Tensor;
use clap::Args;
use serde_json::json;

use super::{create_dir, write_json};
use crate::manifest::ManifestBuilder;
use crate::CliError;

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Number of random instances.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Central-difference step.
    #[arg(long, default_value_t = gradcheck::DEFAULT_STEP)]
    pub step: f64,
    #[arg(long, default_value = "runs/gradcheck")]
    pub out_dir: PathBuf,
    /// Test hook: add OFFSET to analytic entry INDEX of TENSOR in trial 0.
    #[arg(long, hide = true, value_name = "TENSOR:INDEX:OFFSET")]
    pub corrupt_gradient: Option<String>,
}

fn parse_corruption(s: &str) -> anyhow::Result<Corruption> {
    let bad = || {
        CliError::validation(format!(
            "--corrupt-gradient: expected TENSOR:INDEX:OFFSET, got {s:?}"
        ))
    };
    let mut parts = s.splitn(3, ':');
    let (name, index, offset) = match (parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(bad().into()),
    };
    let tensor = Tensor::ALL
        .into_iter()
        .find(|t| t.name() == name)
        .ok_or_else(|| {
            let names: Vec<_> = Tensor::ALL.iter().map(|t| t.name()).collect();
            CliError::validation(format!(
                "--corrupt-gradient: unknown tensor {name:?} (one of {names:?})"
            ))
        })?;
    Ok(Corruption {
        tensor,
        index: index.parse().map_err(|_| bad())?,
        offset: offset.parse().map_err(|_| bad())?,
    })
}

pub fn run(args: GradcheckArgs) -> anyhow::Result<()> {
    let manifest = ManifestBuilder::start("gradcheck");
    if args.trials == 0 {
        return Err(CliError::validation("--trials must be positive").into());
    }
    if !(args.step > 0.0 && args.step.is_finite()) {
        return Err(
            CliError::validation(format!("--step must be positive, got {}", args.step)).into(),
        );
    }
    let cfg = GradCheckConfig {
        trials: args.trials,
        seed: args.seed,
        step: args.step,
        corrupt: args
            .corrupt_gradient
            .as_deref()
            .map(parse_corruption)
            .transpose()?,
        ..GradCheckConfig::default()
    };
    let report = gradcheck::run(&cfg)?;

    create_dir(&args.out_dir)?;
    let report_path = write_json(args.out_dir.join("report.json"), &report)?;
    manifest.finish(
        json!({ "out_dir": args.out_dir, "gradcheck": cfg }),
        json!({ "gradcheck": cfg.seed }),
        &[report_path],
        &args.out_dir.join("manifest.json"),
    )?;

    println!(
        "{} trials, {} coordinates, max abs error {:.3e}",
        report.trials, report.coordinates, report.max_abs_error
    );
    match report.mismatches.first() {
        None => {
            println!("gradient check passed");
            Ok(())
        }
        Some(m) => Err(CliError::check_failed(format!(
            "gradient check failed: {} mismatches; first at trial {} lambda {} {}[{}]: analytic {} vs numeric {}",
            report.mismatches.len(),
            m.trial,
            m.lambda,
            m.tensor.name(),
            m.index,
            m.analytic,
            m.numeric
        ))
        .into()),
    }
}

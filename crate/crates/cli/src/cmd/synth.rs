use std::path::PathBuf;

use aim_core::synth::{generate, SynthConfig};
use clap::Args;
use serde_json::json;

use crate::duration::parse_duration;
use crate::manifest::ManifestBuilder;
use crate::CliError;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output JSONL; the signal sidecar and manifest go next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub events: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub min_posts: Option<usize>,
    #[arg(long)]
    pub max_posts: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Share of posts per event carrying the label signal, in (0, 1].
    #[arg(long)]
    pub signal_fraction: Option<f64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Signal shift; defaults to three noise sigmas.
    #[arg(long)]
    pub signal_magnitude: Option<f64>,
    /// Signal-post delay range after the first post, e.g. `2h:3h`.
    #[arg(long)]
    pub signal_delay: Option<String>,
    /// Spread of noise posts after the first post, e.g. `24h`.
    #[arg(long)]
    pub noise_span: Option<String>,
}

fn secs(flag: &str, s: &str) -> anyhow::Result<i64> {
    let v = parse_duration(s).map_err(|e| CliError::validation(format!("--{flag}: {e}")))?;
    if !v.is_finite() {
        return Err(CliError::validation(format!("--{flag}: must be finite")).into());
    }
    Ok(v.round() as i64)
}

impl SynthArgs {
    fn resolve(&self) -> anyhow::Result<SynthConfig> {
        let d = SynthConfig::default();
        let signal_delay_range_secs = match &self.signal_delay {
            None => d.signal_delay_range_secs,
            Some(s) => {
                let (lo, hi) = s.split_once(':').ok_or_else(|| {
                    CliError::validation(format!("--signal-delay: expected LO:HI, got {s:?}"))
                })?;
                (secs("signal-delay", lo)?, secs("signal-delay", hi)?)
            }
        };
        let cfg = SynthConfig {
            n_events: self.events.unwrap_or(d.n_events),
            n_posts_range: (
                self.min_posts.unwrap_or(d.n_posts_range.0),
                self.max_posts.unwrap_or(d.n_posts_range.1),
            ),
            dim: self.dim.unwrap_or(d.dim),
            signal_fraction: self.signal_fraction.unwrap_or(d.signal_fraction),
            noise_sigma: self.noise_sigma.unwrap_or(d.noise_sigma),
            signal_magnitude: self.signal_magnitude.or(d.signal_magnitude),
            signal_delay_range_secs,
            noise_span_secs: match &self.noise_span {
                None => d.noise_span_secs,
                Some(s) => secs("noise-span", s)?,
            },
            seed: self.seed.unwrap_or(d.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(args: SynthArgs) -> anyhow::Result<()> {
    let manifest = ManifestBuilder::start("synth");
    let cfg = args.resolve()?;
    let out = generate(&cfg)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        super::create_dir(parent)?;
    }
    let sidecar = out.save(&args.out)?;
    println!(
        "wrote {} events to {} (signals in {})",
        out.dataset.len(),
        args.out.display(),
        sidecar.display()
    );
    let stem = args
        .out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let dest = args.out.with_file_name(format!("{stem}.manifest.json"));
    manifest.finish(
        json!({ "out": args.out, "synth": cfg }),
        json!({ "synth": cfg.seed }),
        &[args.out.clone(), sidecar],
        &dest,
    )
}

//! Synthetic event streams with planted signal microblogs, and scalar-loop
//! reference implementations of the forward pass and loss.
//!
//! Each generated event has `n` posts of Gaussian noise. A `signal_fraction`
//! share of them (at least one) additionally carries `+μu` for misinformation
//! or `-μu` for true information, with `u` a fixed unit vector. Signal posts
//! arrive inside `signal_delay_range_secs` after the event start; noise posts
//! are spread uniformly over `[0, noise_span_secs]`, and the first post of an
//! event is a noise post at offset 0 whenever the event has any noise posts.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Event, Label, Microblog};
use crate::error::{AimError, Result};
use crate::model::{ModelParams, ModelShape};
use crate::train::SCORE_EPSILON;

const BASE_TIME: i64 = 1_400_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_events: usize,
    pub n_posts_range: (usize, usize),
    pub dim: usize,
    pub signal_fraction: f64,
    pub noise_sigma: f64,
    /// Signal shift `μ`; defaults to `3 * noise_sigma`.
    pub signal_magnitude: Option<f64>,
    pub signal_delay_range_secs: (i64, i64),
    pub noise_span_secs: i64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_events: 400,
            n_posts_range: (20, 40),
            dim: 50,
            signal_fraction: 0.1,
            noise_sigma: 1.0,
            signal_magnitude: None,
            signal_delay_range_secs: (2 * 3600, 3 * 3600),
            noise_span_secs: 24 * 3600,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn magnitude(&self) -> f64 {
        self.signal_magnitude.unwrap_or(3.0 * self.noise_sigma)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.n_posts_range;
        let (dlo, dhi) = self.signal_delay_range_secs;
        let problem = if self.n_events == 0 {
            Some("event count must be positive".to_string())
        } else if lo == 0 || lo > hi {
            Some(format!("invalid post-count range [{lo}, {hi}]"))
        } else if self.dim == 0 {
            Some("dimension must be positive".to_string())
        } else if !(self.signal_fraction > 0.0 && self.signal_fraction <= 1.0) {
            Some(format!(
                "signal fraction must be in (0, 1], got {}",
                self.signal_fraction
            ))
        } else if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            Some(format!(
                "noise sigma must be positive, got {}",
                self.noise_sigma
            ))
        } else if !self.magnitude().is_finite() {
            Some("signal magnitude must be finite".to_string())
        } else if dlo < 0 || dlo > dhi {
            Some(format!("invalid signal delay range [{dlo}, {dhi}]"))
        } else if self.noise_span_secs < 0 {
            Some("noise span must be non-negative".to_string())
        } else {
            None
        };
        problem.map_or(Ok(()), |m| Err(AimError::Validation(m)))
    }
}

/// Generated dataset plus the ids of the signal posts of every event.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthOutput {
    pub dataset: Dataset,
    pub signals: BTreeMap<String, Vec<String>>,
    pub direction: Vec<f64>,
}

impl SynthOutput {
    pub fn write_signals(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.signals)?;
        Ok(())
    }

    /// Writes `<stem>.jsonl`-style data to `path` and the signal sidecar to
    /// `<stem>.signals.json` next to it.
    pub fn save(&self, path: &Path) -> Result<std::path::PathBuf> {
        crate::data::save_jsonl(&self.dataset, path)?;
        let sidecar = signals_path(path);
        let mut w = BufWriter::new(File::create(&sidecar)?);
        self.write_signals(&mut w)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(sidecar)
    }
}

/// `data/x.jsonl` → `data/x.signals.json`.
pub fn signals_path(path: &Path) -> std::path::PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.signals.json"))
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut direction: Vec<f64> = (0..cfg.dim)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    direction.iter_mut().for_each(|x| *x /= norm);

    let mu = cfg.magnitude();
    let mut events = Vec::with_capacity(cfg.n_events);
    let mut signals = BTreeMap::new();
    for i in 0..cfg.n_events {
        let label = if i % 2 == 0 {
            Label::Misinformation
        } else {
            Label::True
        };
        let sign = if label == Label::Misinformation {
            1.0
        } else {
            -1.0
        };
        let n = rng.gen_range(cfg.n_posts_range.0..=cfg.n_posts_range.1);
        let n_signal = ((cfg.signal_fraction * n as f64).round() as usize).clamp(1, n);

        // Post 0 is the source; signal posts are drawn from the rest unless
        // every post is signal.
        let mut is_signal = vec![false; n];
        if n_signal == n {
            is_signal.iter_mut().for_each(|s| *s = true);
        } else {
            let mut candidates: Vec<usize> = (1..n).collect();
            candidates.shuffle(&mut rng);
            for &j in &candidates[..n_signal] {
                is_signal[j] = true;
            }
        }

        let start = BASE_TIME + i as i64 * 7 * 86_400 + rng.gen_range(0..86_400);
        let event_id = format!("e{i:05}");
        let mut microblogs = Vec::with_capacity(n);
        let mut signal_ids = Vec::new();
        for (j, &signal) in is_signal.iter().enumerate() {
            let offset = if signal {
                rng.gen_range(cfg.signal_delay_range_secs.0..=cfg.signal_delay_range_secs.1)
            } else if j == 0 {
                0
            } else {
                rng.gen_range(0..=cfg.noise_span_secs)
            };
            let features: Vec<f64> = direction
                .iter()
                .map(|&u| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    let shift = if signal { sign * mu * u } else { 0.0 };
                    cfg.noise_sigma * noise + shift
                })
                .collect();
            let id = format!("{event_id}-m{j:03}");
            if signal {
                signal_ids.push(id.clone());
            }
            microblogs.push(Microblog::with_features(id, start + offset, features));
        }
        signals.insert(event_id.clone(), signal_ids);
        events.push(Event::new(event_id, label, microblogs)?);
    }
    Ok(SynthOutput {
        dataset: Dataset::new(events, cfg.dim)?,
        signals,
        direction,
    })
}

/// Reference forward pass written as explicit index loops.
/// Returns `(weights, representation, score)`.
#[allow(clippy::needless_range_loop)]
pub fn oracle_forward(event: &Event, p: &ModelParams) -> (Vec<f64>, Vec<f64>, f64) {
    let d = p.classifier.weights.len();
    let dh = p.content.projection.len();
    let n = event.len();
    let mbs = event.microblogs();
    let feat = |j: usize, k: usize| mbs[j].features.as_ref().expect("featurized event")[k];

    // Stacked input column j = [f_1; f_j] (2d entries).
    let mut stacked = vec![vec![0.0; 2 * d]; n];
    for j in 0..n {
        for k in 0..d {
            stacked[j][k] = feat(0, k);
            stacked[j][d + k] = feat(j, k);
        }
    }

    let mut attention = vec![0.0; n];
    for j in 0..n {
        // Content attention.
        let mut content = 0.0;
        for i in 0..dh {
            let mut pre = 0.0;
            for k in 0..2 * d {
                pre += p.content.hidden.get(i, k) * stacked[j][k];
            }
            content += p.content.projection[i] * pre.tanh();
        }

        // Dynamic attention: bounds L <= t < U, clamped past the last knot.
        let t = (mbs[j].posted_at - mbs[0].posted_at) as f64;
        let width = p.dynamic.bin_width_secs;
        let k_bins = p.dynamic.knots.len() - 1;
        let dynamic = if t >= k_bins as f64 * width {
            p.dynamic.knots[k_bins]
        } else {
            let li = (t / width).floor() as usize;
            let lower = li as f64 * width;
            let upper = (li + 1) as f64 * width;
            (p.dynamic.knots[li] * (upper - t) + p.dynamic.knots[li + 1] * (t - lower))
                / ((upper - t) + (t - lower))
        };
        attention[j] = content + dynamic;
    }

    let mut max = attention[0];
    for j in 1..n {
        if attention[j] > max {
            max = attention[j];
        }
    }
    let mut total = 0.0;
    let mut weights = vec![0.0; n];
    for j in 0..n {
        weights[j] = (attention[j] - max).exp();
        total += weights[j];
    }
    for j in 0..n {
        weights[j] /= total;
    }

    let mut representation = vec![0.0; d];
    for k in 0..d {
        for j in 0..n {
            representation[k] += feat(j, k) * weights[j];
        }
    }

    let mut logit = p.classifier.bias;
    for k in 0..d {
        logit += p.classifier.weights[k] * representation[k];
    }
    let score = 1.0 / (1.0 + (-logit).exp());
    (weights, representation, score)
}

/// Reference loss: clamped cross-entropy over the dataset plus
/// `(λ/2)(‖W_h‖² + ‖w_a‖² + ‖W‖² + ‖knots‖²)`.
#[allow(clippy::needless_range_loop, clippy::manual_clamp)]
pub fn oracle_loss(ds: &Dataset, p: &ModelParams, lambda: f64) -> f64 {
    let mut total = 0.0;
    for e in ds.events() {
        let (_, _, score) = oracle_forward(e, p);
        let s = if score < SCORE_EPSILON {
            SCORE_EPSILON
        } else if score > 1.0 - SCORE_EPSILON {
            1.0 - SCORE_EPSILON
        } else {
            score
        };
        let l = e.label().as_f64();
        total += -l * s.ln() - (1.0 - l) * (1.0 - s).ln();
    }
    let mut sq = 0.0;
    for i in 0..p.content.hidden.rows() {
        for k in 0..p.content.hidden.cols() {
            sq += p.content.hidden.get(i, k) * p.content.hidden.get(i, k);
        }
    }
    for i in 0..p.content.projection.len() {
        sq += p.content.projection[i] * p.content.projection[i];
    }
    for k in 0..p.classifier.weights.len() {
        sq += p.classifier.weights[k] * p.classifier.weights[k];
    }
    for k in 0..p.dynamic.knots.len() {
        sq += p.dynamic.knots[k] * p.dynamic.knots[k];
    }
    total + 0.5 * lambda * sq
}

/// Size limits for [`random_instance`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceLimits {
    pub max_dim: usize,
    pub max_hidden_dim: usize,
    pub max_microblogs: usize,
    pub max_horizon_bins: usize,
    /// Parameters are drawn uniformly from `±param_scale`.
    pub param_scale: f64,
}

impl Default for InstanceLimits {
    fn default() -> Self {
        InstanceLimits {
            max_dim: 5,
            max_hidden_dim: 4,
            max_microblogs: 6,
            max_horizon_bins: 4,
            param_scale: 1.0,
        }
    }
}

/// Small random event and parameter set. Posting times may fall past the
/// knot horizon.
pub fn random_instance(rng: &mut impl Rng, limits: &InstanceLimits) -> (Event, ModelParams) {
    let shape = ModelShape {
        dim: rng.gen_range(1..=limits.max_dim),
        hidden_dim: rng.gen_range(1..=limits.max_hidden_dim),
        horizon_bins: rng.gen_range(1..=limits.max_horizon_bins),
        bin_width_secs: 3600.0,
    };
    let s = limits.param_scale;
    let mut p = ModelParams::zeros(&shape);
    let mut fill = |xs: &mut [f64]| xs.iter_mut().for_each(|x| *x = rng.gen_range(-s..=s));
    fill(p.content.hidden.as_mut_slice());
    fill(&mut p.content.projection);
    fill(&mut p.dynamic.knots);
    fill(&mut p.classifier.weights);
    p.classifier.bias = rng.gen_range(-s..=s);

    let n = rng.gen_range(1..=limits.max_microblogs);
    let span = (shape.horizon_bins as i64 + 1) * 3600;
    let start = BASE_TIME + rng.gen_range(0..86_400);
    let microblogs = (0..n)
        .map(|j| {
            let offset = if j == 0 { 0 } else { rng.gen_range(0..=span) };
            let features = (0..shape.dim).map(|_| rng.gen_range(-2.0..=2.0)).collect();
            Microblog::with_features(format!("m{j}"), start + offset, features)
        })
        .collect();
    let label = if rng.gen_bool(0.5) {
        Label::Misinformation
    } else {
        Label::True
    };
    let event = Event::new("random", label, microblogs).expect("non-empty event");
    (event, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_events: 20,
            n_posts_range: (5, 9),
            dim: 4,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_data() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
    }

    #[test]
    fn labels_are_balanced() {
        for n in [19, 20] {
            let out = generate(&SynthConfig {
                n_events: n,
                ..small()
            })
            .unwrap();
            let pos = out
                .dataset
                .events()
                .iter()
                .filter(|e| e.label() == Label::Misinformation)
                .count();
            assert!((2 * pos as i64 - n as i64).abs() <= 1);
        }
    }

    #[test]
    fn single_post_events() {
        let out = generate(&SynthConfig {
            n_posts_range: (1, 1),
            ..small()
        })
        .unwrap();
        assert!(out.dataset.events().iter().all(|e| e.len() == 1));
    }

    #[test]
    fn signal_posts_follow_delay_window() {
        let cfg = small();
        let out = generate(&cfg).unwrap();
        for e in out.dataset.events() {
            let sig = &out.signals[e.id()];
            assert!(!sig.is_empty());
            let first = &e.microblogs()[0];
            assert!(!sig.contains(&first.id));
            assert_eq!(e.deltas()[0], 0.0);
            for m in e.microblogs().iter().filter(|m| sig.contains(&m.id)) {
                let dt = m.posted_at - e.start_time();
                assert!(dt >= cfg.signal_delay_range_secs.0 && dt <= cfg.signal_delay_range_secs.1);
            }
        }
    }

    #[test]
    fn full_signal_fraction_marks_everything() {
        let out = generate(&SynthConfig {
            signal_fraction: 1.0,
            ..small()
        })
        .unwrap();
        for e in out.dataset.events() {
            assert_eq!(out.signals[e.id()].len(), e.len());
        }
    }

    #[test]
    fn rejects_bad_config() {
        for cfg in [
            SynthConfig {
                signal_fraction: 0.0,
                ..small()
            },
            SynthConfig {
                signal_fraction: 1.5,
                ..small()
            },
            SynthConfig {
                n_posts_range: (5, 2),
                ..small()
            },
            SynthConfig {
                signal_delay_range_secs: (10, 5),
                ..small()
            },
            SynthConfig {
                noise_sigma: 0.0,
                ..small()
            },
        ] {
            assert!(matches!(generate(&cfg), Err(AimError::Validation(_))));
        }
    }

    #[test]
    fn signals_path_replaces_extension() {
        assert_eq!(
            signals_path(Path::new("out/bench.jsonl")),
            Path::new("out/bench.signals.json")
        );
    }

    #[test]
    fn oracle_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (e, p) = random_instance(&mut rng, &InstanceLimits::default());
        let zero = ModelParams::zeros(&p.shape());
        assert_eq!(oracle_forward(&e, &zero).2, 0.5);
        let single = e.truncate(-0.0);
        let single = Event::new("one", e.label(), vec![single.microblogs()[0].clone()]).unwrap();
        assert_eq!(oracle_forward(&single, &p).0, vec![1.0]);
        let ds = Dataset::new(vec![e], p.dim()).unwrap();
        assert!((oracle_loss(&ds, &zero, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);

        let mut sure = zero.clone();
        sure.classifier.bias = if ds.events()[0].label() == Label::Misinformation {
            50.0
        } else {
            -50.0
        };
        assert!(oracle_loss(&ds, &sure, 0.0) < 1e-12);
    }
}

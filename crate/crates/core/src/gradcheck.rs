//! Central finite-difference check of [`backward`] on random small instances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Event;
use crate::error::Result;
use crate::model::ModelParams;
use crate::synth::{random_instance, InstanceLimits};
use crate::train::{backward, event_objective, Gradients, Regularization, Tensor};

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_ABS_TOL: f64 = 1e-5;
pub const DEFAULT_REL_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckConfig {
    pub trials: usize,
    pub seed: u64,
    pub step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub lambdas: Vec<f64>,
    pub limits: InstanceLimits,
    /// Adds a constant to one analytic gradient entry before comparison.
    /// Only meant for checking that the harness catches errors.
    pub corrupt: Option<Corruption>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    pub tensor: Tensor,
    pub index: usize,
    pub offset: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            trials: 200,
            seed: 0,
            step: DEFAULT_STEP,
            abs_tol: DEFAULT_ABS_TOL,
            rel_tol: DEFAULT_REL_TOL,
            lambdas: vec![0.0, 0.001],
            limits: InstanceLimits::default(),
            corrupt: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub trial: usize,
    pub lambda: f64,
    pub tensor: Tensor,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub trials: usize,
    pub coordinates: usize,
    pub max_abs_error: f64,
    pub mismatches: Vec<Mismatch>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// `|a - n| <= max(abs_tol, rel_tol * max(|a|, |n|))`.
pub fn within_tolerance(analytic: f64, numeric: f64, abs_tol: f64, rel_tol: f64) -> bool {
    let err = (analytic - numeric).abs();
    err <= abs_tol.max(rel_tol * analytic.abs().max(numeric.abs()))
}

/// Central difference of the per-event objective for every coordinate.
pub fn numeric_gradient(
    event: &Event,
    p: &ModelParams,
    reg: &Regularization,
    n_events: usize,
    step: f64,
) -> Result<Vec<(Tensor, Vec<f64>)>> {
    let mut probe = p.clone();
    let mut out = Vec::new();
    for t in Tensor::ALL {
        let len = p.tensor(t).len();
        let mut g = vec![0.0; len];
        for (k, gk) in g.iter_mut().enumerate() {
            let orig = p.tensor(t)[k];
            probe.tensor_mut(t)[k] = orig + step;
            let up = event_objective(event, &probe, reg, n_events)?;
            probe.tensor_mut(t)[k] = orig - step;
            let down = event_objective(event, &probe, reg, n_events)?;
            probe.tensor_mut(t)[k] = orig;
            *gk = (up - down) / (2.0 * step);
        }
        out.push((t, g));
    }
    Ok(out)
}

fn compare(
    analytic: &Gradients,
    numeric: &[(Tensor, Vec<f64>)],
    cfg: &GradCheckConfig,
    trial: usize,
    lambda: f64,
    report: &mut GradCheckReport,
) {
    for (t, num) in numeric {
        for (k, (&a, &n)) in analytic.tensor(*t).iter().zip(num).enumerate() {
            report.coordinates += 1;
            report.max_abs_error = report.max_abs_error.max((a - n).abs());
            if !within_tolerance(a, n, cfg.abs_tol, cfg.rel_tol) {
                report.mismatches.push(Mismatch {
                    trial,
                    lambda,
                    tensor: *t,
                    index: k,
                    analytic: a,
                    numeric: n,
                });
            }
        }
    }
}

/// Runs `trials` random instances, each checked at every configured lambda.
pub fn run(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = GradCheckReport {
        trials: cfg.trials,
        ..GradCheckReport::default()
    };
    for trial in 0..cfg.trials {
        let (event, params) = random_instance(&mut rng, &cfg.limits);
        for &lambda in &cfg.lambdas {
            let reg = Regularization::new(lambda);
            let (mut analytic, _) = backward(&event, &params, &reg, 1)?;
            if let Some(c) = cfg.corrupt {
                if trial == 0 {
                    if let Some(x) = analytic.tensor_mut(c.tensor).get_mut(c.index) {
                        *x += c.offset;
                    }
                }
            }
            let numeric = numeric_gradient(&event, &params, &reg, 1, cfg.step)?;
            compare(&analytic, &numeric, cfg, trial, lambda, &mut report);
        }
    }
    Ok(report)
}

//! Cross-entropy loss with L2 regularization, analytic gradients and the
//! alternating SGD trainer.
//!
//! The objective over a dataset of `n` events is
//!
//! ```text
//! J = Σ_e CE(l_e, score_e) + (λ/2) ‖θ‖²
//! ```
//!
//! where `‖θ‖²` sums the squared entries of `W_h`, `w_a`, the classifier
//! weights and (by default) the knots. The bias is excluded by default.
//! Scores are clamped to `[1e-12, 1 - 1e-12]` before taking logs.
//!
//! SGD takes one event per step. Each event's objective carries `1/n` of the
//! regularization term, so one pass applies the full penalty.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Event, Label};
use crate::error::{AimError, Result};
use crate::matrix::{squared_norm, Matrix};
use crate::model::{forward_cached, label_for_score, ModelParams, ModelShape};

pub const SCORE_EPSILON: f64 = 1e-12;

/// Which parameters the L2 penalty covers, and its strength.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub lambda: f64,
    pub knots: bool,
    pub bias: bool,
}

impl Regularization {
    pub fn new(lambda: f64) -> Self {
        Regularization {
            lambda,
            knots: true,
            bias: false,
        }
    }

    /// `‖θ‖²` over the regularized tensors.
    pub fn squared_norm(&self, p: &ModelParams) -> f64 {
        let mut total = squared_norm(p.content.hidden.as_slice())
            + squared_norm(&p.content.projection)
            + squared_norm(&p.classifier.weights);
        if self.knots {
            total += squared_norm(&p.dynamic.knots);
        }
        if self.bias {
            total += p.classifier.bias * p.classifier.bias;
        }
        total
    }

    pub fn penalty(&self, p: &ModelParams) -> f64 {
        0.5 * self.lambda * self.squared_norm(p)
    }
}

/// Binary cross-entropy on a clamped score.
pub fn cross_entropy(label: Label, score: f64) -> f64 {
    let s = score.clamp(SCORE_EPSILON, 1.0 - SCORE_EPSILON);
    match label {
        Label::Misinformation => -s.ln(),
        Label::True => -(1.0 - s).ln(),
    }
}

/// Full objective with the default regularization policy (knots in, bias out).
pub fn loss(ds: &Dataset, p: &ModelParams, lambda: f64) -> Result<f64> {
    loss_with(ds, p, &Regularization::new(lambda))
}

pub fn loss_with(ds: &Dataset, p: &ModelParams, reg: &Regularization) -> Result<f64> {
    let mut total = 0.0;
    for e in ds.events() {
        let score = forward_cached(e, p)?.breakdown.score;
        total += cross_entropy(e.label(), score);
    }
    Ok(total + reg.penalty(p))
}

/// The per-event objective that [`backward`] differentiates: cross-entropy
/// plus `1/n_events` of the regularization term.
pub fn event_objective(
    event: &Event,
    p: &ModelParams,
    reg: &Regularization,
    n_events: usize,
) -> Result<f64> {
    let score = forward_cached(event, p)?.breakdown.score;
    Ok(cross_entropy(event.label(), score) + reg.penalty(p) / n_events as f64)
}

/// One named parameter tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tensor {
    Hidden,
    Projection,
    Knots,
    Weights,
    Bias,
}

impl Tensor {
    pub const ALL: [Tensor; 5] = [
        Tensor::Hidden,
        Tensor::Projection,
        Tensor::Knots,
        Tensor::Weights,
        Tensor::Bias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tensor::Hidden => "W_h",
            Tensor::Projection => "w_a",
            Tensor::Knots => "knots",
            Tensor::Weights => "W",
            Tensor::Bias => "b",
        }
    }

    pub fn is_attention(self) -> bool {
        matches!(self, Tensor::Hidden | Tensor::Projection | Tensor::Knots)
    }

    fn regularized(self, reg: &Regularization) -> bool {
        match self {
            Tensor::Knots => reg.knots,
            Tensor::Bias => reg.bias,
            _ => true,
        }
    }
}

impl ModelParams {
    pub fn tensor(&self, t: Tensor) -> &[f64] {
        match t {
            Tensor::Hidden => self.content.hidden.as_slice(),
            Tensor::Projection => &self.content.projection,
            Tensor::Knots => &self.dynamic.knots,
            Tensor::Weights => &self.classifier.weights,
            Tensor::Bias => std::slice::from_ref(&self.classifier.bias),
        }
    }

    pub fn tensor_mut(&mut self, t: Tensor) -> &mut [f64] {
        match t {
            Tensor::Hidden => self.content.hidden.as_mut_slice(),
            Tensor::Projection => &mut self.content.projection,
            Tensor::Knots => &mut self.dynamic.knots,
            Tensor::Weights => &mut self.classifier.weights,
            Tensor::Bias => std::slice::from_mut(&mut self.classifier.bias),
        }
    }
}

/// Gradient buffers shaped like [`ModelParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub hidden: Matrix,
    pub projection: Vec<f64>,
    pub knots: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Gradients {
    pub fn zeros_like(p: &ModelParams) -> Self {
        Gradients {
            hidden: Matrix::zeros(p.content.hidden.rows(), p.content.hidden.cols()),
            projection: vec![0.0; p.content.projection.len()],
            knots: vec![0.0; p.dynamic.knots.len()],
            weights: vec![0.0; p.classifier.weights.len()],
            bias: 0.0,
        }
    }

    pub fn tensor(&self, t: Tensor) -> &[f64] {
        match t {
            Tensor::Hidden => self.hidden.as_slice(),
            Tensor::Projection => &self.projection,
            Tensor::Knots => &self.knots,
            Tensor::Weights => &self.weights,
            Tensor::Bias => std::slice::from_ref(&self.bias),
        }
    }

    pub fn tensor_mut(&mut self, t: Tensor) -> &mut [f64] {
        match t {
            Tensor::Hidden => self.hidden.as_mut_slice(),
            Tensor::Projection => &mut self.projection,
            Tensor::Knots => &mut self.knots,
            Tensor::Weights => &mut self.weights,
            Tensor::Bias => std::slice::from_mut(&mut self.bias),
        }
    }

    pub fn is_finite(&self) -> bool {
        Tensor::ALL
            .iter()
            .all(|&t| self.tensor(t).iter().all(|x| x.is_finite()))
    }
}

/// Analytic gradient of [`event_objective`] for one event, and its value.
pub fn backward(
    event: &Event,
    p: &ModelParams,
    reg: &Regularization,
    n_events: usize,
) -> Result<(Gradients, f64)> {
    let cache = forward_cached(event, p)?;
    let b = &cache.breakdown;
    let label = event.label().as_f64();
    let mut g = Gradients::zeros_like(p);

    // Clamping flattens the loss outside [ε, 1-ε].
    let clamped = b.score <= SCORE_EPSILON || b.score >= 1.0 - SCORE_EPSILON;
    let d_logit = if clamped { 0.0 } else { b.score - label };

    g.bias = d_logit;
    for (gw, r) in g.weights.iter_mut().zip(&b.representation) {
        *gw = d_logit * r;
    }

    // d/d(weight_j) = d_logit * W · f_j, then through the softmax.
    let d_weight: Vec<f64> = cache
        .features
        .columns()
        .iter()
        .map(|col| {
            d_logit
                * p.classifier
                    .weights
                    .iter()
                    .zip(col.iter())
                    .map(|(w, f)| w * f)
                    .sum::<f64>()
        })
        .collect();
    let mean: f64 = b.weights.iter().zip(&d_weight).map(|(v, dv)| v * dv).sum();
    let d_combined: Vec<f64> = b
        .weights
        .iter()
        .zip(&d_weight)
        .map(|(v, dv)| v * (dv - mean))
        .collect();

    let d = p.dim();
    let first = cache.features.first();
    for (j, &dz) in d_combined.iter().enumerate() {
        if dz == 0.0 {
            continue;
        }
        let hidden = cache.hidden.row(j);
        let col = cache.features.column(j);
        for (i, &h) in hidden.iter().enumerate() {
            g.projection[i] += dz * h;
            let d_pre = dz * p.content.projection[i] * (1.0 - h * h);
            let row = g.hidden.row_mut(i);
            for k in 0..d {
                row[k] += d_pre * first[k];
                row[d + k] += d_pre * col[k];
            }
        }
        let w = &cache.interpolation[j];
        g.knots[w.lower_index] += dz * w.lower_weight;
        g.knots[w.upper_index] += dz * w.upper_weight;
    }

    let share = reg.lambda / n_events as f64;
    if share != 0.0 {
        for t in Tensor::ALL {
            if t.regularized(reg) {
                for (gx, x) in g.tensor_mut(t).iter_mut().zip(p.tensor(t)) {
                    *gx += share * x;
                }
            }
        }
    }

    let objective = cross_entropy(event.label(), b.score) + reg.penalty(p) / n_events as f64;
    if !g.is_finite() {
        return Err(AimError::Numeric(format!(
            "gradient of event {}",
            event.id()
        )));
    }
    Ok((g, objective))
}

/// How attention and classifier updates are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternation {
    /// Whole epochs alternate between the two parameter groups.
    PerEpoch,
    /// Every step updates every parameter.
    Joint,
}

impl std::str::FromStr for Alternation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "per-epoch" => Ok(Alternation::PerEpoch),
            "joint" => Ok(Alternation::Joint),
            other => Err(format!(
                "unknown alternation {other:?} (expected per-epoch or joint)"
            )),
        }
    }
}

/// Parameter group updated during an epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Attention,
    Classifier,
    Joint,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Attention => "attention",
            Phase::Classifier => "classifier",
            Phase::Joint => "joint",
        }
    }

    fn updates(self, t: Tensor) -> bool {
        match self {
            Phase::Attention => t.is_attention(),
            Phase::Classifier => !t.is_attention(),
            Phase::Joint => true,
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "attention" => Ok(Phase::Attention),
            "classifier" => Ok(Phase::Classifier),
            other => Err(format!(
                "unknown phase {other:?} (expected attention or classifier)"
            )),
        }
    }
}

/// Model components that can be switched off for ablations. A disabled
/// component keeps its parameters at zero for the whole run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    /// Time-based dynamic attention (knots).
    pub dynamic_attention: bool,
    /// First-microblog half of the content-attention input.
    pub first_post_context: bool,
}

impl Default for Components {
    fn default() -> Self {
        Components {
            dynamic_attention: true,
            first_post_context: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub alternation: Alternation,
    /// Group updated in epoch 1 under per-epoch alternation.
    pub first_phase: Phase,
    pub seed: u64,
    pub init_scale: f64,
    pub regularize_knots: bool,
    pub regularize_bias: bool,
    pub components: Components,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.001,
            learning_rate: 0.01,
            max_epochs: 200,
            patience: 10,
            alternation: Alternation::PerEpoch,
            first_phase: Phase::Attention,
            seed: 0,
            init_scale: 0.1,
            regularize_knots: true,
            regularize_bias: false,
            components: Components::default(),
        }
    }
}

impl TrainConfig {
    pub fn regularization(&self) -> Regularization {
        Regularization {
            lambda: self.lambda,
            knots: self.regularize_knots,
            bias: self.regularize_bias,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(AimError::validation(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(AimError::validation(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(AimError::validation(format!(
                "init scale must be positive, got {}",
                self.init_scale
            )));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(AimError::validation(
                "max epochs and patience must be positive",
            ));
        }
        if self.first_phase == Phase::Joint {
            return Err(AimError::validation(
                "first phase must be attention or classifier",
            ));
        }
        Ok(())
    }

    /// Group updated in `epoch` (1-based).
    pub fn phase(&self, epoch: usize) -> Phase {
        match self.alternation {
            Alternation::Joint => Phase::Joint,
            Alternation::PerEpoch => {
                let other = match self.first_phase {
                    Phase::Attention => Phase::Classifier,
                    _ => Phase::Attention,
                };
                if epoch % 2 == 1 {
                    self.first_phase
                } else {
                    other
                }
            }
        }
    }

    fn frozen(&self, t: Tensor, index: usize, dim: usize) -> bool {
        match t {
            Tensor::Knots => !self.components.dynamic_attention,
            // Left half of each W_h row multiplies the first microblog.
            Tensor::Hidden => !self.components.first_post_context && index % (2 * dim) < dim,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    pub train_loss: f64,
    pub tune_loss: Option<f64>,
    pub tune_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest monitored loss.
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// Initial parameters: `W_h`, `w_a` uniform in `±init_scale`, everything
/// else zero. Frozen entries stay zero.
pub fn initialize(shape: &ModelShape, cfg: &TrainConfig, rng: &mut impl Rng) -> ModelParams {
    let mut p = ModelParams::zeros(shape);
    let s = cfg.init_scale;
    for (i, x) in p.content.hidden.as_mut_slice().iter_mut().enumerate() {
        let v = rng.gen_range(-s..=s);
        if !cfg.frozen(Tensor::Hidden, i, shape.dim) {
            *x = v;
        }
    }
    for x in p.content.projection.iter_mut() {
        *x = rng.gen_range(-s..=s);
    }
    p
}

fn accuracy(ds: &Dataset, p: &ModelParams) -> Result<f64> {
    let mut correct = 0usize;
    for e in ds.events() {
        let score = forward_cached(e, p)?.breakdown.score;
        if label_for_score(score, 0.5) == e.label() {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.len() as f64)
}

/// Trains with one-event SGD steps. Epoch order is shuffled from `cfg.seed`.
/// Stops after `max_epochs`, or once the tune loss (train loss when the tune
/// set is empty) has not improved for `patience` epochs.
pub fn train(
    train_ds: &Dataset,
    tune_ds: &Dataset,
    cfg: &TrainConfig,
    shape: &ModelShape,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    shape.validate()?;
    if train_ds.is_empty() {
        return Err(AimError::validation("no training events"));
    }
    if train_ds.dim() != shape.dim || tune_ds.dim() != shape.dim {
        return Err(AimError::dimension(
            "dataset features",
            shape.dim,
            train_ds.dim(),
        ));
    }
    if let Some(e) = tune_ds
        .events()
        .iter()
        .find(|e| train_ds.get(e.id()).is_some())
    {
        return Err(AimError::validation(format!(
            "event {} is in both the train and tune sets",
            e.id()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = initialize(shape, cfg, &mut rng);
    let reg = cfg.regularization();
    let n = train_ds.len();
    let mut order: Vec<usize> = (0..n).collect();

    let mut history = Vec::new();
    let mut best = (f64::INFINITY, params.clone(), 0usize);
    let mut stale = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let phase = cfg.phase(epoch);
        order.shuffle(&mut rng);
        for &i in &order {
            let (g, _) = backward(&train_ds.events()[i], &params, &reg, n)?;
            for t in Tensor::ALL {
                if !phase.updates(t) {
                    continue;
                }
                let grad = g.tensor(t);
                for (k, x) in params.tensor_mut(t).iter_mut().enumerate() {
                    if !cfg.frozen(t, k, shape.dim) {
                        *x -= cfg.learning_rate * grad[k];
                    }
                }
            }
        }

        let train_loss = loss_with(train_ds, &params, &reg)?;
        let (tune_loss, tune_accuracy) = if tune_ds.is_empty() {
            (None, None)
        } else {
            (
                Some(loss_with(tune_ds, &params, &reg)?),
                Some(accuracy(tune_ds, &params)?),
            )
        };
        if !train_loss.is_finite() {
            return Err(AimError::Numeric(format!("training loss at epoch {epoch}")));
        }
        history.push(EpochRecord {
            epoch,
            phase,
            train_loss,
            tune_loss,
            tune_accuracy,
        });

        let monitored = tune_loss.unwrap_or(train_loss);
        if monitored < best.0 {
            best = (monitored, params.clone(), epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        params: best.1,
        history,
        best_epoch: best.2,
    })
}

/// CSV with header `epoch,phase,train_loss,tune_loss,tune_accuracy`.
pub fn write_history_csv(history: &[EpochRecord], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "epoch,phase,train_loss,tune_loss,tune_accuracy")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in history {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.epoch,
            r.phase.as_str(),
            r.train_loss,
            opt(r.tune_loss),
            opt(r.tune_accuracy)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Microblog;

    fn shape() -> ModelShape {
        ModelShape {
            dim: 2,
            hidden_dim: 2,
            horizon_bins: 3,
            bin_width_secs: 3600.0,
        }
    }

    fn ev(id: &str, label: Label, cols: &[[f64; 2]], times: &[i64]) -> Event {
        let mbs = cols
            .iter()
            .zip(times)
            .enumerate()
            .map(|(j, (c, &t))| Microblog::with_features(format!("{id}-{j}"), t, c.to_vec()))
            .collect();
        Event::new(id, label, mbs).unwrap()
    }

    fn toy(n: usize) -> Dataset {
        let events = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                let label = if i % 2 == 0 {
                    Label::Misinformation
                } else {
                    Label::True
                };
                let k = i as f64 * 0.1;
                ev(
                    &format!("e{i}"),
                    label,
                    &[[0.2 - k, 0.1], [s * 1.5, 0.3 + k], [-0.4, s * 0.5]],
                    &[0, 1800, 5400 + 60 * i as i64],
                )
            })
            .collect();
        Dataset::new(events, 2).unwrap()
    }

    #[test]
    fn zero_model_loss_is_n_ln2() {
        let ds = toy(6);
        let p = ModelParams::zeros(&shape());
        let l = loss(&ds, &p, 0.0).unwrap();
        assert!((l - 6.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_loss() {
        let ds =
            Dataset::new(vec![ev("e", Label::Misinformation, &[[1.0, 0.0]], &[0])], 2).unwrap();
        let mut p = ModelParams::zeros(&shape());
        p.classifier.bias = 40.0;
        assert!(loss(&ds, &p, 0.0).unwrap() < 1e-12);
    }

    #[test]
    fn bias_gradient_at_half_score() {
        let p = ModelParams::zeros(&shape());
        let reg = Regularization::new(0.0);
        let e1 = ev(
            "a",
            Label::Misinformation,
            &[[1.0, 2.0], [0.0, 1.0]],
            &[0, 10],
        );
        let e0 = ev("b", Label::True, &[[1.0, 2.0]], &[0]);
        assert_eq!(backward(&e1, &p, &reg, 1).unwrap().0.bias, -0.5);
        assert_eq!(backward(&e0, &p, &reg, 1).unwrap().0.bias, 0.5);
    }

    #[test]
    fn shared_features_block_attention_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut p = initialize(&shape(), &TrainConfig::default(), &mut rng);
        p.classifier.weights = vec![0.7, -1.3];
        p.dynamic.knots = vec![0.2, -0.4, 0.9, 0.1];
        let e = ev(
            "same",
            Label::Misinformation,
            &[[0.3, -0.8], [0.3, -0.8], [0.3, -0.8]],
            &[0, 4000, 9000],
        );
        let (g, _) = backward(&e, &p, &Regularization::new(0.0), 1).unwrap();
        assert!(g.hidden.as_slice().iter().all(|&x| x.abs() < 1e-15));
        assert!(g.projection.iter().all(|&x| x.abs() < 1e-15));
        assert!(g.knots.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn knot_gradient_is_local() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = ModelShape {
            horizon_bins: 8,
            ..shape()
        };
        let mut p = initialize(&s, &TrainConfig::default(), &mut rng);
        p.classifier.weights = vec![1.1, -0.6];
        let e = ev(
            "loc",
            Label::True,
            &[[0.3, -0.8], [1.0, 0.5], [-0.2, 0.9]],
            &[0, 4000, 9000],
        );
        let (g, _) = backward(&e, &p, &Regularization::new(0.0), 1).unwrap();
        // Touched knots: 0 (t=0), 1 and 2 (t=4000), 2 and 3 (t=9000).
        for (k, &x) in g.knots.iter().enumerate() {
            if k > 3 {
                assert_eq!(x, 0.0, "knot {k}");
            }
        }
        assert!(g.knots[1] != 0.0 && g.knots[3] != 0.0);
    }

    #[test]
    fn phases_alternate() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.phase(1), Phase::Attention);
        assert_eq!(cfg.phase(2), Phase::Classifier);
        assert_eq!(cfg.phase(3), Phase::Attention);
        let cfg = TrainConfig {
            first_phase: Phase::Classifier,
            ..cfg
        };
        assert_eq!(cfg.phase(1), Phase::Classifier);
        let cfg = TrainConfig {
            alternation: Alternation::Joint,
            ..cfg
        };
        assert_eq!(cfg.phase(4), Phase::Joint);
    }

    #[test]
    fn empty_train_set_is_rejected() {
        let err = train(
            &Dataset::empty(2),
            &Dataset::empty(2),
            &TrainConfig::default(),
            &shape(),
        );
        assert!(matches!(err, Err(AimError::Validation(_))));
    }

    #[test]
    fn overlapping_sets_are_rejected() {
        let ds = toy(4);
        assert!(train(&ds, &ds, &TrainConfig::default(), &shape()).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let ds = toy(10);
        let cfg = TrainConfig {
            max_epochs: 15,
            seed: 3,
            ..TrainConfig::default()
        };
        let a = train(&ds, &Dataset::empty(2), &cfg, &shape()).unwrap();
        let b = train(&ds, &Dataset::empty(2), &cfg, &shape()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn joint_full_pass_loss_does_not_increase() {
        let ds = toy(10);
        let cfg = TrainConfig {
            lambda: 0.0,
            learning_rate: 1e-3,
            max_epochs: 20,
            patience: 20,
            alternation: Alternation::Joint,
            seed: 8,
            ..TrainConfig::default()
        };
        let out = train(&ds, &Dataset::empty(2), &cfg, &shape()).unwrap();
        assert_eq!(out.history.len(), 20);
        let mut prev = loss(
            &ds,
            &initialize(&shape(), &cfg, &mut ChaCha8Rng::seed_from_u64(8)),
            0.0,
        )
        .unwrap();
        for r in &out.history {
            assert!(
                r.train_loss <= prev + 1e-8,
                "epoch {}: {} > {}",
                r.epoch,
                r.train_loss,
                prev
            );
            prev = r.train_loss;
        }
    }

    #[test]
    fn heavy_regularization_shrinks_parameters() {
        let ds = toy(10);
        let s = shape();
        let cfg = TrainConfig {
            lambda: 1e3,
            learning_rate: 1e-4,
            max_epochs: 40,
            patience: 40,
            seed: 2,
            ..TrainConfig::default()
        };
        let init = initialize(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed));
        let out = train(&ds, &Dataset::empty(2), &cfg, &s).unwrap();
        let last = &out.params;
        for t in [Tensor::Hidden, Tensor::Projection] {
            assert!(
                squared_norm(last.tensor(t)) < squared_norm(init.tensor(t)),
                "{}",
                t.name()
            );
        }
        // W and the knots start at zero and must stay tiny under the penalty.
        assert!(squared_norm(last.tensor(Tensor::Weights)).sqrt() < cfg.init_scale);
        assert!(squared_norm(last.tensor(Tensor::Knots)).sqrt() < cfg.init_scale);
    }

    #[test]
    fn ablated_components_stay_zero() {
        let ds = toy(10);
        let cfg = TrainConfig {
            max_epochs: 6,
            components: Components {
                dynamic_attention: false,
                first_post_context: false,
            },
            ..TrainConfig::default()
        };
        let out = train(&ds, &Dataset::empty(2), &cfg, &shape()).unwrap();
        assert!(out.params.dynamic.knots.iter().all(|&x| x == 0.0));
        for i in 0..out.params.content.hidden.rows() {
            assert_eq!(&out.params.content.hidden.row(i)[..2], &[0.0, 0.0]);
        }
    }

    #[test]
    fn history_csv_layout() {
        let h = vec![EpochRecord {
            epoch: 1,
            phase: Phase::Attention,
            train_loss: 1.5,
            tune_loss: None,
            tune_accuracy: Some(0.75),
        }];
        let mut buf = Vec::new();
        write_history_csv(&h, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,phase,train_loss,tune_loss,tune_accuracy\n1,attention,1.5,,0.75\n"
        );
    }
}

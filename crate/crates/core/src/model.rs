//! Forward pass: combined attention, softmax weights, pooled event
//! representation and logistic score.

use serde::{Deserialize, Serialize};

use crate::attention::{
    content_hidden, interpolation_weights, ContentAttentionParams, DynamicAttentionParams,
    EventFeatures, InterpolationWeights, DEFAULT_BIN_WIDTH_SECS, DEFAULT_HORIZON_BINS,
};
use crate::data::{Event, Label};
use crate::error::{AimError, Result};
use crate::matrix::{dot, Matrix};

pub const DEFAULT_DIM: usize = 50;
pub const DEFAULT_HIDDEN_DIM: usize = 40;

/// Sizes that determine every parameter tensor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelShape {
    pub dim: usize,
    pub hidden_dim: usize,
    pub horizon_bins: usize,
    pub bin_width_secs: f64,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            dim: DEFAULT_DIM,
            hidden_dim: DEFAULT_HIDDEN_DIM,
            horizon_bins: DEFAULT_HORIZON_BINS,
            bin_width_secs: DEFAULT_BIN_WIDTH_SECS,
        }
    }
}

impl ModelShape {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.hidden_dim == 0 || self.horizon_bins == 0 {
            return Err(AimError::validation(
                "dimension, hidden dimension and horizon bins must be positive",
            ));
        }
        if !(self.bin_width_secs.is_finite() && self.bin_width_secs > 0.0) {
            return Err(AimError::validation("bin width must be positive"));
        }
        Ok(())
    }
}

/// Logistic classifier over the pooled representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Every learnable parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub content: ContentAttentionParams,
    pub dynamic: DynamicAttentionParams,
    pub classifier: ClassifierParams,
}

impl ModelParams {
    pub fn zeros(shape: &ModelShape) -> Self {
        ModelParams {
            content: ContentAttentionParams::zeros(shape.dim, shape.hidden_dim),
            dynamic: DynamicAttentionParams::zeros(shape.horizon_bins, shape.bin_width_secs),
            classifier: ClassifierParams {
                weights: vec![0.0; shape.dim],
                bias: 0.0,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.classifier.weights.len()
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            dim: self.dim(),
            hidden_dim: self.content.hidden_dim(),
            horizon_bins: self.dynamic.horizon_bins(),
            bin_width_secs: self.dynamic.bin_width_secs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.content.validate()?;
        self.dynamic.validate()?;
        if self.content.dim() != self.dim() {
            return Err(AimError::dimension(
                "classifier weights vs content attention",
                self.content.dim(),
                self.dim(),
            ));
        }
        if !self.classifier.bias.is_finite()
            || self.classifier.weights.iter().any(|x| !x.is_finite())
        {
            return Err(AimError::Numeric("classifier parameters".into()));
        }
        Ok(())
    }
}

/// Per-microblog decomposition of one forward pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionBreakdown {
    pub content_values: Vec<f64>,
    pub dynamic_values: Vec<f64>,
    pub weights: Vec<f64>,
    pub representation: Vec<f64>,
    pub score: f64,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-subtracted softmax.
pub fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Intermediates kept for the backward pass.
pub(crate) struct ForwardCache<'a> {
    pub features: EventFeatures<'a>,
    pub hidden: Matrix,
    pub interpolation: Vec<InterpolationWeights>,
    pub breakdown: AttentionBreakdown,
}

pub(crate) fn forward_cached<'a>(event: &'a Event, p: &ModelParams) -> Result<ForwardCache<'a>> {
    let features = EventFeatures::from_event(event, p.dim())?;
    let hidden = content_hidden(&features, &p.content)?;
    let content_values: Vec<f64> = (0..hidden.rows())
        .map(|j| dot(&p.content.projection, hidden.row(j)))
        .collect();
    let interpolation: Vec<InterpolationWeights> = features
        .deltas()
        .iter()
        .map(|&t| interpolation_weights(t, &p.dynamic))
        .collect();
    let dynamic_values: Vec<f64> = interpolation
        .iter()
        .map(|w| w.apply(&p.dynamic.knots))
        .collect();
    let combined: Vec<f64> = content_values
        .iter()
        .zip(&dynamic_values)
        .map(|(c, t)| c + t)
        .collect();
    let weights = softmax(&combined);

    let mut representation = vec![0.0; p.dim()];
    for (col, &w) in features.columns().iter().zip(&weights) {
        for (r, &f) in representation.iter_mut().zip(col.iter()) {
            *r += w * f;
        }
    }
    let score = sigmoid(dot(&p.classifier.weights, &representation) + p.classifier.bias);

    if !score.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(AimError::Numeric(format!(
            "forward pass of event {}",
            event.id()
        )));
    }

    Ok(ForwardCache {
        features,
        hidden,
        interpolation,
        breakdown: AttentionBreakdown {
            content_values,
            dynamic_values,
            weights,
            representation,
            score,
        },
    })
}

/// Runs the model on one featurized event.
pub fn forward(event: &Event, p: &ModelParams) -> Result<AttentionBreakdown> {
    forward_cached(event, p).map(|c| c.breakdown)
}

/// Label 1 (misinformation) iff the score is at least `threshold`.
pub fn predict(event: &Event, p: &ModelParams, threshold: f64) -> Result<Label> {
    Ok(label_for_score(forward(event, p)?.score, threshold))
}

pub fn label_for_score(score: f64, threshold: f64) -> Label {
    if score >= threshold {
        Label::Misinformation
    } else {
        Label::True
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Microblog;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shape(dim: usize) -> ModelShape {
        ModelShape {
            dim,
            hidden_dim: 3,
            horizon_bins: 4,
            bin_width_secs: 3600.0,
        }
    }

    fn event_from(cols: &[Vec<f64>], times: &[i64]) -> Event {
        let mbs = cols
            .iter()
            .zip(times)
            .enumerate()
            .map(|(j, (c, &t))| Microblog::with_features(format!("m{j}"), t, c.clone()))
            .collect();
        Event::new("e", Label::True, mbs).unwrap()
    }

    fn random_params(rng: &mut ChaCha8Rng, s: &ModelShape) -> ModelParams {
        let mut p = ModelParams::zeros(s);
        p.content
            .hidden
            .as_mut_slice()
            .iter_mut()
            .for_each(|x| *x = rng.gen_range(-1.0..1.0));
        p.content
            .projection
            .iter_mut()
            .for_each(|x| *x = rng.gen_range(-2.0..2.0));
        p.dynamic
            .knots
            .iter_mut()
            .for_each(|x| *x = rng.gen_range(-2.0..2.0));
        p.classifier
            .weights
            .iter_mut()
            .for_each(|x| *x = rng.gen_range(-1.0..1.0));
        p.classifier.bias = rng.gen_range(-1.0..1.0);
        p
    }

    #[test]
    fn single_microblog_gets_all_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_params(&mut rng, &shape(3));
        let e = event_from(&[vec![0.1, -0.2, 0.3]], &[10]);
        let b = forward(&e, &p).unwrap();
        assert_eq!(b.weights, vec![1.0]);
        assert_eq!(b.representation, vec![0.1, -0.2, 0.3]);
    }

    #[test]
    fn zero_classifier_scores_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = random_params(&mut rng, &shape(2));
        p.classifier.weights = vec![0.0; 2];
        p.classifier.bias = 0.0;
        let e = event_from(&[vec![1.0, 2.0], vec![3.0, -4.0]], &[0, 100]);
        assert_eq!(forward(&e, &p).unwrap().score, 0.5);
        assert_eq!(predict(&e, &p, 0.5).unwrap(), Label::Misinformation);

        p.classifier.bias = 10.0;
        assert_eq!(predict(&e, &p, 0.5).unwrap(), Label::Misinformation);
        p.classifier.bias = -10.0;
        assert_eq!(predict(&e, &p, 0.5).unwrap(), Label::True);
    }

    #[test]
    fn zero_params_pool_to_mean() {
        let p = ModelParams::zeros(&shape(2));
        let e = event_from(
            &[vec![1.0, 2.0], vec![3.0, -4.0], vec![-1.0, 5.0]],
            &[0, 5, 9000],
        );
        let b = forward(&e, &p).unwrap();
        for w in &b.weights {
            assert_relative_eq!(*w, 1.0 / 3.0, max_relative = 1e-15);
        }
        assert_relative_eq!(b.representation[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(b.representation[1], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn unfeaturized_event_is_rejected() {
        let e = Event::new("e", Label::True, vec![Microblog::with_text("m", 0, "hi")]).unwrap();
        assert!(forward(&e, &ModelParams::zeros(&shape(2))).is_err());
    }

    #[test]
    fn softmax_handles_large_values() {
        let w = softmax(&[1000.0, 1000.0, -1000.0]);
        assert_eq!(w, vec![0.5, 0.5, 0.0]);
    }

    proptest! {
        #[test]
        fn weights_form_convex_combination(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = shape(3);
            let p = random_params(&mut rng, &s);
            let cols: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
            let mut times: Vec<i64> = (0..n).map(|_| rng.gen_range(0..20_000)).collect();
            times.sort();
            let e = event_from(&cols, &times);
            let b = forward(&e, &p).unwrap();
            let total: f64 = b.weights.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(b.weights.iter().all(|&w| w >= 0.0));
            for k in 0..3 {
                let lo = cols.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min);
                let hi = cols.iter().map(|c| c[k]).fold(f64::NEG_INFINITY, f64::max);
                let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
                prop_assert!(b.representation[k] >= lo - slack && b.representation[k] <= hi + slack);
            }
        }

        #[test]
        fn softmax_shift_invariance(values in proptest::collection::vec(-50.0f64..50.0, 1..10), shift in -100.0f64..100.0) {
            let a = softmax(&values);
            let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
            let b = softmax(&shifted);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()));
            }
        }
    }
}

//! The planted-signal generator produces data a simple model can learn.

use aim_core::data::{split, Label, SplitSpec};
use aim_core::eval::evaluate;
use aim_core::synth::{generate, SynthConfig};
use aim_core::train::{Alternation, Components, TrainConfig};
use aim_core::{train, ModelShape};

fn no_attention() -> TrainConfig {
    TrainConfig {
        max_epochs: 60,
        alternation: Alternation::Joint,
        components: Components {
            dynamic_attention: false,
            first_post_context: false,
        },
        ..TrainConfig::default()
    }
}

#[test]
fn all_signal_events_are_separable_by_mean_pooling() {
    let out = generate(&SynthConfig {
        n_events: 120,
        n_posts_range: (5, 10),
        dim: 10,
        signal_fraction: 1.0,
        seed: 4,
        ..SynthConfig::default()
    })
    .unwrap();
    let (tune, tr, test) = split(&out.dataset, &SplitSpec::default()).unwrap();
    let shape = ModelShape {
        dim: 10,
        hidden_dim: 2,
        ..ModelShape::default()
    };
    let mut cfg = no_attention();
    // Zero attention parameters mean uniform weights: a mean-pool model.
    cfg.init_scale = 1e-300;
    let outcome = train(&tr, &tune, &cfg, &shape).unwrap();
    let report = evaluate(&test, &outcome.params, 0.5).unwrap();
    assert!(report.accuracy >= 0.95, "accuracy {}", report.accuracy);
}

#[test]
fn sidecar_marks_shifted_posts() {
    let out = generate(&SynthConfig {
        n_events: 40,
        dim: 6,
        seed: 8,
        ..SynthConfig::default()
    })
    .unwrap();
    let (mut marked, mut unmarked) = (Vec::new(), Vec::new());
    for e in out.dataset.events() {
        let sign = if e.label() == Label::Misinformation {
            1.0
        } else {
            -1.0
        };
        for m in e.microblogs() {
            let f = m.features.as_ref().unwrap();
            let proj: f64 = f.iter().zip(&out.direction).map(|(a, b)| a * b).sum();
            if out.signals[e.id()].contains(&m.id) {
                marked.push(sign * proj);
            } else {
                unmarked.push(sign * proj);
            }
        }
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    assert!(mean(&marked) > 2.0, "signal mean {}", mean(&marked));
    assert!(
        mean(&unmarked).abs() < 0.5,
        "noise mean {}",
        mean(&unmarked)
    );
}

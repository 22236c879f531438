//! Behaviour of the all-zero model and of attention shifts.

use aim_core::synth::{generate, random_instance, InstanceLimits, SynthConfig};
use aim_core::train::loss;
use aim_core::{forward, ModelParams, ModelShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_synth() -> SynthConfig {
    SynthConfig {
        n_events: 40,
        n_posts_range: (3, 12),
        dim: 8,
        seed: 3,
        ..SynthConfig::default()
    }
}

#[test]
fn zero_model_scores_one_half_and_loses_n_ln2() {
    let ds = generate(&small_synth()).unwrap().dataset;
    let p = ModelParams::zeros(&ModelShape {
        dim: 8,
        ..ModelShape::default()
    });
    for e in ds.events() {
        let b = forward(e, &p).unwrap();
        assert_eq!(b.score, 0.5);
        let uniform = 1.0 / e.len() as f64;
        assert!(b.weights.iter().all(|w| (w - uniform).abs() < 1e-15));
    }
    let expected = ds.len() as f64 * std::f64::consts::LN_2;
    assert!((loss(&ds, &p, 0.0).unwrap() - expected).abs() <= 1e-12);
}

#[test]
fn adding_a_constant_to_all_knots_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (event, p) = random_instance(&mut rng, &InstanceLimits::default());
        let base = forward(&event, &p).unwrap();
        let mut shifted = p.clone();
        shifted.dynamic.knots.iter_mut().for_each(|k| *k += 3.7);
        let moved = forward(&event, &shifted).unwrap();
        for (a, b) in base.weights.iter().zip(&moved.weights) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300));
        }
        assert!((base.score - moved.score).abs() <= 1e-12);
    }
}

#[test]
fn weights_sum_to_one_and_pool_is_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let limits = InstanceLimits {
        param_scale: 5.0,
        ..InstanceLimits::default()
    };
    for _ in 0..500 {
        let (event, p) = random_instance(&mut rng, &limits);
        let b = forward(&event, &p).unwrap();
        assert!((b.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        for k in 0..p.dim() {
            let col = event
                .microblogs()
                .iter()
                .map(|m| m.features.as_ref().unwrap()[k]);
            let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| {
                (l.min(x), h.max(x))
            });
            assert!(b.representation[k] >= lo - 1e-12 && b.representation[k] <= hi + 1e-12);
        }
    }
}

//! Attention inspection: the learned dynamic-attention curve and the
//! highest-weighted microblogs of an event.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::attention::dynamic_attention;
use crate::data::Event;
use crate::error::{AimError, Result};
use crate::model::{forward, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub secs: f64,
    pub raw: f64,
    pub normalized: f64,
}

/// Dynamic attention sampled over `[0, KΔ]`, min-max normalized to `[0, 1]`.
/// A constant curve normalizes to 0.5 everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicCurve {
    pub samples: Vec<CurveSample>,
    pub min: f64,
    pub max: f64,
}

impl DynamicCurve {
    /// CSV with header `seconds,raw_value,normalized_value`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "seconds,raw_value,normalized_value")?;
        for s in &self.samples {
            writeln!(w, "{},{},{}", s.secs, s.raw, s.normalized)?;
        }
        Ok(())
    }
}

pub fn dynamic_curve(p: &ModelParams, step_secs: f64) -> Result<DynamicCurve> {
    let width = p.dynamic.bin_width_secs;
    if !(step_secs > 0.0 && step_secs <= width) {
        return Err(AimError::validation(format!(
            "curve step must be in (0, {width}], got {step_secs}"
        )));
    }
    let horizon = p.dynamic.horizon_secs();
    let steps = (horizon / step_secs).floor() as usize;
    let mut times: Vec<f64> = (0..=steps).map(|i| i as f64 * step_secs).collect();
    if *times.last().unwrap() < horizon {
        times.push(horizon);
    }
    let raw = dynamic_attention(&times, &p.dynamic)?;
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let samples = times
        .into_iter()
        .zip(raw)
        .map(|(secs, raw)| CurveSample {
            secs,
            raw,
            normalized: if max > min {
                (raw - min) / (max - min)
            } else {
                0.5
            },
        })
        .collect();
    Ok(DynamicCurve { samples, min, max })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKEntry {
    pub microblog_id: String,
    pub posted_at: i64,
    pub weight: f64,
    pub content_value: f64,
    pub dynamic_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKListing {
    pub event_id: String,
    pub k: usize,
    pub entries: Vec<TopKEntry>,
}

/// The `k` microblogs with the largest attention weights, heaviest first.
/// Ties go to the earlier post, then the smaller id.
pub fn top_k(event: &Event, p: &ModelParams, k: usize) -> Result<TopKListing> {
    if k == 0 {
        return Err(AimError::validation("k must be positive"));
    }
    let b = forward(event, p)?;
    let mut entries: Vec<TopKEntry> = event
        .microblogs()
        .iter()
        .enumerate()
        .map(|(j, m)| TopKEntry {
            microblog_id: m.id.clone(),
            posted_at: m.posted_at,
            weight: b.weights[j],
            content_value: b.content_values[j],
            dynamic_value: b.dynamic_values[j],
            text: m.text.clone(),
        })
        .collect();
    entries.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then(a.posted_at.cmp(&b.posted_at))
            .then_with(|| a.microblog_id.cmp(&b.microblog_id))
    });
    entries.truncate(k);
    Ok(TopKListing {
        event_id: event.id().to_string(),
        k,
        entries,
    })
}

//! Per-microblog attention values.
//!
//! Content attention scores each microblog from its features paired with the
//! event's first microblog, through a `tanh` hidden layer:
//! `value_j = w_a · tanh(W_h [f_1; f_j])`.
//!
//! Dynamic attention scores each microblog from the time elapsed since the
//! event start. Learnable knot values sit on bin boundaries `0, Δ, ..., KΔ`
//! and values in between are linearly interpolated. Past `KΔ` the last knot
//! value is used.

use serde::{Deserialize, Serialize};

use crate::data::Event;
use crate::error::{AimError, Result};
use crate::matrix::{dot, Matrix};

pub const DEFAULT_BIN_WIDTH_SECS: f64 = 3600.0;
pub const DEFAULT_HORIZON_BINS: usize = 96;

/// `W_h` (`d_h × 2d`, left half acting on the first microblog) and `w_a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContentAttentionParams {
    pub hidden: Matrix,
    pub projection: Vec<f64>,
}

impl ContentAttentionParams {
    pub fn zeros(dim: usize, hidden_dim: usize) -> Self {
        ContentAttentionParams {
            hidden: Matrix::zeros(hidden_dim, 2 * dim),
            projection: vec![0.0; hidden_dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.hidden.cols() / 2
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden.rows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim() == 0 {
            return Err(AimError::validation("hidden dimension must be positive"));
        }
        if !self.hidden.cols().is_multiple_of(2) || self.hidden.cols() == 0 {
            return Err(AimError::validation(format!(
                "hidden projection needs 2d columns, got {}",
                self.hidden.cols()
            )));
        }
        if self.projection.len() != self.hidden_dim() {
            return Err(AimError::dimension(
                "attention projection",
                self.hidden_dim(),
                self.projection.len(),
            ));
        }
        if !self
            .hidden
            .as_slice()
            .iter()
            .chain(&self.projection)
            .all(|x| x.is_finite())
        {
            return Err(AimError::Numeric("content attention parameters".into()));
        }
        Ok(())
    }
}

/// Knot values on bin boundaries `0, Δ, 2Δ, ..., KΔ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicAttentionParams {
    pub knots: Vec<f64>,
    pub bin_width_secs: f64,
}

impl DynamicAttentionParams {
    pub fn zeros(horizon_bins: usize, bin_width_secs: f64) -> Self {
        DynamicAttentionParams {
            knots: vec![0.0; horizon_bins + 1],
            bin_width_secs,
        }
    }

    /// `K`, the number of bins covered by knots.
    pub fn horizon_bins(&self) -> usize {
        self.knots.len().saturating_sub(1)
    }

    pub fn horizon_secs(&self) -> f64 {
        self.horizon_bins() as f64 * self.bin_width_secs
    }

    pub fn validate(&self) -> Result<()> {
        if self.knots.len() < 2 {
            return Err(AimError::validation(
                "dynamic attention needs at least one bin",
            ));
        }
        if !(self.bin_width_secs.is_finite() && self.bin_width_secs > 0.0) {
            return Err(AimError::validation(format!(
                "bin width must be positive, got {}",
                self.bin_width_secs
            )));
        }
        if self.knots.iter().any(|x| !x.is_finite()) {
            return Err(AimError::Numeric("dynamic attention knots".into()));
        }
        Ok(())
    }
}

impl Default for DynamicAttentionParams {
    fn default() -> Self {
        DynamicAttentionParams::zeros(DEFAULT_HORIZON_BINS, DEFAULT_BIN_WIDTH_SECS)
    }
}

/// Feature columns and elapsed times of one event. The event-context matrix
/// (first microblog broadcast to every column) is implied by [`first`].
///
/// [`first`]: EventFeatures::first
#[derive(Clone, Debug)]
pub struct EventFeatures<'a> {
    columns: Vec<&'a [f64]>,
    deltas: Vec<f64>,
}

impl<'a> EventFeatures<'a> {
    pub fn from_event(event: &'a Event, dim: usize) -> Result<Self> {
        let columns = event
            .microblogs()
            .iter()
            .map(|m| match &m.features {
                Some(f) if f.len() == dim => Ok(f.as_slice()),
                Some(f) => Err(AimError::dimension(
                    format!("event {}, microblog {}", event.id(), m.id),
                    dim,
                    f.len(),
                )),
                None => Err(AimError::validation(format!(
                    "event {}, microblog {}: not featurized",
                    event.id(),
                    m.id
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EventFeatures {
            columns,
            deltas: event.deltas(),
        })
    }

    /// Builds features from raw columns. `deltas` must start at 0 and be
    /// non-decreasing.
    pub fn new(columns: Vec<&'a [f64]>, deltas: Vec<f64>) -> Result<Self> {
        if columns.is_empty() {
            return Err(AimError::validation("event has no microblogs"));
        }
        if columns.len() != deltas.len() {
            return Err(AimError::dimension(
                "elapsed times",
                columns.len(),
                deltas.len(),
            ));
        }
        let dim = columns[0].len();
        if let Some(c) = columns.iter().find(|c| c.len() != dim) {
            return Err(AimError::dimension("feature column", dim, c.len()));
        }
        if deltas[0] != 0.0 || deltas.windows(2).any(|w| w[1] < w[0]) {
            return Err(AimError::validation(
                "elapsed times must start at 0 and be non-decreasing",
            ));
        }
        Ok(EventFeatures { columns, deltas })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.columns[0].len()
    }

    pub fn column(&self, j: usize) -> &'a [f64] {
        self.columns[j]
    }

    pub fn columns(&self) -> &[&'a [f64]] {
        &self.columns
    }

    pub fn first(&self) -> &'a [f64] {
        self.columns[0]
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }
}

/// Hidden activations `tanh(W_h [f_1; f_j])`, one row per microblog.
pub(crate) fn content_hidden(ef: &EventFeatures<'_>, p: &ContentAttentionParams) -> Result<Matrix> {
    let d = ef.dim();
    if p.hidden.cols() != 2 * d {
        return Err(AimError::dimension(
            "content attention input (2d)",
            p.hidden.cols(),
            2 * d,
        ));
    }
    if p.projection.len() != p.hidden_dim() {
        return Err(AimError::dimension(
            "attention projection",
            p.hidden_dim(),
            p.projection.len(),
        ));
    }
    let first = ef.first();
    // The first-microblog half of the pre-activation is shared by every column.
    let context: Vec<f64> = (0..p.hidden_dim())
        .map(|i| dot(&p.hidden.row(i)[..d], first))
        .collect();
    let mut hidden = Matrix::zeros(ef.len(), p.hidden_dim());
    for (j, col) in ef.columns().iter().enumerate() {
        for (i, h) in hidden.row_mut(j).iter_mut().enumerate() {
            *h = (context[i] + dot(&p.hidden.row(i)[d..], col)).tanh();
        }
    }
    Ok(hidden)
}

/// Content attention value per microblog.
pub fn content_attention(ef: &EventFeatures<'_>, p: &ContentAttentionParams) -> Result<Vec<f64>> {
    let hidden = content_hidden(ef, p)?;
    Ok((0..hidden.rows())
        .map(|j| dot(&p.projection, hidden.row(j)))
        .collect())
}

/// Knot indices and their coefficients for one elapsed time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationWeights {
    pub lower_index: usize,
    pub lower_weight: f64,
    pub upper_index: usize,
    pub upper_weight: f64,
}

impl InterpolationWeights {
    pub fn apply(&self, knots: &[f64]) -> f64 {
        self.lower_weight * knots[self.lower_index] + self.upper_weight * knots[self.upper_index]
    }
}

/// Interpolation coefficients of the two knots enclosing `t_d`. Times at or
/// beyond the horizon put all weight on the last knot. Negative times are
/// treated as 0.
pub fn interpolation_weights(t_d: f64, p: &DynamicAttentionParams) -> InterpolationWeights {
    debug_assert!(t_d >= 0.0, "negative elapsed time {t_d}");
    let k = p.horizon_bins();
    let width = p.bin_width_secs;
    let pos = t_d.max(0.0) / width;
    if pos >= k as f64 {
        return InterpolationWeights {
            lower_index: k,
            lower_weight: 1.0,
            upper_index: k,
            upper_weight: 0.0,
        };
    }
    let lower = pos.floor() as usize;
    let lower_bound = lower as f64 * width;
    let upper_bound = lower_bound + width;
    let below = (t_d.max(0.0) - lower_bound).max(0.0);
    let above = (upper_bound - t_d.max(0.0)).max(0.0);
    let upper_weight = below / (above + below);
    InterpolationWeights {
        lower_index: lower,
        lower_weight: 1.0 - upper_weight,
        upper_index: lower + 1,
        upper_weight,
    }
}

/// Dynamic attention value per elapsed time.
pub fn dynamic_attention(deltas: &[f64], p: &DynamicAttentionParams) -> Result<Vec<f64>> {
    deltas
        .iter()
        .map(|&t| {
            if t.is_nan() || t < 0.0 {
                Err(AimError::validation(format!(
                    "elapsed time must be non-negative, got {t}"
                )))
            } else {
                Ok(interpolation_weights(t, p).apply(&p.knots))
            }
        })
        .collect()
}

//! Events, microblogs and datasets.
//!
//! Events are read from and written to a line-delimited JSON format with one
//! event per line:
//!
//! ```text
//! {"id": "e1", "label": 1, "microblogs": [{"id": "m1", "text": "...", "features": [0.1, ...], "posted_at": 1395359700}]}
//! ```
//!
//! Every microblog needs at least one of `text` or `features`. Timestamps are
//! integer seconds since the Unix epoch (UTC).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AimError, Result};

/// Event label. `Misinformation` is encoded as 1, `True` as 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    True,
    Misinformation,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        match self {
            Label::True => 0.0,
            Label::Misinformation => 1.0,
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Label::True),
            1 => Ok(Label::Misinformation),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        match l {
            Label::True => 0,
            Label::Misinformation => 1,
        }
    }
}

/// A single post: original microblog, repost or comment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Microblog {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
    pub posted_at: i64,
}

impl Microblog {
    pub fn with_features(id: impl Into<String>, posted_at: i64, features: Vec<f64>) -> Self {
        Microblog {
            id: id.into(),
            text: None,
            features: Some(features),
            posted_at,
        }
    }

    pub fn with_text(id: impl Into<String>, posted_at: i64, text: impl Into<String>) -> Self {
        Microblog {
            id: id.into(),
            text: Some(text.into()),
            features: None,
            posted_at,
        }
    }
}

/// A labelled event: a non-empty, time-ordered list of microblogs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EventRecord", into = "EventRecord")]
pub struct Event {
    id: String,
    label: Label,
    microblogs: Vec<Microblog>,
}

#[derive(Serialize, Deserialize)]
struct EventRecord {
    id: String,
    label: Label,
    microblogs: Vec<Microblog>,
}

impl TryFrom<EventRecord> for Event {
    type Error = AimError;

    fn try_from(r: EventRecord) -> Result<Self> {
        Event::new(r.id, r.label, r.microblogs)
    }
}

impl From<Event> for EventRecord {
    fn from(e: Event) -> Self {
        EventRecord {
            id: e.id,
            label: e.label,
            microblogs: e.microblogs,
        }
    }
}

impl Event {
    /// Builds an event, stably sorting microblogs by `posted_at`.
    pub fn new(
        id: impl Into<String>,
        label: Label,
        mut microblogs: Vec<Microblog>,
    ) -> Result<Self> {
        let id = id.into();
        if microblogs.is_empty() {
            return Err(AimError::validation(format!(
                "event {id}: empty microblog list"
            )));
        }
        microblogs.sort_by_key(|m| m.posted_at);
        Ok(Event {
            id,
            label,
            microblogs,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn microblogs(&self) -> &[Microblog] {
        &self.microblogs
    }

    pub fn len(&self) -> usize {
        self.microblogs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.microblogs.is_empty()
    }

    /// Posting time of the first microblog.
    pub fn start_time(&self) -> i64 {
        self.microblogs[0].posted_at
    }

    /// Seconds elapsed since the event start, per microblog.
    pub fn deltas(&self) -> Vec<f64> {
        let t1 = self.start_time();
        self.microblogs
            .iter()
            .map(|m| (m.posted_at - t1) as f64)
            .collect()
    }

    pub(crate) fn microblogs_mut(&mut self) -> &mut [Microblog] {
        &mut self.microblogs
    }

    /// Keeps the microblogs posted no later than `deadline_secs` after the
    /// event start. The first microblog is always kept.
    pub fn truncate(&self, deadline_secs: f64) -> Event {
        let t1 = self.start_time();
        let microblogs = self
            .microblogs
            .iter()
            .take_while(|m| ((m.posted_at - t1) as f64) <= deadline_secs)
            .cloned()
            .collect::<Vec<_>>();
        debug_assert!(!microblogs.is_empty() || deadline_secs.is_nan());
        Event {
            id: self.id.clone(),
            label: self.label,
            microblogs: if microblogs.is_empty() {
                vec![self.microblogs[0].clone()]
            } else {
                microblogs
            },
        }
    }
}

/// Free-function form of [`Event::truncate`].
pub fn truncate(event: &Event, deadline_secs: f64) -> Event {
    event.truncate(deadline_secs)
}

/// A collection of events sharing one feature dimensionality.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    events: Vec<Event>,
    dim: usize,
}

impl Dataset {
    pub fn new(events: Vec<Event>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(AimError::validation("feature dimension must be positive"));
        }
        let mut seen = HashSet::new();
        for e in &events {
            if !seen.insert(e.id.as_str()) {
                return Err(AimError::validation(format!("duplicate event id {}", e.id)));
            }
            for m in &e.microblogs {
                check_microblog(m, dim, &format!("event {}, microblog {}", e.id, m.id))?;
            }
        }
        Ok(Dataset { events, dim })
    }

    pub fn empty(dim: usize) -> Self {
        Dataset {
            events: Vec::new(),
            dim,
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.id == id)
    }

    pub(crate) fn events_mut(&mut self) -> &mut [Event] {
        &mut self.events
    }

    /// Applies [`Event::truncate`] to every event.
    pub fn truncate(&self, deadline_secs: f64) -> Dataset {
        Dataset {
            events: self
                .events
                .iter()
                .map(|e| e.truncate(deadline_secs))
                .collect(),
            dim: self.dim,
        }
    }

    /// Subset of events in the given order.
    fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            events: indices.iter().map(|&i| self.events[i].clone()).collect(),
            dim: self.dim,
        }
    }
}

fn check_microblog(m: &Microblog, dim: usize, context: &str) -> Result<()> {
    if m.text.is_none() && m.features.is_none() {
        return Err(AimError::validation(format!(
            "{context}: needs at least one of text or features"
        )));
    }
    if let Some(f) = &m.features {
        if f.len() != dim {
            return Err(AimError::dimension(context, dim, f.len()));
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(AimError::Numeric(format!("{context} features")));
        }
    }
    Ok(())
}

/// Reads a JSONL event file. Blank lines are skipped.
pub fn load_jsonl(path: impl AsRef<Path>, dim: usize) -> Result<Dataset> {
    let file = File::open(path)?;
    read_jsonl(BufReader::new(file), dim)
}

pub fn read_jsonl(reader: impl BufRead, dim: usize) -> Result<Dataset> {
    if dim == 0 {
        return Err(AimError::validation("feature dimension must be positive"));
    }
    let mut events = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EventRecord = serde_json::from_str(&line).map_err(|e| AimError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        for m in &record.microblogs {
            check_microblog(m, dim, &format!("line {line_no}, microblog {}", m.id))?;
        }
        let event =
            Event::new(record.id, record.label, record.microblogs).map_err(|e| match e {
                AimError::Validation(msg) => AimError::Validation(format!("line {line_no}: {msg}")),
                other => other,
            })?;
        if !seen.insert(event.id.clone()) {
            return Err(AimError::validation(format!(
                "line {line_no}: duplicate event id {}",
                event.id
            )));
        }
        events.push(event);
    }
    Ok(Dataset { events, dim })
}

/// Serializes one event as a single JSON line with sorted keys.
pub fn event_to_json_line(event: &Event) -> Result<String> {
    // `Value` objects are BTreeMaps, so keys come out sorted.
    let value = serde_json::to_value(event)?;
    Ok(serde_json::to_string(&value)?)
}

pub fn write_jsonl(ds: &Dataset, mut writer: impl Write) -> Result<()> {
    for e in &ds.events {
        writeln!(writer, "{}", event_to_json_line(e)?)?;
    }
    Ok(())
}

pub fn save_jsonl(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_jsonl(ds, &mut w)?;
    w.flush()?;
    Ok(())
}

/// How a dataset is divided into tuning, training and test partitions.
///
/// The tuning partition gets `floor(tune_fraction * n)` events. The rest is
/// split `train:test` with the test share rounded down, so any remainder
/// lands in training.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub tune_fraction: f64,
    pub train_test_ratio: (u32, u32),
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            tune_fraction: 0.10,
            train_test_ratio: (3, 1),
            seed: 0,
        }
    }
}

impl SplitSpec {
    /// Partition sizes `(tune, train, test)` for `n` events.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize)> {
        if !(0.0..1.0).contains(&self.tune_fraction) {
            return Err(AimError::validation(format!(
                "tune fraction must be in [0, 1), got {}",
                self.tune_fraction
            )));
        }
        let (a, b) = self.train_test_ratio;
        if a == 0 || b == 0 {
            return Err(AimError::validation(
                "train:test ratio terms must be positive",
            ));
        }
        let tune = (self.tune_fraction * n as f64).floor() as usize;
        let rest = n - tune;
        let test = rest * b as usize / (a as usize + b as usize);
        let train = rest - test;
        if n == 0 {
            return Err(AimError::validation("no events"));
        }
        if (self.tune_fraction > 0.0 && tune == 0) || train == 0 || test == 0 {
            return Err(AimError::validation(format!(
                "{n} events are too few for tune fraction {} and ratio {a}:{b}",
                self.tune_fraction
            )));
        }
        Ok((tune, train, test))
    }
}

/// Deterministic random partition into `(tune, train, test)`.
/// Each partition keeps the original relative order of its events.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let (tune, train, _test) = spec.sizes(ds.len())?;
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let mut parts = [
        order[..tune].to_vec(),
        order[tune..tune + train].to_vec(),
        order[tune + train..].to_vec(),
    ];
    for p in &mut parts {
        p.sort_unstable();
    }
    let [a, b, c] = parts;
    Ok((ds.select(&a), ds.select(&b), ds.select(&c)))
}

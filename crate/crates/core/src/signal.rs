//! Activation curves and beat sequences shared by every stage of the pipeline.

use crate::error::{Error, Result};

/// Per-frame beat probability curve sampled at a fixed frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationCurve {
    values: Vec<f64>,
    fps: f64,
    source_label: String,
}

/// Slack accepted outside `[0, 1]` before a value is treated as corrupt.
pub const RANGE_SLACK: f64 = 1e-6;

impl ActivationCurve {
    /// Builds a curve, clipping values within [`RANGE_SLACK`] of `[0, 1]`.
    pub fn new(values: Vec<f64>, fps: f64, source_label: impl Into<String>) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::CorruptActivation(format!(
                "frame rate must be positive, got {fps}"
            )));
        }
        if values.is_empty() {
            return Err(Error::CorruptActivation("curve has no frames".into()));
        }
        let mut values = values;
        for (i, v) in values.iter_mut().enumerate() {
            if !(v.is_finite() && *v >= -RANGE_SLACK && *v <= 1.0 + RANGE_SLACK) {
                return Err(Error::CorruptActivation(format!(
                    "frame {i}: value {v} outside [0, 1]"
                )));
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(ActivationCurve {
            values,
            fps,
            source_label: source_label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Duration covered by the curve in seconds.
    pub fn duration(&self) -> f64 {
        self.values.len() as f64 / self.fps
    }

    /// Frame index nearest to `seconds`, which may lie outside the curve.
    pub fn frame_of(&self, seconds: f64) -> i64 {
        (seconds * self.fps).round() as i64
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.source_label = label.into();
        self
    }
}

/// Ordered beat timestamps in seconds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeatSequence(Vec<f64>);

impl BeatSequence {
    /// Wraps timestamps that the caller guarantees are sorted.
    pub fn new(times: Vec<f64>) -> Self {
        debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        BeatSequence(times)
    }

    /// Sorts arbitrary timestamps before wrapping them.
    pub fn from_unsorted(mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        BeatSequence(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Inter-beat intervals in seconds.
    pub fn intervals(&self) -> Vec<f64> {
        self.0.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Drops beats earlier than `min_time` seconds.
    pub fn trimmed(&self, min_time: f64) -> BeatSequence {
        BeatSequence(self.0.iter().copied().filter(|&t| t >= min_time).collect())
    }

    /// Shifts every timestamp by `offset` seconds.
    pub fn shifted(&self, offset: f64) -> BeatSequence {
        BeatSequence(self.0.iter().map(|t| t + offset).collect())
    }
}

impl From<Vec<f64>> for BeatSequence {
    fn from(times: Vec<f64>) -> Self {
        BeatSequence::from_unsorted(times)
    }
}

impl AsRef<[f64]> for BeatSequence {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

//! Beat-tracking diagnostics: a bar-pointer DBN decoder, threshold peak
//! picking, beat evaluation metrics, activation diagnostics and the
//! corpus-level experiments built on them.

pub mod config;
pub mod dbn;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod ingest;
pub mod metrics;
pub mod peaks;
pub mod report;
pub mod signal;

pub use dbn::{decode, decode_constrained, BeatRegion, DbnConfig, TempoConstraint};
pub use error::{Error, Result};
pub use ingest::{load_dataset, Axis, AxisMap, BeatAnnotation, Dataset, DatasetLayout, TrackRecord};
pub use metrics::{evaluate, EvalConfig, EvalResult};
pub use peaks::{pick_peaks, PeakConfig};
pub use signal::{ActivationCurve, BeatSequence};

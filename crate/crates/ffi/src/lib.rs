//! C ABI over the beatdiag core.
//!
//! Activations and beat sequences are opaque heap handles created by the
//! `bd_*_new` / `bd_*_load` / decoder functions and released with the
//! matching `bd_*_free`. Every fallible call returns a [`BdStatus`]; on
//! failure [`bd_last_error_message`] describes the error for the calling
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use beatdiag::dbn::{decode, decode_constrained, BeatRegion, DbnConfig, TempoConstraint};
use beatdiag::experiments::{synthesize_gt_activation, SynthConfig};
use beatdiag::ingest::{load_activation, load_beats, BeatAnnotation};
use beatdiag::metrics::{evaluate, EvalConfig, EvalResult};
use beatdiag::peaks::{pick_peaks, PeakConfig};
use beatdiag::{ActivationCurve, BeatSequence, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    CorruptActivation = 5,
    Config = 6,
    InsufficientReference = 7,
    NoOverlap = 8,
    Constraint = 9,
    Panic = 10,
}

/// Opaque activation curve.
pub struct BdActivation(ActivationCurve);

/// Opaque beat sequence, times in seconds, ascending.
pub struct BdBeats(BeatSequence);

/// Beat-state count per period: `round(τ/λ)` or `ceil(τ/λ)`, at least 1.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdBeatRegion {
    Round = 0,
    Ceil = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdDbnConfig {
    pub min_bpm: f64,
    pub max_bpm: f64,
    pub transition_lambda: f64,
    pub observation_lambda: u32,
    pub correct_beats: bool,
    pub beat_region: BdBeatRegion,
}

impl From<BdDbnConfig> for DbnConfig {
    fn from(c: BdDbnConfig) -> Self {
        DbnConfig {
            min_bpm: c.min_bpm,
            max_bpm: c.max_bpm,
            transition_lambda: c.transition_lambda,
            observation_lambda: c.observation_lambda,
            correct_beats: c.correct_beats,
            beat_region: match c.beat_region {
                BdBeatRegion::Round => BeatRegion::Round,
                BdBeatRegion::Ceil => BeatRegion::Ceil,
            },
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdPeakConfig {
    pub threshold: f64,
    pub min_separation: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdEvalConfig {
    pub f_window: f64,
    pub continuity_phase_tol: f64,
    pub continuity_tempo_tol: f64,
    pub trim_seconds: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BdEvalResult {
    pub f_measure: f64,
    pub cmlc: f64,
    pub cmlt: f64,
    pub amlc: f64,
    pub amlt: f64,
    pub n_ref: usize,
    pub n_est: usize,
}

impl From<EvalResult> for BdEvalResult {
    fn from(r: EvalResult) -> Self {
        BdEvalResult {
            f_measure: r.f_measure,
            cmlc: r.cmlc,
            cmlt: r.cmlt,
            amlc: r.amlc,
            amlt: r.amlt,
            n_ref: r.n_ref,
            n_est: r.n_est,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(BdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => BdStatus::Io,
            Error::Parse { .. } | Error::MalformedAnnotation { .. } | Error::MissingFps(_) | Error::Csv { .. } => {
                BdStatus::Parse
            }
            Error::CorruptActivation(_) => BdStatus::CorruptActivation,
            Error::StateSpace(_) | Error::Config(_) => BdStatus::Config,
            Error::Constraint(_) => BdStatus::Constraint,
            Error::InsufficientReference(_) => BdStatus::InsufficientReference,
            Error::NoOverlap => BdStatus::NoOverlap,
            Error::DegenerateInput(_) => BdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(BdStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BdStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(Path::new)
        .map_err(|_| Failure(BdStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next `bd_*` call on the same thread.
#[no_mangle]
pub extern "C" fn bd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn bd_dbn_config_default() -> BdDbnConfig {
    let d = DbnConfig::default();
    BdDbnConfig {
        min_bpm: d.min_bpm,
        max_bpm: d.max_bpm,
        transition_lambda: d.transition_lambda,
        observation_lambda: d.observation_lambda,
        correct_beats: d.correct_beats,
        beat_region: BdBeatRegion::Round,
    }
}

#[no_mangle]
pub extern "C" fn bd_peak_config_default() -> BdPeakConfig {
    let d = PeakConfig::default();
    BdPeakConfig {
        threshold: d.threshold,
        min_separation: d.min_separation,
    }
}

#[no_mangle]
pub extern "C" fn bd_eval_config_default() -> BdEvalConfig {
    let d = EvalConfig::default();
    BdEvalConfig {
        f_window: d.f_window,
        continuity_phase_tol: d.continuity_phase_tol,
        continuity_tempo_tol: d.continuity_tempo_tol,
        trim_seconds: d.trim_seconds,
    }
}

/// Copies `len` values in [0, 1] into a new activation.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_activation_new(
    values: *const f64,
    len: usize,
    fps: f64,
    out: *mut *mut BdActivation,
) -> BdStatus {
    guard(|| {
        let v = slice(values, len, "values")?.to_vec();
        put(out, BdActivation(ActivationCurve::new(v, fps, "ffi")?))
    })
}

/// Loads a text or binary activation file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_activation_load(path: *const c_char, out: *mut *mut BdActivation) -> BdStatus {
    guard(|| put(out, BdActivation(load_activation(path_arg(path)?)?)))
}

/// # Safety
/// `act` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bd_activation_len(act: *const BdActivation) -> usize {
    act.as_ref().map_or(0, |a| a.0.len())
}

/// # Safety
/// `act` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bd_activation_fps(act: *const BdActivation) -> f64 {
    act.as_ref().map_or(0.0, |a| a.0.fps())
}

/// Pointer to the activation values, valid while the handle lives.
///
/// # Safety
/// `act` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bd_activation_data(act: *const BdActivation) -> *const f64 {
    act.as_ref().map_or(ptr::null(), |a| a.0.values().as_ptr())
}

/// # Safety
/// `act` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bd_activation_free(act: *mut BdActivation) {
    if !act.is_null() {
        drop(Box::from_raw(act));
    }
}

/// Copies `len` beat times (seconds, any order) into a new sequence.
///
/// # Safety
/// `times` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_beats_new(times: *const f64, len: usize, out: *mut *mut BdBeats) -> BdStatus {
    guard(|| {
        let t = slice(times, len, "times")?;
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Failure(BdStatus::InvalidArgument, "beat times must be finite".into()));
        }
        put(out, BdBeats(BeatSequence::from_unsorted(t.to_vec())))
    })
}

/// Loads a beat annotation file (one time per line, first column).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_beats_load(path: *const c_char, out: *mut *mut BdBeats) -> BdStatus {
    guard(|| put(out, BdBeats(load_beats(path_arg(path)?)?.beats)))
}

/// # Safety
/// `beats` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bd_beats_len(beats: *const BdBeats) -> usize {
    beats.as_ref().map_or(0, |b| b.0.len())
}

/// Pointer to the beat times, valid while the handle lives.
///
/// # Safety
/// `beats` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bd_beats_data(beats: *const BdBeats) -> *const f64 {
    beats.as_ref().map_or(ptr::null(), |b| b.0.times().as_ptr())
}

/// # Safety
/// `beats` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bd_beats_free(beats: *mut BdBeats) {
    if !beats.is_null() {
        drop(Box::from_raw(beats));
    }
}

/// Viterbi decoding with the bar-pointer model.
///
/// # Safety
/// `act` and `cfg` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_decode_dbn(
    act: *const BdActivation,
    cfg: *const BdDbnConfig,
    out: *mut *mut BdBeats,
) -> BdStatus {
    guard(|| {
        let act = get(act, "act")?;
        let cfg: DbnConfig = (*get(cfg, "cfg")?).into();
        put(out, BdBeats(decode(&act.0, &cfg)?))
    })
}

/// Decoding restricted to `center_bpm · (1 ± window_fraction)`.
///
/// # Safety
/// `act` and `cfg` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_decode_dbn_constrained(
    act: *const BdActivation,
    cfg: *const BdDbnConfig,
    center_bpm: f64,
    window_fraction: f64,
    out: *mut *mut BdBeats,
) -> BdStatus {
    guard(|| {
        let act = get(act, "act")?;
        let cfg: DbnConfig = (*get(cfg, "cfg")?).into();
        let c = TempoConstraint {
            center_bpm,
            window_fraction,
        };
        put(out, BdBeats(decode_constrained(&act.0, &cfg, &c)?))
    })
}

/// # Safety
/// `act` and `cfg` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_pick_peaks(
    act: *const BdActivation,
    cfg: *const BdPeakConfig,
    out: *mut *mut BdBeats,
) -> BdStatus {
    guard(|| {
        let act = get(act, "act")?;
        let c = get(cfg, "cfg")?;
        let cfg = PeakConfig {
            threshold: c.threshold,
            min_separation: c.min_separation,
        };
        cfg.validate()?;
        put(out, BdBeats(pick_peaks(&act.0, &cfg)))
    })
}

/// Scores `estimate` against `reference`.
///
/// # Safety
/// All pointers must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_evaluate(
    estimate: *const BdBeats,
    reference: *const BdBeats,
    cfg: *const BdEvalConfig,
    out: *mut BdEvalResult,
) -> BdStatus {
    guard(|| {
        let est = get(estimate, "estimate")?;
        let refs = get(reference, "reference")?;
        let c = get(cfg, "cfg")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = EvalConfig {
            f_window: c.f_window,
            continuity_phase_tol: c.continuity_phase_tol,
            continuity_tempo_tol: c.continuity_tempo_tol,
            trim_seconds: c.trim_seconds,
        };
        cfg.validate()?;
        *out = evaluate(&est.0, &refs.0, &cfg)?.into();
        Ok(())
    })
}

/// Gaussian activation centred on each reference beat.
///
/// # Safety
/// `reference` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_synthesize_gt(
    reference: *const BdBeats,
    sigma_frames: f64,
    fps: f64,
    out: *mut *mut BdActivation,
) -> BdStatus {
    guard(|| {
        let r = get(reference, "reference")?;
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Failure(BdStatus::InvalidArgument, "fps must be positive".into()));
        }
        let ann = BeatAnnotation {
            track_id: "ffi".into(),
            beats: r.0.clone(),
        };
        let cfg = SynthConfig { sigma_frames, fps };
        put(out, BdActivation(synthesize_gt_activation(&ann, &cfg)?))
    })
}

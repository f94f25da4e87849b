//! Bar-pointer beat decoder.
//!
//! The hidden state is a pair (beat period τ in frames, phase within the
//! beat). Phase advances by one frame per step; at the last phase of a period
//! the pointer wraps to phase 0 and may switch to any other period, with a
//! probability that decays exponentially with the relative tempo change.
//! The first `beat_region_size(τ)` phases of each period are "beat" states
//! for the observation model. Decoding is exact Viterbi in the log domain.

use crate::error::{Error, Result};
use crate::signal::{ActivationCurve, BeatSequence};

/// Smallest density the observation model will emit.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Tempo limits used when intersecting a tempo constraint.
pub const CONSTRAINT_MIN_BPM: f64 = 30.0;
pub const CONSTRAINT_MAX_BPM: f64 = 215.0;

/// How many leading phases of a period count as beat states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BeatRegion {
    /// `max(1, round(τ / observation_lambda))`.
    #[default]
    Round,
    /// Phases with `phase / τ < 1 / observation_lambda`, i.e.
    /// `ceil(τ / observation_lambda)`; the madmom convention.
    Ceil,
}

impl BeatRegion {
    pub fn size(self, tau: usize, observation_lambda: u32) -> usize {
        let r = tau as f64 / observation_lambda as f64;
        let n = match self {
            BeatRegion::Round => r.round(),
            BeatRegion::Ceil => r.ceil(),
        };
        (n as usize).max(1)
    }

    pub fn name(self) -> &'static str {
        match self {
            BeatRegion::Round => "round",
            BeatRegion::Ceil => "ceil",
        }
    }
}

impl std::str::FromStr for BeatRegion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "round" => Ok(BeatRegion::Round),
            "ceil" => Ok(BeatRegion::Ceil),
            other => Err(Error::Config(format!("beat region must be `round` or `ceil`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbnConfig {
    pub min_bpm: f64,
    pub max_bpm: f64,
    pub transition_lambda: f64,
    pub observation_lambda: u32,
    pub correct_beats: bool,
    pub beat_region: BeatRegion,
}

impl Default for DbnConfig {
    fn default() -> Self {
        DbnConfig {
            min_bpm: 55.0,
            max_bpm: 215.0,
            transition_lambda: 100.0,
            observation_lambda: 16,
            correct_beats: true,
            beat_region: BeatRegion::Round,
        }
    }
}

impl DbnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_bpm.is_finite() && self.max_bpm.is_finite()) {
            return Err(Error::Config("BPM limits must be finite".into()));
        }
        if !(self.min_bpm > 0.0 && self.min_bpm <= self.max_bpm) {
            return Err(Error::Config(format!(
                "need 0 < min_bpm <= max_bpm, got [{}, {}]",
                self.min_bpm, self.max_bpm
            )));
        }
        if !(self.transition_lambda.is_finite() && self.transition_lambda > 0.0) {
            return Err(Error::Config(format!(
                "transition lambda must be positive, got {}",
                self.transition_lambda
            )));
        }
        if self.observation_lambda < 2 {
            return Err(Error::Config(format!(
                "observation lambda must be at least 2, got {}",
                self.observation_lambda
            )));
        }
        Ok(())
    }

    pub fn with_bpm_range(mut self, min_bpm: f64, max_bpm: f64) -> Self {
        self.min_bpm = min_bpm;
        self.max_bpm = max_bpm;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.transition_lambda = lambda;
        self
    }
}

/// Tempo × phase state space with a flat, tempo-major state numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    fps: f64,
    intervals: Vec<usize>,
    offsets: Vec<usize>,
    beat_region: Vec<usize>,
    num_states: usize,
    observation_lambda: u32,
}

impl StateSpace {
    /// Every integer beat period between the periods of `max_bpm` and `min_bpm`.
    pub fn build(cfg: &DbnConfig, fps: f64) -> Result<Self> {
        cfg.validate()?;
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::StateSpace(format!("invalid frame rate {fps}")));
        }
        let tau_min = (60.0 * fps / cfg.max_bpm).round();
        let tau_max = (60.0 * fps / cfg.min_bpm).round();
        if tau_min < 2.0 {
            return Err(Error::StateSpace(format!(
                "{fps} fps cannot represent {} BPM (shortest period {tau_min} frames)",
                cfg.max_bpm
            )));
        }
        let intervals = (tau_min as usize..=tau_max as usize).collect();
        StateSpace::with_rule(fps, intervals, cfg.observation_lambda, cfg.beat_region)
    }

    /// Builds a space from explicit, strictly ascending beat periods.
    pub fn from_intervals(fps: f64, intervals: Vec<usize>, observation_lambda: u32) -> Result<Self> {
        StateSpace::with_rule(fps, intervals, observation_lambda, BeatRegion::Round)
    }

    pub fn with_rule(fps: f64, intervals: Vec<usize>, observation_lambda: u32, rule: BeatRegion) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::StateSpace("no tempo states".into()));
        }
        if intervals[0] < 2 || intervals.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::StateSpace(
                "periods must be ascending, distinct and at least 2 frames".into(),
            ));
        }
        if observation_lambda < 2 {
            return Err(Error::StateSpace("observation lambda must be at least 2".into()));
        }
        let mut offsets = Vec::with_capacity(intervals.len());
        let mut total = 0;
        for &tau in &intervals {
            offsets.push(total);
            total += tau;
        }
        let beat_region = intervals
            .iter()
            .map(|&tau| rule.size(tau, observation_lambda))
            .collect();
        Ok(StateSpace {
            fps,
            intervals,
            offsets,
            beat_region,
            num_states: total,
            observation_lambda,
        })
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn intervals(&self) -> &[usize] {
        &self.intervals
    }

    pub fn num_tempi(&self) -> usize {
        self.intervals.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn observation_lambda(&self) -> u32 {
        self.observation_lambda
    }

    pub fn beat_region_size(&self, tempo: usize) -> usize {
        self.beat_region[tempo]
    }

    pub fn state_id(&self, tempo: usize, phase: usize) -> usize {
        debug_assert!(phase < self.intervals[tempo]);
        self.offsets[tempo] + phase
    }

    /// Inverse of [`state_id`](Self::state_id): `(tempo index, phase)`.
    pub fn decompose(&self, state: usize) -> (usize, usize) {
        let tempo = self.offsets.partition_point(|&o| o <= state) - 1;
        (tempo, state - self.offsets[tempo])
    }

    pub fn is_beat_state(&self, state: usize) -> bool {
        let (tempo, phase) = self.decompose(state);
        phase < self.beat_region[tempo]
    }

    /// Last phase of a period, where tempo may change.
    pub fn wrap_state(&self, tempo: usize) -> usize {
        self.offsets[tempo] + self.intervals[tempo] - 1
    }
}

/// Log probabilities of moving from the wrap state of one period to phase 0
/// of another; every other transition is the deterministic phase advance.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    num_tempi: usize,
    // row-major [from][to]
    log_probs: Vec<f64>,
}

impl TransitionModel {
    pub fn tempo_log_prob(&self, from: usize, to: usize) -> f64 {
        self.log_probs[from * self.num_tempi + to]
    }

    /// Log transition probability between two flat states.
    pub fn log_prob(&self, space: &StateSpace, from: usize, to: usize) -> f64 {
        let (ft, fp) = space.decompose(from);
        let (tt, tp) = space.decompose(to);
        if fp + 1 < space.intervals[ft] {
            if tt == ft && tp == fp + 1 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else if tp == 0 {
            self.tempo_log_prob(ft, tt)
        } else {
            f64::NEG_INFINITY
        }
    }
}

pub fn transition_log_probs(space: &StateSpace, lambda: f64) -> TransitionModel {
    let n = space.num_tempi();
    let mut log_probs = vec![0.0; n * n];
    for (from, &tau) in space.intervals.iter().enumerate() {
        let row = &mut log_probs[from * n..(from + 1) * n];
        for (slot, &next) in row.iter_mut().zip(&space.intervals) {
            *slot = -lambda * (next as f64 / tau as f64 - 1.0).abs();
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let norm = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.iter_mut().for_each(|v| *v -= norm);
    }
    TransitionModel {
        num_tempi: n,
        log_probs,
    }
}

/// Per-frame log densities of beat and non-beat states.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    pub beat: Vec<f64>,
    pub non_beat: Vec<f64>,
}

impl ObservationModel {
    pub fn len(&self) -> usize {
        self.beat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beat.is_empty()
    }

    pub fn log_density(&self, space: &StateSpace, frame: usize, state: usize) -> f64 {
        if space.is_beat_state(state) {
            self.beat[frame]
        } else {
            self.non_beat[frame]
        }
    }
}

pub fn observation_log_probs(act: &ActivationCurve, space: &StateSpace) -> ObservationModel {
    let split = (space.observation_lambda - 1) as f64;
    let (beat, non_beat) = act
        .values()
        .iter()
        .map(|&a| {
            (
                a.max(DENSITY_FLOOR).ln(),
                ((1.0 - a) / split).max(DENSITY_FLOOR).ln(),
            )
        })
        .unzip();
    ObservationModel { beat, non_beat }
}

/// Decoded state sequence with its joint log score.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    pub states: Vec<usize>,
    pub log_score: f64,
}

/// Exact MAP path under a uniform initial distribution.
///
/// Ties prefer the lower flat state id, both for predecessors and for the
/// final state.
pub fn viterbi_with(space: &StateSpace, trans: &TransitionModel, obs: &ObservationModel) -> StatePath {
    let n_frames = obs.len();
    let n_tempi = space.num_tempi();
    if n_frames == 0 {
        return StatePath {
            states: Vec::new(),
            log_score: 0.0,
        };
    }

    let prior = -(space.num_states() as f64).ln();
    let mut scores = vec![prior; space.num_states()];
    add_observations(space, obs, 0, &mut scores);

    // Only phase-0 states have a choice of predecessor: store which tempo
    // the pointer wrapped from.
    let mut backptr = vec![0u32; n_frames.saturating_sub(1) * n_tempi];
    let mut wrap = vec![0.0; n_tempi];

    for t in 1..n_frames {
        for (k, w) in wrap.iter_mut().enumerate() {
            *w = scores[space.wrap_state(k)];
        }
        for (k, &tau) in space.intervals.iter().enumerate() {
            let off = space.offsets[k];
            scores.copy_within(off..off + tau - 1, off + 1);
        }
        let bp = &mut backptr[(t - 1) * n_tempi..t * n_tempi];
        for (to, slot) in bp.iter_mut().enumerate() {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (from, &w) in wrap.iter().enumerate() {
                let s = w + trans.tempo_log_prob(from, to);
                if s > best {
                    best = s;
                    arg = from;
                }
            }
            scores[space.offsets[to]] = best;
            *slot = arg as u32;
        }
        add_observations(space, obs, t, &mut scores);
    }

    let (mut state, log_score) = scores
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bs), (i, &s)| {
            if s > bs {
                (i, s)
            } else {
                (bi, bs)
            }
        });

    let mut states = vec![0; n_frames];
    states[n_frames - 1] = state;
    for t in (1..n_frames).rev() {
        let (tempo, phase) = space.decompose(state);
        state = if phase > 0 {
            state - 1
        } else {
            space.wrap_state(backptr[(t - 1) * n_tempi + tempo] as usize)
        };
        states[t - 1] = state;
    }
    StatePath { states, log_score }
}

fn add_observations(space: &StateSpace, obs: &ObservationModel, t: usize, scores: &mut [f64]) {
    let (beat, non_beat) = (obs.beat[t], obs.non_beat[t]);
    for (k, &tau) in space.intervals.iter().enumerate() {
        let off = space.offsets[k];
        let region = space.beat_region[k];
        scores[off..off + region].iter_mut().for_each(|s| *s += beat);
        scores[off + region..off + tau].iter_mut().for_each(|s| *s += non_beat);
    }
}

/// Joint log score of an arbitrary path, `-inf` if it uses an impossible
/// transition.
pub fn path_log_score(
    space: &StateSpace,
    trans: &TransitionModel,
    obs: &ObservationModel,
    states: &[usize],
) -> f64 {
    let Some(&first) = states.first() else {
        return 0.0;
    };
    let mut score = -(space.num_states() as f64).ln() + obs.log_density(space, 0, first);
    for (t, w) in states.windows(2).enumerate() {
        score += trans.log_prob(space, w[0], w[1]) + obs.log_density(space, t + 1, w[1]);
    }
    score
}

pub fn viterbi(act: &ActivationCurve, cfg: &DbnConfig) -> Result<(StateSpace, StatePath)> {
    let space = StateSpace::build(cfg, act.fps())?;
    let trans = transition_log_probs(&space, cfg.transition_lambda);
    let obs = observation_log_probs(act, &space);
    let path = viterbi_with(&space, &trans, &obs);
    Ok((space, path))
}

/// Emits a beat wherever the path enters the beat region. With `correct`,
/// each beat moves to the activation maximum of its beat-region run.
pub fn path_to_beats(
    path: &[usize],
    space: &StateSpace,
    act: &ActivationCurve,
    correct: bool,
) -> BeatSequence {
    let in_region: Vec<bool> = path.iter().map(|&s| space.is_beat_state(s)).collect();
    let values = act.values();
    let mut frames = Vec::new();
    let mut t = 0;
    while t < in_region.len() {
        if !in_region[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < in_region.len() && in_region[t] {
            t += 1;
        }
        let frame = if correct {
            (start..t).fold(start, |best, f| if values[f] > values[best] { f } else { best })
        } else {
            start
        };
        frames.push(frame);
    }
    BeatSequence::new(frames.into_iter().map(|f| f as f64 / space.fps()).collect())
}

pub fn decode(act: &ActivationCurve, cfg: &DbnConfig) -> Result<BeatSequence> {
    let (space, path) = viterbi(act, cfg)?;
    Ok(path_to_beats(&path.states, &space, act, cfg.correct_beats))
}

/// A ±`window_fraction` BPM window around an externally supplied tempo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TempoConstraint {
    pub center_bpm: f64,
    pub window_fraction: f64,
}

impl TempoConstraint {
    pub fn new(center_bpm: f64) -> Self {
        TempoConstraint {
            center_bpm,
            window_fraction: 0.20,
        }
    }

    /// The window intersected with [30, 215] BPM.
    pub fn effective_range(&self) -> Result<(f64, f64)> {
        if !(self.center_bpm.is_finite() && self.center_bpm > 0.0) {
            return Err(Error::Constraint(format!("invalid center {}", self.center_bpm)));
        }
        if !(self.window_fraction.is_finite() && (0.0..1.0).contains(&self.window_fraction)) {
            return Err(Error::Constraint(format!(
                "window fraction must lie in [0, 1), got {}",
                self.window_fraction
            )));
        }
        let lo = (self.center_bpm * (1.0 - self.window_fraction)).max(CONSTRAINT_MIN_BPM);
        let hi = (self.center_bpm * (1.0 + self.window_fraction)).min(CONSTRAINT_MAX_BPM);
        if lo > hi {
            return Err(Error::Constraint(format!(
                "{} BPM ±{}% leaves an empty range [{lo}, {hi}]",
                self.center_bpm,
                self.window_fraction * 100.0
            )));
        }
        Ok((lo, hi))
    }
}

pub fn decode_constrained(
    act: &ActivationCurve,
    cfg: &DbnConfig,
    constraint: &TempoConstraint,
) -> Result<BeatSequence> {
    let (lo, hi) = constraint.effective_range()?;
    decode(act, &cfg.with_bpm_range(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn curve(values: Vec<f64>, fps: f64) -> ActivationCurve {
        ActivationCurve::new(values, fps, "test").unwrap()
    }

    #[test]
    fn beat_region_rules() {
        assert_eq!(BeatRegion::Round.size(19, 16), 1);
        assert_eq!(BeatRegion::Ceil.size(19, 16), 2);
        assert_eq!(BeatRegion::Round.size(72, 16), 5);
        assert_eq!(BeatRegion::Ceil.size(64, 16), 4);
        assert_eq!(BeatRegion::Round.size(3, 16), 1);
        assert_eq!("CEIL".parse::<BeatRegion>().unwrap(), BeatRegion::Ceil);
        assert!("floor".parse::<BeatRegion>().is_err());
        let cfg = DbnConfig { beat_region: BeatRegion::Ceil, ..DbnConfig::default() };
        let s = StateSpace::build(&cfg, 50.0).unwrap();
        assert_eq!(s.beat_region_size(0), 1);
        assert_eq!(s.beat_region_size(s.num_tempi() - 1), 4);
    }

    #[test]
    fn single_tempo_space() {
        let cfg = DbnConfig::default().with_bpm_range(60.0, 60.0);
        let s = StateSpace::build(&cfg, 100.0).unwrap();
        assert_eq!(s.intervals(), &[100]);
        assert_eq!(s.num_states(), 100);
    }

    #[test]
    fn default_space_at_50_fps() {
        let s = StateSpace::build(&DbnConfig::default(), 50.0).unwrap();
        assert_eq!(s.intervals().first(), Some(&14));
        assert_eq!(s.intervals().last(), Some(&55));
        assert_eq!(s.num_tempi(), 42);
        assert_eq!(s.num_states(), 1449);
    }

    #[test]
    fn slow_min_bpm_space() {
        let cfg = DbnConfig {
            min_bpm: 30.0,
            ..Default::default()
        };
        let s = StateSpace::build(&cfg, 50.0).unwrap();
        assert_eq!(*s.intervals().last().unwrap(), 100);
    }

    #[test]
    fn low_fps_rejected() {
        assert!(matches!(
            StateSpace::build(&DbnConfig::default(), 5.0),
            Err(Error::StateSpace(_))
        ));
    }

    #[test]
    fn state_ids_round_trip() {
        let s = StateSpace::build(&DbnConfig::default(), 50.0).unwrap();
        for id in 0..s.num_states() {
            let (k, p) = s.decompose(id);
            assert_eq!(s.state_id(k, p), id);
        }
    }

    #[test]
    fn beat_region_sizes() {
        let s = StateSpace::from_intervals(50.0, vec![8, 24, 25, 55], 16).unwrap();
        assert_eq!(
            (0..4).map(|k| s.beat_region_size(k)).collect::<Vec<_>>(),
            vec![1, 2, 2, 3]
        );
    }

    #[test]
    fn transition_rows_normalized() {
        let s = StateSpace::build(&DbnConfig::default(), 50.0).unwrap();
        for lambda in [1e-3, 1.0, 100.0, 1e4] {
            let t = transition_log_probs(&s, lambda);
            for from in 0..s.num_tempi() {
                let sum: f64 = (0..s.num_tempi()).map(|to| t.tempo_log_prob(from, to).exp()).sum();
                assert!((sum - 1.0).abs() < 1e-12, "lambda {lambda} row {from} sums to {sum}");
            }
        }
    }

    #[test]
    fn high_lambda_keeps_tempo() {
        let s = StateSpace::from_intervals(50.0, vec![49, 50, 51], 16).unwrap();
        let t = transition_log_probs(&s, 500.0);
        let same = t.tempo_log_prob(1, 1).exp();
        assert!(same > 0.99);
        // closed form: 1 / (1 + 2 e^{-10})
        assert_relative_eq!(same, 1.0 / (1.0 + 2.0 * (-10.0f64).exp()), epsilon = 1e-12);
    }

    #[test]
    fn tiny_lambda_is_uniform() {
        let s = StateSpace::from_intervals(50.0, vec![10, 20, 30], 16).unwrap();
        let t = transition_log_probs(&s, 1e-12);
        for to in 0..3 {
            assert_relative_eq!(t.tempo_log_prob(0, to).exp(), 1.0 / 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn observation_densities() {
        let s = StateSpace::from_intervals(50.0, vec![32], 16).unwrap();
        let o = observation_log_probs(&curve(vec![1.0, 0.5, 1.0 / 16.0], 50.0), &s);
        assert_relative_eq!(o.non_beat[0], DENSITY_FLOOR.ln());
        assert_relative_eq!(o.beat[0], 0.0);
        assert_relative_eq!(o.non_beat[1].exp(), 0.5 / 15.0, epsilon = 1e-15);
        assert_relative_eq!(o.beat[2], o.non_beat[2], epsilon = 1e-12);
        let z = observation_log_probs(&curve(vec![0.0], 50.0), &s);
        assert_relative_eq!(z.beat[0], DENSITY_FLOOR.ln());
    }

    #[test]
    fn zero_activation_does_not_crash() {
        let act = curve(vec![0.0; 500], 50.0);
        let beats = decode(&act, &DbnConfig::default()).unwrap();
        assert!(beats.times().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn length_one_activation() {
        let act = curve(vec![0.3], 50.0);
        let (_, path) = viterbi(&act, &DbnConfig::default()).unwrap();
        assert_eq!(path.states.len(), 1);
    }

    #[test]
    fn impulse_train_locks_to_period() {
        let values = (0..1000).map(|i| if i % 25 == 0 { 1.0 } else { 0.0 }).collect();
        let act = curve(values, 50.0);
        let cfg = DbnConfig::default();
        let (space, path) = viterbi(&act, &cfg).unwrap();
        let tempo_25 = space.intervals().iter().position(|&t| t == 25).unwrap();
        for &s in &path.states[100..] {
            assert_eq!(space.decompose(s).0, tempo_25);
        }
        let beats = path_to_beats(&path.states, &space, &act, cfg.correct_beats);
        let frames: Vec<i64> = beats.times().iter().map(|t| (t * 50.0).round() as i64).collect();
        assert!(frames.windows(2).all(|w| w[1] - w[0] == 25), "{frames:?}");
        assert_eq!(frames.len(), 40);
    }

    #[test]
    fn path_extraction() {
        let space = StateSpace::from_intervals(50.0, vec![25], 16).unwrap();
        let path: Vec<usize> = (0..100).map(|t| t % 25).collect();
        let act = curve(vec![0.0; 100], 50.0);
        let beats = path_to_beats(&path, &space, &act, false);
        assert_eq!(beats.times(), &[0.0, 0.5, 1.0, 1.5]);

        // beat region of τ=25 is 2 frames; a peak on the second frame wins
        let mut v = vec![0.0; 100];
        v[26] = 0.9;
        let act = curve(v, 50.0);
        let beats = path_to_beats(&path, &space, &act, true);
        assert_relative_eq!(beats.times()[1], 26.0 / 50.0);

        let path: Vec<usize> = (5..20).collect();
        assert!(path_to_beats(&path, &space, &curve(vec![0.0; 15], 50.0), true).is_empty());
    }

    #[test]
    fn constraint_ranges() {
        let (lo, hi) = TempoConstraint::new(60.0).effective_range().unwrap();
        assert_relative_eq!(lo, 48.0);
        assert_relative_eq!(hi, 72.0);
        assert!(matches!(
            TempoConstraint::new(20.0).effective_range(),
            Err(Error::Constraint(_))
        ));
        let (lo, hi) = TempoConstraint::new(200.0).effective_range().unwrap();
        assert_relative_eq!(lo, 160.0);
        assert_relative_eq!(hi, 215.0);
    }

    #[test]
    fn invalid_config() {
        let bad = DbnConfig {
            transition_lambda: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = DbnConfig::default().with_bpm_range(100.0, 50.0);
        assert!(bad.validate().is_err());
    }
}

//! Deterministic synthetic corpora shared by the integration tests.
#![allow(dead_code)]

pub mod bundle;
pub mod oracles;

use std::fs;
use std::path::Path;

use beatdiag::experiments::{synthesize_gt_activation, SynthConfig};
use beatdiag::ingest::{write_activation_text, write_beats};
use beatdiag::{ActivationCurve, BeatAnnotation, BeatSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

pub const TAGS: [&str; 8] = [
    "missing bass",
    "lack of transients",
    "expressive timing",
    "slow tempo",
    "ternary meter",
    "strong syncopation",
    "rich ornamentation",
    "low familiarity",
];

#[derive(Debug, Clone)]
pub struct SynthTrack {
    pub annotation: BeatAnnotation,
    pub tags: Vec<String>,
}

/// Excerpts with a slowly drifting tempo and per-beat timing jitter. Tempi
/// are log-normal around 72 BPM, clamped to [36, 170].
pub fn corpus(seed: u64, n: usize, duration: f64) -> Vec<SynthTrack> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tempo = LogNormal::new(72f64.ln(), 0.3).unwrap();
    (0..n)
        .map(|i| {
            let bpm: f64 = tempo.sample(&mut rng).clamp(36.0, 170.0);
            let cv = rng.gen_range(0.01..0.08);
            let annotation = rubato_track(&mut rng, &format!("syn_{i:03}"), bpm, cv, duration);
            let mut tags: Vec<String> = (0..rng.gen_range(0..=3))
                .map(|_| TAGS[rng.gen_range(0..TAGS.len())].to_string())
                .collect();
            if bpm < 60.0 {
                tags.push("slow tempo".into());
            }
            if rng.gen_bool(0.1) {
                tags.push("dense texture".into());
            }
            tags.sort();
            tags.dedup();
            SynthTrack { annotation, tags }
        })
        .collect()
}

/// One track: the period follows a bounded random walk, each beat is
/// displaced by Gaussian jitter of `cv` times the period.
pub fn rubato_track(rng: &mut ChaCha8Rng, id: &str, bpm: f64, cv: f64, duration: f64) -> BeatAnnotation {
    let base = 60.0 / bpm;
    let step = Normal::new(0.0, 0.01).unwrap();
    let jitter = Normal::new(0.0, cv).unwrap();
    let mut drift = 0.0f64;
    let mut t = rng.gen_range(0.1..base.min(1.5));
    let mut beats = Vec::new();
    while t < duration {
        beats.push(t);
        drift = (drift + step.sample(rng)).clamp(-0.08, 0.08);
        let period = base * (1.0 + drift);
        t += (period * (1.0 + jitter.sample(rng))).max(0.5 * period);
    }
    BeatAnnotation::new(id, beats)
}

pub fn annotations(tracks: &[SynthTrack]) -> Vec<BeatAnnotation> {
    tracks.iter().map(|t| t.annotation.clone()).collect()
}

/// A GT-synthetic curve degraded the way a weak model would be: uneven beat
/// heights, missed beats, spurious bumps, an off-beat echo and background
/// noise. `quality` in (0, 1]; 1 is close to clean.
pub fn pseudo_model(reference: &BeatAnnotation, quality: f64, seed: u64) -> ActivationCurve {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let synth = SynthConfig::default();
    let fps = synth.fps;
    let kept: Vec<f64> = reference
        .times()
        .iter()
        .copied()
        .filter(|_| rng.gen_bool((0.55 + 0.45 * quality).min(1.0)))
        .collect();
    let n = ((reference.times().last().copied().unwrap_or(0.0) + 1.0) * fps).ceil() as usize;
    let mut values = vec![0.0f64; n.max(1)];
    let bump = |centre: f64, height: f64, values: &mut Vec<f64>| {
        let c = centre * fps;
        let lo = (c - 8.0).floor().max(0.0) as usize;
        let hi = ((c + 8.0).ceil() as usize).min(values.len() - 1);
        for (t, v) in values.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let d = t as f64 - c;
            *v = v.max(height * (-d * d / 8.0).exp());
        }
    };
    for &b in &kept {
        let h = rng.gen_range(0.35 + 0.4 * quality..=1.0);
        bump(b + rng.gen_range(-0.015..0.015), h, &mut values);
    }
    for w in reference.times().windows(2) {
        if rng.gen_bool(0.5 * (1.0 - quality)) {
            bump(0.5 * (w[0] + w[1]), rng.gen_range(0.2..0.7), &mut values);
        }
    }
    let n_spurious = ((1.0 - quality) * reference.times().len() as f64 * 0.5) as usize;
    for _ in 0..n_spurious {
        bump(rng.gen_range(0.0..n as f64 / fps), rng.gen_range(0.1..0.6), &mut values);
    }
    let noise = 0.15 * (1.0 - quality);
    for v in &mut values {
        *v = (*v + rng.gen_range(0.0..=noise)).clamp(0.0, 1.0);
    }
    ActivationCurve::new(values, fps, "pseudo").unwrap()
}

pub fn gt_curve(reference: &BeatAnnotation) -> ActivationCurve {
    synthesize_gt_activation(reference, &SynthConfig::default()).unwrap()
}

/// Writes `annotations/`, `tags/` and one directory per activation source.
pub fn write_layout(root: &Path, tracks: &[SynthTrack], sources: &[(&str, Vec<ActivationCurve>)]) {
    fs::create_dir_all(root.join("annotations")).unwrap();
    fs::create_dir_all(root.join("tags")).unwrap();
    for t in tracks {
        let id = &t.annotation.track_id;
        write_beats(&root.join(format!("annotations/{id}.txt")), &t.annotation.beats).unwrap();
        fs::write(root.join(format!("tags/{id}.txt")), t.tags.join("\n")).unwrap();
    }
    for (label, curves) in sources {
        let dir = root.join("acts").join(label);
        fs::create_dir_all(&dir).unwrap();
        for (t, c) in tracks.iter().zip(curves) {
            write_activation_text(&dir.join(format!("{}.txt", t.annotation.track_id)), c).unwrap();
        }
    }
}

pub fn seq(v: &[f64]) -> BeatSequence {
    BeatSequence::new(v.to_vec())
}

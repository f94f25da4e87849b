//! Independent reference implementations used by the oracle tests.

use beatdiag::dbn::StateSpace;
use beatdiag::diagnostics::TaxonomyConfig;
use beatdiag::metrics::EvalResult;
use beatdiag::{ActivationCurve, Dataset};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

pub const MAX_PATHS: f64 = 200_000.0;

/// Dense reimplementation of the model, indexed by (tempo, phase).
pub struct Oracle {
    pub intervals: Vec<usize>,
    pub beat_region: Vec<usize>,
    pub lambda: f64,
    pub obs_lambda: f64,
    pub act: Vec<f64>,
}

impl Oracle {
    fn states(&self) -> Vec<(usize, usize)> {
        self.intervals
            .iter()
            .enumerate()
            .flat_map(|(k, &tau)| (0..tau).map(move |p| (k, p)))
            .collect()
    }

    fn successors(&self, (k, p): (usize, usize)) -> Vec<((usize, usize), f64)> {
        let tau = self.intervals[k];
        if p + 1 < tau {
            return vec![((k, p + 1), 0.0)];
        }
        let weights: Vec<f64> = self
            .intervals
            .iter()
            .map(|&t| -self.lambda * (t as f64 / tau as f64 - 1.0).abs())
            .collect();
        let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + weights.iter().map(|w| (w - max).exp()).sum::<f64>().ln();
        weights.iter().enumerate().map(|(j, w)| ((j, 0), w - lse)).collect()
    }

    fn obs(&self, t: usize, (k, p): (usize, usize)) -> f64 {
        let a = self.act[t];
        if p < self.beat_region[k] {
            a.max(1e-12).ln()
        } else {
            ((1.0 - a) / (self.obs_lambda - 1.0)).max(1e-12).ln()
        }
    }

    fn path_count(&self) -> f64 {
        let states = self.states();
        let mut count: Vec<f64> = vec![1.0; states.len()];
        let index = |s: (usize, usize)| states.iter().position(|&x| x == s).unwrap();
        for _ in 1..self.act.len() {
            let mut next = vec![0.0; states.len()];
            for (i, &s) in states.iter().enumerate() {
                for (n, _) in self.successors(s) {
                    next[index(n)] += count[i];
                }
            }
            count = next;
        }
        count.iter().sum()
    }

    pub fn best(&self) -> f64 {
        let states = self.states();
        let prior = -(states.len() as f64).ln();
        let mut best = f64::NEG_INFINITY;
        for &s in &states {
            self.dfs(s, 0, prior + self.obs(0, s), &mut best);
        }
        best
    }

    fn dfs(&self, s: (usize, usize), t: usize, score: f64, best: &mut f64) {
        if t + 1 == self.act.len() {
            *best = best.max(score);
            return;
        }
        for (n, lp) in self.successors(s) {
            self.dfs(n, t + 1, score + lp + self.obs(t + 1, n), best);
        }
    }

    pub fn score(&self, path: &[(usize, usize)]) -> f64 {
        let mut score = -(self.states().len() as f64).ln() + self.obs(0, path[0]);
        for t in 1..path.len() {
            let lp = self
                .successors(path[t - 1])
                .into_iter()
                .find(|(n, _)| *n == path[t])
                .map(|(_, lp)| lp)
                .unwrap_or(f64::NEG_INFINITY);
            score += lp + self.obs(t, path[t]);
        }
        score
    }
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (Oracle, StateSpace, ActivationCurve) {
    loop {
        let n_tempi = rng.gen_range(1..=5);
        let mut intervals: Vec<usize> = (0..n_tempi).map(|_| rng.gen_range(2..=60)).collect();
        intervals.sort_unstable();
        intervals.dedup();
        if intervals.iter().sum::<usize>() > 200 {
            continue;
        }
        let frames = rng.gen_range(1..=30);
        let act: Vec<f64> = (0..frames)
            .map(|_| match rng.gen_range(0..10) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.gen::<f64>(),
            })
            .collect();
        let obs_lambda = rng.gen_range(2..=16u32);
        let lambda = [0.5, 1.0, 5.0, 30.0, 100.0, 500.0][rng.gen_range(0..6)];
        let space = StateSpace::from_intervals(50.0, intervals.clone(), obs_lambda).unwrap();
        let beat_region = intervals
            .iter()
            .map(|&t| ((t as f64 / obs_lambda as f64).round() as usize).max(1))
            .collect();
        let oracle = Oracle {
            beat_region,
            intervals,
            lambda,
            obs_lambda: obs_lambda as f64,
            act: act.clone(),
        };
        if oracle.path_count() > MAX_PATHS {
            continue;
        }
        let curve = ActivationCurve::new(act, 50.0, "oracle").unwrap();
        return (oracle, space, curve);
    }
}

/// Maximum matching size by DP over (reference index, used-estimate mask).
pub fn max_matching(est: &[f64], reference: &[f64], window: f64) -> usize {
    fn go(i: usize, used: u32, est: &[f64], reference: &[f64], window: f64, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if i == reference.len() {
            return 0;
        }
        if let Some(v) = memo[i][used as usize] {
            return v;
        }
        let mut best = go(i + 1, used, est, reference, window, memo);
        for (j, &e) in est.iter().enumerate() {
            if used & (1 << j) == 0 && (e - reference[i]).abs() <= window {
                best = best.max(1 + go(i + 1, used | (1 << j), est, reference, window, memo));
            }
        }
        memo[i][used as usize] = Some(best);
        best
    }
    let mut memo = vec![vec![None; 1 << est.len()]; reference.len()];
    go(0, 0, est, reference, window, &mut memo)
}

pub fn oracle_f(est: &[f64], reference: &[f64], window: f64) -> f64 {
    match (est.is_empty(), reference.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => {
            let m = max_matching(est, reference, window) as f64;
            if m == 0.0 {
                0.0
            } else {
                2.0 * m / (est.len() + reference.len()) as f64
            }
        }
    }
}

pub fn clustered(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(0..8) as f64 * 0.1 + rng.gen_range(-0.09..0.09))
        .map(|x: f64| x.max(0.0))
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Deserialize)]
pub struct ContinuityCase {
    pub kind: String,
    pub reference: Vec<f64>,
    pub estimate: Vec<f64>,
    pub f_measure: f64,
    pub cmlc: f64,
    pub cmlt: f64,
    pub amlc: f64,
    pub amlt: f64,
}

pub fn continuity_cases() -> Vec<ContinuityCase> {
    let text = std::fs::read_to_string(format!("{FIXTURES}/continuity.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Draws an EvalResult satisfying cmlc <= cmlt <= amlt and cmlc <= amlc <= amlt.
pub fn ordered_result(rng: &mut ChaCha8Rng) -> EvalResult {
    let pick = |rng: &mut ChaCha8Rng| match rng.gen_range(0..8) {
        0 => 0.0,
        1 => 1.0,
        2 => [0.2, 0.25, 0.3, 0.5, 0.55, 0.8][rng.gen_range(0..6)],
        _ => rng.gen::<f64>(),
    };
    let amlt = pick(rng);
    let cmlt = pick(rng) * amlt;
    let amlc = pick(rng) * amlt;
    let cmlc = pick(rng) * cmlt.min(amlc);
    EvalResult {
        f_measure: pick(rng),
        cmlc,
        cmlt,
        amlc,
        amlt,
        n_ref: 10,
        n_est: 10,
    }
}

pub fn result(f: f64, cmlc: f64, cmlt: f64, amlt: f64) -> EvalResult {
    EvalResult {
        f_measure: f,
        cmlc,
        cmlt,
        amlc: amlt,
        amlt,
        n_ref: 10,
        n_est: 10,
    }
}

/// Independent restatement of the category predicates; exactly one must hold.
pub fn predicates(r: &EvalResult, c: &TaxonomyConfig) -> [bool; 5] {
    let good = r.f_measure >= c.good_f;
    let total = !good && r.f_measure < c.total_f && r.amlt < c.total_amlt;
    let octave = !good && !total && r.amlt - r.f_measure > c.octave_gap;
    let cont = !good && !total && !octave && r.cmlt - r.cmlc > c.continuity_gap;
    let other = !(good || total || octave || cont);
    [good, total, octave, cont, other]
}

pub fn pseudo_corpus(seed: u64, n: usize) -> (Vec<super::SynthTrack>, Vec<ActivationCurve>) {
    let tracks = super::corpus(seed, n, 30.0);
    let curves = tracks
        .iter()
        .enumerate()
        .map(|(i, t)| super::pseudo_model(&t.annotation, 0.3 + 0.7 * (i % 5) as f64 / 4.0, seed ^ i as u64))
        .collect();
    (tracks, curves)
}

pub fn pseudo_dataset(seed: u64, n: usize) -> Dataset {
    let (tracks, curves) = pseudo_corpus(seed, n);
    let mut ds = Dataset::from_annotations(super::annotations(&tracks));
    for (rec, c) in ds.tracks.iter_mut().zip(curves) {
        rec.activations.insert("pseudo".into(), c);
    }
    ds
}


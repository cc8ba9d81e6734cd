//! Independent reference computations shared by the integration suites.
//!
//! Nothing here calls into the code paths it is used to check: Owen values
//! come from enumerating orderings, tau-b from pair counting, average
//! precision from threshold enumeration, gradients from finite differences.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Random lexicon instance: distinct words with weights in [-3, 3].
pub struct LexiconCase {
    pub weights: Vec<(String, f64)>,
    pub intercept: f64,
    pub words: Vec<String>,
}

impl LexiconCase {
    pub fn random(rng: &mut ChaCha8Rng, min_len: usize, max_len: usize) -> Self {
        let vocab = 12;
        let weights: Vec<(String, f64)> = (0..vocab)
            .map(|i| (format!("w{i}"), rng.random_range(-3.0..3.0)))
            .collect();
        let len = rng.random_range(min_len..=max_len);
        let words = (0..len)
            .map(|_| weights[rng.random_range(0..vocab)].0.clone())
            .collect();
        LexiconCase {
            weights,
            intercept: rng.random_range(-1.0..1.0),
            words,
        }
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }

    pub fn weight(&self, word: &str) -> f64 {
        self.weights
            .iter()
            .find(|(w, _)| w == word)
            .map_or(0.0, |&(_, v)| v)
    }

    /// Positive-class probability with only the tokens in `keep` present.
    pub fn value(&self, keep: &[bool]) -> f64 {
        let z = self.intercept
            + self
                .words
                .iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(w, _)| self.weight(w))
                .sum::<f64>();
        logistic(z)
    }
}

/// Ranges of a balanced bisection hierarchy over `0..n` (split at ⌈len/2⌉).
pub fn bisection_ranges(n: usize) -> Vec<(usize, usize)> {
    fn go(s: usize, e: usize, out: &mut Vec<(usize, usize)>) {
        out.push((s, e));
        if e - s > 1 {
            let m = s + (e - s + 1) / 2;
            go(s, m, out);
            go(m, e, out);
        }
    }
    let mut out = Vec::new();
    go(0, n, &mut out);
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Owen values by averaging marginal contributions over all orderings in
/// which every hierarchy block appears contiguously.
pub fn owen_brute_force(n: usize, v: impl Fn(&[bool]) -> f64) -> Vec<f64> {
    let blocks = bisection_ranges(n);
    let mut memo = std::collections::HashMap::new();
    let mut value = |mask: &[bool]| -> f64 {
        *memo.entry(mask.to_vec()).or_insert_with(|| v(mask))
    };
    let mut totals = vec![0.0; n];
    let mut count = 0usize;
    for order in permutations(n) {
        let mut pos = vec![0; n];
        for (p, &i) in order.iter().enumerate() {
            pos[i] = p;
        }
        let consistent = blocks.iter().all(|&(s, e)| {
            let ps: Vec<usize> = (s..e).map(|i| pos[i]).collect();
            ps.iter().max().unwrap() - ps.iter().min().unwrap() == e - s - 1
        });
        if !consistent {
            continue;
        }
        count += 1;
        let mut mask = vec![false; n];
        let mut prev = value(&mask);
        for &i in &order {
            mask[i] = true;
            let cur = value(&mask);
            totals[i] += cur - prev;
            prev = cur;
        }
    }
    totals.into_iter().map(|t| t / count as f64).collect()
}

/// Tau-b by counting every pair.
pub fn kendall_pairs(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut c, mut d, mut tx, mut ty) = (0i128, 0i128, 0i128, 0i128);
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let dx = x[i].partial_cmp(&x[j]).unwrap();
            let dy = y[i].partial_cmp(&y[j]).unwrap();
            use std::cmp::Ordering::Equal;
            match (dx == Equal, dy == Equal) {
                (true, true) => {}
                (true, false) => tx += 1,
                (false, true) => ty += 1,
                (false, false) if dx == dy => c += 1,
                _ => d += 1,
            }
        }
    }
    let denom = ((c + d + tx) * (c + d + ty)) as u128;
    if denom == 0 {
        return None;
    }
    Some((c - d) as f64 / (denom as f64).sqrt())
}

/// Average precision by sweeping a threshold over the distinct scores:
/// `Σ (R_t - R_prev) · P_t`.
pub fn average_precision_thresholds(scores: &[f64], human: &[bool]) -> f64 {
    let positives = human.iter().filter(|&&h| h).count() as f64;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let selected: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let tp = selected.iter().filter(|&&i| human[i]).count() as f64;
        let precision = tp / selected.len() as f64;
        let recall = tp / positives;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    area
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

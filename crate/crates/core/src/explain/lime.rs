use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::weighted_ridge;
use crate::model::{Classifier, PredictionCache, RemovalStrategy, TokenizedInput};
use crate::scalar::Scalar;

use super::{Diagnostics, Explanation, Method, Perturber};

#[derive(Debug, Clone, PartialEq)]
pub struct LimeConfig {
    pub n_samples: usize,
    pub kernel_width: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            n_samples: 1000,
            kernel_width: 25.0,
            l2: 1.0,
            seed: 42,
        }
    }
}

/// Presence samples for LIME. Row 0 is the unperturbed instance; every
/// other row drops a uniformly drawn number of tokens in `[1, n)`, chosen
/// uniformly. With a single token each row keeps it with probability ½.
pub(crate) fn lime_samples(n: usize, n_samples: usize, seed: u64) -> Vec<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_samples);
    rows.push(vec![true; n]);
    for _ in 1..n_samples {
        if n == 1 {
            rows.push(vec![rng.random_bool(0.5)]);
            continue;
        }
        let count = rng.random_range(1..n);
        let mut row = vec![true; n];
        for i in index::sample(&mut rng, n, count) {
            row[i] = false;
        }
        rows.push(row);
    }
    rows
}

/// Cosine distance between a presence vector and the all-ones vector.
fn cosine_distance_to_full(present: usize, n: usize) -> f64 {
    if present == 0 {
        return 1.0;
    }
    1.0 - (present as f64 / n as f64).sqrt()
}

/// Local linear surrogate fitted on random token-removal perturbations.
pub fn explain_lime<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    cache: &PredictionCache<T>,
    x: &TokenizedInput,
    target: usize,
    strategy: RemovalStrategy,
    config: &LimeConfig,
) -> Result<Explanation<T>> {
    let n = x.n_content();
    if n == 0 {
        return Err(Error::InvalidInput("LIME needs at least one content token".into()));
    }
    if config.n_samples < n + 2 {
        return Err(Error::Config(format!(
            "LIME needs at least {} samples for {} tokens, got {}",
            n + 2,
            n,
            config.n_samples
        )));
    }
    if !(config.kernel_width > 0.0) || config.l2 < 0.0 {
        return Err(Error::Config("LIME kernel width must be positive and l2 non-negative".into()));
    }

    let rows = lime_samples(n, config.n_samples, config.seed);
    let p = Perturber::new(model, cache, x, target, strategy);
    let targets = p.values(&rows)?;
    let width2 = config.kernel_width * config.kernel_width;
    let weights: Vec<T> = rows
        .iter()
        .map(|r| {
            let d = cosine_distance_to_full(r.iter().filter(|&&b| b).count(), n);
            T::lit((-d * d / width2).exp())
        })
        .collect();
    let features: Vec<Vec<T>> = rows
        .iter()
        .map(|r| r.iter().map(|&b| if b { T::one() } else { T::zero() }).collect())
        .collect();
    let fit = weighted_ridge(&features, &targets, &weights, T::lit(config.l2))?;

    let mut e = Explanation::new(Method::Lime, target, x, fit.coefficients)?;
    e.diagnostics = Diagnostics {
        model_evaluations: p.evaluations(),
        samples: Some(config.n_samples),
        seed: Some(config.seed),
        r_squared: Some(fit.r_squared.as_f64()),
        ..Diagnostics::default()
    };
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{tokenize, LexiconModel, LexiconModelConfig};
    use crate::scalar::sigmoid;

    fn setup(text: &str) -> (LexiconModel<f64>, TokenizedInput) {
        let m = LexiconModel::new(LexiconModelConfig::new([
            ("great", 2.0),
            ("terrible", -2.0),
            ("movie", 0.0),
        ]))
        .unwrap();
        let x = tokenize(&m, &[text.into()], false).unwrap().remove(0);
        (m, x)
    }

    #[test]
    fn samples_follow_contract() {
        let rows = lime_samples(5, 300, 7);
        assert_eq!(rows.len(), 300);
        assert!(rows[0].iter().all(|&b| b));
        for r in &rows[1..] {
            let dropped = r.iter().filter(|&&b| !b).count();
            assert!((1..5).contains(&dropped));
        }
        assert_eq!(rows, lime_samples(5, 300, 7));
        assert_ne!(rows, lime_samples(5, 300, 8));
    }

    #[test]
    fn ranking_on_mixed_sentence() {
        let (m, x) = setup("great terrible movie");
        let e = explain_lime(&m, &PredictionCache::new(), &x, 1, RemovalStrategy::Delete, &LimeConfig::default())
            .unwrap();
        assert!(e.scores[0] > e.scores[2]);
        assert!(e.scores[2] > e.scores[1]);
        assert!(e.diagnostics.r_squared.unwrap() >= 0.8);
    }

    #[test]
    fn deterministic_for_seed() {
        let (m, x) = setup("great terrible movie great");
        let cfg = LimeConfig {
            seed: 11,
            ..LimeConfig::default()
        };
        let a = explain_lime(&m, &PredictionCache::new(), &x, 1, RemovalStrategy::Delete, &cfg).unwrap();
        let b = explain_lime(&m, &PredictionCache::new(), &x, 1, RemovalStrategy::Delete, &cfg).unwrap();
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn single_token_closed_form() {
        let (m, x) = setup("great");
        let cfg = LimeConfig::default();
        let e = explain_lime(&m, &PredictionCache::new(), &x, 1, RemovalStrategy::Delete, &cfg).unwrap();
        let delta = sigmoid(2.0) - 0.5;
        // Closed-form 1-D weighted ridge: β = Δ · Sxx / (Sxx + λ).
        let rows = lime_samples(1, cfg.n_samples, cfg.seed);
        let w_off = (-1.0f64 / (cfg.kernel_width * cfg.kernel_width)).exp();
        let ws: Vec<f64> = rows.iter().map(|r| if r[0] { 1.0 } else { w_off }).collect();
        let total: f64 = ws.iter().sum();
        let mean: f64 = rows.iter().zip(&ws).map(|(r, w)| if r[0] { *w } else { 0.0 }).sum::<f64>() / total;
        let sxx: f64 = rows
            .iter()
            .zip(&ws)
            .map(|(r, w)| {
                let z = if r[0] { 1.0 } else { 0.0 };
                w * (z - mean) * (z - mean)
            })
            .sum();
        let expected = delta * sxx / (sxx + cfg.l2);
        assert!((e.scores[0] - expected).abs() < 1e-12);
        assert!((e.scores[0] - delta).abs() <= cfg.l2 / sxx);
    }

    #[test]
    fn too_few_samples_rejected() {
        let (m, x) = setup("great terrible movie");
        let cfg = LimeConfig {
            n_samples: 4,
            ..LimeConfig::default()
        };
        assert!(matches!(
            explain_lime(&m, &PredictionCache::new(), &x, 1, RemovalStrategy::Delete, &cfg),
            Err(Error::Config(_))
        ));
    }
}

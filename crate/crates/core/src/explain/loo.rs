use crate::error::{Error, Result};
use crate::model::{Classifier, PredictionCache, RemovalStrategy, TokenizedInput};
use crate::scalar::Scalar;

use super::{Diagnostics, Explanation, Method, Perturber};

/// Leave-one-out: the drop in target probability when each content token
/// alone is removed.
pub fn explain_loo<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    cache: &PredictionCache<T>,
    x: &TokenizedInput,
    target: usize,
    strategy: RemovalStrategy,
) -> Result<Explanation<T>> {
    let n = x.n_content();
    if n == 0 {
        return Err(Error::InvalidInput("leave-one-out needs at least one content token".into()));
    }
    let p = Perturber::new(model, cache, x, target, strategy);
    let mut keeps = vec![vec![true; n]];
    keeps.extend((0..n).map(|i| {
        let mut k = vec![true; n];
        k[i] = false;
        k
    }));
    let values = p.values(&keeps)?;
    let full = values[0];
    let scores = values[1..].iter().map(|&v| full - v).collect();
    let mut e = Explanation::new(Method::Loo, target, x, scores)?;
    e.diagnostics = Diagnostics {
        model_evaluations: p.evaluations(),
        ..Diagnostics::default()
    };
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{tokenize, LexiconModel, LexiconModelConfig};
    use crate::scalar::sigmoid;

    #[test]
    fn great_movie() {
        let m: LexiconModel<f64> =
            LexiconModel::new(LexiconModelConfig::new([("great", 2.0), ("movie", 0.0)])).unwrap();
        let x = tokenize(&m, &["great movie".into()], false).unwrap().remove(0);
        let cache = PredictionCache::new();
        let e = explain_loo(&m, &cache, &x, 1, RemovalStrategy::Delete).unwrap();
        assert!((e.scores[0] - (sigmoid(2.0) - 0.5)).abs() < 1e-15);
        assert!((e.scores[0] - 0.3808).abs() < 1e-4);
        assert_eq!(e.scores[1], 0.0);
    }

    #[test]
    fn counts_n_plus_one_evaluations_cold() {
        let m: LexiconModel<f64> =
            LexiconModel::new(LexiconModelConfig::new([("a", 0.3), ("b", -0.1), ("c", 0.0), ("d", 1.0), ("e", 2.0)])).unwrap();
        let x = tokenize(&m, &["a b c d e".into()], false).unwrap().remove(0);
        let cache = PredictionCache::new();
        let e = explain_loo(&m, &cache, &x, 1, RemovalStrategy::Delete).unwrap();
        assert_eq!(e.diagnostics.model_evaluations, 6);
        let again = explain_loo(&m, &cache, &x, 1, RemovalStrategy::Delete).unwrap();
        assert_eq!(again.diagnostics.model_evaluations, 0);
        assert_eq!(again.scores, e.scores);
    }

    #[test]
    fn constant_model_is_zero() {
        let m: LexiconModel<f64> = LexiconModel::new(LexiconModelConfig::new([("a", 0.0)])).unwrap();
        let x = tokenize(&m, &["a b".into()], false).unwrap().remove(0);
        let e = explain_loo(&m, &PredictionCache::new(), &x, 0, RemovalStrategy::Mask).unwrap();
        assert_eq!(e.scores, vec![0.0, 0.0]);
    }
}

use crate::error::Result;
use crate::explain::{explain_loo, Explanation, Perturber};
use crate::model::{Classifier, PredictionCache, RemovalStrategy, TokenizedInput};
use crate::scalar::Scalar;

use super::discretize::{positive_topk_fraction, AOPC_PERCENTAGES};
use super::kendall::kendall_tau_b;
use super::{EvaluationScore, Metric};

fn aopc<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    cache: &PredictionCache<T>,
    x: &TokenizedInput,
    expl: &Explanation<T>,
    target: usize,
    strategy: RemovalStrategy,
    keep_rationale: bool,
) -> Result<T> {
    let n = x.n_content();
    let p = Perturber::new(model, cache, x, target, strategy);
    let mut keeps = vec![vec![true; n]];
    for k in AOPC_PERCENTAGES {
        let r = positive_topk_fraction(expl, k);
        keeps.push((0..n).map(|i| r.indices.contains(&i) == keep_rationale).collect());
    }
    let values = p.values(&keeps)?;
    let full = values[0];
    let total: T = values[1..].iter().map(|&v| full - v).sum();
    Ok(total / T::from_usize_lossy(AOPC_PERCENTAGES.len()))
}

/// Mean drop in target probability when the top-k% positive tokens are
/// removed, over k = 10, 20, …, 100.
pub fn aopc_comprehensiveness<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    cache: &PredictionCache<T>,
    x: &TokenizedInput,
    expl: &Explanation<T>,
    target: usize,
    strategy: RemovalStrategy,
) -> Result<EvaluationScore<T>> {
    let v = aopc(model, cache, x, expl, target, strategy, false)?;
    Ok(EvaluationScore::new(Metric::AopcCompr, Some(v)))
}

/// Mean drop in target probability when only the top-k% positive tokens
/// are kept, over k = 10, 20, …, 100.
pub fn aopc_sufficiency<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    cache: &PredictionCache<T>,
    x: &TokenizedInput,
    expl: &Explanation<T>,
    target: usize,
    strategy: RemovalStrategy,
) -> Result<EvaluationScore<T>> {
    let v = aopc(model, cache, x, expl, target, strategy, true)?;
    Ok(EvaluationScore::new(Metric::AopcSuff, Some(v)))
}

/// Kendall tau-b between the explanation and leave-one-out scores.
pub fn taucorr_loo<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    cache: &PredictionCache<T>,
    x: &TokenizedInput,
    expl: &Explanation<T>,
    target: usize,
    strategy: RemovalStrategy,
) -> Result<EvaluationScore<T>> {
    if x.n_content() < 2 {
        return Ok(EvaluationScore::new(Metric::TaucorrLoo, None));
    }
    let loo = explain_loo(model, cache, x, target, strategy)?;
    Ok(EvaluationScore::new(
        Metric::TaucorrLoo,
        kendall_tau_b(&expl.scores, &loo.scores),
    ))
}

use crate::explain::Explanation;
use crate::scalar::{rank_desc, Scalar};

use super::{Rationale, RationaleSource};

/// Percentages swept by the AOPC metrics.
pub const AOPC_PERCENTAGES: [usize; 10] = [10, 20, 30, 40, 50, 60, 70, 80, 90, 100];

/// Positive-score tokens, strongest first, ties by lower index.
fn positives_ranked<T: Scalar>(scores: &[T]) -> Vec<usize> {
    rank_desc(scores)
        .into_iter()
        .filter(|&i| scores[i] > T::zero())
        .collect()
}

/// The top `⌈k/100 · |P|⌉` tokens of the positive-score set `P`.
pub fn positive_topk_fraction<T: Scalar>(expl: &Explanation<T>, k_percent: usize) -> Rationale {
    let positives = positives_ranked(&expl.scores);
    let take = (k_percent * positives.len()).div_ceil(100).min(positives.len());
    Rationale {
        indices: positives.into_iter().take(take).collect(),
        source: RationaleSource::Predicted,
        origin_k: Some(k_percent),
    }
}

/// The top `min(k, |P|)` positive-score tokens.
pub fn discretize_topk<T: Scalar>(expl: &Explanation<T>, k: usize) -> Rationale {
    Rationale {
        indices: positives_ranked(&expl.scores).into_iter().take(k).collect(),
        source: RationaleSource::Predicted,
        origin_k: Some(k),
    }
}

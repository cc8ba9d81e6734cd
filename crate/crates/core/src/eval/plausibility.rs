use crate::explain::Explanation;
use crate::scalar::{rank_desc, Scalar};

use super::{EvaluationScore, HumanRationale, Metric, Rationale};

fn overlap(pred: &Rationale, human: &HumanRationale) -> usize {
    pred.indices
        .iter()
        .filter(|&&i| human.mask.get(i).copied().unwrap_or(false))
        .count()
}

/// `|pred ∩ human| / |pred ∪ human|`; not applicable for an empty human
/// rationale.
pub fn token_iou<T: Scalar>(pred: &Rationale, human: &HumanRationale) -> EvaluationScore<T> {
    let h = human.count();
    if h == 0 {
        return EvaluationScore::new(Metric::TokenIou, None);
    }
    let inter = overlap(pred, human);
    let union = pred.len() + h - inter;
    let v = T::from_usize_lossy(inter) / T::from_usize_lossy(union);
    EvaluationScore::new(Metric::TokenIou, Some(v))
}

/// Token-level F1 between predicted and human rationales.
pub fn token_f1<T: Scalar>(pred: &Rationale, human: &HumanRationale) -> EvaluationScore<T> {
    let h = human.count();
    if h == 0 {
        return EvaluationScore::new(Metric::TokenF1, None);
    }
    let inter = T::from_usize_lossy(overlap(pred, human));
    let precision = if pred.is_empty() {
        T::zero()
    } else {
        inter / T::from_usize_lossy(pred.len())
    };
    let recall = inter / T::from_usize_lossy(h);
    let f1 = if precision + recall == T::zero() {
        T::zero()
    } else {
        T::lit(2.0) * precision * recall / (precision + recall)
    };
    EvaluationScore::new(Metric::TokenF1, Some(f1))
}

/// Step-interpolated average precision of the score ranking against the
/// human rationale: `Σ precision@r · Δrecall` over ranks `r` holding a
/// human token.
pub fn auprc<T: Scalar>(expl: &Explanation<T>, human: &HumanRationale) -> EvaluationScore<T> {
    let h = human.count();
    if h == 0 || expl.is_empty() {
        return EvaluationScore::new(Metric::Auprc, None);
    }
    let mut hits = 0usize;
    let mut area = T::zero();
    for (rank, i) in rank_desc(&expl.scores).into_iter().enumerate() {
        if human.mask.get(i).copied().unwrap_or(false) {
            hits += 1;
            area = area + T::from_usize_lossy(hits) / T::from_usize_lossy(rank + 1);
        }
    }
    EvaluationScore::new(Metric::Auprc, Some(area / T::from_usize_lossy(h)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::{Diagnostics, Method};

    fn human(n: usize, idx: &[usize]) -> HumanRationale {
        HumanRationale::from_indices(n, idx.iter().copied())
    }

    fn expl(scores: &[f64]) -> Explanation<f64> {
        Explanation {
            method: Method::Lime,
            target: 0,
            token_strings: vec![String::new(); scores.len()],
            scores: scores.to_vec(),
            diagnostics: Diagnostics::default(),
        }
    }

    #[test]
    fn iou_examples() {
        let h = human(4, &[2, 3]);
        let v = |p: &[usize]| token_iou::<f64>(&Rationale::predicted(p.iter().copied()), &h).value;
        assert!((v(&[1, 2]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(v(&[2, 3]), Some(1.0));
        assert_eq!(v(&[]), Some(0.0));
        assert_eq!(token_iou::<f64>(&Rationale::predicted([1]), &human(4, &[])).value, None);
    }

    #[test]
    fn f1_examples() {
        let h = human(4, &[2, 3]);
        let v = |p: &[usize]| token_f1::<f64>(&Rationale::predicted(p.iter().copied()), &h).value;
        assert_eq!(v(&[1, 2]), Some(0.5));
        assert_eq!(v(&[2, 3]), Some(1.0));
        assert_eq!(v(&[0, 1]), Some(0.0));
        assert_eq!(v(&[]), Some(0.0));
    }

    #[test]
    fn auprc_examples() {
        assert_eq!(auprc(&expl(&[0.9, 0.1, 0.8]), &human(3, &[0, 2])).value, Some(1.0));
        assert_eq!(auprc(&expl(&[0.1, 0.9, 0.8, 0.7]), &human(4, &[0])).value, Some(0.25));
        assert_eq!(auprc(&expl(&[0.3, -0.9, 0.8]), &human(3, &[0, 1, 2])).value, Some(1.0));
        assert_eq!(auprc(&expl(&[0.3]), &human(1, &[])).value, None);
    }
}

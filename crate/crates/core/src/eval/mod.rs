//! Faithfulness and plausibility metrics for a single explanation.

mod discretize;
mod faithfulness;
mod kendall;
mod plausibility;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::Explanation;
use crate::model::{Classifier, PredictionCache, RemovalStrategy, TokenizedInput};
use crate::scalar::Scalar;

pub use discretize::{discretize_topk, positive_topk_fraction, AOPC_PERCENTAGES};
pub use faithfulness::{aopc_comprehensiveness, aopc_sufficiency, taucorr_loo};
pub use kendall::{kendall_tau_b, tau_counts, TauCounts};
pub use plausibility::{auprc, token_f1, token_iou};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AopcCompr,
    AopcSuff,
    TaucorrLoo,
    TokenIou,
    TokenF1,
    Auprc,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::AopcCompr,
        Metric::AopcSuff,
        Metric::TaucorrLoo,
        Metric::TokenIou,
        Metric::TokenF1,
        Metric::Auprc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::AopcCompr => "aopc_compr",
            Metric::AopcSuff => "aopc_suff",
            Metric::TaucorrLoo => "taucorr_loo",
            Metric::TokenIou => "token_iou",
            Metric::TokenF1 => "token_f1",
            Metric::Auprc => "auprc",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Metric::AopcSuff => Direction::LowerBetter,
            _ => Direction::HigherBetter,
        }
    }

    /// Whether the metric compares against a human rationale.
    pub fn is_plausibility(self) -> bool {
        matches!(self, Metric::TokenIou | Metric::TokenF1 | Metric::Auprc)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

/// A metric value; `None` encodes "not applicable" or "undefined".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EvaluationScore<T> {
    pub metric: Metric,
    pub value: Option<T>,
    pub direction: Direction,
}

impl<T: Scalar> EvaluationScore<T> {
    pub fn new(metric: Metric, value: Option<T>) -> Self {
        EvaluationScore {
            metric,
            value,
            direction: metric.direction(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RationaleSource {
    Predicted,
    Human,
}

/// Discrete set of content-token indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rationale {
    pub indices: BTreeSet<usize>,
    pub source: RationaleSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_k: Option<usize>,
}

impl Rationale {
    pub fn predicted(indices: impl IntoIterator<Item = usize>) -> Self {
        Rationale {
            indices: indices.into_iter().collect(),
            source: RationaleSource::Predicted,
            origin_k: None,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Human rationale as a binary mask over content tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanRationale {
    pub mask: Vec<bool>,
}

impl HumanRationale {
    pub fn new(mask: Vec<bool>) -> Self {
        HumanRationale { mask }
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = vec![false; n];
        for i in indices {
            mask[i] = true;
        }
        HumanRationale { mask }
    }

    pub fn indices(&self) -> BTreeSet<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn as_rationale(&self) -> Rationale {
        Rationale {
            indices: self.indices(),
            source: RationaleSource::Human,
            origin_k: None,
        }
    }
}

/// Everything the metrics need about one instance besides the explanation.
pub struct EvalContext<'a, T: Scalar, M: Classifier<T> + ?Sized> {
    pub model: &'a M,
    pub cache: &'a PredictionCache<T>,
    pub x: &'a TokenizedInput,
    pub target: usize,
    pub removal: RemovalStrategy,
    pub human: Option<&'a HumanRationale>,
    /// Rationale length used to discretize for IOU and F1.
    pub top_k: usize,
}

/// Computes each requested metric. Plausibility metrics evaluate to `None`
/// when no (non-empty) human rationale is available.
pub fn evaluate_explanation<T: Scalar, M: Classifier<T> + ?Sized>(
    ctx: &EvalContext<'_, T, M>,
    expl: &Explanation<T>,
    metrics: &[Metric],
) -> Result<Vec<EvaluationScore<T>>> {
    if expl.len() != ctx.x.n_content() {
        return Err(Error::InvalidInput(format!(
            "explanation covers {} tokens, instance has {}",
            expl.len(),
            ctx.x.n_content()
        )));
    }
    if let Some(h) = ctx.human {
        if h.mask.len() != ctx.x.n_content() {
            return Err(Error::InvalidInput(format!(
                "human rationale covers {} tokens, instance has {}",
                h.mask.len(),
                ctx.x.n_content()
            )));
        }
    }
    metrics
        .iter()
        .map(|&metric| {
            Ok(match metric {
                Metric::AopcCompr => aopc_comprehensiveness(
                    ctx.model, ctx.cache, ctx.x, expl, ctx.target, ctx.removal,
                )?,
                Metric::AopcSuff => {
                    aopc_sufficiency(ctx.model, ctx.cache, ctx.x, expl, ctx.target, ctx.removal)?
                }
                Metric::TaucorrLoo => {
                    taucorr_loo(ctx.model, ctx.cache, ctx.x, expl, ctx.target, ctx.removal)?
                }
                Metric::TokenIou | Metric::TokenF1 | Metric::Auprc => match ctx.human {
                    None => EvaluationScore::new(metric, None),
                    Some(human) => {
                        let pred = discretize_topk(expl, ctx.top_k.max(1));
                        match metric {
                            Metric::TokenIou => token_iou(&pred, human),
                            Metric::TokenF1 => token_f1(&pred, human),
                            _ => auprc(expl, human),
                        }
                    }
                },
            })
        })
        .collect()
}

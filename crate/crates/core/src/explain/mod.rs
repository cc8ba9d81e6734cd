//! Post-hoc feature attribution.
//!
//! Every explainer maps a tokenized instance and a target class to one real
//! score per content token. Special tokens are never attributed.

mod gradient;
mod lime;
mod loo;
mod partition;

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, removal_ids, Classifier, PredictionCache, RemovalStrategy, TokenizedInput};
use crate::scalar::Scalar;

pub use gradient::{explain_gradient, explain_integrated_gradients, ig_alphas, Baseline, IgConfig};
pub use lime::{explain_lime, LimeConfig};
pub use loo::explain_loo;
pub use partition::{explain_partition_shap, PartitionTree, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gradient,
    GradientXInput,
    IntegratedGradients,
    IntegratedGradientsXInput,
    Lime,
    PartitionShap,
    Loo,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Gradient,
        Method::GradientXInput,
        Method::IntegratedGradients,
        Method::IntegratedGradientsXInput,
        Method::Lime,
        Method::PartitionShap,
        Method::Loo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gradient => "gradient",
            Method::GradientXInput => "gradient_x_input",
            Method::IntegratedGradients => "integrated_gradients",
            Method::IntegratedGradientsXInput => "integrated_gradients_x_input",
            Method::Lime => "lime",
            Method::PartitionShap => "partition_shap",
            Method::Loo => "loo",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Method::Gradient => "g",
            Method::GradientXInput => "gxi",
            Method::IntegratedGradients => "ig",
            Method::IntegratedGradientsXInput => "igxi",
            Method::Lime => "lime",
            Method::PartitionShap => "shap",
            Method::Loo => "loo",
        }
    }

    pub fn needs_gradients(self) -> bool {
        matches!(
            self,
            Method::Gradient
                | Method::GradientXInput
                | Method::IntegratedGradients
                | Method::IntegratedGradientsXInput
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s || m.short_name() == s)
            .ok_or_else(|| Error::Config(format!("unknown explanation method `{s}`")))
    }
}

/// Run metadata attached to an explanation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Fresh model evaluations (cache misses) or gradient requests issued.
    pub model_evaluations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_squared: Option<f64>,
}

/// Continuous attribution scores over the content tokens of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Explanation<T> {
    pub method: Method,
    pub target: usize,
    #[serde(rename = "tokens")]
    pub token_strings: Vec<String>,
    pub scores: Vec<T>,
    pub diagnostics: Diagnostics,
}

impl<T: Scalar> Explanation<T> {
    pub fn new(method: Method, target: usize, x: &TokenizedInput, scores: Vec<T>) -> Result<Self> {
        if scores.len() != x.n_content() {
            return Err(Error::Numeric(format!(
                "{method}: {} scores for {} content tokens",
                scores.len(),
                x.n_content()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::Numeric(format!("{method}: non-finite score at token {i}")));
        }
        Ok(Explanation {
            method,
            target,
            token_strings: x.content_strings(),
            scores,
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Settings shared by all explainers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainerConfig {
    pub removal: RemovalStrategy,
    pub ig: IgConfig,
    pub lime: LimeConfig,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        ExplainerConfig {
            removal: RemovalStrategy::Delete,
            ig: IgConfig::default(),
            lime: LimeConfig::default(),
        }
    }
}

/// Runs `method` on `x` for class `target`.
pub fn explain<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    cache: &PredictionCache<T>,
    x: &TokenizedInput,
    target: usize,
    method: Method,
    config: &ExplainerConfig,
) -> Result<Explanation<T>> {
    if target >= model.info().num_labels() {
        return Err(Error::InvalidInput(format!(
            "target {target} out of range for {} labels",
            model.info().num_labels()
        )));
    }
    let removal = config.removal;
    match method {
        Method::Gradient => explain_gradient(model, x, target, false),
        Method::GradientXInput => explain_gradient(model, x, target, true),
        Method::IntegratedGradients => explain_integrated_gradients(
            model,
            x,
            target,
            &IgConfig {
                multiply_by_input: false,
                ..config.ig.clone()
            },
        ),
        Method::IntegratedGradientsXInput => explain_integrated_gradients(
            model,
            x,
            target,
            &IgConfig {
                multiply_by_input: true,
                ..config.ig.clone()
            },
        ),
        Method::Lime => explain_lime(model, cache, x, target, removal, &config.lime),
        Method::PartitionShap => explain_partition_shap(model, cache, x, target, removal),
        Method::Loo => explain_loo(model, cache, x, target, removal),
    }
}

/// Target-class probability of perturbed versions of one instance.
///
/// A perturbation is a keep-mask over content tokens. Evaluations go
/// through the shared prediction cache; fresh model calls are counted.
pub struct Perturber<'a, T: Scalar, M: Classifier<T> + ?Sized> {
    model: &'a M,
    cache: &'a PredictionCache<T>,
    x: &'a TokenizedInput,
    target: usize,
    strategy: RemovalStrategy,
    evaluations: Cell<usize>,
}

impl<'a, T: Scalar, M: Classifier<T> + ?Sized> Perturber<'a, T, M> {
    pub fn new(
        model: &'a M,
        cache: &'a PredictionCache<T>,
        x: &'a TokenizedInput,
        target: usize,
        strategy: RemovalStrategy,
    ) -> Self {
        Perturber {
            model,
            cache,
            x,
            target,
            strategy,
            evaluations: Cell::new(0),
        }
    }

    pub fn n_content(&self) -> usize {
        self.x.n_content()
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.get()
    }

    pub fn ids(&self, keep: &[bool]) -> Result<Vec<model::TokenId>> {
        removal_ids(self.x, keep, self.strategy, self.model.info().mask_token_id)
    }

    pub fn values(&self, keeps: &[Vec<bool>]) -> Result<Vec<T>> {
        if keeps.is_empty() {
            return Ok(Vec::new());
        }
        let batch = keeps
            .iter()
            .map(|k| self.ids(k))
            .collect::<Result<Vec<_>>>()?;
        let (rows, fresh) = model::predict_counted(self.model, &batch, self.cache)?;
        self.evaluations.set(self.evaluations.get() + fresh);
        Ok(rows.into_iter().map(|r| r[self.target]).collect())
    }

    pub fn value(&self, keep: &[bool]) -> Result<T> {
        Ok(self.values(&[keep.to_vec()])?[0])
    }

    /// Target probability of the unperturbed input.
    pub fn full(&self) -> Result<T> {
        self.value(&vec![true; self.n_content()])
    }
}

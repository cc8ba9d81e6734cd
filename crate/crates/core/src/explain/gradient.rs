use crate::error::{Error, Result};
use crate::model::{self, Classifier, GradientBundle, TokenId, TokenizedInput};
use crate::scalar::Scalar;

use super::{Diagnostics, Explanation, Method};

/// Reference input for path attribution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Baseline {
    /// Content tokens replaced by mask (or pad) embeddings.
    #[default]
    Default,
    Ids(Vec<TokenId>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IgConfig {
    pub steps: usize,
    pub multiply_by_input: bool,
    pub baseline: Baseline,
}

impl Default for IgConfig {
    fn default() -> Self {
        IgConfig {
            steps: 50,
            multiply_by_input: true,
            baseline: Baseline::Default,
        }
    }
}

/// Midpoint grid `(k - 1/2) / steps` for `k = 1..=steps`.
pub fn ig_alphas<T: Scalar>(steps: usize) -> Vec<T> {
    let n = T::from_usize_lossy(steps);
    (1..=steps)
        .map(|k| (T::from_usize_lossy(k) - T::lit(0.5)) / n)
        .collect()
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn l2<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

fn baseline_ids<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    x: &TokenizedInput,
    baseline: &Baseline,
) -> Result<Vec<TokenId>> {
    match baseline {
        Baseline::Default => model::default_baseline(model.info(), x),
        Baseline::Ids(ids) if ids.len() == x.len() => Ok(ids.clone()),
        Baseline::Ids(ids) => Err(Error::InvalidInput(format!(
            "baseline has {} tokens, input has {}",
            ids.len(),
            x.len()
        ))),
    }
}

/// Saliency: gradient of the target probability at the input.
///
/// The plain variant reports the L2 norm of each token's embedding
/// gradient; the ×input variant the signed dot product with the embedding.
pub fn explain_gradient<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    x: &TokenizedInput,
    target: usize,
    multiply_by_input: bool,
) -> Result<Explanation<T>> {
    // The baseline is irrelevant at alpha = 1 but the protocol requires one.
    let baseline = model::default_baseline(model.info(), x).unwrap_or_else(|_| x.token_ids.clone());
    let bundle = model::embedding_gradients(model, &x.token_ids, &baseline, target, &[T::one()])?;
    let grads = &bundle.grads[0];
    let scores = x
        .content_indices
        .iter()
        .map(|&i| {
            if multiply_by_input {
                dot(&grads[i], &bundle.input_embeddings[i])
            } else {
                l2(&grads[i])
            }
        })
        .collect();
    let method = if multiply_by_input {
        Method::GradientXInput
    } else {
        Method::Gradient
    };
    let mut e = Explanation::new(method, target, x, scores)?;
    e.diagnostics = Diagnostics {
        model_evaluations: 1,
        ..Diagnostics::default()
    };
    Ok(e)
}

/// Integrated gradients along the straight path from the baseline to the
/// input, with a midpoint Riemann sum over `steps` points.
pub fn explain_integrated_gradients<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    x: &TokenizedInput,
    target: usize,
    config: &IgConfig,
) -> Result<Explanation<T>> {
    if config.steps == 0 {
        return Err(Error::Config("integrated gradients needs steps >= 1".into()));
    }
    let baseline = baseline_ids(model, x, &config.baseline)?;
    let alphas = ig_alphas::<T>(config.steps);

    // Alphas are requested in chunks no larger than the batch limit.
    let chunk = model.info().max_batch_size.max(1);
    let mut requests = 0;
    let mut sum: Option<Vec<Vec<T>>> = None;
    let mut embeddings: Option<GradientBundle<T>> = None;
    for part in alphas.chunks(chunk) {
        let bundle = model::embedding_gradients(model, &x.token_ids, &baseline, target, part)?;
        requests += 1;
        let acc = sum.get_or_insert_with(|| {
            vec![vec![T::zero(); bundle.dim()]; bundle.input_embeddings.len()]
        });
        for slice in &bundle.grads {
            for (acc_row, row) in acc.iter_mut().zip(slice) {
                for (a, &g) in acc_row.iter_mut().zip(row) {
                    *a = *a + g;
                }
            }
        }
        if embeddings.is_none() {
            embeddings = Some(bundle);
        }
    }
    let (sum, bundle) = match (sum, embeddings) {
        (Some(s), Some(b)) => (s, b),
        _ => unreachable!("steps >= 1 yields at least one request"),
    };
    let steps = T::from_usize_lossy(config.steps);
    let scores = x
        .content_indices
        .iter()
        .map(|&i| {
            let mean: Vec<T> = sum[i].iter().map(|&g| g / steps).collect();
            if config.multiply_by_input {
                let delta: Vec<T> = bundle.input_embeddings[i]
                    .iter()
                    .zip(&bundle.baseline_embeddings[i])
                    .map(|(&xv, &bv)| xv - bv)
                    .collect();
                dot(&delta, &mean)
            } else {
                l2(&mean)
            }
        })
        .collect();
    let method = if config.multiply_by_input {
        Method::IntegratedGradientsXInput
    } else {
        Method::IntegratedGradients
    };
    let mut e = Explanation::new(method, target, x, scores)?;
    e.diagnostics = Diagnostics {
        model_evaluations: requests,
        steps: Some(config.steps),
        ..Diagnostics::default()
    };
    Ok(e)
}

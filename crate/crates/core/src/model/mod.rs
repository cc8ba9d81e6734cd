//! Uniform contract for tokenizing, scoring and differentiating a text
//! classifier.
//!
//! Every model is reached through [`Classifier`]. The free functions in this
//! module ([`tokenize`], [`predict`], [`embedding_gradients`]) wrap the raw
//! trait methods with validation, batching and caching, and are what the
//! explainers and metrics call.

mod cache;
mod lexicon;
mod remote;
mod removal;

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use cache::PredictionCache;
pub use lexicon::{LexiconModel, LexiconModelConfig, LexiconTokenizer, EMBEDDING_DIM};
pub use remote::{RemoteModel, RetryPolicy};
pub use removal::{apply_removal, removal_ids, RemovalStrategy};

pub type TokenId = u32;

/// Default request batch cap when a server does not advertise one.
pub const DEFAULT_MAX_BATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Predict,
    EmbeddingGradients,
}

/// Static description of a classifier, mirrored by the `/info` endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub model_id: String,
    pub labels: Vec<String>,
    pub capabilities: BTreeSet<Capability>,
    #[serde(default)]
    pub pad_token_id: Option<TokenId>,
    #[serde(default)]
    pub mask_token_id: Option<TokenId>,
    #[serde(default)]
    pub special_token_ids: BTreeSet<TokenId>,
    pub max_length: usize,
    #[serde(default = "default_max_batch")]
    pub max_batch_size: usize,
}

fn default_max_batch() -> usize {
    DEFAULT_MAX_BATCH
}

impl ModelInfo {
    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn supports(&self, cap: Capability) -> bool {
        self.capabilities.contains(&cap)
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() < 2 {
            return Err(Error::Protocol(format!(
                "model `{}` exposes {} label(s); at least 2 are required",
                self.model_id,
                self.labels.len()
            )));
        }
        if self.max_length == 0 || self.max_batch_size == 0 {
            return Err(Error::Protocol(
                "max_length and max_batch_size must be positive".into(),
            ));
        }
        if self.supports(Capability::EmbeddingGradients)
            && self.pad_token_id.is_none()
            && self.mask_token_id.is_none()
        {
            return Err(Error::Protocol(
                "embedding_gradients requires a pad or mask token id".into(),
            ));
        }
        Ok(())
    }
}

/// One model input: either raw text or a pre-split word sequence.
///
/// Word sequences yield `word_ids` on the tokenized output, which is what
/// rationale alignment needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TextInput {
    Text(String),
    Words(Vec<String>),
}

impl TextInput {
    pub fn words<S: AsRef<str>>(words: &[S]) -> Self {
        TextInput::Words(words.iter().map(|w| w.as_ref().to_string()).collect())
    }

    fn is_blank(&self) -> bool {
        match self {
            TextInput::Text(t) => t.trim().is_empty(),
            TextInput::Words(w) => w.iter().all(|w| w.trim().is_empty()),
        }
    }
}

impl From<&str> for TextInput {
    fn from(s: &str) -> Self {
        TextInput::Text(s.to_string())
    }
}

/// Tokenization of a single text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedInput {
    pub token_ids: Vec<TokenId>,
    #[serde(rename = "tokens")]
    pub token_strings: Vec<String>,
    /// Strictly increasing positions of the non-special tokens.
    pub content_indices: Vec<usize>,
    /// Source-word index per token, `None` on special tokens.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_ids: Option<Vec<Option<usize>>>,
}

impl TokenizedInput {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    pub fn n_content(&self) -> usize {
        self.content_indices.len()
    }

    pub fn content_strings(&self) -> Vec<String> {
        self.content_indices
            .iter()
            .map(|&i| self.token_strings[i].clone())
            .collect()
    }

    /// Word index of each content token (requires word-sequence input).
    pub fn content_word_ids(&self) -> Option<Vec<Option<usize>>> {
        let words = self.word_ids.as_ref()?;
        Some(self.content_indices.iter().map(|&i| words[i]).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.token_ids.len();
        if self.token_strings.len() != n {
            return Err(Error::Protocol(format!(
                "{} token ids but {} token strings",
                n,
                self.token_strings.len()
            )));
        }
        if self.content_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Protocol(
                "content_indices must be strictly increasing".into(),
            ));
        }
        if self.content_indices.last().is_some_and(|&i| i >= n) {
            return Err(Error::Protocol("content index out of range".into()));
        }
        if let Some(words) = &self.word_ids {
            if words.len() != n {
                return Err(Error::Protocol(format!(
                    "{} word ids for {} tokens",
                    words.len(),
                    n
                )));
            }
            let mut last = None;
            for &i in &self.content_indices {
                let w = words[i];
                if w.is_some() && last.is_some() && w < last {
                    return Err(Error::Protocol(
                        "word_ids must be non-decreasing over content tokens".into(),
                    ));
                }
                if w.is_some() {
                    last = w;
                }
            }
        }
        Ok(())
    }

    /// Drops trailing content tokens until the sequence fits `max_length`,
    /// keeping the leading and trailing special-token frame intact.
    pub fn truncated(&self, max_length: usize) -> Self {
        let excess = self.len().saturating_sub(max_length);
        if excess == 0 {
            return self.clone();
        }
        let mut drop: HashSet<usize> = HashSet::new();
        for &i in self.content_indices.iter().rev() {
            if drop.len() == excess {
                break;
            }
            drop.insert(i);
        }
        // Not enough content to drop: cut from the end regardless.
        let keep_pos: Vec<usize> = if drop.len() < excess {
            (0..max_length).collect()
        } else {
            (0..self.len()).filter(|i| !drop.contains(i)).collect()
        };
        let content: HashSet<usize> = self.content_indices.iter().copied().collect();
        let mut out = TokenizedInput {
            token_ids: Vec::with_capacity(keep_pos.len()),
            token_strings: Vec::with_capacity(keep_pos.len()),
            content_indices: Vec::new(),
            word_ids: self.word_ids.as_ref().map(|_| Vec::new()),
        };
        for (new_pos, &old) in keep_pos.iter().enumerate() {
            out.token_ids.push(self.token_ids[old]);
            out.token_strings.push(self.token_strings[old].clone());
            if content.contains(&old) {
                out.content_indices.push(new_pos);
            }
            if let (Some(dst), Some(src)) = (out.word_ids.as_mut(), self.word_ids.as_ref()) {
                dst.push(src[old]);
            }
        }
        out
    }
}

/// Embedding-space gradients of a target-class probability along a
/// straight path from a baseline to the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBundle<T> {
    pub alphas: Vec<T>,
    /// `grads[a][token][dim]`, evaluated at `B + alphas[a] * (X - B)`.
    pub grads: Vec<Vec<Vec<T>>>,
    pub input_embeddings: Vec<Vec<T>>,
    pub baseline_embeddings: Vec<Vec<T>>,
    pub target: usize,
}

impl<T: Scalar> GradientBundle<T> {
    pub fn dim(&self) -> usize {
        self.input_embeddings.first().map_or(0, Vec::len)
    }

    pub fn validate(&self, n_tokens: usize) -> Result<()> {
        if self.grads.len() != self.alphas.len() {
            return Err(Error::Protocol(format!(
                "{} gradient slices for {} alphas",
                self.grads.len(),
                self.alphas.len()
            )));
        }
        let dim = self.dim();
        let shape_ok = |m: &Vec<Vec<T>>| m.len() == n_tokens && m.iter().all(|r| r.len() == dim);
        if !shape_ok(&self.input_embeddings) || !shape_ok(&self.baseline_embeddings) {
            return Err(Error::Protocol("embedding matrix shape mismatch".into()));
        }
        for (a, slice) in self.grads.iter().enumerate() {
            if !shape_ok(slice) {
                return Err(Error::Protocol(format!(
                    "gradient slice {a} has the wrong shape"
                )));
            }
            if slice.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite gradient at alpha index {a}"
                )));
            }
        }
        let finite = |m: &Vec<Vec<T>>| m.iter().flatten().all(|v| v.is_finite());
        if !finite(&self.input_embeddings) || !finite(&self.baseline_embeddings) {
            return Err(Error::Numeric("non-finite embeddings".into()));
        }
        Ok(())
    }
}

/// Arguments of a gradient request, mirrored by the `/gradients` endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientRequest<T> {
    pub input_ids: Vec<TokenId>,
    pub baseline_ids: Vec<TokenId>,
    pub target: usize,
    pub alphas: Vec<T>,
}

/// A text classifier reachable through tokenization, probability scoring
/// and (optionally) embedding gradients.
///
/// Implementations are immutable after construction and shared across
/// threads.
pub trait Classifier<T: Scalar>: Send + Sync {
    fn info(&self) -> &ModelInfo;

    /// Raw tokenization, without length checks.
    fn tokenize_raw(&self, inputs: &[TextInput]) -> Result<Vec<TokenizedInput>>;

    /// Raw class probabilities for a batch no larger than `max_batch_size`.
    fn predict_raw(&self, batch: &[Vec<TokenId>]) -> Result<Vec<Vec<T>>>;

    fn gradients_raw(&self, request: &GradientRequest<T>) -> Result<GradientBundle<T>> {
        let _ = request;
        Err(Error::UnsupportedCapability("embedding_gradients".into()))
    }
}

/// Tokenizes `inputs`. Over-long inputs are an error unless `truncate` is
/// set, in which case trailing content tokens are dropped.
pub fn tokenize<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    inputs: &[TextInput],
    truncate: bool,
) -> Result<Vec<TokenizedInput>> {
    if let Some(i) = inputs.iter().position(TextInput::is_blank) {
        return Err(Error::InvalidInput(format!("input {i} is empty")));
    }
    let max_length = model.info().max_length;
    let raw = model.tokenize_raw(inputs)?;
    if raw.len() != inputs.len() {
        return Err(Error::Protocol(format!(
            "tokenizer returned {} results for {} inputs",
            raw.len(),
            inputs.len()
        )));
    }
    raw.into_iter()
        .enumerate()
        .map(|(index, t)| {
            t.validate()?;
            if t.len() > max_length {
                if !truncate {
                    return Err(Error::Truncation {
                        index,
                        length: t.len(),
                        max_length,
                    });
                }
                return Ok(t.truncated(max_length));
            }
            Ok(t)
        })
        .collect()
}

/// Class probabilities for `batch`, consulting and filling `cache`.
pub fn predict<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    batch: &[Vec<TokenId>],
    cache: &PredictionCache<T>,
) -> Result<Vec<Vec<T>>> {
    predict_counted(model, batch, cache).map(|(rows, _)| rows)
}

/// Like [`predict`], also returning how many sequences were freshly
/// evaluated by the model.
pub fn predict_counted<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    batch: &[Vec<TokenId>],
    cache: &PredictionCache<T>,
) -> Result<(Vec<Vec<T>>, usize)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty prediction batch".into()));
    }
    let info = model.info();
    if let Some((i, s)) = batch
        .iter()
        .enumerate()
        .find(|(_, s)| s.len() > info.max_length)
    {
        return Err(Error::Truncation {
            index: i,
            length: s.len(),
            max_length: info.max_length,
        });
    }

    let mut seen = HashSet::new();
    let missing: Vec<Vec<TokenId>> = batch
        .iter()
        .filter(|s| !cache.contains(s) && seen.insert(s.as_slice()))
        .cloned()
        .collect();

    for chunk in missing.chunks(info.max_batch_size) {
        let rows = model.predict_raw(chunk)?;
        if rows.len() != chunk.len() {
            return Err(Error::Protocol(format!(
                "{} probability rows for a batch of {}",
                rows.len(),
                chunk.len()
            )));
        }
        for (seq, row) in chunk.iter().zip(rows) {
            check_row(&row, info.num_labels())?;
            cache.insert(seq.clone(), row);
        }
    }

    let rows = batch
        .iter()
        .map(|s| {
            cache
                .get(s)
                .ok_or_else(|| Error::Protocol("cache miss after evaluation".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, missing.len()))
}

fn check_row<T: Scalar>(row: &[T], num_labels: usize) -> Result<()> {
    if row.len() != num_labels {
        return Err(Error::Protocol(format!(
            "probability row of length {} for {} labels",
            row.len(),
            num_labels
        )));
    }
    if row.iter().any(|p| !p.is_finite() || *p < T::zero()) {
        return Err(Error::Protocol("probability row has invalid entries".into()));
    }
    let total: T = row.iter().copied().sum();
    if (total - T::one()).abs() > T::simplex_tolerance() {
        return Err(Error::Protocol(format!(
            "probability row sums to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Validated embedding-gradient request.
pub fn embedding_gradients<T: Scalar, M: Classifier<T> + ?Sized>(
    model: &M,
    input_ids: &[TokenId],
    baseline_ids: &[TokenId],
    target: usize,
    alphas: &[T],
) -> Result<GradientBundle<T>> {
    let info = model.info();
    if !info.supports(Capability::EmbeddingGradients) {
        return Err(Error::UnsupportedCapability("embedding_gradients".into()));
    }
    if input_ids.len() != baseline_ids.len() {
        return Err(Error::InvalidInput(format!(
            "baseline length {} differs from input length {}",
            baseline_ids.len(),
            input_ids.len()
        )));
    }
    if target >= info.num_labels() {
        return Err(Error::InvalidInput(format!("target {target} out of range")));
    }
    if alphas.is_empty() || alphas.iter().any(|&a| !(a > T::zero() && a <= T::one())) {
        return Err(Error::InvalidInput("alphas must lie in (0, 1]".into()));
    }
    let request = GradientRequest {
        input_ids: input_ids.to_vec(),
        baseline_ids: baseline_ids.to_vec(),
        target,
        alphas: alphas.to_vec(),
    };
    let bundle = model.gradients_raw(&request)?;
    bundle.validate(input_ids.len())?;
    if bundle.target != target || bundle.alphas != alphas {
        return Err(Error::Protocol("gradient bundle does not echo the request".into()));
    }
    Ok(bundle)
}

/// Baseline ids for path attribution: content tokens replaced by the mask
/// token (or pad when no mask exists), special tokens kept.
pub fn default_baseline(info: &ModelInfo, tokenized: &TokenizedInput) -> Result<Vec<TokenId>> {
    let absent = info
        .mask_token_id
        .or(info.pad_token_id)
        .ok_or_else(|| Error::Config("model has neither a mask nor a pad token".into()))?;
    let mut ids = tokenized.token_ids.clone();
    for &i in &tokenized.content_indices {
        ids[i] = absent;
    }
    Ok(ids)
}

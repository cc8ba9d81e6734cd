//! Deterministic logistic bag-of-words classifier.
//!
//! The model scores `p(positive) = σ(intercept + Σ weight(token))` over the
//! content tokens. It is realized as an embedding-bag linear classifier so
//! that gradients with respect to token embeddings are exact: every token
//! with weight `w` embeds to `w · u`, where `u` is the unit readout vector.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{
    Capability, Classifier, GradientBundle, GradientRequest, ModelInfo, TextInput, TokenId,
    TokenizedInput,
};
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};

pub const EMBEDDING_DIM: usize = 4;

const PAD: TokenId = 0;
const UNK: TokenId = 1;
const MASK: TokenId = 2;
const CLS: TokenId = 3;
const SEP: TokenId = 4;
const FIRST_WORD_ID: TokenId = 5;
const SPECIALS: [&str; 5] = ["[PAD]", "[UNK]", "[MASK]", "[CLS]", "[SEP]"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LexiconTokenizer {
    /// One token per whitespace-separated word, no special tokens.
    #[default]
    Whitespace,
    /// `[CLS] … [SEP]` frame; out-of-vocabulary words are cut into pieces of
    /// at most `max_piece_chars` characters, continuation pieces prefixed
    /// with `##`.
    Subword { max_piece_chars: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconModelConfig {
    pub weights: BTreeMap<String, f64>,
    #[serde(default)]
    pub intercept: f64,
    #[serde(default)]
    pub tokenizer: LexiconTokenizer,
    #[serde(default = "default_max_length")]
    pub max_length: usize,
    #[serde(default = "default_max_batch")]
    pub max_batch_size: usize,
}

fn default_max_length() -> usize {
    512
}

fn default_max_batch() -> usize {
    super::DEFAULT_MAX_BATCH
}

impl LexiconModelConfig {
    pub fn new<S: Into<String>>(weights: impl IntoIterator<Item = (S, f64)>) -> Self {
        LexiconModelConfig {
            weights: weights.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            intercept: 0.0,
            tokenizer: LexiconTokenizer::Whitespace,
            max_length: default_max_length(),
            max_batch_size: default_max_batch(),
        }
    }

    pub fn with_intercept(mut self, intercept: f64) -> Self {
        self.intercept = intercept;
        self
    }

    pub fn with_tokenizer(mut self, tokenizer: LexiconTokenizer) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    /// Small sentiment lexicon used by the `builtin:lexicon` model spec.
    pub fn sentiment() -> Self {
        LexiconModelConfig::new([
            ("great", 2.0),
            ("good", 1.5),
            ("excellent", 2.5),
            ("stunning", 2.0),
            ("love", 1.8),
            ("fun", 1.0),
            ("enjoyable", 1.2),
            ("bad", -1.5),
            ("terrible", -2.0),
            ("awful", -2.5),
            ("boring", -1.8),
            ("nap", -1.2),
            ("dull", -1.4),
            ("hate", -2.0),
            ("waste", -1.6),
            ("not", -0.6),
        ])
    }
}

/// Builtin logistic lexicon classifier with labels `["negative", "positive"]`.
#[derive(Debug, Clone)]
pub struct LexiconModel<T> {
    info: ModelInfo,
    config: LexiconModelConfig,
    intercept: T,
    vocab: HashMap<String, TokenId>,
    /// Indexed by token id.
    weights: Vec<T>,
}

impl<T: Scalar> LexiconModel<T> {
    pub fn new(config: LexiconModelConfig) -> Result<Self> {
        if config.weights.is_empty() {
            return Err(Error::Config("lexicon weight table is empty".into()));
        }
        if let LexiconTokenizer::Subword { max_piece_chars: 0 } = config.tokenizer {
            return Err(Error::Config("max_piece_chars must be positive".into()));
        }
        if config.max_length == 0 || config.max_batch_size == 0 {
            return Err(Error::Config("max_length and max_batch_size must be positive".into()));
        }
        if config.weights.values().any(|w| !w.is_finite()) || !config.intercept.is_finite() {
            return Err(Error::Config("lexicon weights must be finite".into()));
        }
        let mut vocab = HashMap::new();
        let mut weights = vec![T::zero(); FIRST_WORD_ID as usize];
        for (offset, (word, &w)) in config.weights.iter().enumerate() {
            vocab.insert(word.clone(), FIRST_WORD_ID + offset as TokenId);
            weights.push(T::lit(w));
        }
        let framed = matches!(config.tokenizer, LexiconTokenizer::Subword { .. });
        let mut special: BTreeSet<TokenId> = [PAD, MASK].into();
        if framed {
            special.extend([CLS, SEP]);
        }
        let info = ModelInfo {
            model_id: match config.tokenizer {
                LexiconTokenizer::Whitespace => "builtin:lexicon".into(),
                LexiconTokenizer::Subword { .. } => "builtin:lexicon-subword".into(),
            },
            labels: vec!["negative".into(), "positive".into()],
            capabilities: [Capability::Predict, Capability::EmbeddingGradients].into(),
            pad_token_id: Some(PAD),
            mask_token_id: Some(MASK),
            special_token_ids: special,
            max_length: config.max_length,
            max_batch_size: config.max_batch_size,
        };
        Ok(LexiconModel {
            info,
            intercept: T::lit(config.intercept),
            config,
            vocab,
            weights,
        })
    }

    pub fn config(&self) -> &LexiconModelConfig {
        &self.config
    }

    fn lookup(&self, piece: &str) -> TokenId {
        self.vocab.get(piece).copied().unwrap_or(UNK)
    }

    fn weight(&self, id: TokenId) -> Result<T> {
        self.weights
            .get(id as usize)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown token id {id}")))
    }

    /// Readout vector `u`; unit norm.
    pub fn readout() -> [T; EMBEDDING_DIM] {
        [T::lit(0.5); EMBEDDING_DIM]
    }

    pub fn embedding(&self, id: TokenId) -> Result<Vec<T>> {
        let w = self.weight(id)?;
        Ok(Self::readout().iter().map(|&u| w * u).collect())
    }

    fn logit(&self, ids: &[TokenId]) -> Result<T> {
        let mut z = self.intercept;
        for &id in ids {
            z = z + self.weight(id)?;
        }
        Ok(z)
    }

    fn probabilities_from_logit(z: T) -> Vec<T> {
        let pos = sigmoid(z);
        vec![T::one() - pos, pos]
    }

    /// Class probabilities computed from an embedding matrix (one row per
    /// token).
    pub fn forward_embeddings(&self, embeddings: &[Vec<T>]) -> Vec<T> {
        let u = Self::readout();
        let z = embeddings.iter().fold(self.intercept, |acc, row| {
            acc + row.iter().zip(u.iter()).fold(T::zero(), |s, (&e, &u)| s + e * u)
        });
        Self::probabilities_from_logit(z)
    }

    /// Exact gradient of the `target` probability with respect to each
    /// embedding row.
    pub fn gradient_at(&self, embeddings: &[Vec<T>], target: usize) -> Vec<Vec<T>> {
        let probs = self.forward_embeddings(embeddings);
        let pos = probs[1];
        let mut slope = pos * (T::one() - pos);
        if target == 0 {
            slope = -slope;
        }
        let u = Self::readout();
        embeddings
            .iter()
            .map(|_| u.iter().map(|&u| slope * u).collect())
            .collect()
    }

    fn normalize(word: &str) -> String {
        word.trim_matches(|c: char| c.is_ascii_punctuation())
            .to_lowercase()
    }

    fn tokenize_words(&self, words: &[&str], track_words: bool) -> TokenizedInput {
        let mut out = TokenizedInput {
            token_ids: Vec::new(),
            token_strings: Vec::new(),
            content_indices: Vec::new(),
            word_ids: track_words.then(Vec::new),
        };
        let framed = matches!(self.config.tokenizer, LexiconTokenizer::Subword { .. });
        let push_special = |out: &mut TokenizedInput, id: TokenId| {
            out.token_ids.push(id);
            out.token_strings.push(SPECIALS[id as usize].to_string());
            if let Some(w) = out.word_ids.as_mut() {
                w.push(None);
            }
        };
        if framed {
            push_special(&mut out, CLS);
        }
        for (word_index, word) in words.iter().enumerate() {
            for (piece, key) in self.pieces(word) {
                out.content_indices.push(out.token_ids.len());
                out.token_ids.push(self.lookup(&key));
                out.token_strings.push(piece);
                if let Some(w) = out.word_ids.as_mut() {
                    w.push(Some(word_index));
                }
            }
        }
        if framed {
            push_special(&mut out, SEP);
        }
        out
    }

    /// `(display string, vocabulary key)` for each piece of `word`.
    fn pieces(&self, word: &str) -> Vec<(String, String)> {
        let key = Self::normalize(word);
        match self.config.tokenizer {
            LexiconTokenizer::Whitespace => vec![(word.to_string(), key)],
            LexiconTokenizer::Subword { max_piece_chars } => {
                let chars: Vec<char> = word.chars().collect();
                if self.vocab.contains_key(&key) || chars.len() <= max_piece_chars {
                    return vec![(word.to_string(), key)];
                }
                chars
                    .chunks(max_piece_chars)
                    .enumerate()
                    .map(|(i, chunk)| {
                        let s: String = chunk.iter().collect();
                        let piece = if i == 0 { s } else { format!("##{s}") };
                        let key = piece.to_lowercase();
                        (piece, key)
                    })
                    .collect()
            }
        }
    }
}

impl<T: Scalar> Classifier<T> for LexiconModel<T> {
    fn info(&self) -> &ModelInfo {
        &self.info
    }

    fn tokenize_raw(&self, inputs: &[TextInput]) -> Result<Vec<TokenizedInput>> {
        Ok(inputs
            .iter()
            .map(|input| match input {
                TextInput::Text(text) => {
                    let words: Vec<&str> = text.split_whitespace().collect();
                    self.tokenize_words(&words, false)
                }
                TextInput::Words(words) => {
                    let words: Vec<&str> = words.iter().map(String::as_str).collect();
                    self.tokenize_words(&words, true)
                }
            })
            .collect())
    }

    fn predict_raw(&self, batch: &[Vec<TokenId>]) -> Result<Vec<Vec<T>>> {
        batch
            .iter()
            .map(|ids| self.logit(ids).map(Self::probabilities_from_logit))
            .collect()
    }

    fn gradients_raw(&self, request: &GradientRequest<T>) -> Result<GradientBundle<T>> {
        let embed = |ids: &[TokenId]| -> Result<Vec<Vec<T>>> {
            ids.iter().map(|&id| self.embedding(id)).collect()
        };
        let input = embed(&request.input_ids)?;
        let baseline = embed(&request.baseline_ids)?;
        let grads = request
            .alphas
            .iter()
            .map(|&a| {
                let point: Vec<Vec<T>> = input
                    .iter()
                    .zip(&baseline)
                    .map(|(x, b)| x.iter().zip(b).map(|(&x, &b)| b + a * (x - b)).collect())
                    .collect();
                self.gradient_at(&point, request.target)
            })
            .collect();
        Ok(GradientBundle {
            alphas: request.alphas.clone(),
            grads,
            input_embeddings: input,
            baseline_embeddings: baseline,
            target: request.target,
        })
    }
}

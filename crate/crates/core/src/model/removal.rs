use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{TokenId, TokenizedInput};
use crate::error::{Error, Result};

/// How dropped content tokens are realized in the perturbed sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalStrategy {
    /// Remove the token, shortening the sequence.
    #[default]
    Delete,
    /// Replace the token with the model's mask token.
    Mask,
}

impl std::str::FromStr for RemovalStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delete" => Ok(RemovalStrategy::Delete),
            "mask" => Ok(RemovalStrategy::Mask),
            other => Err(Error::Config(format!("unknown removal strategy `{other}`"))),
        }
    }
}

/// Token ids with only the content tokens listed in `keep` surviving.
///
/// `keep` holds content-token positions (indices into `content_indices`).
/// Special tokens are always preserved.
pub fn apply_removal(
    tokenized: &TokenizedInput,
    keep: &BTreeSet<usize>,
    strategy: RemovalStrategy,
    mask_token_id: Option<TokenId>,
) -> Result<Vec<TokenId>> {
    let n = tokenized.n_content();
    if let Some(&bad) = keep.iter().find(|&&k| k >= n) {
        return Err(Error::InvalidInput(format!(
            "keep index {bad} out of range for {n} content tokens"
        )));
    }
    let mask: Vec<bool> = (0..n).map(|i| keep.contains(&i)).collect();
    removal_ids(tokenized, &mask, strategy, mask_token_id)
}

/// Mask-based form of [`apply_removal`]; `keep[i]` refers to content token `i`.
pub fn removal_ids(
    tokenized: &TokenizedInput,
    keep: &[bool],
    strategy: RemovalStrategy,
    mask_token_id: Option<TokenId>,
) -> Result<Vec<TokenId>> {
    if keep.len() != tokenized.n_content() {
        return Err(Error::InvalidInput(format!(
            "keep mask of length {} for {} content tokens",
            keep.len(),
            tokenized.n_content()
        )));
    }
    let mask_id = match strategy {
        RemovalStrategy::Mask => Some(mask_token_id.ok_or_else(|| {
            Error::Config("mask removal requires a model with a mask token".into())
        })?),
        RemovalStrategy::Delete => None,
    };
    let mut dropped = vec![false; tokenized.len()];
    for (c, &pos) in tokenized.content_indices.iter().enumerate() {
        dropped[pos] = !keep[c];
    }
    let mut out = Vec::with_capacity(tokenized.len());
    for (pos, &id) in tokenized.token_ids.iter().enumerate() {
        match (dropped[pos], mask_id) {
            (false, _) => out.push(id),
            (true, Some(m)) => out.push(m),
            (true, None) => {}
        }
    }
    Ok(out)
}

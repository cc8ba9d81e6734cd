use crate::error::{Error, Result};
use crate::eval::HumanRationale;
use crate::model::TokenizedInput;

use super::RationaleInstance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedRationale {
    pub rationale: HumanRationale,
    pub warnings: Vec<String>,
}

/// Projects a word-level rationale onto content tokens: every sub-word
/// piece of a rationale word is marked.
pub fn align_rationale(instance: &RationaleInstance, tokenized: &TokenizedInput) -> Result<AlignedRationale> {
    let word_ids = tokenized.content_word_ids().ok_or_else(|| {
        Error::Alignment(format!(
            "instance `{}` was not tokenized from a word sequence",
            instance.id
        ))
    })?;
    let mut seen = vec![false; instance.words.len()];
    let mut mask = Vec::with_capacity(word_ids.len());
    for w in word_ids {
        let marked = match w {
            Some(w) if w < instance.words.len() => {
                seen[w] = true;
                instance.word_rationale[w]
            }
            Some(w) => {
                return Err(Error::Alignment(format!(
                    "instance `{}`: word id {w} beyond {} words",
                    instance.id,
                    instance.words.len()
                )))
            }
            None => false,
        };
        mask.push(marked);
    }
    let lost: Vec<usize> = (0..instance.words.len())
        .filter(|&w| instance.word_rationale[w] && !seen[w])
        .collect();
    let warnings = if lost.is_empty() {
        Vec::new()
    } else {
        vec![format!(
            "instance `{}`: {} rationale word(s) dropped by truncation",
            instance.id,
            lost.len()
        )]
    };
    Ok(AlignedRationale {
        rationale: HumanRationale::new(mask),
        warnings,
    })
}

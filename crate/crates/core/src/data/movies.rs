//! Converter for the ERASER release of the movie-review corpus.
//!
//! Documents are whitespace-tokenized text files named by document id.
//! Annotation files are JSONL with the gold class (`POS`/`NEG`) and
//! evidence spans given as `[start_token, end_token)` over the document.

use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::{write_corpus_jsonl, Corpus, RationaleInstance, Split};
use crate::error::{Error, Result};

pub const LABELS: [&str; 2] = ["NEG", "POS"];

#[derive(Debug, Deserialize)]
struct Evidence {
    docid: Option<String>,
    start_token: usize,
    end_token: usize,
}

#[derive(Debug, Deserialize)]
struct Annotation {
    annotation_id: String,
    classification: String,
    #[serde(default)]
    evidences: Vec<Vec<Evidence>>,
    #[serde(default)]
    docids: Option<Vec<String>>,
}

/// Marks `[start, end)` spans in a mask of `len` words.
pub fn span_mask(len: usize, spans: &[(usize, usize)]) -> std::result::Result<Vec<bool>, String> {
    let mut mask = vec![false; len];
    for &(start, end) in spans {
        if start > end || end > len {
            return Err(format!("span [{start}, {end}) outside a document of {len} words"));
        }
        mask[start..end].iter_mut().for_each(|b| *b = true);
    }
    Ok(mask)
}

fn split_from_path(path: &Path) -> Option<Split> {
    path.file_stem()?.to_str()?.parse().ok()
}

/// Converts ERASER movie annotations; the split comes from `split` or the
/// annotation file name (`train`, `val`, `test`).
pub fn convert_movies_eraser(
    docs_dir: impl AsRef<Path>,
    annotations_path: impl AsRef<Path>,
    out_path: impl AsRef<Path>,
    split: Option<Split>,
) -> Result<Corpus> {
    let docs_dir = docs_dir.as_ref();
    let annotations_path = annotations_path.as_ref();
    let split = split
        .or_else(|| split_from_path(annotations_path))
        .unwrap_or(Split::Test);
    let reader = BufReader::new(File::open(annotations_path)?);
    let mut instances = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ann: Annotation = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let docid = ann
            .docids
            .as_ref()
            .and_then(|d| d.first().cloned())
            .unwrap_or_else(|| ann.annotation_id.clone());
        let text = fs::read_to_string(docs_dir.join(&docid))?;
        let words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let spans: Vec<(usize, usize)> = ann
            .evidences
            .iter()
            .flatten()
            .filter(|e| e.docid.as_deref().is_none_or(|d| d == docid))
            .map(|e| (e.start_token, e.end_token))
            .collect();
        let word_rationale = span_mask(words.len(), &spans).map_err(|message| Error::Validation {
            id: ann.annotation_id.clone(),
            message,
        })?;
        let label_index = LABELS
            .iter()
            .position(|&l| l == ann.classification)
            .ok_or_else(|| Error::Validation {
                id: ann.annotation_id.clone(),
                message: format!("unknown class `{}`", ann.classification),
            })?;
        instances.push(RationaleInstance {
            id: ann.annotation_id,
            words,
            label_name: LABELS[label_index].to_string(),
            label_index,
            word_rationale,
            split,
        });
    }
    let corpus = Corpus::new("movies", LABELS.iter().map(|s| s.to_string()).collect(), instances)?;
    write_corpus_jsonl(&corpus, out_path)?;
    Ok(corpus)
}

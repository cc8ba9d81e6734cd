//! Converter for the HateXplain release (`dataset.json`).
//!
//! Each post carries its tokens, one label per annotator and one binary
//! rationale array per annotator who marked a span. The gold label is the
//! absolute-majority annotator label; posts without one are skipped.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{write_corpus_jsonl, Corpus, RationaleInstance, Split};
use crate::error::{Error, Result};

/// Label set of the converted corpus, in index order.
pub const LABELS: [&str; 3] = ["hatespeech", "normal", "offensive"];

/// How per-annotator rationale arrays are combined into one mask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RationaleAggregation {
    /// A token is marked when at least `⌈A/2⌉` of `A` annotators mark it.
    #[default]
    Majority,
    /// A token is marked when any annotator marks it.
    Union,
}

#[derive(Debug, Clone, Default)]
pub struct HateXplainOptions {
    pub aggregation: RationaleAggregation,
    /// Optional `post_id_divisions.json` assigning posts to splits. Posts not
    /// listed (or all posts, without the file) go to `default_split`.
    pub divisions: Option<std::path::PathBuf>,
    pub default_split: Option<Split>,
}

#[derive(Debug, Deserialize)]
struct RawAnnotator {
    label: String,
}

#[derive(Debug, Deserialize)]
struct RawPost {
    post_id: String,
    annotators: Vec<RawAnnotator>,
    #[serde(default)]
    rationales: Vec<Vec<u8>>,
    post_tokens: Vec<String>,
}

/// Result of a conversion: the corpus plus ids of skipped posts.
#[derive(Debug, Clone)]
pub struct Conversion {
    pub corpus: Corpus,
    pub skipped: Vec<String>,
}

/// Absolute-majority label, if any.
pub fn majority_label<'a>(labels: &[&'a str]) -> Option<&'a str> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts
        .into_iter()
        .find(|&(_, c)| 2 * c > labels.len())
        .map(|(l, _)| l)
}

/// Combines annotator rationale arrays into one word mask.
pub fn aggregate_rationales(arrays: &[Vec<u8>], len: usize, how: RationaleAggregation) -> Vec<bool> {
    if arrays.is_empty() {
        return vec![false; len];
    }
    let needed = match how {
        RationaleAggregation::Majority => arrays.len().div_ceil(2),
        RationaleAggregation::Union => 1,
    };
    (0..len)
        .map(|i| arrays.iter().filter(|a| a.get(i).copied().unwrap_or(0) != 0).count() >= needed)
        .collect()
}

fn normalize_label(label: &str) -> String {
    match label {
        "hate speech" | "hateful" | "hate" => "hatespeech".into(),
        other => other.to_string(),
    }
}

fn load_divisions(path: &Path) -> Result<HashMap<String, Split>> {
    let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
    let mut out = HashMap::new();
    for (split, ids) in raw {
        let split: Split = split.parse()?;
        for id in ids {
            out.insert(id, split);
        }
    }
    Ok(out)
}

/// Converts a HateXplain JSON document held in memory.
pub fn convert_hatexplain_str(raw: &str, options: &HateXplainOptions) -> Result<Conversion> {
    let posts: BTreeMap<String, RawPost> = serde_json::from_str(raw).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let divisions = match &options.divisions {
        Some(p) => load_divisions(p)?,
        None => HashMap::new(),
    };
    let default_split = options.default_split.unwrap_or(Split::Test);

    let mut instances = Vec::new();
    let mut skipped = Vec::new();
    for (key, post) in posts {
        let labels: Vec<String> = post.annotators.iter().map(|a| normalize_label(&a.label)).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let Some(label) = majority_label(&refs) else {
            skipped.push(post.post_id.clone());
            continue;
        };
        let label_index = LABELS.iter().position(|&l| l == label).ok_or_else(|| Error::Validation {
            id: post.post_id.clone(),
            message: format!("unknown label `{label}`"),
        })?;
        let n = post.post_tokens.len();
        if let Some(bad) = post.rationales.iter().find(|r| r.len() != n) {
            return Err(Error::Validation {
                id: post.post_id.clone(),
                message: format!("rationale array of length {} for {n} tokens", bad.len()),
            });
        }
        let word_rationale = if label == "normal" {
            vec![false; n]
        } else {
            aggregate_rationales(&post.rationales, n, options.aggregation)
        };
        let split = divisions.get(&post.post_id).or_else(|| divisions.get(&key)).copied();
        instances.push(RationaleInstance {
            id: post.post_id,
            words: post.post_tokens,
            label_name: label.to_string(),
            label_index,
            word_rationale,
            split: split.unwrap_or(default_split),
        });
    }
    let corpus = Corpus::new(
        "hatexplain",
        LABELS.iter().map(|s| s.to_string()).collect(),
        instances,
    )?;
    Ok(Conversion { corpus, skipped })
}

/// Converts the release at `raw_json_path` and writes normalized JSONL to
/// `out_path`.
pub fn convert_hatexplain(
    raw_json_path: impl AsRef<Path>,
    out_path: impl AsRef<Path>,
    options: &HateXplainOptions,
) -> Result<Conversion> {
    let raw = fs::read_to_string(raw_json_path)?;
    let conversion = convert_hatexplain_str(&raw, options)?;
    write_corpus_jsonl(&conversion.corpus, out_path)?;
    Ok(conversion)
}

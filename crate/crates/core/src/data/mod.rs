//! Rationale-annotated classification corpora.
//!
//! Corpora live in a normalized JSONL format, one [`RationaleInstance`] per
//! line. Public releases enter through the converters in [`hatexplain`] and
//! [`movies`].

mod align;
pub mod hatexplain;
pub mod movies;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use align::{align_rationale, AlignedRationale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    #[serde(alias = "val", alias = "dev")]
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" | "dev" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// One annotated example with a word-level rationale mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationaleInstance {
    pub id: String,
    pub words: Vec<String>,
    pub label_name: String,
    pub label_index: usize,
    #[serde(rename = "rationale", serialize_with = "bits_out", deserialize_with = "bits_in")]
    pub word_rationale: Vec<bool>,
    pub split: Split,
}

fn bits_out<S: Serializer>(bits: &[bool], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(bits.iter().map(|&b| b as u8))
}

fn bits_in<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<bool>, D::Error> {
    let raw = Vec::<u8>::deserialize(d)?;
    raw.into_iter()
        .map(|b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!(
                "rationale entries must be 0 or 1, found {other}"
            ))),
        })
        .collect()
}

impl RationaleInstance {
    pub fn rationale_len(&self) -> usize {
        self.word_rationale.iter().filter(|&&b| b).count()
    }

    pub fn has_rationale(&self) -> bool {
        self.word_rationale.iter().any(|&b| b)
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }

    pub fn validate(&self) -> Result<()> {
        if self.word_rationale.len() != self.words.len() {
            return Err(Error::Validation {
                id: self.id.clone(),
                message: format!(
                    "rationale has {} entries for {} words",
                    self.word_rationale.len(),
                    self.words.len()
                ),
            });
        }
        if self.words.is_empty() {
            return Err(Error::Validation {
                id: self.id.clone(),
                message: "instance has no words".into(),
            });
        }
        Ok(())
    }
}

/// An immutable collection of annotated instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub labels: Vec<String>,
    pub instances: Vec<RationaleInstance>,
    /// Average human-rationale length `K` used for top-K discretization.
    pub avg_rationale_len: usize,
}

impl Corpus {
    /// Builds a corpus, validating every instance and deriving `K`.
    pub fn new(name: impl Into<String>, labels: Vec<String>, instances: Vec<RationaleInstance>) -> Result<Self> {
        for inst in &instances {
            inst.validate()?;
            match labels.get(inst.label_index) {
                Some(l) if *l == inst.label_name => {}
                _ => {
                    return Err(Error::Validation {
                        id: inst.id.clone(),
                        message: format!(
                            "label `{}` at index {} does not match the label set {:?}",
                            inst.label_name, inst.label_index, labels
                        ),
                    })
                }
            }
        }
        let avg_rationale_len = average_rationale_len(&instances);
        Ok(Corpus {
            name: name.into(),
            labels,
            instances,
            avg_rationale_len,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// Round-half-up mean rationale length over instances with a non-empty
/// rationale; at least 1.
pub fn average_rationale_len(instances: &[RationaleInstance]) -> usize {
    let lens: Vec<usize> = instances
        .iter()
        .map(RationaleInstance::rationale_len)
        .filter(|&l| l > 0)
        .collect();
    if lens.is_empty() {
        return 1;
    }
    let sum: usize = lens.iter().sum();
    let count = lens.len();
    ((2 * sum + count) / (2 * count)).max(1)
}

/// Reads a normalized JSONL corpus. The corpus is named after the file stem.
pub fn load_corpus_jsonl(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut instances = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: RationaleInstance = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        inst.validate()?;
        instances.push(inst);
    }
    let labels = label_set(&instances)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".into());
    Corpus::new(name, labels, instances)
}

/// Label names indexed by `label_index`, inferred from the instances.
fn label_set(instances: &[RationaleInstance]) -> Result<Vec<String>> {
    let mut names: BTreeMap<usize, &str> = BTreeMap::new();
    for inst in instances {
        if let Some(prev) = names.insert(inst.label_index, &inst.label_name) {
            if prev != inst.label_name {
                return Err(Error::Validation {
                    id: inst.id.clone(),
                    message: format!(
                        "label index {} is named both `{prev}` and `{}`",
                        inst.label_index, inst.label_name
                    ),
                });
            }
        }
    }
    let size = names.keys().next_back().map_or(0, |&m| m + 1);
    Ok((0..size)
        .map(|i| {
            names
                .get(&i)
                .map_or_else(|| format!("label_{i}"), |s| s.to_string())
        })
        .collect())
}

pub fn write_corpus_jsonl(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for inst in &corpus.instances {
        serde_json::to_writer(&mut out, inst)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".jsonl").tempfile().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn k_is_rounded_mean() {
        let f = write(&[
            r#"{"id":"a","words":["w","x","y","z"],"label_name":"neg","label_index":0,"rationale":[1,1,0,0],"split":"test"}"#,
            r#"{"id":"b","words":["w","x","y","z"],"label_name":"pos","label_index":1,"rationale":[1,1,1,1],"split":"test"}"#,
        ]);
        let c = load_corpus_jsonl(f.path()).unwrap();
        assert_eq!(c.avg_rationale_len, 3);
        assert_eq!(c.labels, vec!["neg", "pos"]);
    }

    #[test]
    fn k_floor_when_no_rationales() {
        let f = write(&[
            r#"{"id":"a","words":["w"],"label_name":"neg","label_index":0,"rationale":[0],"split":"train"}"#,
        ]);
        assert_eq!(load_corpus_jsonl(f.path()).unwrap().avg_rationale_len, 1);
    }

    #[test]
    fn k_rounds_half_up() {
        let inst = |id: &str, bits: Vec<bool>| RationaleInstance {
            id: id.into(),
            words: vec!["w".into(); bits.len()],
            label_name: "l".into(),
            label_index: 0,
            word_rationale: bits,
            split: Split::Test,
        };
        let v = vec![inst("a", vec![true, false]), inst("b", vec![true, true])];
        assert_eq!(average_rationale_len(&v), 2);
        let v = vec![inst("a", vec![true, false, false]), inst("b", vec![true, true, false])];
        assert_eq!(average_rationale_len(&v), 2);
    }

    #[test]
    fn length_mismatch_names_instance() {
        let f = write(&[
            r#"{"id":"bad-1","words":["w","x"],"label_name":"neg","label_index":0,"rationale":[1],"split":"test"}"#,
        ]);
        match load_corpus_jsonl(f.path()).unwrap_err() {
            Error::Validation { id, .. } => assert_eq!(id, "bad-1"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn schema_violation_reports_line() {
        let f = write(&[
            r#"{"id":"a","words":["w"],"label_name":"neg","label_index":0,"rationale":[0],"split":"test"}"#,
            r#"{"id":"b","words":["w"],"label_name":"neg","label_index":0,"rationale":[2],"split":"test"}"#,
        ]);
        assert!(matches!(load_corpus_jsonl(f.path()).unwrap_err(), Error::Parse { line: 2, .. }));
    }

    #[test]
    fn split_aliases() {
        assert_eq!("val".parse::<Split>().unwrap(), Split::Validation);
        let s: Split = serde_json::from_str("\"dev\"").unwrap();
        assert_eq!(s, Split::Validation);
        assert!("holdout".parse::<Split>().is_err());
    }
}

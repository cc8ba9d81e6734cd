use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use attrbench_core::data::Split;
use attrbench_core::explain::{ExplainerConfig, IgConfig, LimeConfig};
use attrbench_core::model::{Classifier, LexiconTokenizer, ModelInfo};
use attrbench_core::{Error, LexiconModel, LexiconModelConfig, Method, Metric, RemoteModel, RemovalStrategy, Result};
use serde::{Deserialize, Serialize};

/// Environment variable consulted when no model is given.
pub const MODEL_URL_ENV: &str = "XAI_BENCH_MODEL_URL";

/// Which classifier to load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ModelSpec {
    /// Builtin lexicon model; weights from a JSON config file if given.
    Lexicon { config: Option<PathBuf> },
    /// Builtin lexicon with sub-word pieces and a `[CLS] … [SEP]` frame.
    LexiconSubword,
    Remote { url: String },
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(url) = s.strip_prefix("remote:") {
            return Ok(ModelSpec::Remote { url: url.to_string() });
        }
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(ModelSpec::Remote { url: s.to_string() });
        }
        match s.strip_prefix("builtin:") {
            Some("lexicon") => Ok(ModelSpec::Lexicon { config: None }),
            Some("lexicon-subword") => Ok(ModelSpec::LexiconSubword),
            Some(rest) => match rest.strip_prefix("lexicon=") {
                Some(path) if !path.is_empty() => Ok(ModelSpec::Lexicon {
                    config: Some(path.into()),
                }),
                _ => Err(Error::Config(format!("unknown builtin model `{rest}`"))),
            },
            None => Err(Error::Config(format!(
                "model spec `{s}` must start with `builtin:` or `remote:`"
            ))),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Lexicon { config: None } => f.write_str("builtin:lexicon"),
            ModelSpec::Lexicon { config: Some(p) } => write!(f, "builtin:lexicon={}", p.display()),
            ModelSpec::LexiconSubword => f.write_str("builtin:lexicon-subword"),
            ModelSpec::Remote { url } => write!(f, "remote:{url}"),
        }
    }
}

impl From<ModelSpec> for String {
    fn from(m: ModelSpec) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for ModelSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl ModelSpec {
    /// Resolves `--model`, falling back to the URL in [`MODEL_URL_ENV`].
    pub fn resolve(explicit: Option<&str>) -> Result<Self> {
        match explicit {
            Some(s) => s.parse(),
            None => match std::env::var(MODEL_URL_ENV) {
                Ok(url) if !url.is_empty() => Ok(ModelSpec::Remote { url }),
                _ => Err(Error::Config(format!(
                    "no model given; pass --model or set {MODEL_URL_ENV}"
                ))),
            },
        }
    }

    pub fn load(&self) -> Result<Box<dyn Classifier<f64>>> {
        Ok(match self {
            ModelSpec::Lexicon { config: None } => Box::new(LexiconModel::new(LexiconModelConfig::sentiment())?),
            ModelSpec::Lexicon { config: Some(path) } => {
                let raw = std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read lexicon config {}: {e}", path.display()))
                })?;
                let cfg: LexiconModelConfig = serde_json::from_str(&raw).map_err(|e| {
                    Error::Config(format!("invalid lexicon config {}: {e}", path.display()))
                })?;
                Box::new(LexiconModel::new(cfg)?)
            }
            ModelSpec::LexiconSubword => Box::new(LexiconModel::new(
                LexiconModelConfig::sentiment().with_tokenizer(LexiconTokenizer::Subword { max_piece_chars: 4 }),
            )?),
            ModelSpec::Remote { url } => Box::new(RemoteModel::connect(url)?),
        })
    }
}

/// How the explained class is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetPolicy {
    /// The instance's gold label (dataset runs).
    Gold,
    /// The model's arg-max class.
    Predicted,
    Fixed(usize),
}

impl FromStr for TargetPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gold" => Ok(TargetPolicy::Gold),
            "predicted" => Ok(TargetPolicy::Predicted),
            n => n
                .parse()
                .map(TargetPolicy::Fixed)
                .map_err(|_| Error::Config(format!("target must be `gold`, `predicted` or a class index, got `{n}`"))),
        }
    }
}

/// Which corpus instances a dataset run uses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    /// Take at most this many instances after shuffling; all when `None`.
    pub count: Option<usize>,
    /// Keep only instances with this corpus label name.
    pub label: Option<String>,
    pub split: Option<Split>,
}

/// Everything that determines the numbers of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub methods: Vec<Method>,
    pub metrics: Vec<Metric>,
    pub target: TargetPolicy,
    pub removal: RemovalStrategy,
    /// Seeds sample selection and LIME.
    pub seed: u64,
    pub ig_steps: usize,
    pub lime_samples: usize,
    pub sample: SampleSpec,
    /// Worker threads for dataset runs; results do not depend on it.
    pub workers: usize,
    /// Record wall-clock timings. Off by default so reports are reproducible
    /// byte for byte.
    pub timings: bool,
}

impl RunConfig {
    pub fn new(model: ModelSpec) -> Self {
        RunConfig {
            model,
            methods: Method::ALL.to_vec(),
            metrics: Metric::ALL.to_vec(),
            target: TargetPolicy::Gold,
            removal: RemovalStrategy::Delete,
            seed: 42,
            ig_steps: IgConfig::default().steps,
            lime_samples: LimeConfig::default().n_samples,
            sample: SampleSpec::default(),
            workers: 1,
            timings: false,
        }
    }

    /// Checks the config against the loaded model.
    pub fn validate(&self, info: &ModelInfo) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no explanation methods selected".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("no metrics selected".into()));
        }
        if let TargetPolicy::Fixed(t) = self.target {
            if t >= info.num_labels() {
                return Err(Error::Config(format!(
                    "target {t} out of range; model labels are {:?}",
                    info.labels
                )));
            }
        }
        if self.removal == RemovalStrategy::Mask && info.mask_token_id.is_none() {
            return Err(Error::Config("mask removal needs a model with a mask token".into()));
        }
        if self.ig_steps == 0 {
            return Err(Error::Config("ig steps must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn explainer_config(&self) -> ExplainerConfig {
        ExplainerConfig {
            removal: self.removal,
            ig: IgConfig {
                steps: self.ig_steps,
                ..IgConfig::default()
            },
            lime: LimeConfig {
                n_samples: self.lime_samples,
                seed: self.seed,
                ..LimeConfig::default()
            },
        }
    }
}

/// Parses a comma-separated list with `FromStr` items.
pub fn parse_list<T: FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_specs() {
        assert_eq!("builtin:lexicon".parse::<ModelSpec>().unwrap(), ModelSpec::Lexicon { config: None });
        assert_eq!(
            "remote:http://h:1".parse::<ModelSpec>().unwrap(),
            ModelSpec::Remote { url: "http://h:1".into() }
        );
        assert_eq!(
            "builtin:lexicon=w.json".parse::<ModelSpec>().unwrap().to_string(),
            "builtin:lexicon=w.json"
        );
        assert!("builtin:bert".parse::<ModelSpec>().is_err());
        assert!("lexicon".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn short_method_names() {
        let m: Vec<Method> = parse_list("g, shap,loo").unwrap();
        assert_eq!(m, vec![Method::Gradient, Method::PartitionShap, Method::Loo]);
        assert!(parse_list::<Method>("g,nope").is_err());
    }

    #[test]
    fn fixed_target_must_exist() {
        let model = ModelSpec::Lexicon { config: None }.load().unwrap();
        let mut cfg = RunConfig::new(ModelSpec::Lexicon { config: None });
        cfg.target = TargetPolicy::Fixed(2);
        assert!(matches!(cfg.validate(model.info()), Err(Error::Config(_))));
        cfg.target = TargetPolicy::Fixed(1);
        cfg.validate(model.info()).unwrap();
        cfg.methods.clear();
        assert!(cfg.validate(model.info()).is_err());
    }
}

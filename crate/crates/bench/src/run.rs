use std::time::Instant;

use attrbench_core::data::{align_rationale, Corpus, RationaleInstance, Split};
use attrbench_core::eval::{evaluate_explanation, EvalContext};
use attrbench_core::explain::{explain, ExplainerConfig};
use attrbench_core::model::{self, tokenize, Classifier, ModelInfo};
use attrbench_core::{Error, HumanRationale, Method, Metric, PredictionCache, Result, TextInput};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{RunConfig, TargetPolicy};
use crate::report::{summarize, DatasetReport, InstanceReport, MethodReport};

/// One input to explain: ad-hoc text or a corpus instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceInput {
    pub id: String,
    pub input: TextInput,
    /// Word-level human rationale; requires `input` to be a word sequence.
    pub word_rationale: Option<Vec<bool>>,
    /// Gold class as a model label index.
    pub gold: Option<usize>,
}

impl InstanceInput {
    pub fn text(id: impl Into<String>, text: impl Into<String>) -> Self {
        InstanceInput {
            id: id.into(),
            input: TextInput::Text(text.into()),
            word_rationale: None,
            gold: None,
        }
    }

    /// Whitespace-split `text` with a rationale over its words.
    pub fn with_rationale(id: impl Into<String>, text: &str, rationale: Vec<bool>) -> Result<Self> {
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.len() != rationale.len() {
            return Err(Error::InvalidInput(format!(
                "rationale has {} entries but the text has {} words",
                rationale.len(),
                words.len()
            )));
        }
        Ok(InstanceInput {
            id: id.into(),
            input: TextInput::words(&words),
            word_rationale: Some(rationale),
            gold: None,
        })
    }

    fn display_text(&self) -> String {
        match &self.input {
            TextInput::Text(t) => t.clone(),
            TextInput::Words(w) => w.join(" "),
        }
    }
}

fn argmax(row: &[f64]) -> usize {
    // First maximum wins.
    row.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
        .0
}

fn is_fatal(e: &Error) -> bool {
    matches!(e, Error::Transport { .. })
}

fn elapsed(start: Instant, on: bool) -> Option<f64> {
    on.then(|| start.elapsed().as_secs_f64() * 1e3)
}

/// Explains `input` with every configured method and scores each
/// explanation.
///
/// A failing method is recorded in its [`MethodReport`] and the others
/// proceed; only transport failures abort the instance. Plausibility
/// metrics are computed only when a human rationale is supplied. `top_k`
/// defaults to the human rationale's length.
pub fn run_instance(
    model: &dyn Classifier<f64>,
    config: &RunConfig,
    input: &InstanceInput,
    top_k: Option<usize>,
) -> Result<InstanceReport> {
    let start = Instant::now();
    let explainer = config.explainer_config();
    let cache = PredictionCache::new();
    let x = tokenize(model, std::slice::from_ref(&input.input), true)?.remove(0);
    if x.n_content() == 0 {
        return Err(Error::InvalidInput(format!("instance `{}` has no content tokens", input.id)));
    }
    let mut warnings = Vec::new();
    let human = match &input.word_rationale {
        None => None,
        Some(bits) => {
            let words = match &input.input {
                TextInput::Words(w) => w.clone(),
                TextInput::Text(_) => {
                    return Err(Error::InvalidInput(
                        "a rationale needs a word-sequence input".into(),
                    ))
                }
            };
            let inst = RationaleInstance {
                id: input.id.clone(),
                words,
                label_name: String::new(),
                label_index: 0,
                word_rationale: bits.clone(),
                split: Split::Test,
            };
            inst.validate()?;
            let aligned = align_rationale(&inst, &x)?;
            warnings.extend(aligned.warnings);
            Some(aligned.rationale)
        }
    };

    let probabilities = model::predict(model, &[x.token_ids.clone()], &cache)?.remove(0);
    let info = model.info();
    let target = match config.target {
        TargetPolicy::Fixed(t) => t,
        TargetPolicy::Predicted => argmax(&probabilities),
        TargetPolicy::Gold => input.gold.ok_or_else(|| {
            Error::Config(format!("instance `{}` has no gold label; choose a target", input.id))
        })?,
    };
    if target >= info.num_labels() {
        return Err(Error::Config(format!("target {target} out of range for {:?}", info.labels)));
    }

    let metrics: Vec<Metric> = config
        .metrics
        .iter()
        .copied()
        .filter(|m| human.is_some() || !m.is_plausibility())
        .collect();
    let top_k = top_k.unwrap_or_else(|| human.as_ref().map_or(1, HumanRationale::count)).max(1);
    let mut methods = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let report = run_method(model, &cache, &x, target, method, &explainer, &metrics, human.as_ref(), top_k, config)?;
        methods.push(report);
    }

    Ok(InstanceReport {
        id: input.id.clone(),
        text: input.display_text(),
        tokens: x.content_strings(),
        target,
        target_label: info.labels[target].clone(),
        probabilities,
        human_rationale: human.map(|h| h.mask),
        warnings,
        methods,
        elapsed_ms: elapsed(start, config.timings),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_method(
    model: &dyn Classifier<f64>,
    cache: &PredictionCache,
    x: &attrbench_core::TokenizedInput,
    target: usize,
    method: Method,
    explainer: &ExplainerConfig,
    metrics: &[Metric],
    human: Option<&HumanRationale>,
    top_k: usize,
    config: &RunConfig,
) -> Result<MethodReport> {
    let start = Instant::now();
    let mut report = MethodReport {
        method,
        explanation: None,
        metrics: Vec::new(),
        error: None,
        model_calls: 0,
        elapsed_ms: None,
    };
    match explain(model, cache, x, target, method, explainer) {
        Err(e) if is_fatal(&e) => return Err(e),
        Err(e) => {
            log::warn!("{method} failed: {e}");
            report.error = Some(e.to_string());
        }
        Ok(expl) => {
            report.model_calls = expl.diagnostics.model_evaluations;
            let before = cache.len();
            let ctx = EvalContext {
                model,
                cache,
                x,
                target,
                removal: explainer.removal,
                human,
                top_k,
            };
            match evaluate_explanation(&ctx, &expl, metrics) {
                Err(e) if is_fatal(&e) => return Err(e),
                Err(e) => report.error = Some(format!("evaluation failed: {e}")),
                Ok(scores) => report.metrics = scores,
            }
            report.model_calls += cache.len() - before;
            report.explanation = Some(expl);
        }
    }
    report.elapsed_ms = elapsed(start, config.timings);
    Ok(report)
}

/// Model label index for a corpus label: exact, then case-insensitive, then
/// prefix match (`NEG` ↔ `negative`).
pub fn map_label(corpus_label: &str, info: &ModelInfo) -> Option<usize> {
    let lower = corpus_label.to_lowercase();
    info.label_index(corpus_label)
        .or_else(|| info.labels.iter().position(|l| l.to_lowercase() == lower))
        .or_else(|| {
            let hits: Vec<usize> = info
                .labels
                .iter()
                .enumerate()
                .filter(|(_, l)| {
                    let l = l.to_lowercase();
                    !lower.is_empty() && (l.starts_with(&lower) || lower.starts_with(&l))
                })
                .map(|(i, _)| i)
                .collect();
            (hits.len() == 1).then(|| hits[0])
        })
}

/// Filters by label and split, shuffles with the run seed and keeps the
/// first `count` instances.
pub fn select_instances<'c>(config: &RunConfig, corpus: &'c Corpus) -> Result<Vec<&'c RationaleInstance>> {
    let spec = &config.sample;
    if let Some(label) = &spec.label {
        if !corpus.labels.contains(label) {
            return Err(Error::Config(format!(
                "label `{label}` not in corpus labels {:?}",
                corpus.labels
            )));
        }
    }
    let mut pool: Vec<&RationaleInstance> = corpus
        .instances
        .iter()
        .filter(|i| spec.label.as_ref().is_none_or(|l| *l == i.label_name))
        .filter(|i| spec.split.is_none_or(|s| s == i.split))
        .collect();
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    if let Some(n) = spec.count {
        pool.truncate(n);
    }
    if pool.is_empty() {
        return Err(Error::Config("sample selection matched no instances".into()));
    }
    Ok(pool)
}

/// Runs every configured method and metric over a sample of `corpus` and
/// averages the results.
pub fn run_dataset(
    model: &dyn Classifier<f64>,
    config: &RunConfig,
    corpus: &Corpus,
    keep_instances: bool,
) -> Result<DatasetReport> {
    let start = Instant::now();
    let info = model.info();
    config.validate(info)?;
    let selected = select_instances(config, corpus)?;
    let inputs = selected
        .iter()
        .map(|inst| {
            let gold = map_label(&inst.label_name, info);
            if gold.is_none() && config.target == TargetPolicy::Gold {
                return Err(Error::Validation {
                    id: inst.id.clone(),
                    message: format!(
                        "corpus label `{}` has no counterpart among model labels {:?}; pass a fixed target",
                        inst.label_name, info.labels
                    ),
                });
            }
            Ok(InstanceInput {
                id: inst.id.clone(),
                input: TextInput::words(&inst.words),
                word_rationale: Some(inst.word_rationale.clone()),
                gold,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let top_k = corpus.avg_rationale_len;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    // Each instance gets a fresh cache, so counts and values do not depend
    // on scheduling.
    let reports: Vec<InstanceReport> = pool.install(|| {
        inputs
            .par_iter()
            .map(|input| run_instance(model, config, input, Some(top_k)))
            .collect::<Result<Vec<_>>>()
    })?;

    Ok(DatasetReport {
        corpus: corpus.name.clone(),
        model_id: info.model_id.clone(),
        config: config.clone(),
        top_k,
        selected: inputs.iter().map(|i| i.id.clone()).collect(),
        summary: summarize(&config.methods, &config.metrics, &reports),
        instances: keep_instances.then_some(reports),
        elapsed_ms: elapsed(start, config.timings),
    })
}

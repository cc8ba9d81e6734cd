use std::process::Command;

use attrbench::{
    render_dataset, render_instance, run_dataset, run_instance, DatasetReport, Format, InstanceInput, InstanceReport,
    ModelSpec, RunConfig, SampleSpec, TargetPolicy,
};
use attrbench_core::data::{write_corpus_jsonl, Corpus, RationaleInstance, Split};
use attrbench_core::model::{Capability, Classifier, GradientBundle, GradientRequest, ModelInfo};
use attrbench_core::{LexiconModel, LexiconModelConfig, Method, Metric, Result, TextInput, TokenizedInput};

fn lexicon() -> Box<dyn Classifier<f64>> {
    ModelSpec::Lexicon { config: None }.load().unwrap()
}

fn config() -> RunConfig {
    RunConfig::new(ModelSpec::Lexicon { config: None })
}

fn instance(id: &str, text: &str, label: usize, bits: &[u8], split: Split) -> RationaleInstance {
    let words: Vec<String> = text.split_whitespace().map(String::from).collect();
    assert_eq!(words.len(), bits.len(), "{id}");
    RationaleInstance {
        id: id.into(),
        words,
        label_name: ["negative", "positive"][label].into(),
        label_index: label,
        word_rationale: bits.iter().map(|&b| b == 1).collect(),
        split,
    }
}

fn corpus() -> Corpus {
    Corpus::new(
        "reviews",
        vec!["negative".into(), "positive".into()],
        vec![
            instance("r1", "a great and fun film", 1, &[0, 1, 0, 1, 0], Split::Test),
            instance("r2", "boring plot and awful acting", 0, &[0, 1, 0, 1, 0, 0][..5].to_vec().as_slice(), Split::Test),
            instance("r3", "not good but not terrible", 0, &[1, 1, 0, 0, 0], Split::Test),
            instance("r4", "excellent cast and stunning views", 1, &[1, 0, 0, 1, 0], Split::Train),
            instance("r5", "what a waste of a good story", 0, &[0, 0, 1, 0, 0, 0, 0], Split::Test),
            instance("r6", "i love this enjoyable mess", 1, &[0, 1, 0, 1, 0], Split::Test),
        ],
    )
    .unwrap()
}

#[test]
fn great_movie_loo_and_shap() {
    let model = lexicon();
    let mut cfg = config();
    cfg.methods = vec![Method::Loo, Method::PartitionShap];
    cfg.metrics = vec![Metric::AopcCompr];
    cfg.target = TargetPolicy::Fixed(1);
    let r = run_instance(model.as_ref(), &cfg, &InstanceInput::text("x", "great movie"), None).unwrap();
    for m in &r.methods {
        let e = m.explanation.as_ref().unwrap();
        assert_eq!(e.target, r.target);
        let total: f64 = e.scores.iter().sum();
        assert!((total - (r.probabilities[1] - 0.5)).abs() < 1e-12);
        assert!((m.metric(Metric::AopcCompr).unwrap() - 0.380797).abs() < 1e-6);
    }
    // Ad-hoc text without a rationale gets no plausibility rows.
    assert!(r.methods[0].metrics.iter().all(|s| !s.metric.is_plausibility()));
}

/// Lexicon model that refuses gradient requests.
struct NoGradients {
    inner: LexiconModel,
    info: ModelInfo,
}

impl NoGradients {
    fn new() -> Self {
        let inner = LexiconModel::new(LexiconModelConfig::sentiment()).unwrap();
        let mut info = inner.info().clone();
        info.capabilities.remove(&Capability::EmbeddingGradients);
        NoGradients { inner, info }
    }
}

impl Classifier<f64> for NoGradients {
    fn info(&self) -> &ModelInfo {
        &self.info
    }
    fn tokenize_raw(&self, inputs: &[TextInput]) -> Result<Vec<TokenizedInput>> {
        self.inner.tokenize_raw(inputs)
    }
    fn predict_raw(&self, batch: &[Vec<u32>]) -> Result<Vec<Vec<f64>>> {
        self.inner.predict_raw(batch)
    }
    fn gradients_raw(&self, _: &GradientRequest<f64>) -> Result<GradientBundle<f64>> {
        unreachable!("capability is not advertised")
    }
}

#[test]
fn failing_method_is_isolated() {
    let mut cfg = config();
    cfg.target = TargetPolicy::Predicted;
    let input = InstanceInput::with_rationale("x", "a great but boring film", vec![false, true, false, true, false]).unwrap();
    let full = run_instance(lexicon().as_ref(), &cfg, &input, None).unwrap();
    let partial = run_instance(&NoGradients::new(), &cfg, &input, None).unwrap();
    assert_eq!(partial.methods.len(), Method::ALL.len());
    for (a, b) in full.methods.iter().zip(&partial.methods) {
        if a.method.needs_gradients() {
            assert!(b.error.as_deref().unwrap().contains("embedding_gradients"));
            assert!(b.explanation.is_none());
        } else {
            // Call counts may differ: the failed methods no longer warm the
            // shared cache.
            assert_eq!(a.explanation.as_ref().unwrap().scores, b.explanation.as_ref().unwrap().scores);
            assert_eq!(a.metrics, b.metrics);
            assert!(b.error.is_none());
        }
    }
}

#[test]
fn dataset_of_one_equals_the_instance() {
    let model = lexicon();
    let c = corpus();
    let mut cfg = config();
    cfg.sample = SampleSpec {
        count: Some(1),
        ..SampleSpec::default()
    };
    let report = run_dataset(model.as_ref(), &cfg, &c, true).unwrap();
    let inst = &report.instances.as_ref().unwrap()[0];
    for s in &report.summary {
        let m = inst.method(s.method).unwrap();
        for ms in &s.metrics {
            assert_eq!(ms.mean, m.metric(ms.metric));
            assert_eq!(ms.count, usize::from(ms.mean.is_some()));
        }
    }
    assert_eq!(report.top_k, c.avg_rationale_len);
}

#[test]
fn sample_filters_and_means() {
    let model = lexicon();
    let c = corpus();
    let mut cfg = config();
    cfg.methods = vec![Method::Loo, Method::PartitionShap];
    cfg.sample = SampleSpec {
        count: Some(3),
        label: Some("negative".into()),
        split: Some(Split::Test),
    };
    let report = run_dataset(model.as_ref(), &cfg, &c, true).unwrap();
    assert_eq!(report.selected.len(), 3);
    let insts = report.instances.as_ref().unwrap();
    for inst in insts {
        assert!(["r2", "r3", "r5"].contains(&inst.id.as_str()));
        assert_eq!(inst.target, 0, "gold label drives the target");
    }
    for s in &report.summary {
        for ms in &s.metrics {
            let vals: Vec<f64> = insts.iter().filter_map(|i| i.method(s.method).unwrap().metric(ms.metric)).collect();
            assert_eq!(ms.count, vals.len());
            if !vals.is_empty() {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                assert!((ms.mean.unwrap() - mean).abs() < 1e-15);
            }
        }
    }

    cfg.sample.label = Some("neutral".into());
    assert!(matches!(run_dataset(model.as_ref(), &cfg, &c, false), Err(attrbench_core::Error::Config(_))));
    cfg.sample = SampleSpec {
        split: Some(Split::Validation),
        ..SampleSpec::default()
    };
    assert!(matches!(run_dataset(model.as_ref(), &cfg, &c, false), Err(attrbench_core::Error::Config(_))));
}

#[test]
fn empty_rationales_make_plausibility_not_applicable() {
    let model = lexicon();
    let c = Corpus::new(
        "bare",
        vec!["negative".into(), "positive".into()],
        vec![
            instance("a", "great fun", 1, &[0, 0], Split::Test),
            instance("b", "awful dull", 0, &[0, 0], Split::Test),
        ],
    )
    .unwrap();
    let report = run_dataset(model.as_ref(), &config(), &c, false).unwrap();
    for s in &report.summary {
        for ms in &s.metrics {
            if ms.metric.is_plausibility() {
                assert_eq!((ms.mean, ms.count), (None, 0));
            } else if ms.metric != Metric::TaucorrLoo {
                assert_eq!(ms.count, 2);
            }
        }
    }
    assert!(render_dataset(&report, Format::Table).unwrap().contains("n/a (n=0)"));
}

#[test]
fn worker_count_does_not_change_results() {
    let model = lexicon();
    let c = corpus();
    let mut cfg = config();
    let one = run_dataset(model.as_ref(), &cfg, &c, true).unwrap();
    cfg.workers = 4;
    let mut four = run_dataset(model.as_ref(), &cfg, &c, true).unwrap();
    four.config.workers = 1;
    assert_eq!(one, four);
}

#[test]
fn json_reports_round_trip_bitwise() {
    let model = lexicon();
    let mut cfg = config();
    cfg.target = TargetPolicy::Predicted;
    let input = InstanceInput::with_rationale("x", "a great but boring film", vec![false, true, false, true, false]).unwrap();
    let r = run_instance(model.as_ref(), &cfg, &input, None).unwrap();
    let back: InstanceReport = serde_json::from_str(&render_instance(&r, Format::Json).unwrap()).unwrap();
    assert_eq!(back, r);
    for (a, b) in r.methods.iter().zip(&back.methods) {
        let (a, b) = (a.explanation.as_ref().unwrap(), b.explanation.as_ref().unwrap());
        assert!(a.scores.iter().zip(&b.scores).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    let report = run_dataset(model.as_ref(), &config(), &corpus(), true).unwrap();
    let back: DatasetReport = serde_json::from_str(&render_dataset(&report, Format::Json).unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn html_heatmap_is_centered_and_direction_aware() {
    let model = lexicon();
    let mut cfg = config();
    cfg.target = TargetPolicy::Fixed(1);
    cfg.methods = vec![Method::GradientXInput, Method::PartitionShap, Method::Loo];
    let r = run_instance(model.as_ref(), &cfg, &InstanceInput::text("x", "the plot"), None).unwrap();
    let html = render_instance(&r, Format::Html).unwrap();
    // Unknown words score zero everywhere: every heat cell is white.
    assert!(html.contains("background:#ffffff"));
    assert!(!html.contains("background:#ff0000") && !html.contains("background:#0000ff"));
    assert!(html.contains("aopc_suff ↓"));

    let r = run_instance(model.as_ref(), &cfg, &InstanceInput::text("y", "great terrible"), None).unwrap();
    let html = render_instance(&r, Format::Html).unwrap();
    assert!(html.contains("#ff0000") && html.contains("#0000ff"));
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_attrbench"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| bin().args(args).env_remove("XAI_BENCH_MODEL_URL").output().unwrap().status.code();
    assert_eq!(code(&["explain", "--model", "builtin:lexicon", "--text", "great movie"]), Some(0));
    assert_eq!(code(&["explain", "--model", "builtin:lexicon", "--text", "x", "--methods", "nope"]), Some(2));
    assert_eq!(code(&["explain", "--text", "x"]), Some(2));
    assert_eq!(code(&["explain", "--model", "builtin:lexicon", "--text", "x", "--target", "7"]), Some(2));
    let missing = dir.path().join("missing.jsonl");
    assert_eq!(
        code(&["benchmark", "--model", "builtin:lexicon", "--corpus", missing.to_str().unwrap(), "--out", "/dev/null"]),
        Some(4)
    );
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"id\": 1}\n").unwrap();
    assert_eq!(
        code(&["benchmark", "--model", "builtin:lexicon", "--corpus", bad.to_str().unwrap(), "--out", "/dev/null"]),
        Some(4)
    );
}

#[test]
fn cli_benchmark_writes_json_and_html() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("reviews.jsonl");
    write_corpus_jsonl(&corpus(), &corpus_path).unwrap();
    let out = dir.path().join("r.json");
    let html = dir.path().join("r.html");
    let status = bin()
        .args(["benchmark", "--model", "builtin:lexicon", "--methods", "shap,loo", "--sample", "4", "--workers", "2"])
        .arg("--corpus")
        .arg(&corpus_path)
        .arg("--out")
        .arg(&out)
        .arg("--html")
        .arg(&html)
        .status()
        .unwrap();
    assert!(status.success());
    let report: DatasetReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.selected.len(), 4);
    assert_eq!(report.corpus, "reviews");
    assert!(std::fs::read_to_string(&html).unwrap().starts_with("<!DOCTYPE html>"));
}

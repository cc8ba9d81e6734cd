use std::collections::BTreeMap;
use std::path::PathBuf;

use attrbench_core::data::hatexplain::{convert_hatexplain, HateXplainOptions, RationaleAggregation};
use attrbench_core::data::movies::convert_movies_eraser;
use attrbench_core::data::{align_rationale, load_corpus_jsonl, RationaleInstance, Split};
use attrbench_core::model::{tokenize, LexiconTokenizer};
use attrbench_core::{LexiconModel, LexiconModelConfig, TextInput};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Expected (label, rationale) per post, computed straight from the raw JSON.
fn expected(union: bool) -> BTreeMap<String, Option<(String, Vec<bool>)>> {
    let raw: Value = serde_json::from_str(&std::fs::read_to_string(fixture("hatexplain_20.json")).unwrap()).unwrap();
    raw.as_object()
        .unwrap()
        .values()
        .map(|post| {
            let id = post["post_id"].as_str().unwrap().to_string();
            let labels: Vec<&str> = post["annotators"]
                .as_array()
                .unwrap()
                .iter()
                .map(|a| a["label"].as_str().unwrap())
                .collect();
            let winner = labels
                .iter()
                .find(|l| labels.iter().filter(|m| m == l).count() * 2 > labels.len());
            let Some(&label) = winner else {
                return (id, None);
            };
            let n = post["post_tokens"].as_array().unwrap().len();
            let arrays = post["rationales"].as_array().unwrap();
            let mask = (0..n)
                .map(|i| {
                    let votes = arrays.iter().filter(|a| a[i].as_u64() == Some(1)).count();
                    label != "normal"
                        && if union { votes >= 1 } else { !arrays.is_empty() && 2 * votes >= arrays.len() }
                })
                .collect();
            (id, Some((label.to_string(), mask)))
        })
        .collect()
}

#[test]
fn hatexplain_fixture_converts_by_majority() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hx.jsonl");
    let conv = convert_hatexplain(fixture("hatexplain_20.json"), &out, &HateXplainOptions::default()).unwrap();
    let want = expected(false);
    assert_eq!(conv.corpus.len(), 14);
    assert_eq!(conv.skipped.len(), 6);
    for id in &conv.skipped {
        assert!(want[id].is_none(), "{id} has a majority");
    }
    for inst in &conv.corpus.instances {
        let (label, mask) = want[&inst.id].clone().expect("converted post must have a majority");
        assert_eq!(inst.label_name, label);
        assert_eq!(inst.word_rationale, mask, "{}", inst.id);
        assert_eq!(inst.split, Split::Test);
        if label == "normal" {
            assert!(!inst.has_rationale());
        }
    }
    let labels: Vec<&str> = conv.corpus.instances.iter().map(|i| i.label_name.as_str()).collect();
    for (name, count) in [("hatespeech", 5), ("offensive", 4), ("normal", 5)] {
        assert_eq!(labels.iter().filter(|&&l| l == name).count(), count);
    }
}

#[test]
fn union_aggregation_marks_any_annotated_word() {
    let dir = tempfile::tempdir().unwrap();
    let opts = HateXplainOptions {
        aggregation: RationaleAggregation::Union,
        ..HateXplainOptions::default()
    };
    let conv = convert_hatexplain(fixture("hatexplain_20.json"), dir.path().join("u.jsonl"), &opts).unwrap();
    let want = expected(true);
    for inst in &conv.corpus.instances {
        assert_eq!(inst.word_rationale, want[&inst.id].clone().unwrap().1);
    }
}

#[test]
fn divisions_assign_splits() {
    let dir = tempfile::tempdir().unwrap();
    let opts = HateXplainOptions {
        divisions: Some(fixture("hatexplain_divisions.json")),
        ..HateXplainOptions::default()
    };
    let conv = convert_hatexplain(fixture("hatexplain_20.json"), dir.path().join("d.jsonl"), &opts).unwrap();
    let divisions: BTreeMap<String, Vec<String>> =
        serde_json::from_str(&std::fs::read_to_string(fixture("hatexplain_divisions.json")).unwrap()).unwrap();
    for inst in &conv.corpus.instances {
        let split = divisions.iter().find(|(_, ids)| ids.contains(&inst.id)).unwrap().0;
        assert_eq!(inst.split, split.parse::<Split>().unwrap());
    }
}

#[test]
fn converted_corpus_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hatexplain.jsonl");
    let conv = convert_hatexplain(fixture("hatexplain_20.json"), &out, &HateXplainOptions::default()).unwrap();
    let loaded = load_corpus_jsonl(&out).unwrap();
    assert_eq!(loaded.instances, conv.corpus.instances);
    assert_eq!(loaded.avg_rationale_len, conv.corpus.avg_rationale_len);
    let lens: Vec<usize> = loaded
        .instances
        .iter()
        .map(RationaleInstance::rationale_len)
        .filter(|&l| l > 0)
        .collect();
    let mean = lens.iter().sum::<usize>() as f64 / lens.len() as f64;
    assert_eq!(loaded.avg_rationale_len, (mean + 0.5).floor() as usize);
}

#[test]
fn every_piece_of_a_rationale_word_is_relevant() {
    let m: LexiconModel = LexiconModel::new(
        LexiconModelConfig::new([("not", -0.6), ("a", 0.0)])
            .with_tokenizer(LexiconTokenizer::Subword { max_piece_chars: 3 }),
    )
    .unwrap();
    let inst = RationaleInstance {
        id: "hand".into(),
        words: ["not", "unforgettable", "a", "masterpiece"].map(String::from).to_vec(),
        label_name: "l".into(),
        label_index: 0,
        word_rationale: vec![false, true, false, true],
        split: Split::Test,
    };
    let x = tokenize(&m, &[TextInput::words(&inst.words)], false).unwrap().remove(0);
    // [CLS] not unf ##org ##ett ##abl ##e a mas ##ter ##pie ##ce [SEP]
    assert_eq!(x.n_content(), 11);
    let aligned = align_rationale(&inst, &x).unwrap();
    let want: Vec<bool> = x
        .content_word_ids()
        .unwrap()
        .iter()
        .map(|w| matches!(w, Some(1) | Some(3)))
        .collect();
    assert_eq!(aligned.rationale.mask, want);
    assert_eq!(aligned.rationale.count(), 9);
    assert!(aligned.warnings.is_empty());

    // Truncation that cuts a rationale word is reported, not fatal.
    let short = x.truncated(5);
    let aligned = align_rationale(&inst, &short).unwrap();
    assert_eq!(aligned.rationale.mask, vec![false, true, true]);
    assert_eq!(aligned.warnings.len(), 1);
}

#[test]
fn alignment_requires_word_ids() {
    let m: LexiconModel = LexiconModel::new(LexiconModelConfig::new([("a", 0.0)])).unwrap();
    let inst = RationaleInstance {
        id: "t".into(),
        words: vec!["a".into()],
        label_name: "l".into(),
        label_index: 0,
        word_rationale: vec![true],
        split: Split::Test,
    };
    let x = tokenize(&m, &["a".into()], false).unwrap().remove(0);
    assert!(align_rationale(&inst, &x).is_err());
}

#[test]
fn movie_reviews_convert_spans() {
    let dir = tempfile::tempdir().unwrap();
    let docs = dir.path().join("docs");
    std::fs::create_dir(&docs).unwrap();
    std::fs::write(docs.join("posR_001.txt"), "a warm and witty film\nthat never drags .").unwrap();
    std::fs::write(docs.join("negR_002.txt"), "flat , lifeless and far too long").unwrap();
    let ann = dir.path().join("val.jsonl");
    std::fs::write(
        &ann,
        concat!(
            r#"{"annotation_id":"posR_001.txt","classification":"POS","evidences":[[{"docid":"posR_001.txt","start_token":1,"end_token":5}],[{"docid":"posR_001.txt","start_token":6,"end_token":8}]]}"#,
            "\n",
            r#"{"annotation_id":"negR_002.txt","classification":"NEG","evidences":[[{"docid":"negR_002.txt","start_token":0,"end_token":3}]]}"#,
            "\n"
        ),
    )
    .unwrap();
    let out = dir.path().join("movies.jsonl");
    let corpus = convert_movies_eraser(&docs, &ann, &out, None).unwrap();
    assert_eq!(corpus.len(), 2);
    let pos = &corpus.instances[0];
    assert_eq!(pos.label_name, "POS");
    assert_eq!(pos.label_index, 1);
    assert_eq!(pos.split, Split::Validation);
    assert_eq!(
        pos.word_rationale,
        vec![false, true, true, true, true, false, true, true, false]
    );
    assert_eq!(corpus.instances[1].rationale_len(), 3);
    assert_eq!(load_corpus_jsonl(&out).unwrap().instances, corpus.instances);
}

//! Replays the checked-in fuzz seeds through the same entry points the fuzz
//! targets drive.
use std::path::PathBuf;

use lstmcov::cli::RunConfig;
use lstmcov::fuzzer::{adversarial_at, Corpus};
use lstmcov::io::{labeled_inputs_from_slice, labeled_inputs_to_string};
use lstmcov::lstm::InputKind;
use lstmcov::model_io::{model_from_slice, model_to_string};
use lstmcov::mutation::{parse_variants, substitution_table_from_slice};
use lstmcov::{run_model, InputSequence, Thresholds};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn accepted<T, E>(target: &str, parse: impl Fn(&[u8]) -> Result<T, E>) -> Vec<(String, T)> {
    seeds(target)
        .into_iter()
        .filter_map(|(name, bytes)| parse(&bytes).ok().map(|v| (name, v)))
        .collect()
}

fn names<T>(v: &[(String, T)]) -> Vec<&str> {
    v.iter().map(|(n, _)| n.as_str()).collect()
}

#[test]
fn model_seeds() {
    let ok = accepted("model_json", model_from_slice);
    assert_eq!(names(&ok), ["classifier.json", "regression_pre_layer.json", "token_embedding.json"]);
    for (_, m) in ok {
        assert_eq!(model_from_slice(model_to_string(&m).as_bytes()).unwrap(), m);
        let x = match m.input_kind {
            InputKind::Continuous => InputSequence::continuous(vec![vec![0.5; m.step_input_dim()]; m.n_steps], [0.0, 1.0]),
            InputKind::Token => InputSequence::Tokens {
                ids: vec![1; m.n_steps],
                vocab_size: m.vocab_size().unwrap() as u32,
                pad_id: 0,
            },
        };
        run_model(&m, &x).unwrap();
    }
}

#[test]
fn threshold_seeds() {
    let ok = accepted("thresholds_json", Thresholds::from_slice);
    assert_eq!(names(&ok), ["empty.json", "small.json"]);
    for (_, th) in ok {
        assert_eq!(Thresholds::from_slice(th.to_json().as_bytes()).unwrap(), th);
    }
}

#[test]
fn seed_file_seeds() {
    let ok = accepted("seeds_jsonl", labeled_inputs_from_slice);
    assert_eq!(ok.len(), 3);
    for (_, items) in ok {
        let again = labeled_inputs_from_slice(labeled_inputs_to_string(&items).as_bytes()).unwrap();
        assert_eq!(again, items);
    }
}

#[test]
fn corpus_seeds() {
    let ok = accepted("corpus_jsonl", Corpus::from_jsonl);
    assert_eq!(ok.len(), 2);
    for (_, c) in ok {
        assert_eq!(Corpus::from_jsonl(c.to_jsonl().as_bytes()).unwrap(), c);
        let near = adversarial_at(&c, Some(0.01), 0.1);
        let all = adversarial_at(&c, None, 0.1);
        assert!(near.iter().all(|id| all.contains(id)));
    }
}

#[test]
fn run_config_seeds() {
    let ok = accepted("run_config", RunConfig::from_slice);
    assert_eq!(names(&ok), ["demo.json", "full.json", "minimal.json", "small.json"]);
    for (_, cfg) in ok {
        cfg.fuzz.validate().unwrap();
        cfg.mutation.validate().unwrap();
        cfg.threshold_config().validate(28).unwrap();
    }
}

#[test]
fn substitution_and_variant_seeds() {
    let tables = accepted("substitution_table", substitution_table_from_slice);
    assert_eq!(names(&tables), ["table.json"]);
    let variants = accepted("variants_jsonl", parse_variants);
    assert_eq!(variants.len(), 2);
    assert_eq!(variants.iter().map(|(_, v)| v.len()).sum::<usize>(), 2);
}

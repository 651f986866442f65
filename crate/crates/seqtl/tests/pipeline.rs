use std::fs;
use std::path::Path;
use std::process::Command;

use seqtl::checkpoint::load_checkpoint;
use seqtl::config::ExperimentConfig;
use seqtl::conll::{read_conll, Columns};
use seqtl::experiment::{
    cmd_evaluate, cmd_grid, cmd_prepare, cmd_train_source, cmd_train_target, cmd_transfer, read_manifest,
};
use seqtl::records::read_jsonl;
use seqtl_core::data::ceil_count;
use seqtl_core::tagger::{Decoder, EpochRecord};
use seqtl_core::transfer::{FreezePolicy, FreezeSpec, Setting};

fn tiny(dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.out_dir = dir.to_path_buf();
    c.data.synthetic.sentences = 120;
    c.model.word_dim = 8;
    c.model.word_hidden = 8;
    c.model.char_dim = 4;
    c.model.char_hidden = 4;
    c.training.max_epochs = 3;
    c.training.patience = 3;
    c
}

fn dir_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn prepare_masks_counts_and_repeats() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = tiny(a.path());
    let m = cmd_prepare(&ca).unwrap();
    assert_eq!(m.source.train + m.target.train, m.input_train);
    assert_eq!(m.input_train + m.input_valid + m.input_test, 120);
    assert_eq!(read_manifest(&ca).unwrap(), m);
    for split in ["train", "valid", "test"] {
        let src = read_conll(&ca.source_split(split), Columns::default()).unwrap();
        assert_eq!(src.entity_count("ORG"), 0, "{split}");
    }
    let tgt = read_conll(&ca.target_split("train"), Columns::default()).unwrap();
    assert!(tgt.entity_count("ORG") > 0);

    cmd_prepare(&tiny(b.path())).unwrap();
    let strip = |v: Vec<(String, Vec<u8>)>| v.into_iter().filter(|(n, _)| !n.ends_with(".toml")).collect::<Vec<_>>();
    assert_eq!(strip(dir_bytes(a.path())), strip(dir_bytes(b.path())));
}

#[test]
fn source_target_pipeline() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = tiny(d.path());
    cmd_prepare(&cfg).unwrap();
    let src = cmd_train_source(&cfg).unwrap();
    let history: Vec<EpochRecord> = read_jsonl(&cfg.source_dir().join("history.jsonl")).unwrap();
    assert_eq!(history.len(), src.epochs);
    assert!(load_checkpoint(&cfg.source_checkpoint()).is_ok());

    // the source model knows nothing about the masked category
    let err = cmd_evaluate(&cfg.source_checkpoint(), &cfg.target_split("test"), None).unwrap_err();
    assert!(matches!(
        err,
        seqtl::Error::Model(seqtl_core::Error::LabelInventoryMismatch(_))
    ));

    cfg.transfer.target_fraction = 0.25;
    let full = read_conll(&cfg.target_split("train"), Columns::default()).unwrap().len();
    cmd_transfer(&cfg).unwrap();
    let r = cmd_train_target(&cfg).unwrap();
    assert_eq!(r.train_sentences, ceil_count(0.25, full));
    let s = r.scores;
    assert_eq!(s.ori.true_positives + s.new.true_positives, s.all.true_positives);
    assert_eq!(s.ori.predicted + s.new.predicted, s.all.predicted);
    assert_eq!(s.ori.gold + s.new.gold, s.all.gold);

    // nothing trainable: predictions equal the surgery-only model
    cfg.transfer.target_fraction = 1.0;
    cfg.transfer.freeze = Some(FreezeSpec::uniform(FreezePolicy::Locked));
    cmd_transfer(&cfg).unwrap();
    let surgery = load_checkpoint(&cfg.target_dir().join("transferred.ckpt")).unwrap().model;
    cmd_train_target(&cfg).unwrap();
    let trained = load_checkpoint(&cfg.target_dir().join("model.ckpt")).unwrap().model;
    let test = read_conll(&cfg.target_split("test"), Columns::default()).unwrap();
    for s in &test.sentences {
        assert_eq!(surgery.predict(s).unwrap(), trained.predict(s).unwrap());
    }
}

#[test]
fn grid_runs_every_cell() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = tiny(d.path());
    cfg.training.max_epochs = 1;
    cfg.model.decoder = Decoder::Softmax;
    let rows = cmd_grid(&cfg).unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.runs == 3));
    let runs: Vec<serde_json::Value> = read_jsonl(&cfg.out_dir.join("grid_runs.jsonl")).unwrap();
    assert_eq!(runs.len(), 15);
    let baseline = rows.iter().find(|r| r.setting == Setting::Baseline.name()).unwrap();
    assert_eq!(baseline.copied_parameters, 0);
    let first = fs::read(cfg.out_dir.join("grid.jsonl")).unwrap();
    cmd_grid(&cfg).unwrap();
    assert_eq!(first, fs::read(cfg.out_dir.join("grid.jsonl")).unwrap());
}

#[test]
fn cli_reports_error_classes() {
    let bin = env!("CARGO_BIN_EXE_seqtl");
    let d = tempfile::tempdir().unwrap();
    let bad = Command::new(bin)
        .args(["prepare", "--target-fraction", "0"])
        .arg("--out-dir")
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let missing = Command::new(bin)
        .args(["evaluate", "--checkpoint"])
        .arg(d.path().join("none.ckpt"))
        .arg("--corpus")
        .arg(d.path().join("none.conll"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(3));
    let ok = Command::new(bin)
        .args(["prepare", "--synthetic", "40"])
        .arg("--out-dir")
        .arg(d.path())
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(d.path().join("data/manifest.json").exists());
}

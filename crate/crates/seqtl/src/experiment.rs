//! The experimental protocol, one function per command. Every function is
//! a pure function of its configuration, input files and seed.

use std::path::Path;

use serde::{Deserialize, Serialize};
use seqtl_core::data::{build_vocab, Corpus, EmbeddingTable, Pretrained};
use seqtl_core::eval::{Counts, ScoreReport};
use seqtl_core::tagger::{train_with, EpochRecord, LabelSet, TaggerModel, TrainOutcome};
use seqtl_core::transfer::{build_target_model, Setting, TransferOptions, TransferReport};

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::config::ExperimentConfig;
use crate::conll::{read_conll, save_conll, Columns};
use crate::embeddings::read_embeddings;
use crate::error::{Error, Result};
use crate::records::{read_json, write_json, write_jsonl};
use crate::synthetic::generate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub masked_category: String,
    pub target_split: f64,
    /// Training sentences before the source/target split.
    pub input_train: usize,
    pub input_valid: usize,
    pub input_test: usize,
    pub source: SplitCounts,
    pub target: SplitCounts,
}

fn columns(cfg: &ExperimentConfig) -> Columns {
    Columns {
        token: cfg.data.token_column,
        label: cfg.data.label_column,
    }
}

fn read_split(path: &Path) -> Result<Corpus> {
    read_conll(path, Columns::default())
}

fn load_inputs(cfg: &ExperimentConfig) -> Result<(Corpus, Corpus, Corpus)> {
    let cols = columns(cfg);
    let full = match &cfg.data.train {
        Some(p) => read_conll(p, cols)?,
        None => generate(&cfg.data.synthetic),
    };
    let h = cfg.data.holdout;
    let (rest, test) = match &cfg.data.test {
        Some(p) => (full, read_conll(p, cols)?),
        None => full.split_progressive(h, cfg.seed)?,
    };
    let (train, valid) = match &cfg.data.valid {
        Some(p) => (rest, read_conll(p, cols)?),
        None => rest.split_progressive(h / (1.0 - h), cfg.seed.wrapping_add(1))?,
    };
    Ok((train, valid, test))
}

/// Splits the training data into source and target parts, masks the held-out
/// category on the source side, and writes all six files plus a manifest.
pub fn cmd_prepare(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    let (train, valid, test) = load_inputs(cfg)?;
    let mask = &cfg.data.masked_category;
    let (src_train, tgt_train) = train.split_progressive(cfg.data.target_split, cfg.seed)?;
    let source = [
        ("train", src_train.mask_category(mask)?),
        ("valid", valid.mask_category(mask)?),
        ("test", test.mask_category(mask)?),
    ];
    for (name, c) in &source {
        save_conll(&cfg.source_split(name), c)?;
    }
    let target = [("train", &tgt_train), ("valid", &valid), ("test", &test)];
    for (name, c) in target {
        save_conll(&cfg.target_split(name), c)?;
    }
    let manifest = Manifest {
        seed: cfg.seed,
        masked_category: mask.clone(),
        target_split: cfg.data.target_split,
        input_train: train.len(),
        input_valid: valid.len(),
        input_test: test.len(),
        source: SplitCounts {
            train: source[0].1.len(),
            valid: source[1].1.len(),
            test: source[2].1.len(),
        },
        target: SplitCounts {
            train: tgt_train.len(),
            valid: valid.len(),
            test: test.len(),
        },
    };
    write_json(&cfg.data_dir().join("manifest.json"), &manifest)?;
    cfg.save(&cfg.data_dir().join("config.toml"))?;
    Ok(manifest)
}

fn load_pretrained(cfg: &ExperimentConfig) -> Result<Option<Pretrained>> {
    let Some(path) = &cfg.data.embeddings else { return Ok(None) };
    let p = read_embeddings(path)?;
    if p.dim() != cfg.model.word_dim {
        return Err(Error::Config(format!(
            "embeddings have {} dimensions but word_dim is {}",
            p.dim(),
            cfg.model.word_dim
        )));
    }
    Ok(Some(p))
}

fn training_config(cfg: &ExperimentConfig) -> seqtl_core::tagger::TrainConfig {
    seqtl_core::tagger::TrainConfig {
        seed: cfg.seed,
        ..cfg.training
    }
}

/// Trains, saving each new best snapshot to `dir/model.ckpt`, then writes
/// the history.
fn fit(cfg: &ExperimentConfig, model: TaggerModel, train: &Corpus, valid: &Corpus, dir: &Path) -> Result<TrainOutcome> {
    let tc = training_config(cfg);
    let ckpt_path = dir.join("model.ckpt");
    let outcome = train_with(model, train, valid, &tc, |best, rec: &EpochRecord| {
        let ckpt = Checkpoint {
            model: best.clone(),
            train: Some(tc),
            best_f1: Some(rec.valid_f1),
        };
        save_checkpoint(&ckpt_path, &ckpt)
    })?;
    if outcome.best_epoch.is_none() {
        let ckpt = Checkpoint {
            model: outcome.best.clone(),
            train: Some(tc),
            best_f1: Some(0.0),
        };
        save_checkpoint(&ckpt_path, &ckpt)?;
    }
    write_jsonl(&dir.join("history.jsonl"), &outcome.history)?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceResult {
    pub best_epoch: Option<usize>,
    pub best_valid_f1: f64,
    pub epochs: usize,
    pub test: ScoreReport,
}

/// Builds the vocabulary and a fresh model from the source training split,
/// trains it, and scores the best snapshot on the source test split.
pub fn cmd_train_source(cfg: &ExperimentConfig) -> Result<SourceResult> {
    cfg.validate()?;
    let train = read_split(&cfg.source_split("train"))?;
    let valid = read_split(&cfg.source_split("valid"))?;
    let test = read_split(&cfg.source_split("test"))?;
    let vocab = build_vocab(&train, cfg.data.min_freq);
    let table = match load_pretrained(cfg)? {
        Some(p) => EmbeddingTable::from_pretrained(&vocab, &p, cfg.seed)?,
        None => EmbeddingTable::random(vocab.word_count(), cfg.model.word_dim, cfg.seed),
    };
    let mut categories = train.categories.clone();
    categories.sort();
    let labels = LabelSet::from_categories(&categories);
    let model = TaggerModel::new(cfg.model, labels, vocab, table.vectors, cfg.seed)?;
    let dir = cfg.source_dir();
    cfg.save(&dir.join("config.toml"))?;
    let outcome = fit(cfg, model, &train, &valid, &dir)?;
    let report = outcome.best.evaluate(&test)?;
    write_jsonl(&dir.join("test_report.jsonl"), &report.records())?;
    let result = SourceResult {
        best_epoch: outcome.best_epoch,
        best_valid_f1: outcome.best_f1,
        epochs: outcome.history.len(),
        test: report,
    };
    write_json(&dir.join("result.json"), &result)?;
    Ok(result)
}

fn target_train(cfg: &ExperimentConfig) -> Result<Corpus> {
    let full = read_split(&cfg.target_split("train"))?;
    let f = cfg.transfer.target_fraction;
    if f == 1.0 {
        Ok(full)
    } else {
        Ok(full.subsample(f, cfg.seed)?)
    }
}

/// Output-layer surgery from the source checkpoint into the target label
/// space. Reads only the source checkpoint and target-side files.
pub fn cmd_transfer(cfg: &ExperimentConfig) -> Result<TransferReport> {
    cfg.validate()?;
    let source = load_checkpoint(&cfg.source_checkpoint())?.model;
    let train = target_train(cfg)?;
    let pretrained = load_pretrained(cfg)?;
    let opts = TransferOptions {
        freeze: cfg.transfer.freeze_spec(),
        adapter: cfg.transfer.adapter_config(),
        seed: cfg.seed,
        decoder: Some(cfg.model.decoder),
        vocab_extension: cfg.transfer.extend_vocab.then_some((&train, cfg.data.min_freq)),
        pretrained: pretrained.as_ref(),
    };
    let (model, report) = build_target_model(&source, &cfg.new_categories(), &opts)?;
    let dir = cfg.target_dir();
    cfg.save(&dir.join("config.toml"))?;
    save_checkpoint(&dir.join("transferred.ckpt"), &Checkpoint::new(model))?;
    write_json(&dir.join("transfer_report.json"), &report)?;
    Ok(report)
}

/// Scores split by category group: transferred categories, new ones, and all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupScores {
    pub ori: Counts,
    pub new: Counts,
    pub all: Counts,
}

impl GroupScores {
    pub fn from_report(report: &ScoreReport, source: &[String], new: &[String]) -> Self {
        GroupScores {
            ori: report.pooled(source),
            new: report.pooled(new),
            all: report.overall,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResult {
    pub run: String,
    pub seed: u64,
    pub train_sentences: usize,
    pub best_epoch: Option<usize>,
    pub best_valid_f1: f64,
    pub epochs: usize,
    pub ori_f1: f64,
    pub new_f1: f64,
    pub all_f1: f64,
    pub scores: GroupScores,
}

/// Trains the transferred model on (a fraction of) the target data under its
/// freeze policy and reports old/new/all F1 on the target test split.
pub fn cmd_train_target(cfg: &ExperimentConfig) -> Result<TargetResult> {
    cfg.validate()?;
    let dir = cfg.target_dir();
    let model = load_checkpoint(&dir.join("transferred.ckpt"))?.model;
    let train = target_train(cfg)?;
    let valid = read_split(&cfg.target_split("valid"))?;
    let test = read_split(&cfg.target_split("test"))?;
    let outcome = fit(cfg, model, &train, &valid, &dir)?;
    let report = outcome.best.evaluate(&test)?;
    write_jsonl(&dir.join("test_report.jsonl"), &report.records())?;
    let lineage = outcome
        .best
        .lineage
        .clone()
        .ok_or_else(|| Error::Config("target checkpoint has no transfer lineage".into()))?;
    let scores = GroupScores::from_report(&report, &lineage.source_categories, &lineage.new_categories);
    let result = TargetResult {
        run: cfg.transfer.run_name(),
        seed: cfg.seed,
        train_sentences: train.len(),
        best_epoch: outcome.best_epoch,
        best_valid_f1: outcome.best_f1,
        epochs: outcome.history.len(),
        ori_f1: scores.ori.f1(),
        new_f1: scores.new.f1(),
        all_f1: scores.all.f1(),
        scores,
    };
    write_json(&dir.join("metrics.json"), &result)?;
    Ok(result)
}

/// Scores a checkpoint on a column corpus. Fails when the corpus carries
/// labels outside the model's inventory.
pub fn cmd_evaluate(checkpoint: &Path, corpus: &Path, output: Option<&Path>) -> Result<ScoreReport> {
    let model = load_checkpoint(checkpoint)?.model;
    let data = read_split(corpus)?;
    for s in &data.sentences {
        model.gold_indices(s)?;
    }
    let report = model.evaluate(&data)?;
    if let Some(out) = output {
        write_jsonl(out, &report.records())?;
    }
    Ok(report)
}

/// Mean scores of one grid row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub setting: String,
    pub fraction: f64,
    pub runs: usize,
    pub ori_f1: f64,
    pub new_f1: f64,
    pub all_f1: f64,
    /// Parameters copied from the source, averaged over runs.
    pub copied_parameters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub setting: String,
    pub fraction: f64,
    pub seed: u64,
    pub copied_parameters: usize,
    pub result: TargetResult,
}

fn ensure_source(cfg: &ExperimentConfig) -> Result<()> {
    if !cfg.source_split("train").exists() {
        cmd_prepare(cfg)?;
    }
    if !cfg.source_checkpoint().exists() {
        cmd_train_source(cfg)?;
    }
    Ok(())
}

fn run_matrix(cfg: &ExperimentConfig, cells: &[(Setting, f64)]) -> Result<(Vec<GridRun>, Vec<GridRow>)> {
    cfg.validate()?;
    ensure_source(cfg)?;
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for &(setting, fraction) in cells {
        let mut cell = Vec::new();
        for &seed in &cfg.grid.seeds {
            let mut c = cfg.clone();
            c.seed = seed;
            c.transfer.setting = setting;
            c.transfer.freeze = None;
            c.transfer.adapter = None;
            c.transfer.target_fraction = fraction;
            let report = cmd_transfer(&c)?;
            let result = cmd_train_target(&c)?;
            cell.push(GridRun {
                setting: setting.name().into(),
                fraction,
                seed,
                copied_parameters: report.copied(),
                result,
            });
        }
        let n = cell.len() as f64;
        let mean = |f: fn(&TargetResult) -> f64| cell.iter().map(|r| f(&r.result)).sum::<f64>() / n;
        rows.push(GridRow {
            setting: setting.name().into(),
            fraction,
            runs: cell.len(),
            ori_f1: mean(|r| r.ori_f1),
            new_f1: mean(|r| r.new_f1),
            all_f1: mean(|r| r.all_f1),
            copied_parameters: cell.iter().map(|r| r.copied_parameters).sum::<usize>() / cell.len(),
        });
        runs.extend(cell);
    }
    Ok((runs, rows))
}

pub fn format_rows(rows: &[GridRow]) -> String {
    let mut out = format!(
        "{:<18} {:>8} {:>5} {:>8} {:>8} {:>8}\n",
        "setting", "fraction", "runs", "ori", "new", "all"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<18} {:>8} {:>5} {:>8.4} {:>8.4} {:>8.4}\n",
            r.setting, r.fraction, r.runs, r.ori_f1, r.new_f1, r.all_f1
        ));
    }
    out
}

/// Every configured setting over every seed with all target data.
pub fn cmd_grid(cfg: &ExperimentConfig) -> Result<Vec<GridRow>> {
    let cells: Vec<(Setting, f64)> = cfg.grid.settings.iter().map(|&s| (s, 1.0)).collect();
    let (runs, rows) = run_matrix(cfg, &cells)?;
    write_jsonl(&cfg.out_dir.join("grid_runs.jsonl"), &runs)?;
    write_jsonl(&cfg.out_dir.join("grid.jsonl"), &rows)?;
    crate::records::write_atomic(&cfg.out_dir.join("grid.txt"), format_rows(&rows).as_bytes())?;
    Ok(rows)
}

/// Target-data fraction sweep over the curve settings.
pub fn cmd_curves(cfg: &ExperimentConfig) -> Result<Vec<GridRow>> {
    let mut cells = Vec::new();
    for &f in &cfg.grid.fractions {
        for &s in &cfg.grid.curve_settings {
            cells.push((s, f));
        }
    }
    let (runs, rows) = run_matrix(cfg, &cells)?;
    write_jsonl(&cfg.out_dir.join("curves_runs.jsonl"), &runs)?;
    write_jsonl(&cfg.out_dir.join("curves.jsonl"), &rows)?;
    crate::records::write_atomic(&cfg.out_dir.join("curves.txt"), format_rows(&rows).as_bytes())?;
    Ok(rows)
}

pub fn read_manifest(cfg: &ExperimentConfig) -> Result<Manifest> {
    read_json(&cfg.data_dir().join("manifest.json"))
}

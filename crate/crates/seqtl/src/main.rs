use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use seqtl::config::ExperimentConfig;
use seqtl::experiment::{
    cmd_curves, cmd_evaluate, cmd_grid, cmd_prepare, cmd_train_source, cmd_train_target, cmd_transfer, format_rows,
};
use seqtl::Result;
use seqtl_core::tagger::Decoder;
use seqtl_core::transfer::{AdapterCombine, Setting};

#[derive(Parser)]
#[command(name = "seqtl", version, about = "Train a BLSTM(+CRF) tagger and transfer it to new entity categories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a corpus into source (masked) and target data.
    Prepare(Overrides),
    /// Train the source tagger on the prepared source data.
    TrainSource(Overrides),
    /// Extend the source model to the target label space.
    Transfer(Overrides),
    /// Train a transferred model on the target data.
    TrainTarget(Overrides),
    /// Score a checkpoint on a column corpus.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Also write line-delimited records here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run every transfer setting over every seed.
    Grid(Overrides),
    /// Sweep the fraction of target training data.
    Curves(Overrides),
}

#[derive(Args, Default)]
struct Overrides {
    /// TOML experiment file; flags below take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    valid: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Sentences to generate when no training file is given.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Share of synthetic names without category morphology.
    #[arg(long)]
    ambiguity: Option<f64>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Category hidden from the source side.
    #[arg(long)]
    mask: Option<String>,
    #[arg(long)]
    split_fraction: Option<f64>,
    #[arg(long)]
    target_fraction: Option<f64>,
    #[arg(long, value_parser = parse_decoder)]
    decoder: Option<Decoder>,
    #[arg(long)]
    word_dim: Option<usize>,
    #[arg(long)]
    word_hidden: Option<usize>,
    #[arg(long)]
    char_dim: Option<usize>,
    #[arg(long)]
    char_hidden: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    clip: Option<f64>,
    /// baseline, locked-adjust, locked-output, unlocked or unlocked-adapter.
    #[arg(long, value_parser = parse_setting)]
    setting: Option<Setting>,
    /// Force the adapter on or off regardless of the setting.
    #[arg(long)]
    adapter: Option<bool>,
    #[arg(long)]
    adapter_hidden: Option<usize>,
    #[arg(long, value_parser = parse_combine)]
    adapter_combine: Option<AdapterCombine>,
    #[arg(long, value_delimiter = ',')]
    new_categories: Option<Vec<String>>,
    #[arg(long)]
    no_extend_vocab: bool,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
}

fn parse_decoder(s: &str) -> Result<Decoder, String> {
    match s {
        "crf" => Ok(Decoder::Crf),
        "softmax" => Ok(Decoder::Softmax),
        _ => Err(format!("unknown decoder {s}")),
    }
}

fn parse_setting(s: &str) -> Result<Setting, String> {
    Setting::from_name(s).ok_or_else(|| format!("unknown setting {s}"))
}

fn parse_combine(s: &str) -> Result<AdapterCombine, String> {
    match s {
        "sum" => Ok(AdapterCombine::Sum),
        "concat" => Ok(AdapterCombine::Concat),
        _ => Err(format!("unknown combine mode {s}")),
    }
}

impl Overrides {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        set!(c.out_dir, self.out_dir);
        set!(c.seed, self.seed);
        if self.train.is_some() {
            c.data.train = self.train;
        }
        if self.valid.is_some() {
            c.data.valid = self.valid;
        }
        if self.test.is_some() {
            c.data.test = self.test;
        }
        if self.embeddings.is_some() {
            c.data.embeddings = self.embeddings;
        }
        set!(c.data.synthetic.sentences, self.synthetic);
        set!(c.data.synthetic.ambiguity, self.ambiguity);
        set!(c.data.masked_category, self.mask);
        set!(c.data.target_split, self.split_fraction);
        set!(c.transfer.target_fraction, self.target_fraction);
        set!(c.model.decoder, self.decoder);
        set!(c.model.word_dim, self.word_dim);
        set!(c.model.word_hidden, self.word_hidden);
        set!(c.model.char_dim, self.char_dim);
        set!(c.model.char_hidden, self.char_hidden);
        set!(c.training.max_epochs, self.epochs);
        set!(c.training.patience, self.patience);
        set!(c.training.learning_rate, self.lr);
        set!(c.training.dropout_rate, self.dropout);
        set!(c.training.clip_norm, self.clip);
        set!(c.transfer.setting, self.setting);
        if self.adapter.is_some() {
            c.transfer.adapter = self.adapter;
        }
        if self.adapter_hidden.is_some() {
            c.transfer.adapter_hidden = self.adapter_hidden;
        }
        set!(c.transfer.adapter_combine, self.adapter_combine);
        set!(c.transfer.new_categories, self.new_categories);
        if self.no_extend_vocab {
            c.transfer.extend_vocab = false;
        }
        set!(c.grid.seeds, self.seeds);
        set!(c.grid.fractions, self.fractions);
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(o) => {
            let m = cmd_prepare(&o.resolve()?)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
        }
        Command::TrainSource(o) => {
            let r = cmd_train_source(&o.resolve()?)?;
            println!(
                "best epoch {:?} of {}, valid F1 {:.4}",
                r.best_epoch, r.epochs, r.best_valid_f1
            );
            print!("{}", r.test.to_table());
        }
        Command::Transfer(o) => {
            let cfg = o.resolve()?;
            let r = cmd_transfer(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
            println!("wrote {}", cfg.target_dir().join("transferred.ckpt").display());
        }
        Command::TrainTarget(o) => {
            let r = cmd_train_target(&o.resolve()?)?;
            println!(
                "{} seed {}: ori {:.4}  new {:.4}  all {:.4}  ({} sentences, best epoch {:?})",
                r.run, r.seed, r.ori_f1, r.new_f1, r.all_f1, r.train_sentences, r.best_epoch
            );
        }
        Command::Evaluate {
            checkpoint,
            corpus,
            output,
        } => {
            let r = cmd_evaluate(&checkpoint, &corpus, output.as_deref())?;
            print!("{}", r.to_table());
        }
        Command::Grid(o) => print!("{}", format_rows(&cmd_grid(&o.resolve()?)?)),
        Command::Curves(o) => print!("{}", format_rows(&cmd_curves(&o.resolve()?)?)),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

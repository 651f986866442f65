//! Experiment configuration: one TOML file, overridable from the command
//! line, stored resolved in every run directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use seqtl_core::tagger::{ModelConfig, TrainConfig};
use seqtl_core::transfer::{AdapterCombine, AdapterConfig, FreezeSpec, Setting};

use crate::error::{Error, Result};
use crate::synthetic::SyntheticConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Column corpus to split. When absent a synthetic corpus is generated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    /// Held out from `train` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    pub synthetic: SyntheticConfig,
    pub token_column: usize,
    /// Defaults to the last column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_column: Option<usize>,
    /// Category hidden from the source data and introduced at target time.
    pub masked_category: String,
    /// Share of the training sentences that go to the target side.
    pub target_split: f64,
    /// Share carved out for each of valid and test when those files are absent.
    pub holdout: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    pub min_freq: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            train: None,
            valid: None,
            test: None,
            synthetic: SyntheticConfig::default(),
            token_column: 0,
            label_column: None,
            masked_category: "ORG".into(),
            target_split: 0.2,
            holdout: 0.1,
            embeddings: None,
            min_freq: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferConfig {
    pub setting: Setting,
    /// Explicit policies; overrides the preset of `setting`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freeze: Option<FreezeSpec>,
    /// Overrides whether `setting` uses the adapter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adapter: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adapter_hidden: Option<usize>,
    pub adapter_combine: AdapterCombine,
    /// Defaults to the masked category.
    pub new_categories: Vec<String>,
    pub extend_vocab: bool,
    /// Share of the target training sentences actually used.
    pub target_fraction: f64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            setting: Setting::Unlocked,
            freeze: None,
            adapter: None,
            adapter_hidden: None,
            adapter_combine: AdapterCombine::Sum,
            new_categories: Vec::new(),
            extend_vocab: true,
            target_fraction: 1.0,
        }
    }
}

impl TransferConfig {
    pub fn freeze_spec(&self) -> FreezeSpec {
        self.freeze.unwrap_or_else(|| self.setting.freeze())
    }

    pub fn adapter_config(&self) -> Option<AdapterConfig> {
        self.adapter.unwrap_or(self.setting.uses_adapter()).then_some(AdapterConfig {
            hidden: self.adapter_hidden,
            combine: self.adapter_combine,
        })
    }

    /// Directory name for a target run.
    pub fn run_name(&self) -> String {
        let mut name = if self.freeze.is_some() || self.adapter.is_some() {
            "custom".to_string()
        } else {
            self.setting.name().to_string()
        };
        if self.target_fraction != 1.0 {
            name.push_str(&format!("-frac{}", self.target_fraction));
        }
        name
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub seeds: Vec<u64>,
    pub settings: Vec<Setting>,
    pub fractions: Vec<f64>,
    pub curve_settings: Vec<Setting>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            seeds: vec![0, 1, 2],
            settings: Setting::ALL.to_vec(),
            fractions: vec![0.1, 0.25, 0.5, 1.0],
            curve_settings: vec![Setting::Baseline, Setting::Unlocked, Setting::UnlockedAdapter],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub transfer: TransferConfig,
    pub grid: GridConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            out_dir: PathBuf::from("runs/default"),
            seed: 0,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            training: TrainConfig::default(),
            transfer: TransferConfig::default(),
            grid: GridConfig::default(),
        }
    }
}

fn fraction_ok(f: f64) -> bool {
    f > 0.0 && f <= 1.0
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::records::write_atomic(path, self.to_toml().as_bytes())
    }

    /// Checks ranges and that every input path exists.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, f) in [
            ("target_split", self.data.target_split),
            ("target_fraction", self.transfer.target_fraction),
        ] {
            if !fraction_ok(f) {
                return bad(format!("{name} must be in (0, 1], got {f}"));
            }
        }
        if !(0.0..0.5).contains(&self.data.holdout) {
            return bad(format!("holdout must be in [0, 0.5), got {}", self.data.holdout));
        }
        if let Some(f) = self.grid.fractions.iter().find(|f| !fraction_ok(**f)) {
            return bad(format!("curve fraction must be in (0, 1], got {f}"));
        }
        if !(0.0..=1.0).contains(&self.data.synthetic.ambiguity) {
            return bad(format!("ambiguity must be in [0, 1], got {}", self.data.synthetic.ambiguity));
        }
        if self.grid.seeds.is_empty() {
            return bad("grid needs at least one seed".into());
        }
        if self.data.masked_category.is_empty() {
            return bad("masked_category must be set".into());
        }
        for p in [&self.data.train, &self.data.valid, &self.data.test, &self.data.embeddings]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return bad(format!("{} does not exist", p.display()));
            }
        }
        self.model.validate()?;
        self.training.validate()?;
        self.transfer.freeze_spec().validate()?;
        Ok(())
    }

    pub fn new_categories(&self) -> Vec<String> {
        if self.transfer.new_categories.is_empty() {
            vec![self.data.masked_category.clone()]
        } else {
            self.transfer.new_categories.clone()
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.out_dir.join("data")
    }

    pub fn source_split(&self, split: &str) -> PathBuf {
        self.data_dir().join("source").join(format!("{split}.conll"))
    }

    pub fn target_split(&self, split: &str) -> PathBuf {
        self.data_dir().join("target").join(format!("{split}.conll"))
    }

    pub fn source_dir(&self) -> PathBuf {
        self.out_dir.join("source")
    }

    pub fn source_checkpoint(&self) -> PathBuf {
        self.source_dir().join("model.ckpt")
    }

    /// Isolated directory of the target run described by `transfer` and `seed`.
    pub fn target_dir(&self) -> PathBuf {
        self.out_dir
            .join("target")
            .join(self.transfer.run_name())
            .join(format!("seed-{}", self.seed))
    }
}

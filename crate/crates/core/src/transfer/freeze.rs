use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::crf::{end_index, start_index};
use crate::error::{Error, Result};
use crate::tagger::{ParamGroup, TaggerParams};

/// Update rule for one parameter group during target training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezePolicy {
    /// Copied from the source and never updated.
    Locked,
    /// Copied from the source and trained.
    Unlocked,
    /// Output layer only: transferred rows fixed, new rows trained.
    PartiallyLocked,
    /// Freshly initialized and trained.
    RandomInit,
}

impl FreezePolicy {
    pub fn copies(self) -> bool {
        self != FreezePolicy::RandomInit
    }
}

/// Policies for embeddings, recurrent layers and the output layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreezeSpec {
    pub embeddings: FreezePolicy,
    pub recurrent: FreezePolicy,
    pub output: FreezePolicy,
}

/// The five target-training regimes compared by the grid command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    /// Nothing transferred; every group freshly initialized.
    Baseline,
    /// Embeddings and BLSTMs locked, only new output rows trained.
    LockedAdjust,
    /// Embeddings and BLSTMs locked, whole output layer trained.
    LockedOutput,
    Unlocked,
    /// All groups trained, plus the adapter.
    UnlockedAdapter,
}

impl Setting {
    pub const ALL: [Setting; 5] = [
        Setting::Baseline,
        Setting::LockedAdjust,
        Setting::LockedOutput,
        Setting::Unlocked,
        Setting::UnlockedAdapter,
    ];

    pub fn freeze(self) -> FreezeSpec {
        use FreezePolicy::*;
        let (e, b, o) = match self {
            Setting::Baseline => (RandomInit, RandomInit, RandomInit),
            Setting::LockedAdjust => (Locked, Locked, PartiallyLocked),
            Setting::LockedOutput => (Locked, Locked, Unlocked),
            Setting::Unlocked | Setting::UnlockedAdapter => (Unlocked, Unlocked, Unlocked),
        };
        FreezeSpec {
            embeddings: e,
            recurrent: b,
            output: o,
        }
    }

    pub fn uses_adapter(self) -> bool {
        self == Setting::UnlockedAdapter
    }

    pub fn name(self) -> &'static str {
        match self {
            Setting::Baseline => "baseline",
            Setting::LockedAdjust => "locked-adjust",
            Setting::LockedOutput => "locked-output",
            Setting::Unlocked => "unlocked",
            Setting::UnlockedAdapter => "unlocked-adapter",
        }
    }

    pub fn from_name(name: &str) -> Option<Setting> {
        Setting::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl FreezeSpec {
    pub const fn uniform(policy: FreezePolicy) -> Self {
        FreezeSpec {
            embeddings: policy,
            recurrent: policy,
            output: policy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("embeddings", self.embeddings), ("recurrent", self.recurrent)] {
            if p == FreezePolicy::PartiallyLocked {
                return Err(Error::InvalidFreezeSpec(format!("{name} cannot be partially locked")));
            }
        }
        Ok(())
    }

    pub fn policy(&self, group: ParamGroup) -> FreezePolicy {
        match group {
            ParamGroup::Embeddings => self.embeddings,
            ParamGroup::Recurrent => self.recurrent,
            ParamGroup::Output => self.output,
            ParamGroup::Adapter => FreezePolicy::Unlocked,
        }
    }
}

/// Which output rows came from the source model, and how each group trains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferLayout {
    /// Source label count; target labels below this index are transferred.
    pub source_labels: usize,
    pub freeze: FreezeSpec,
    pub source_categories: Vec<String>,
    pub new_categories: Vec<String>,
}

/// Masks gradients in place according to the layout's freeze policies.
/// Adapter gradients are never touched.
pub fn apply_freeze(grads: &mut TaggerParams, layout: &TransferLayout) -> Result<()> {
    layout.freeze.validate()?;
    for group in [ParamGroup::Embeddings, ParamGroup::Recurrent, ParamGroup::Output] {
        if layout.freeze.policy(group) == FreezePolicy::Locked {
            grads.zero_group(group);
        }
    }
    if layout.freeze.output != FreezePolicy::PartiallyLocked {
        return Ok(());
    }
    let ls = layout.source_labels;
    let lt = grads.emission.weight.rows();
    if ls > lt || grads.emission.bias.rows() != lt {
        return Err(Error::LayoutMismatch(format!("{ls} transferred rows in a {lt}-row output layer")));
    }
    for r in 0..ls {
        grads.emission.weight.row_mut(r).fill(0.0);
        grads.emission.bias.set(r, 0, 0.0);
    }
    if let Some(t) = grads.transitions.as_mut() {
        if t.shape() != (lt + 2, lt + 2) {
            return Err(Error::LayoutMismatch(format!("transition shape {:?} for {lt} labels", t.shape())));
        }
        let old = |i: usize| i < ls || i == start_index(lt) || i == end_index(lt);
        for to in 0..lt + 2 {
            for from in 0..lt + 2 {
                if old(to) && old(from) {
                    t.set(to, from, 0.0);
                }
            }
        }
    }
    Ok(())
}

//! Moving a trained tagger to a larger label space.

mod adapter;
mod freeze;
mod surgery;

pub use adapter::{adapter_backward, adapter_forward, AdapterCache, AdapterCombine, AdapterConfig, AdapterHeads, AdapterParams};
pub use freeze::{apply_freeze, FreezePolicy, FreezeSpec, Setting, TransferLayout};
pub use surgery::{
    build_target_model, extend_output_layer, extend_transitions, ExtendedOutput, GroupReport, Moments, TransferOptions,
    TransferReport,
};

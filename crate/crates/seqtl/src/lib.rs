//! File formats, experiment drivers and the command-line front end for the
//! `seqtl-core` tagger.

pub mod checkpoint;
pub mod config;
pub mod conll;
pub mod embeddings;
pub mod error;
pub mod experiment;
pub mod records;
pub mod synthetic;

pub use error::{Error, Result};

#![no_std]

extern crate alloc;

pub mod crf;
pub mod data;
pub mod error;
pub mod eval;
pub mod numerics;
pub mod tagger;
pub mod transfer;

pub use error::{Error, Result};

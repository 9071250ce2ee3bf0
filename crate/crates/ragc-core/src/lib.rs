//! Lossless grammar compression: RePair, MR-RePair and RL-MR-RePair
//! constructors, a family of compact grammar bit encodings, and a
//! self-describing container format with a decompressor.

pub mod alphabet;
pub mod bitio;
pub mod construct;
pub mod container;
pub mod encode;
pub mod engine;
pub mod error;
pub mod grammar;
pub mod oracle;

pub use error::{Error, Result};
pub use grammar::{Grammar, Rule, Symbol};

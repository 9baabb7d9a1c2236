//! Re-Pair grammar compression in `(1.5 + epsilon) n` words of working
//! space, with a compact grammar encoding and an archive format.
//!
//! [`compress::compress`] turns bytes into a [`Grammar`] and a final text;
//! [`archive`] serializes them and restores the input.

pub mod alloc;
pub mod archive;
pub mod bits;
pub mod cli;
pub mod cluster;
pub mod codec;
pub mod compress;
pub mod error;
pub mod grammar;
pub mod hf_queue;
pub mod lf_queue;
pub mod oracle;
pub mod queue;
pub mod text;

pub use error::{Error, Result};
pub use grammar::{Grammar, Pair, Symbol};
pub use text::SkippableText;

pub mod error;
pub mod frac;
pub mod index_seq;
pub mod systems;
pub mod distribution;
pub mod construction;
pub mod cli;
pub mod oracle;

pub use error::{Error, Result};
pub use frac::Frac;
pub use index_seq::IndexSequence;

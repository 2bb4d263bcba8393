#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod directional;
pub mod error;
pub mod eval;
pub mod mixture;
pub mod quadrature;
pub mod separator;
pub mod sparsifier;
pub mod stft;

pub use error::{Error, Result};

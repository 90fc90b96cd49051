//! Boolean Tucker factorization of object x feature x time tensors.
//!
//! A time series of labelled images is reduced to one binary `O x F` slot
//! matrix per instant (object `o` shows feature `f`), and the slots are stacked
//! into a binary tensor. The tensor is approximated by a small binary core and
//! three binary factor matrices under Boolean arithmetic, either in one batch
//! fit ([`batch`]) or one slot at a time with bounded memory ([`incremental`]).
//! [`reports`] turns a fitted model into change summaries.

pub mod batch;
pub mod bench;
pub mod cli;
pub mod error;
pub mod incremental;
pub mod io;
pub mod reports;
pub mod rng;
pub mod svg;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{BoolMatrix, BoolTensor3, Dims, ErrorStat, Mode};

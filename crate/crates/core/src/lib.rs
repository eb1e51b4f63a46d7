// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod expfunc;
pub mod levy_model;
pub mod par;
pub mod path_sim;

pub use error::{Error, Result};

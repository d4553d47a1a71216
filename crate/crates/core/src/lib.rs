#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod bivariate;
pub mod divergence;
pub mod error;
pub mod experiment;
pub mod processes;
pub mod serial_anova;
pub mod stats;
pub mod stochastics;

pub use error::{Error, Result};

//! Experiment runner for the txfee toolkit: scenario files, reproduction
//! runs and CSV/JSON report emission.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod counterexamples;
pub mod error;
pub mod output;
pub mod reproduce;
pub mod scenario;
pub mod table1;

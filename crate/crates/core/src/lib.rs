//! Meta-learning toolkit for AutoML configuration-space reduction.
//!
//! Evaluation records are ingested into meta-knowledge bases ([`meta_store`]),
//! turned into per-dataset rankings and a global leaderboard ([`ranking`]),
//! compared through relative landmarking ([`landmarking`]) and used to cull a
//! predictor roster down to `k` members ([`config_space`]). Dataset challenge
//! ([`challenge`]) and exact expected-loss baselines ([`expectation`]) put a
//! strategy's recommendation in context; [`harness`] runs a budgeted simulated
//! pipeline search over reduced spaces and reports consistency, failures and
//! Nemenyi critical differences.

#![forbid(unsafe_code)]

pub mod challenge;
pub mod config_space;
pub mod error;
pub mod expectation;
pub mod harness;
pub mod landmarking;
pub mod meta_store;
pub mod ranking;
pub mod synth;

pub use error::{Error, Result};

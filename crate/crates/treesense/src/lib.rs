//! Support recovery for tree-sparse signals under Gaussian noise.
//!
//! A signal is *k-tree sparse* when its nonzero coordinates form a rooted
//! connected subtree of a known nearly complete binary tree. This crate
//! implements:
//!
//! * the combinatorics of such supports ([`tree`]): validity, neighbor sets,
//!   enumeration oracles, and random generation;
//! * stochastic measurement oracles with budget accounting ([`sensing`]);
//! * the adaptive top-down sensing procedure and its repeated-measurement
//!   variant, plus a two-stage support-then-amplitude estimator ([`recover`]);
//! * non-adaptive and adaptive comparison methods: Lasso, hierarchical group
//!   Lasso, and a sequential-thresholding adaptive stand-in ([`baselines`]);
//! * closed-form necessary/sufficient amplitude thresholds and minimax
//!   lower-bound evaluators ([`bounds`]);
//! * a reproducible Monte Carlo harness with CSV output ([`harness`]).
//!
//! Trials in the harness are independent work items; with the default
//! `parallel` feature they run on a rayon pool, otherwise sequentially.
//! Either way the output is byte-identical (modulo wall-clock columns),
//! because every random stream is a pure function of `(base_seed, trial)`.

pub mod baselines;
pub mod bounds;
mod error;
pub mod harness;
pub mod recover;
pub mod sensing;
pub mod tree;

pub use error::{Error, Result};

use std::collections::BTreeSet;

/// An estimated index set. Unlike [`tree::Support`] this carries no validity
/// guarantee: estimators may output sets that are not rooted connected
/// subtrees (truncated runs, structure-agnostic baselines).
pub type IndexSet = BTreeSet<usize>;

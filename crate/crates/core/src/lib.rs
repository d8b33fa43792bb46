//! Class-outlier based feature construction.
//!
//! The pipeline finds per-class outliers with LOF, collects the
//! k-neighborhoods of those outliers that mix several classes, merges
//! overlapping neighborhoods, and mines consistent conjunctive rules on
//! each of them with an unpruned decision tree. The rules become binary
//! features appended to the dataset. A DC-Fringe implementation, an
//! outlier-removal baseline, two learners and a stratified
//! cross-validation harness are included for evaluation.

pub mod data;
pub mod dcfringe;
pub mod error;
pub mod harness;
pub mod learners;
pub mod lof;
pub mod neighborhood;
pub mod ruleminer;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};

//! Keyword-level false-positive bias auditing for scored binary text classifiers.
//!
//! The audit has two halves. Discovery labels each annotated document by its
//! confusion quadrant, fits a tf-idf representation, and trains a linear model
//! that separates false positives from everything else; its heaviest
//! coefficients name candidate over-penalized keywords. Measurement then scores
//! each keyword (or theme of keywords) with subgroup, BPSN and BNSP AUC,
//! bootstrap confidence intervals, and cross-group meta-metrics, and compares a
//! baseline model against one trained with keyword-targeted true-negative
//! augmentation.

pub mod corpus;
pub mod error;
pub mod fairmetrics;
pub mod linmodel;
pub mod mitigation;
pub mod pipeline;
pub mod report;
pub mod synthgen;
pub mod textvec;

pub use error::{AuditError, ErrorKind, Result};

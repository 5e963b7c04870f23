//! Corpus compiler and evaluation harness for schema-guided task-oriented
//! dialog.
//!
//! The pipeline has four stages:
//!
//! 1. [`corpus`] reads SGD, KETOD and BiToD releases into one model.
//! 2. [`transform`] splits query-bearing turns into explicit API-call turns
//!    and emits annotation-free [`transform::Example`] records.
//! 3. [`prompt`] renders those records into model inputs.
//! 4. [`runner`] drives a generation backend and scores the outputs with
//!    [`textmetrics`] (responses) and [`apimetrics`] (API calls).

pub mod apicall;
pub mod apimetrics;
pub mod corpus;
pub mod prompt;
pub mod runner;
pub mod textmetrics;
pub mod transform;

//! Intrusion-detection pipeline over NSL-KDD connection records.
//!
//! The crate is organised as a chain of small modules:
//!
//! * [`ingest`] parses NSL-KDD text files, applies the cleaning rules and
//!   relabels raw attack names into report classes.
//! * [`preprocess`] fits reversible column encoders and produces stratified
//!   train/validation/test splits.
//! * [`gbt`] trains a second-order multiclass gradient-boosted tree ensemble.
//! * [`isoforest`] scores records with an Isolation Forest and ranks classes
//!   by mean anomaly.
//! * [`gan`] trains one small generative adversarial network per minority
//!   class and synthesizes rows to rebalance the training set.
//! * [`eval`] builds confusion matrices, per-class metrics and before/after
//!   comparison reports.
//! * [`analysis`] computes per-class feature summaries for plotting.
//! * [`pipeline`] wires everything behind the `nidsgan` command-line driver.
//!
//! [`synth`] generates NSL-KDD-shaped surrogate records for demos and tests
//! when the real dataset is not at hand.

pub mod analysis;
pub mod error;
pub mod eval;
pub mod gan;
pub mod gbt;
pub mod ingest;
pub mod isoforest;
pub mod pipeline;
pub mod preprocess;
pub(crate) mod seed;
pub mod synth;

pub use error::{Error, Result};

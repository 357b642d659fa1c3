//! Selective conformal inference: online prediction sets issued only on
//! selected time points, with an adversarial bound on the false coverage
//! proportion among the selected.
//!
//! The core is the threshold recursion in [`sci`]. Rules for selection,
//! prediction sets and errors live in [`rules`], the online statistics in
//! [`estimators`], and the data sources in [`datagen`]. [`runner`] wires them
//! into named experiments behind a common [`runner::Experiment`] trait.

pub mod datagen;
pub mod error;
pub mod estimators;
pub mod metrics;
pub mod normal;
pub mod oracle;
pub mod policy;
pub mod rules;
pub mod runner;
pub mod sci;

pub use error::{Error, Result};
pub use metrics::{fcp, fcp_bound, summarize, Summary, TraceRecord};
pub use policy::{Decision, Policy};
pub use rules::{ErrorFunction, PredictionSet, SelectionRule};
pub use sci::{react, StepSchedule, SciState};

//! Experiment wiring, registry and the online driver.
//!
//! Each experiment implements [`Experiment`]: it names a data stream and
//! builds a [`Wiring`], the learning policy the driver runs against the
//! stream. Experiments are registered by name in a [`Registry`] and picked
//! at run time from the config.

pub mod adversarial;
pub mod config;
pub mod driver;
pub mod experiments;
pub mod output;
pub mod registry;
pub mod wiring;

pub use adversarial::{run_adversarial_suite, AdversarialReport, AdversarialRow};
pub use config::{AdversaryMode, Augment, Defaults, ExperimentConfig, Resolved, SelectionKind, StatisticMode};
pub use driver::{
    replication_seed, run, run_ar, run_classify, run_predict_lb, run_regress, run_replication, run_select_predict,
    run_testing, run_with, RunOutput, RunSet, SummaryRow,
};
pub use registry::Registry;
pub use wiring::{Experiment, Wiring};

//! Experiments looked up by name.

use crate::error::{Error, Result};

use super::experiments;
use super::wiring::Experiment;

pub struct Registry {
    experiments: Vec<Box<dyn Experiment>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self { experiments: Vec::new() }
    }

    /// All shipped experiments.
    pub fn builtin() -> Self {
        Self { experiments: experiments::builtin() }
    }

    /// Add an experiment, replacing any registered under the same name.
    pub fn register(&mut self, experiment: Box<dyn Experiment>) {
        self.experiments.retain(|e| e.name() != experiment.name());
        self.experiments.push(experiment);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Experiment> {
        self.experiments
            .iter()
            .find(|e| e.name() == name)
            .map(|e| e.as_ref())
            .ok_or_else(|| Error::UnknownExperiment(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.experiments.iter().map(|e| e.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Experiment> {
        self.experiments.iter().map(|e| e.as_ref())
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

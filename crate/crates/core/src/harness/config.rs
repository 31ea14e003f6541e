use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::Model;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Lemma3,
    Lemma4,
    Lemma5,
    Theorem1,
    ModelCompare,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Lemma3,
        Experiment::Lemma4,
        Experiment::Lemma5,
        Experiment::Theorem1,
        Experiment::ModelCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Lemma3 => "lemma3",
            Experiment::Lemma4 => "lemma4",
            Experiment::Lemma5 => "lemma5",
            Experiment::Theorem1 => "theorem1",
            Experiment::ModelCompare => "model-compare",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Experiment> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == key)
            .ok_or_else(|| Error::usage(format!("unknown experiment {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::usage(format!("unknown format {s:?}"))),
        }
    }
}

/// Everything that determines an experiment's output. The worker count is
/// deliberately not serialized: it never changes results, and reports must
/// be byte-identical across worker counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: Model,
    pub d: usize,
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub epsilon: f64,
    /// Depth threshold for `lemma5`; defaults to the largest in-range value.
    pub h: Option<i64>,
    /// Leaf assignments per structure when `lemma3` cannot exhaust them.
    /// Must be a power of two so the sample mean stays dyadic.
    pub assignments: u64,
    /// `lemma3` exhausts all `2^L` assignments when `L` is at most this.
    pub exhaustive_leaf_cap: usize,
    /// `lemma5` uses exact shape counts when `d` is at most this.
    pub exact_depth_cap: usize,
    /// `lemma4` flips every leaf of trees with at most this many leaves, and
    /// this many distinct random leaves otherwise.
    pub max_flips: usize,
    #[serde(skip)]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, model: Model, d: usize, n: usize) -> Self {
        ExperimentConfig {
            experiment,
            model,
            d,
            n,
            samples: 1000,
            seed: 1,
            epsilon: 0.5,
            h: None,
            assignments: 512,
            exhaustive_leaf_cap: 16,
            exact_depth_cap: 14,
            max_flips: 64,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < self.d {
            return Err(Error::usage(format!(
                "need n >= d, got d = {}, n = {}",
                self.d, self.n
            )));
        }
        if self.samples == 0 {
            return Err(Error::usage("samples must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::usage(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !self.assignments.is_power_of_two() {
            return Err(Error::usage(format!(
                "assignments must be a power of two, got {}",
                self.assignments
            )));
        }
        if self.exhaustive_leaf_cap > 24 {
            return Err(Error::usage("exhaustive leaf cap above 24 is not supported"));
        }
        if self.max_flips == 0 {
            return Err(Error::usage("max_flips must be at least 1"));
        }
        if self.experiment == Experiment::ModelCompare && self.d > 4 {
            return Err(Error::usage(format!(
                "model-compare needs d <= 4, got {}",
                self.d
            )));
        }
        if self.d > 63 {
            return Err(Error::usage("d above 63 is not supported"));
        }
        Ok(())
    }
}

//! Named, reproducible experiments: each runs a fixed battery of assertions
//! against exact or Monte Carlo computations and returns a structured report
//! with measured values, artifacts, and a config fingerprint.

mod distance_suites;
mod hitting_suites;
mod tree_suites;

pub use distance_suites::{run_cheeger_suite, run_poissonization, run_trel_bounds};
pub use hitting_suites::{
    run_example33_quantiles, run_lemma32, run_local_clt, run_psi_rate,
};
pub use tree_suites::{
    run_fact41, run_nbrw_harmonic, run_thm2a_sensitivity, run_thm2c_lumping, run_thm3_profile,
};

use serde::Serialize;

use crate::error::{MixError, Result};
use crate::numeric::fnv1a64;

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub measured: String,
}

impl Assertion {
    pub fn new(name: impl Into<String>, passed: bool, measured: impl Into<String>) -> Self {
        Assertion { name: name.into(), passed, measured: measured.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<Artifact>,
}

impl ExperimentReport {
    pub fn new(name: &str, config: serde_json::Value) -> Self {
        let config_hash = format!("{:016x}", fnv1a64(config.to_string().as_bytes()));
        ExperimentReport {
            name: name.to_string(),
            config,
            config_hash,
            assertions: Vec::new(),
            passed: true,
            artifacts: Vec::new(),
        }
    }

    pub fn push(&mut self, assertion: Assertion) {
        self.passed &= assertion.passed;
        self.assertions.push(assertion);
    }

    pub fn attach(&mut self, name: impl Into<String>, contents: impl Into<String>) {
        self.artifacts.push(Artifact { name: name.into(), contents: contents.into() });
    }

    /// One line per assertion, "PASS"/"FAIL" first, as the drivers print it.
    pub fn render_lines(&self) -> String {
        let mut out = String::new();
        for a in &self.assertions {
            out.push_str(&format!(
                "{} {} :: {} [{}]\n",
                if a.passed { "PASS" } else { "FAIL" },
                self.name,
                a.name,
                a.measured
            ));
        }
        out
    }
}

/// Optional config-file overrides for an experiment's tunable knobs (seeds,
/// sample counts). Keys the experiment does not read are ignored; the
/// effective values always land in the report's config block.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides<'a>(pub Option<&'a serde_json::Value>);

impl Overrides<'_> {
    pub fn u64(&self, key: &str, default: u64) -> u64 {
        self.0.and_then(|v| v.get(key)).and_then(|v| v.as_u64()).unwrap_or(default)
    }

    pub fn usize(&self, key: &str, default: usize) -> usize {
        self.u64(key, default as u64) as usize
    }
}

/// All registered experiment names, in acceptance order.
pub const EXPERIMENT_NAMES: &[&str] = &[
    "lemma32",
    "cheeger-suite",
    "trel-bounds",
    "example33-quantiles",
    "poissonization",
    "fact41",
    "thm2a-sensitivity",
    "local-clt",
    "thm2c-lumping",
    "thm3-profile",
    "nbrw-harmonic",
    "psi-rate",
];

/// Runs a registered experiment; `overrides` may adjust seeds and sample
/// counts, everything else is pinned to the acceptance configuration.
pub fn run_experiment(name: &str, overrides: Overrides) -> Result<ExperimentReport> {
    match name {
        "lemma32" => run_lemma32(overrides),
        "cheeger-suite" => run_cheeger_suite(overrides),
        "trel-bounds" => run_trel_bounds(overrides),
        "example33-quantiles" => run_example33_quantiles(),
        "poissonization" => run_poissonization(overrides),
        "fact41" => run_fact41(overrides),
        "thm2a-sensitivity" => run_thm2a_sensitivity(overrides),
        "local-clt" => run_local_clt(),
        "thm2c-lumping" => run_thm2c_lumping(overrides),
        "thm3-profile" => run_thm3_profile(overrides),
        "nbrw-harmonic" => run_nbrw_harmonic(),
        "psi-rate" => run_psi_rate(),
        _ => Err(MixError::BadParams(format!(
            "unknown experiment `{name}`; registered: {}",
            EXPERIMENT_NAMES.join(", ")
        ))),
    }
}

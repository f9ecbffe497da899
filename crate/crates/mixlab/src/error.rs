use thiserror::Error;

/// Errors produced by network construction, chain building and analysis.
#[derive(Debug, Error)]
pub enum MixError {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),

    #[error("non-positive weight {weight} on edge {{{u}, {v}}}")]
    NonPositiveWeight { u: String, v: String, weight: f64 },

    #[error("duplicate edge {{{u}, {v}}}")]
    DuplicateEdge { u: String, v: String },

    #[error("network is disconnected; one component is [{component}]")]
    Disconnected { component: String },

    #[error("holding probability {0} outside [0, 1)")]
    BadHolding(f64),

    #[error("invalid partition: {0}")]
    BadPartition(String),

    #[error("perturbation factor {0} < 1; rescale weights globally instead")]
    FactorBelowOne(f64),

    #[error("stretch factor {0} < 2")]
    BadStretchFactor(usize),

    #[error("vertex `{vertex}` has degree {degree} < 2; non-backtracking walk undefined")]
    DegreeTooSmall { vertex: String, degree: usize },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("tolerance {0} outside (0, {1}]")]
    BadTolerance(f64, f64),

    #[error("distributions live on different state spaces ({0} vs {1} states)")]
    MismatchedSupport(usize, usize),

    #[error(
        "exact mode supports at most {cap} states / {step_cap} steps, got {states} states, {steps} steps; \
         pass an explicit start set instead of ALL"
    )]
    ExactCapExceeded { cap: usize, step_cap: usize, states: usize, steps: usize },

    #[error("chain is not reversible (worst pair {x}, {y}: |pi(x)P(x,y) - pi(y)P(y,x)| = {violation:.3e})")]
    NotReversible { x: String, y: String, violation: f64 },

    #[error("dense spectrum supports at most {cap} states, got {states}")]
    DenseCapExceeded { cap: usize, states: usize },

    #[error("exact Cheeger enumeration supports at most {cap} states, got {states}; use sweep mode")]
    CheegerCapExceeded { cap: usize, states: usize },

    #[error("empty target set")]
    EmptyTargets,

    #[error("family of size {0} is too small for a trend fit (need at least 3)")]
    FamilyTooSmall(usize),

    #[error("parameter constraint violated: {0}")]
    BadParams(String),

    #[error("power iteration failed to converge within {0} iterations (residual {1:.3e})")]
    NoConvergence(usize, f64),

    #[error("expander generation exhausted {attempts} attempts; best spectral gap found {best_gap}")]
    ExpanderRetriesExhausted { attempts: usize, best_gap: f64 },

    #[error("no integer threshold gives a boundary fraction in [{lo}, {hi}]; attainable fractions bracket it as {below} / {above}")]
    NoBoundaryThreshold { lo: f64, hi: f64, below: f64, above: f64 },

    #[error("selector parse error: {0}")]
    BadSelector(String),

    #[error("invalid network file: {0}")]
    BadNetworkFile(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MixError>;

//! Byzantine fault-tolerant peer-to-peer distributed gradient descent.
//!
//! Honest agents fuse received estimates with a coordinate-wise trimmed mean,
//! filter received gradients with comparative gradient elimination, take a
//! step and project back into the box `[-xi, xi]^d`. This crate provides the
//! filters, quadratic cost models with their convergence constants, honest
//! and Byzantine agent behaviour, a deterministic synchronous simulator and
//! per-round metrics.

pub mod cost;
pub mod error;
pub mod filters;
pub mod metrics;
pub mod point;
pub mod protocol;
pub mod rng;
pub mod simulator;

pub use cost::{
    aggregate_minimizer, check_redundancy_sufficient, make_redundant_ensemble,
    spectral_constants, CostEnsemble, HessianSpec, LocalCost, QuadraticCost, SpectralConstants,
};
pub use error::{Error, Result};
pub use filters::{avg, cge, fuse_estimates, fuse_points, project_box, trim};
pub use metrics::{check_zeta, consensus_diameter, lyapunov_v, RoundTrace, TRACE_CSV_HEADER};
pub use point::{Hypercube, Point};
pub use protocol::{
    honest_step, honest_step_detailed, Adversary, AdversaryStrategy, EstimateMode,
    HonestAgentState, Inbox, Observation, RoundMessage, StepOutcome, StepSchedule,
};
pub use simulator::{analyze, run, Analysis, Init, RunResult, Scenario, Warning};

use byzgrad_core::{Analysis, RunResult};
use serde::{Deserialize, Serialize};

/// Final `max_dist` allowed for a `converged` verdict.
pub const CONVERGED_MAX_DIST: f64 = 0.05;
/// Final `diameter_l2` allowed for a `converged` verdict.
pub const CONVERGED_DIAMETER: f64 = 1e-3;
/// Required drop of `V` from the first to the last row.
pub const CONVERGED_V_RATIO: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub digest: String,
    pub n: usize,
    pub f: usize,
    pub d: usize,
    pub alpha: f64,
    pub mu: f64,
    pub lambda: f64,
    pub zeta: f64,
    pub zeta_exact: bool,
    /// `OK`, `FAIL`, or `UNCHECKED`.
    pub redundancy: String,
    /// `OK` or `FAIL`.
    pub convergence_preconditions: String,
    pub initial_v: f64,
    pub final_diameter_l2: f64,
    pub final_v: f64,
    pub final_max_dist: f64,
    pub rounds: usize,
    /// `converged` or `not_converged`.
    pub verdict: String,
    pub warnings: Vec<String>,
    pub x_star: Vec<f64>,
    pub wall_clock_seconds: f64,
}

pub fn redundancy_label(a: &Analysis) -> &'static str {
    match a.redundancy {
        Some(true) => "OK",
        Some(false) => "FAIL",
        None => "UNCHECKED",
    }
}

pub fn ok_fail(b: bool) -> &'static str {
    if b {
        "OK"
    } else {
        "FAIL"
    }
}

impl RunSummary {
    pub fn new(digest: String, n: usize, f: usize, result: &RunResult) -> Self {
        let a = &result.analysis;
        let first = result.first_row();
        let last = result.last_row();
        let converged = last.max_dist <= CONVERGED_MAX_DIST
            && last.diameter_l2 <= CONVERGED_DIAMETER
            && (first.v == 0.0 || last.v <= first.v / CONVERGED_V_RATIO);
        RunSummary {
            digest,
            n,
            f,
            d: a.x_star.dim(),
            alpha: a.constants.alpha,
            mu: a.constants.mu,
            lambda: a.constants.lambda,
            zeta: a.constants.zeta,
            zeta_exact: a.constants.zeta_exact,
            redundancy: redundancy_label(a).into(),
            convergence_preconditions: ok_fail(a.convergence_preconditions_hold()).into(),
            initial_v: first.v,
            final_diameter_l2: last.diameter_l2,
            final_v: last.v,
            final_max_dist: last.max_dist,
            rounds: result.rounds,
            verdict: if converged { "converged" } else { "not_converged" }.into(),
            warnings: a.warnings.iter().map(|w| w.code().to_string()).collect(),
            x_star: a.x_star.coords().to_vec(),
            wall_clock_seconds: result.elapsed.as_secs_f64(),
        }
    }

    pub fn converged(&self) -> bool {
        self.verdict == "converged"
    }
}

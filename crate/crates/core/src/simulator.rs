//! Synchronous round engine over the complete graph.
//!
//! Each round has two phases. First every message of round `t` is
//! materialized: honest agents broadcast their estimate and local gradient,
//! faulty agents emit one message per receiver after observing all honest
//! round-`t` values. Then every honest agent applies its update. The whole
//! run is a deterministic function of the [`Scenario`].

use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::cost::{
    aggregate_minimizer, check_redundancy_sufficient, spectral_constants, CostEnsemble, LocalCost,
    SpectralConstants,
};
use crate::error::{Error, Result};
use crate::metrics::{check_zeta, consensus_diameter, lyapunov_v, max_distance, RoundTrace};
use crate::point::{Hypercube, Point};
use crate::protocol::{
    honest_step_detailed, Adversary, AdversaryStrategy, EstimateMode, HonestAgentState, Inbox,
    Observation, RoundMessage, StepSchedule,
};
use crate::rng::{substream, Purpose};

/// Initial estimates of the honest agents.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Uniform in the box, drawn from the scenario seed.
    Uniform,
    /// One point per agent id; entries of faulty agents are ignored.
    Explicit(Vec<Point>),
}

/// Everything that determines a run.
///
/// The honest set of `ensemble` is ignored; honest agents are exactly the ids
/// not listed in `faulty_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n: usize,
    pub f: usize,
    pub cube: Hypercube,
    pub ensemble: CostEnsemble,
    pub faulty_ids: Vec<usize>,
    pub adversary: AdversaryStrategy,
    pub schedule: StepSchedule,
    pub horizon: usize,
    pub seed: u64,
    pub init: Init,
    /// Trace stride; `None` means `max(1, horizon / 10000)`.
    pub record_every: Option<usize>,
}

impl Scenario {
    pub fn d(&self) -> usize {
        self.cube.dim()
    }

    pub fn record_stride(&self) -> usize {
        self.record_every.unwrap_or((self.horizon / 10_000).max(1))
    }

    /// Ensemble with the honest set derived from `faulty_ids`.
    pub fn honest_ensemble(&self) -> Result<CostEnsemble> {
        self.ensemble.with_faulty(&self.faulty_ids)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, f, d) = (self.n, self.f, self.d());
        if n < 2 * f + 1 {
            return Err(Error::usage(format!(
                "n >= 2f + 1 required, got n = {n}, f = {f}"
            )));
        }
        if f > 0 && n < 2 * f + 2 {
            return Err(Error::usage(format!(
                "trimming f = {f} values from each side of the n - 1 = {} received \
                 estimates needs n >= 2f + 2",
                n - 1
            )));
        }
        if self.ensemble.n() != n {
            return Err(Error::usage(format!(
                "ensemble has {} costs but n = {n}",
                self.ensemble.n()
            )));
        }
        if self.ensemble.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.ensemble.dim(),
            });
        }
        let mut ids = self.faulty_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.faulty_ids.len() {
            return Err(Error::usage("faulty_ids contains duplicates"));
        }
        if let Some(bad) = ids.iter().find(|&&i| i >= n) {
            return Err(Error::usage(format!("faulty id {bad} out of range for n = {n}")));
        }
        if ids.len() > f {
            return Err(Error::usage(format!(
                "{} faulty ids listed but f = {f}",
                ids.len()
            )));
        }
        if self.horizon == 0 {
            return Err(Error::usage("horizon must be at least 1"));
        }
        if self.record_every == Some(0) {
            return Err(Error::usage("record_every must be at least 1"));
        }
        self.schedule.validate()?;
        match &self.adversary {
            AdversaryStrategy::NormInflate { scale } if !scale.is_finite() => {
                return Err(Error::usage("norm_inflate scale must be finite"));
            }
            AdversaryStrategy::ColludeTarget { target, .. } => target.ensure_dim(d)?,
            _ => {}
        }
        if let Init::Explicit(points) = &self.init {
            if points.len() != n {
                return Err(Error::usage(format!(
                    "explicit init needs {n} points, got {}",
                    points.len()
                )));
            }
            for (i, x) in points.iter().enumerate() {
                x.ensure_dim(d)?;
                if !ids.contains(&i) && !self.cube.contains(x) {
                    return Err(Error::usage(format!(
                        "initial estimate of agent {i} lies outside the box"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Conditions worth flagging that do not stop a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    NonPositiveMargin { alpha: f64 },
    RedundancyViolated,
    RedundancyUnchecked(String),
    ZetaNotExact,
    MinimizerOutsideBox,
}

impl Warning {
    pub fn code(&self) -> &'static str {
        match self {
            Warning::NonPositiveMargin { .. } => "alpha_non_positive",
            Warning::RedundancyViolated => "redundancy_violated",
            Warning::RedundancyUnchecked(_) => "redundancy_unchecked",
            Warning::ZetaNotExact => "zeta_bound_not_exact",
            Warning::MinimizerOutsideBox => "minimizer_outside_box",
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NonPositiveMargin { alpha } => {
                write!(f, "fault-tolerance margin alpha = {alpha} is not positive")
            }
            Warning::RedundancyViolated => write!(f, "honest costs are not 2f-redundant"),
            Warning::RedundancyUnchecked(why) => write!(f, "2f-redundancy not checked: {why}"),
            Warning::ZetaNotExact => write!(f, "zeta is an upper bound, not the exact maximum"),
            Warning::MinimizerOutsideBox => {
                write!(f, "honest aggregate minimizer lies outside the box")
            }
        }
    }
}

/// Pre-run analysis of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub constants: SpectralConstants,
    pub x_star: Point,
    /// `None` when the sufficient check could not be applied.
    pub redundancy: Option<bool>,
    pub warnings: Vec<Warning>,
}

impl Analysis {
    /// Every hypothesis of the convergence guarantee holds: positive margin,
    /// redundancy, strong convexity, and a minimizer inside the box.
    pub fn convergence_preconditions_hold(&self) -> bool {
        self.constants.alpha > 0.0
            && self.redundancy == Some(true)
            && self.constants.lambda > 0.0
            && !self.warnings.contains(&Warning::MinimizerOutsideBox)
    }
}

/// Computes constants, x* and the redundancy verdict without running.
pub fn analyze(scenario: &Scenario) -> Result<Analysis> {
    scenario.validate()?;
    let ensemble = scenario.honest_ensemble()?;
    let x_star = aggregate_minimizer(&ensemble)?;
    let constants = spectral_constants(&ensemble, scenario.f, &scenario.cube)?;
    let mut warnings = Vec::new();
    if constants.alpha <= 0.0 {
        warnings.push(Warning::NonPositiveMargin {
            alpha: constants.alpha,
        });
    }
    let redundancy = match check_redundancy_sufficient(&ensemble, scenario.f) {
        Ok(true) => Some(true),
        Ok(false) => {
            warnings.push(Warning::RedundancyViolated);
            Some(false)
        }
        Err(e) => {
            warnings.push(Warning::RedundancyUnchecked(e.to_string()));
            None
        }
    };
    if !constants.zeta_exact {
        warnings.push(Warning::ZetaNotExact);
    }
    if !scenario.cube.contains(&x_star) {
        warnings.push(Warning::MinimizerOutsideBox);
    }
    Ok(Analysis {
        constants,
        x_star,
        redundancy,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// Final estimate of every honest agent, by ascending id.
    pub final_estimates: Vec<(usize, Point)>,
    pub trace: Vec<RoundTrace>,
    pub analysis: Analysis,
    pub rounds: usize,
    pub elapsed: Duration,
}

impl RunResult {
    pub fn first_row(&self) -> &RoundTrace {
        self.trace.first().expect("trace has at least one row")
    }

    pub fn last_row(&self) -> &RoundTrace {
        self.trace.last().expect("trace has at least one row")
    }
}

fn initial_estimates(scenario: &Scenario, honest: &[usize]) -> Vec<Point> {
    let xi = scenario.cube.xi();
    honest
        .iter()
        .map(|&i| match &scenario.init {
            Init::Explicit(points) => points[i].clone(),
            Init::Uniform => {
                let mut rng = substream(scenario.seed, Purpose::Init, i as u64, 0, 0);
                Point::from_vec_unchecked(
                    (0..scenario.d()).map(|_| rng.random_range(-xi..=xi)).collect(),
                )
            }
        })
        .collect()
}

/// Runs `horizon` rounds. Trace rows are recorded at every multiple of the
/// stride and at `t = horizon`; the final row measures the state after the
/// last update together with the filtered gradients of the round that would
/// follow.
pub fn run(scenario: &Scenario) -> Result<RunResult> {
    let started = Instant::now();
    let analysis = analyze(scenario)?;
    let ensemble = scenario.honest_ensemble()?;
    let honest = ensemble.honest().to_vec();
    let (n, f) = (scenario.n, scenario.f);
    let cube = scenario.cube;
    let zeta = analysis.constants.zeta;
    let adversary = Adversary::new(scenario.adversary.clone(), scenario.seed);
    let stride = scenario.record_stride();

    let mut estimates = initial_estimates(scenario, &honest);
    let mut trace = Vec::with_capacity(scenario.horizon / stride + 2);
    // position of each agent id among the honest, if honest
    let slot: Vec<Option<usize>> = (0..n).map(|i| honest.binary_search(&i).ok()).collect();

    for t in 0..=scenario.horizon {
        let eta = scenario.schedule.eta(t);
        let gradients = honest
            .iter()
            .zip(&estimates)
            .map(|(&i, x)| ensemble.cost(i).gradient(x))
            .collect::<Result<Vec<_>>>()?;
        let obs = Observation {
            honest_estimates: &estimates,
            honest_gradients: &gradients,
            cube,
            zeta,
        };

        let mut next = Vec::with_capacity(honest.len());
        let mut filtered = Vec::with_capacity(honest.len());
        for (pos, &i) in honest.iter().enumerate() {
            let mut entries = Vec::with_capacity(n - 1);
            for j in (0..n).filter(|&j| j != i) {
                let message = match slot[j] {
                    Some(s) => RoundMessage {
                        estimate: estimates[s].clone(),
                        grad: gradients[s].clone(),
                    },
                    None => adversary.emit(t, j, i, &obs)?,
                };
                entries.push((j, message));
            }
            let state = HonestAgentState {
                id: i,
                estimate: estimates[pos].clone(),
                cost: ensemble.cost(i),
            };
            let outcome = honest_step_detailed(&state, &Inbox::new(entries), t, eta, f, &cube)?;
            filtered.push(outcome.filtered_gradient);
            next.push(outcome.next);
        }

        if t % stride == 0 || t == scenario.horizon {
            let (diameter_inf, diameter_l2) = consensus_diameter(&estimates)?;
            let row = RoundTrace {
                t,
                eta,
                diameter_inf,
                diameter_l2,
                v: lyapunov_v(&estimates, &analysis.x_star)?,
                max_dist: max_distance(&estimates, &analysis.x_star)?,
                cge_norm_max: filtered.iter().map(Point::norm).fold(0.0, f64::max),
                zeta_violated: !check_zeta(&filtered, zeta),
            };
            let finite = [row.eta, row.diameter_l2, row.v, row.max_dist, row.cge_norm_max]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::Numeric {
                    round: t,
                    reason: "non-finite trace metric".into(),
                });
            }
            trace.push(row);
        }

        if t < scenario.horizon {
            estimates = next;
        }
    }

    Ok(RunResult {
        final_estimates: honest.into_iter().zip(estimates).collect(),
        trace,
        analysis,
        rounds: scenario.horizon,
        elapsed: started.elapsed(),
    })
}

/// Collusion at the all-`+xi` corner with per-receiver random estimates.
pub fn corner_collusion(cube: &Hypercube) -> AdversaryStrategy {
    AdversaryStrategy::ColludeTarget {
        target: Point::from_vec_unchecked(vec![cube.xi(); cube.dim()]),
        estimates: EstimateMode::RandomInBox,
    }
}

//! TOML scenario files.
//!
//! A scenario file mirrors [`Scenario`] field for field. Unknown keys are an
//! error, and so is a `version` other than [`SCHEMA_VERSION`].
//!
//! ```toml
//! version = 1
//! n = 10
//! f = 2
//! d = 3
//! xi = 10.0
//! horizon = 20000
//! seed = 7
//! faulty_ids = [8, 9]
//!
//! [schedule]
//! kind = "harmonic"
//! eta0 = 1.0
//!
//! [adversary]
//! kind = "collude_target"
//! target = [10.0, 10.0, 10.0]
//! estimates = "random_in_box"
//!
//! [init]
//! kind = "uniform"
//!
//! [ensemble]
//! kind = "generated"
//! seed = 7
//! eig_min = 1.0
//! eig_max = 1.0
//! x_star = [1.0, -2.0, 0.5]
//! ```

use byzgrad_core::{
    make_redundant_ensemble, AdversaryStrategy, CostEnsemble, EstimateMode, HessianSpec,
    Hypercube, Init, Point, QuadraticCost, Scenario, StepSchedule,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub n: usize,
    pub f: usize,
    pub d: usize,
    pub xi: f64,
    pub horizon: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub faulty_ids: Vec<usize>,
    pub schedule: ScheduleSpec,
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub init: InitSpec,
    pub ensemble: EnsembleSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Harmonic { eta0: f64 },
    Polynomial { eta0: f64, exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateModeSpec {
    #[default]
    Consistent,
    RandomInBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    SignFlip,
    NormInflate {
        scale: f64,
    },
    CoordExtreme,
    RandomInBox,
    ColludeTarget {
        target: Vec<f64>,
        #[serde(default)]
        estimates: EstimateModeSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    #[default]
    Uniform,
    Explicit { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleSpec {
    /// Costs built by the redundant-ensemble generator.
    Generated {
        seed: u64,
        eig_min: f64,
        eig_max: f64,
        x_star: Vec<f64>,
    },
    /// One cost per agent; `hessian` is row-major `d × d`.
    Explicit { costs: Vec<CostSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub hessian: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub c: f64,
}

/// 1-based line of the first `key = ...` assignment in `src`.
fn key_line(src: &str, key: &str) -> Option<usize> {
    src.lines().position(|line| {
        line.trim_start()
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

impl ScenarioFile {
    /// Parses and schema-checks a scenario file. `src` is the file text; the
    /// error messages cite 1-based lines.
    pub fn parse(src: &str) -> Result<Self, CliError> {
        let file: ScenarioFile = toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(src, s.start));
            CliError::config(line, e.message().trim().to_string())
        })?;
        file.check(Some(src))?;
        Ok(file)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    fn err(&self, src: Option<&str>, key: &str, msg: String) -> CliError {
        CliError::config(src.and_then(|s| key_line(s, key)), msg)
    }

    /// Structural checks that need no numerics. `src`, when given, is used to
    /// pinpoint lines.
    pub fn check(&self, src: Option<&str>) -> Result<(), CliError> {
        if self.version != SCHEMA_VERSION {
            return Err(self.err(
                src,
                "version",
                format!(
                    "unsupported schema version {}, this tool reads version {SCHEMA_VERSION}",
                    self.version
                ),
            ));
        }
        let (n, f, d) = (self.n, self.f, self.d);
        if n < 2 * f + 1 {
            return Err(self.err(
                src,
                "f",
                format!("n >= 2f + 1 required, got n = {n}, f = {f}"),
            ));
        }
        if f > 0 && n < 2 * f + 2 {
            return Err(self.err(
                src,
                "f",
                format!(
                    "n >= 2f + 2 required so the n - 1 received estimates can be trimmed, \
                     got n = {n}, f = {f}"
                ),
            ));
        }
        if d == 0 {
            return Err(self.err(src, "d", "d must be at least 1".into()));
        }
        if self.seed > i64::MAX as u64 {
            return Err(self.err(src, "seed", format!("seed must be at most {}", i64::MAX)));
        }
        if let AdversarySpec::ColludeTarget { target, .. } = &self.adversary {
            if target.len() != d {
                return Err(self.err(
                    src,
                    "target",
                    format!("target has {} coordinates, expected d = {d}", target.len()),
                ));
            }
        }
        match &self.ensemble {
            EnsembleSpec::Generated { x_star, .. } if x_star.len() != d => {
                return Err(self.err(
                    src,
                    "x_star",
                    format!("x_star has {} coordinates, expected d = {d}", x_star.len()),
                ));
            }
            EnsembleSpec::Explicit { costs } => {
                if costs.len() != n {
                    return Err(self.err(
                        src,
                        "n",
                        format!("explicit ensemble lists {} costs, expected n = {n}", costs.len()),
                    ));
                }
                for (i, c) in costs.iter().enumerate() {
                    if c.hessian.len() != d * d || c.b.len() != d {
                        return Err(self.err(
                            src,
                            "hessian",
                            format!("cost {i} must have a {d}x{d} hessian and {d} linear terms"),
                        ));
                    }
                }
            }
            _ => {}
        }
        if let InitSpec::Explicit { points } = &self.init {
            if points.len() != n || points.iter().any(|p| p.len() != d) {
                return Err(self.err(
                    src,
                    "points",
                    format!("explicit init needs {n} points of dimension {d}"),
                ));
            }
        }
        Ok(())
    }

    /// Builds the simulator scenario, running all numeric validation.
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        self.check(None)?;
        let core = |e: byzgrad_core::Error| CliError::config(None, e.to_string());
        let point = |v: &[f64]| Point::new(v.to_vec()).map_err(core);
        let cube = Hypercube::new(self.xi, self.d).map_err(core)?;
        let schedule = match self.schedule {
            ScheduleSpec::Harmonic { eta0 } => StepSchedule::harmonic(eta0),
            ScheduleSpec::Polynomial { eta0, exponent } => StepSchedule::polynomial(eta0, exponent),
        }
        .map_err(core)?;
        let adversary = match &self.adversary {
            AdversarySpec::SignFlip => AdversaryStrategy::SignFlip,
            AdversarySpec::NormInflate { scale } => AdversaryStrategy::NormInflate { scale: *scale },
            AdversarySpec::CoordExtreme => AdversaryStrategy::CoordExtreme,
            AdversarySpec::RandomInBox => AdversaryStrategy::RandomInBox,
            AdversarySpec::ColludeTarget { target, estimates } => AdversaryStrategy::ColludeTarget {
                target: point(target)?,
                estimates: match estimates {
                    EstimateModeSpec::Consistent => EstimateMode::Consistent,
                    EstimateModeSpec::RandomInBox => EstimateMode::RandomInBox,
                },
            },
        };
        let init = match &self.init {
            InitSpec::Uniform => Init::Uniform,
            InitSpec::Explicit { points } => Init::Explicit(
                points
                    .iter()
                    .map(|p| point(p))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        let ensemble = match &self.ensemble {
            EnsembleSpec::Generated {
                seed,
                eig_min,
                eig_max,
                x_star,
            } => make_redundant_ensemble(
                self.n,
                self.f,
                &point(x_star)?,
                *seed,
                HessianSpec {
                    eig_min: *eig_min,
                    eig_max: *eig_max,
                },
            )
            .map_err(core)?,
            EnsembleSpec::Explicit { costs } => CostEnsemble::all_honest(
                costs
                    .iter()
                    .map(|c| QuadraticCost::new(c.hessian.clone(), point(&c.b)?, c.c).map_err(core))
                    .collect::<Result<Vec<_>, _>>()?,
            )
            .map_err(core)?,
        };
        let scenario = Scenario {
            n: self.n,
            f: self.f,
            cube,
            ensemble,
            faulty_ids: self.faulty_ids.clone(),
            adversary,
            schedule,
            horizon: self.horizon,
            seed: self.seed,
            init,
            record_every: self.record_every,
        };
        scenario.validate().map_err(core)?;
        Ok(scenario)
    }
}

//! Built-in scenario generators.

use byzgrad_core::cost::fault_tolerance_margin;
use byzgrad_core::rng::{substream, Purpose};
use byzgrad_core::{Point, QuadraticCost};
use rand::Rng;

use crate::error::CliError;
use crate::scenario_file::{
    AdversarySpec, CostSpec, EnsembleSpec, EstimateModeSpec, InitSpec, ScenarioFile,
    ScheduleSpec, SCHEMA_VERSION,
};

pub const TEMPLATES: [&str; 3] = ["redundant_quadratic", "violated_redundancy", "margin_negative"];

/// Overrides for template defaults. `None` keeps the template's choice.
#[derive(Debug, Clone, Default)]
pub struct GenParams {
    pub n: Option<usize>,
    pub f: Option<usize>,
    pub d: Option<usize>,
    pub seed: Option<u64>,
    pub xi: Option<f64>,
    pub horizon: Option<usize>,
    pub eig_min: Option<f64>,
    pub eig_max: Option<f64>,
}

struct Base {
    n: usize,
    f: usize,
    d: usize,
    seed: u64,
    xi: f64,
    horizon: usize,
}

impl GenParams {
    fn base(&self, n: usize, f: usize, d: usize, horizon: usize) -> Base {
        Base {
            n: self.n.unwrap_or(n),
            f: self.f.unwrap_or(f),
            d: self.d.unwrap_or(d),
            seed: self.seed.unwrap_or(7),
            xi: self.xi.unwrap_or(10.0),
            horizon: self.horizon.unwrap_or(horizon),
        }
    }
}

impl Base {
    fn check(&self) -> Result<(), CliError> {
        if self.d == 0 {
            return Err(CliError::config(None, "d must be at least 1"));
        }
        if !(self.xi.is_finite() && self.xi > 0.0) {
            return Err(CliError::config(None, "xi must be positive and finite"));
        }
        if self.n < 2 * self.f + 1 {
            return Err(CliError::config(
                None,
                format!("n >= 2f + 1 required, got n = {}, f = {}", self.n, self.f),
            ));
        }
        Ok(())
    }

    /// Point drawn uniformly from `[-xi/2, xi/2]^d`, keyed by `slot`.
    fn interior_point(&self, slot: u64) -> Vec<f64> {
        let half = self.xi / 2.0;
        let mut rng = substream(self.seed, Purpose::Template, slot, 0, 0);
        (0..self.d).map(|_| rng.random_range(-half..=half)).collect()
    }

    fn file(&self, adversary: AdversarySpec, ensemble: EnsembleSpec) -> ScenarioFile {
        ScenarioFile {
            version: SCHEMA_VERSION,
            n: self.n,
            f: self.f,
            d: self.d,
            xi: self.xi,
            horizon: self.horizon,
            seed: self.seed,
            record_every: None,
            faulty_ids: (self.n - self.f..self.n).collect(),
            schedule: ScheduleSpec::Harmonic { eta0: 1.0 },
            adversary,
            init: InitSpec::Uniform,
            ensemble,
        }
    }
}

fn centered(hessian: Vec<f64>, center: &[f64]) -> Result<CostSpec, CliError> {
    let center = Point::new(center.to_vec()).map_err(CliError::from)?;
    let q = QuadraticCost::centered(hessian.clone(), &center)?;
    Ok(CostSpec {
        hessian,
        b: q.linear().coords().to_vec(),
        c: q.offset(),
    })
}

fn identity(d: usize) -> Vec<f64> {
    diagonal(&vec![1.0; d])
}

fn diagonal(diag: &[f64]) -> Vec<f64> {
    let d = diag.len();
    let mut m = vec![0.0; d * d];
    for (k, v) in diag.iter().enumerate() {
        m[k * d + k] = *v;
    }
    m
}

/// Redundant ensemble with a common minimizer inside the box, attacked by
/// agents colluding toward the `+xi` corner.
fn redundant_quadratic(p: &GenParams) -> Result<ScenarioFile, CliError> {
    let b = p.base(10, 2, 3, 20_000);
    b.check()?;
    let x_star = b.interior_point(0);
    Ok(b.file(
        AdversarySpec::ColludeTarget {
            target: vec![b.xi; b.d],
            estimates: EstimateModeSpec::RandomInBox,
        },
        EnsembleSpec::Generated {
            seed: b.seed,
            eig_min: p.eig_min.unwrap_or(1.0),
            eig_max: p.eig_max.unwrap_or(1.0),
            x_star,
        },
    ))
}

/// Identity Hessians centered at distinct points, so no common minimizer.
fn violated_redundancy(p: &GenParams) -> Result<ScenarioFile, CliError> {
    let b = p.base(5, 1, 1, 2_000);
    b.check()?;
    if b.f == 0 {
        return Err(CliError::config(
            None,
            "violated_redundancy needs f >= 1; with f = 0 redundancy always holds",
        ));
    }
    let costs = (0..b.n)
        .map(|i| centered(identity(b.d), &b.interior_point(i as u64 + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut file = b.file(AdversarySpec::SignFlip, EnsembleSpec::Explicit { costs });
    file.schedule = ScheduleSpec::Harmonic { eta0: 0.5 };
    Ok(file)
}

/// Redundant ensemble whose conditioning pushes alpha to zero or below.
fn margin_negative(p: &GenParams) -> Result<ScenarioFile, CliError> {
    let b = p.base(10, 4, 9, 2_000);
    b.check()?;
    if b.f == 0 {
        return Err(CliError::config(None, "margin_negative needs f >= 1"));
    }
    let x_star = b.interior_point(0);
    let adversary = AdversarySpec::CoordExtreme;
    if fault_tolerance_margin(1.0, 1.0, b.d, b.f, b.n) <= 0.0 {
        return Ok(b.file(
            adversary,
            EnsembleSpec::Generated {
                seed: b.seed,
                eig_min: 1.0,
                eig_max: 1.0,
                x_star,
            },
        ));
    }
    if b.d == 1 {
        return Err(CliError::config(
            None,
            format!(
                "margin_negative: alpha > 0 for every ensemble with d = 1, n = {}, f = {}",
                b.n, b.f
            ),
        ));
    }
    // alpha <= 0 iff mu / lambda >= (n / f - 1) / (2 sqrt(d))
    let kappa = 1.01 * (b.n as f64 / b.f as f64 - 1.0) / (2.0 * (b.d as f64).sqrt());
    let mut diag = vec![1.0; b.d];
    diag[0] = kappa;
    let costs = (0..b.n)
        .map(|_| centered(diagonal(&diag), &x_star))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(b.file(adversary, EnsembleSpec::Explicit { costs }))
}

pub fn generate(name: &str, params: &GenParams) -> Result<ScenarioFile, CliError> {
    let file = match name {
        "redundant_quadratic" => redundant_quadratic(params)?,
        "violated_redundancy" => violated_redundancy(params)?,
        "margin_negative" => margin_negative(params)?,
        other => {
            return Err(CliError::config(
                None,
                format!(
                    "unknown template {other:?}; available: {}",
                    TEMPLATES.join(", ")
                ),
            ))
        }
    };
    file.to_scenario()?;
    Ok(file)
}

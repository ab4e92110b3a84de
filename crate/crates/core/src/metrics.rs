//! Per-round convergence measurements over the honest agents.

use crate::cost::tol;
use crate::error::{Error, Result};
use crate::point::Point;

/// One row of the run trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    pub t: usize,
    pub eta: f64,
    /// Largest per-coordinate spread of the honest estimates.
    pub diameter_inf: f64,
    /// Largest pairwise Euclidean distance between honest estimates.
    pub diameter_l2: f64,
    /// Sum over coordinates of the squared largest honest deviation from x*.
    pub v: f64,
    pub max_dist: f64,
    /// Largest norm of an honest agent's eliminated-gradient sum this round.
    pub cge_norm_max: f64,
    pub zeta_violated: bool,
}

/// Column names of the trace CSV, in order.
pub const TRACE_CSV_HEADER: &str =
    "t,eta,diameter_inf,diameter_l2,V,max_dist,cge_norm_max,zeta_violated";

/// 17 significant digits round-trips every `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

impl RoundTrace {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.t,
            format_real(self.eta),
            format_real(self.diameter_inf),
            format_real(self.diameter_l2),
            format_real(self.v),
            format_real(self.max_dist),
            format_real(self.cge_norm_max),
            self.zeta_violated
        )
    }
}

fn ensure_nonempty(estimates: &[Point]) -> Result<usize> {
    let d = estimates
        .first()
        .ok_or_else(|| Error::usage("metric over an empty honest set"))?
        .dim();
    for x in estimates {
        x.ensure_dim(d)?;
    }
    Ok(d)
}

/// `V = Σ_k max_{i∈H} (x_i[k] − x*[k])²`.
pub fn lyapunov_v(estimates: &[Point], x_star: &Point) -> Result<f64> {
    let d = ensure_nonempty(estimates)?;
    x_star.ensure_dim(d)?;
    Ok((0..d)
        .map(|k| {
            estimates
                .iter()
                .map(|x| {
                    let gap = x[k] - x_star[k];
                    gap * gap
                })
                .fold(0.0, f64::max)
        })
        .sum())
}

/// Returns `(diameter_inf, diameter_l2)`.
pub fn consensus_diameter(estimates: &[Point]) -> Result<(f64, f64)> {
    let d = ensure_nonempty(estimates)?;
    let inf = (0..d)
        .map(|k| {
            let (lo, hi) = estimates
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x[k]), hi.max(x[k]))
                });
            hi - lo
        })
        .fold(0.0, f64::max);
    let mut l2: f64 = 0.0;
    for (i, a) in estimates.iter().enumerate() {
        for b in &estimates[i + 1..] {
            l2 = l2.max(a.distance(b));
        }
    }
    Ok((inf, l2))
}

pub fn max_distance(estimates: &[Point], x_star: &Point) -> Result<f64> {
    let d = ensure_nonempty(estimates)?;
    x_star.ensure_dim(d)?;
    Ok(estimates
        .iter()
        .map(|x| x.distance(x_star))
        .fold(0.0, f64::max))
}

/// True iff every honest filtered gradient has norm at most `zeta` (plus the
/// witness slack).
pub fn check_zeta(cge_outputs: &[Point], zeta: f64) -> bool {
    cge_outputs
        .iter()
        .all(|h| h.norm() <= zeta + tol::WITNESS)
}

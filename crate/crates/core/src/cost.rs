//! Quadratic local costs, ensembles of them, and the constants that govern
//! convergence: Lipschitz constant `mu`, strong-convexity constant `lambda`,
//! gradient bound `zeta` and fault-tolerance margin `alpha`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::point::{Hypercube, Point};
use crate::rng::{substream, Purpose};

/// Numerical tolerances used by the cost models.
pub mod tol {
    /// Per-entry slack when checking symmetry of a Hessian.
    pub const SYMMETRY: f64 = 1e-9;
    /// Eigenvalues down to `-PSD_SLACK` are accepted as positive semidefinite.
    pub const PSD_SLACK: f64 = 1e-9;
    /// Smallest eigenvalue below this counts as singular.
    pub const SINGULAR: f64 = 1e-12;
    /// Gradient norm under which a point counts as stationary.
    pub const STATIONARY: f64 = 1e-8;
    /// Additive slack for Lipschitz / convexity / zeta witnesses.
    pub const WITNESS: f64 = 1e-9;
    /// Above this dimension zeta falls back to an analytic upper bound.
    pub const ZETA_EXACT_MAX_DIM: usize = 20;
}

/// A differentiable local cost.
pub trait LocalCost {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Point) -> Result<f64>;
    fn gradient(&self, x: &Point) -> Result<Point>;
}

/// `Q(x) = ½ xᵀAx − bᵀx + c` with `A` symmetric positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    hessian: DMatrix<f64>,
    b: Point,
    c: f64,
}

impl QuadraticCost {
    /// `hessian` is row-major `d × d` where `d = b.dim()`.
    pub fn new(hessian: Vec<f64>, b: Point, c: f64) -> Result<Self> {
        let d = b.dim();
        if hessian.len() != d * d {
            return Err(Error::usage(format!(
                "hessian has {} entries, expected {}",
                hessian.len(),
                d * d
            )));
        }
        if hessian.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hessian"));
        }
        if !c.is_finite() {
            return Err(Error::NonFinite("cost offset"));
        }
        let hessian = DMatrix::from_row_slice(d, d, &hessian);
        for r in 0..d {
            for col in r + 1..d {
                if (hessian[(r, col)] - hessian[(col, r)]).abs() > tol::SYMMETRY {
                    return Err(Error::model(format!(
                        "hessian is not symmetric at ({r}, {col})"
                    )));
                }
            }
        }
        let cost = QuadraticCost { hessian, b, c };
        let (lo, _) = cost.eigen_range();
        if lo < -tol::PSD_SLACK {
            return Err(Error::model(format!(
                "hessian is not positive semidefinite (smallest eigenvalue {lo})"
            )));
        }
        Ok(cost)
    }

    /// `½ (x − center)ᵀ A (x − center)`, minimized at `center` with value 0.
    pub fn centered(hessian: Vec<f64>, center: &Point) -> Result<Self> {
        let d = center.dim();
        let a = DMatrix::from_row_slice(d, d, &hessian);
        let b = mat_vec(&a, center);
        let b = Point::checked(b, "linear term")?;
        let c = 0.5 * center.dot(&b);
        QuadraticCost::new(hessian, b, c)
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn hessian_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .flat_map(|r| (0..d).map(move |c| (r, c)))
            .map(|(r, c)| self.hessian[(r, c)])
            .collect()
    }

    pub fn linear(&self) -> &Point {
        &self.b
    }

    pub fn offset(&self) -> f64 {
        self.c
    }

    /// Smallest and largest eigenvalue of the Hessian.
    pub fn eigen_range(&self) -> (f64, f64) {
        eigen_range(&self.hessian)
    }
}

fn mat_vec(a: &DMatrix<f64>, x: &Point) -> Vec<f64> {
    let d = x.dim();
    (0..d)
        .map(|r| (0..d).map(|c| a[(r, c)] * x[c]).sum())
        .collect()
}

fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

impl LocalCost for QuadraticCost {
    fn dim(&self) -> usize {
        self.b.dim()
    }

    fn eval(&self, x: &Point) -> Result<f64> {
        x.ensure_dim(self.dim())?;
        let ax = mat_vec(&self.hessian, x);
        let quad: f64 = x.coords().iter().zip(&ax).map(|(a, b)| a * b).sum();
        Ok(0.5 * quad - self.b.dot(x) + self.c)
    }

    fn gradient(&self, x: &Point) -> Result<Point> {
        x.ensure_dim(self.dim())?;
        let d = self.dim();
        let g = (0..d)
            .map(|r| {
                let ax: f64 = (0..d).map(|c| self.hessian[(r, c)] * x[c]).sum();
                ax - self.b[r]
            })
            .collect();
        Point::checked(g, "gradient")
    }
}

/// One cost per agent id plus the set of agents treated as honest.
#[derive(Debug, Clone, PartialEq)]
pub struct CostEnsemble {
    costs: Vec<QuadraticCost>,
    honest: Vec<usize>,
}

impl CostEnsemble {
    pub fn new(costs: Vec<QuadraticCost>, honest: impl IntoIterator<Item = usize>) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::usage("ensemble needs at least one cost"));
        }
        let d = costs[0].dim();
        for cost in &costs {
            if cost.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: cost.dim(),
                });
            }
        }
        let mut honest: Vec<usize> = honest.into_iter().collect();
        honest.sort_unstable();
        honest.dedup();
        if let Some(&bad) = honest.iter().find(|&&i| i >= costs.len()) {
            return Err(Error::usage(format!(
                "honest agent id {bad} out of range for {} agents",
                costs.len()
            )));
        }
        if honest.is_empty() {
            return Err(Error::usage("ensemble needs at least one honest agent"));
        }
        Ok(CostEnsemble { costs, honest })
    }

    /// Every agent honest.
    pub fn all_honest(costs: Vec<QuadraticCost>) -> Result<Self> {
        let n = costs.len();
        CostEnsemble::new(costs, 0..n)
    }

    /// Same costs, with `faulty` removed from the honest set.
    pub fn with_faulty(&self, faulty: &[usize]) -> Result<Self> {
        let honest = (0..self.costs.len()).filter(|i| !faulty.contains(i));
        CostEnsemble::new(self.costs.clone(), honest)
    }

    pub fn n(&self) -> usize {
        self.costs.len()
    }

    pub fn dim(&self) -> usize {
        self.costs[0].dim()
    }

    pub fn costs(&self) -> &[QuadraticCost] {
        &self.costs
    }

    pub fn cost(&self, id: usize) -> &QuadraticCost {
        &self.costs[id]
    }

    /// Honest agent ids in ascending order.
    pub fn honest(&self) -> &[usize] {
        &self.honest
    }

    pub fn is_honest(&self, id: usize) -> bool {
        self.honest.binary_search(&id).is_ok()
    }

    pub fn honest_costs(&self) -> impl Iterator<Item = &QuadraticCost> + '_ {
        self.honest.iter().map(|&i| &self.costs[i])
    }

    fn honest_hessian_sum(&self) -> DMatrix<f64> {
        let d = self.dim();
        self.honest_costs()
            .fold(DMatrix::zeros(d, d), |acc, c| acc + &c.hessian)
    }
}

/// Minimizer of the honest aggregate `Σ_{i∈H} Q_i`.
pub fn aggregate_minimizer(ensemble: &CostEnsemble) -> Result<Point> {
    let d = ensemble.dim();
    let a = ensemble.honest_hessian_sum();
    let (lo, _) = eigen_range(&a);
    if lo <= tol::SINGULAR {
        return Err(Error::model(format!(
            "aggregate not strongly convex (smallest eigenvalue {lo:e})"
        )));
    }
    let b = ensemble
        .honest_costs()
        .fold(DVector::zeros(d), |acc, c| {
            acc + DVector::from_column_slice(c.b.coords())
        });
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::model("aggregate not strongly convex (Cholesky failed)"))?;
    let mut x = chol.solve(&b);
    // one step of iterative refinement
    let residual = &b - &a * &x;
    x += chol.solve(&residual);
    Point::checked(x.iter().copied().collect(), "aggregate minimizer")
}

/// Sufficient check for 2f-redundancy: every honest cost is stationary at the
/// honest aggregate minimizer. For strictly convex costs this means every
/// subset aggregate is minimized at the same point.
pub fn check_redundancy_sufficient(ensemble: &CostEnsemble, f: usize) -> Result<bool> {
    if f == 0 {
        return Ok(true);
    }
    for &i in ensemble.honest() {
        let (lo, _) = ensemble.cost(i).eigen_range();
        if lo <= tol::SINGULAR {
            return Err(Error::model(format!(
                "agent {i} cost is not strictly convex (smallest eigenvalue {lo:e})"
            )));
        }
    }
    let x_star = aggregate_minimizer(ensemble)?;
    for cost in ensemble.honest_costs() {
        if cost.gradient(&x_star)?.norm() > tol::STATIONARY {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Eigenvalue range for generated Hessians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianSpec {
    pub eig_min: f64,
    pub eig_max: f64,
}

impl HessianSpec {
    pub fn identity() -> Self {
        HessianSpec {
            eig_min: 1.0,
            eig_max: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.eig_min.is_finite()
            && self.eig_max.is_finite()
            && self.eig_min > 0.0
            && self.eig_min <= self.eig_max;
        if !ok {
            return Err(Error::usage(format!(
                "eigenvalue range must satisfy 0 < min <= max, got [{}, {}]",
                self.eig_min, self.eig_max
            )));
        }
        Ok(())
    }
}

/// Generates `n` strictly convex quadratics that all share the minimizer
/// `x_star`, which makes the ensemble 2f-redundant for every `f`.
///
/// Each Hessian is `Q diag(λ) Qᵀ` with a random orthogonal `Q` and
/// eigenvalues uniform in `[eig_min, eig_max]`. A degenerate range yields an
/// exact scaled identity.
pub fn make_redundant_ensemble(
    n: usize,
    f: usize,
    x_star: &Point,
    seed: u64,
    spec: HessianSpec,
) -> Result<CostEnsemble> {
    if n < 2 * f + 1 {
        return Err(Error::usage(format!(
            "n >= 2f + 1 required, got n = {n}, f = {f}"
        )));
    }
    spec.validate()?;
    let d = x_star.dim();
    let costs = (0..n)
        .map(|i| {
            let mut rng = substream(seed, Purpose::Ensemble, i as u64, 0, 0);
            let hessian = random_spd(&mut rng, d, spec);
            QuadraticCost::centered(hessian, x_star)
        })
        .collect::<Result<Vec<_>>>()?;
    CostEnsemble::all_honest(costs)
}

fn random_spd<R: Rng>(rng: &mut R, d: usize, spec: HessianSpec) -> Vec<f64> {
    if spec.eig_min == spec.eig_max {
        let mut h = vec![0.0; d * d];
        for k in 0..d {
            h[k * d + k] = spec.eig_min;
        }
        return h;
    }
    let gauss = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let q = gauss.qr().q();
    let eig = DVector::<f64>::from_fn(d, |_, _| rng.random_range(spec.eig_min..=spec.eig_max));
    let a = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    let sym = (&a + a.transpose()) * 0.5;
    (0..d)
        .flat_map(|r| (0..d).map(move |c| (r, c)))
        .map(|(r, c)| sym[(r, c)])
        .collect()
}

/// Constants governing convergence of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConstants {
    /// Largest honest Hessian eigenvalue (gradient Lipschitz constant).
    pub mu: f64,
    /// Smallest eigenvalue of the average honest Hessian.
    pub lambda: f64,
    /// Bound on the norm of every honest agent's filtered gradient.
    pub zeta: f64,
    /// `false` when `zeta` is the analytic upper bound rather than the exact
    /// maximum over the hypercube.
    pub zeta_exact: bool,
    /// `lambda / (lambda + 2 sqrt(d) mu) - f / n`.
    pub alpha: f64,
}

pub fn fault_tolerance_margin(lambda: f64, mu: f64, d: usize, f: usize, n: usize) -> f64 {
    lambda / (lambda + 2.0 * (d as f64).sqrt() * mu) - f as f64 / n as f64
}

pub fn spectral_constants(
    ensemble: &CostEnsemble,
    f: usize,
    cube: &Hypercube,
) -> Result<SpectralConstants> {
    let d = ensemble.dim();
    if cube.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: cube.dim(),
        });
    }
    let n = ensemble.n();
    if f >= n {
        return Err(Error::usage(format!("f = {f} must be below n = {n}")));
    }
    let mu = ensemble
        .honest_costs()
        .map(|c| c.eigen_range().1)
        .fold(f64::NEG_INFINITY, f64::max);
    let h = ensemble.honest().len() as f64;
    let (lambda, _) = eigen_range(&(ensemble.honest_hessian_sum() / h));

    let zeta_exact = d <= tol::ZETA_EXACT_MAX_DIM;
    let max_grad = ensemble
        .honest_costs()
        .map(|c| {
            if zeta_exact {
                max_gradient_norm_on_box(c, cube)
            } else {
                c.eigen_range().1 * (d as f64).sqrt() * cube.xi() + c.b.norm()
            }
        })
        .fold(0.0, f64::max);
    let zeta = (n - f) as f64 * max_grad;

    Ok(SpectralConstants {
        mu,
        lambda,
        zeta,
        zeta_exact,
        alpha: fault_tolerance_margin(lambda, mu, d, f, n),
    })
}

/// `max_{x ∈ box} ‖A x − b‖`, attained at a vertex because the norm of an
/// affine map is convex. Vertices are walked in Gray-code order so each step
/// updates the gradient with one Hessian column; the gradient is recomputed
/// from scratch every 256 vertices to bound drift.
fn max_gradient_norm_on_box(cost: &QuadraticCost, cube: &Hypercube) -> f64 {
    const REFRESH: u64 = 256;
    let d = cost.dim();
    let xi = cube.xi();
    let a = &cost.hessian;
    let vertex = |gray: u64| -> Vec<f64> {
        (0..d)
            .map(|k| if gray >> k & 1 == 1 { xi } else { -xi })
            .collect()
    };
    let full = |v: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|r| (0..d).map(|c| a[(r, c)] * v[c]).sum::<f64>() - cost.b[r])
            .collect()
    };

    let mut grad = full(&vertex(0));
    let mut best = grad.iter().map(|g| g * g).sum::<f64>();
    for m in 1u64..(1u64 << d) {
        let gray = m ^ (m >> 1);
        if m % REFRESH == 0 {
            grad = full(&vertex(gray));
        } else {
            let k = m.trailing_zeros() as usize;
            let delta = if gray >> k & 1 == 1 { 2.0 * xi } else { -2.0 * xi };
            for (r, g) in grad.iter_mut().enumerate() {
                *g += a[(r, k)] * delta;
            }
        }
        best = best.max(grad.iter().map(|g| g * g).sum::<f64>());
    }
    best.sqrt()
}

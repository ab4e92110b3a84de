//! Input builders shared by the benchmarks.

use byzgrad_core::simulator::corner_collusion;
use byzgrad_core::{
    make_redundant_ensemble, HessianSpec, Hypercube, Init, Point, Scenario, StepSchedule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_points(count: usize, d: usize, scale: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Point::new((0..d).map(|_| rng.random_range(-scale..scale)).collect()).unwrap())
        .collect()
}

pub fn random_values(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Redundant identity-Hessian scenario under corner collusion.
pub fn corner_scenario(n: usize, f: usize, d: usize, horizon: usize) -> Scenario {
    let cube = Hypercube::new(10.0, d).unwrap();
    let x_star = Point::new(vec![1.0; d]).unwrap();
    Scenario {
        n,
        f,
        cube,
        ensemble: make_redundant_ensemble(n, f, &x_star, 1, HessianSpec::identity()).unwrap(),
        faulty_ids: (n - f..n).collect(),
        adversary: corner_collusion(&cube),
        schedule: StepSchedule::harmonic(1.0).unwrap(),
        horizon,
        seed: 1,
        init: Init::Uniform,
        record_every: None,
    }
}

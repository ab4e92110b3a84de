//! Agent behaviour for one synchronous round: the honest update rule, the
//! Byzantine message generators, and step-size schedules.

use rand::Rng;

use crate::cost::{LocalCost, QuadraticCost};
use crate::error::{Error, Result};
use crate::filters::{cge, fuse_points, project_box};
use crate::point::{Hypercube, Point};
use crate::rng::{substream, Purpose};

/// Largest coordinate magnitude a message may carry.
pub const ADMISSION_BOUND: f64 = 1e12;

/// Estimate and gradient sent from one agent to another in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMessage {
    pub estimate: Point,
    pub grad: Point,
}

impl RoundMessage {
    /// Admission gate: both vectors finite, of dimension `d`, and bounded
    /// by [`ADMISSION_BOUND`] in every coordinate.
    pub fn admit(estimate: Vec<f64>, grad: Vec<f64>, d: usize) -> std::result::Result<Self, String> {
        for (what, v) in [("estimate", &estimate), ("gradient", &grad)] {
            if v.len() != d {
                return Err(format!("{what} has dimension {}, expected {d}", v.len()));
            }
            if let Some(c) = v.iter().find(|c| !c.is_finite() || c.abs() > ADMISSION_BOUND) {
                return Err(format!(
                    "{what} coordinate {c:e} exceeds the admission bound {ADMISSION_BOUND:e}"
                ));
            }
        }
        Ok(RoundMessage {
            estimate: Point::from_vec_unchecked(estimate),
            grad: Point::from_vec_unchecked(grad),
        })
    }
}

/// An honest agent's state at the start of a round.
#[derive(Debug, Clone)]
pub struct HonestAgentState<'a> {
    pub id: usize,
    pub estimate: Point,
    pub cost: &'a QuadraticCost,
}

/// The `n - 1` messages an agent received in one round, ordered by sender.
#[derive(Debug, Clone, Default)]
pub struct Inbox {
    entries: Vec<(usize, RoundMessage)>,
}

impl Inbox {
    pub fn new(mut entries: Vec<(usize, RoundMessage)>) -> Self {
        entries.sort_by_key(|(sender, _)| *sender);
        Inbox { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, RoundMessage)] {
        &self.entries
    }

    /// Checks that senders are exactly `{0..n} \ {receiver}` with
    /// `n = len + 1`, and that every message has dimension `d`.
    fn validate(&self, receiver: usize, d: usize) -> std::result::Result<(), String> {
        let n = self.entries.len() + 1;
        if receiver >= n {
            return Err(format!(
                "inbox holds {} messages, too few for receiver id {receiver}",
                self.entries.len()
            ));
        }
        let expected = (0..n).filter(|&j| j != receiver);
        for ((sender, msg), want) in self.entries.iter().zip(expected) {
            if *sender != want {
                return Err(format!(
                    "expected a message from agent {want}, found sender {sender}"
                ));
            }
            if msg.estimate.dim() != d || msg.grad.dim() != d {
                return Err(format!("message from agent {sender} has the wrong dimension"));
            }
        }
        Ok(())
    }
}

/// Intermediate values of one honest update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Trimmed-mean fusion of the received estimates with the agent's own.
    pub fused: Point,
    /// CGE over all `n` gradients, the agent's own included.
    pub filtered_gradient: Point,
    /// `project_box(fused - eta * filtered_gradient)`.
    pub next: Point,
}

/// One honest update, returning the fused estimate and filtered gradient as
/// well as the new estimate.
pub fn honest_step_detailed(
    state: &HonestAgentState<'_>,
    inbox: &Inbox,
    round: usize,
    eta: f64,
    f: usize,
    cube: &Hypercube,
) -> Result<StepOutcome> {
    let protocol_err = |reason: String| Error::Protocol {
        round,
        agent: state.id,
        reason,
    };
    let d = cube.dim();
    state.estimate.ensure_dim(d)?;
    inbox.validate(state.id, d).map_err(protocol_err)?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::usage(format!("step size must be positive, got {eta}")));
    }

    let received: Vec<&Point> = inbox.entries.iter().map(|(_, m)| &m.estimate).collect();
    let fused = fuse_points(&state.estimate, &received, f)
        .map_err(|e| protocol_err(format!("estimate fusion failed: {e}")))?;

    let own_grad = state.cost.gradient(&state.estimate)?;
    let mut gradients = Vec::with_capacity(inbox.len() + 1);
    let mut others = inbox.entries.iter();
    for j in 0..=inbox.len() {
        if j == state.id {
            gradients.push(own_grad.clone());
        } else {
            let (_, msg) = others.next().expect("validated inbox");
            gradients.push(msg.grad.clone());
        }
    }
    let filtered_gradient = cge(&gradients, f)
        .map_err(|e| protocol_err(format!("gradient elimination failed: {e}")))?;

    let stepped = Point::checked(
        fused
            .coords()
            .iter()
            .zip(filtered_gradient.coords())
            .map(|(z, h)| z - eta * h)
            .collect(),
        "update step",
    )?;
    let next = project_box(&stepped, cube)?;
    Ok(StepOutcome {
        fused,
        filtered_gradient,
        next,
    })
}

/// One honest update: fuse estimates, filter gradients, step and project.
pub fn honest_step(
    state: &HonestAgentState<'_>,
    inbox: &Inbox,
    round: usize,
    eta: f64,
    f: usize,
    cube: &Hypercube,
) -> Result<Point> {
    honest_step_detailed(state, inbox, round, eta, f, cube).map(|o| o.next)
}

/// Step sizes `eta_t = eta0 / (t + 1)^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `p = 1`.
    Harmonic { eta0: f64 },
    /// `p` in `(0.5, 1]`.
    Polynomial { eta0: f64, exponent: f64 },
}

impl StepSchedule {
    pub fn harmonic(eta0: f64) -> Result<Self> {
        let s = StepSchedule::Harmonic { eta0 };
        s.validate()?;
        Ok(s)
    }

    pub fn polynomial(eta0: f64, exponent: f64) -> Result<Self> {
        let s = StepSchedule::Polynomial { eta0, exponent };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let eta0 = match *self {
            StepSchedule::Harmonic { eta0 } => eta0,
            StepSchedule::Polynomial { eta0, exponent } => {
                if !(exponent > 0.5 && exponent <= 1.0) {
                    return Err(Error::usage(format!(
                        "step-size exponent must lie in (0.5, 1], got {exponent}"
                    )));
                }
                eta0
            }
        };
        if !(eta0.is_finite() && eta0 > 0.0) {
            return Err(Error::usage(format!(
                "initial step size must be positive and finite, got {eta0}"
            )));
        }
        Ok(())
    }

    pub fn eta(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Harmonic { eta0 } => eta0 / (t as f64 + 1.0),
            StepSchedule::Polynomial { eta0, exponent } => eta0 / (t as f64 + 1.0).powf(exponent),
        }
    }
}

/// How the colluding strategy picks the estimates it sends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    /// Every receiver sees the target point.
    Consistent,
    /// Every receiver sees an independent uniform point of the box.
    RandomInBox,
}

/// Byzantine behaviour shared by all faulty agents of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum AdversaryStrategy {
    /// Honest mean estimate, negated honest mean gradient.
    SignFlip,
    /// Honest mean estimate, honest mean gradient times `scale`.
    NormInflate { scale: f64 },
    /// Estimate at the box face farthest from the honest median in each
    /// coordinate; zero gradient.
    CoordExtreme,
    /// Uniform estimate in the box, gradient uniform in `[-zeta, zeta]^d`.
    RandomInBox,
    /// Push every receiver toward `target`: gradient along
    /// `honest_mean - target` with norm `zeta`.
    ColludeTarget { target: Point, estimates: EstimateMode },
}

impl AdversaryStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            AdversaryStrategy::SignFlip => "sign_flip",
            AdversaryStrategy::NormInflate { .. } => "norm_inflate",
            AdversaryStrategy::CoordExtreme => "coord_extreme",
            AdversaryStrategy::RandomInBox => "random_in_box",
            AdversaryStrategy::ColludeTarget { .. } => "collude_target",
        }
    }
}

/// What faulty agents see before emitting round-`t` messages: every honest
/// estimate and gradient of that round.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub honest_estimates: &'a [Point],
    pub honest_gradients: &'a [Point],
    pub cube: Hypercube,
    pub zeta: f64,
}

impl Observation<'_> {
    fn mean(points: &[Point], d: usize) -> Vec<f64> {
        let mut acc = vec![0.0; d];
        for p in points {
            for (a, c) in acc.iter_mut().zip(p.coords()) {
                *a += c;
            }
        }
        let n = points.len().max(1) as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    pub fn mean_estimate(&self) -> Vec<f64> {
        Self::mean(self.honest_estimates, self.cube.dim())
    }

    pub fn mean_gradient(&self) -> Vec<f64> {
        Self::mean(self.honest_gradients, self.cube.dim())
    }

    pub fn median_estimate(&self) -> Vec<f64> {
        (0..self.cube.dim())
            .map(|k| {
                let mut col: Vec<f64> = self.honest_estimates.iter().map(|x| x[k]).collect();
                col.sort_by(f64::total_cmp);
                let m = col.len();
                if m == 0 {
                    0.0
                } else if m % 2 == 1 {
                    col[m / 2]
                } else {
                    0.5 * (col[m / 2 - 1] + col[m / 2])
                }
            })
            .collect()
    }
}

/// A strategy plus the seed of its randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct Adversary {
    pub strategy: AdversaryStrategy,
    pub seed: u64,
}

impl Adversary {
    pub fn new(strategy: AdversaryStrategy, seed: u64) -> Self {
        Adversary { strategy, seed }
    }

    /// Raw (estimate, gradient) that `sender` sends to `receiver` in `round`.
    /// Randomness comes from a stream keyed by `(round, sender, receiver)`,
    /// so replays are exact.
    pub fn propose(
        &self,
        round: usize,
        sender: usize,
        receiver: usize,
        obs: &Observation<'_>,
    ) -> (Vec<f64>, Vec<f64>) {
        let d = obs.cube.dim();
        let xi = obs.cube.xi();
        let rng = || {
            substream(
                self.seed,
                Purpose::Adversary,
                round as u64,
                sender as u64,
                receiver as u64,
            )
        };
        match &self.strategy {
            AdversaryStrategy::SignFlip => (
                obs.mean_estimate(),
                obs.mean_gradient().into_iter().map(|g| -g).collect(),
            ),
            AdversaryStrategy::NormInflate { scale } => (
                obs.mean_estimate(),
                obs.mean_gradient().into_iter().map(|g| g * scale).collect(),
            ),
            AdversaryStrategy::CoordExtreme => (
                obs.median_estimate()
                    .into_iter()
                    .map(|m| if m >= 0.0 { -xi } else { xi })
                    .collect(),
                vec![0.0; d],
            ),
            AdversaryStrategy::RandomInBox => {
                let mut r = rng();
                let est = (0..d).map(|_| r.random_range(-xi..=xi)).collect();
                let z = obs.zeta;
                let grad = (0..d).map(|_| r.random_range(-z..=z)).collect();
                (est, grad)
            }
            AdversaryStrategy::ColludeTarget { target, estimates } => {
                let mean = obs.mean_estimate();
                let dir: Vec<f64> = mean.iter().zip(target.coords()).map(|(m, p)| m - p).collect();
                let norm = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
                let grad = if norm > 0.0 {
                    dir.iter().map(|c| c / norm * obs.zeta).collect()
                } else {
                    vec![0.0; d]
                };
                let est = match estimates {
                    EstimateMode::Consistent => target.coords().to_vec(),
                    EstimateMode::RandomInBox => {
                        let mut r = rng();
                        (0..d).map(|_| r.random_range(-xi..=xi)).collect()
                    }
                };
                (est, grad)
            }
        }
    }

    /// [`Adversary::propose`] followed by the admission gate.
    pub fn emit(
        &self,
        round: usize,
        sender: usize,
        receiver: usize,
        obs: &Observation<'_>,
    ) -> Result<RoundMessage> {
        let (est, grad) = self.propose(round, sender, receiver, obs);
        RoundMessage::admit(est, grad, obs.cube.dim()).map_err(|reason| Error::Numeric {
            round,
            reason: format!("message from faulty agent {sender} to agent {receiver}: {reason}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::QuadraticCost;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn msg(est: &[f64], grad: &[f64]) -> RoundMessage {
        RoundMessage {
            estimate: p(est),
            grad: p(grad),
        }
    }

    #[test]
    fn schedule_examples() {
        let h = StepSchedule::harmonic(1.0).unwrap();
        assert_eq!(h.eta(0), 1.0);
        assert_eq!(h.eta(9), 0.1);
        let poly = StepSchedule::polynomial(2.0, 0.75).unwrap();
        assert!((poly.eta(15) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn schedule_validation() {
        assert!(StepSchedule::harmonic(0.0).is_err());
        assert!(StepSchedule::harmonic(f64::NAN).is_err());
        assert!(StepSchedule::polynomial(1.0, 0.5).is_err());
        assert!(StepSchedule::polynomial(1.0, 1.01).is_err());
        assert!(StepSchedule::polynomial(1.0, 1.0).is_ok());
    }

    #[test]
    fn schedules_are_non_increasing() {
        for s in [
            StepSchedule::harmonic(3.0).unwrap(),
            StepSchedule::polynomial(0.5, 0.51).unwrap(),
            StepSchedule::polynomial(2.0, 0.75).unwrap(),
        ] {
            let mut t = 0usize;
            while t < 1_000_000 {
                assert!(s.eta(t + 1) <= s.eta(t), "{s:?} at {t}");
                t = t * 3 + 1;
            }
        }
    }

    #[test]
    fn fixed_point_when_everyone_sits_at_the_minimizer() {
        let c = p(&[0.5, -0.5]);
        let cost = QuadraticCost::centered(vec![1.0, 0.0, 0.0, 1.0], &c).unwrap();
        let state = HonestAgentState {
            id: 0,
            estimate: c.clone(),
            cost: &cost,
        };
        let inbox = Inbox::new((1..4).map(|j| (j, msg(&[0.5, -0.5], &[0.0, 0.0]))).collect());
        let cube = Hypercube::new(1.0, 2).unwrap();
        assert_eq!(honest_step(&state, &inbox, 0, 1.0, 0, &cube).unwrap(), c);
    }

    #[test]
    fn trimmed_fusion_with_zero_gradients() {
        let cost = QuadraticCost::new(vec![0.0], p(&[0.0]), 0.0).unwrap();
        let state = HonestAgentState {
            id: 0,
            estimate: p(&[0.0]),
            cost: &cost,
        };
        let inbox = Inbox::new(vec![
            (3, msg(&[100.0], &[0.0])),
            (1, msg(&[1.0], &[0.0])),
            (2, msg(&[2.0], &[0.0])),
        ]);
        let cube = Hypercube::new(10.0, 1).unwrap();
        assert_eq!(honest_step(&state, &inbox, 0, 0.5, 1, &cube).unwrap(), p(&[1.0]));
    }

    #[test]
    fn malformed_inbox_is_a_protocol_error() {
        let cost = QuadraticCost::new(vec![1.0], p(&[0.0]), 0.0).unwrap();
        let state = HonestAgentState {
            id: 1,
            estimate: p(&[0.0]),
            cost: &cost,
        };
        let cube = Hypercube::new(1.0, 1).unwrap();
        // message from itself instead of agent 0
        let inbox = Inbox::new(vec![(1, msg(&[0.0], &[0.0])), (2, msg(&[0.0], &[0.0]))]);
        match honest_step(&state, &inbox, 7, 0.1, 0, &cube) {
            Err(Error::Protocol { round: 7, agent: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        // wrong dimension
        let inbox = Inbox::new(vec![(0, msg(&[0.0, 1.0], &[0.0, 0.0])), (2, msg(&[0.0], &[0.0]))]);
        assert!(matches!(
            honest_step(&state, &inbox, 0, 0.1, 0, &cube),
            Err(Error::Protocol { .. })
        ));
        // too few messages for trimming
        let inbox = Inbox::new(vec![(0, msg(&[0.0], &[0.0])), (2, msg(&[0.0], &[0.0]))]);
        assert!(matches!(
            honest_step(&state, &inbox, 0, 0.1, 1, &cube),
            Err(Error::Protocol { .. })
        ));
    }

    #[test]
    fn admission_gate() {
        assert!(RoundMessage::admit(vec![1e12], vec![-1e12], 1).is_ok());
        assert!(RoundMessage::admit(vec![1.1e12], vec![0.0], 1).is_err());
        assert!(RoundMessage::admit(vec![0.0], vec![f64::NAN], 1).is_err());
        assert!(RoundMessage::admit(vec![0.0, 0.0], vec![0.0], 2).is_err());
    }

    fn observation<'a>(est: &'a [Point], grads: &'a [Point], xi: f64, zeta: f64) -> Observation<'a> {
        Observation {
            honest_estimates: est,
            honest_gradients: grads,
            cube: Hypercube::new(xi, est[0].dim()).unwrap(),
            zeta,
        }
    }

    #[test]
    fn sign_flip_and_norm_inflate() {
        let est = [p(&[0.0, 0.0]), p(&[2.0, 2.0])];
        let grads = [p(&[1.0, -2.0]), p(&[1.0, -2.0])];
        let obs = observation(&est, &grads, 5.0, 10.0);

        let m = Adversary::new(AdversaryStrategy::SignFlip, 0).emit(0, 3, 0, &obs).unwrap();
        assert_eq!(m.grad, p(&[-1.0, 2.0]));
        assert_eq!(m.estimate, p(&[1.0, 1.0]));

        let unit = [p(&[0.6, 0.8]), p(&[0.6, 0.8])];
        let obs = observation(&est, &unit, 5.0, 10.0);
        let m = Adversary::new(AdversaryStrategy::NormInflate { scale: 10.0 }, 0)
            .emit(0, 3, 0, &obs)
            .unwrap();
        assert!((m.grad.norm() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn coord_extreme_goes_opposite_the_median() {
        let est = [p(&[0.5, -1.0]), p(&[1.0, -0.5]), p(&[2.0, -3.0])];
        let grads = vec![Point::zeros(2); 3];
        let obs = observation(&est, &grads, 4.0, 1.0);
        let m = Adversary::new(AdversaryStrategy::CoordExtreme, 0).emit(2, 3, 1, &obs).unwrap();
        assert_eq!(m.estimate, p(&[-4.0, 4.0]));
        assert_eq!(m.grad, Point::zeros(2));
    }

    #[test]
    fn random_in_box_replays_exactly() {
        let est = [p(&[0.0, 0.0, 0.0])];
        let grads = [p(&[0.0, 0.0, 0.0])];
        let obs = observation(&est, &grads, 2.0, 3.0);
        let a = Adversary::new(AdversaryStrategy::RandomInBox, 17);
        let b = Adversary::new(AdversaryStrategy::RandomInBox, 17);
        let m1 = a.emit(5, 4, 1, &obs).unwrap();
        let m2 = b.emit(5, 4, 1, &obs).unwrap();
        assert_eq!(m1, m2);
        assert!(obs.cube.contains(&m1.estimate));
        assert!(m1.grad.coords().iter().all(|g| g.abs() <= 3.0));
        let other = a.emit(5, 4, 2, &obs).unwrap();
        assert_ne!(m1, other);
    }

    #[test]
    fn collude_target_pushes_toward_target() {
        let est = [p(&[0.0, 0.0]), p(&[0.0, 0.0])];
        let grads = vec![Point::zeros(2); 2];
        let obs = observation(&est, &grads, 10.0, 5.0);
        let target = p(&[10.0, 10.0]);
        let adv = Adversary::new(
            AdversaryStrategy::ColludeTarget {
                target: target.clone(),
                estimates: EstimateMode::Consistent,
            },
            1,
        );
        let m = adv.emit(0, 2, 0, &obs).unwrap();
        assert_eq!(m.estimate, target);
        assert!((m.grad.norm() - 5.0).abs() < 1e-12);
        // a descent step along -grad moves toward the target
        assert!(m.grad[0] < 0.0 && m.grad[1] < 0.0);

        let adv = Adversary::new(
            AdversaryStrategy::ColludeTarget {
                target,
                estimates: EstimateMode::RandomInBox,
            },
            1,
        );
        let a = adv.emit(0, 2, 0, &obs).unwrap();
        let b = adv.emit(0, 2, 1, &obs).unwrap();
        assert_ne!(a.estimate, b.estimate);
        assert_eq!(a.grad, b.grad);
    }

    #[test]
    fn oversized_adversarial_message_aborts_with_round() {
        let est = [p(&[1.0])];
        let grads = [p(&[1.0])];
        let obs = observation(&est, &grads, 1.0, 1.0);
        let adv = Adversary::new(AdversaryStrategy::NormInflate { scale: 1e13 }, 0);
        match adv.emit(42, 1, 0, &obs) {
            Err(Error::Numeric { round: 42, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}

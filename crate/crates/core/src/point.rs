//! Finite real vectors and the search hypercube `[-xi, xi]^d`.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// A d-dimensional vector whose coordinates are all finite.
///
/// Estimates, gradients, messages and the reference solution are all carried
/// as `Point`s.
#[derive(Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::usage("a point needs at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Point(coords))
    }

    pub fn zeros(d: usize) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        Point(vec![0.0; d])
    }

    /// Builds a point from coordinates already known to be finite. Callers in
    /// this crate use it only on outputs of finite arithmetic that has been
    /// range-checked.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Point(coords)
    }

    /// Re-validates the finiteness invariant after arithmetic that may overflow.
    pub(crate) fn checked(coords: Vec<f64>, what: &'static str) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(what));
        }
        Ok(Point(coords))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn ensure_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

/// The box `[-xi, xi]^d` that confines every honest estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypercube {
    xi: f64,
    dim: usize,
}

impl Hypercube {
    pub fn new(xi: f64, dim: usize) -> Result<Self> {
        if !(xi.is_finite() && xi > 0.0) {
            return Err(Error::usage(format!(
                "hypercube half-width must be positive and finite, got {xi}"
            )));
        }
        if dim == 0 {
            return Err(Error::usage("hypercube dimension must be at least 1"));
        }
        Ok(Hypercube { xi, dim })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.dim() == self.dim && x.coords().iter().all(|c| c.abs() <= self.xi)
    }

    /// Iterates over the `2^d` vertices. Vertex `m` has coordinate `k` at
    /// `+xi` when bit `k` of `m` is set.
    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        assert!(self.dim < 64, "vertex enumeration needs d < 64");
        (0u64..(1u64 << self.dim)).map(move |mask| {
            Point::from_vec_unchecked(
                (0..self.dim)
                    .map(|k| if mask >> k & 1 == 1 { self.xi } else { -self.xi })
                    .collect(),
            )
        })
    }
}

//! Numerical primitives of the update rule: box projection, coordinate
//! trimming, comparative gradient elimination (CGE) and trimmed-mean fusion.
//!
//! Everything here is a pure function. Inputs must be finite; non-finite
//! values are rejected instead of being sanitized.

use crate::error::{Error, Result};
use crate::point::{Hypercube, Point};

/// Clamps every coordinate of `x` into `[-xi, xi]`.
pub fn project_box(x: &Point, cube: &Hypercube) -> Result<Point> {
    x.ensure_dim(cube.dim())?;
    let xi = cube.xi();
    Ok(Point::from_vec_unchecked(
        x.coords().iter().map(|&c| c.clamp(-xi, xi)).collect(),
    ))
}

fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

/// Drops the `f` smallest and `f` largest values and returns the rest in
/// ascending order. Duplicates are kept.
pub fn trim(values: &[f64], f: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if n <= 2 * f {
        return Err(Error::usage(format!(
            "trimming {f} from each side needs more than {} values, got {n}",
            2 * f
        )));
    }
    ensure_finite(values, "trim input")?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[f..n - f].to_vec())
}

/// Arithmetic mean.
pub fn avg(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::usage("average of an empty sequence"));
    }
    ensure_finite(values, "average input")?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Comparative gradient elimination: sorts `vectors` by Euclidean norm
/// (stable, so equal norms keep input order), discards the `f` largest and
/// returns the sum of the remaining `n - f`, accumulated in sorted order.
pub fn cge(vectors: &[Point], f: usize) -> Result<Point> {
    let n = vectors.len();
    if n <= f {
        return Err(Error::usage(format!(
            "gradient elimination of {f} vectors needs more than {f} inputs, got {n}"
        )));
    }
    let d = vectors[0].dim();
    for v in vectors {
        v.ensure_dim(d)?;
    }

    let mut order: Vec<(f64, usize)> = vectors.iter().map(|v| v.norm()).zip(0..).collect();
    if order.iter().any(|(norm, _)| !norm.is_finite()) {
        return Err(Error::NonFinite("gradient norm"));
    }
    // slice::sort_by is stable; ties stay in input order
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut acc = vec![0.0; d];
    for &(_, idx) in &order[..n - f] {
        for (a, c) in acc.iter_mut().zip(vectors[idx].coords()) {
            *a += c;
        }
    }
    Point::checked(acc, "gradient elimination sum")
}

/// Scalar body of the trimmed-mean fusion: the average of `own` together with
/// the trimmed received values.
///
/// With `f = 0` and no received values (a single-agent system) this is `own`.
pub fn fuse_estimates(own: f64, received: &[f64], f: usize) -> Result<f64> {
    if !own.is_finite() {
        return Err(Error::NonFinite("own estimate"));
    }
    if received.is_empty() && f == 0 {
        return Ok(own);
    }
    let kept = trim(received, f)?;
    let sum = kept.iter().fold(own, |acc, v| acc + v);
    Ok(sum / (kept.len() + 1) as f64)
}

/// Applies [`fuse_estimates`] to each coordinate.
pub fn fuse_points(own: &Point, received: &[&Point], f: usize) -> Result<Point> {
    let d = own.dim();
    for r in received {
        r.ensure_dim(d)?;
    }
    let mut column = Vec::with_capacity(received.len());
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        column.clear();
        column.extend(received.iter().map(|r| r[k]));
        out.push(fuse_estimates(own[k], &column, f)?);
    }
    Ok(Point::from_vec_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn project_box_examples() {
        let cube = Hypercube::new(1.0, 2).unwrap();
        assert_eq!(project_box(&p(&[1.5, -0.2]), &cube).unwrap(), p(&[1.0, -0.2]));

        let cube = Hypercube::new(5.0, 3).unwrap();
        assert_eq!(project_box(&p(&[0.0, 0.0, 0.0]), &cube).unwrap(), p(&[0.0, 0.0, 0.0]));

        let cube = Hypercube::new(2.0, 3).unwrap();
        assert_eq!(
            project_box(&p(&[-3.7, 2.2, 0.5]), &cube).unwrap(),
            p(&[-2.0, 2.0, 0.5])
        );
    }

    #[test]
    fn project_box_dimension_mismatch() {
        let cube = Hypercube::new(1.0, 3).unwrap();
        assert_eq!(
            project_box(&p(&[0.0, 0.0]), &cube),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn trim_examples() {
        assert_eq!(trim(&[5.0, 1.0, 3.0, 2.0, 4.0], 1).unwrap(), vec![2.0, 3.0, 4.0]);
        assert_eq!(trim(&[7.0], 0).unwrap(), vec![7.0]);
    }

    #[test]
    fn trim_with_duplicates_matches_sort_and_slice() {
        let input = [1.0, 1.0, 9.0, 1.0, 1.0, -9.0, 1.0];
        // oracle: insertion sort then slice ranks f+1..n-f
        let mut oracle = Vec::new();
        for &v in &input {
            let pos = oracle.iter().position(|&o| o > v).unwrap_or(oracle.len());
            oracle.insert(pos, v);
        }
        let expected = oracle[2..5].to_vec();
        assert_eq!(expected, vec![1.0, 1.0, 1.0]);
        assert_eq!(trim(&input, 2).unwrap(), expected);
    }

    #[test]
    fn trim_errors() {
        assert!(matches!(trim(&[1.0, 2.0], 1), Err(Error::Usage(_))));
        assert!(matches!(trim(&[], 0), Err(Error::Usage(_))));
        assert_eq!(
            trim(&[1.0, f64::NAN, 2.0], 1),
            Err(Error::NonFinite("trim input"))
        );
    }

    #[test]
    fn avg_examples() {
        assert_eq!(avg(&[2.0, 4.0]).unwrap(), 3.0);
        assert_eq!(avg(&[1.25]).unwrap(), 1.25);
        assert_eq!(avg(&[-1.0, 0.0, 1.0]).unwrap(), 0.0);
        assert!(avg(&[]).is_err());
    }

    #[test]
    fn cge_examples() {
        let v = [p(&[1.0, 0.0]), p(&[0.0, 2.0]), p(&[3.0, 0.0])];
        assert_eq!(cge(&v, 1).unwrap(), p(&[1.0, 2.0]));
        assert_eq!(cge(&v, 0).unwrap(), p(&[4.0, 2.0]));

        let ties = [p(&[1.0, 0.0]), p(&[0.0, 1.0]), p(&[0.0, -1.0])];
        assert_eq!(cge(&ties, 1).unwrap(), p(&[1.0, 1.0]));
    }

    #[test]
    fn cge_errors() {
        let v = [p(&[1.0]), p(&[2.0])];
        assert!(matches!(cge(&v, 2), Err(Error::Usage(_))));
        let mixed = [p(&[1.0]), p(&[2.0, 1.0])];
        assert!(matches!(cge(&mixed, 0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn fuse_examples() {
        assert_eq!(fuse_estimates(0.0, &[1.0, 2.0, 100.0], 1).unwrap(), 1.0);
        assert_eq!(fuse_estimates(0.0, &[-5.0, 1.0, 3.0, 7.0, 50.0], 2).unwrap(), 1.5);
        assert_eq!(fuse_estimates(2.5, &[2.5; 7], 3).unwrap(), 2.5);
        assert_eq!(fuse_estimates(4.0, &[], 0).unwrap(), 4.0);
    }

    #[test]
    fn fuse_propagates_trim_errors() {
        assert!(matches!(fuse_estimates(0.0, &[1.0, 2.0], 1), Err(Error::Usage(_))));
        assert!(matches!(fuse_estimates(0.0, &[], 1), Err(Error::Usage(_))));
    }

    #[test]
    fn fuse_points_is_coordinatewise() {
        let own = p(&[0.0, 10.0]);
        let a = p(&[1.0, 10.0]);
        let b = p(&[2.0, 10.0]);
        let c = p(&[100.0, -1e9]);
        let z = fuse_points(&own, &[&a, &b, &c], 1).unwrap();
        assert_eq!(z, p(&[1.0, 10.0]));
    }
}

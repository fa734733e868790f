//! Affine hyperplanes `a·z = b`, affine hulls and plane/box incidence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AffinePlane<T> {
    pub normal: Vec<T>,
    pub offset: T,
}

impl<T: Scalar> AffinePlane<T> {
    pub fn new(normal: Vec<T>, offset: T) -> Result<Self> {
        if normal.iter().all(|a| a.near_zero()) {
            return Err(Error::InvalidInput("plane normal must be non-zero".into()));
        }
        Ok(Self { normal, offset })
    }

    /// The coordinate hyperplane `x_i = c` (0-based axis).
    pub fn axis(d: usize, i: usize, c: T) -> Self {
        let mut normal = vec![T::zero(); d];
        normal[i] = T::one();
        Self { normal, offset: c }
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `a·z − b`.
    pub fn residual(&self, z: &[T]) -> T {
        dot(&self.normal, z) - self.offset.clone()
    }

    pub fn contains(&self, z: &[T]) -> bool {
        self.residual(z).near_zero()
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Does the closed axis box `{x : |x_i − c_i| <= r_i}` meet the plane?
///
/// The affine function `a·x − b` ranges over `a·c − b ± Σ|a_i| r_i` on the
/// box, so the box meets the plane iff `|a·c − b| <= Σ|a_i| r_i`.
pub fn plane_meets_box<T: Scalar>(plane: &AffinePlane<T>, center: &[T], radii: &[T]) -> bool {
    let reach = plane.normal.iter().zip(radii).fold(T::zero(), |acc, (a, r)| acc + a.abs() * r.clone());
    plane.residual(center).abs() <= reach + T::tolerance()
}

/// Row-reduces `rows` in place; returns the pivot column of each pivot row.
fn rref<T: Scalar>(rows: &mut Vec<Vec<T>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        // largest magnitude pivot (for floats); any non-zero works exactly
        let mut best: Option<usize> = None;
        for (i, row) in rows.iter().enumerate().skip(r) {
            if !row[c].near_zero() && best.map_or(true, |b| row[c].abs() > rows[b][c].abs()) {
                best = Some(i);
                if T::EXACT {
                    break;
                }
            }
        }
        let Some(p) = best else { continue };
        rows.swap(r, p);
        let inv = T::one() / rows[r][c].clone();
        for x in rows[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].near_zero() {
                let f = rows[i][c].clone();
                for j in 0..ncols {
                    let v = rows[r][j].clone() * f.clone();
                    rows[i][j] = rows[i][j].clone() - v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

/// Rank of a set of vectors (exact for rationals, tolerance-based for floats).
pub fn rank<T: Scalar>(vectors: &[Vec<T>]) -> usize {
    let Some(first) = vectors.first() else { return 0 };
    let mut rows = vectors.to_vec();
    rref(&mut rows, first.len()).len()
}

/// Affine rank of `points` in dimension `d` and, if the rank is at most
/// `d − 1`, a hyperplane through all of them.
///
/// The normal is the null-space vector of the difference matrix attached to
/// its first free column (that coordinate set to 1), scaled so the first
/// non-zero entry is 1. With no constraints this is `x_1 = 0`.
pub fn affine_hull<T: Scalar>(points: &[Vec<T>], d: usize) -> Result<(usize, Option<AffinePlane<T>>)> {
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: p.len() });
    }
    let diffs: Vec<Vec<T>> = match points.split_first() {
        None => Vec::new(),
        Some((p0, rest)) => rest
            .iter()
            .map(|p| p.iter().zip(p0).map(|(a, b)| a.clone() - b.clone()).collect())
            .collect(),
    };
    let mut rows = diffs;
    let pivots = rref(&mut rows, d);
    let r = pivots.len();
    if r >= d {
        return Ok((r, None));
    }
    let free = (0..d).find(|c| !pivots.contains(c)).expect("rank < d leaves a free column");
    let mut normal = vec![T::zero(); d];
    normal[free] = T::one();
    for (row, &pc) in rows.iter().zip(&pivots) {
        normal[pc] = T::zero() - row[free].clone();
    }
    let lead = normal.iter().find(|a| !a.near_zero()).cloned().expect("free column is non-zero");
    for a in normal.iter_mut() {
        *a = a.clone() / lead.clone();
    }
    let offset = points.first().map_or_else(T::zero, |p0| dot(&normal, p0));
    Ok((r, Some(AffinePlane { normal, offset })))
}

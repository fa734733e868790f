//! Axis-parallel boxes and their grid subdivisions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Axis-parallel box `Π [lo_i, hi_i]` with `lo_i < hi_i`.
///
/// Whether faces are included is up to the caller: the construction treats
/// boxes as half-open `[lo, hi)` for disjointness and counting, and as closed
/// for "is there a point of the box such that ..." tests.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AxisBox<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Corner {
    Lower,
    Upper,
}

impl<T: Scalar> AxisBox<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if let Some(i) = lo.iter().zip(&hi).position(|(a, b)| a >= b) {
            return Err(Error::InvalidInput(format!("box is empty along axis {}: {} >= {}", i + 1, lo[i], hi[i])));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit(d: usize) -> Self {
        Self { lo: vec![T::zero(); d], hi: vec![T::one(); d] }
    }

    pub fn from_center(center: &[T], radii: &[T]) -> Result<Self> {
        let lo = center.iter().zip(radii).map(|(c, r)| c.clone() - r.clone()).collect();
        let hi = center.iter().zip(radii).map(|(c, r)| c.clone() + r.clone()).collect();
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn side(&self, i: usize) -> T {
        self.hi[i].clone() - self.lo[i].clone()
    }

    pub fn sides(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.side(i)).collect()
    }

    pub fn center(&self) -> Vec<T> {
        let two = T::one() + T::one();
        self.lo.iter().zip(&self.hi).map(|(a, b)| (a.clone() + b.clone()) / two.clone()).collect()
    }

    pub fn half_sides(&self) -> Vec<T> {
        let two = T::one() + T::one();
        self.sides().into_iter().map(|s| s / two.clone()).collect()
    }

    pub fn volume(&self) -> T {
        self.sides().into_iter().fold(T::one(), |a, b| a * b)
    }

    pub fn contains_closed(&self, x: &[T]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| a <= x && x <= b)
    }

    pub fn contains_half_open(&self, x: &[T]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| a <= x && x < b)
    }

    /// `other ⊆ self` (as closed sets, equivalently as half-open ones).
    pub fn contains_box(&self, other: &AxisBox<T>) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// Closed boxes meet (touching faces count).
    pub fn meets_closed(&self, other: &AxisBox<T>) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.hi[i] && other.lo[i] <= self.hi[i])
    }

    /// Half-open boxes meet, i.e. the overlap has positive volume.
    pub fn meets_half_open(&self, other: &AxisBox<T>) -> bool {
        (0..self.dim()).all(|i| self.lo[i] < other.hi[i] && other.lo[i] < self.hi[i])
    }

    /// All `2^d` corners, axis 0 varying slowest.
    pub fn corners(&self) -> Vec<Vec<T>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|i| if mask >> (d - 1 - i) & 1 == 1 { self.hi[i].clone() } else { self.lo[i].clone() })
                    .collect()
            })
            .collect()
    }

    /// Per-axis pieces of a subdivision: `(full intervals, optional remainder)`.
    fn axis_pieces(&self, i: usize, side: &T, anchor: Corner) -> (Vec<(T, T)>, Option<(T, T)>) {
        let len = self.side(i);
        let m = (len.clone() / side.clone()).floor();
        let count = m.to_usize().expect("subdivision count fits usize");
        let covered = m * side.clone();
        match anchor {
            Corner::Lower => {
                let mut full = Vec::with_capacity(count);
                let mut a = self.lo[i].clone();
                for _ in 0..count {
                    let b = a.clone() + side.clone();
                    full.push((a, b.clone()));
                    a = b;
                }
                let cut = self.lo[i].clone() + covered;
                let rem = (cut < self.hi[i]).then(|| (cut, self.hi[i].clone()));
                (full, rem)
            }
            Corner::Upper => {
                let mut full = Vec::with_capacity(count);
                let mut b = self.hi[i].clone();
                for _ in 0..count {
                    let a = b.clone() - side.clone();
                    full.push((a.clone(), b));
                    b = a;
                }
                full.reverse();
                let cut = self.hi[i].clone() - covered;
                let rem = (self.lo[i] < cut).then(|| (self.lo[i].clone(), cut));
                (full, rem)
            }
        }
    }

    /// Subdivides into boxes of the given side lengths, starting from `anchor`.
    ///
    /// `full` holds the boxes with exactly the requested sides; `remainder`
    /// holds the boxes that touch the leftover strip on at least one axis.
    /// Both lists are sorted lexicographically by lower corner.
    pub fn subdivide(&self, side: &[T], anchor: Corner) -> Result<(Vec<AxisBox<T>>, Vec<AxisBox<T>>)> {
        if side.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: side.len() });
        }
        for (i, s) in side.iter().enumerate() {
            if *s <= T::zero() {
                return Err(Error::InvalidInput(format!("subdivision side {} along axis {} must be positive", s, i + 1)));
            }
            if *s > self.side(i) {
                return Err(Error::InvalidInput(format!("subdivision side {} exceeds box side {} along axis {}", s, self.side(i), i + 1)));
            }
        }
        // per axis: list of (interval, is_remainder), sorted by position
        let axes: Vec<Vec<((T, T), bool)>> = (0..self.dim())
            .map(|i| {
                let (full, rem) = self.axis_pieces(i, &side[i], anchor);
                let mut v: Vec<((T, T), bool)> = full.into_iter().map(|p| (p, false)).collect();
                if let Some(r) = rem {
                    match anchor {
                        Corner::Lower => v.push((r, true)),
                        Corner::Upper => v.insert(0, (r, true)),
                    }
                }
                v
            })
            .collect();
        let mut full = Vec::new();
        let mut remainder = Vec::new();
        let mut idx = vec![0usize; self.dim()];
        'outer: loop {
            let mut lo = Vec::with_capacity(self.dim());
            let mut hi = Vec::with_capacity(self.dim());
            let mut is_rem = false;
            for (i, &j) in idx.iter().enumerate() {
                let ((a, b), r) = &axes[i][j];
                lo.push(a.clone());
                hi.push(b.clone());
                is_rem |= *r;
            }
            let bx = AxisBox { lo, hi };
            if is_rem {
                remainder.push(bx);
            } else {
                full.push(bx);
            }
            for i in (0..self.dim()).rev() {
                idx[i] += 1;
                if idx[i] < axes[i].len() {
                    continue 'outer;
                }
                idx[i] = 0;
            }
            break;
        }
        Ok((full, remainder))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational::{q, qv};
    use crate::Rational;

    fn unit2() -> AxisBox<Rational> {
        AxisBox::unit(2)
    }

    #[test]
    fn subdivision_examples() {
        let (f, r) = unit2().subdivide(&qv(&[(1, 2), (1, 2)]), Corner::Lower).unwrap();
        assert_eq!((f.len(), r.len()), (4, 0));
        let (f, r) = unit2().subdivide(&qv(&[(2, 5), (2, 5)]), Corner::Lower).unwrap();
        assert_eq!(f.len(), 4);
        assert_eq!(r.len(), 5);
        assert!(r.iter().all(|b| b.sides().iter().any(|s| *s == q(1, 5))));
        let (f, r) = AxisBox::<Rational>::unit(1).subdivide(&qv(&[(1, 1)]), Corner::Lower).unwrap();
        assert_eq!((f.len(), r.len()), (1, 0));
    }

    #[test]
    fn upper_anchor_mirrors_lower() {
        let (f, r) = unit2().subdivide(&qv(&[(2, 5), (1, 3)]), Corner::Upper).unwrap();
        assert_eq!(f.len(), 6);
        assert!(f.iter().any(|b| b.hi == qv(&[(1, 1), (1, 1)])));
        assert!(r.iter().any(|b| b.lo == qv(&[(0, 1), (0, 1)])));
    }

    #[test]
    fn subdivision_volume_is_exact() {
        let e = AxisBox::new(qv(&[(1, 7), (-1, 3)]), qv(&[(5, 6), (2, 9)])).unwrap();
        let (f, r) = e.subdivide(&qv(&[(1, 10), (1, 8)]), Corner::Lower).unwrap();
        let total: Rational = f.iter().chain(&r).map(|b| b.volume()).sum();
        assert_eq!(total, e.volume());
    }

    #[test]
    fn rejects_bad_sides() {
        assert!(unit2().subdivide(&qv(&[(0, 1), (1, 2)]), Corner::Lower).is_err());
        assert!(unit2().subdivide(&qv(&[(3, 2), (1, 2)]), Corner::Lower).is_err());
        assert!(AxisBox::new(qv(&[(1, 1)]), qv(&[(1, 1)])).is_err());
    }

    #[test]
    fn works_over_floats() {
        let b = AxisBox::<f64>::unit(2);
        let (f, r) = b.subdivide(&[0.25, 0.5], Corner::Lower).unwrap();
        assert_eq!((f.len(), r.len()), (8, 0));
        assert!((b.volume() - 1.0).abs() < 1e-15);
    }
}

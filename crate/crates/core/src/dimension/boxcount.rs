//! Box-counting slope of a finite point set.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::Signed;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::rational::{floor_int, fmt_q, ln_q};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCountEstimate {
    pub slope_approx: f64,
    /// `(ℓ, N(ℓ))` per distinct scale, coarsest first.
    pub counts: Vec<(String, usize)>,
}

/// Number of closed-open `ℓ`-grid cells holding at least one point.
pub fn occupied_cells(points: &[Vec<Rational>], ell: &Rational) -> usize {
    let cells: HashSet<Vec<BigInt>> = points.iter().map(|p| p.iter().map(|x| floor_int(&(x / ell))).collect()).collect();
    cells.len()
}

/// Least-squares slope of `log N(ℓ)` against `−log ℓ`.
pub fn box_counting(points: &[Vec<Rational>], scales: &[Rational]) -> Result<BoxCountEstimate> {
    if let Some(s) = scales.iter().find(|s| !s.is_positive()) {
        return Err(Error::InvalidInput(format!("scale {} must be positive", fmt_q(s))));
    }
    let mut ells: Vec<Rational> = scales.to_vec();
    ells.sort();
    ells.dedup();
    ells.reverse();
    if ells.len() < 2 {
        return Err(Error::InvalidInput("box counting needs at least two distinct scales".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidInput("box counting needs at least one point".into()));
    }
    let counts: Vec<usize> = ells.iter().map(|l| occupied_cells(points, l)).collect();
    let xs: Vec<f64> = ells.iter().map(|l| -ln_q(l)).collect();
    let ys: Vec<f64> = counts.iter().map(|&n| (n as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(BoxCountEstimate {
        slope_approx: sxy / sxx,
        counts: ells.iter().map(fmt_q).zip(counts).collect(),
    })
}

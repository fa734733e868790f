//! Sheared unimodular lattices, successive minima of symmetric boxes by
//! exact enumeration, and the Minkowski second-theorem bounds.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::plane::rank;
use crate::numeric::rational::{ceil_int, floor_int, serde_q};
use crate::Rational;

/// Largest supported ambient dimension for enumeration.
pub const MAX_LATTICE_DIM: usize = 4;
/// Default cap on enumerated lattice points.
pub const DEFAULT_POINT_BUDGET: u64 = 2_000_000;

/// Which shear matrix to build for a point `x ∈ Q^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShearConvention {
    /// `(I x; 0 1)`: the lattice contains `(q x − p, q)` as `(−p, q)` images.
    Lambda,
    /// `(−I x; 0 1)`: maps `(r, s)` to `(s x − r, s)` directly.
    Uy,
}

/// Square rational matrix whose columns generate a lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeBasis {
    /// `rows[i][j]`: entry in row `i`, column `j`.
    #[serde(with = "serde_q::matrix")]
    pub rows: Vec<Vec<Rational>>,
    pub unimodular: bool,
}

impl LatticeBasis {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("lattice basis must be a non-empty square matrix".into()));
        }
        let det = determinant(&rows);
        if det.is_zero() {
            return Err(Error::InvalidInput("lattice basis is singular".into()));
        }
        let unimodular = det.abs().is_one();
        Ok(Self { rows, unimodular })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        Self { rows, unimodular: true }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn determinant(&self) -> Rational {
        determinant(&self.rows)
    }

    /// `B z` for an integer coefficient vector `z`.
    pub fn apply(&self, z: &[BigInt]) -> Vec<Rational> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(z).fold(Rational::zero(), |acc, (b, zi)| acc + b * Rational::from_integer(zi.clone())))
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        self.rows.iter().map(|r| r[j].clone()).collect()
    }

    fn upper_triangular(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..i).all(|j| self.rows[i][j].is_zero()))
    }
}

fn determinant(rows: &[Vec<Rational>]) -> Rational {
    let mut m = rows.to_vec();
    let n = m.len();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let piv = m[c][c].clone();
        det *= &piv;
        for r in c + 1..n {
            if m[r][c].is_zero() {
                continue;
            }
            let f = &m[r][c] / &piv;
            for k in c..n {
                let t = &f * &m[c][k];
                m[r][k] -= t;
            }
        }
    }
    det
}

/// The `(d+1)`-dimensional shear lattice attached to `x`.
pub fn shear_lattice(x: &[Rational], convention: ShearConvention) -> LatticeBasis {
    let n = x.len() + 1;
    let diag = match convention {
        ShearConvention::Lambda => Rational::one(),
        ShearConvention::Uy => -Rational::one(),
    };
    let mut rows = vec![vec![Rational::zero(); n]; n];
    for i in 0..x.len() {
        rows[i][i] = diag.clone();
        rows[i][n - 1] = x[i].clone();
    }
    rows[n - 1][n - 1] = Rational::one();
    LatticeBasis { rows, unimodular: true }
}

/// The body `Π [−r_i, r_i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricBox {
    #[serde(with = "serde_q::vec")]
    pub radii: Vec<Rational>,
}

impl SymmetricBox {
    pub fn new(radii: Vec<Rational>) -> Result<Self> {
        if radii.is_empty() || radii.iter().any(|r| !r.is_positive()) {
            return Err(Error::InvalidInput("symmetric box needs positive radii".into()));
        }
        Ok(Self { radii })
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }

    pub fn volume(&self) -> Rational {
        self.radii.iter().fold(Rational::one(), |acc, r| acc * r * Rational::from_integer(2.into()))
    }

    pub fn scaled(&self, t: &Rational) -> Self {
        Self { radii: self.radii.iter().map(|r| r * t).collect() }
    }

    /// Smallest `λ` with `v ∈ λK`.
    pub fn gauge(&self, v: &[Rational]) -> Rational {
        v.iter().zip(&self.radii).map(|(x, r)| x.abs() / r).max().unwrap_or_else(Rational::zero)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaReport {
    #[serde(with = "serde_q::vec")]
    pub lambda: Vec<Rational>,
    /// Integer coordinates of each witness in the basis.
    pub coefficients: Vec<Vec<BigInt>>,
    #[serde(with = "serde_q::matrix")]
    pub witnesses: Vec<Vec<Rational>>,
    pub enumerated: u64,
}

/// Integer `z` with `|B z|_i <= λ r_i` for all `i`, excluding `0`.
fn lattice_points_in(k: &SymmetricBox, l: &LatticeBasis, lam: &Rational, budget: u64) -> Result<Vec<Vec<BigInt>>> {
    let n = l.dim();
    let half: Vec<Rational> = k.radii.iter().map(|r| r * lam).collect();
    let mut out = Vec::new();
    if l.upper_triangular() {
        // Back substitution: row j only involves z_j..z_n.
        let mut z = vec![BigInt::zero(); n];
        let mut count = 0u64;
        triangular_walk(l, &half, n, &mut z, &mut out, &mut count, budget)?;
    } else {
        let inv = inverse(&l.rows);
        let bounds: Vec<BigInt> = (0..n)
            .map(|j| floor_int(&(0..n).fold(Rational::zero(), |acc, i| acc + inv[j][i].abs() * &half[i])))
            .collect();
        let cost: f64 = bounds.iter().map(|b| 2.0 * b.to_f64().unwrap_or(f64::INFINITY) + 1.0).product();
        if !(cost <= budget as f64) {
            return Err(Error::ScaleTooLarge { what: "lattice enumeration tests", needed: format!("{cost:.3e}"), budget });
        }
        let mut z: Vec<BigInt> = bounds.iter().map(|b| -b).collect();
        loop {
            let v = l.apply(&z);
            if z.iter().any(|c| !c.is_zero()) && v.iter().zip(&half).all(|(x, h)| x.abs() <= *h) {
                out.push(z.clone());
            }
            let mut j = 0;
            loop {
                if j == n {
                    return Ok(out);
                }
                if z[j] < bounds[j] {
                    z[j] += 1;
                    break;
                }
                z[j] = -bounds[j].clone();
                j += 1;
            }
        }
    }
    Ok(out)
}

fn triangular_walk(
    l: &LatticeBasis,
    half: &[Rational],
    j: usize,
    z: &mut Vec<BigInt>,
    out: &mut Vec<Vec<BigInt>>,
    count: &mut u64,
    budget: u64,
) -> Result<()> {
    if j == 0 {
        if z.iter().any(|c| !c.is_zero()) {
            out.push(z.clone());
        }
        return Ok(());
    }
    let row = j - 1;
    let n = l.dim();
    let tail = (row + 1..n).fold(Rational::zero(), |acc, c| acc + &l.rows[row][c] * Rational::from_integer(z[c].clone()));
    let b = &l.rows[row][row];
    // |b z_row + tail| <= half[row]
    let (a1, a2) = ((-&half[row] - &tail) / b, (&half[row] - &tail) / b);
    let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
    let mut zr = ceil_int(&lo);
    let last = floor_int(&hi);
    while zr <= last {
        *count += 1;
        if *count > budget {
            return Err(Error::ScaleTooLarge { what: "lattice enumeration tests", needed: format!(">{budget}"), budget });
        }
        z[row] = zr.clone();
        triangular_walk(l, half, row, z, out, count, budget)?;
        zr += 1;
    }
    z[row] = BigInt::zero();
    Ok(())
}

fn inverse(rows: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = rows.len();
    let mut m: Vec<Vec<Rational>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !m[r][c].is_zero()).expect("non-singular basis");
        m.swap(p, c);
        let piv = m[c][c].clone();
        for k in 0..2 * n {
            m[c][k] = &m[c][k] / &piv;
        }
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for k in 0..2 * n {
                    let t = &f * &m[c][k];
                    m[r][k] -= t;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Exact successive minima `λ_1 <= … <= λ_n` of `K` with respect to `L`.
///
/// The basis columns give `n` independent vectors, so `λ_n` is at most the
/// largest column gauge. The dilate is halved while it still holds `n`
/// independent points, then all points in it are sorted by gauge and chosen
/// greedily.
pub fn successive_minima(k: &SymmetricBox, l: &LatticeBasis) -> Result<MinimaReport> {
    successive_minima_with_budget(k, l, DEFAULT_POINT_BUDGET)
}

pub fn successive_minima_with_budget(k: &SymmetricBox, l: &LatticeBasis, budget: u64) -> Result<MinimaReport> {
    let n = l.dim();
    if n > MAX_LATTICE_DIM {
        return Err(Error::InvalidInput(format!("lattice dimension {n} exceeds the enumeration limit {MAX_LATTICE_DIM}")));
    }
    if k.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: k.dim() });
    }
    let mut lam = (0..n).map(|j| k.gauge(&l.column(j))).max().expect("n >= 1");
    let mut pts = lattice_points_in(k, l, &lam, budget)?;
    let half = Rational::new(1.into(), 2.into());
    loop {
        let smaller = &lam * &half;
        let cand = lattice_points_in(k, l, &smaller, budget)?;
        if cand.len() < n || greedy_independent(l, k, &cand).len() < n {
            break;
        }
        lam = smaller;
        pts = cand;
    }
    let enumerated = pts.len() as u64;
    let chosen = greedy_independent(l, k, &pts);
    debug_assert_eq!(chosen.len(), n);
    let witnesses: Vec<Vec<Rational>> = chosen.iter().map(|z| l.apply(z)).collect();
    let lambda = witnesses.iter().map(|v| k.gauge(v)).collect();
    Ok(MinimaReport { lambda, coefficients: chosen, witnesses, enumerated })
}

/// Sorts by gauge and keeps each point that raises the rank.
fn greedy_independent(l: &LatticeBasis, k: &SymmetricBox, pts: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = l.dim();
    // One representative of each ±z pair: first non-zero coefficient positive.
    // Ties in gauge go to the shorter coefficient vector.
    let mut keyed: Vec<(Rational, BigInt, &Vec<BigInt>)> = pts
        .iter()
        .filter(|z| z.iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_positive()))
        .map(|z| (k.gauge(&l.apply(z)), z.iter().map(|c| c.abs()).sum(), z))
        .collect();
    keyed.sort();
    let mut chosen: Vec<Vec<BigInt>> = Vec::new();
    let mut as_q: Vec<Vec<Rational>> = Vec::new();
    for (_, _, z) in keyed {
        let zq: Vec<Rational> = z.iter().map(|c| Rational::from_integer(c.clone())).collect();
        as_q.push(zq);
        if rank(&as_q) > chosen.len() {
            chosen.push(z.clone());
            if chosen.len() == n {
                break;
            }
        } else {
            as_q.pop();
        }
    }
    chosen
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinkowskiReport {
    #[serde(with = "serde_q")]
    pub product: Rational,
    #[serde(with = "serde_q")]
    pub lower: Rational,
    #[serde(with = "serde_q")]
    pub upper: Rational,
    pub pass: bool,
    pub minima: MinimaReport,
}

/// `2^n/n! <= vol(K) Π λ_i <= 2^n` for a unimodular lattice.
pub fn minkowski_check(k: &SymmetricBox, l: &LatticeBasis) -> Result<MinkowskiReport> {
    if !l.unimodular {
        return Err(Error::Precondition("Minkowski bounds are checked for unimodular lattices only".into()));
    }
    let minima = successive_minima(k, l)?;
    let n = l.dim();
    let product = minima.lambda.iter().fold(k.volume(), |acc, x| acc * x);
    let upper = Rational::from_integer(BigInt::one() << n);
    let fact: BigInt = (1..=n).map(BigInt::from).product();
    let lower = &upper / Rational::from_integer(fact);
    let pass = lower <= product && product <= upper;
    Ok(MinkowskiReport { product, lower, upper, pass, minima })
}

//! Pfaffian system `∂_i F ≡ P_i(x) F` for `2F1(a, b; c; X)`.
//!
//! Dividing Muirhead's operator `g_i` by `x_i(1−x_i)` gives
//!
//! ```text
//! ∂_i² + (p(x_i) + Σ_{k≠i} q₂(x_i,x_k)) ∂_i − Σ_{k≠i} q(x_i,x_k) ∂_k − r(x_i)
//! ```
//!
//! which annihilates `2F1`. The basis is `F = (∂_J f)_{J ⊆ [m]}`, indexed by
//! [`SubsetIndex`]. Applying `∂_J` (with `i ∉ J`) to the operator and
//! solving for `∂_i²∂_J` leaves only square-free derivatives except for the
//! terms `q(x_i,x_k) ∂_{J∖k} ∂_k²`, `k ∈ J`, which are reduced first since
//! `|J∖k| < |J|`.
//!
//! Directions are zero-based throughout.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::subset::SubsetIndex;

/// Minimum separation between coordinates accepted by default.
pub const DEFAULT_GAP: f64 = 1e-8;

/// Parameters `(a, b, c)` of `2F1` and the matrix dimension `m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m: usize,
}

fn check_interior(x_i: f64) -> Result<()> {
    if !x_i.is_finite() || x_i == 0.0 || x_i == 1.0 {
        return Err(Error::Singular(format!("coordinate {x_i} is a singular point (0, 1)")));
    }
    Ok(())
}

fn check_distinct(x_i: f64, x_j: f64) -> Result<()> {
    if x_i == x_j {
        return Err(Error::Singular(format!(
            "coordinates coincide at {x_i}: singularity in the diagonal region"
        )));
    }
    Ok(())
}

/// `p(x_i) = (c − (m−1)/2 − (a + b + 1 − (m−1)/2) x_i) / (x_i (1 − x_i))`.
pub fn coeff_p(x_i: f64, params: &GaussParams) -> Result<f64> {
    check_interior(x_i)?;
    let h = 0.5 * (params.m as f64 - 1.0);
    Ok((params.c - h - (params.a + params.b + 1.0 - h) * x_i) / (x_i * (1.0 - x_i)))
}

/// `q₂(x_i, x_j) = 1 / (2 (x_i − x_j))`.
pub fn coeff_q2(x_i: f64, x_j: f64) -> Result<f64> {
    check_distinct(x_i, x_j)?;
    Ok(0.5 / (x_i - x_j))
}

/// `∂q₂/∂x_j = 1 / (2 (x_i − x_j)²)`.
pub fn coeff_q2_dxj(x_i: f64, x_j: f64) -> Result<f64> {
    check_distinct(x_i, x_j)?;
    let d = x_i - x_j;
    Ok(0.5 / (d * d))
}

/// `q(x_i, x_j) = x_j (1 − x_j) / (2 x_i (1 − x_i) (x_i − x_j))`.
pub fn coeff_q(x_i: f64, x_j: f64) -> Result<f64> {
    check_interior(x_i)?;
    check_distinct(x_i, x_j)?;
    Ok(x_j * (1.0 - x_j) / (2.0 * x_i * (1.0 - x_i) * (x_i - x_j)))
}

/// `∂q/∂x_j = (x_i − 2 x_i x_j + x_j²) / (2 x_i (1 − x_i) (x_i − x_j)²)`.
pub fn coeff_q_dxj(x_i: f64, x_j: f64) -> Result<f64> {
    check_interior(x_i)?;
    check_distinct(x_i, x_j)?;
    let d = x_i - x_j;
    Ok((x_i - 2.0 * x_i * x_j + x_j * x_j) / (2.0 * x_i * (1.0 - x_i) * d * d))
}

/// `r(x_i) = a b / (x_i (1 − x_i))`.
pub fn coeff_r(x_i: f64, a: f64, b: f64) -> Result<f64> {
    check_interior(x_i)?;
    Ok(a * b / (x_i * (1.0 - x_i)))
}

/// Rejects points with two coordinates closer than `gap`.
pub fn check_gap(point: &[f64], gap: f64) -> Result<()> {
    for i in 0..point.len() {
        for j in i + 1..point.len() {
            if (point[i] - point[j]).abs() < gap {
                return Err(Error::DiagonalSingularity { i, j, gap });
            }
        }
    }
    Ok(())
}

/// All coefficient values needed by the reduction at one point.
#[derive(Clone, Debug)]
pub struct PointCoefficients {
    m: usize,
    p_plus_q2: Vec<f64>,
    r: Vec<f64>,
    // row-major m × m tables, entry (i, k)
    q: Vec<f64>,
    dq: Vec<f64>,
    dq2: Vec<f64>,
}

impl PointCoefficients {
    pub fn new(point: &[f64], params: &GaussParams) -> Result<Self> {
        Self::with_gap(point, params, DEFAULT_GAP)
    }

    pub fn with_gap(point: &[f64], params: &GaussParams, gap: f64) -> Result<Self> {
        let m = point.len();
        if m != params.m {
            return Err(Error::Parameter(format!(
                "point has {m} coordinates but the system has dimension {}",
                params.m
            )));
        }
        check_gap(point, gap)?;
        let mut out = Self {
            m,
            p_plus_q2: vec![0.0; m],
            r: vec![0.0; m],
            q: vec![0.0; m * m],
            dq: vec![0.0; m * m],
            dq2: vec![0.0; m * m],
        };
        for i in 0..m {
            let xi = point[i];
            let mut s = coeff_p(xi, params)?;
            out.r[i] = coeff_r(xi, params.a, params.b)?;
            for k in (0..m).filter(|&k| k != i) {
                let xk = point[k];
                s += coeff_q2(xi, xk)?;
                out.q[i * m + k] = coeff_q(xi, xk)?;
                out.dq[i * m + k] = coeff_q_dxj(xi, xk)?;
                out.dq2[i * m + k] = coeff_q2_dxj(xi, xk)?;
            }
            out.p_plus_q2[i] = s;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Fills `table[i · 2^m + J]` (for `i ∉ J`) with the reduced
    /// `∂_i²∂_J`, expressed through `basis(S)` for the square-free `∂_S`.
    fn reduce_into<A: Linear>(&self, table: &mut Vec<A>, basis: impl Fn(usize) -> A) {
        let m = self.m;
        let n = 1usize << m;
        table.clear();
        table.resize(m * n, A::zero());
        // J∖k < J numerically, so index order respects the induction on |J|
        for j in 0..n {
            for i in (0..m).filter(|&i| j & (1 << i) == 0) {
                let big_i = j | (1 << i);
                let mut acc = A::zero();
                acc.axpy(-self.p_plus_q2[i], &basis(big_i));
                acc.axpy(self.r[i], &basis(j));
                for k in (0..m).filter(|&k| k != i) {
                    let ik = i * m + k;
                    if j & (1 << k) != 0 {
                        acc.axpy(-self.dq2[ik], &basis(big_i & !(1 << k)));
                        acc.axpy(self.dq[ik], &basis(j));
                        let inner = table[k * n + (j & !(1 << k))].clone();
                        acc.axpy(self.q[ik], &inner);
                    } else {
                        acc.axpy(self.q[ik], &basis(j | (1 << k)));
                    }
                }
                table[i * n + j] = acc;
            }
        }
    }

    /// Writes `Σ_i w_i P_i F` into `out`, using `scratch` for the reduced
    /// second derivatives.
    pub fn weighted_apply(&self, weights: &[f64], f: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) {
        let m = self.m;
        let n = 1usize << m;
        self.reduce_into(scratch, |s| f[s]);
        for (s, o) in out.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for (i, &w) in weights.iter().enumerate() {
                let v = if s & (1 << i) == 0 {
                    f[s | (1 << i)]
                } else {
                    scratch[i * n + (s & !(1 << i))]
                };
                acc += w * v;
            }
            *o = acc;
        }
    }

    /// `P_i F` for one direction.
    pub fn apply(&self, i: usize, f: &[f64]) -> Vec<f64> {
        let mut weights = vec![0.0; self.m];
        weights[i] = 1.0;
        let mut out = vec![0.0; f.len()];
        self.weighted_apply(&weights, f, &mut Vec::new(), &mut out);
        out
    }
}

trait Linear: Clone {
    fn zero() -> Self;
    fn axpy(&mut self, c: f64, x: &Self);
}

impl Linear for f64 {
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn axpy(&mut self, c: f64, x: &Self) {
        *self += c * x;
    }
}

/// Sparse linear combination `Σ_S c_S ∂_S`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRow(pub BTreeMap<SubsetIndex, f64>);

impl SparseRow {
    pub fn get(&self, s: SubsetIndex) -> f64 {
        self.0.get(&s).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (SubsetIndex, f64)> + '_ {
        self.0.iter().map(|(&s, &c)| (s, c))
    }

    fn unit(s: usize) -> Self {
        SparseRow(BTreeMap::from([(SubsetIndex(s as u32), 1.0)]))
    }
}

impl Linear for SparseRow {
    fn zero() -> Self {
        SparseRow::default()
    }
    fn axpy(&mut self, c: f64, x: &Self) {
        if c == 0.0 {
            return;
        }
        for (s, v) in &x.0 {
            *self.0.entry(*s).or_insert(0.0) += c * v;
        }
    }
}

fn check_direction(i: usize, m: usize) -> Result<()> {
    if i >= m {
        return Err(Error::Parameter(format!("direction {i} out of range for dimension {m}")));
    }
    Ok(())
}

/// `∂_i²∂_J` modulo the left ideal, as a combination of square-free `∂_S`.
pub fn reduce_second_derivative(
    i: usize,
    j: SubsetIndex,
    point: &[f64],
    params: &GaussParams,
) -> Result<SparseRow> {
    check_direction(i, point.len())?;
    if j.contains(i) || j.index() >= 1 << point.len() {
        return Err(Error::Parameter(format!("subset {j} must not contain direction {}", i + 1)));
    }
    let coef = PointCoefficients::new(point, params)?;
    let mut table = Vec::new();
    coef.reduce_into(&mut table, SparseRow::unit);
    Ok(std::mem::take(&mut table[(i << point.len()) + j.index()]))
}

/// The matrix `P_i(x)` with `∂_i F ≡ P_i F`.
#[derive(Clone, Debug, PartialEq)]
pub struct PfaffianMatrix {
    pub direction: usize,
    pub point: Vec<f64>,
    pub entries: BTreeMap<(SubsetIndex, SubsetIndex), f64>,
}

impl PfaffianMatrix {
    pub fn dim(&self) -> usize {
        1 << self.point.len()
    }

    pub fn get(&self, row: SubsetIndex, col: SubsetIndex) -> f64 {
        self.entries.get(&(row, col)).copied().unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = vec![vec![0.0; n]; n];
        for (&(r, c), &v) in &self.entries {
            out[r.index()][c.index()] = v;
        }
        out
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (&(r, c), &v) in &self.entries {
            out[r.index()] += v * f[c.index()];
        }
        out
    }

    /// Rows whose only entry is a 1 at `S ∪ {i}`.
    pub fn unit_rows(&self) -> usize {
        SubsetIndex::all(self.point.len())
            .filter(|s| {
                let mut row = self.entries.range((*s, SubsetIndex(0))..=(*s, SubsetIndex(u32::MAX)));
                matches!((row.next(), row.next()), (Some((&(_, c), &v)), None) if v == 1.0 && c == s.with(self.direction))
            })
            .count()
    }
}

/// Builds `P_i(x)`: unit rows for `S ∌ i`, reduced rows for `S ∋ i`.
pub fn build_pfaffian(i: usize, point: &[f64], params: &GaussParams) -> Result<PfaffianMatrix> {
    let m = point.len();
    check_direction(i, m)?;
    let coef = PointCoefficients::new(point, params)?;
    let mut table = Vec::new();
    coef.reduce_into(&mut table, SparseRow::unit);
    let mut entries = BTreeMap::new();
    for s in SubsetIndex::all(m) {
        if s.contains(i) {
            for (col, v) in table[(i << m) + s.without(i).index()].iter() {
                if v != 0.0 {
                    entries.insert((s, col), v);
                }
            }
        } else {
            entries.insert((s, s.with(i)), 1.0);
        }
    }
    Ok(PfaffianMatrix {
        direction: i,
        point: point.to_vec(),
        entries,
    })
}

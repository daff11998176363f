//! Truncated hypergeometric functions of a matrix argument.
//!
//! `pFq(a; b; X) = Σ_k Σ_{κ ⊢ k} [Π (a_i)_κ / Π (b_j)_κ] C_κ(X) / k!`, which
//! depends on `X` only through its eigenvalues.
//!
//! The series is summed degree by degree. Zonal polynomials are built with
//! the Jack branching rule over the number of variables,
//!
//! ```text
//! P_κ(x_1..x_n) = Σ_{κ/μ horizontal strip} ψ_{κ/μ} P_μ(x_1..x_{n-1}) x_n^{|κ|-|μ|},
//! ```
//!
//! in the monic (`P`) normalization, with `C_κ = 2^k k! / Π h*(s) · P_κ`.
//! Because `x_n` enters each branch through a single power, the mixed
//! partials `∂_J` are carried along exactly by differentiating that power
//! whenever `n ∈ J`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::subset::SubsetIndex;
use crate::symfun::{enumerate_partitions, lower_hook, upper_hook, Partition};

/// Numerator `(a_1..a_p)` and denominator `(b_1..b_q)` parameters of `pFq`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

impl HyperParams {
    pub fn new(numerator: Vec<f64>, denominator: Vec<f64>) -> Self {
        Self {
            numerator,
            denominator,
        }
    }

    /// `2F1(a, b; c)`.
    pub fn gauss(a: f64, b: f64, c: f64) -> Self {
        Self::new(vec![a, b], vec![c])
    }

    /// Rejects denominators with `b − (i−1)/2 ∈ {0, −1, −2, …}` for some
    /// `i ≤ m`, which make `(b)_κ` vanish.
    pub fn check_poles(&self, m: usize) -> Result<()> {
        for &b in &self.denominator {
            if !b.is_finite() {
                return Err(Error::Parameter(format!("denominator parameter {b} is not finite")));
            }
            for i in 0..m {
                let shifted = b - 0.5 * i as f64;
                if shifted <= 0.0 && shifted == shifted.round() {
                    return Err(Error::Parameter(format!(
                        "denominator parameter {b} has a pole at row {} (b - {}/2 = {shifted})",
                        i + 1,
                        i
                    )));
                }
            }
        }
        if let Some(a) = self.numerator.iter().find(|a| !a.is_finite()) {
            return Err(Error::Parameter(format!("numerator parameter {a} is not finite")));
        }
        Ok(())
    }

    /// Highest degree with a nonzero coefficient when some numerator
    /// parameter is a non-positive integer `−r`: every `κ` with `κ_1 > r`
    /// has `(−r)_κ = 0`, leaving degrees up to `r·m`.
    pub fn termination_degree(&self, m: usize) -> Option<usize> {
        self.numerator
            .iter()
            .filter(|&&a| a <= 0.0 && a == a.round())
            .map(|&a| (-a) as usize * m)
            .min()
    }

    // Π_p (a_p)_cell / Π_q (b_q)_cell for the cell (i, j), zero-based.
    #[inline]
    fn cell_ratio(&self, i: usize, j: usize) -> f64 {
        let shift = j as f64 - 0.5 * i as f64;
        let num: f64 = self.numerator.iter().map(|a| a + shift).product();
        let den: f64 = self.denominator.iter().map(|b| b + shift).product();
        num / den
    }

    /// `Π (a_i)_κ / Π (b_j)_κ · 2^k / Π h*(s)`: the weight of the monic `P_κ`
    /// in the series, which equals the weight of `C_κ / k!`.
    pub fn series_weight(&self, kappa: &Partition) -> f64 {
        let conj = kappa.conjugate();
        kappa
            .cells()
            .map(|(i, j)| self.cell_ratio(i, j) * 2.0 / upper_hook(kappa, &conj, i, j))
            .product()
    }
}

/// Truncation controls for the series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesOptions {
    /// Hard cap on the total degree `k = |κ|`.
    pub max_degree: usize,
    /// Stop at the first `k` with `|(f_k − f_{k−1}) / f_{k−1}| < series_error`.
    pub series_error: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            max_degree: 200,
            series_error: 1e-5,
        }
    }
}

/// Value of a truncated series together with its convergence history.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesResult {
    pub value: f64,
    /// Entry `k` is the sum of all terms of total degree `≤ k`.
    pub partial_sums_by_degree: Vec<f64>,
    pub truncation_degree: usize,
    /// True when the stopping rule fired (or the series terminated) before
    /// the degree cap.
    pub converged: bool,
}

impl SeriesResult {
    /// `|f_K − f_{K−1}|` at the truncation degree (zero for `K = 0`).
    pub fn last_increment(&self) -> f64 {
        let k = self.truncation_degree;
        if k == 0 {
            0.0
        } else {
            (self.partial_sums_by_degree[k] - self.partial_sums_by_degree[k - 1]).abs()
        }
    }
}

/// The series and all its mixed first-order partials `∂_J`, `J ⊆ [m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesWithDerivs {
    /// Entry `J.index()` is `∂_J pFq(x)`; entry 0 is the value.
    pub derivatives: Vec<f64>,
    pub series: SeriesResult,
}

/// Truncated `pFq(params; x)` for the eigenvalues `x`.
pub fn pfq_truncated(params: &HyperParams, x: &[f64], opts: SeriesOptions) -> Result<SeriesResult> {
    let (_, series) = sum_series(params, x, opts, false)?;
    Ok(series)
}

/// Truncated `pFq` and every `∂_J pFq`, all cut at the degree chosen by the
/// stopping rule for the value.
pub fn pfq_with_derivs(
    params: &HyperParams,
    x: &[f64],
    opts: SeriesOptions,
) -> Result<SeriesWithDerivs> {
    let (derivatives, series) = sum_series(params, x, opts, true)?;
    Ok(SeriesWithDerivs {
        derivatives,
        series,
    })
}

fn sum_series(
    params: &HyperParams,
    x: &[f64],
    opts: SeriesOptions,
    derivs: bool,
) -> Result<(Vec<f64>, SeriesResult)> {
    let m = x.len();
    if m == 0 {
        return Err(Error::Parameter("empty argument".into()));
    }
    if m > 20 {
        return Err(Error::Parameter(format!("dimension {m} is too large")));
    }
    if !(opts.series_error > 0.0) {
        return Err(Error::Parameter(format!(
            "series_error must be positive, got {}",
            opts.series_error
        )));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite argument {v}")));
    }
    params.check_poles(m)?;

    // Evaluate on descending coordinates so the value is exactly invariant
    // under permutations of x.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();

    let terminating = params.termination_degree(m);
    let cap = match terminating {
        Some(d) => d.min(opts.max_degree),
        None => opts.max_degree,
    };

    let mut table = BranchingTable::new(sorted, derivs);
    let width = table.width(m);
    let mut sums = vec![0.0; width];
    sums[0] = 1.0;
    let mut partial = vec![1.0];
    let mut truncation = 0;
    let mut converged = cap == 0 && terminating.is_some();

    for k in 1..=cap {
        table.extend_to_degree(k as u32);
        let mut term = vec![0.0; width];
        for kappa in enumerate_partitions(k as u32, m, None) {
            let weight = params.series_weight(&kappa);
            if weight == 0.0 {
                continue;
            }
            let values = table.values(m, &kappa);
            for (t, v) in term.iter_mut().zip(values) {
                *t += weight * v;
            }
        }
        let prev = sums[0];
        for (s, t) in sums.iter_mut().zip(&term) {
            *s += t;
        }
        partial.push(sums[0]);
        truncation = k;
        if terminating.is_none() {
            let rel = (sums[0] - prev).abs() / prev.abs().max(f64::EPSILON);
            if rel < opts.series_error {
                converged = true;
                break;
            }
        } else if Some(k) == terminating {
            converged = true;
        }
    }
    if cap == 0 {
        converged = true;
    }

    let derivatives = if derivs {
        // map sorted-variable subsets back to the caller's variable order
        let mut out = vec![0.0; width];
        for s in 0..width {
            let mut j = 0u32;
            for (t, &orig) in order.iter().enumerate() {
                if s & (1 << t) != 0 {
                    j |= 1 << orig;
                }
            }
            out[j as usize] = sums[s];
        }
        out
    } else {
        vec![sums[0]]
    };

    Ok((
        derivatives,
        SeriesResult {
            value: sums[0],
            partial_sums_by_degree: partial,
            truncation_degree: truncation,
            converged,
        },
    ))
}

/// Values of the monic Jack polynomials `P_κ(x_1..x_n)` (parameter 2) for
/// `n = 1..m`, optionally with all mixed partials over the first `n`
/// variables. Level `n` stores vectors of length `2^n` (or 1).
struct BranchingTable {
    x: Vec<f64>,
    derivs: bool,
    levels: Vec<HashMap<Partition, Vec<f64>>>,
    degree: u32,
}

impl BranchingTable {
    fn new(x: Vec<f64>, derivs: bool) -> Self {
        let m = x.len();
        let mut levels = vec![HashMap::new(); m + 1];
        levels[0].insert(Partition::empty(), vec![1.0]);
        for (n, level) in levels.iter_mut().enumerate().skip(1) {
            let w = if derivs { 1 << n } else { 1 };
            let mut one = vec![0.0; w];
            one[0] = 1.0;
            level.insert(Partition::empty(), one);
        }
        Self {
            x,
            derivs,
            levels,
            degree: 0,
        }
    }

    fn width(&self, n: usize) -> usize {
        if self.derivs {
            1 << n
        } else {
            1
        }
    }

    fn values(&self, n: usize, kappa: &Partition) -> &[f64] {
        &self.levels[n][kappa]
    }

    fn extend_to_degree(&mut self, k: u32) {
        while self.degree < k {
            let d = self.degree + 1;
            for n in 1..self.levels.len() {
                for kappa in enumerate_partitions(d, n, None) {
                    let v = self.branch(n, &kappa);
                    self.levels[n].insert(kappa, v);
                }
            }
            self.degree = d;
        }
    }

    fn branch(&self, n: usize, kappa: &Partition) -> Vec<f64> {
        let width = self.width(n);
        let low_mask = self.width(n - 1) - 1;
        let var = n - 1;
        let xn = self.x[var];
        let k = kappa.weight();
        let conj = kappa.conjugate();
        let prev_level = &self.levels[n - 1];
        let mut out = vec![0.0; width];

        let mut mu = vec![0u32; n.saturating_sub(1)];
        for_each_strip(kappa, n, 0, &mut mu, &mut |mu_parts| {
            let mu = Partition::from_sorted(mu_parts.to_vec());
            let prev = match prev_level.get(&mu) {
                Some(v) => v,
                None => return,
            };
            let psi = strip_coefficient(kappa, &conj, &mu);
            let d = (k - mu.weight()) as i32;
            let plain = xn.powi(d);
            let differentiated = if d == 0 { 0.0 } else { d as f64 * xn.powi(d - 1) };
            for (s, o) in out.iter_mut().enumerate() {
                let factor = if s & (1 << var) != 0 { differentiated } else { plain };
                *o += psi * factor * prev[s & low_mask];
            }
        });
        out
    }
}

// Enumerates μ with κ_{i+1} ≤ μ_i ≤ κ_i for i < n−1 (μ has at most n−1 parts).
fn for_each_strip(
    kappa: &Partition,
    n: usize,
    i: usize,
    mu: &mut Vec<u32>,
    f: &mut dyn FnMut(&[u32]),
) {
    if i + 1 >= n {
        f(mu);
        return;
    }
    for v in kappa.part(i + 1)..=kappa.part(i) {
        mu[i] = v;
        for_each_strip(kappa, n, i + 1, mu, f);
    }
}

// ψ_{κ/μ} for the monic normalization: columns untouched by the strip
// (κ'_j = μ'_j) contribute h*_κ/h_*^κ · h_*^μ/h*_μ cell by cell.
fn strip_coefficient(kappa: &Partition, kconj: &Partition, mu: &Partition) -> f64 {
    let mconj = mu.conjugate();
    let mut psi = 1.0;
    for j in 0..kappa.part(0) as usize {
        let height = kconj.part(j);
        if height != mconj.part(j) {
            continue;
        }
        for i in 0..height as usize {
            psi *= upper_hook(kappa, kconj, i, j) / lower_hook(kappa, kconj, i, j);
            psi *= lower_hook(mu, &mconj, i, j) / upper_hook(mu, &mconj, i, j);
        }
    }
    psi
}

/// Result of a Kummer relation: `2F1(a, b; c; X) = |I − X|^{det_exponent} · 2F1(params; argument)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KummerImage {
    pub params: HyperParams,
    pub argument: Vec<f64>,
    pub det_exponent: f64,
    /// `det_exponent · Σ ln(1 − x_i)` for the original argument.
    pub log_prefactor: f64,
}

impl KummerImage {
    pub fn prefactor(&self) -> f64 {
        self.log_prefactor.exp()
    }
}

fn check_below_one(x: &[f64]) -> Result<()> {
    match x.iter().find(|&&v| !(v < 1.0)) {
        Some(v) => Err(Error::Domain(format!(
            "Kummer relations need every eigenvalue below 1, got {v}"
        ))),
        None => Ok(()),
    }
}

/// `2F1(a, b; c; X) = |I − X|^{c−a−b} 2F1(c−a, c−b; c; X)`.
pub fn kummer_transform_1(a: f64, b: f64, c: f64, x: &[f64]) -> Result<KummerImage> {
    check_below_one(x)?;
    let exponent = c - a - b;
    Ok(KummerImage {
        params: HyperParams::gauss(c - a, c - b, c),
        argument: x.to_vec(),
        det_exponent: exponent,
        log_prefactor: exponent * x.iter().map(|v| (-v).ln_1p()).sum::<f64>(),
    })
}

/// `2F1(a, b; c; X) = |I − X|^{−b} 2F1(c−a, b; c; −X(I − X)^{−1})`.
pub fn kummer_transform_2(a: f64, b: f64, c: f64, x: &[f64]) -> Result<KummerImage> {
    check_below_one(x)?;
    Ok(KummerImage {
        params: HyperParams::gauss(c - a, b, c),
        argument: x.iter().map(|v| -v / (1.0 - v)).collect(),
        det_exponent: -b,
        log_prefactor: -b * x.iter().map(|v| (-v).ln_1p()).sum::<f64>(),
    })
}

/// Convenience: `∂_J` entry of a derivative vector.
pub fn derivative(values: &[f64], j: SubsetIndex) -> f64 {
    values[j.index()]
}

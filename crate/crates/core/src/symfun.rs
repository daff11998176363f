//! Integer partitions, generalized Pochhammer symbols and zonal polynomials.
//!
//! Zonal polynomials use the `C` normalization, under which
//! `Σ_{κ ⊢ k} C_κ(X) = (tr X)^k`. Each `C_κ` is expanded in the monomial
//! symmetric functions `m_λ`; the expansion coefficients come from the
//! Laplace–Beltrami eigen-recurrence
//!
//! ```text
//! c_{κλ} = Σ_{λ < μ ≤ κ} ((λ_i + t) − (λ_j − t)) c_{κμ} / (ρ_κ − ρ_λ),
//! ρ_κ = Σ_i κ_i (κ_i − i),
//! ```
//!
//! where `μ` is `λ` with `t` boxes moved from row `j` up to row `i < j`.
//! The leading coefficient is `c_{κκ} = 2^k k! / Π_{s ∈ κ} h*(s)` with the
//! upper hook length `h*(s) = 2·arm(s) + leg(s) + 2`.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul};
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::subset::SubsetIndex;

/// A weakly decreasing tuple of positive integers; trailing zeros are dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition(Vec<u32>);

impl Partition {
    /// Builds a partition, rejecting increasing sequences. Zero parts are
    /// stripped.
    pub fn new(parts: &[u32]) -> Option<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return None;
        }
        Some(Self::from_sorted(parts.to_vec()))
    }

    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    pub(crate) fn from_sorted(mut parts: Vec<u32>) -> Self {
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Partition(parts)
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    /// Number of nonzero parts.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Part `i` (zero-based), zero past the end.
    #[inline]
    pub fn part(&self, i: usize) -> u32 {
        self.0.get(i).copied().unwrap_or(0)
    }

    /// Conjugate partition: `κ'_j = #{i : κ_i ≥ j}`.
    pub fn conjugate(&self) -> Partition {
        let cols = self.part(0) as usize;
        let parts = (1..=cols as u32)
            .map(|j| self.0.iter().filter(|&&p| p >= j).count() as u32)
            .collect();
        Partition(parts)
    }

    /// `self ≤ other` in dominance order (same weight assumed).
    pub fn dominated_by(&self, other: &Partition) -> bool {
        let n = self.len().max(other.len());
        let (mut a, mut b) = (0u32, 0u32);
        for i in 0..n {
            a += self.part(i);
            b += other.part(i);
            if a > b {
                return false;
            }
        }
        true
    }

    /// Cells `(i, j)`, zero-based row and column.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(i, &p)| (0..p as usize).map(move |j| (i, j)))
    }

    /// `Σ_i κ_i (κ_i − i)` with one-based `i`.
    pub fn rho(&self) -> i64 {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &p)| p as i64 * (p as i64 - (i as i64 + 1)))
            .sum()
    }
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (n, p) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Upper hook length at parameter 2, `κ'_j − i + 2(κ_i − j + 1)`, one-based.
#[inline]
pub(crate) fn upper_hook(kappa: &Partition, conj: &Partition, i: usize, j: usize) -> f64 {
    (conj.part(j) as f64 - (i as f64 + 1.0)) + 2.0 * (kappa.part(i) as f64 - j as f64)
}

/// Lower hook length at parameter 2, `κ'_j − i + 1 + 2(κ_i − j)`, one-based.
#[inline]
pub(crate) fn lower_hook(kappa: &Partition, conj: &Partition, i: usize, j: usize) -> f64 {
    (conj.part(j) as f64 - i as f64) + 2.0 * (kappa.part(i) as f64 - (j as f64 + 1.0))
}

/// Every partition of `k` with at most `max_parts` parts and (optionally)
/// largest part at most `max_part`, in reverse lexicographic order.
pub fn enumerate_partitions(k: u32, max_parts: usize, max_part: Option<u32>) -> Vec<Partition> {
    fn rec(
        remaining: u32,
        cap: u32,
        slots: usize,
        prefix: &mut Vec<u32>,
        out: &mut Vec<Partition>,
    ) {
        if remaining == 0 {
            out.push(Partition(prefix.clone()));
            return;
        }
        if slots == 0 {
            return;
        }
        for p in (1..=cap.min(remaining)).rev() {
            // the remaining slots must be able to absorb what is left
            if (p as u64) * (slots as u64) < remaining as u64 {
                break;
            }
            prefix.push(p);
            rec(remaining - p, p, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    let cap = max_part.unwrap_or(k);
    rec(k, cap, max_parts, &mut Vec::new(), &mut out);
    out
}

/// Generalized Pochhammer symbol `(a)_κ = Π_i Π_{j=1..κ_i} (a − (i−1)/2 + j − 1)`.
pub fn gen_pochhammer(a: f64, kappa: &Partition) -> f64 {
    kappa
        .cells()
        .map(|(i, j)| a - 0.5 * i as f64 + j as f64)
        .product()
}

/// Exact `(a)_κ` for rational `a`.
pub fn gen_pochhammer_exact(a: &BigRational, kappa: &Partition) -> BigRational {
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    kappa.cells().fold(BigRational::one(), |acc, (i, j)| {
        let shift = &half * BigInt::from(i as i64) - BigRational::from_integer(BigInt::from(j as i64));
        acc * (a - shift)
    })
}

/// Scalars the expansion recurrence can run over.
pub trait Coefficient:
    Clone + Zero + One + Add<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn from_i64(v: i64) -> Self;
}

impl Coefficient for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl Coefficient for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

/// Coefficients of `C_κ` on the `m_λ` with at most `max_parts` parts, in
/// reverse lexicographic order of `λ` (so `λ = κ` comes first).
pub fn expansion_coefficients<T: Coefficient>(
    kappa: &Partition,
    max_parts: usize,
) -> Vec<(Partition, T)> {
    if kappa.len() > max_parts {
        return Vec::new();
    }
    let k = kappa.weight();
    let conj = kappa.conjugate();

    let mut lead = T::one();
    for (s, (i, j)) in kappa.cells().enumerate() {
        let hook = (conj.part(j) as i64 - (i as i64 + 1)) + 2 * (kappa.part(i) as i64 - j as i64);
        lead = lead * T::from_i64(2 * (s as i64 + 1)) / T::from_i64(hook);
    }

    let lambdas: Vec<Partition> = enumerate_partitions(k, max_parts, None)
        .into_iter()
        .filter(|l| l.dominated_by(kappa))
        .collect();
    let index: HashMap<&Partition, usize> = lambdas.iter().enumerate().map(|(n, l)| (l, n)).collect();
    let rho_kappa = kappa.rho();

    let mut coeffs: Vec<T> = Vec::with_capacity(lambdas.len());
    for lambda in &lambdas {
        if lambda == kappa {
            coeffs.push(lead.clone());
            continue;
        }
        let parts = lambda.parts();
        let mut acc = T::zero();
        let mut work = parts.to_vec();
        for j in 1..parts.len() {
            for i in 0..j {
                for t in 1..=parts[j] {
                    work.copy_from_slice(parts);
                    work[i] += t;
                    work[j] -= t;
                    work.sort_unstable_by(|a, b| b.cmp(a));
                    let mu = Partition::from_sorted(work.clone());
                    if let Some(&n) = index.get(&mu) {
                        let weight = parts[i] as i64 - parts[j] as i64 + 2 * t as i64;
                        acc = acc + T::from_i64(weight) * coeffs[n].clone();
                    }
                }
            }
        }
        coeffs.push(acc / T::from_i64(rho_kappa - lambda.rho()));
    }
    lambdas.into_iter().zip(coeffs).collect()
}

/// Exact monomial expansion of a zonal polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct ZonalExpansion {
    pub kappa: Partition,
    /// `(λ, c_{κλ})` over all `λ ⊢ |κ|` dominated by `κ`, reverse lexicographic.
    pub coefficients: Vec<(Partition, BigRational)>,
}

impl ZonalExpansion {
    pub fn coefficient(&self, lambda: &Partition) -> BigRational {
        self.coefficients
            .iter()
            .find(|(l, _)| l == lambda)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }
}

/// Exact expansion of `C_κ` over every monomial symmetric function.
pub fn zonal_expansion(kappa: &Partition) -> ZonalExpansion {
    let max_parts = kappa.weight().max(1) as usize;
    ZonalExpansion {
        kappa: kappa.clone(),
        coefficients: expansion_coefficients(kappa, max_parts),
    }
}

type ExpansionCache = RwLock<HashMap<(Partition, usize), Arc<Vec<(Partition, f64)>>>>;

fn expansion_cache() -> &'static ExpansionCache {
    static CACHE: OnceLock<ExpansionCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Double-precision expansion restricted to `λ` with at most `max_parts`
/// parts. Computed from the exact rational recurrence once, then shared.
pub fn cached_expansion(kappa: &Partition, max_parts: usize) -> Arc<Vec<(Partition, f64)>> {
    let key = (kappa.clone(), max_parts);
    if let Some(hit) = expansion_cache().read().expect("cache poisoned").get(&key) {
        return Arc::clone(hit);
    }
    let exact: Vec<(Partition, BigRational)> = expansion_coefficients(kappa, max_parts);
    let value: Arc<Vec<(Partition, f64)>> = Arc::new(
        exact
            .into_iter()
            .map(|(l, c)| (l, c.to_f64().unwrap_or(f64::NAN)))
            .collect(),
    );
    let mut guard = expansion_cache().write().expect("cache poisoned");
    Arc::clone(guard.entry(key).or_insert(value))
}

/// Evaluates `∂_J m_λ(x)` for a fixed point and derivative set, sharing
/// work across partitions through a memo on the unassigned exponents.
pub struct MonomialEvaluator<'a> {
    x: &'a [f64],
    deriv: SubsetIndex,
    memo: HashMap<Vec<u32>, f64>,
}

impl<'a> MonomialEvaluator<'a> {
    pub fn new(x: &'a [f64], deriv: SubsetIndex) -> Self {
        Self {
            x,
            deriv,
            memo: HashMap::new(),
        }
    }

    /// `∂_J m_λ(x)`; zero when `λ` has more parts than variables.
    pub fn eval(&mut self, lambda: &Partition) -> f64 {
        let m = self.x.len();
        if lambda.len() > m {
            return 0.0;
        }
        let mut exps = lambda.parts().to_vec();
        exps.resize(m, 0);
        self.assign(exps)
    }

    // Sum over distinct assignments of the multiset `exps` (sorted,
    // descending) to the trailing `exps.len()` variables.
    fn assign(&mut self, exps: Vec<u32>) -> f64 {
        if exps.is_empty() {
            return 1.0;
        }
        if let Some(&v) = self.memo.get(&exps) {
            return v;
        }
        let t = self.x.len() - exps.len();
        let xt = self.x[t];
        let differentiate = self.deriv.contains(t);
        let mut total = 0.0;
        let mut prev = None;
        for pos in 0..exps.len() {
            let e = exps[pos];
            if prev == Some(e) {
                continue;
            }
            prev = Some(e);
            let weight = if differentiate {
                if e == 0 {
                    continue;
                }
                e as f64 * xt.powi(e as i32 - 1)
            } else {
                xt.powi(e as i32)
            };
            let mut rest = exps.clone();
            rest.remove(pos);
            total += weight * self.assign(rest);
        }
        self.memo.insert(exps, total);
        total
    }
}

/// `C_κ(diag(x))` from the monomial expansion; zero when `κ` has more parts
/// than `x` has coordinates.
pub fn zonal_eval(kappa: &Partition, x: &[f64]) -> f64 {
    zonal_partial_eval(kappa, SubsetIndex::EMPTY, x)
}

/// `(Π_{j∈J} ∂/∂x_j) C_κ` at `x`, by term-wise differentiation of the
/// monomial expansion.
pub fn zonal_partial_eval(kappa: &Partition, deriv: SubsetIndex, x: &[f64]) -> f64 {
    let m = x.len();
    if kappa.len() > m {
        return 0.0;
    }
    if deriv.len() > kappa.weight() as usize {
        return 0.0;
    }
    let expansion = cached_expansion(kappa, m);
    let mut eval = MonomialEvaluator::new(x, deriv);
    expansion.iter().map(|(l, c)| c * eval.eval(l)).sum()
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, v| acc * BigInt::from(v))
}

/// Exact `C_κ(I_m)` from the closed form
/// `2^{2k} k! (m/2)_κ Π_{i<j≤p} (2κ_i − 2κ_j − i + j) / Π_{i≤p} (2κ_i + p − i)!`.
pub fn zonal_at_identity(kappa: &Partition, m: usize) -> BigRational {
    if kappa.len() > m {
        return BigRational::zero();
    }
    let k = kappa.weight() as u64;
    let p = kappa.len();
    let parts: Vec<i64> = kappa.parts().iter().map(|&v| v as i64).collect();
    let mut num = BigInt::from(4).pow(k as u32) * factorial(k);
    for i in 0..p {
        for j in (i + 1)..p {
            num *= BigInt::from(2 * parts[i] - 2 * parts[j] - (i as i64) + (j as i64));
        }
    }
    let den = (0..p).fold(BigInt::one(), |acc, i| {
        acc * factorial((2 * parts[i] + p as i64 - (i as i64 + 1)) as u64)
    });
    let half_m = BigRational::new(BigInt::from(m as i64), BigInt::from(2));
    gen_pochhammer_exact(&half_m, kappa) * BigRational::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(p: &[u32]) -> Partition {
        Partition::new(p).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    // Independent brute force: all weakly decreasing tuples by exhaustive
    // search over compositions.
    fn brute_force_partitions(k: u32, max_parts: usize, max_part: Option<u32>) -> usize {
        fn compositions(k: u32, out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>) {
            if k == 0 {
                out.push(cur.clone());
                return;
            }
            for p in 1..=k {
                cur.push(p);
                compositions(k - p, out, cur);
                cur.pop();
            }
        }
        let mut all = Vec::new();
        compositions(k, &mut all, &mut Vec::new());
        all.into_iter()
            .filter(|c| c.windows(2).all(|w| w[0] >= w[1]))
            .filter(|c| c.len() <= max_parts)
            .filter(|c| max_part.is_none_or(|r| c.iter().all(|&p| p <= r)))
            .count()
    }

    #[test]
    fn partition_rejects_increasing() {
        assert!(Partition::new(&[1, 2]).is_none());
        assert_eq!(part(&[2, 1, 0, 0]).parts(), &[2, 1]);
        assert_eq!(part(&[3, 1, 1]).conjugate().parts(), &[3, 1, 1]);
        assert_eq!(part(&[4, 2]).conjugate().parts(), &[2, 2, 1, 1]);
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(enumerate_partitions(0, 3, None), vec![Partition::empty()]);
        assert_eq!(enumerate_partitions(3, 2, None), vec![part(&[3]), part(&[2, 1])]);
        assert_eq!(
            enumerate_partitions(4, 3, Some(2)),
            vec![part(&[2, 2]), part(&[2, 1, 1])]
        );
        assert_eq!(
            enumerate_partitions(4, 4, None),
            vec![part(&[4]), part(&[3, 1]), part(&[2, 2]), part(&[2, 1, 1]), part(&[1, 1, 1, 1])]
        );
    }

    #[test]
    fn enumerate_counts_match_brute_force() {
        for k in 0..=12 {
            for max_parts in 1..=5 {
                for max_part in [None, Some(1), Some(3)] {
                    assert_eq!(
                        enumerate_partitions(k, max_parts, max_part).len(),
                        brute_force_partitions(k, max_parts, max_part),
                        "k={k} max_parts={max_parts} max_part={max_part:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(gen_pochhammer(1.7, &Partition::empty()), 1.0);
        assert_eq!(gen_pochhammer(2.0, &part(&[1])), 2.0);
        assert_eq!(gen_pochhammer(3.0, &part(&[2, 1])), 30.0);
        assert_eq!(gen_pochhammer_exact(&rat(3, 1), &part(&[2, 1])), rat(30, 1));
    }

    #[test]
    fn pochhammer_hits_exact_zero() {
        // a = (i−1)/2 − j + 1 for the cell (i, j) = (2, 2): a = -0.5
        assert_eq!(gen_pochhammer(-0.5, &part(&[2, 2])), 0.0);
        // a = -2, first row reaches j = 3
        assert_eq!(gen_pochhammer(-2.0, &part(&[3])), 0.0);
        assert_ne!(gen_pochhammer(-2.0, &part(&[2, 2])), 0.0);
    }

    #[test]
    fn small_expansions() {
        let e = zonal_expansion(&Partition::empty());
        assert_eq!(e.coefficients, vec![(Partition::empty(), rat(1, 1))]);
        let e = zonal_expansion(&part(&[1]));
        assert_eq!(e.coefficients, vec![(part(&[1]), rat(1, 1))]);
        let e = zonal_expansion(&part(&[2]));
        assert_eq!(e.coefficient(&part(&[2])), rat(1, 1));
        assert_eq!(e.coefficient(&part(&[1, 1])), rat(2, 3));
        let e = zonal_expansion(&part(&[1, 1]));
        assert_eq!(e.coefficient(&part(&[2])), rat(0, 1));
        assert_eq!(e.coefficient(&part(&[1, 1])), rat(4, 3));
    }

    // Σ_{κ ⊢ k} c_{κλ} must equal the multinomial coefficient k!/Π λ_i!,
    // the coefficient of m_λ in (x_1 + ... + x_n)^k.
    #[test]
    fn exact_sum_identity() {
        for k in 0..=7u32 {
            let kappas = enumerate_partitions(k, k.max(1) as usize, None);
            for lambda in &kappas {
                let total = kappas
                    .iter()
                    .map(|kappa| zonal_expansion(kappa).coefficient(lambda))
                    .fold(BigRational::zero(), |a, b| a + b);
                let multinomial = lambda
                    .parts()
                    .iter()
                    .fold(BigRational::from_integer(factorial(k as u64)), |acc, &p| {
                        acc / BigRational::from_integer(factorial(p as u64))
                    });
                assert_eq!(total, multinomial, "k={k} lambda={lambda}");
            }
        }
    }

    #[test]
    fn identity_closed_form_matches_expansion() {
        for k in 0..=6u32 {
            for m in 1..=4usize {
                for kappa in enumerate_partitions(k, m, None) {
                    let expansion = zonal_expansion(&kappa);
                    // m_λ(1,…,1) = number of distinct arrangements of λ in m slots
                    let from_expansion = expansion
                        .coefficients
                        .iter()
                        .filter(|(l, _)| l.len() <= m)
                        .map(|(l, c)| c * BigRational::from_integer(arrangements(l, m)))
                        .fold(BigRational::zero(), |a, b| a + b);
                    assert_eq!(from_expansion, zonal_at_identity(&kappa, m), "{kappa} m={m}");
                }
            }
        }
    }

    fn arrangements(lambda: &Partition, m: usize) -> BigInt {
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for &p in lambda.parts() {
            *counts.entry(p).or_default() += 1;
        }
        *counts.entry(0).or_default() += (m - lambda.len()) as u64;
        counts
            .values()
            .fold(factorial(m as u64), |acc, &c| acc / factorial(c))
    }

    #[test]
    fn zonal_eval_examples() {
        let x = [0.3, -1.2, 2.5];
        assert!((zonal_eval(&part(&[1]), &x) - 1.6).abs() < 1e-15);
        assert_eq!(zonal_eval(&part(&[1, 1, 1]), &[0.4, 0.7]), 0.0);
        assert_eq!(zonal_eval(&Partition::empty(), &x), 1.0);
    }

    #[test]
    fn zonal_partial_examples() {
        let x = [0.3, 0.8, 0.1];
        assert_eq!(zonal_partial_eval(&Partition::empty(), SubsetIndex::singleton(1), &x), 0.0);
        for j in 0..3 {
            assert_eq!(zonal_partial_eval(&part(&[1]), SubsetIndex::singleton(j), &x), 1.0);
        }
        // C_(2) = m_2 + (2/3) m_11, so ∂_1 C_(2) = 2 x_1 + (2/3)(x_2 + x_3)
        let d = zonal_partial_eval(&part(&[2]), SubsetIndex::singleton(0), &x);
        assert!((d - (0.6 + 2.0 / 3.0 * 0.9)).abs() < 1e-15);
    }

    #[test]
    fn f64_recurrence_matches_exact() {
        for kappa in enumerate_partitions(8, 4, None) {
            let exact: Vec<(Partition, BigRational)> = expansion_coefficients(&kappa, 4);
            let float: Vec<(Partition, f64)> = expansion_coefficients(&kappa, 4);
            for ((l1, c1), (l2, c2)) in exact.iter().zip(&float) {
                assert_eq!(l1, l2);
                let c1 = c1.to_f64().unwrap();
                assert!((c1 - c2).abs() <= 1e-13 * c1.abs(), "{kappa} {l1}");
            }
        }
    }
}

//! Distribution functions of the Wishart ratio `W₁W₂⁻¹` and its roots.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::hgm::{integrate_cdf, series_probability, IntegratorConfig, ProblemSpec};
use crate::mhg::{pfq_truncated, HyperParams, SeriesOptions, SeriesResult};
use crate::symfun::{enumerate_partitions, gen_pochhammer_exact, zonal_at_identity};

/// Symmetric matrix stored as its packed lower triangle (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix {
    m: usize,
    lower: Vec<f64>,
}

impl SpdMatrix {
    /// From full rows; rejects asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Parameter("matrix must be square".into()));
        }
        let mut lower = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in 0..=i {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::Parameter(format!("matrix is not symmetric at ({i}, {j})")));
                }
                lower.push(a);
            }
        }
        Ok(Self { m, lower })
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let m = d.len();
        let mut lower = vec![0.0; m * (m + 1) / 2];
        for (i, v) in d.iter().enumerate() {
            lower[i * (i + 1) / 2 + i] = *v;
        }
        Self { m, lower }
    }

    pub fn identity(m: usize) -> Self {
        Self::from_diagonal(&vec![1.0; m])
    }

    /// Symmetrizes a dense matrix by averaging it with its transpose.
    pub fn from_matrix(a: &DMatrix<f64>) -> Self {
        let m = a.nrows();
        let mut lower = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in 0..=i {
                lower.push(0.5 * (a[(i, j)] + a[(j, i)]));
            }
        }
        Self { m, lower }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.lower[i * (i + 1) / 2 + j]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |i, j| self.get(i, j))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.to_matrix()).eigenvalues.iter().cloned().collect()
    }
}

/// `ln Γ_m(a) = m(m−1)/4 · ln π + Σ_{i=1..m} ln Γ(a − (i−1)/2)`; `Γ_0 = 1`.
pub fn log_multigamma(m: usize, a: f64) -> Result<f64> {
    if m > 0 && !(a > 0.5 * (m as f64 - 1.0)) {
        return Err(Error::Domain(format!(
            "multivariate gamma of order {m} needs a > {}, got {a}",
            0.5 * (m as f64 - 1.0)
        )));
    }
    let mf = m as f64;
    let mut s = 0.25 * mf * (mf - 1.0) * std::f64::consts::PI.ln();
    for i in 0..m {
        s += libm::lgamma(a - 0.5 * i as f64);
    }
    Ok(s)
}

// Eigenvalues of A·B for symmetric A and positive definite B, via the
// similar symmetric matrix Lᵀ A L with B = L Lᵀ.
fn product_eigenvalues(a: &SpdMatrix, b: &SpdMatrix) -> Result<Vec<f64>> {
    let chol = Cholesky::new(b.to_matrix())
        .ok_or_else(|| Error::Domain("matrix is not positive definite".into()))?;
    let l = chol.l();
    let s = l.transpose() * a.to_matrix() * &l;
    Ok(SpdMatrix::from_matrix(&s).eigenvalues())
}

fn check_dims(n1: f64, n2: f64, m: usize) -> Result<()> {
    if !(n1 > m as f64 - 1.0 && n2 > m as f64 - 1.0) {
        return Err(Error::Parameter(format!("degrees of freedom ({n1}, {n2}) too small for m = {m}")));
    }
    Ok(())
}

/// Density of `U = W₂^{-1/2} W₁ W₂^{-1/2}` when `Σ₁ = I`.
pub fn ratio_density(n1: f64, n2: f64, u: &SpdMatrix, sigma2: &SpdMatrix) -> Result<f64> {
    let m = u.dim();
    if sigma2.dim() != m {
        return Err(Error::Parameter("U and Sigma2 differ in dimension".into()));
    }
    check_dims(n1, n2, m)?;
    let s2 = sigma2.to_matrix();
    let det_s2 = Cholesky::new(s2.clone())
        .ok_or_else(|| Error::Domain("Sigma2 is not positive definite".into()))?
        .determinant();
    let u_eigs = u.eigenvalues();
    if u_eigs.iter().any(|&v| v < -1e-12) {
        return Err(Error::Domain("U is not positive semidefinite".into()));
    }
    let det_u: f64 = u_eigs.iter().map(|v| v.max(0.0)).product();
    let det_i_s2u: f64 = product_eigenvalues(u, sigma2)?.iter().map(|v| 1.0 + v).product();
    let mf = m as f64;
    let exponent = 0.5 * (n1 - mf - 1.0);
    let log_det_u = if det_u > 0.0 {
        exponent * det_u.ln()
    } else if exponent > 0.0 {
        return Ok(0.0);
    } else if exponent == 0.0 {
        0.0
    } else {
        return Err(Error::Domain("density is unbounded at singular U".into()));
    };
    let log_c = log_multigamma(m, 0.5 * (n1 + n2))? - log_multigamma(m, 0.5 * n1)?
        - log_multigamma(m, 0.5 * n2)?
        + 0.5 * n1 * det_s2.ln();
    Ok((log_c - 0.5 * (n1 + n2) * det_i_s2u.ln() + log_det_u).exp())
}

/// A probability computed from a truncated series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub series: SeriesResult,
}

/// `P(U ≤ Ω)` by the alternating series in `−Σ₂Ω`; accurate only while
/// the eigenvalues of `Σ₂Ω` are small.
pub fn ratio_cdf_series(
    n1: f64,
    n2: f64,
    omega: &SpdMatrix,
    sigma2: &SpdMatrix,
    opts: SeriesOptions,
) -> Result<SeriesValue> {
    let m = omega.dim();
    if sigma2.dim() != m {
        return Err(Error::Parameter("Omega and Sigma2 differ in dimension".into()));
    }
    check_dims(n1, n2, m)?;
    let eigs = product_eigenvalues(sigma2, omega)?;
    if eigs.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("Sigma2 Omega must have positive eigenvalues".into()));
    }
    let mf = m as f64;
    let log_c = log_multigamma(m, 0.5 * (mf + 1.0))? + log_multigamma(m, 0.5 * (n1 + n2))?
        - log_multigamma(m, 0.5 * (n1 + mf + 1.0))?
        - log_multigamma(m, 0.5 * n2)?;
    let log_det: f64 = eigs.iter().map(|v| v.ln()).sum();
    let arg: Vec<f64> = eigs.iter().map(|v| -v).collect();
    let params = HyperParams::gauss(0.5 * n1, 0.5 * (n1 + n2), 0.5 * (n1 + mf + 1.0));
    let series = pfq_truncated(&params, &arg, opts)?;
    Ok(SeriesValue {
        value: (log_c + 0.5 * n1 * log_det).exp() * series.value,
        series,
    })
}

/// How [`max_root_cdf`] evaluates the distribution function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Hgm,
    Series,
    /// Null formula for equal `β`, series for small arguments or ties,
    /// HGM otherwise.
    Auto,
}

fn series_value(spec: &ProblemSpec, x: f64, cfg: &IntegratorConfig) -> Result<f64> {
    let opts = SeriesOptions {
        max_degree: cfg.max_degree,
        series_error: cfg.series_error,
    };
    let (p, s) = series_probability(spec, x, opts)?;
    if !s.converged {
        return Err(Error::SeriesNotConverged {
            degree: s.truncation_degree,
        });
    }
    Ok(p)
}

/// `Pr(l₁(W₁W₂⁻¹) ≤ x)`.
pub fn max_root_cdf(spec: &ProblemSpec, x: f64, method: Method, cfg: &IntegratorConfig) -> Result<f64> {
    spec.validate()?;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x = {x} must be non-negative")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    match method {
        Method::Series => series_value(spec, x, cfg),
        Method::Hgm => Ok(integrate_cdf(spec, cfg, &[x])?.points[0].probability),
        Method::Auto => {
            let b0 = spec.beta[0];
            if spec.beta.iter().all(|&b| b == b0) {
                return null_constantine(spec.m, spec.n1, spec.n2, x / b0, cfg);
            }
            let y_top = spec.argument(x).into_iter().fold(0.0, f64::max);
            if spec.tied_pair(cfg.gap).is_some() || y_top <= 0.5 {
                series_value(spec, x, cfg)
            } else {
                Ok(integrate_cdf(spec, cfg, &[x])?.points[0].probability)
            }
        }
    }
}

/// `Pr(l_m(W₁W₂⁻¹) ≥ x)`, from the largest root of `W₂W₁⁻¹` at `1/x`.
pub fn min_root_upper(spec: &ProblemSpec, x: f64, method: Method, cfg: &IntegratorConfig) -> Result<f64> {
    spec.validate()?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x = {x} must be positive")));
    }
    max_root_cdf(&spec.swapped(), 1.0 / x, method, cfg)
}

fn null_constant(m: usize, n1: f64, n2: f64) -> Result<f64> {
    let mf = m as f64;
    Ok(log_multigamma(m, 0.5 * (n1 + n2))? + log_multigamma(m, 0.5 * (mf + 1.0))?
        - log_multigamma(m, 0.5 * n2)?
        - log_multigamma(m, 0.5 * (n1 + mf + 1.0))?)
}

/// Null case `Σ₁ = Σ₂`: `Pr(l₁ ≤ x)` through the multivariate beta
/// distribution, with `2F1(n₁/2, (m+1−n₂)/2; (n₁+m+1)/2; t I)`, `t = x/(1+x)`.
pub fn null_constantine(m: usize, n1: f64, n2: f64, x: f64, cfg: &IntegratorConfig) -> Result<f64> {
    if m == 0 {
        return Err(Error::Parameter("dimension m must be positive".into()));
    }
    check_dims(n1, n2, m)?;
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("x = {x} must be non-negative")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mf = m as f64;
    let t = if x.is_infinite() { 1.0 } else { x / (1.0 + x) };
    let log_front = null_constant(m, n1, n2)? + 0.5 * n1 * mf * t.ln();
    if let Some(poly) = terminating_null_series(m, n1, n2, x) {
        return Ok(log_front.exp() * poly);
    }
    let params = HyperParams::gauss(0.5 * n1, 0.5 * (mf + 1.0 - n2), 0.5 * (n1 + mf + 1.0));
    let opts = SeriesOptions {
        max_degree: cfg.max_degree,
        series_error: cfg.series_error,
    };
    let series = pfq_truncated(&params, &vec![t; m], opts)?;
    if !series.converged {
        return Err(Error::SeriesNotConverged {
            degree: series.truncation_degree,
        });
    }
    Ok(log_front.exp() * series.value)
}

// For integer n₁, n₂ with (n₂ − m − 1)/2 = r a non-negative integer the
// series is a polynomial in t with alternating coefficients; summing it in
// exact arithmetic avoids the cancellation near t = 1.
fn terminating_null_series(m: usize, n1: f64, n2: f64, x: f64) -> Option<f64> {
    if n1.fract() != 0.0 || n2.fract() != 0.0 || !x.is_finite() {
        return None;
    }
    let twice_r = n2 as i64 - m as i64 - 1;
    if twice_r < 0 || twice_r % 2 != 0 {
        return None;
    }
    let r = (twice_r / 2) as u32;
    let half = |v: i64| BigRational::new(BigInt::from(v), BigInt::from(2));
    let a = half(n1 as i64);
    let b = BigRational::from_integer(BigInt::from(-(r as i64)));
    let c = half(n1 as i64 + m as i64 + 1);
    let xr = BigRational::from_float(x)?;
    let t = &xr / (&xr + BigRational::from_integer(BigInt::from(1)));
    let mut fact = BigInt::from(1);
    let mut power = BigRational::from_integer(BigInt::from(1));
    let mut sum = BigRational::zero();
    for k in 0..=(r as usize * m) as u32 {
        if k > 0 {
            fact *= k;
            power *= &t;
        }
        let mut d = BigRational::zero();
        for kappa in enumerate_partitions(k, m, Some(r)) {
            d += gen_pochhammer_exact(&a, &kappa) * gen_pochhammer_exact(&b, &kappa)
                / gen_pochhammer_exact(&c, &kappa)
                * zonal_at_identity(&kappa, m);
        }
        sum += d * &power / BigRational::from_integer(fact.clone());
    }
    sum.to_f64()
}

/// Coefficients `Σ*_{κ⊢k, κ₁≤r} (n₁/2)_κ C_κ(I_m) / k!` for `k = 0..r·m`,
/// `r = (n₂ − m − 1)/2`.
pub fn venables_coefficients(m: usize, n1: u32, n2: u32) -> Result<Vec<BigRational>> {
    if m == 0 || (n1 as usize) < m {
        return Err(Error::Parameter(format!("need n1 >= m >= 1, got m = {m}, n1 = {n1}")));
    }
    let twice_r = n2 as i64 - m as i64 - 1;
    if twice_r < 0 || twice_r % 2 != 0 {
        return Err(Error::Parameter(format!(
            "(n2 - m - 1)/2 = {}/2 must be a non-negative integer",
            twice_r
        )));
    }
    let r = (twice_r / 2) as u32;
    let half_n1 = BigRational::new(BigInt::from(n1), BigInt::from(2));
    let mut fact = BigInt::from(1);
    let mut out = Vec::new();
    for k in 0..=(r as usize * m) as u32 {
        if k > 0 {
            fact *= k;
        }
        let mut sum = BigRational::zero();
        for kappa in enumerate_partitions(k, m, Some(r)) {
            sum += gen_pochhammer_exact(&half_n1, &kappa) * zonal_at_identity(&kappa, m);
        }
        out.push(sum / BigRational::from_integer(fact.clone()));
    }
    Ok(out)
}

/// Null case by the finite sum `t^{n₁m/2} Σ_k coef_k (1+x)^{−k}`, valid
/// when `(n₂ − m − 1)/2` is a non-negative integer.
pub fn null_venables(m: usize, n1: u32, n2: u32, x: f64) -> Result<f64> {
    let coefs = venables_coefficients(m, n1, n2)?;
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("x = {x} must be non-negative")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let u = 1.0 / (1.0 + x);
    // Horner in u
    let poly = coefs
        .iter()
        .rev()
        .fold(0.0, |acc, c| acc * u + c.to_f64().unwrap_or(f64::NAN));
    let t = x / (1.0 + x);
    Ok(t.powf(0.5 * n1 as f64 * m as f64) * poly)
}

/// Density of `l₁` as a `3F2` series in `y_i = x/(β_i + x)`.
pub fn l1_density_khatri(spec: &ProblemSpec, x: f64, cfg: &IntegratorConfig) -> Result<SeriesValue> {
    spec.validate()?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x = {x} must be positive")));
    }
    let m = spec.m;
    let mf = m as f64;
    let (n1, n2) = (spec.n1, spec.n2);
    let log_c2 = libm::lgamma(0.5) + log_multigamma(m, 0.5 * (n1 + n2))? + log_multigamma(m - 1, 0.5 * mf + 1.0)?
        - libm::lgamma(0.5 * mf)
        - libm::lgamma(0.5 * n1)
        - log_multigamma(m, 0.5 * n2)?
        - log_multigamma(m - 1, 0.5 * (n1 + mf + 1.0))?;
    let beta_terms: f64 = spec
        .beta
        .iter()
        .map(|&b| 0.5 * n2 * b.ln() - 0.5 * (n1 + n2) * (b + x).ln())
        .sum();
    let params = HyperParams::new(
        vec![0.5 * (n1 + n2), 0.5 * mf + 1.0, 0.5 * (mf - 1.0)],
        vec![0.5 * mf, 0.5 * (n1 + mf + 1.0)],
    );
    let opts = SeriesOptions {
        max_degree: cfg.max_degree,
        series_error: cfg.series_error,
    };
    let series = pfq_truncated(&params, &spec.argument(x), opts)?;
    let log_f = log_c2 + beta_terms + (0.5 * mf * n1 - 1.0) * x.ln();
    Ok(SeriesValue {
        value: log_f.exp() * series.value,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn tight() -> IntegratorConfig {
        IntegratorConfig {
            series_error: 1e-14,
            ..Default::default()
        }
    }

    // Composite Simpson rule on [a, b].
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    // Composite midpoint rule, for integrands not evaluable at the ends.
    fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    // ∫_0^w f(u) du with u = s², which removes a √u endpoint singularity.
    fn sqrt_substituted(f: impl Fn(f64) -> f64, w: f64, n: usize) -> f64 {
        simpson(|s| 2.0 * s * f(s * s), 0.0, w.sqrt(), n)
    }

    #[test]
    fn multigamma_values() {
        assert!((log_multigamma(1, 3.7).unwrap() - libm::lgamma(3.7)).abs() < 1e-15);
        assert!((log_multigamma(2, 1.5).unwrap() - (std::f64::consts::PI / 2.0).ln()).abs() < 1e-14);
        assert_eq!(log_multigamma(0, 0.1).unwrap(), 0.0);
        for m in 1..=5usize {
            let a = 4.3;
            let direct: f64 = (1..=m).map(|i| libm::tgamma(a - (i as f64 - 1.0) / 2.0)).product::<f64>()
                * std::f64::consts::PI.powf((m * (m - 1)) as f64 / 4.0);
            assert!((log_multigamma(m, a).unwrap() - direct.ln()).abs() < 1e-12);
        }
        assert!(matches!(log_multigamma(3, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn scalar_ratio_density() {
        let s = SpdMatrix::identity(1);
        for u in [0.0, 0.3, 2.0, 17.0] {
            let f = ratio_density(2.0, 2.0, &SpdMatrix::from_diagonal(&[u]), &s).unwrap();
            assert!((f - (1.0 + u).powi(-2)).abs() < 1e-14);
        }
        // ∫_0^∞ (1+u)^{-2} du through u = t/(1−t)
        let total = midpoint(
            |t| {
                let u = t / (1.0 - t);
                ratio_density(2.0, 2.0, &SpdMatrix::from_diagonal(&[u]), &s).unwrap() / (1.0 - t).powi(2)
            },
            0.0,
            1.0,
            20000,
        );
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn density_invariant_under_rotation() {
        let u = SpdMatrix::from_rows(&[vec![1.2, 0.3], vec![0.3, 0.7]]).unwrap();
        let s2 = SpdMatrix::from_rows(&[vec![0.9, -0.2], vec![-0.2, 1.4]]).unwrap();
        let th: f64 = 0.7;
        let q = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let rot = |a: &SpdMatrix| SpdMatrix::from_matrix(&(&q * a.to_matrix() * q.transpose()));
        let f1 = ratio_density(5.0, 7.0, &u, &s2).unwrap();
        let f2 = ratio_density(5.0, 7.0, &rot(&u), &rot(&s2)).unwrap();
        assert!((f1 - f2).abs() < 1e-12 * f1);
    }

    #[test]
    fn scalar_ratio_cdf_series() {
        // m = 1: P(U ≤ w) = ∫_0^w f
        let s = SpdMatrix::from_diagonal(&[1.3]);
        let opts = SeriesOptions { max_degree: 400, series_error: 1e-15 };
        for w in [0.05, 0.2, 0.5] {
            let v = ratio_cdf_series(3.0, 5.0, &SpdMatrix::from_diagonal(&[w]), &s, opts).unwrap();
            let q = sqrt_substituted(
                |u| ratio_density(3.0, 5.0, &SpdMatrix::from_diagonal(&[u]), &s).unwrap(),
                w,
                4000,
            );
            assert!((v.value - q).abs() < 1e-7, "{w}: {} vs {q}", v.value);
        }
        let tiny = ratio_cdf_series(3.0, 5.0, &SpdMatrix::from_diagonal(&[1e-12]), &s, opts).unwrap();
        assert!(tiny.value < 1e-15);
    }

    #[test]
    fn ratio_cdf_at_scalar_multiple_of_identity() {
        let spec = ProblemSpec::new(2, 6.0, 8.0, vec![2.0, 3.0]).unwrap();
        let sigma2 = SpdMatrix::from_diagonal(&[0.5, 1.0 / 3.0]);
        let opts = SeriesOptions { max_degree: 200, series_error: 1e-15 };
        let x = 0.4;
        let v = ratio_cdf_series(6.0, 8.0, &SpdMatrix::from_diagonal(&[x, x]), &sigma2, opts).unwrap();
        let p = max_root_cdf(&spec, x, Method::Series, &tight()).unwrap();
        assert!((v.value - p).abs() < 1e-10 * p, "{} vs {p}", v.value);
        // similarity invariance in Ω
        let omega = SpdMatrix::from_rows(&[vec![0.3, 0.05], vec![0.05, 0.2]]).unwrap();
        let a = ratio_cdf_series(6.0, 8.0, &omega, &sigma2, opts).unwrap().value;
        let th: f64 = 0.4;
        let q = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let s_rot = SpdMatrix::from_matrix(&(&q * sigma2.to_matrix() * q.transpose()));
        let o_rot = SpdMatrix::from_matrix(&(&q * omega.to_matrix() * q.transpose()));
        let c = ratio_cdf_series(6.0, 8.0, &o_rot, &s_rot, opts).unwrap().value;
        assert!((a - c).abs() < 1e-12 * a);
    }

    #[test]
    fn printed_venables_coefficients() {
        let c = venables_coefficients(3, 6, 10).unwrap();
        let expected = [1, 9, 45, 165, 360, 531, 539, 330, 135, 30];
        assert_eq!(c.len(), expected.len());
        for (got, e) in c.iter().zip(expected) {
            assert_eq!(*got, BigRational::from_i64(e).unwrap());
        }
        assert!(matches!(venables_coefficients(3, 6, 9), Err(Error::Parameter(_))));
        assert!((null_venables(3, 6, 10, 1e12).unwrap() - 1.0).abs() < 1e-9);
    }

    // The first printed null polynomial in t = x/(1+x), evaluated exactly
    // (its alternating coefficients cancel badly in floating point).
    fn printed_constantine(x: f64) -> f64 {
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let xr = BigRational::from_float(x).unwrap();
        let t = &xr / (&xr + r(1, 1));
        let c = [r(1, 1), r(-27, 5), r(13, 1), r(-55, 3), r(184, 11), r(-113, 11), r(9149, 2145), r(-166, 143), r(27, 143), r(-2, 143)];
        let poly = c.iter().rev().fold(BigRational::zero(), |acc, v| acc * &t + v);
        let mut t9 = r(2145, 1);
        for _ in 0..9 {
            t9 *= &t;
        }
        (t9 * poly).to_f64().unwrap()
    }

    #[test]
    fn null_formulas_agree_with_printed_polynomials() {
        for x in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let c = null_constantine(3, 6.0, 10.0, x, &IntegratorConfig::default()).unwrap();
            let v = null_venables(3, 6, 10, x).unwrap();
            let p = printed_constantine(x);
            assert!((c - v).abs() < 1e-12, "{x}: {c} vs {v}");
            assert!((c - p).abs() < 1e-10, "{x}: {c} vs {p}");
        }
        assert_eq!(null_constantine(3, 6.0, 10.0, 0.0, &IntegratorConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn scalar_null_is_beta_cdf() {
        // m = 1, n1 = n2 = 2: Pr(F ≤ x) = x/(1+x)
        for x in [0.2, 1.0, 7.0] {
            let c = null_constantine(1, 2.0, 2.0, x, &tight()).unwrap();
            assert!((c - x / (1.0 + x)).abs() < 1e-12);
        }
        // m = 1, n1 = 3, n2 = 5 against quadrature of the ratio density
        let s = SpdMatrix::identity(1);
        let x = 1.7;
        let q = sqrt_substituted(|u| ratio_density(3.0, 5.0, &SpdMatrix::from_diagonal(&[u]), &s).unwrap(), x, 4000);
        let c = null_constantine(1, 3.0, 5.0, x, &tight()).unwrap();
        assert!((c - q).abs() < 1e-7);
    }

    #[test]
    fn null_max_root_matches_constantine() {
        let spec = ProblemSpec::new(3, 6.0, 10.0, vec![1.0; 3]).unwrap();
        for x in [0.2, 0.5] {
            let s = max_root_cdf(&spec, x, Method::Series, &tight()).unwrap();
            let c = null_constantine(3, 6.0, 10.0, x, &tight()).unwrap();
            assert!((s - c).abs() < 1e-10, "{s} vs {c}");
        }
        let a = max_root_cdf(&spec, 1.0, Method::Auto, &tight()).unwrap();
        assert!((a - printed_constantine(1.0)).abs() < 1e-10);
        assert!(matches!(
            max_root_cdf(&spec, 1.0, Method::Hgm, &tight()),
            Err(Error::DiagonalSingularity { .. })
        ));
    }

    #[test]
    fn min_root_duality_and_limits() {
        let spec = ProblemSpec::new(2, 5.0, 7.0, vec![1.5, 4.0]).unwrap();
        let x = 3.0;
        let a = min_root_upper(&spec, x, Method::Series, &tight()).unwrap();
        let b = max_root_cdf(&spec.swapped(), 1.0 / x, Method::Series, &tight()).unwrap();
        assert_eq!(a, b);
        let near_zero = min_root_upper(&spec, 1e-6, Method::Auto, &tight()).unwrap();
        assert!((near_zero - 1.0).abs() < 1e-6);
    }

    #[test]
    fn khatri_density_scalar_and_limits() {
        // m = 1 reduces to the scaled beta-prime density of x/β
        let spec = ProblemSpec::new(1, 4.0, 6.0, vec![2.0]).unwrap();
        let x = 1.3;
        let f = l1_density_khatri(&spec, x, &tight()).unwrap().value;
        let s = SpdMatrix::from_diagonal(&[0.5]);
        let g = ratio_density(4.0, 6.0, &SpdMatrix::from_diagonal(&[x]), &s).unwrap();
        assert!((f - g).abs() < 1e-12 * g, "{f} vs {g}");

        let spec = ProblemSpec::new(2, 6.0, 8.0, vec![1.0, 2.0]).unwrap();
        assert!(l1_density_khatri(&spec, 1e-8, &tight()).unwrap().value < 1e-20);
    }

    #[test]
    fn khatri_density_integrates_to_cdf() {
        let spec = ProblemSpec::new(2, 6.0, 8.0, vec![1.0, 2.0]).unwrap();
        let cfg = tight();
        let upper = 0.8;
        let q = simpson(|x| if x == 0.0 { 0.0 } else { l1_density_khatri(&spec, x, &cfg).unwrap().value }, 0.0, upper, 400);
        let p = max_root_cdf(&spec, upper, Method::Series, &cfg).unwrap();
        assert!((q - p).abs() < 1e-4 * p, "{q} vs {p}");
    }

    #[test]
    fn spd_matrix_storage() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.get(1, 0), 1.0);
        assert!(SpdMatrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 3.0]]).is_err());
        let mut e = a.eigenvalues();
        e.sort_by(f64::total_cmp);
        assert!((e[0] + e[1] - 5.0).abs() < 1e-12);
    }
}

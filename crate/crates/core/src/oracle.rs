//! Monte Carlo reference values for the extreme roots of `W₁W₂⁻¹`.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dist::SpdMatrix;
use crate::error::{Error, Result};
use crate::hgm::ProblemSpec;

const BATCH: usize = 4096;

/// Empirical probability with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub x: f64,
    pub probability: f64,
    pub standard_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl McEstimate {
    fn from_count(x: f64, count: usize, n: usize, seed: u64) -> Self {
        let p = count as f64 / n as f64;
        Self {
            x,
            probability: p,
            standard_error: (p * (1.0 - p) / n as f64).sqrt(),
            n_samples: n,
            seed,
        }
    }

    /// Binomial standard error if the true probability were `p`.
    pub fn standard_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.n_samples as f64).sqrt()
    }

    /// Whether `value` lies within `k` standard errors of the estimate.
    /// When the estimate is 0 or 1 its own standard error vanishes, and the
    /// one implied by `value` is used instead.
    pub fn contains(&self, value: f64, k: f64) -> bool {
        let se = if self.probability == 0.0 || self.probability == 1.0 {
            self.standard_error_at(value.clamp(0.0, 1.0))
        } else {
            self.standard_error
        };
        (value - self.probability).abs() <= k * se
    }
}

fn wishart_matrix<R: Rng + ?Sized>(n: f64, scale_eigs: &[f64], rng: &mut R) -> Result<DMatrix<f64>> {
    let m = scale_eigs.len();
    if !(n >= m as f64) {
        return Err(Error::Parameter(format!("Wishart degrees of freedom {n} below dimension {m}")));
    }
    // Bartlett factor: χ_{n−i} on the diagonal, N(0,1) below it
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        let chi2 = ChiSquared::new(n - i as f64).map_err(|e| Error::Parameter(e.to_string()))?;
        a[(i, i)] = chi2.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    for i in 0..m {
        let s = scale_eigs[i].sqrt();
        for j in 0..m {
            a[(i, j)] *= s;
        }
    }
    Ok(&a * a.transpose())
}

/// One draw from `W_m(n, diag(scale_eigs))`.
pub fn sample_wishart<R: Rng + ?Sized>(n: f64, scale_eigs: &[f64], rng: &mut R) -> Result<SpdMatrix> {
    if let Some(s) = scale_eigs.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::Parameter(format!("scale eigenvalues must be positive, got {s}")));
    }
    Ok(SpdMatrix::from_matrix(&wishart_matrix(n, scale_eigs, rng)?))
}

// Smallest and largest eigenvalues of the pencil (W₁, W₂) through W₂ = LLᵀ.
fn pencil_extremes(w1: DMatrix<f64>, w2: DMatrix<f64>) -> (f64, f64) {
    let l = match Cholesky::new(w2) {
        Some(c) => c.l(),
        None => return (f64::NAN, f64::NAN),
    };
    let left = l.solve_lower_triangular(&w1).expect("Cholesky factor is nonsingular");
    let c = l
        .solve_lower_triangular(&left.transpose())
        .expect("Cholesky factor is nonsingular");
    let sym = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    (eig.min(), eig.max())
}

/// `(l_m, l₁)` for `n_samples` independent draws of `W₁ ~ W(n₁, diag β)`,
/// `W₂ ~ W(n₂, I)`. Batch `b` uses stream `b` of a ChaCha generator seeded
/// by `seed`, so the output does not depend on thread scheduling.
pub fn root_samples(spec: &ProblemSpec, n_samples: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    let ones = vec![1.0; spec.m];
    let batches = n_samples.div_ceil(BATCH);
    let results: Result<Vec<Vec<(f64, f64)>>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = BATCH.min(n_samples - b * BATCH);
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                let w1 = wishart_matrix(spec.n1, &spec.beta, &mut rng)?;
                let w2 = wishart_matrix(spec.n2, &ones, &mut rng)?;
                out.push(pencil_extremes(w1, w2));
            }
            Ok(out)
        })
        .collect();
    Ok(results?.into_iter().flatten().collect())
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples < 1000 {
        return Err(Error::Parameter(format!("need at least 1000 samples, got {n_samples}")));
    }
    Ok(())
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical `Pr(l₁ ≤ x)` at every `x`, all from one shared sample.
pub fn empirical_max_root_cdf(
    spec: &ProblemSpec,
    xs: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    check_samples(n_samples)?;
    let l1 = sorted(root_samples(spec, n_samples, seed)?.into_iter().map(|s| s.1).collect());
    Ok(xs
        .iter()
        .map(|&x| McEstimate::from_count(x, l1.partition_point(|&v| v <= x), n_samples, seed))
        .collect())
}

/// Empirical `Pr(l_m ≥ x)` at every `x`, all from one shared sample.
pub fn empirical_min_root_upper(
    spec: &ProblemSpec,
    xs: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    check_samples(n_samples)?;
    let lm = sorted(root_samples(spec, n_samples, seed)?.into_iter().map(|s| s.0).collect());
    Ok(xs
        .iter()
        .map(|&x| McEstimate::from_count(x, n_samples - lm.partition_point(|&v| v < x), n_samples, seed))
        .collect())
}

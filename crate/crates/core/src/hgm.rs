//! Holonomic gradient method for `Pr(l₁(W₁W₂⁻¹) < x)`.
//!
//! With `y_i(x) = x / (β_i + x)` the distribution function is
//!
//! ```text
//! Pr(l₁ < x) = exp(ℓ(x)) · 2F1((m+1)/2, (n₁+n₂)/2; (n₁+m+1)/2; y(x)),
//! ```
//!
//! where `ℓ` is [`log_prefactor`]. The vector `F = (∂_J 2F1)_J` is
//! initialized by the series at a small `x₀` and then carried along the
//! curve `x ↦ y(x)` through the Pfaffian system. We integrate
//! `G = exp(ℓ(x)) F`, whose first entry is the probability itself, so
//! tolerances are in probability units:
//!
//! ```text
//! dG/dx = ℓ'(x) G + Σ_i β_i/(β_i+x)² · P_i(y(x)) G.
//! ```

use std::fmt;

use crate::dist::log_multigamma;
use crate::error::{Error, Result};
use crate::mhg::{pfq_truncated, pfq_with_derivs, HyperParams, SeriesOptions, SeriesResult};
use crate::pfaffian::{GaussParams, PointCoefficients, DEFAULT_GAP};

/// Dimension, degrees of freedom and the eigenvalues `β` of `Σ₂⁻¹Σ₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub m: usize,
    pub n1: f64,
    pub n2: f64,
    pub beta: Vec<f64>,
}

impl ProblemSpec {
    pub fn new(m: usize, n1: f64, n2: f64, beta: Vec<f64>) -> Result<Self> {
        let spec = Self { m, n1, n2, beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m;
        if m == 0 {
            return Err(Error::Parameter("dimension m must be positive".into()));
        }
        if self.beta.len() != m {
            return Err(Error::Parameter(format!(
                "beta has {} entries but m = {m}",
                self.beta.len()
            )));
        }
        if let Some(b) = self.beta.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::Parameter(format!("beta entries must be positive, got {b}")));
        }
        for (name, n) in [("n1", self.n1), ("n2", self.n2)] {
            if !(n.is_finite() && n >= m as f64) {
                return Err(Error::Parameter(format!("{name} = {n} must be at least m = {m}")));
            }
        }
        Ok(())
    }

    /// Spec with `n₁ ↔ n₂` and `β → 1/β`, for the smallest root.
    pub fn swapped(&self) -> Self {
        Self {
            m: self.m,
            n1: self.n2,
            n2: self.n1,
            beta: self.beta.iter().map(|b| 1.0 / b).collect(),
        }
    }

    /// First pair of eigenvalues closer than `gap` relative to their size.
    pub fn tied_pair(&self, gap: f64) -> Option<(usize, usize)> {
        for i in 0..self.m {
            for j in i + 1..self.m {
                let scale = self.beta[i].max(self.beta[j]);
                if (self.beta[i] - self.beta[j]).abs() < gap * scale {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// `(a, b, c) = ((m+1)/2, (n₁+n₂)/2, (n₁+m+1)/2)`.
    pub fn gauss_params(&self) -> GaussParams {
        let m = self.m as f64;
        GaussParams {
            a: 0.5 * (m + 1.0),
            b: 0.5 * (self.n1 + self.n2),
            c: 0.5 * (self.n1 + m + 1.0),
            m: self.m,
        }
    }

    pub fn hyper_params(&self) -> HyperParams {
        let g = self.gauss_params();
        HyperParams::gauss(g.a, g.b, g.c)
    }

    /// Eigenvalues `y_i = x / (β_i + x)` of `x(Σ₂⁻¹Σ₁ + x I)⁻¹`.
    pub fn argument(&self, x: f64) -> Vec<f64> {
        self.beta.iter().map(|b| x / (b + x)).collect()
    }
}

/// `ℓ(x) = ln[Γ_m((n₁+n₂)/2) Γ_m((m+1)/2) / (Γ_m(n₂/2) Γ_m((n₁+m+1)/2))]
///        + (n₁m/2) ln x + (n₂/2) Σ ln β_i − ((n₁+n₂)/2) Σ ln(β_i + x)`.
pub fn log_prefactor(spec: &ProblemSpec, x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x = {x} must be positive")));
    }
    let m = spec.m;
    let mf = m as f64;
    let (n1, n2) = (spec.n1, spec.n2);
    let constant = log_multigamma(m, 0.5 * (n1 + n2))? + log_multigamma(m, 0.5 * (mf + 1.0))?
        - log_multigamma(m, 0.5 * n2)?
        - log_multigamma(m, 0.5 * (n1 + mf + 1.0))?;
    let beta_terms: f64 = spec
        .beta
        .iter()
        .map(|&b| 0.5 * n2 * b.ln() - 0.5 * (n1 + n2) * (b + x).ln())
        .sum();
    Ok(constant + 0.5 * n1 * mf * x.ln() + beta_terms)
}

// ℓ'(x)
fn log_prefactor_slope(spec: &ProblemSpec, x: f64) -> f64 {
    let s: f64 = spec.beta.iter().map(|b| 1.0 / (b + x)).sum();
    0.5 * spec.n1 * spec.m as f64 / x - 0.5 * (spec.n1 + spec.n2) * s
}

/// Absolute tolerance of the integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AbsErr {
    /// `|f_K − f_{K−1}| · Pr(x₀) / f_K` from the initial series, floored at 1e-300.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub q0: f64,
    pub series_error: f64,
    pub x0value_min: f64,
    pub abs_err: AbsErr,
    pub rel_err: f64,
    pub max_degree: usize,
    /// Bound on the doublings (and, separately, halvings) of `x₀`.
    pub max_retries: usize,
    /// Largest accepted `y_i(x₀)` before `x₀` is halved.
    pub y_max: f64,
    pub gap: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            q0: 0.3,
            series_error: 1e-5,
            x0value_min: 1e-60,
            abs_err: AbsErr::Auto,
            rel_err: 1e-10,
            max_degree: 200,
            max_retries: 20,
            y_max: 0.97,
            gap: DEFAULT_GAP,
            max_steps: 2_000_000,
        }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("q0", self.q0),
            ("series_error", self.series_error),
            ("x0value_min", self.x0value_min),
            ("rel_err", self.rel_err),
            ("gap", self.gap),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let AbsErr::Fixed(v) = self.abs_err {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("abs_err must be positive, got {v}")));
            }
        }
        if !(self.y_max > 0.0 && self.y_max < 1.0) {
            return Err(Error::Parameter(format!("y_max must lie in (0, 1), got {}", self.y_max)));
        }
        Ok(())
    }

    fn series_options(&self) -> SeriesOptions {
        SeriesOptions {
            max_degree: self.max_degree,
            series_error: self.series_error,
        }
    }
}

/// Point on the integration path: `F` is the unscaled derivative vector.
#[derive(Clone, Debug, PartialEq)]
pub struct HgmState {
    pub x: f64,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
}

/// Accepted starting point of the integration.
#[derive(Clone, Debug, PartialEq)]
pub struct Initialization {
    pub x0: f64,
    pub state: HgmState,
    pub series: SeriesResult,
    pub log_prefactor: f64,
    /// `Pr(l₁ < x₀)`.
    pub probability: f64,
    /// `|f_K − f_{K−1}| · Pr(x₀) / f_K`.
    pub suggested_abs_err: f64,
}

// Cheap proxy for the work needed at y: the degree at which the scalar
// series 2F1(a, b; c; y_max) has settled to the requested accuracy.
fn predicted_degree(g: &GaussParams, y_max: f64, series_error: f64, cap: usize) -> usize {
    let (mut term, mut sum) = (1.0f64, 1.0f64);
    for k in 0..cap {
        let kf = k as f64;
        term *= (g.a + kf) * (g.b + kf) / ((g.c + kf) * (kf + 1.0)) * y_max;
        sum += term;
        if term < series_error * 1e-2 * sum && (g.a + kf + 1.0) * (g.b + kf + 1.0) * y_max < (g.c + kf + 1.0) * (kf + 2.0) {
            return k + 1;
        }
    }
    cap + 1
}

/// Chooses `x₀` and evaluates `F(y(x₀))` by the series.
///
/// Starting from `q0`, `x₀` is halved while some `y_i(x₀)` exceeds
/// `y_max` or the series would need more than `max_degree` terms, and
/// doubled while `Pr(l₁ < x₀) < x0value_min`. Needing both is reported as
/// an initialization error.
pub fn initial_vector(spec: &ProblemSpec, cfg: &IntegratorConfig) -> Result<Initialization> {
    spec.validate()?;
    cfg.validate()?;
    if let Some((i, j)) = spec.tied_pair(cfg.gap) {
        return Err(Error::DiagonalSingularity { i, j, gap: cfg.gap });
    }
    let g = spec.gauss_params();
    let params = spec.hyper_params();
    let opts = cfg.series_options();
    let mut x0 = cfg.q0;
    let (mut halvings, mut doublings) = (0, 0);
    let mut raised = false;
    loop {
        let y = spec.argument(x0);
        let y_top = y.iter().cloned().fold(0.0, f64::max);
        let too_slow = y_top > cfg.y_max
            || predicted_degree(&g, y_top, cfg.series_error, cfg.max_degree) > cfg.max_degree;
        if too_slow {
            if raised {
                return Err(Error::Initialization(format!(
                    "the initial value Pr(l1 < x0) is below x0value_min = {:e} at every x0 where the \
                     series converges (gave up at x0 = {x0}); the probability is effectively zero there",
                    cfg.x0value_min
                )));
            }
            halvings += 1;
            if halvings > cfg.max_retries {
                return Err(Error::Initialization(format!(
                    "could not find x0 with all y_i(x0) <= {} after {} halvings",
                    cfg.y_max, cfg.max_retries
                )));
            }
            x0 *= 0.5;
            continue;
        }
        let lp = log_prefactor(spec, x0)?;
        let ln_floor = cfg.x0value_min.ln();
        // F ≥ 1, so a large prefactor already settles the threshold; a tiny
        // one can only be rescued by an enormous series value, which the
        // degree guard above has ruled out.
        let series = if lp < ln_floor - 700.0 {
            None
        } else {
            Some(pfq_with_derivs(&params, &y, opts)?)
        };
        let probability = match &series {
            Some(s) => (lp + s.series.value.ln()).exp(),
            None => 0.0,
        };
        if probability < cfg.x0value_min {
            if halvings > 0 && !raised {
                return Err(Error::Initialization(format!(
                    "Pr(l1 < x0) = {probability:e} < x0value_min = {:e} at x0 = {x0}, \
                     but larger x0 puts the series near its singularity",
                    cfg.x0value_min
                )));
            }
            raised = true;
            doublings += 1;
            if doublings > cfg.max_retries {
                return Err(Error::Initialization(format!(
                    "the initial value is zero: Pr(l1 < x0) = {probability:e} stays below \
                     x0value_min = {:e} after {} doublings of x0",
                    cfg.x0value_min, cfg.max_retries
                )));
            }
            x0 *= 2.0;
            continue;
        }
        let s = series.expect("series evaluated above");
        if !s.series.converged {
            return Err(Error::Initialization(format!(
                "series did not converge by degree {} at x0 = {x0}",
                s.series.truncation_degree
            )));
        }
        let f_k = s.series.value;
        let suggested = (s.series.last_increment() * probability / f_k).max(1e-300);
        return Ok(Initialization {
            x0,
            state: HgmState {
                x: x0,
                y,
                f: s.derivatives,
            },
            series: s.series,
            log_prefactor: lp,
            probability,
            suggested_abs_err: suggested,
        });
    }
}

/// `Pr(l₁ < x)` from the series alone (slow when some `y_i` is near 1).
pub fn series_probability(
    spec: &ProblemSpec,
    x: f64,
    opts: SeriesOptions,
) -> Result<(f64, SeriesResult)> {
    spec.validate()?;
    if x == 0.0 {
        return Ok((
            0.0,
            SeriesResult {
                value: 1.0,
                partial_sums_by_degree: vec![1.0],
                truncation_degree: 0,
                converged: true,
            },
        ));
    }
    let lp = log_prefactor(spec, x)?;
    let s = pfq_truncated(&spec.hyper_params(), &spec.argument(x), opts)?;
    Ok(((lp + s.value.ln()).exp(), s))
}

/// Non-fatal findings reported alongside a curve.
#[derive(Clone, Debug, PartialEq)]
pub enum Warning {
    /// The fixed absolute tolerance exceeds the initial probability.
    AbsErrNotSmallEnough { abs_err: f64, initial_probability: f64 },
    /// The curve decreased by more than the tolerance slack.
    NonMonotone { x: f64, drop: f64 },
    /// `count` outputs left `[0, 1]` by more than `rel_err` and were
    /// clamped; `raw` at `x` is the worst of them.
    Clamped { count: usize, x: f64, raw: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::AbsErrNotSmallEnough {
                abs_err,
                initial_probability,
            } => write!(
                f,
                "abserr seems not to be small enough: abserr = {abs_err:e} but Pr(x0) = \
                 {initial_probability:e}; decrease abserr or increase q0"
            ),
            Warning::NonMonotone { x, drop } => write!(
                f,
                "output decreases by {drop:e} at x = {x}; the curve is unreliable \
                 (abserr seems not to be small enough)"
            ),
            Warning::Clamped { count, x, raw } => write!(
                f,
                "{count} probabilities outside [0, 1] were clamped (worst {raw} at x = {x})"
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdfPoint {
    pub x: f64,
    /// Clamped to `[0, 1]`.
    pub probability: f64,
    pub raw: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdfCurve {
    pub x0: f64,
    pub initial_probability: f64,
    pub truncation_degree: usize,
    pub abs_err: f64,
    pub points: Vec<CdfPoint>,
    pub warnings: Vec<Warning>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// `Pr(l₁ < x)` at each target.
///
/// Targets must be ascending. Targets at or above the accepted `x₀` are
/// reached by integration (stepping exactly onto each target); targets
/// below it are evaluated by the series.
pub fn integrate_cdf(spec: &ProblemSpec, cfg: &IntegratorConfig, targets: &[f64]) -> Result<CdfCurve> {
    if targets.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Parameter("targets must be ascending".into()));
    }
    if let Some(t) = targets.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::Parameter(format!("targets must be positive, got {t}")));
    }
    let init = initial_vector(spec, cfg)?;
    let abs_err = match cfg.abs_err {
        AbsErr::Auto => init.suggested_abs_err,
        AbsErr::Fixed(v) => v,
    };
    let mut warnings = Vec::new();
    if abs_err > init.probability {
        warnings.push(Warning::AbsErrNotSmallEnough {
            abs_err,
            initial_probability: init.probability,
        });
    }

    let scale = init.log_prefactor.exp();
    let mut g: Vec<f64> = init.state.f.iter().map(|v| v * scale).collect();
    let mut system = System::new(spec, cfg.gap);
    let mut stepper = Stepper::new(abs_err, cfg.rel_err, cfg.max_steps);
    let mut x = init.x0;
    let mut raw_values = Vec::with_capacity(targets.len());
    for &t in targets {
        if t < init.x0 {
            let (p, _) = series_probability(spec, t, cfg.series_options())?;
            raw_values.push((t, p));
            continue;
        }
        stepper.advance(&mut system, &mut x, &mut g, t)?;
        raw_values.push((t, g[0]));
    }

    let mut points = Vec::with_capacity(raw_values.len());
    let mut previous: Option<f64> = None;
    let mut clamped: Option<Warning> = None;
    for (t, raw) in raw_values {
        if let Some(p) = previous {
            let slack = 10.0 * cfg.rel_err * p.abs() + abs_err;
            if raw < p - slack {
                warnings.push(Warning::NonMonotone { x: t, drop: p - raw });
            }
        }
        previous = Some(raw);
        let probability = raw.clamp(0.0, 1.0);
        let excess = (raw - probability).abs();
        if excess > cfg.rel_err {
            clamped = Some(match clamped {
                Some(Warning::Clamped { count, x, raw: worst }) if (worst - worst.clamp(0.0, 1.0)).abs() >= excess => {
                    Warning::Clamped { count: count + 1, x, raw: worst }
                }
                Some(Warning::Clamped { count, .. }) => Warning::Clamped { count: count + 1, x: t, raw },
                _ => Warning::Clamped { count: 1, x: t, raw },
            });
        }
        points.push(CdfPoint { x: t, probability, raw });
    }
    warnings.extend(clamped);
    Ok(CdfCurve {
        x0: init.x0,
        initial_probability: init.probability,
        truncation_degree: init.series.truncation_degree,
        abs_err,
        points,
        warnings,
        accepted_steps: stepper.accepted,
        rejected_steps: stepper.rejected,
    })
}

// Right-hand side of the ODE for G.
struct System<'a> {
    spec: &'a ProblemSpec,
    params: GaussParams,
    gap: f64,
    weights: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> System<'a> {
    fn new(spec: &'a ProblemSpec, gap: f64) -> Self {
        Self {
            spec,
            params: spec.gauss_params(),
            gap,
            weights: vec![0.0; spec.m],
            scratch: Vec::new(),
        }
    }

    fn eval(&mut self, x: f64, g: &[f64], out: &mut [f64]) -> Result<()> {
        let y = self.spec.argument(x);
        let coef = PointCoefficients::with_gap(&y, &self.params, self.gap)?;
        for (w, b) in self.weights.iter_mut().zip(&self.spec.beta) {
            *w = b / ((b + x) * (b + x));
        }
        coef.weighted_apply(&self.weights, g, &mut self.scratch, out);
        let slope = log_prefactor_slope(self.spec, x);
        for (o, v) in out.iter_mut().zip(g) {
            *o += slope * v;
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus the embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper {
    abs_err: f64,
    rel_err: f64,
    max_steps: usize,
    h: Option<f64>,
    fsal: Option<Vec<f64>>,
    accepted: usize,
    rejected: usize,
}

impl Stepper {
    fn new(abs_err: f64, rel_err: f64, max_steps: usize) -> Self {
        Self {
            abs_err,
            rel_err,
            max_steps,
            h: None,
            fsal: None,
            accepted: 0,
            rejected: 0,
        }
    }

    fn advance(&mut self, sys: &mut System, x: &mut f64, g: &mut Vec<f64>, target: f64) -> Result<()> {
        let n = g.len();
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
        let mut stage = vec![0.0; n];
        let mut next = vec![0.0; n];
        if self.fsal.is_none() {
            let mut k0 = vec![0.0; n];
            sys.eval(*x, g, &mut k0)?;
            self.fsal = Some(k0);
        }
        let mut h = self.h.unwrap_or(0.01 * *x);
        while *x < target {
            if self.accepted + self.rejected >= self.max_steps {
                return Err(Error::Integration {
                    x: *x,
                    reason: format!("step limit {} reached", self.max_steps),
                });
            }
            let remaining = target - *x;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            if !clipped && step < 1e-14 * x.abs() {
                return Err(Error::Integration {
                    x: *x,
                    reason: "step size underflow; try a smaller abs_err or a larger q0".into(),
                });
            }
            k[0].copy_from_slice(self.fsal.as_ref().expect("first stage"));
            for s in 1..7 {
                for (idx, v) in stage.iter_mut().enumerate() {
                    let mut acc = g[idx];
                    for (j, a) in A[s].iter().enumerate().take(s) {
                        acc += step * a * k[j][idx];
                    }
                    *v = acc;
                }
                if s == 6 {
                    next.copy_from_slice(&stage);
                }
                let (done, rest) = k.split_at_mut(s);
                let _ = done;
                sys.eval(*x + C[s] * step, &stage, &mut rest[0])?;
            }
            let mut err: f64 = 0.0;
            for idx in 0..n {
                let e: f64 = (0..7).map(|s| E[s] * k[s][idx]).sum::<f64>() * step;
                let sc = self.abs_err + self.rel_err * g[idx].abs().max(next[idx].abs());
                err = err.max(e.abs() / sc);
            }
            if !err.is_finite() {
                self.rejected += 1;
                h = step * 0.2;
                continue;
            }
            if err <= 1.0 {
                self.accepted += 1;
                *x = if clipped { target } else { *x + step };
                g.copy_from_slice(&next);
                self.fsal = Some(k[6].clone());
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // keep the unclipped proposal so clipping does not shrink later steps
                h = if clipped { h.max(step * factor) } else { step * factor };
            } else {
                self.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

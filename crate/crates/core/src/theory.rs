//! Closed-form quantities behind the experiments: rescaled sample sizes,
//! the information-theoretic sample threshold, chi-squared tail bounds with
//! Monte Carlo validators, and the exact even-degree survival series.
//!
//! Natural logarithms throughout; the rescaled-sample-size axis is only
//! defined up to a constant, so the base is fixed once here.

use crate::numerics::Rng;
use crate::{Error, Result};

/// A sample-size/dimension/sparsity triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalingPoint {
    n: usize,
    p: usize,
    k: usize,
}

impl ScalingPoint {
    pub fn new(n: usize, p: usize, k: usize) -> Result<Self> {
        if k == 0 || k >= p {
            return Err(Error::InvalidInput(format!(
                "need 1 <= k < p, got k={k}, p={p}"
            )));
        }
        if p - k < 2 {
            return Err(Error::InvalidInput(format!(
                "need p - k >= 2 for a positive log, got p={p}, k={k}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidInput("sample count must be positive".into()));
        }
        Ok(ScalingPoint { n, p, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Rescaled sample size governing diagonal thresholding:
    /// `n / (k^2 ln(p - k))`.
    pub fn theta_dia(&self) -> f64 {
        let k = self.k as f64;
        self.n as f64 / (k * k * ((self.p - self.k) as f64).ln())
    }

    /// Rescaled sample size governing the semidefinite relaxation:
    /// `n / (k ln(p - k))`.
    pub fn theta_sdp(&self) -> f64 {
        self.n as f64 / (self.k as f64 * ((self.p - self.k) as f64).ln())
    }
}

/// The constant `(1 + beta) / beta^2`: below this rescaled sample size no
/// decoder can keep the error probability under one half.
pub fn fano_threshold(beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "signal strength must be positive and finite, got {beta}"
        )));
    }
    Ok((1.0 + beta) / (beta * beta))
}

/// Sample count below which recovery fails with probability at least one
/// half: `fano_threshold(beta) * k * ln(p - k)`.
pub fn min_samples_info(p: usize, k: usize, beta: f64) -> Result<f64> {
    if k == 0 || k >= p || p - k < 2 {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k < p with p - k >= 2, got k={k}, p={p}"
        )));
    }
    Ok(fano_threshold(beta)? * k as f64 * ((p - k) as f64).ln())
}

/// Deviation thresholds sharing a tail bound of `exp(-x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationBounds {
    /// Upper deviation from the mean at which `P[X >= mean + upper_dev]`
    /// is at most `bound`.
    pub upper_dev: f64,
    /// Lower deviation: `P[X <= mean - lower_dev] <= bound`.
    pub lower_dev: f64,
    pub bound: f64,
}

/// Central chi-squared deviations: `P[X - d >= 2 sqrt(dx) + 2x] <= e^-x`
/// and `P[X - d <= -2 sqrt(dx)] <= e^-x`.
pub fn chisq_upper_bounds(d: usize, x: f64) -> Result<DeviationBounds> {
    if d == 0 {
        return Err(Error::InvalidInput("degrees of freedom must be >= 1".into()));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "exponent argument must be finite and nonnegative, got {x}"
        )));
    }
    let root = 2.0 * (d as f64 * x).sqrt();
    Ok(DeviationBounds {
        upper_dev: root + 2.0 * x,
        lower_dev: root,
        bound: (-x).exp(),
    })
}

/// Relative-deviation variant of the central upper tail:
/// `P[X - d >= d x] <= exp(-3 d x^2 / 16)` for `0 <= x < 1/2`.
/// Returns the deviation `d * x` and the bound.
pub fn chisq_relative_tail_bound(d: usize, x: f64) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::InvalidInput("degrees of freedom must be >= 1".into()));
    }
    if !(0.0..0.5).contains(&x) {
        return Err(Error::InvalidInput(format!(
            "relative deviation must lie in [0, 1/2), got {x}"
        )));
    }
    let d = d as f64;
    Ok((d * x, (-3.0 / 16.0 * d * x * x).exp()))
}

/// Noncentral chi-squared deviations about the mean `d + nu`:
/// `P[X >= (d+nu) + 2 sqrt((d+2nu)x) + 2x] <= e^-x` and
/// `P[X <= (d+nu) - 2 sqrt((d+2nu)x)] <= e^-x`. With `nu = 0` these reduce
/// to the central forms.
pub fn noncentral_chisq_bounds(d: usize, nu: f64, x: f64) -> Result<DeviationBounds> {
    if d == 0 {
        return Err(Error::InvalidInput("degrees of freedom must be >= 1".into()));
    }
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidInput(format!(
            "noncentrality must be finite and nonnegative, got {nu}"
        )));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "exponent argument must be finite and positive, got {x}"
        )));
    }
    let root = 2.0 * ((d as f64 + 2.0 * nu) * x).sqrt();
    Ok(DeviationBounds {
        upper_dev: root + 2.0 * x,
        lower_dev: root,
        bound: (-x).exp(),
    })
}

/// Weakened upper tail valid when `nu <= c * d`: for `delta` in (0, 1),
/// `P[X >= (d + nu) + 4 d sqrt(delta)] <= exp(-delta d / (1 + 2c))`.
/// Returns the absolute threshold and the bound.
pub fn noncentral_chisq_weakened_bound(
    d: usize,
    nu: f64,
    delta: f64,
    c: f64,
) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::InvalidInput("degrees of freedom must be >= 1".into()));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidInput(format!(
            "the noncentrality cap factor must be positive, got {c}"
        )));
    }
    if !(nu >= 0.0) || nu > c * d as f64 {
        return Err(Error::InvalidInput(format!(
            "noncentrality {nu} outside [0, {}]",
            c * d as f64
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let d = d as f64;
    let threshold = (d + nu) + 4.0 * d * delta.sqrt();
    let bound = (-delta * d / (1.0 + 2.0 * c)).exp();
    Ok((threshold, bound))
}

fn check_even_degrees(n: usize, t: f64) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "the survival series needs even degrees >= 2, got {n}"
        )));
    }
    if !(t > -1.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "relative threshold must be finite and > -1, got {t}"
        )));
    }
    Ok(())
}

/// Natural log of `P[X/n > 1 + t]` for even-degree chi-squared `X`, via
/// the finite series `exp(-L) sum_{i<n/2} L^i/i!` with `L = n(1+t)/2`,
/// accumulated in the log domain so degrees up to 10^4 do not overflow.
pub fn log_chisq_survival_even(n: usize, t: f64) -> Result<f64> {
    check_even_degrees(n, t)?;
    let lambda = n as f64 * (1.0 + t) / 2.0;
    let log_lambda = lambda.ln();
    let mut log_term = 0.0_f64;
    let mut log_sum = 0.0_f64;
    for i in 1..n / 2 {
        log_term += log_lambda - (i as f64).ln();
        let (hi, lo) = if log_sum >= log_term {
            (log_sum, log_term)
        } else {
            (log_term, log_sum)
        };
        log_sum = hi + (lo - hi).exp().ln_1p();
    }
    Ok((log_sum - lambda).min(0.0))
}

/// Exact survival probability `P[X/n > 1 + t]` for even-degree
/// chi-squared `X`, clamped to `[0, 1]`.
pub fn chisq_survival_even(n: usize, t: f64) -> Result<f64> {
    Ok(log_chisq_survival_even(n, t)?.exp().clamp(0.0, 1.0))
}

/// Whether the exact survival dominates `(c / sqrt(n)) exp(-n t^2 / 2)`
/// for `t` in (0, 1). Compared in the log domain; `c` is an empirical
/// fixture, not a universal constant.
pub fn chisq_survival_lower_bound_check(n: usize, t: f64, c: f64) -> Result<bool> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidInput(format!(
            "relative threshold must lie in (0, 1), got {t}"
        )));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidInput(format!(
            "comparison constant must be positive, got {c}"
        )));
    }
    let log_survival = log_chisq_survival_even(n, t)?;
    let log_floor = c.ln() - 0.5 * (n as f64).ln() - n as f64 * t * t / 2.0;
    Ok(log_survival >= log_floor)
}

/// A Monte Carlo proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub p_hat: f64,
    pub std_err: f64,
}

impl McEstimate {
    fn from_counts(hits: usize, draws: usize) -> Self {
        let p_hat = hits as f64 / draws as f64;
        McEstimate {
            p_hat,
            std_err: (p_hat * (1.0 - p_hat) / draws as f64).sqrt(),
        }
    }
}

/// One-pass Monte Carlo tail estimates for a (non)central chi-squared with
/// `d` degrees and noncentrality `nu`: the fraction of draws at or above
/// `upper` and at or below `lower`. Noncentral draws use
/// `||g + sqrt(nu) e_1||^2`, exact by rotational invariance.
pub fn chisq_tail_counts(
    d: usize,
    nu: f64,
    upper: f64,
    lower: f64,
    draws: usize,
    rng: &mut Rng,
) -> Result<(McEstimate, McEstimate)> {
    if d == 0 || draws == 0 {
        return Err(Error::InvalidInput(
            "degrees of freedom and draw count must be positive".into(),
        ));
    }
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidInput(format!(
            "noncentrality must be finite and nonnegative, got {nu}"
        )));
    }
    let shift = nu.sqrt();
    let mut hi = 0usize;
    let mut lo = 0usize;
    for _ in 0..draws {
        let first = rng.standard_normal() + shift;
        let mut x = first * first;
        for _ in 1..d {
            let g = rng.standard_normal();
            x += g * g;
        }
        if x >= upper {
            hi += 1;
        }
        if x <= lower {
            lo += 1;
        }
    }
    Ok((
        McEstimate::from_counts(hi, draws),
        McEstimate::from_counts(lo, draws),
    ))
}

/// Log-determinant of `ensemble::mixture_covariance(p, k, beta)` in closed
/// form:
/// `ln(1+beta) + ln(1 - (beta/(1+beta)) (p-k)/(k(p-k+1))) + (p-k) ln(1 + beta/(k(p-k+1)))`.
pub fn mixture_logdet_closed_form(p: usize, k: usize, beta: f64) -> Result<f64> {
    if k == 0 || k >= p {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k < p, got k={k}, p={p}"
        )));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "signal strength must be positive and finite, got {beta}"
        )));
    }
    let m = (p - k + 1) as f64;
    let kk = k as f64;
    let rest = (p - k) as f64;
    Ok((1.0 + beta).ln()
        + (1.0 - beta / (1.0 + beta) * rest / (kk * m)).ln()
        + rest * (1.0 + beta / (kk * m)).ln())
}

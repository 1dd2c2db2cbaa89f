//! Binary KL divergence and its inverse.
//!
//! `kl(q, p)` is the KL divergence between Bernoulli(q) and Bernoulli(p).
//! `kl_inverse(q, psi)` is the largest `p >= q` with `kl(q, p) <= psi`, the
//! worst true risk compatible with an empirical risk `q` and a budget `psi`.

use crate::error::{check_unit, invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Default absolute tolerance on `p` for [`kl_inverse`].
pub const DEFAULT_TOL: f64 = 1e-12;

/// Budgets below this are rejected by [`kl_inverse_grad`].
pub const GRAD_PSI_GUARD: f64 = 1e-12;

const UPPER: f64 = 1.0 - 1e-15;
const MAX_ITER: usize = 200;

/// An empirical risk `q` paired with a true risk `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskPair {
    pub q: f64,
    pub p: f64,
}

impl RiskPair {
    pub fn new(q: f64, p: f64) -> Result<Self> {
        check_unit("q", q)?;
        check_unit("p", p)?;
        Ok(Self { q, p })
    }

    pub fn kl(&self) -> Result<f64> {
        kl(self.q, self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlInverseResult {
    pub p_star: f64,
    pub iterations: usize,
    /// `|kl(q || p_star) - psi|`
    pub residual: f64,
}

// q ln(q/p) with 0 ln 0 = 0, written through ln_1p so that q close to p
// keeps full relative precision.
fn xlogx_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * ((a - b) / b).ln_1p()
    }
}

/// Binary KL divergence `q ln(q/p) + (1-q) ln((1-q)/(1-p))`.
///
/// Returns [`Error::DivergenceInfinite`] when `p` is 0 or 1 and `q != p`.
pub fn kl(q: f64, p: f64) -> Result<f64> {
    check_unit("q", q)?;
    check_unit("p", p)?;
    if q == p {
        return Ok(0.0);
    }
    if p == 0.0 || p == 1.0 {
        return Err(Error::DivergenceInfinite { q, p });
    }
    let v = xlogx_ratio(q, p) + xlogx_ratio(1.0 - q, 1.0 - p);
    Ok(v.max(0.0))
}

/// `kl(q, p) - 2 (q - p)^2`, nonnegative by Pinsker's inequality.
pub fn pinsker_gap(q: f64, p: f64) -> Result<f64> {
    Ok(kl(q, p)? - 2.0 * (q - p) * (q - p))
}

/// Largest `p` in `[q, 1)` with `kl(q, p) <= psi`, found by bisection.
pub fn kl_inverse(q: f64, psi: f64, tol: f64) -> Result<KlInverseResult> {
    check_unit("q", q)?;
    if !psi.is_finite() {
        return Err(invalid("psi", format!("{psi} is not finite")));
    }
    if psi < 0.0 {
        return Err(invalid("psi", format!("{psi} is negative")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("{tol} must be positive")));
    }
    if q == 1.0 {
        return Ok(KlInverseResult { p_star: 1.0, iterations: 0, residual: 0.0 });
    }
    if psi == 0.0 {
        return Ok(KlInverseResult { p_star: q, iterations: 0, residual: 0.0 });
    }

    let f = |p: f64| kl(q, p).unwrap_or(f64::INFINITY);
    let top = f(UPPER);
    if top <= psi {
        return Ok(KlInverseResult { p_star: UPPER, iterations: 0, residual: psi - top });
    }

    let (mut lo, mut hi) = (q, UPPER);
    let mut iterations = 0;
    while hi - lo > tol && iterations < MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= psi {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(KlInverseResult { p_star: lo, iterations, residual: (f(lo) - psi).abs() })
}

/// Shorthand for `kl_inverse(q, psi, DEFAULT_TOL).p_star`.
pub fn kl_inv(q: f64, psi: f64) -> Result<f64> {
    Ok(kl_inverse(q, psi, DEFAULT_TOL)?.p_star)
}

/// Partial derivatives `(d/dq, d/dpsi)` of `kl_inverse(q, psi)`.
///
/// With `p = kl_inverse(q, psi)`, implicit differentiation of
/// `kl(q, p) = psi` gives
///
/// ```text
/// d/dpsi = 1 / ((1-q)/(1-p) - q/p)
/// d/dq   = (ln((1-q)/(1-p)) - ln(q/p)) / ((1-q)/(1-p) - q/p)
/// ```
pub fn kl_inverse_grad(q: f64, psi: f64) -> Result<(f64, f64)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid("q", format!("{q} is outside (0, 1)")));
    }
    if !psi.is_finite() {
        return Err(invalid("psi", format!("{psi} is not finite")));
    }
    if psi < GRAD_PSI_GUARD {
        return Err(Error::DegeneratePoint(format!(
            "psi = {psi} is below the guard {GRAD_PSI_GUARD}"
        )));
    }
    let p = kl_inverse(q, psi, 1e-16)?.p_star;
    let a = (1.0 - q) / (1.0 - p);
    let b = q / p;
    let denom = a - b;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::DegeneratePoint(format!("vanishing denominator at q = {q}, psi = {psi}")));
    }
    let log_a = ((p - q) / (1.0 - p)).ln_1p();
    let log_b = ((q - p) / p).ln_1p();
    Ok(((log_a - log_b) / denom, 1.0 / denom))
}

//! Divergences between equal-variance isotropic Gaussians and between
//! finite discrete measures.

use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// `N(mean, variance * I)` over weight space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotropicGaussian {
    mean: Vec<f64>,
    variance: f64,
}

impl IsotropicGaussian {
    pub fn new(mean: Vec<f64>, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(invalid("variance", format!("{variance} must be positive and finite")));
        }
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(invalid("mean", "entries must be finite"));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

fn matched_sq_dist(q: &IsotropicGaussian, p: &IsotropicGaussian) -> Result<f64> {
    if q.variance != p.variance {
        return Err(invalid(
            "variance",
            format!("only equal variances are supported ({} vs {})", q.variance, p.variance),
        ));
    }
    sq_dist(&q.mean, &p.mean)
}

/// Rényi divergence `alpha ||w - v||^2 / (2 sigma^2)`.
pub fn renyi_gaussian(q: &IsotropicGaussian, p: &IsotropicGaussian, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(invalid("alpha", format!("{alpha} must be finite and > 1")));
    }
    Ok(alpha * matched_sq_dist(q, p)? / (2.0 * q.variance))
}

/// `KL(q || p) = ||w - v||^2 / (2 sigma^2)`.
pub fn kl_gaussian(q: &IsotropicGaussian, p: &IsotropicGaussian) -> Result<f64> {
    Ok(matched_sq_dist(q, p)? / (2.0 * q.variance))
}

/// Log density ratio `ln Q(h)/P(h)` at `h = w + eps` for `Q = N(w, sigma2 I)`
/// and `P = N(v, sigma2 I)`: `(||w + eps - v||^2 - ||eps||^2) / (2 sigma2)`.
/// May be negative.
pub fn disintegrated_kl_gaussian(w: &[f64], eps: &[f64], v: &[f64], sigma2: f64) -> Result<f64> {
    if w.len() != eps.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: eps.len() });
    }
    if w.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: v.len() });
    }
    if !(sigma2 > 0.0) {
        return Err(invalid("sigma2", format!("{sigma2} must be positive")));
    }
    // ||w+eps-v||^2 - ||eps||^2 = ||w-v||^2 + 2 <w-v, eps>, which avoids
    // cancelling two large norms when sigma2 is small.
    let mut acc = 0.0;
    for i in 0..w.len() {
        let d = w[i] - v[i];
        acc += d * (d + 2.0 * eps[i]);
    }
    Ok(acc / (2.0 * sigma2))
}

/// A probability vector over a finite index set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteMeasure {
    probs: Vec<f64>,
}

impl DiscreteMeasure {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("probs", "empty"));
        }
        if probs.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(invalid("probs", "entries must be finite and nonnegative"));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > Self::SUM_TOL {
            return Err(invalid("probs", format!("sum is {s}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights into a measure.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(invalid("weights", "entries must be finite and nonnegative"));
        }
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) {
            return Err(invalid("weights", "total mass is zero"));
        }
        Ok(Self { probs: weights.into_iter().map(|x| x / s).collect() })
    }

    /// Normalizes `exp(log_weights)` stably.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        let mx = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !mx.is_finite() {
            return Err(invalid("log_weights", "no finite maximum"));
        }
        Self::from_weights(log_weights.iter().map(|&l| (l - mx).exp()).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "empty support"));
        }
        Ok(Self { probs: vec![1.0 / n as f64; n] })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

impl TryFrom<Vec<f64>> for DiscreteMeasure {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiscreteMeasure> for Vec<f64> {
    fn from(m: DiscreteMeasure) -> Self {
        m.probs
    }
}

pub(crate) fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let mx = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx.is_infinite() {
        return mx;
    }
    mx + xs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

fn same_len(q: &DiscreteMeasure, p: &DiscreteMeasure) -> Result<()> {
    if q.len() != p.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), got: q.len() });
    }
    Ok(())
}

/// `(1/(alpha-1)) ln sum_h p(h) (q(h)/p(h))^alpha`, evaluated in log space.
pub fn renyi_discrete(q: &DiscreteMeasure, p: &DiscreteMeasure, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(invalid("alpha", format!("{alpha} must be finite and > 1")));
    }
    same_len(q, p)?;
    let mut terms = Vec::with_capacity(q.len());
    for (i, (&qi, &pi)) in q.probs.iter().zip(&p.probs).enumerate() {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Err(Error::AbsoluteContinuity { index: i });
        }
        terms.push(pi.ln() + alpha * (qi.ln() - pi.ln()));
    }
    Ok((log_sum_exp(terms) / (alpha - 1.0)).max(0.0))
}

/// `KL(q || p) = sum_h q ln(q/p)`.
pub fn kl_discrete(q: &DiscreteMeasure, p: &DiscreteMeasure) -> Result<f64> {
    same_len(q, p)?;
    let mut acc = 0.0;
    for (i, (&qi, &pi)) in q.probs.iter().zip(&p.probs).enumerate() {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Err(Error::AbsoluteContinuity { index: i });
        }
        acc += qi * (qi / pi).ln();
    }
    Ok(acc.max(0.0))
}

/// `chi^2 = e^{D_2} - 1`; saturates to `+inf` on overflow.
pub fn chi2_from_renyi2(d2: f64) -> Result<f64> {
    if !(d2 >= 0.0) {
        return Err(invalid("d2", format!("{d2} must be nonnegative")));
    }
    Ok(d2.exp_m1())
}

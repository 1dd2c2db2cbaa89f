//! Bound calculators.
//!
//! Every kl-form bound here reads `kl(R_S(h) || R_D(h)) <= psi` and is turned
//! into a certified risk by [`kl_inverse`](crate::binary_kl::kl_inverse).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::binary_kl::kl_inv;
use crate::divergences::{disintegrated_kl_gaussian, log_sum_exp, sq_dist, DiscreteMeasure, IsotropicGaussian};
use crate::error::{check_unit, invalid, Error, Result};

/// Default Catoni grid `{10^k : k = -3..=3}`.
pub fn default_c_grid() -> Vec<f64> {
    (-3..=3).map(|k| 10f64.powi(k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    pub m: usize,
    pub delta: f64,
    pub t_priors: usize,
    pub alpha: f64,
}

impl BoundContext {
    pub fn new(m: usize, delta: f64, t_priors: usize, alpha: f64) -> Result<Self> {
        if m < 1 {
            return Err(invalid("m", "must be at least 1"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", format!("{delta} is outside (0, 1)")));
        }
        if t_priors < 1 {
            return Err(invalid("T", "must be at least 1"));
        }
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(invalid("alpha", format!("{alpha} must be finite and > 1")));
        }
        Ok(Self { m, delta, t_priors, alpha })
    }

    /// Context with `alpha = 2`.
    pub fn with_defaults(m: usize, delta: f64, t_priors: usize) -> Result<Self> {
        Self::new(m, delta, t_priors, 2.0)
    }

    fn mf(&self) -> f64 {
        self.m as f64
    }

    fn tf(&self) -> f64 {
        self.t_priors as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ours,
    Rivasplata,
    Blanchard,
    Catoni,
    Stochastic,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Ours, Method::Rivasplata, Method::Blanchard, Method::Catoni, Method::Stochastic];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::Rivasplata => "rivasplata",
            Method::Blanchard => "blanchard",
            Method::Catoni => "catoni",
            Method::Stochastic => "stochastic",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid("method", format!("unknown method {s:?}")))
    }
}

/// One bound evaluation.
///
/// `psi` can be recomputed from `divergence` and `log_term`:
///
/// - ours, rivasplata, catoni, stochastic: `(divergence + log_term) / m`
/// - blanchard: `((m+1)/m * divergence + log_term) / m`
///
/// with rivasplata and blanchard clamped at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub method: Method,
    pub m: usize,
    pub delta: f64,
    #[serde(rename = "T")]
    pub t_priors: usize,
    pub sigma2: Option<f64>,
    pub empirical_risk: f64,
    pub divergence: f64,
    pub log_term: f64,
    pub psi: f64,
    pub certified_risk: f64,
    pub extras: BTreeMap<String, f64>,
}

/// `2 sqrt(m)`, the closed upper bound on `E e^{m kl(R_S || R_D)}`.
pub fn maurer_moment_bound(m: usize) -> f64 {
    2.0 * (m as f64).sqrt()
}

/// Log term of the T-prior bound at order `alpha`:
/// `alpha/(alpha-1) ln(2/delta) + ln(2T/delta) + ln(2 sqrt(m))`.
/// At `alpha = 2` this is `ln(16 T sqrt(m) / delta^3)`.
pub fn ours_log_term(ctx: &BoundContext) -> f64 {
    let a = ctx.alpha;
    a / (a - 1.0) * (2.0 / ctx.delta).ln()
        + (2.0 * ctx.tf() / ctx.delta).ln()
        + maurer_moment_bound(ctx.m).ln()
}

fn rivasplata_log_term(ctx: &BoundContext) -> f64 {
    (2.0 * ctx.tf() * ctx.mf().sqrt() / ctx.delta).ln()
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(invalid("sigma2", format!("{sigma2} must be positive and finite")));
    }
    Ok(())
}

/// The Gaussian-posterior bound driven by the Rényi divergence of order
/// `ctx.alpha` between `N(w, sigma2 I)` and `N(v, sigma2 I)`.
pub fn bound_ours(ctx: &BoundContext, r_s: f64, w: &[f64], v: &[f64], sigma2: f64) -> Result<BoundReport> {
    bound_ours_sq(ctx, r_s, sq_dist(w, v)?, sigma2)
}

/// [`bound_ours`] from a precomputed `||w - v||^2`.
pub fn bound_ours_sq(ctx: &BoundContext, r_s: f64, sq_dist: f64, sigma2: f64) -> Result<BoundReport> {
    check_unit("empirical risk", r_s)?;
    check_sigma2(sigma2)?;
    if !(sq_dist >= 0.0) {
        return Err(invalid("sq_dist", format!("{sq_dist} must be nonnegative")));
    }
    let divergence = ctx.alpha * sq_dist / (2.0 * sigma2);
    let log_term = ours_log_term(ctx);
    let psi = (divergence + log_term) / ctx.mf();
    let certified_risk = kl_inv(r_s, psi)?;
    let mut extras = BTreeMap::new();
    extras.insert("alpha".into(), ctx.alpha);
    extras.insert("disintegration_overhead".into(), (log_term - rivasplata_log_term(ctx)) / ctx.mf());
    Ok(BoundReport {
        method: Method::Ours,
        m: ctx.m,
        delta: ctx.delta,
        t_priors: ctx.t_priors,
        sigma2: Some(sigma2),
        empirical_risk: r_s,
        divergence,
        log_term,
        psi,
        certified_risk,
        extras,
    })
}

fn check_c_grid(c_grid: &[f64]) -> Result<()> {
    if c_grid.is_empty() {
        return Err(invalid("c_grid", "must be nonempty"));
    }
    if c_grid.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
        return Err(invalid("c_grid", "entries must be positive and finite"));
    }
    Ok(())
}

/// Catoni's bound `(1 - exp(-c r_s - psi)) / (1 - exp(-c))` for one `c`.
pub fn catoni_value(c: f64, r_s: f64, psi: f64) -> f64 {
    -(-c * r_s - psi).exp_m1() / -(-c).exp_m1()
}

/// Baselines driven by the disintegrated KL `ln Q(h)/P(h)` at `h = w + eps`.
#[allow(clippy::too_many_arguments)]
pub fn bound_baseline(
    ctx: &BoundContext,
    method: Method,
    r_s: f64,
    w: &[f64],
    eps: &[f64],
    v: &[f64],
    sigma2: f64,
    c_grid: &[f64],
) -> Result<BoundReport> {
    check_sigma2(sigma2)?;
    let dkl = disintegrated_kl_gaussian(w, eps, v, sigma2)?;
    bound_baseline_from_dkl(ctx, method, r_s, dkl, Some(sigma2), c_grid)
}

/// [`bound_baseline`] from a precomputed disintegrated KL.
pub fn bound_baseline_from_dkl(
    ctx: &BoundContext,
    method: Method,
    r_s: f64,
    dkl: f64,
    sigma2: Option<f64>,
    c_grid: &[f64],
) -> Result<BoundReport> {
    check_unit("empirical risk", r_s)?;
    if !dkl.is_finite() {
        return Err(invalid("dkl", format!("{dkl} is not finite")));
    }
    let m = ctx.mf();
    let mut extras = BTreeMap::new();
    let (log_term, psi, certified_risk) = match method {
        Method::Rivasplata => {
            let log_term = rivasplata_log_term(ctx);
            let raw = (dkl + log_term) / m;
            extras.insert("psi_unclamped".into(), raw);
            let psi = raw.max(0.0);
            (log_term, psi, kl_inv(r_s, psi)?)
        }
        Method::Blanchard => {
            let log_term = (ctx.tf() * (m + 1.0) / ctx.delta).ln();
            let raw = ((m + 1.0) / m * dkl + log_term) / m;
            extras.insert("psi_unclamped".into(), raw);
            let psi = raw.max(0.0);
            (log_term, psi, kl_inv(r_s, psi)?)
        }
        Method::Catoni => {
            check_c_grid(c_grid)?;
            let log_term = (ctx.tf() * c_grid.len() as f64 / ctx.delta).ln();
            let psi = (dkl + log_term) / m;
            let (mut best_c, mut best) = (c_grid[0], f64::INFINITY);
            for &c in c_grid {
                let b = catoni_value(c, r_s, psi);
                if b < best {
                    best = b;
                    best_c = c;
                }
            }
            extras.insert("c".into(), best_c);
            (log_term, psi, best.clamp(0.0, 1.0))
        }
        other => {
            return Err(invalid("method", format!("{other} is not a disintegrated-KL baseline")));
        }
    };
    Ok(BoundReport {
        method,
        m: ctx.m,
        delta: ctx.delta,
        t_priors: ctx.t_priors,
        sigma2,
        empirical_risk: r_s,
        divergence: dkl,
        log_term,
        psi,
        certified_risk,
        extras,
    })
}

/// Randomized bound on the Gibbs risk, estimated from `n` sampled nets.
///
/// The mean sampled risk is first inverted with budget `ln(4/delta)/n`, and
/// that value is then inverted with budget `(KL + ln(4T sqrt(m)/delta))/m`.
pub fn bound_stochastic(
    ctx: &BoundContext,
    risks_n: &[f64],
    w: &[f64],
    v: &[f64],
    sigma2: f64,
) -> Result<BoundReport> {
    check_sigma2(sigma2)?;
    bound_stochastic_sq(ctx, risks_n, sq_dist(w, v)?, sigma2)
}

/// [`bound_stochastic`] from a precomputed `||w - v||^2`.
pub fn bound_stochastic_sq(ctx: &BoundContext, risks_n: &[f64], sq_dist: f64, sigma2: f64) -> Result<BoundReport> {
    check_sigma2(sigma2)?;
    if risks_n.is_empty() {
        return Err(invalid("risks", "need at least one sampled risk"));
    }
    for &r in risks_n {
        check_unit("risk", r)?;
    }
    let n = risks_n.len() as f64;
    let mean = risks_n.iter().sum::<f64>() / n;
    let inner_psi = (4.0 / ctx.delta).ln() / n;
    let inner = kl_inv(mean, inner_psi)?;
    let divergence = sq_dist / (2.0 * sigma2);
    let log_term = (4.0 * ctx.tf() * ctx.mf().sqrt() / ctx.delta).ln();
    let psi = (divergence + log_term) / ctx.mf();
    let certified_risk = kl_inv(inner, psi)?;
    let mut extras = BTreeMap::new();
    extras.insert("n".into(), n);
    extras.insert("inner_psi".into(), inner_psi);
    extras.insert("inner_risk".into(), inner);
    Ok(BoundReport {
        method: Method::Stochastic,
        m: ctx.m,
        delta: ctx.delta,
        t_priors: ctx.t_priors,
        sigma2: Some(sigma2),
        empirical_risk: mean,
        divergence,
        log_term,
        psi,
        certified_risk,
        extras,
    })
}

/// `((2a-1)/(a-1)) ln(2/delta) + D_a + log_moment`, the bound on
/// `(a/(a-1)) ln phi(h, S)`; `log_moment` is `ln E_S' E_P phi^{a/(a-1)}`.
pub fn theorem2_rhs(d_alpha: f64, alpha: f64, delta: f64, log_moment: f64) -> f64 {
    (2.0 * alpha - 1.0) / (alpha - 1.0) * (2.0 / delta).ln() + d_alpha + log_moment
}

/// [`theorem2_rhs`] rescaled to bound `ln phi` itself.
pub fn theorem2_rhs_per_log_phi(d_alpha: f64, alpha: f64, delta: f64, log_moment: f64) -> f64 {
    (alpha - 1.0) / alpha * theorem2_rhs(d_alpha, alpha, delta, log_moment)
}

/// `ln(lam/2 e^{d2} + 8 e^{log_moment2} / (2 lam delta^3))`, the bound on
/// `ln phi(h, S)`; `log_moment2` is `ln E_S' E_P phi^2`.
pub fn theorem3_rhs(lam: f64, d2: f64, delta: f64, log_moment2: f64) -> f64 {
    let a = lam.ln() - 2f64.ln() + d2;
    let b = 8f64.ln() + log_moment2 - 2f64.ln() - lam.ln() - 3.0 * delta.ln();
    log_sum_exp([a, b])
}

/// Minimizer of [`theorem3_rhs`] over `lam`:
/// `sqrt(8 e^{log_moment2} / (delta^3 e^{d2}))`.
pub fn optimal_lambda(d2: f64, delta: f64, log_moment2: f64) -> f64 {
    (0.5 * (8f64.ln() + log_moment2 - 3.0 * delta.ln() - d2)).exp()
}

/// The pair of measures a limit bound is evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum Measures<'a> {
    Discrete { q: &'a DiscreteMeasure, p: &'a DiscreteMeasure },
    Gaussian { q: &'a IsotropicGaussian, p: &'a IsotropicGaussian },
}

/// Inputs to the limits of the order-`alpha` bound on `ln phi`.
#[derive(Debug, Clone, Copy)]
pub enum AlphaLimit<'a> {
    /// `alpha -> 1`: needs `ln esssup phi` over `(S', h')`.
    One { log_esssup_phi: f64 },
    /// `alpha -> inf`: needs `Q_S` and `P`, and `ln E_S' E_P phi`.
    Infinity { measures: Measures<'a>, log_mean_phi: f64 },
}

/// `ln esssup_P (q/p)`.
pub fn log_esssup_ratio(q: &DiscreteMeasure, p: &DiscreteMeasure) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), got: q.len() });
    }
    let mut best = f64::NEG_INFINITY;
    for (i, (&qi, &pi)) in q.probs().iter().zip(p.probs()).enumerate() {
        if pi == 0.0 {
            if qi > 0.0 {
                return Err(Error::AbsoluteContinuity { index: i });
            }
            continue;
        }
        best = best.max(qi.ln() - pi.ln());
    }
    Ok(best)
}

/// Right-hand side of the `alpha -> 1` or `alpha -> inf` limit:
///
/// - one: `ln(2/delta) + ln esssup phi`
/// - infinity: `ln esssup(Q_S/P) + ln(4/delta^2 E_S' E_P phi)`
pub fn alpha_limit_rhs(limit: AlphaLimit<'_>, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", format!("{delta} is outside (0, 1]")));
    }
    match limit {
        AlphaLimit::One { log_esssup_phi } => Ok((2.0 / delta).ln() + log_esssup_phi),
        AlphaLimit::Infinity { measures, log_mean_phi } => match measures {
            Measures::Discrete { q, p } => {
                Ok(log_esssup_ratio(q, p)? + (4.0 / (delta * delta)).ln() + log_mean_phi)
            }
            Measures::Gaussian { .. } => Err(Error::Unsupported(
                "the alpha -> infinity limit needs a finite hypothesis space".into(),
            )),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary_kl::kl;
    use crate::divergences::renyi_discrete;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ctx(m: usize, delta: f64, t: usize) -> BoundContext {
        BoundContext::with_defaults(m, delta, t).unwrap()
    }

    #[test]
    fn context_validation() {
        assert!(BoundContext::new(0, 0.05, 1, 2.0).is_err());
        assert!(BoundContext::new(10, 1.0, 1, 2.0).is_err());
        assert!(BoundContext::new(10, 0.05, 0, 2.0).is_err());
        assert!(BoundContext::new(10, 0.05, 1, 1.0).is_err());
    }

    #[test]
    fn maurer_constant() {
        assert_eq!(maurer_moment_bound(1), 2.0);
        assert_eq!(maurer_moment_bound(25), 10.0);
    }

    #[test]
    fn ours_log_term_at_order_two() {
        let c = ctx(100, 0.05, 3);
        let expected = (16.0 * 3.0 * 10.0 / 0.05f64.powi(3)).ln();
        assert_abs_diff_eq!(ours_log_term(&c), expected, epsilon = 1e-12);
    }

    #[test]
    fn overhead_at_m5000() {
        let r = bound_ours_sq(&ctx(5000, 0.05, 1), 0.1, 0.0, 1e-3).unwrap();
        let o = r.extras["disintegration_overhead"];
        assert_abs_diff_eq!(o, (8.0 / 0.0025f64).ln() / 5000.0, epsilon = 1e-15);
        assert!((o - 0.002).abs() < 5e-4);
    }

    #[test]
    fn ours_closed_form_at_zero_risk() {
        let r = bound_ours_sq(&ctx(100, 0.05, 1), 0.0, 1e-3, 1e-3).unwrap();
        let psi = (1.0 + (160.0f64 / 0.000125).ln()) / 100.0;
        assert_abs_diff_eq!(r.psi, psi, epsilon = 1e-14);
        assert_abs_diff_eq!(r.certified_risk, 1.0 - (-psi).exp(), epsilon = 1e-11);
        assert_abs_diff_eq!(r.certified_risk, 0.139_828_685_236_001_85, epsilon = 1e-10);
        assert_abs_diff_eq!(r.psi * 100.0, r.divergence + r.log_term, epsilon = 1e-12);
    }

    #[test]
    fn ours_zero_divergence_is_nonvacuous() {
        let c = BoundContext::with_defaults(200, 1.0 - 1e-9, 1).unwrap();
        let w = [0.1, 0.2];
        let r = bound_ours(&c, 0.5, &w, &w, 0.01).unwrap();
        assert_eq!(r.divergence, 0.0);
        assert!(r.certified_risk < 1.0);
    }

    #[test]
    fn rivasplata_zero_divergence() {
        let c = ctx(64, 0.05, 2);
        let w = [0.3, -0.3];
        let r = bound_baseline(&c, Method::Rivasplata, 0.2, &w, &[0.0, 0.0], &w, 0.1, &[]).unwrap();
        assert_abs_diff_eq!(r.psi, (2.0 * 2.0 * 8.0 / 0.05f64).ln() / 64.0, epsilon = 1e-15);
    }

    #[test]
    fn baselines_match_direct_formulas() {
        // m=50, delta=0.05, T=3, dKL=2, r_s=0.1; default grid.
        let c = ctx(50, 0.05, 3);
        let grid = default_c_grid();
        let riv = bound_baseline_from_dkl(&c, Method::Rivasplata, 0.1, 2.0, None, &grid).unwrap();
        let bla = bound_baseline_from_dkl(&c, Method::Blanchard, 0.1, 2.0, None, &grid).unwrap();
        let cat = bound_baseline_from_dkl(&c, Method::Catoni, 0.1, 2.0, None, &grid).unwrap();
        // Independent evaluation in 50-digit arithmetic.
        assert_abs_diff_eq!(riv.psi, 0.174_870_064_909_922_38, epsilon = 1e-15);
        assert_abs_diff_eq!(bla.psi, 0.201_323_403_898_928_53, epsilon = 1e-15);
        assert_abs_diff_eq!(riv.certified_risk, 0.356_554_559_898_634_44, epsilon = 1e-10);
        assert_abs_diff_eq!(bla.certified_risk, 0.379_508_089_780_682_85, epsilon = 1e-10);
        assert_abs_diff_eq!(cat.certified_risk, 0.363_172_705_503_214_3, epsilon = 1e-10);
        assert_eq!(cat.extras["c"], 1.0);
    }

    #[test]
    fn catoni_grid_rules() {
        let c = ctx(50, 0.05, 1);
        assert!(bound_baseline_from_dkl(&c, Method::Catoni, 0.1, 0.0, None, &[]).is_err());
        assert!(bound_baseline_from_dkl(&c, Method::Catoni, 0.1, 0.0, None, &[-1.0]).is_err());
        let big = BoundContext::with_defaults(10_000_000, 0.05, 1).unwrap();
        let r = bound_baseline_from_dkl(&big, Method::Catoni, 0.0, 0.0, None, &[1.0]).unwrap();
        assert!(r.certified_risk < 1e-5);
    }

    #[test]
    fn negative_budget_is_clamped() {
        let c = ctx(10, 0.5, 1);
        let r = bound_baseline_from_dkl(&c, Method::Blanchard, 0.2, -50.0, None, &[]).unwrap();
        assert_eq!(r.psi, 0.0);
        assert_eq!(r.certified_risk, 0.2);
        assert!(r.extras["psi_unclamped"] < 0.0);
    }

    #[test]
    fn ours_minus_rivasplata_identity() {
        let c = ctx(300, 0.05, 4);
        let w = [0.2, -0.1, 0.05];
        let v = [0.0, 0.0, 0.1];
        let s2 = 0.01;
        let ours = bound_ours(&c, 0.1, &w, &v, s2).unwrap();
        let riv = bound_baseline(&c, Method::Rivasplata, 0.1, &w, &[0.0; 3], &v, s2, &[]).unwrap();
        let sq = sq_dist(&w, &v).unwrap();
        let expected = -(sq / (2.0 * s2) + (8.0 / (0.05f64 * 0.05)).ln()) / 300.0;
        assert_abs_diff_eq!(riv.psi - ours.psi, expected, epsilon = 1e-14);
    }

    #[test]
    fn ours_ignores_noise_rivasplata_does_not() {
        let c = ctx(300, 0.05, 1);
        let w = [0.2, -0.1, 0.05];
        let v = [0.0, 0.0, 0.1];
        let e1 = [0.01, -0.02, 0.03];
        let e2 = [-0.03, 0.0, 0.01];
        let r1 = bound_baseline(&c, Method::Rivasplata, 0.1, &w, &e1, &v, 0.01, &[]).unwrap();
        let r2 = bound_baseline(&c, Method::Rivasplata, 0.1, &w, &e2, &v, 0.01, &[]).unwrap();
        assert_ne!(r1.certified_risk, r2.certified_risk);
        let o = bound_ours(&c, 0.1, &w, &v, 0.01).unwrap();
        assert_eq!(o, bound_ours(&c, 0.1, &w, &v, 0.01).unwrap());
    }

    #[test]
    fn stochastic_cases() {
        let c = ctx(200, 0.05, 2);
        let w = [0.5, 0.5];
        let r = bound_stochastic(&c, &[0.0; 400], &w, &w, 0.1).unwrap();
        let inner = 1.0 - (-(80.0f64).ln() / 400.0).exp();
        assert_abs_diff_eq!(r.extras["inner_risk"], inner, epsilon = 1e-11);
        let outer = kl_inv(inner, (4.0 * 2.0 * 200f64.sqrt() / 0.05).ln() / 200.0).unwrap();
        assert_abs_diff_eq!(r.certified_risk, outer, epsilon = 1e-11);

        let mut risks = vec![0.1; 50];
        let base = bound_stochastic(&c, &risks, &w, &[0.0, 0.0], 0.1).unwrap().certified_risk;
        risks[7] = 0.3;
        assert!(bound_stochastic(&c, &risks, &w, &[0.0, 0.0], 0.1).unwrap().certified_risk >= base);
    }

    #[test]
    fn theorem2_examples() {
        assert_abs_diff_eq!(theorem2_rhs(0.0, 2.0, 1.0, 0.0), 3.0 * 2f64.ln(), epsilon = 1e-15);
        let (d, lm, dl) = (1.3, 0.7, 0.05);
        assert_abs_diff_eq!(theorem2_rhs(d, 2.0, dl, lm), d + (8.0 * lm.exp() / dl.powi(3)).ln(), epsilon = 1e-12);
        assert!(theorem2_rhs(d, 2.0, 0.1, lm) < theorem2_rhs(d, 2.0, 0.05, lm));
    }

    #[test]
    fn theorem3_examples() {
        let lam = optimal_lambda(0.0, 1.0, 0.0);
        assert_abs_diff_eq!(lam, 8f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(2.0 * theorem3_rhs(lam, 0.0, 1.0, 0.0), 8f64.ln(), epsilon = 1e-14);
        // Large D_2 stays finite.
        assert!(theorem3_rhs(1.0, 5000.0, 0.05, 3.0).is_finite());
    }

    #[test]
    fn alpha_limit_examples() {
        let u = DiscreteMeasure::uniform(4).unwrap();
        let m = Measures::Discrete { q: &u, p: &u };
        let v = alpha_limit_rhs(AlphaLimit::Infinity { measures: m, log_mean_phi: 0.0 }, 0.1).unwrap();
        assert_abs_diff_eq!(v, (4.0f64 / 0.01).ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(
            alpha_limit_rhs(AlphaLimit::One { log_esssup_phi: 0.0 }, 0.05).unwrap(),
            40f64.ln(),
            epsilon = 1e-15
        );
        let g = IsotropicGaussian::new(vec![0.0], 1.0).unwrap();
        let gm = Measures::Gaussian { q: &g, p: &g };
        assert!(matches!(
            alpha_limit_rhs(AlphaLimit::Infinity { measures: gm, log_mean_phi: 0.0 }, 0.1),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn large_alpha_matches_infinity_limit() {
        // Toy problem: three hypotheses, one sample of a Bernoulli(0.3) loss
        // per hypothesis; phi = e^{kl(R_S || R_D)}, moments by enumeration.
        let q = DiscreteMeasure::new(vec![0.5, 0.3, 0.2]).unwrap();
        let p = DiscreteMeasure::new(vec![0.2, 0.4, 0.4]).unwrap();
        let delta = 0.1;
        let r_d = 0.3;
        let atoms = [(0.0, 1.0 - r_d), (1.0, r_d)];
        let log_phi: Vec<(f64, f64)> = atoms.iter().map(|&(rs, w)| (kl(rs, r_d).unwrap(), w)).collect();
        let log_moment = |a: f64| log_sum_exp(log_phi.iter().map(|&(lp, w)| a / (a - 1.0) * lp + w.ln()));
        let alpha = 1e6;
        let d = renyi_discrete(&q, &p, alpha).unwrap();
        let finite = theorem2_rhs_per_log_phi(d, alpha, delta, log_moment(alpha));
        let log_mean_phi = log_sum_exp(log_phi.iter().map(|&(lp, w)| lp + w.ln()));
        let limit = alpha_limit_rhs(
            AlphaLimit::Infinity { measures: Measures::Discrete { q: &q, p: &p }, log_mean_phi },
            delta,
        )
        .unwrap();
        assert!((finite - limit).abs() < 1e-3, "{finite} vs {limit}");
    }

    proptest! {
        #[test]
        fn prop_proposition4_identity(d2 in 0.0f64..500.0, lm in 0.0f64..10.0, delta in 1e-4f64..0.999) {
            let lam = optimal_lambda(d2, delta, lm);
            let lhs = 2.0 * theorem3_rhs(lam, d2, delta, lm);
            prop_assert!((lhs - theorem2_rhs(d2, 2.0, delta, lm)).abs() < 1e-9 * (1.0 + lhs.abs()));
            for k in [0.1, 0.3, 0.5, 2.0, 5.0, 10.0] {
                prop_assert!(theorem3_rhs(lam, d2, delta, lm) <= theorem3_rhs(k * lam, d2, delta, lm) + 1e-12);
            }
        }

        #[test]
        fn prop_certified_risk_monotone(
            r in 0.0f64..0.9, dr in 0.0f64..0.1, sq in 0.0f64..2.0, dsq in 0.0f64..2.0,
            m in 10usize..5000, t in 1usize..10,
        ) {
            let c = ctx(m, 0.05, t);
            let s2 = 0.05;
            let base = bound_ours_sq(&c, r, sq, s2).unwrap().certified_risk;
            prop_assert!((r..=1.0).contains(&base));
            prop_assert!(bound_ours_sq(&c, r + dr, sq, s2).unwrap().certified_risk >= base);
            prop_assert!(bound_ours_sq(&c, r, sq + dsq, s2).unwrap().certified_risk >= base);
            prop_assert!(bound_ours_sq(&ctx(m, 0.05, t + 1), r, sq, s2).unwrap().certified_risk >= base);
            prop_assert!(bound_ours_sq(&ctx(m + 100, 0.05, t), r, sq, s2).unwrap().certified_risk <= base);
            prop_assert!(bound_ours_sq(&ctx(m, 0.1, t), r, sq, s2).unwrap().certified_risk <= base);
            for method in [Method::Rivasplata, Method::Blanchard, Method::Catoni] {
                let grid = default_c_grid();
                let b = bound_baseline_from_dkl(&c, method, r, sq - 1.0, None, &grid).unwrap();
                prop_assert!((0.0..=1.0).contains(&b.certified_risk));
                let b2 = bound_baseline_from_dkl(&c, method, r + dr, sq - 1.0 + dsq, None, &grid).unwrap();
                prop_assert!(b2.certified_risk >= b.certified_risk - 1e-12);
                if method != Method::Catoni {
                    prop_assert!(b.certified_risk >= r);
                }
            }
        }
    }
}

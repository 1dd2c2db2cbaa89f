//! Exact and Monte Carlo coverage of the kl-form bound statements on finite
//! learning problems, and the exact Maurer moment.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::binary_kl::kl;
use crate::bounds::{maurer_moment_bound, optimal_lambda, theorem2_rhs, theorem3_rhs};
use crate::divergences::{log_sum_exp, renyi_discrete};
use crate::error::{check_unit, invalid, Error, Result};
use crate::mutual_info::{info_bound_rhs, FiniteLearningProblem, InfoBoundKind, Sample};

/// Confidence level of the Clopper-Pearson interval.
pub const CP_CONFIDENCE: f64 = 0.99;

/// Shipped enumerable problems as `(name, toml)`.
pub const FIXTURES: [(&str, &str); 4] = [
    ("gibbs_2atom_m8", include_str!("../fixtures/gibbs_2atom_m8.toml")),
    ("gibbs_3atom_m6", include_str!("../fixtures/gibbs_3atom_m6.toml")),
    ("gibbs_4atom_m7", include_str!("../fixtures/gibbs_4atom_m7.toml")),
    ("fixed_2atom_m5", include_str!("../fixtures/fixed_2atom_m5.toml")),
];

pub fn fixture(name: &str) -> Result<FiniteLearningProblem> {
    let (_, text) = FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("unknown fixture {name:?}")))?;
    FiniteLearningProblem::from_toml_str(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `m kl <= 3 ln(2/delta) + D_2(Q_S || P) + ln E_S' E_P e^{m kl}`.
    Thm2Alpha2,
    /// `m kl / 2 <= ln(lam/2 e^{D_2} + 8 E e^{m kl} / (2 lam delta^3))` at the optimal `lam`.
    Thm3Lambda,
    /// `m kl <= D_2(Q_S || P) + ln(16 sqrt(m) / delta^3)`.
    Corollary5Analog,
    Thm8,
    SeegerMi,
}

impl BoundKind {
    pub const ALL: [BoundKind; 5] =
        [BoundKind::Thm2Alpha2, BoundKind::Thm3Lambda, BoundKind::Corollary5Analog, BoundKind::Thm8, BoundKind::SeegerMi];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Thm2Alpha2 => "thm2_alpha2",
            BoundKind::Thm3Lambda => "thm3_lambda",
            BoundKind::Corollary5Analog => "corollary5_analog",
            BoundKind::Thm8 => "thm8",
            BoundKind::SeegerMi => "seeger_mi",
        }
    }

    fn needs_exact_moment(self) -> bool {
        matches!(self, BoundKind::Thm2Alpha2 | BoundKind::Thm3Lambda | BoundKind::Thm8)
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid("bound_kind", format!("unknown bound kind {s:?}")))
    }
}

/// `ln E_S' E_{h' ~ P} phi^{alpha/(alpha-1)}` for `phi = e^{(alpha-1)/alpha m kl}`,
/// which is `ln E e^{m kl}` for every `alpha`.
pub fn moment_term(problem: &FiniteLearningProblem, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(invalid("alpha", format!("{alpha} must be finite and > 1")));
    }
    problem.log_mkl_moment(problem.prior())
}

/// Per-sample statement: `m kl(R_S(h) || R_D(h)) <= rhs(S)`.
enum Statement {
    PerSample(Box<dyn Fn(&Sample) -> f64 + Sync>),
    Constant(crate::mutual_info::InfoBound),
}

fn statement(problem: &FiniteLearningProblem, kind: BoundKind, delta: f64) -> Result<Statement> {
    if kind.needs_exact_moment() && !problem.is_enumerable() {
        return Err(Error::Unsupported(format!(
            "{kind} needs an exact moment term, but {:?} is not enumerable",
            problem.name()
        )));
    }
    let prior = problem.prior().clone();
    let d2 = move |s: &Sample| renyi_discrete(&s.posterior, &prior, 2.0).unwrap_or(f64::INFINITY);
    Ok(match kind {
        BoundKind::Thm2Alpha2 => {
            let lm = moment_term(problem, 2.0)?;
            Statement::PerSample(Box::new(move |s| theorem2_rhs(d2(s), 2.0, delta, lm)))
        }
        BoundKind::Thm3Lambda => {
            let lm = moment_term(problem, 2.0)?;
            Statement::PerSample(Box::new(move |s| {
                let d = d2(s);
                if !d.is_finite() {
                    return f64::INFINITY;
                }
                2.0 * theorem3_rhs(optimal_lambda(d, delta, lm), d, delta, lm)
            }))
        }
        BoundKind::Corollary5Analog => {
            let log_term = 3.0 * (2.0 / delta).ln() + maurer_moment_bound(problem.m()).ln();
            Statement::PerSample(Box::new(move |s| d2(s) + log_term))
        }
        BoundKind::Thm8 => Statement::Constant(info_bound_rhs(InfoBoundKind::Thm8, problem, 2.0, delta)?),
        BoundKind::SeegerMi => Statement::Constant(info_bound_rhs(InfoBoundKind::SeegerMi, problem, 2.0, delta)?),
    })
}

impl Statement {
    fn rhs(&self, s: &Sample) -> f64 {
        match self {
            Statement::PerSample(f) => f(s),
            Statement::Constant(_) => f64::NAN,
        }
    }

    fn violated(&self, problem: &FiniteLearningProblem, h: usize, r_s: f64, rhs: f64) -> bool {
        let r_d = problem.true_risks()[h];
        match self {
            Statement::PerSample(_) => {
                let lhs = problem.m() as f64 * kl(r_s, r_d).unwrap_or(f64::INFINITY);
                lhs > rhs + 1e-12 * (1.0 + rhs.abs())
            }
            Statement::Constant(b) => b.violated(r_s, r_d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub bound_kind: BoundKind,
    pub delta: f64,
    pub mode: CoverageMode,
    /// Monte Carlo trials; 0 in exact mode.
    pub trials: u64,
    pub violations: u64,
    /// Exact violation probability, or `violations / trials`.
    pub rate: f64,
    /// Two-sided Clopper-Pearson interval at [`CP_CONFIDENCE`]; collapses
    /// to the rate in exact mode.
    pub cp_lower: f64,
    pub cp_upper: f64,
}

impl CoverageResult {
    /// Whether the data refute `P(violation) <= delta`.
    pub fn refutes_delta(&self) -> bool {
        match self.mode {
            CoverageMode::Exact => self.rate > self.delta,
            CoverageMode::MonteCarlo => self.cp_lower > self.delta,
        }
    }
}

/// Two-sided Clopper-Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(invalid("trials", format!("need 0 <= k = {k} <= n = {n} and n >= 1")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid("confidence", format!("{confidence} is outside (0, 1)")));
    }
    let tail = (1.0 - confidence) / 2.0;
    let (kf, nf) = (k as f64, n as f64);
    // P(X >= k | p) = I_p(k, n-k+1) increases in p.
    let lower = if k == 0 { 0.0 } else { bisect(|p| beta_reg(kf, nf - kf + 1.0, p) - tail) };
    // P(X <= k | p) = 1 - I_p(k+1, n-k) decreases in p.
    let upper = if k == n { 1.0 } else { bisect(|p| tail - (1.0 - beta_reg(kf + 1.0, nf - kf, p))) };
    Ok((lower, upper))
}

/// Root of an increasing function on `[0, 1]`.
fn bisect<F: Fn(f64) -> f64>(f: F) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", format!("{delta} is outside (0, 1]")));
    }
    Ok(())
}

/// Exact probability over `S ~ D^m, h ~ Q_S` that the statement fails.
pub fn exact_coverage(problem: &FiniteLearningProblem, kind: BoundKind, delta: f64) -> Result<CoverageResult> {
    check_delta(delta)?;
    let st = statement(problem, kind, delta)?;
    let v = problem.sum_over_samples(1, |s, acc| {
        let rhs = st.rhs(s);
        for (h, &q) in s.posterior.probs().iter().enumerate() {
            if q > 0.0 && st.violated(problem, h, s.risks[h], rhs) {
                acc[0] += s.prob * q;
            }
        }
    })?;
    let rate = v[0].clamp(0.0, 1.0);
    Ok(CoverageResult {
        bound_kind: kind,
        delta,
        mode: CoverageMode::Exact,
        trials: 0,
        violations: 0,
        rate,
        cp_lower: rate,
        cp_upper: rate,
    })
}

/// Monte Carlo coverage: `trials` independent draws of `S` and `h ~ Q_S`,
/// trial `i` on stream `i` of `seed`.
pub fn mc_coverage(
    problem: &FiniteLearningProblem,
    kind: BoundKind,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<CoverageResult> {
    check_delta(delta)?;
    if trials < 1 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let st = statement(problem, kind, delta)?;
    let violations: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let s = problem.draw_sample(&mut rng);
            let h = WeightedIndex::new(s.posterior.probs()).expect("posterior has mass").sample(&mut rng);
            u64::from(st.violated(problem, h, s.risks[h], st.rhs(&s)))
        })
        .sum();
    let (cp_lower, cp_upper) = clopper_pearson(violations, trials, CP_CONFIDENCE)?;
    Ok(CoverageResult {
        bound_kind: kind,
        delta,
        mode: CoverageMode::MonteCarlo,
        trials,
        violations,
        rate: violations as f64 / trials as f64,
        cp_lower,
        cp_upper,
    })
}

/// Exact coverage when the problem is enumerable, Monte Carlo otherwise.
pub fn coverage(
    problem: &FiniteLearningProblem,
    kind: BoundKind,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<CoverageResult> {
    if problem.is_enumerable() {
        exact_coverage(problem, kind, delta)
    } else {
        mc_coverage(problem, kind, delta, trials, seed)
    }
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    bound_kind: &'a str,
    delta: f64,
    trials: u64,
    violations: u64,
    rate: f64,
    cp_upper: f64,
    cp_lower: f64,
    mode: CoverageMode,
    problem: &'a str,
}

/// Appends rows to `path`, writing the header only when the file is new or
/// empty.
pub fn append_coverage_csv(path: &Path, problem: &str, rows: &[CoverageResult]) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in rows {
        w.serialize(CsvRow {
            bound_kind: r.bound_kind.name(),
            delta: r.delta,
            trials: r.trials,
            violations: r.violations,
            rate: r.rate,
            cp_upper: r.cp_upper,
            cp_lower: r.cp_lower,
            mode: r.mode,
            problem,
        })
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn ln_binomial(m: usize, k: usize) -> f64 {
    let k = k.min(m - k);
    (1..=k).map(|i| ((m - k + i) as f64 / i as f64).ln()).sum()
}

/// `E e^{m kl(R_S || p)}` for `m R_S ~ Binomial(m, p)`, summed in log space.
pub fn maurer_exact(m: usize, p: f64) -> Result<f64> {
    if m < 1 {
        return Err(invalid("m", "must be at least 1"));
    }
    check_unit("p", p)?;
    let mf = m as f64;
    let terms = (0..=m).filter_map(|k| {
        let kf = k as f64;
        let lp = |x: f64, n: f64| if n == 0.0 { 0.0 } else { n * x.ln() };
        let log_w = ln_binomial(m, k) + lp(p, kf) + lp(1.0 - p, mf - kf);
        if log_w == f64::NEG_INFINITY {
            return None;
        }
        Some(log_w + mf * kl(kf / mf, p).ok()?)
    });
    Ok(log_sum_exp(terms).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaurerRow {
    pub m: usize,
    pub p: f64,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

/// [`maurer_exact`] against `2 sqrt(m)` for `m` in `1..=m_max` and
/// `p` in `{0, 0.01, ..., 1}`.
pub fn maurer_check(m_max: usize) -> Result<Vec<MaurerRow>> {
    let mut rows = Vec::with_capacity(m_max * 101);
    for m in 1..=m_max {
        let bound = maurer_moment_bound(m);
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let value = maurer_exact(m, p)?;
            rows.push(MaurerRow { m, p, value, bound, holds: value <= bound * (1.0 + 1e-12) });
        }
    }
    Ok(rows)
}

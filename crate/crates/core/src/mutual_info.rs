//! Finite learning problems, Sibson and Shannon mutual information between
//! the sample and the learned hypothesis, and information-theoretic bounds.
//!
//! A sample is an ordered tuple in `Z^m`, indexed in base `|Z|` with the
//! first coordinate most significant.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binary_kl::{kl, kl_inv};
use crate::divergences::{log_sum_exp, DiscreteMeasure};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmConfig {
    /// `Q_S(h) ∝ exp(-beta m R_S(h))`.
    Gibbs { beta: f64 },
    /// `Q_S = probs` for every sample.
    Fixed { probs: Vec<f64> },
    /// One row per sample tuple, in index order.
    Table { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerationConfig {
    #[serde(default = "default_cap")]
    pub cap: u64,
    #[serde(default)]
    pub monte_carlo: bool,
    #[serde(default = "default_mc_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP
}

fn default_mc_samples() -> usize {
    20_000
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        Self { cap: default_cap(), monte_carlo: false, samples: default_mc_samples(), seed: 0 }
    }
}

/// On-disk description of a [`FiniteLearningProblem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub name: String,
    pub m: usize,
    pub z_probs: Vec<f64>,
    /// `loss[h][z]`
    pub loss: Vec<Vec<f64>>,
    #[serde(default)]
    pub hypotheses: Option<Vec<String>>,
    /// Data-free prior used by the PAC-Bayes statements; uniform if absent.
    #[serde(default)]
    pub prior: Option<Vec<f64>>,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub enumeration: EnumerationConfig,
}

#[derive(Debug, Clone)]
enum Algorithm {
    Gibbs { beta: f64 },
    Fixed(DiscreteMeasure),
    Table(Vec<DiscreteMeasure>),
}

/// A finite data distribution, a finite hypothesis set with a loss table and
/// a deterministic sample-to-posterior map.
#[derive(Debug, Clone)]
pub struct FiniteLearningProblem {
    config: ProblemConfig,
    z_probs: DiscreteMeasure,
    prior: DiscreteMeasure,
    algorithm: Algorithm,
    true_risks: Vec<f64>,
    tuple_count: Option<u64>,
}

/// One sample tuple with everything derived from it.
#[derive(Debug, Clone)]
pub struct Sample {
    pub index: u64,
    /// `D^m(S)`
    pub prob: f64,
    /// `R_S(h)` per hypothesis.
    pub risks: Vec<f64>,
    pub posterior: DiscreteMeasure,
}

impl FiniteLearningProblem {
    pub fn from_config(config: ProblemConfig) -> Result<Self> {
        let z_probs = DiscreteMeasure::new(config.z_probs.clone())
            .map_err(|e| Error::Config(format!("z_probs: {e}")))?;
        let n_z = z_probs.len();
        if config.m < 1 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        let n_h = config.loss.len();
        if n_h == 0 {
            return Err(Error::Config("loss table has no hypotheses".into()));
        }
        for (h, row) in config.loss.iter().enumerate() {
            if row.len() != n_z {
                return Err(Error::Config(format!("loss row {h} has {} entries, expected {n_z}", row.len())));
            }
            if row.iter().any(|&l| !(0.0..=1.0).contains(&l)) {
                return Err(Error::Config(format!("loss row {h} has entries outside [0, 1]")));
            }
        }
        if let Some(names) = &config.hypotheses {
            if names.len() != n_h {
                return Err(Error::Config(format!("{} hypothesis names for {n_h} loss rows", names.len())));
            }
        }
        let prior = match &config.prior {
            Some(p) => DiscreteMeasure::new(p.clone()).map_err(|e| Error::Config(format!("prior: {e}")))?,
            None => DiscreteMeasure::uniform(n_h)?,
        };
        if prior.len() != n_h {
            return Err(Error::Config(format!("prior has {} entries, expected {n_h}", prior.len())));
        }
        let tuple_count = (n_z as u64).checked_pow(config.m as u32);
        let algorithm = match &config.algorithm {
            AlgorithmConfig::Gibbs { beta } => {
                if !beta.is_finite() || *beta < 0.0 {
                    return Err(Error::Config(format!("gibbs beta {beta} must be finite and >= 0")));
                }
                Algorithm::Gibbs { beta: *beta }
            }
            AlgorithmConfig::Fixed { probs } => {
                let q = DiscreteMeasure::new(probs.clone()).map_err(|e| Error::Config(format!("fixed: {e}")))?;
                if q.len() != n_h {
                    return Err(Error::Config("fixed posterior length differs from hypothesis count".into()));
                }
                Algorithm::Fixed(q)
            }
            AlgorithmConfig::Table { rows } => {
                if tuple_count != Some(rows.len() as u64) {
                    return Err(Error::Config(format!(
                        "table has {} rows but there are |Z|^m = {n_z}^{} tuples",
                        rows.len(),
                        config.m
                    )));
                }
                let mut out = Vec::with_capacity(rows.len());
                for (i, r) in rows.iter().enumerate() {
                    let q = DiscreteMeasure::new(r.clone()).map_err(|e| Error::Config(format!("table row {i}: {e}")))?;
                    if q.len() != n_h {
                        return Err(Error::Config(format!("table row {i} length differs from hypothesis count")));
                    }
                    out.push(q);
                }
                Algorithm::Table(out)
            }
        };
        let true_risks = config
            .loss
            .iter()
            .map(|row| row.iter().zip(z_probs.probs()).map(|(l, p)| l * p).sum::<f64>().clamp(0.0, 1.0))
            .collect();
        Ok(Self { config, z_probs, prior, algorithm, true_risks, tuple_count })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ProblemConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_config(cfg)
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn m(&self) -> usize {
        self.config.m
    }

    pub fn n_z(&self) -> usize {
        self.z_probs.len()
    }

    pub fn n_hypotheses(&self) -> usize {
        self.config.loss.len()
    }

    pub fn prior(&self) -> &DiscreteMeasure {
        &self.prior
    }

    /// `R_D(h)` per hypothesis.
    pub fn true_risks(&self) -> &[f64] {
        &self.true_risks
    }

    pub fn enumeration(&self) -> &EnumerationConfig {
        &self.config.enumeration
    }

    /// `|Z|^m * |H|`, or `None` on overflow.
    pub fn enumeration_size(&self) -> Option<u128> {
        self.tuple_count.map(|t| t as u128 * self.n_hypotheses() as u128)
    }

    pub fn is_enumerable(&self) -> bool {
        matches!(self.enumeration_size(), Some(n) if n <= self.config.enumeration.cap as u128)
    }

    fn check_enumerable(&self) -> Result<u64> {
        match (self.tuple_count, self.enumeration_size()) {
            (Some(t), Some(n)) if n <= self.config.enumeration.cap as u128 => Ok(t),
            (_, n) => Err(Error::EnumerationCap {
                required: n.unwrap_or(u128::MAX),
                cap: self.config.enumeration.cap as u128,
            }),
        }
    }

    fn posterior_for(&self, index: u64, risks: &[f64]) -> DiscreteMeasure {
        match &self.algorithm {
            Algorithm::Gibbs { beta } => {
                let m = self.m() as f64;
                let lw: Vec<f64> = risks.iter().map(|r| -beta * m * r).collect();
                DiscreteMeasure::from_log_weights(&lw).expect("finite Gibbs weights")
            }
            Algorithm::Fixed(q) => q.clone(),
            Algorithm::Table(rows) => rows[index as usize].clone(),
        }
    }

    /// Builds the sample made of the given example indices.
    pub fn sample_from_atoms(&self, atoms: &[usize]) -> Sample {
        let n_z = self.n_z() as u64;
        let mut index = 0u64;
        let mut log_prob = 0.0;
        let mut counts = vec![0usize; self.n_z()];
        for &z in atoms {
            index = index.wrapping_mul(n_z).wrapping_add(z as u64);
            log_prob += self.z_probs.probs()[z].ln();
            counts[z] += 1;
        }
        let m = atoms.len() as f64;
        let risks: Vec<f64> = self
            .config
            .loss
            .iter()
            .map(|row| counts.iter().zip(row).map(|(&c, &l)| c as f64 * l).sum::<f64>() / m)
            .collect();
        let posterior = self.posterior_for(index, &risks);
        Sample { index, prob: log_prob.exp(), risks, posterior }
    }

    /// Sample with the given tuple index.
    pub fn sample_at(&self, index: u64) -> Sample {
        let n_z = self.n_z() as u64;
        let m = self.m();
        let mut atoms = vec![0usize; m];
        let mut rest = index;
        for k in (0..m).rev() {
            atoms[k] = (rest % n_z) as usize;
            rest /= n_z;
        }
        self.sample_from_atoms(&atoms)
    }

    /// Draws `S ~ D^m`.
    pub fn draw_sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        let dist = WeightedIndex::new(self.z_probs.probs()).expect("valid z_probs");
        let atoms: Vec<usize> = (0..self.m()).map(|_| dist.sample(rng)).collect();
        self.sample_from_atoms(&atoms)
    }

    /// `sum_S f(S)` over all tuples, each `f` returning `k` accumulators.
    ///
    /// Tuples are processed in fixed chunks on the rayon pool and merged in
    /// index order, so the result does not depend on scheduling.
    pub fn sum_over_samples<F>(&self, k: usize, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&Sample, &mut [f64]) + Sync,
    {
        let total = self.check_enumerable()?;
        let chunks: Vec<u64> = (0..total.div_ceil(CHUNK)).collect();
        let partials: Vec<Vec<f64>> = chunks
            .par_iter()
            .map(|&c| {
                let mut acc = vec![0.0; k];
                for i in (c * CHUNK)..((c + 1) * CHUNK).min(total) {
                    let s = self.sample_at(i);
                    if s.prob > 0.0 {
                        f(&s, &mut acc);
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; k];
        for p in partials {
            for (o, x) in out.iter_mut().zip(p) {
                *o += x;
            }
        }
        Ok(out)
    }

    /// `m kl(R_S(h) || R_D(h))`, infinite where the divergence is.
    pub fn m_kl(&self, h: usize, r_s: f64) -> f64 {
        self.m() as f64 * kl(r_s, self.true_risks[h]).unwrap_or(f64::INFINITY)
    }

    /// `ln E_S E_{h ~ prior} e^{m kl(R_S(h) || R_D(h))}` by enumeration.
    pub fn log_mkl_moment(&self, prior: &DiscreteMeasure) -> Result<f64> {
        self.check_prior(prior)?;
        let terms = self.sum_over_samples(1, |s, acc| {
            let inner = log_sum_exp(
                prior
                    .probs()
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(h, &p)| p.ln() + self.m_kl(h, s.risks[h])),
            );
            acc[0] += s.prob * inner.exp();
        })?;
        Ok(terms[0].ln())
    }

    /// Monte Carlo estimate of `E_S E_{h ~ prior} e^{m kl}` with its standard error.
    pub fn mkl_moment_mc(&self, prior: &DiscreteMeasure, samples: usize, seed: u64) -> Result<(f64, f64)> {
        self.check_prior(prior)?;
        if samples < 2 {
            return Err(invalid("samples", "need at least 2"));
        }
        let vals: Vec<f64> = (0..samples as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                let s = self.draw_sample(&mut rng);
                prior.probs().iter().enumerate().map(|(h, &p)| p * self.m_kl(h, s.risks[h]).exp()).sum()
            })
            .collect();
        Ok(mean_and_se(&vals))
    }

    fn check_prior(&self, prior: &DiscreteMeasure) -> Result<()> {
        if prior.len() != self.n_hypotheses() {
            return Err(Error::DimensionMismatch { expected: self.n_hypotheses(), got: prior.len() });
        }
        Ok(())
    }
}

fn mean_and_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub value: f64,
    pub optimal_prior: DiscreteMeasure,
    /// Present for Monte Carlo estimates.
    pub std_error: Option<f64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(invalid("alpha", format!("{alpha} must be finite and > 1")));
    }
    Ok(())
}

fn mc_samples(problem: &FiniteLearningProblem) -> Result<Vec<Sample>> {
    let e = problem.enumeration();
    if problem.is_enumerable() {
        return Ok(Vec::new());
    }
    if !e.monte_carlo {
        problem.check_enumerable()?;
    }
    if e.samples < 2 {
        return Err(Error::Config("monte carlo needs at least 2 samples".into()));
    }
    Ok((0..e.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(e.seed);
            rng.set_stream(i);
            problem.draw_sample(&mut rng)
        })
        .collect())
}

/// `a(h) = E_S Q_S(h)^alpha` by enumeration.
fn alpha_moments(problem: &FiniteLearningProblem, alpha: f64) -> Result<Vec<f64>> {
    problem.sum_over_samples(problem.n_hypotheses(), |s, acc| {
        for (a, &q) in acc.iter_mut().zip(s.posterior.probs()) {
            *a += s.prob * q.powf(alpha);
        }
    })
}

fn sibson_from_moments(a: &[f64], alpha: f64) -> Result<(f64, DiscreteMeasure)> {
    let roots: Vec<f64> = a.iter().map(|x| x.powf(1.0 / alpha)).collect();
    let z: f64 = roots.iter().sum();
    let value = (alpha / (alpha - 1.0) * z.ln()).max(0.0);
    Ok((value, DiscreteMeasure::from_weights(roots)?))
}

/// Sibson's mutual information `I_alpha(h; S) = min_P D_alpha(rho || pi)`,
/// attained at `P*(h) ∝ (E_S Q_S(h)^alpha)^{1/alpha}`, which gives
/// `I_alpha = alpha/(alpha-1) ln sum_h (E_S Q_S(h)^alpha)^{1/alpha}`.
pub fn sibson_mi(problem: &FiniteLearningProblem, alpha: f64) -> Result<MiEstimate> {
    check_alpha(alpha)?;
    if problem.is_enumerable() {
        let a = alpha_moments(problem, alpha)?;
        let (value, optimal_prior) = sibson_from_moments(&a, alpha)?;
        return Ok(MiEstimate { value, optimal_prior, std_error: None });
    }
    let samples = mc_samples(problem)?;
    let n = samples.len() as f64;
    let k = problem.n_hypotheses();
    let mut a = vec![0.0; k];
    for s in &samples {
        for (x, &q) in a.iter_mut().zip(s.posterior.probs()) {
            *x += q.powf(alpha) / n;
        }
    }
    let (value, optimal_prior) = sibson_from_moments(&a, alpha)?;
    // Delta method on the plug-in estimate.
    let z: f64 = a.iter().map(|x| x.powf(1.0 / alpha)).sum();
    let grad: Vec<f64> = a
        .iter()
        .map(|&x| if x > 0.0 { x.powf(1.0 / alpha - 1.0) / ((alpha - 1.0) * z) } else { 0.0 })
        .collect();
    let g: Vec<f64> = samples
        .iter()
        .map(|s| s.posterior.probs().iter().zip(&grad).map(|(q, d)| d * q.powf(alpha)).sum())
        .collect();
    let (_, se) = mean_and_se(&g);
    Ok(MiEstimate { value, optimal_prior, std_error: Some(se) })
}

/// `D_alpha(rho || pi)` for the joint laws `rho = Q_S(h) D^m(S)` and
/// `pi = P(h) D^m(S)`, by enumeration.
pub fn joint_renyi(problem: &FiniteLearningProblem, prior: &DiscreteMeasure, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    problem.check_prior(prior)?;
    let a = alpha_moments(problem, alpha)?;
    let mut terms = Vec::new();
    for (h, (&x, &p)) in a.iter().zip(prior.probs()).enumerate() {
        if x == 0.0 {
            continue;
        }
        if p == 0.0 {
            return Err(Error::AbsoluteContinuity { index: h });
        }
        terms.push((1.0 - alpha) * p.ln() + x.ln());
    }
    Ok(log_sum_exp(terms) / (alpha - 1.0))
}

/// Shannon mutual information `I(h; S) = E_S KL(Q_S || P*)` with the marginal
/// `P*(h) = E_S Q_S(h)`.
pub fn shannon_mi(problem: &FiniteLearningProblem) -> Result<MiEstimate> {
    let k = problem.n_hypotheses();
    if problem.is_enumerable() {
        // Slots 0..k hold P*, slot k holds E_S sum_h Q ln Q.
        let acc = problem.sum_over_samples(k + 1, |s, acc| {
            let mut neg_ent = 0.0;
            for (h, &q) in s.posterior.probs().iter().enumerate() {
                acc[h] += s.prob * q;
                if q > 0.0 {
                    neg_ent += q * q.ln();
                }
            }
            acc[k] += s.prob * neg_ent;
        })?;
        let marginal: f64 = acc[..k].iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum();
        let value = (acc[k] - marginal).max(0.0);
        let optimal_prior = DiscreteMeasure::from_weights(acc[..k].to_vec())?;
        return Ok(MiEstimate { value, optimal_prior, std_error: None });
    }
    let samples = mc_samples(problem)?;
    let n = samples.len() as f64;
    let mut pstar = vec![0.0; k];
    for s in &samples {
        for (x, &q) in pstar.iter_mut().zip(s.posterior.probs()) {
            *x += q / n;
        }
    }
    let per: Vec<f64> = samples
        .iter()
        .map(|s| {
            s.posterior
                .probs()
                .iter()
                .zip(&pstar)
                .filter(|(&q, _)| q > 0.0)
                .map(|(&q, &p)| q * (q / p).ln())
                .sum()
        })
        .collect();
    let (value, se) = mean_and_se(&per);
    Ok(MiEstimate { value: value.max(0.0), optimal_prior: DiscreteMeasure::from_weights(pstar)?, std_error: Some(se) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoBoundKind {
    /// `m kl <= I_a + ln(delta^{-a/(a-1)} E_S' E_{P*} e^{m kl})`, moment exact.
    Thm8,
    /// `m kl <= (1/delta) [I + ln E_S E_{P*} e^{m kl}]`, Shannon version.
    KlVersion,
    /// `kl <= (1/m) [I_a + ln(2 sqrt(m) / delta^{a/(a-1)})]`.
    SeegerMi,
    /// `2 (R_S - R_D)^2 <= (1/m) [I_a + ln(2 / delta^{a/(a-1)})]`.
    Esposito,
}

/// A budget `psi` on `kl(R_S || R_D)` (or on `2 (R_S - R_D)^2` for
/// [`InfoBoundKind::Esposito`]) holding with probability `1 - delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoBound {
    pub kind: InfoBoundKind,
    pub m: usize,
    pub alpha: f64,
    pub delta: f64,
    /// `I_alpha`, or the Shannon `I` for the kl version.
    pub information: f64,
    pub log_term: f64,
    pub psi: f64,
}

impl InfoBound {
    /// Largest true risk compatible with empirical risk `q`.
    pub fn certified_risk(&self, q: f64) -> Result<f64> {
        match self.kind {
            InfoBoundKind::Esposito => Ok((q + (self.psi / 2.0).sqrt()).min(1.0)),
            _ => kl_inv(q, self.psi),
        }
    }

    /// Whether the statement fails at `(R_S, R_D) = (q, p)`.
    pub fn violated(&self, q: f64, p: f64) -> bool {
        let lhs = match self.kind {
            InfoBoundKind::Esposito => 2.0 * (q - p) * (q - p),
            _ => kl(q, p).unwrap_or(f64::INFINITY),
        };
        lhs > self.psi + 1e-12 * (1.0 + self.psi)
    }
}

/// Right-hand side of the named information-theoretic bound on `problem`.
pub fn info_bound_rhs(kind: InfoBoundKind, problem: &FiniteLearningProblem, alpha: f64, delta: f64) -> Result<InfoBound> {
    check_alpha(alpha)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", format!("{delta} is outside (0, 1]")));
    }
    let m = problem.m() as f64;
    let conf = -alpha / (alpha - 1.0) * delta.ln();
    let (information, log_term, psi) = match kind {
        InfoBoundKind::Thm8 => {
            let mi = sibson_mi(problem, alpha)?;
            let lt = conf + problem.log_mkl_moment(&mi.optimal_prior)?;
            (mi.value, lt, (mi.value + lt) / m)
        }
        InfoBoundKind::KlVersion => {
            let mi = shannon_mi(problem)?;
            let lt = problem.log_mkl_moment(&mi.optimal_prior)?;
            (mi.value, lt, (mi.value + lt) / (delta * m))
        }
        InfoBoundKind::SeegerMi => {
            let mi = sibson_mi(problem, alpha)?;
            let lt = (2.0 * m.sqrt()).ln() + conf;
            (mi.value, lt, (mi.value + lt) / m)
        }
        InfoBoundKind::Esposito => {
            let mi = sibson_mi(problem, alpha)?;
            let lt = 2f64.ln() + conf;
            (mi.value, lt, (mi.value + lt) / m)
        }
    };
    Ok(InfoBound { kind, m: problem.m(), alpha, delta, information, log_term, psi })
}

/// Bound on `ln phi(h, S)` from the Shannon version,
/// `(1/delta) [I + ln E_S E_{P*} phi]`, for a user `ln phi`.
///
/// `phi` must be at least 1 everywhere; a negative `log_phi` on any tuple is
/// a [`Error::Precondition`] failure.
pub fn kl_version_rhs_with_phi<F>(problem: &FiniteLearningProblem, delta: f64, log_phi: F) -> Result<f64>
where
    F: Fn(usize, &Sample) -> f64 + Sync,
{
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", format!("{delta} is outside (0, 1]")));
    }
    let mi = shannon_mi(problem)?;
    let pstar = &mi.optimal_prior;
    let k = problem.n_hypotheses();
    let acc = problem.sum_over_samples(2, |s, acc| {
        for h in 0..k {
            let lp = log_phi(h, s);
            if lp < 0.0 {
                acc[1] += 1.0;
            }
            acc[0] += s.prob * pstar.probs()[h] * lp.exp();
        }
    })?;
    if acc[1] > 0.0 {
        return Err(Error::Precondition(format!("phi < 1 on {} (sample, hypothesis) pairs", acc[1])));
    }
    Ok((mi.value + acc[0].ln()) / delta)
}

/// Compares the Seeger-form and Esposito statements at one `(q, p)` pair.
///
/// Returns `None` unless `kl(q || p) - 2 (q - p)^2 >= ln(sqrt(m)) / m`. Where
/// that holds, returns whether satisfying the Seeger-form statement implies
/// satisfying the Esposito one.
pub fn seeger_implies_esposito(seeger: &InfoBound, esposito: &InfoBound, q: f64, p: f64) -> Option<bool> {
    let m = seeger.m as f64;
    let gap = crate::binary_kl::pinsker_gap(q, p).ok()?;
    if gap < (m.sqrt()).ln() / m {
        return None;
    }
    Some(seeger.violated(q, p) || !esposito.violated(q, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn toy_2x2x2() -> FiniteLearningProblem {
        // |Z| = 2, m = 2, |H| = 2; rows indexed by tuples 00, 01, 10, 11.
        FiniteLearningProblem::from_toml_str(
            r#"
            name = "toy"
            m = 2
            z_probs = [0.3, 0.7]
            loss = [[0.0, 1.0], [1.0, 0.0]]
            [algorithm]
            kind = "table"
            rows = [[0.9, 0.1], [0.5, 0.5], [0.4, 0.6], [0.2, 0.8]]
            "#,
        )
        .unwrap()
    }

    fn gibbs(beta: f64) -> FiniteLearningProblem {
        FiniteLearningProblem::from_toml_str(&format!(
            r#"
            m = 6
            z_probs = [0.2, 0.5, 0.3]
            loss = [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0]]
            [algorithm]
            kind = "gibbs"
            beta = {beta}
            "#
        ))
        .unwrap()
    }

    fn independent() -> FiniteLearningProblem {
        FiniteLearningProblem::from_toml_str(
            r#"
            m = 4
            z_probs = [0.5, 0.5]
            loss = [[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
            [algorithm]
            kind = "fixed"
            probs = [0.2, 0.3, 0.5]
            "#,
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        let bad = [
            "m = 2\nz_probs = [0.5, 0.6]\nloss = [[0.0, 1.0]]\n[algorithm]\nkind = \"gibbs\"\nbeta = 1.0",
            "m = 2\nz_probs = [0.5, 0.5]\nloss = [[0.0, 1.5]]\n[algorithm]\nkind = \"gibbs\"\nbeta = 1.0",
            "m = 2\nz_probs = [0.5, 0.5]\nloss = [[0.0]]\n[algorithm]\nkind = \"gibbs\"\nbeta = 1.0",
            "m = 2\nz_probs = [0.5, 0.5]\nloss = [[0.0, 1.0]]\n[algorithm]\nkind = \"table\"\nrows = [[1.0]]",
        ];
        for b in bad {
            assert!(matches!(FiniteLearningProblem::from_toml_str(b), Err(Error::Config(_))), "{b}");
        }
    }

    #[test]
    fn tuple_indexing() {
        let p = toy_2x2x2();
        let s = p.sample_at(1);
        assert_abs_diff_eq!(s.prob, 0.3 * 0.7, epsilon = 1e-15);
        assert_eq!(s.risks, vec![0.5, 0.5]);
        assert_eq!(s.posterior.probs(), &[0.5, 0.5]);
        assert_eq!(p.sample_from_atoms(&[1, 0]).index, 2);
        let total = p.sum_over_samples(1, |s, a| a[0] += s.prob).unwrap();
        assert_abs_diff_eq!(total[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn independence_gives_zero_information() {
        let p = independent();
        for alpha in [1.5, 2.0, 7.0] {
            let mi = sibson_mi(&p, alpha).unwrap();
            assert!(mi.value.abs() < 1e-12);
            for (a, b) in mi.optimal_prior.probs().iter().zip([0.2, 0.3, 0.5]) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
            }
        }
        assert!(shannon_mi(&p).unwrap().value.abs() < 1e-12);
        let b = info_bound_rhs(InfoBoundKind::SeegerMi, &p, 2.0, 0.05).unwrap();
        assert_abs_diff_eq!(b.psi, (2.0 * 2.0 / 0.05f64.powi(2)).ln() / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn sibson_matches_simplex_grid_minimum() {
        let p = toy_2x2x2();
        let alpha = 2.0;
        let mi = sibson_mi(&p, alpha).unwrap();
        let steps = 20_000;
        let mut best = f64::INFINITY;
        for i in 1..steps {
            let x = i as f64 / steps as f64;
            let prior = DiscreteMeasure::new(vec![x, 1.0 - x]).unwrap();
            best = best.min(joint_renyi(&p, &prior, alpha).unwrap());
        }
        assert!(mi.value <= best + 1e-12);
        assert!(best - mi.value < 1e-6);
        let at_opt = joint_renyi(&p, &mi.optimal_prior, alpha).unwrap();
        assert_abs_diff_eq!(at_opt, mi.value, epsilon = 1e-12);
    }

    #[test]
    fn toy_frozen_values() {
        // Hand enumeration of the 2x2x2 table problem, 50-digit arithmetic.
        let p = toy_2x2x2();
        assert_abs_diff_eq!(sibson_mi(&p, 2.0).unwrap().value, 0.168_485_278_563_592_12, epsilon = 1e-12);
        assert_abs_diff_eq!(shannon_mi(&p).unwrap().value, 0.096_534_647_506_681_81, epsilon = 1e-12);
        let b = info_bound_rhs(InfoBoundKind::Thm8, &p, 2.0, 0.1).unwrap();
        assert_abs_diff_eq!(b.psi * 2.0, 5.689_946_196_425_839, epsilon = 1e-10);
    }

    #[test]
    fn sibson_nondecreasing_in_alpha_and_dominates_shannon() {
        for p in [toy_2x2x2(), gibbs(0.7), gibbs(3.0)] {
            let i = shannon_mi(&p).unwrap().value;
            let vals: Vec<f64> = [1.5, 2.0, 4.0, 8.0].iter().map(|&a| sibson_mi(&p, a).unwrap().value).collect();
            assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{vals:?}");
            assert!(i <= vals[0] + 1e-12);
            let near = sibson_mi(&p, 1.0 + 1e-4).unwrap().value;
            assert!((near - i).abs() < 1e-3, "{near} vs {i}");
        }
    }

    #[test]
    fn shannon_matches_two_pass_oracle() {
        let p = gibbs(1.3);
        let mi = shannon_mi(&p).unwrap();
        let pstar = mi.optimal_prior.probs().to_vec();
        let direct = p
            .sum_over_samples(1, |s, a| {
                for (q, ps) in s.posterior.probs().iter().zip(&pstar) {
                    if *q > 0.0 {
                        a[0] += s.prob * q * (q / ps).ln();
                    }
                }
            })
            .unwrap()[0];
        assert_abs_diff_eq!(mi.value, direct, epsilon = 1e-12);
    }

    #[test]
    fn optimal_prior_beats_random_priors() {
        use rand::Rng;
        let p = gibbs(2.0);
        let mi = sibson_mi(&p, 2.0).unwrap();
        assert_abs_diff_eq!(mi.optimal_prior.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..1.0)).collect();
            let prior = DiscreteMeasure::from_weights(w).unwrap();
            assert!(mi.value <= joint_renyi(&p, &prior, 2.0).unwrap() + 1e-12);
        }
    }

    #[test]
    fn theorem8_holds_by_enumeration() {
        for p in [toy_2x2x2(), gibbs(0.5), gibbs(4.0)] {
            for delta in [0.05, 0.1, 0.3] {
                let b = info_bound_rhs(InfoBoundKind::Thm8, &p, 2.0, delta).unwrap();
                let truth = p.true_risks().to_vec();
                let viol = p
                    .sum_over_samples(1, |s, a| {
                        for (h, &q) in s.posterior.probs().iter().enumerate() {
                            if b.violated(s.risks[h], truth[h]) {
                                a[0] += s.prob * q;
                            }
                        }
                    })
                    .unwrap()[0];
                assert!(viol <= delta, "violation {viol} > {delta}");
            }
        }
    }

    #[test]
    fn kl_version_precondition() {
        let p = gibbs(1.0);
        let ok = kl_version_rhs_with_phi(&p, 0.1, |h, s| p.m_kl(h, s.risks[h])).unwrap();
        let b = info_bound_rhs(InfoBoundKind::KlVersion, &p, 2.0, 0.1).unwrap();
        assert_abs_diff_eq!(ok, b.psi * p.m() as f64, epsilon = 1e-9);
        let bad = kl_version_rhs_with_phi(&p, 0.1, |h, s| s.risks[h] - 0.5);
        assert!(matches!(bad, Err(Error::Precondition(_))));
    }

    #[test]
    fn cap_and_monte_carlo_fallback() {
        let mut cfg = gibbs(1.0).config().clone();
        cfg.enumeration.cap = 100;
        let p = FiniteLearningProblem::from_config(cfg.clone()).unwrap();
        assert!(matches!(sibson_mi(&p, 2.0), Err(Error::EnumerationCap { .. })));
        cfg.enumeration.monte_carlo = true;
        cfg.enumeration.samples = 40_000;
        let mc = FiniteLearningProblem::from_config(cfg).unwrap();
        let exact = sibson_mi(&gibbs(1.0), 2.0).unwrap().value;
        let est = sibson_mi(&mc, 2.0).unwrap();
        let se = est.std_error.unwrap();
        assert!((est.value - exact).abs() < 4.0 * se + 1e-3, "{} vs {exact} (se {se})", est.value);
        let sh = shannon_mi(&mc).unwrap();
        let exact_sh = shannon_mi(&gibbs(1.0)).unwrap().value;
        assert!((sh.value - exact_sh).abs() < 4.0 * sh.std_error.unwrap() + 1e-3);
    }

    #[test]
    fn seeger_comparison_holds_where_stated() {
        let mut checked = 0;
        for p in [gibbs(1.0), gibbs(3.0)] {
            let s = info_bound_rhs(InfoBoundKind::SeegerMi, &p, 2.0, 0.05).unwrap();
            let e = info_bound_rhs(InfoBoundKind::Esposito, &p, 2.0, 0.05).unwrap();
            for i in 0..=200 {
                for j in 1..200 {
                    let (q, pr) = (i as f64 / 200.0, j as f64 / 200.0);
                    if let Some(ok) = seeger_implies_esposito(&s, &e, q, pr) {
                        assert!(ok, "q={q} p={pr}");
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 0);
    }
}

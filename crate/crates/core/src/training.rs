//! Two-phase training of a Gaussian-perturbed network: prior checkpoints on
//! `S_prior`, early-stopping selection on `S`, then direct minimization of a
//! disintegrated bound over the posterior mean.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binary_kl::{kl_inverse, kl_inverse_grad};
use crate::bounds::{
    bound_baseline_from_dkl, bound_ours_sq, bound_stochastic_sq, catoni_value, default_c_grid, BoundContext,
    BoundReport, Method,
};
use crate::divergences::{disintegrated_kl_gaussian, sq_dist};
use crate::error::{invalid, Error, Result};
use crate::gaussian_net::{
    loss_and_grad, risks, sample_weights, stream_rng, FlatWeights, LabeledDataset, MlpArchitecture, Phase,
};

/// Below this `psi` the kl inverse is treated as flat in `psi`.
pub const PSI_FLOOR: f64 = 1e-9;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn default_lr() -> f64 {
    1e-4
}

fn default_batch() -> usize {
    32
}

fn default_n_eval() -> usize {
    400
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    /// Number of prior epochs, one checkpoint each (`T`).
    pub epochs_prior: usize,
    pub epochs_posterior: usize,
    #[serde(default = "default_lr")]
    pub lr_prior: f64,
    #[serde(default = "default_lr")]
    pub lr_posterior: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    pub sigma2: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub objective: Method,
    #[serde(default = "default_c_grid")]
    pub c_grid: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_eval")]
    pub n_eval: usize,
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs_prior < 1 {
            return Err(invalid("epochs_prior", "T must be at least 1"));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(invalid("sigma2", format!("{} must be positive and finite", self.sigma2)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", format!("{} is outside (0, 1)", self.delta)));
        }
        if self.objective == Method::Stochastic {
            return Err(invalid("objective", "stochastic is a reporting bound, not a training objective"));
        }
        if self.n_eval < 1 {
            return Err(invalid("n_eval", "must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(invalid("batch_size", "must be at least 1"));
        }
        for (name, lr) in [("lr_prior", self.lr_prior), ("lr_posterior", self.lr_posterior)] {
            if !(lr >= 0.0) || !lr.is_finite() {
                return Err(invalid(name, format!("{lr} must be finite and nonnegative")));
            }
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(invalid("c_grid", "must be nonempty with positive finite entries"));
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(dim: usize, lr: f64) -> Self {
        Self { lr, m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * grad[i];
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + ADAM_EPS);
        }
    }
}

/// Catoni's `c`, stored as `u = ln c`.
#[derive(Debug, Clone)]
pub struct CatoniParam {
    u: [f64; 1],
    opt: Adam,
}

impl CatoniParam {
    pub fn new(c: f64, lr: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(invalid("c", format!("{c} must be positive and finite")));
        }
        Ok(Self { u: [c.ln()], opt: Adam::new(1, lr) })
    }

    pub fn c(&self) -> f64 {
        self.u[0].exp()
    }

    /// One descent step given `dB/dc`.
    pub fn step(&mut self, grad_c: f64) {
        let g = [grad_c * self.c()];
        self.opt.step(&mut self.u, &g);
    }
}

/// Grid point with the smallest objective on the first batch, ties to the
/// earliest entry.
pub fn catoni_init(c_grid: &[f64], first_batch_values: &[f64]) -> Result<f64> {
    if c_grid.is_empty() {
        return Err(invalid("c_grid", "must be nonempty"));
    }
    if c_grid.len() != first_batch_values.len() {
        return Err(Error::DimensionMismatch { expected: c_grid.len(), got: first_batch_values.len() });
    }
    let mut best = 0;
    for (i, &v) in first_batch_values.iter().enumerate() {
        if v < first_batch_values[best] {
            best = i;
        }
    }
    Ok(c_grid[best])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub phase: String,
    pub objective: f64,
    pub surrogate_risk: f64,
    pub divergence: Option<f64>,
    pub psi: Option<f64>,
}

pub fn write_metrics_csv(history: &[EpochMetrics], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    for row in history {
        w.serialize(row).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn check_finite(what: &str, x: f64, epoch: usize, step: usize) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("{what} = {x} at epoch {epoch}, step {step}")));
    }
    Ok(())
}

fn batches(n: usize, batch: usize, seed: u64, stream_step: u32, epoch: usize) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(seed, Phase::Shuffle, epoch as u32, stream_step));
    idx.chunks(batch).map(<[usize]>::to_vec).collect()
}

/// Runs `epochs_prior` epochs of noisy SGD on the bounded cross-entropy
/// and returns the mean weights after each epoch.
pub fn learn_priors(
    arch: &MlpArchitecture,
    cfg: &TrainingConfig,
    s_prior: &LabeledDataset,
) -> Result<(Vec<FlatWeights>, Vec<EpochMetrics>)> {
    cfg.validate()?;
    if s_prior.is_empty() {
        return Err(Error::Dataset("S_prior is empty".into()));
    }
    let mut w = FlatWeights::init(arch, cfg.seed);
    let mut opt = Adam::new(w.len(), cfg.lr_prior);
    let mut checkpoints = Vec::with_capacity(cfg.epochs_prior);
    let mut history = Vec::with_capacity(cfg.epochs_prior);
    for epoch in 0..cfg.epochs_prior {
        let mut total = 0.0;
        let bs = batches(s_prior.len(), cfg.batch_size, cfg.seed, 0, epoch);
        for (step, idx) in bs.iter().enumerate() {
            let mut rng = stream_rng(cfg.seed, Phase::Prior, epoch as u32, step as u32);
            let (h, _) = sample_weights(&w, cfg.sigma2, &mut rng)?;
            let (loss, g) = loss_and_grad(arch, &h, s_prior, idx)?;
            check_finite("prior loss", loss, epoch + 1, step)?;
            total += loss;
            opt.step(&mut w.0, &g.0);
        }
        if !w.is_finite() {
            return Err(Error::NonFinite(format!("prior weights after epoch {}", epoch + 1)));
        }
        let (_, ce) = risks(arch, &w, s_prior)?;
        history.push(EpochMetrics {
            epoch: epoch + 1,
            phase: "prior".into(),
            objective: total / bs.len() as f64,
            surrogate_risk: ce,
            divergence: None,
            psi: None,
        });
        checkpoints.push(w.clone());
    }
    Ok((checkpoints, history))
}

/// Mean bounded cross-entropy of each checkpoint's mean weights on `s`.
pub fn selection_criteria(arch: &MlpArchitecture, checkpoints: &[FlatWeights], s: &LabeledDataset) -> Result<Vec<f64>> {
    checkpoints.iter().map(|w| Ok(risks(arch, w, s)?.1)).collect()
}

/// 1-based index of the checkpoint with the lowest criterion on `s`, ties
/// to the smallest index.
pub fn select_prior(arch: &MlpArchitecture, checkpoints: &[FlatWeights], s: &LabeledDataset) -> Result<usize> {
    if checkpoints.is_empty() {
        return Err(invalid("checkpoints", "must be nonempty"));
    }
    let crit = selection_criteria(arch, checkpoints, s)?;
    let mut best = 0;
    for (i, &c) in crit.iter().enumerate() {
        if c < crit[best] {
            best = i;
        }
    }
    Ok(best + 1)
}

/// Objective value and gradients at one optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    /// Mini-batch bounded cross-entropy at `omega + eps`.
    pub surrogate_risk: f64,
    pub divergence: f64,
    pub psi: f64,
    pub grad_omega: FlatWeights,
    /// `dB/dc`; zero unless the method is catoni.
    pub grad_c: f64,
}

/// Inputs shared by every objective evaluation of one posterior run.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveSpec<'a> {
    pub method: Method,
    pub ctx: BoundContext,
    pub sigma2: f64,
    pub prior: &'a FlatWeights,
    pub c_grid_len: usize,
}

fn ours_divergence_grad(obj: &ObjectiveSpec<'_>, omega: &FlatWeights) -> Result<(f64, f64, Vec<f64>)> {
    let ctx = &obj.ctx;
    let m = ctx.m as f64;
    let sq = sq_dist(&omega.0, &obj.prior.0)?;
    let div = ctx.alpha * sq / (2.0 * obj.sigma2);
    let psi = (div + crate::bounds::ours_log_term(ctx)) / m;
    let k = ctx.alpha / (obj.sigma2 * m);
    let g = omega.0.iter().zip(&obj.prior.0).map(|(w, v)| k * (w - v)).collect();
    Ok((div, psi, g))
}

fn baseline_divergence_grad(obj: &ObjectiveSpec<'_>, omega: &FlatWeights, eps: &FlatWeights) -> Result<(f64, f64, Vec<f64>)> {
    let ctx = &obj.ctx;
    let m = ctx.m as f64;
    let t = ctx.t_priors as f64;
    let dkl = disintegrated_kl_gaussian(&omega.0, &eps.0, &obj.prior.0, obj.sigma2)?;
    let (scale, log_term) = match obj.method {
        Method::Rivasplata => (1.0, (2.0 * t * m.sqrt() / ctx.delta).ln()),
        Method::Blanchard => ((m + 1.0) / m, (t * (m + 1.0) / ctx.delta).ln()),
        Method::Catoni => (1.0, (t * obj.c_grid_len as f64 / ctx.delta).ln()),
        other => return Err(invalid("objective", format!("{other} has no disintegrated-KL objective"))),
    };
    let psi = (scale * dkl + log_term) / m;
    let k = scale / (obj.sigma2 * m);
    let g = omega
        .0
        .iter()
        .zip(&eps.0)
        .zip(&obj.prior.0)
        .map(|((w, e), v)| k * (w + e - v))
        .collect();
    Ok((dkl, psi, g))
}

/// Bound objective at mean `omega` with frozen noise `eps` on the batch
/// `idx` of `s`, with gradients with respect to `omega` and, for catoni,
/// `c`.
///
/// kl-form methods minimize `kl_inverse(q, psi)`; catoni minimizes its
/// closed form at the current `c`.
pub fn objective_and_grad(
    arch: &MlpArchitecture,
    obj: &ObjectiveSpec<'_>,
    s: &LabeledDataset,
    idx: &[usize],
    omega: &FlatWeights,
    eps: &FlatWeights,
    c: f64,
) -> Result<ObjectiveEval> {
    let h = FlatWeights(omega.0.iter().zip(&eps.0).map(|(a, b)| a + b).collect());
    let (q_raw, gq) = loss_and_grad(arch, &h, s, idx)?;
    let q = q_raw.clamp(1e-12, 1.0 - 1e-12);
    let (divergence, psi, gpsi) = match obj.method {
        Method::Ours => ours_divergence_grad(obj, omega)?,
        _ => baseline_divergence_grad(obj, omega, eps)?,
    };
    if !psi.is_finite() {
        return Err(Error::NonFinite(format!("psi = {psi}")));
    }
    let (value, dq, dpsi, grad_c) = if obj.method == Method::Catoni {
        if !(c > 0.0) || !c.is_finite() {
            return Err(invalid("c", format!("{c} must be positive and finite")));
        }
        let ea = (-c * q - psi).exp();
        let dn = -(-c).exp_m1();
        let num = -(-c * q - psi).exp_m1();
        let dc = (q * ea * dn - num * (-c).exp()) / (dn * dn);
        (catoni_value(c, q, psi), c * ea / dn, ea / dn, dc)
    } else if psi < PSI_FLOOR {
        let value = kl_inverse(q, PSI_FLOOR, 1e-15)?.p_star;
        let (dq, _) = kl_inverse_grad(q, PSI_FLOOR)?;
        (value, dq, 0.0, 0.0)
    } else {
        let value = kl_inverse(q, psi, 1e-15)?.p_star;
        let (dq, dpsi) = kl_inverse_grad(q, psi)?;
        (value, dq, dpsi, 0.0)
    };
    let grad = gq.0.iter().zip(&gpsi).map(|(a, b)| dq * a + dpsi * b).collect();
    Ok(ObjectiveEval { value, surrogate_risk: q_raw, divergence, psi, grad_omega: FlatWeights(grad), grad_c })
}

/// Result of the posterior phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorFit {
    pub mean: FlatWeights,
    pub catoni_c: Option<f64>,
    pub history: Vec<EpochMetrics>,
}

/// Minimizes the configured bound objective starting from `prior`.
pub fn learn_posterior(
    arch: &MlpArchitecture,
    cfg: &TrainingConfig,
    s: &LabeledDataset,
    prior: &FlatWeights,
) -> Result<PosteriorFit> {
    cfg.validate()?;
    if s.is_empty() {
        return Err(Error::Dataset("S is empty".into()));
    }
    if prior.len() != arch.param_count() {
        return Err(Error::DimensionMismatch { expected: arch.param_count(), got: prior.len() });
    }
    let ctx = BoundContext::with_defaults(s.len(), cfg.delta, cfg.epochs_prior)?;
    let target = ObjectiveSpec { method: cfg.objective, ctx, sigma2: cfg.sigma2, prior, c_grid_len: cfg.c_grid.len() };
    let mut w = prior.clone();
    let mut opt = Adam::new(w.len(), cfg.lr_posterior);
    let mut catoni: Option<CatoniParam> = None;
    let mut history = Vec::with_capacity(cfg.epochs_posterior);
    for epoch in 0..cfg.epochs_posterior {
        let bs = batches(s.len(), cfg.batch_size, cfg.seed, 1, epoch);
        let (mut obj, mut risk, mut div, mut psi) = (0.0, 0.0, 0.0, 0.0);
        for (step, idx) in bs.iter().enumerate() {
            let mut rng = stream_rng(cfg.seed, Phase::Posterior, epoch as u32, step as u32);
            let (_, eps) = sample_weights(&w, cfg.sigma2, &mut rng)?;
            if cfg.objective == Method::Catoni && catoni.is_none() {
                let values = cfg
                    .c_grid
                    .iter()
                    .map(|&c| Ok(objective_and_grad(arch, &target, s, idx, &w, &eps, c)?.value))
                    .collect::<Result<Vec<_>>>()?;
                catoni = Some(CatoniParam::new(catoni_init(&cfg.c_grid, &values)?, cfg.lr_posterior)?);
            }
            let c = catoni.as_ref().map_or(1.0, CatoniParam::c);
            let ev = objective_and_grad(arch, &target, s, idx, &w, &eps, c)?;
            check_finite("posterior objective", ev.value, epoch + 1, step)?;
            opt.step(&mut w.0, &ev.grad_omega.0);
            if let Some(cp) = catoni.as_mut() {
                cp.step(ev.grad_c);
            }
            obj += ev.value;
            risk += ev.surrogate_risk;
            div += ev.divergence;
            psi += ev.psi;
        }
        if !w.is_finite() {
            return Err(Error::NonFinite(format!("posterior weights after epoch {}", epoch + 1)));
        }
        let n = bs.len() as f64;
        history.push(EpochMetrics {
            epoch: epoch + 1,
            phase: "posterior".into(),
            objective: obj / n,
            surrogate_risk: risk / n,
            divergence: Some(div / n),
            psi: Some(psi / n),
        });
    }
    Ok(PosteriorFit { mean: w, catoni_c: catoni.map(|c| c.c()), history })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        if xs.iter().all(|&x| x == xs[0]) {
            return Self { mean: xs[0], std: 0.0 };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// One sampled network `h = w + eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetEvaluation {
    pub index: usize,
    pub train_risk: f64,
    pub train_surrogate: f64,
    pub test_risk: f64,
    pub test_surrogate: f64,
    /// `ln Q(h)/P(h)`.
    pub disintegrated_kl: f64,
    /// Certified 0-1 risk per method.
    pub certified: BTreeMap<Method, f64>,
    /// Certified bounded cross-entropy risk per method.
    pub certified_surrogate: BTreeMap<Method, f64>,
}

/// One row per method: test risk, bound, train risk, divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: Method,
    pub test_risk: MeanStd,
    pub bound: MeanStd,
    pub train_risk: MeanStd,
    pub divergence: MeanStd,
    pub bound_surrogate: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_eval: usize,
    pub rows: Vec<MethodRow>,
    /// Bound on the Gibbs 0-1 risk from the sampled train risks.
    pub stochastic: BoundReport,
    pub nets: Vec<NetEvaluation>,
}

impl EvaluationReport {
    pub fn row(&self, method: Method) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Samples `n` nets around `w`; the `i`-th uses its own stream.
pub fn sample_nets(w: &FlatWeights, sigma2: f64, n: usize, seed: u64) -> Result<Vec<FlatWeights>> {
    (0..n)
        .into_par_iter()
        .map(|i| Ok(sample_weights(w, sigma2, &mut stream_rng(seed, Phase::Evaluation, 0, i as u32))?.1))
        .collect()
}

/// Evaluates every bound on `n_eval` nets drawn from `N(w, sigma2 I)`.
pub fn evaluate(
    arch: &MlpArchitecture,
    cfg: &TrainingConfig,
    w: &FlatWeights,
    prior: &FlatWeights,
    s: &LabeledDataset,
    s_test: &LabeledDataset,
) -> Result<EvaluationReport> {
    cfg.validate()?;
    let ctx = BoundContext::with_defaults(s.len(), cfg.delta, cfg.epochs_prior)?;
    let sq = sq_dist(&w.0, &prior.0)?;
    let eps_all = sample_nets(w, cfg.sigma2, cfg.n_eval, cfg.seed)?;
    let methods = [Method::Ours, Method::Rivasplata, Method::Blanchard, Method::Catoni];
    let nets: Vec<NetEvaluation> = eps_all
        .par_iter()
        .enumerate()
        .map(|(index, eps)| {
            let h = FlatWeights(w.0.iter().zip(&eps.0).map(|(a, b)| a + b).collect());
            let (train_risk, train_surrogate) = risks(arch, &h, s)?;
            let (test_risk, test_surrogate) = risks(arch, &h, s_test)?;
            let dkl = disintegrated_kl_gaussian(&w.0, &eps.0, &prior.0, cfg.sigma2)?;
            let mut certified = BTreeMap::new();
            let mut certified_surrogate = BTreeMap::new();
            for method in methods {
                for (r, out) in [(train_risk, &mut certified), (train_surrogate, &mut certified_surrogate)] {
                    let rep = if method == Method::Ours {
                        bound_ours_sq(&ctx, r, sq, cfg.sigma2)?
                    } else {
                        bound_baseline_from_dkl(&ctx, method, r, dkl, Some(cfg.sigma2), &cfg.c_grid)?
                    };
                    out.insert(method, rep.certified_risk);
                }
            }
            Ok(NetEvaluation {
                index,
                train_risk,
                train_surrogate,
                test_risk,
                test_surrogate,
                disintegrated_kl: dkl,
                certified,
                certified_surrogate,
            })
        })
        .collect::<Result<_>>()?;

    let col = |f: &dyn Fn(&NetEvaluation) -> f64| MeanStd::of(&nets.iter().map(f).collect::<Vec<_>>());
    let ours_div = ctx.alpha * sq / (2.0 * cfg.sigma2);
    let mut rows: Vec<MethodRow> = methods
        .iter()
        .map(|&method| MethodRow {
            method,
            test_risk: col(&|n| n.test_risk),
            bound: col(&|n| n.certified[&method]),
            train_risk: col(&|n| n.train_risk),
            divergence: if method == Method::Ours {
                col(&|_| ours_div)
            } else {
                col(&|n| n.disintegrated_kl)
            },
            bound_surrogate: col(&|n| n.certified_surrogate[&method]),
        })
        .collect();
    let train: Vec<f64> = nets.iter().map(|n| n.train_risk).collect();
    let train_ce: Vec<f64> = nets.iter().map(|n| n.train_surrogate).collect();
    let stochastic = bound_stochastic_sq(&ctx, &train, sq, cfg.sigma2)?;
    let stochastic_ce = bound_stochastic_sq(&ctx, &train_ce, sq, cfg.sigma2)?;
    rows.push(MethodRow {
        method: Method::Stochastic,
        test_risk: col(&|n| n.test_risk),
        bound: MeanStd { mean: stochastic.certified_risk, std: 0.0 },
        train_risk: col(&|n| n.train_risk),
        divergence: MeanStd { mean: stochastic.divergence, std: 0.0 },
        bound_surrogate: MeanStd { mean: stochastic_ce.certified_risk, std: 0.0 },
    });
    Ok(EvaluationReport { n_eval: cfg.n_eval, rows, stochastic, nets })
}

/// Everything produced by one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub config: TrainingConfig,
    pub architecture: MlpArchitecture,
    pub prior_checkpoints: Vec<FlatWeights>,
    pub selection_criteria: Vec<f64>,
    /// 1-based.
    pub selected_prior_index: usize,
    pub posterior_mean: FlatWeights,
    pub catoni_c: Option<f64>,
    pub history: Vec<EpochMetrics>,
    pub report: Option<EvaluationReport>,
}

impl TrainRun {
    pub fn selected_prior(&self) -> &FlatWeights {
        &self.prior_checkpoints[self.selected_prior_index - 1]
    }
}

/// Both training phases. `s_prior` and `s` must not share rows.
pub fn train(
    arch: &MlpArchitecture,
    cfg: &TrainingConfig,
    s_prior: &LabeledDataset,
    s: &LabeledDataset,
) -> Result<TrainRun> {
    cfg.validate()?;
    if !s_prior.is_disjoint_from(s) {
        return Err(Error::Dataset("S_prior and S share rows".into()));
    }
    let (prior_checkpoints, mut history) = learn_priors(arch, cfg, s_prior)?;
    let selection_criteria = selection_criteria(arch, &prior_checkpoints, s)?;
    let selected_prior_index = select_prior(arch, &prior_checkpoints, s)?;
    let fit = learn_posterior(arch, cfg, s, &prior_checkpoints[selected_prior_index - 1])?;
    history.extend(fit.history);
    Ok(TrainRun {
        config: cfg.clone(),
        architecture: arch.clone(),
        prior_checkpoints,
        selection_criteria,
        selected_prior_index,
        posterior_mean: fit.mean,
        catoni_c: fit.catoni_c,
        history,
        report: None,
    })
}

/// Fills `run.report` from `n_eval` sampled nets.
pub fn evaluate_run(
    arch: &MlpArchitecture,
    run: &mut TrainRun,
    s: &LabeledDataset,
    s_test: &LabeledDataset,
) -> Result<()> {
    let report = evaluate(arch, &run.config, &run.posterior_mean, run.selected_prior(), s, s_test)?;
    run.report = Some(report);
    Ok(())
}

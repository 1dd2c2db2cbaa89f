use anyhow::{anyhow, bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use dispac::bounds::{
    bound_baseline, bound_baseline_from_dkl, bound_ours, bound_ours_sq, bound_stochastic, bound_stochastic_sq,
    default_c_grid, BoundContext, BoundReport, Method,
};

use crate::output::{self, Envelope};
use crate::Common;

#[derive(Debug, Clone, PartialEq)]
pub struct NumList(pub Vec<f64>);

fn num_list(s: &str) -> std::result::Result<NumList, String> {
    output::parse_list(s).map(NumList)
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// ours, rivasplata, blanchard, catoni or stochastic.
    #[arg(long)]
    method: Option<Method>,
    /// Size of the sample S.
    #[arg(long, allow_negative_numbers = true)]
    m: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Number of candidate priors.
    #[arg(long = "T", alias = "t")]
    t_priors: Option<usize>,
    /// Renyi order for ours.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma2: Option<f64>,
    /// Empirical risk R_S(h).
    #[arg(long, allow_negative_numbers = true)]
    risk: Option<f64>,
    /// Sampled-net risks for the stochastic bound.
    #[arg(long, value_parser = num_list, allow_hyphen_values = true)]
    risks: Option<NumList>,
    /// Precomputed ||w - v||^2.
    #[arg(long, allow_negative_numbers = true)]
    sq_dist: Option<f64>,
    /// Precomputed disintegrated KL ln Q(h)/P(h).
    #[arg(long, allow_negative_numbers = true)]
    dkl: Option<f64>,
    /// Posterior mean, comma-separated.
    #[arg(long, value_parser = num_list, allow_hyphen_values = true)]
    w: Option<NumList>,
    /// Prior mean, comma-separated.
    #[arg(long, value_parser = num_list, allow_hyphen_values = true)]
    v: Option<NumList>,
    /// Sampled noise eps with h = w + eps, comma-separated.
    #[arg(long, value_parser = num_list, allow_hyphen_values = true)]
    eps: Option<NumList>,
    /// Catoni grid, comma-separated.
    #[arg(long, value_parser = num_list, allow_hyphen_values = true)]
    c_grid: Option<NumList>,
}

/// Fully resolved inputs, echoed into the output.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    pub method: Option<Method>,
    pub m: Option<usize>,
    pub delta: Option<f64>,
    #[serde(rename = "T")]
    pub t_priors: Option<usize>,
    pub alpha: Option<f64>,
    pub sigma2: Option<f64>,
    pub risk: Option<f64>,
    pub risks: Option<Vec<f64>>,
    pub sq_dist: Option<f64>,
    pub dkl: Option<f64>,
    pub w: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub c_grid: Option<Vec<f64>>,
}

fn merge(args: BoundArgs, file: BoundInputs) -> BoundInputs {
    let l = |x: Option<NumList>| x.map(|n| n.0);
    BoundInputs {
        method: args.method.or(file.method),
        m: args.m.or(file.m),
        delta: args.delta.or(file.delta),
        t_priors: args.t_priors.or(file.t_priors),
        alpha: args.alpha.or(file.alpha),
        sigma2: args.sigma2.or(file.sigma2),
        risk: args.risk.or(file.risk),
        risks: l(args.risks).or(file.risks),
        sq_dist: args.sq_dist.or(file.sq_dist),
        dkl: args.dkl.or(file.dkl),
        w: l(args.w).or(file.w),
        v: l(args.v).or(file.v),
        eps: l(args.eps).or(file.eps),
        c_grid: l(args.c_grid).or(file.c_grid),
    }
}

fn need<T: Copy>(x: Option<T>, flag: &str) -> Result<T> {
    x.ok_or_else(|| anyhow!("{flag} is required"))
}

fn validate(inp: &mut BoundInputs) -> Result<()> {
    let m = need(inp.m, "--m")?;
    if m < 1 {
        bail!("--m must be at least 1");
    }
    let delta = need(inp.delta, "--delta")?;
    if !(delta > 0.0 && delta < 1.0) {
        bail!("--delta {delta} is outside (0, 1)");
    }
    let t = *inp.t_priors.get_or_insert(1);
    if t < 1 {
        bail!("--T must be at least 1");
    }
    let alpha = *inp.alpha.get_or_insert(2.0);
    if !(alpha > 1.0) || !alpha.is_finite() {
        bail!("--alpha {alpha} must be finite and > 1");
    }
    if let Some(s) = inp.sigma2 {
        if !(s > 0.0) || !s.is_finite() {
            bail!("--sigma2 {s} must be positive and finite");
        }
    }
    if let Some(r) = inp.risk {
        if !(0.0..=1.0).contains(&r) {
            bail!("--risk {r} is outside [0, 1]");
        }
    }
    if let Some(rs) = &inp.risks {
        if rs.is_empty() || rs.iter().any(|r| !(0.0..=1.0).contains(r)) {
            bail!("--risks must be a nonempty list of values in [0, 1]");
        }
    }
    if let Some(d) = inp.sq_dist {
        if !(d >= 0.0) || !d.is_finite() {
            bail!("--sq-dist {d} must be finite and nonnegative");
        }
    }
    if let Some(d) = inp.dkl {
        if !d.is_finite() {
            bail!("--dkl {d} must be finite");
        }
    }
    if inp.method == Some(Method::Catoni) {
        let grid = inp.c_grid.get_or_insert_with(default_c_grid);
        if grid.is_empty() || grid.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            bail!("--c-grid must be a nonempty list of positive numbers");
        }
    }
    Ok(())
}

fn compute(inp: &BoundInputs) -> Result<BoundReport> {
    let method = need(inp.method, "--method")?;
    let ctx = BoundContext::new(inp.m.unwrap(), inp.delta.unwrap(), inp.t_priors.unwrap(), inp.alpha.unwrap())?;
    let vectors = |need_eps: bool| -> Result<Option<(&[f64], &[f64], &[f64])>> {
        match (&inp.w, &inp.v, &inp.eps) {
            (Some(w), Some(v), eps) => {
                if w.len() != v.len() {
                    bail!("--w has {} entries but --v has {}", w.len(), v.len());
                }
                let e: &[f64] = match eps {
                    Some(e) => e,
                    None if need_eps => bail!("--eps is required with --w and --v for {method}"),
                    None => &[],
                };
                Ok(Some((w, v, e)))
            }
            (None, None, _) => Ok(None),
            _ => bail!("--w and --v must be given together"),
        }
    };
    Ok(match method {
        Method::Ours => {
            let risk = need(inp.risk, "--risk")?;
            let sigma2 = need(inp.sigma2, "--sigma2")?;
            match (inp.sq_dist, vectors(false)?) {
                (Some(sq), _) => bound_ours_sq(&ctx, risk, sq, sigma2)?,
                (None, Some((w, v, _))) => bound_ours(&ctx, risk, w, v, sigma2)?,
                (None, None) => bail!("ours needs --sq-dist or --w and --v"),
            }
        }
        Method::Stochastic => {
            let risks = inp.risks.as_deref().ok_or_else(|| anyhow!("--risks is required for stochastic"))?;
            let sigma2 = need(inp.sigma2, "--sigma2")?;
            match (inp.sq_dist, vectors(false)?) {
                (Some(sq), _) => bound_stochastic_sq(&ctx, risks, sq, sigma2)?,
                (None, Some((w, v, _))) => bound_stochastic(&ctx, risks, w, v, sigma2)?,
                (None, None) => bail!("stochastic needs --sq-dist or --w and --v"),
            }
        }
        _ => {
            let risk = need(inp.risk, "--risk")?;
            let grid = inp.c_grid.clone().unwrap_or_default();
            match (inp.dkl, vectors(true)?) {
                (Some(d), _) => bound_baseline_from_dkl(&ctx, method, risk, d, inp.sigma2, &grid)?,
                (None, Some((w, v, e))) => {
                    let sigma2 = need(inp.sigma2, "--sigma2")?;
                    if e.len() != w.len() {
                        bail!("--eps has {} entries but --w has {}", e.len(), w.len());
                    }
                    bound_baseline(&ctx, method, risk, w, e, v, sigma2, &grid)?
                }
                (None, None) => bail!("{method} needs --dkl or --w, --eps and --v"),
            }
        }
    })
}

pub fn run(common: &Common, args: BoundArgs) -> Result<()> {
    let file = match &common.config {
        Some(p) => output::section::<BoundInputs>(&output::read_config(p)?, "bound", true)?.unwrap_or_default(),
        None => BoundInputs::default(),
    };
    let mut inputs = merge(args, file);
    validate(&mut inputs)?;
    let report = compute(&inputs)?;
    let json = output::to_json(&Envelope { schema_version: output::SCHEMA_VERSION, command: "bound", inputs, result: report })?;
    print!("{json}");
    if let Some(dir) = &common.out_dir {
        output::prepare_dir(dir)?;
        output::write(dir, "bound.json", &json)?;
    }
    Ok(())
}

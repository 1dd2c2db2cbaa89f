use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use dispac::mutual_info::{
    info_bound_rhs, shannon_mi, sibson_mi, FiniteLearningProblem, InfoBound, InfoBoundKind, MiEstimate,
};

use crate::output::{self, Envelope};
use crate::validate::{load_problem, require_tractable};
use crate::Common;

#[derive(Debug, Args)]
pub struct MiArgs {
    /// Use a shipped fixture instead of --config.
    #[arg(long)]
    fixture: Option<String>,
    /// Comma-separated orders alpha > 1.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long)]
    delta: Option<f64>,
}

fn default_alphas() -> Vec<f64> {
    vec![1.5, 2.0, 5.0, 10.0]
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiSettings {
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for MiSettings {
    fn default() -> Self {
        Self { alphas: default_alphas(), delta: default_delta() }
    }
}

#[derive(Serialize)]
struct SibsonRow {
    alpha: f64,
    #[serde(flatten)]
    estimate: MiEstimate,
}

#[derive(Serialize)]
struct Outcome {
    problem: String,
    enumerated: bool,
    shannon: MiEstimate,
    sibson: Vec<SibsonRow>,
    bounds: Vec<InfoBound>,
    /// Bounds that need an exact moment and were skipped.
    skipped: Vec<InfoBoundKind>,
}

pub fn run(common: &Common, args: MiArgs) -> Result<()> {
    let (problem, table) = load_problem(common, args.fixture.as_deref())?;
    let Some(mut problem) = problem else {
        bail!("mi needs --fixture or --config with a problem");
    };
    if let Some(seed) = common.seed {
        let mut cfg = problem.config().clone();
        cfg.enumeration.seed = seed;
        problem = FiniteLearningProblem::from_config(cfg)?;
    }
    require_tractable(&problem)?;
    let mut settings = match &table {
        Some(t) => output::section::<MiSettings>(t, "mi", false)?.unwrap_or_default(),
        None => MiSettings::default(),
    };
    if let Some(a) = args.alphas {
        settings.alphas = a;
    }
    if let Some(d) = args.delta {
        settings.delta = d;
    }
    if settings.alphas.is_empty() || settings.alphas.iter().any(|&a| !(a > 1.0) || !a.is_finite()) {
        bail!("--alphas must be a nonempty list of finite values > 1");
    }
    if !(settings.delta > 0.0 && settings.delta <= 1.0) {
        bail!("--delta {} is outside (0, 1]", settings.delta);
    }

    let enumerated = problem.is_enumerable();
    let shannon = shannon_mi(&problem)?;
    let mut sibson = Vec::new();
    let mut bounds = Vec::new();
    let mut skipped = Vec::new();
    for &alpha in &settings.alphas {
        sibson.push(SibsonRow { alpha, estimate: sibson_mi(&problem, alpha)? });
        for kind in [InfoBoundKind::Thm8, InfoBoundKind::SeegerMi, InfoBoundKind::Esposito] {
            if kind == InfoBoundKind::Thm8 && !enumerated {
                if !skipped.contains(&kind) {
                    skipped.push(kind);
                }
                continue;
            }
            bounds.push(info_bound_rhs(kind, &problem, alpha, settings.delta)?);
        }
    }
    if enumerated {
        bounds.push(info_bound_rhs(InfoBoundKind::KlVersion, &problem, 2.0, settings.delta)?);
    } else {
        skipped.push(InfoBoundKind::KlVersion);
    }

    #[derive(Serialize)]
    struct Inputs<'a> {
        problem: &'a dispac::mutual_info::ProblemConfig,
        mi: &'a MiSettings,
    }
    let outcome = Outcome { problem: problem.name().to_string(), enumerated, shannon, sibson, bounds, skipped };
    let inputs = Inputs { problem: problem.config(), mi: &settings };
    let json = output::to_json(&Envelope { schema_version: output::SCHEMA_VERSION, command: "mi", inputs, result: &outcome })?;
    print!("{json}");
    if let Some(dir) = &common.out_dir {
        output::prepare_dir(dir)?;
        output::write(dir, "mi.json", &json)?;
    }
    Ok(())
}

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use dispac::mutual_info::{FiniteLearningProblem, ProblemConfig};
use dispac::validity_sim::{
    append_coverage_csv, exact_coverage, fixture, maurer_check, mc_coverage, BoundKind, CoverageResult, MaurerRow,
    FIXTURES,
};

use crate::output::{self, Envelope};
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Exact when enumerable, Monte Carlo otherwise.
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Use a shipped fixture instead of --config.
    #[arg(long)]
    fixture: Option<String>,
    /// Comma-separated bound kinds.
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<BoundKind>>,
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Also check the Maurer constant for m in 1..=M.
    #[arg(long, value_name = "M")]
    maurer: Option<usize>,
    /// List shipped fixtures and exit.
    #[arg(long)]
    list_fixtures: bool,
}

fn default_kinds() -> Vec<BoundKind> {
    BoundKind::ALL.to_vec()
}

fn default_deltas() -> Vec<f64> {
    vec![0.05, 0.1]
}

fn default_trials() -> u64 {
    20_000
}

fn default_mode() -> Mode {
    Mode::Auto
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulation {
    #[serde(default = "default_kinds")]
    pub kinds: Vec<BoundKind>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub maurer_m_max: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for Simulation {
    fn default() -> Self {
        Self {
            kinds: default_kinds(),
            deltas: default_deltas(),
            trials: default_trials(),
            mode: default_mode(),
            maurer_m_max: None,
            seed: 0,
        }
    }
}

#[derive(Serialize)]
struct Inputs<'a> {
    problem: Option<&'a ProblemConfig>,
    simulation: &'a Simulation,
}

#[derive(Serialize)]
struct MaurerSummary {
    m_max: usize,
    cells: usize,
    all_hold: bool,
    failures: Vec<MaurerRow>,
}

#[derive(Serialize)]
struct Outcome {
    problem: Option<String>,
    coverage: Vec<CoverageResult>,
    maurer: Option<MaurerSummary>,
}

/// Loads a finite problem from `--fixture` or from `--config` (a `[problem]`
/// section, or the whole file).
pub fn load_problem(common: &Common, fixture_name: Option<&str>) -> Result<(Option<FiniteLearningProblem>, Option<toml::Table>)> {
    if let Some(name) = fixture_name {
        let names: Vec<&str> = FIXTURES.iter().map(|(n, _)| *n).collect();
        let p = fixture(name).with_context(|| format!("--fixture: expected one of {}", names.join(", ")))?;
        let table = match &common.config {
            Some(path) => Some(output::read_config(path)?),
            None => None,
        };
        return Ok((Some(p), table));
    }
    let Some(path) = &common.config else {
        return Ok((None, None));
    };
    let table = output::read_config(path)?;
    let problem_table = match table.get("problem") {
        Some(_) => output::section::<ProblemConfig>(&table, "problem", false)?,
        None if table.contains_key("simulation") || table.contains_key("mi") => None,
        None => output::section::<ProblemConfig>(&table, "problem", true)?,
    };
    let problem = match problem_table {
        Some(cfg) => Some(FiniteLearningProblem::from_config(cfg).context("--config: [problem]")?),
        None => None,
    };
    Ok((problem, Some(table)))
}

/// Fails with an explanation when the problem is too large to enumerate and
/// sampling is not enabled.
pub fn require_tractable(p: &FiniteLearningProblem) -> Result<()> {
    if !p.is_enumerable() && !p.enumeration().monte_carlo {
        let size = p.enumeration_size().map_or("more than 2^128".to_string(), |n| n.to_string());
        bail!(
            "problem {:?} needs |Z|^m |H| = {size} evaluations, above the enumeration cap of {}; \
             raise enumeration.cap or set enumeration.monte_carlo = true",
            p.name(),
            p.enumeration().cap
        );
    }
    Ok(())
}

pub fn run(common: &Common, args: ValidateArgs) -> Result<()> {
    if args.list_fixtures {
        for (name, _) in FIXTURES {
            println!("{name}");
        }
        return Ok(());
    }
    let (problem, table) = load_problem(common, args.fixture.as_deref())?;
    let mut sim = match &table {
        Some(t) => output::section::<Simulation>(t, "simulation", false)?.unwrap_or_default(),
        None => Simulation::default(),
    };
    if let Some(k) = args.kinds {
        sim.kinds = k;
    }
    if let Some(d) = args.deltas {
        sim.deltas = d;
    }
    if let Some(t) = args.trials {
        sim.trials = t;
    }
    if let Some(m) = args.mode {
        sim.mode = m;
    }
    if args.maurer.is_some() {
        sim.maurer_m_max = args.maurer;
    }
    if let Some(s) = common.seed {
        sim.seed = s;
    }
    if sim.deltas.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
        bail!("--deltas entries must lie in (0, 1]");
    }
    if sim.trials < 1 {
        bail!("--trials must be at least 1");
    }
    if sim.kinds.is_empty() {
        bail!("--kinds must name at least one bound kind");
    }
    if problem.is_none() && sim.maurer_m_max.is_none() {
        bail!("validate needs --fixture, --config with a problem, or --maurer");
    }

    let mut coverage = Vec::new();
    if let Some(p) = &problem {
        if sim.mode == Mode::Exact && !p.is_enumerable() {
            bail!("--mode exact: problem {:?} exceeds the enumeration cap of {}", p.name(), p.enumeration().cap);
        }
        if sim.mode == Mode::Auto {
            require_tractable(p)?;
        }
        for &kind in &sim.kinds {
            for &delta in &sim.deltas {
                let r = match sim.mode {
                    Mode::Exact => exact_coverage(p, kind, delta)?,
                    Mode::MonteCarlo => mc_coverage(p, kind, delta, sim.trials, sim.seed)?,
                    Mode::Auto if p.is_enumerable() => exact_coverage(p, kind, delta)?,
                    Mode::Auto => mc_coverage(p, kind, delta, sim.trials, sim.seed)?,
                };
                coverage.push(r);
            }
        }
    }
    let maurer = match sim.maurer_m_max {
        Some(m_max) => {
            let rows = maurer_check(m_max)?;
            let cells = rows.len();
            let failures: Vec<MaurerRow> = rows.into_iter().filter(|r| !r.holds).collect();
            Some(MaurerSummary { m_max, cells, all_hold: failures.is_empty(), failures })
        }
        None => None,
    };

    if let Some(dir) = &common.out_dir {
        output::prepare_dir(dir)?;
        if let Some(p) = &problem {
            append_coverage_csv(&dir.join("coverage.csv"), p.name(), &coverage)?;
        }
    }
    let outcome = Outcome { problem: problem.as_ref().map(|p| p.name().to_string()), coverage, maurer };
    let inputs = Inputs { problem: problem.as_ref().map(|p| p.config()), simulation: &sim };
    let json = output::to_json(&Envelope { schema_version: output::SCHEMA_VERSION, command: "validate", inputs, result: &outcome })?;
    print!("{json}");
    if let Some(dir) = &common.out_dir {
        output::write(dir, "validate.json", &json)?;
    }
    Ok(())
}

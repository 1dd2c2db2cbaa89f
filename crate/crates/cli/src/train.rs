use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use dispac::gaussian_net::{blobs, two_moons, LabeledDataset, MlpArchitecture, DEFAULT_LEAKY_SLOPE};
use dispac::training::{evaluate_run, train, write_metrics_csv, EvaluationReport, TrainingConfig};

use crate::output::{self, Envelope};
use crate::Common;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Override the training objective.
    #[arg(long)]
    objective: Option<dispac::Method>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Blobs { n: usize, dim: usize, classes: usize, separation: f64 },
    TwoMoons { n: usize, noise: f64 },
    /// Feature columns then a 0-based integer label; relative paths resolve
    /// against the config file.
    Csv { path: PathBuf, classes: Option<usize> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub n_prior: usize,
    pub n_posterior: usize,
    pub n_test: usize,
    pub source: DataSource,
}

fn default_hidden() -> Vec<usize> {
    vec![24]
}

fn default_slope() -> f64 {
    DEFAULT_LEAKY_SLOPE
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_slope")]
    pub leaky_slope: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden: default_hidden(), leaky_slope: default_slope() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub data: DataConfig,
    #[serde(default)]
    pub model: ModelConfig,
    pub training: TrainingConfig,
}

fn load_data(cfg: &DataConfig, base: &Path, seed: u64) -> Result<LabeledDataset> {
    let need = cfg.n_prior + cfg.n_posterior + cfg.n_test;
    let data = match &cfg.source {
        DataSource::Blobs { n, dim, classes, separation } => blobs(*n, *dim, *classes, *separation, seed)?,
        DataSource::TwoMoons { n, noise } => two_moons(*n, *noise, seed)?,
        DataSource::Csv { path, classes } => {
            let p = if path.is_absolute() { path.clone() } else { base.join(path) };
            if !p.is_file() {
                bail!("[data.source] path {} does not exist", p.display());
            }
            LabeledDataset::from_csv(&p, *classes)?
        }
    };
    if data.len() < need {
        bail!("[data] asks for {need} rows but the source has {}", data.len());
    }
    if data.n_classes < 2 {
        bail!("[data] needs at least two classes");
    }
    Ok(data)
}

fn summary_table(rep: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {:>17} {:>17} {:>17} {:>19}", "method", "R_T(h)", "Bnd", "R_S(h)", "Div");
    for r in &rep.rows {
        let _ = writeln!(
            s,
            "{:<12} {:>8.4} +- {:<6.4} {:>8.4} +- {:<6.4} {:>8.4} +- {:<6.4} {:>9.3} +- {:<7.3}",
            r.method.name(),
            r.test_risk.mean,
            r.test_risk.std,
            r.bound.mean,
            r.bound.std,
            r.train_risk.mean,
            r.train_risk.std,
            r.divergence.mean,
            r.divergence.std
        );
    }
    s
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    method: &'a str,
    test_risk_mean: f64,
    test_risk_std: f64,
    bound_mean: f64,
    bound_std: f64,
    train_risk_mean: f64,
    train_risk_std: f64,
    divergence_mean: f64,
    divergence_std: f64,
    bound_surrogate_mean: f64,
    bound_surrogate_std: f64,
}

fn write_summary_csv(rep: &EvaluationReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for r in &rep.rows {
        w.serialize(SummaryRow {
            method: r.method.name(),
            test_risk_mean: r.test_risk.mean,
            test_risk_std: r.test_risk.std,
            bound_mean: r.bound.mean,
            bound_std: r.bound.std,
            train_risk_mean: r.train_risk.mean,
            train_risk_std: r.train_risk.std,
            divergence_mean: r.divergence.mean,
            divergence_std: r.divergence.std,
            bound_surrogate_mean: r.bound_surrogate.mean,
            bound_surrogate_std: r.bound_surrogate.std,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(common: &Common, args: TrainArgs) -> Result<()> {
    let Some(cfg_path) = &common.config else {
        bail!("train needs --config");
    };
    let table = output::read_config(cfg_path)?;
    let mut file: TrainFile = toml::Value::Table(table).try_into().context("--config: bad train config")?;
    if let Some(seed) = common.seed {
        file.training.seed = seed;
    }
    if let Some(obj) = args.objective {
        file.training.objective = obj;
    }
    file.training.validate().context("[training]")?;
    let base = cfg_path.parent().unwrap_or(Path::new("."));
    let seed = file.training.seed;
    let data = load_data(&file.data, base, seed)?;
    let [s_prior, s, s_test] = data.split_three(file.data.n_prior, file.data.n_posterior, file.data.n_test, seed)?;
    let mut widths = vec![data.dim()];
    widths.extend(&file.model.hidden);
    widths.push(data.n_classes);
    let arch = MlpArchitecture::new(widths, file.model.leaky_slope).context("[model]")?;

    let out_dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("dispac-out"));
    output::prepare_dir(&out_dir)?;

    let mut run = train(&arch, &file.training, &s_prior, &s)?;
    evaluate_run(&arch, &mut run, &s, &s_test)?;
    let report = run.report.as_ref().expect("evaluated");
    let table = summary_table(report);

    write_metrics_csv(&run.history, &out_dir.join("metrics.csv"))?;
    write_summary_csv(report, &out_dir.join("summary.csv"))?;
    let json = output::to_json(&Envelope { schema_version: output::SCHEMA_VERSION, command: "train", inputs: &file, result: &run })?;
    output::write(&out_dir, "run.json", &json)?;
    output::write(&out_dir, "summary.txt", &table)?;
    println!(
        "d = {}, T = {}, selected prior {}, m = {}, sigma2 = {}, delta = {}",
        arch.param_count(),
        file.training.epochs_prior,
        run.selected_prior_index,
        s.len(),
        file.training.sigma2,
        file.training.delta
    );
    print!("{table}");
    Ok(())
}

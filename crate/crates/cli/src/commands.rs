//! One function per subcommand. Each returns the summary object printed on
//! standard output and also written to `summary.json`.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use persuasion::densities::{classify_shape_default, GridDensity1D};
use persuasion::io::{
    to_json_rounded, write_partition_csv, write_sweep_csv, write_value_table_csv, PartitionTable, PayoffReport,
};
use persuasion::persuasion::{partition, partition_measures, simulate_population, JointDensityCP};
use persuasion::statics::{
    check_condition, corollary2_sweep, corollary3_sweep, theorem2_sweep, theorem3_sweep, SweepResult,
};
use persuasion::{build_value_table, sender_payoff, solve, Policy, Prior};

use crate::config::{ChainKind, Command, ConfigError, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] persuasion::Error),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Model(persuasion::Error::Consistency(_)) => 3,
            RunError::Config(_) | RunError::Model(_) => 2,
            RunError::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Model(persuasion::Error::Consistency(_)) => "consistency",
            RunError::Config(_) | RunError::Model(_) => "config",
            RunError::Io { .. } => "io",
        }
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// Output directory; files are written to a temporary name and renamed into
/// place so readers never see a partial file.
struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn write(&self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> persuasion::Result<()>) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let mut bytes = Vec::new();
        fill(&mut bytes)?;
        let io = |path: &PathBuf| {
            let path = path.clone();
            move |source| RunError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let target = dir.join(name);
        let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
        fs::File::create(&tmp).and_then(|mut f| f.write_all(&bytes).and_then(|_| f.sync_all())).map_err(io(&tmp))?;
        fs::rename(&tmp, &target).map_err(io(&target))
    }

    fn json(&self, name: &str, value: &Value) -> Result<()> {
        self.write(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)?;
            buf.push(b'\n');
            Ok(())
        })
    }
}

fn rounded<T: Serialize>(value: &T) -> Result<Value> {
    Ok(to_json_rounded(value)?)
}

/// Merge `extra` into the JSON object `base`.
fn with_fields(base: Value, extra: Value) -> Value {
    match (base, extra) {
        (Value::Object(mut a), Value::Object(b)) => {
            a.extend(b);
            Value::Object(a)
        }
        (base, _) => base,
    }
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Value> {
    let out = Output { dir: cfg.out.clone() };
    let summary = match command {
        Command::Solve => run_solve(cfg, &out)?,
        Command::Partition => run_partition(cfg, &out)?,
        Command::SweepPolarization => run_sweep_polarization(cfg, &out)?,
        Command::SweepOrder => run_sweep_order(cfg, &out)?,
        Command::CheckShape => run_check_shape(cfg)?,
        Command::CheckCondition => run_check_condition(cfg)?,
        Command::Simulate => run_simulate(cfg)?,
    };
    out.json("summary.json", &summary)?;
    Ok(summary)
}

fn model(cfg: &ExperimentConfig) -> Result<(JointDensityCP, Prior, usize)> {
    let n = cfg.grid_n()?;
    let p_s = cfg.p_s()?;
    Ok((cfg.joint()?.to_joint(n)?, p_s, n))
}

/// The policy override, or the optimal policy when none is given.
fn policy(cfg: &ExperimentConfig, f: &JointDensityCP, p_s: Prior, n: usize) -> Result<Policy> {
    match cfg.policy()? {
        Some((s0, s1)) => Ok(Policy::relabeled(s0, s1)?),
        None => Ok(solve(&build_value_table(f, p_s, n)?, p_s)?.policy),
    }
}

fn run_solve(cfg: &ExperimentConfig, out: &Output) -> Result<Value> {
    let (f, p_s, n) = model(cfg)?;
    let vt = build_value_table(&f, p_s, n)?;
    let sol = solve(&vt, p_s)?;
    out.write("value_table.csv", |w| write_value_table_csv(&vt, w))?;
    Ok(with_fields(rounded(&sol)?, json!({"command": "solve", "shape": vt.shape().tag.as_str()})))
}

fn run_partition(cfg: &ExperimentConfig, out: &Output) -> Result<Value> {
    let (f, p_s, n) = model(cfg)?;
    let pol = policy(cfg, &f, p_s, n)?;
    let part = partition(&pol, n);
    let report = PayoffReport::new(&pol, sender_payoff(&pol, &f, p_s), partition_measures(&part, &f));
    out.write("partition.csv", |w| write_partition_csv(&PartitionTable::from(&part), w))?;
    Ok(with_fields(rounded(&report)?, json!({"command": "partition"})))
}

fn sweep_summary(command: Command, sweep: &SweepResult, out: &Output) -> Result<Value> {
    out.write("sweep.csv", |w| write_sweep_csv(&sweep.records, w))?;
    Ok(json!({
        "command": command.as_str(),
        "rows": sweep.records.len(),
        "verdict": rounded(&sweep.verdict)?,
        "warnings": sweep.warnings,
    }))
}

fn run_sweep_polarization(cfg: &ExperimentConfig, out: &Output) -> Result<Value> {
    let n = cfg.grid_n()?;
    let p_s = cfg.p_s()?;
    let base = cfg.density()?.to_grid(n)?;
    let alphas = cfg.alphas.as_deref().ok_or_else(|| ConfigError::Invalid("missing alphas (--alphas)".into()))?;
    let sweep = theorem3_sweep(&base, alphas, p_s)?;
    sweep_summary(Command::SweepPolarization, &sweep, out)
}

fn run_sweep_order(cfg: &ExperimentConfig, out: &Output) -> Result<Value> {
    let n = cfg.grid_n()?;
    let p_s = cfg.p_s()?;
    let specs = cfg.chain.as_deref().ok_or_else(|| ConfigError::Invalid("missing chain (--chain)".into()))?;
    let kind = cfg.chain_kind.ok_or_else(|| ConfigError::Invalid("missing chain_kind (--chain-kind)".into()))?;
    let chain = specs.iter().map(|s| s.to_grid(n)).collect::<persuasion::Result<Vec<GridDensity1D>>>()?;
    let sweep = match kind {
        ChainKind::Virtual => theorem2_sweep(&chain, p_s)?,
        ChainKind::Cost => corollary2_sweep(&chain, p_s, n)?,
        ChainKind::Prior => corollary3_sweep(&chain, cfg.c()?, p_s)?,
    };
    sweep_summary(Command::SweepOrder, &sweep, out)
}

fn run_check_shape(cfg: &ExperimentConfig) -> Result<Value> {
    let n = cfg.grid_n()?;
    let class = match (&cfg.density, &cfg.model.joint) {
        (Some(d), _) => classify_shape_default(&d.to_grid(n)?),
        (None, Some(_)) => {
            let (f, p_s, n) = model(cfg)?;
            build_value_table(&f, p_s, n)?.shape()
        }
        (None, None) => return Err(ConfigError::Invalid("check-shape needs a density or a joint".into()).into()),
    };
    let mut v = json!({"shape": class.tag.as_str()});
    if let Some(loc) = class.location {
        v["location"] = rounded(&loc)?;
    }
    Ok(v)
}

fn run_check_condition(cfg: &ExperimentConfig) -> Result<Value> {
    let n = cfg.grid_n()?;
    let cond = cfg.condition.ok_or_else(|| ConfigError::Invalid("missing condition (--condition)".into()))?;
    let f_p = cfg.density()?.to_grid(n)?;
    let report = check_condition(cond.into(), &f_p, cfg.c()?, cfg.p_s()?)?;
    rounded(&report)
}

fn run_simulate(cfg: &ExperimentConfig) -> Result<Value> {
    let (f, p_s, n) = model(cfg)?;
    let pol = policy(cfg, &f, p_s, n)?;
    let n_agents = cfg.n_agents.unwrap_or(100_000);
    let sim = simulate_population(&f, &pol, p_s, n_agents, cfg.seed.unwrap_or(0))?;
    let payoff = sender_payoff(&pol, &f, p_s);
    Ok(with_fields(
        rounded(&sim)?,
        json!({"command": "simulate", "sigma0": rounded(&pol.sigma0)?, "sigma1": rounded(&pol.sigma1)?, "payoff": rounded(&payoff)?}),
    ))
}

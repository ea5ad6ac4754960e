//! `persuade`: solve, partition, sweep and simulate persuasion models from a
//! JSON config and/or flags.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use persuasion::densities::DensitySpec;
use persuasion::JointSpec;

use config::{parse_json, parse_list, ChainKind, Command, ConditionArg, ExperimentConfig, ModelConfig};

#[derive(Parser)]
#[command(name = "persuade", version, about = "Optimal partisan-media persuasion of heterogeneous receivers")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Run the command named in the config file.
    Run(Flags),
    /// Solve for the optimal policy and write the value table.
    Solve(Flags),
    /// Partition receivers under a policy (the optimal one by default).
    Partition(Flags),
    /// Sweep a virtual density over polarization exponents.
    SweepPolarization(Flags),
    /// Sweep an ordered chain of densities.
    SweepOrder(Flags),
    /// Classify the shape of a density or of a model's virtual density.
    CheckShape(Flags),
    /// Check a log-concavity shape condition on a prior density.
    CheckCondition(Flags),
    /// Simulate a population and compare with the analytic payoff.
    Simulate(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sender prior that the state is good.
    #[arg(long)]
    p_s: Option<f64>,
    /// Joint density of (cost, prior) as inline JSON.
    #[arg(long, value_parser = parse_json::<JointSpec>)]
    joint: Option<JointSpec>,
    /// Single density as inline JSON, e.g. '{"family":"beta","a":2,"b":2}'.
    #[arg(long, value_parser = parse_json::<DensitySpec>)]
    density: Option<DensitySpec>,
    /// Ordered density chain as an inline JSON array.
    #[arg(long, value_parser = parse_json::<Vec<DensitySpec>>)]
    chain: Option<::std::vec::Vec<DensitySpec>>,
    #[arg(long, value_enum)]
    chain_kind: Option<ChainKind>,
    /// Comma-separated polarization exponents.
    #[arg(long, value_parser = parse_list)]
    alphas: Option<::std::vec::Vec<f64>>,
    /// Common receiver cost.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, value_enum)]
    condition: Option<ConditionArg>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    sigma1: Option<f64>,
    #[arg(long)]
    n_agents: Option<usize>,
}

impl Flags {
    fn into_config(self, command: Option<Command>) -> (Option<PathBuf>, ExperimentConfig) {
        let cfg = ExperimentConfig {
            command,
            model: ModelConfig { joint: self.joint, p_s: self.p_s, n: self.grid_n },
            density: self.density,
            chain: self.chain,
            chain_kind: self.chain_kind,
            alphas: self.alphas,
            c: self.c,
            condition: self.condition,
            sigma0: self.sigma0,
            sigma1: self.sigma1,
            n_agents: self.n_agents,
            seed: self.seed,
            out: self.out,
        };
        (self.config, cfg)
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({"error": {"kind": kind, "message": message}}));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("config", e.to_string().trim(), 2),
    };
    let (command, flags) = match cli.command {
        Sub::Run(f) => (None, f),
        Sub::Solve(f) => (Some(Command::Solve), f),
        Sub::Partition(f) => (Some(Command::Partition), f),
        Sub::SweepPolarization(f) => (Some(Command::SweepPolarization), f),
        Sub::SweepOrder(f) => (Some(Command::SweepOrder), f),
        Sub::CheckShape(f) => (Some(Command::CheckShape), f),
        Sub::CheckCondition(f) => (Some(Command::CheckCondition), f),
        Sub::Simulate(f) => (Some(Command::Simulate), f),
    };
    let (path, flag_cfg) = flags.into_config(command);
    let file_cfg = match path.as_deref().map(ExperimentConfig::load).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => return fail("config", &e.to_string(), 2),
    };
    if let (Some(a), Some(b)) = (command, file_cfg.command) {
        if a != b {
            let msg = format!("subcommand {} does not match config command {}", a.as_str(), b.as_str());
            return fail("config", &msg, 2);
        }
    }
    let cfg = file_cfg.merge(flag_cfg);
    let Some(command) = cfg.command else {
        return fail("config", "no command given in the config file", 2);
    };
    match commands::run(command, &cfg) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), &e.to_string(), e.exit_code() as u8),
    }
}

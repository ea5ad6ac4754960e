//! Experiment configuration: a JSON file merged with command-line flags,
//! flags taking precedence.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use persuasion::densities::{DensitySpec, DEFAULT_GRID_N};
use persuasion::persuasion::MIN_VALUE_GRID_N;
use persuasion::statics::Condition;
use persuasion::{JointSpec, Prior};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Partition,
    SweepPolarization,
    SweepOrder,
    CheckShape,
    CheckCondition,
    Simulate,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Partition => "partition",
            Command::SweepPolarization => "sweep-polarization",
            Command::SweepOrder => "sweep-order",
            Command::CheckShape => "check-shape",
            Command::CheckCondition => "check-condition",
            Command::Simulate => "simulate",
        }
    }
}

/// Which primitive an ordered density chain describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    /// Virtual densities, compared in the reversed hazard rate order.
    Virtual,
    /// Cost densities under a common prior.
    Cost,
    /// Prior densities under a common cost.
    Prior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ConditionArg {
    Eq6,
    Eq12,
}

impl From<ConditionArg> for Condition {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::Eq6 => Condition::Eq6,
            ConditionArg::Eq12 => Condition::Eq12,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub joint: Option<JointSpec>,
    pub p_s: Option<f64>,
    pub n: Option<usize>,
}

/// Everything a run can be configured with. Every field is optional here;
/// each command checks for what it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    #[serde(default)]
    pub model: ModelConfig,
    pub density: Option<DensitySpec>,
    pub chain: Option<Vec<DensitySpec>>,
    pub chain_kind: Option<ChainKind>,
    pub alphas: Option<Vec<f64>>,
    pub c: Option<f64>,
    pub condition: Option<ConditionArg>,
    pub sigma0: Option<f64>,
    pub sigma1: Option<f64>,
    pub n_agents: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Overlay `flags` on `self`: any field set in `flags` wins.
    pub fn merge(self, flags: ExperimentConfig) -> Self {
        Self {
            command: flags.command.or(self.command),
            model: ModelConfig {
                joint: flags.model.joint.or(self.model.joint),
                p_s: flags.model.p_s.or(self.model.p_s),
                n: flags.model.n.or(self.model.n),
            },
            density: flags.density.or(self.density),
            chain: flags.chain.or(self.chain),
            chain_kind: flags.chain_kind.or(self.chain_kind),
            alphas: flags.alphas.or(self.alphas),
            c: flags.c.or(self.c),
            condition: flags.condition.or(self.condition),
            sigma0: flags.sigma0.or(self.sigma0),
            sigma1: flags.sigma1.or(self.sigma1),
            n_agents: flags.n_agents.or(self.n_agents),
            seed: flags.seed.or(self.seed),
            out: flags.out.or(self.out),
        }
    }

    pub fn grid_n(&self) -> Result<usize, ConfigError> {
        let n = self.model.n.unwrap_or(DEFAULT_GRID_N);
        if n < MIN_VALUE_GRID_N {
            return Err(invalid(format!("grid size must be at least {MIN_VALUE_GRID_N}, got {n}")));
        }
        Ok(n)
    }

    pub fn p_s(&self) -> Result<Prior, ConfigError> {
        let p = self.model.p_s.ok_or_else(|| invalid("missing model.p_s (--p-s)"))?;
        Prior::new(p).map_err(|e| invalid(e.to_string()))
    }

    pub fn joint(&self) -> Result<&JointSpec, ConfigError> {
        self.model.joint.as_ref().ok_or_else(|| invalid("missing model.joint (--joint)"))
    }

    pub fn density(&self) -> Result<&DensitySpec, ConfigError> {
        self.density.as_ref().ok_or_else(|| invalid("missing density (--density)"))
    }

    pub fn c(&self) -> Result<f64, ConfigError> {
        match self.c {
            Some(c) if c > 0.0 && c < 1.0 => Ok(c),
            Some(c) => Err(invalid(format!("common cost must lie in (0, 1), got {c}"))),
            None => Err(invalid("missing c (--c)")),
        }
    }

    /// The policy override, if any. Both components must be given together.
    pub fn policy(&self) -> Result<Option<(f64, f64)>, ConfigError> {
        match (self.sigma0, self.sigma1) {
            (Some(s0), Some(s1)) => Ok(Some((s0, s1))),
            (None, None) => Ok(None),
            _ => Err(invalid("sigma0 and sigma1 must be given together")),
        }
    }
}

/// Parse a comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect()
}

/// Parse an inline JSON value.
pub fn parse_json<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file: ExperimentConfig =
            serde_json::from_str(r#"{"command": "solve", "model": {"p_s": 0.4, "n": 501}, "seed": 3}"#).unwrap();
        let flags = ExperimentConfig {
            model: ModelConfig { p_s: Some(0.6), ..Default::default() },
            ..Default::default()
        };
        let merged = file.merge(flags);
        assert_eq!(merged.model.p_s, Some(0.6));
        assert_eq!(merged.model.n, Some(501));
        assert_eq!(merged.seed, Some(3));
        assert_eq!(merged.command, Some(Command::Solve));
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"comand": "solve"}"#).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"command": "optimize"}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.p_s().is_err());
        assert_eq!(cfg.grid_n().unwrap(), DEFAULT_GRID_N);
        cfg.model.n = Some(100);
        assert!(cfg.grid_n().is_err());
        cfg.model.p_s = Some(1.0);
        assert!(cfg.p_s().is_err());
        cfg.sigma0 = Some(0.2);
        assert!(cfg.policy().is_err());
        cfg.c = Some(0.0);
        assert!(cfg.c().is_err());
    }

    #[test]
    fn config_roundtrip() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"command": "sweep-order", "model": {"p_s": 0.4},
                "chain": [{"family": "beta", "a": 2, "b": 3}, {"family": "beta", "a": 2, "b": 2}],
                "chain_kind": "virtual", "condition": "eq6"}"#,
        )
        .unwrap();
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert!(parse_list("0.5,x").is_err());
    }
}

//! Run configuration: TOML file + dotted-path command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gaitforge_core::curriculum::{default_phases, validate_phases, PhaseSpec};
use gaitforge_core::gait::GaitParams;
use gaitforge_core::policy::Dims;
use gaitforge_core::rewards::{default_registry, RewardRegistry, RewardShaping};
use gaitforge_core::sim::{ModelSpec, RandomizationRanges};
use gaitforge_core::trainer::{PPOConfig, TrainerConfig};

/// Everything a run needs. Every field has a default; unknown keys are a
/// hard error.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub gait: GaitParams,
    pub rewards: RewardRegistry,
    pub curriculum: Vec<PhaseSpec>,
    pub ppo: PPOConfig,
    pub trainer: TrainerConfig,
    pub randomization: RandomizationRanges,
    /// Network shape; observation and action widths are fixed by the robot.
    pub policy: Dims,
    pub seed: u64,
    /// Output directory; `--out` and GAITFORGE_OUT override.
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSpec::default(),
            gait: GaitParams::default(),
            rewards: default_registry(RewardShaping::default()),
            curriculum: default_phases(),
            ppo: PPOConfig::default(),
            trainer: TrainerConfig::default(),
            randomization: RandomizationRanges::default(),
            policy: Dims::default(),
            seed: 0,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        self.model
            .validate()
            .map_err(|e| anyhow::anyhow!("model: {e}"))?;
        self.ppo.validate().map_err(|e| anyhow::anyhow!("ppo: {e}"))?;
        validate_phases(&self.curriculum).map_err(|e| anyhow::anyhow!("curriculum: {e}"))?;
        // re-run registry construction so file-supplied terms get the same
        // checks as built-ins
        RewardRegistry::new(self.rewards.terms().to_vec(), self.rewards.shaping)
            .map_err(|e| anyhow::anyhow!("rewards: {e}"))?;
        Ok(())
    }
}

/// Parses `key=value`, interpreting the value as a TOML literal and falling
/// back to a string.
fn parse_override(raw: &str) -> anyhow::Result<(Vec<String>, toml::Value)> {
    let (path, value) = raw
        .split_once('=')
        .ok_or_else(|| anyhow::anyhow!("override '{raw}' is not of the form key=value"))?;
    if path.is_empty() {
        anyhow::bail!("override '{raw}' has an empty key");
    }
    let parsed: toml::Value = match format!("v = {value}").parse::<toml::Table>() {
        Ok(t) => t["v"].clone(),
        Err(_) => toml::Value::String(value.to_string()),
    };
    Ok((path.split('.').map(str::to_string).collect(), parsed))
}

fn apply_override(root: &mut toml::Value, path: &[String], value: toml::Value) -> anyhow::Result<()> {
    let mut node = root;
    for key in &path[..path.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| anyhow::anyhow!("override path '{}' crosses a non-table", key))?;
        node = table
            .entry(key.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| anyhow::anyhow!("override path ends inside a non-table"))?;
    table.insert(path.last().unwrap().clone(), value);
    Ok(())
}

/// Loads the config file (or the defaults when absent), applies `--set`
/// overrides, and validates.
pub fn load(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<RunConfig> {
    let mut value: toml::Value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("cannot read config '{}': {e}", p.display()))?;
            text.parse()
                .map_err(|e| anyhow::anyhow!("config '{}': {e}", p.display()))?
        }
        None => toml::Value::Table(toml::Table::new()),
    };
    for raw in overrides {
        let (path, v) = parse_override(raw)?;
        apply_override(&mut value, &path, v)?;
    }
    let config: RunConfig = value
        .try_into()
        .map_err(|e| anyhow::anyhow!("config: {e}"))?;
    config.validate()?;
    Ok(config)
}

/// Echoes the fully resolved config into the output directory.
pub fn write_resolved(config: &RunConfig, dir: &Path) -> anyhow::Result<PathBuf> {
    let text = toml::to_string_pretty(config)?;
    let path = dir.join("resolved_config.toml");
    std::fs::write(&path, text)?;
    Ok(path)
}

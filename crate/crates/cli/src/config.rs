use std::path::Path;

use npsq_core::protocol::{CounterSweepConfig, ProtocolConfig, TransferSweepConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Any run configuration, tagged by the command it drives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum AnyConfig {
    TransferSweep(TransferSweepConfig),
    CounterDisplace(CounterSweepConfig),
    Protocol(ProtocolConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    TransferSweep,
    CounterDisplace,
    Protocol,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::TransferSweep => "transfer-sweep",
            CommandKind::CounterDisplace => "counter-displace",
            CommandKind::Protocol => "protocol",
        }
    }

    pub fn default_preset(self) -> &'static str {
        match self {
            CommandKind::TransferSweep => "fig2",
            CommandKind::CounterDisplace => "fig3",
            CommandKind::Protocol => "fig1-protocol",
        }
    }
}

pub const PRESETS: [(&str, &str); 3] = [
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig1-protocol", include_str!("../presets/fig1-protocol.toml")),
];

impl AnyConfig {
    pub fn kind(&self) -> CommandKind {
        match self {
            AnyConfig::TransferSweep(_) => CommandKind::TransferSweep,
            AnyConfig::CounterDisplace(_) => CommandKind::CounterDisplace,
            AnyConfig::Protocol(_) => CommandKind::Protocol,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("cannot parse config: {e}")))
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                CliError::Config(format!("unknown preset `{name}` (known: {})", known.join(", ")))
            })?;
        Self::from_toml(text)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            AnyConfig::TransferSweep(c) => c.validate()?,
            AnyConfig::CounterDisplace(c) => c.validate()?,
            AnyConfig::Protocol(c) => c.validate()?,
        }
        Ok(())
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            AnyConfig::Protocol(c) => Some(c.seed),
            _ => None,
        }
    }

    /// Replaces the master seed; sweeps are deterministic and carry none.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let (AnyConfig::Protocol(c), Some(s)) = (&mut self, seed) {
            c.seed = s;
        }
        self
    }
}

/// Resolves `--config` / `--preset` for a command, falling back to the command's own preset.
pub fn resolve(kind: CommandKind, config: Option<&Path>, preset: Option<&str>) -> Result<AnyConfig, CliError> {
    let cfg = match (config, preset) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either --config or --preset, not both".into())),
        (Some(p), None) => AnyConfig::load(p)?,
        (None, Some(name)) => AnyConfig::preset(name)?,
        (None, None) => AnyConfig::preset(kind.default_preset())?,
    };
    if cfg.kind() != kind {
        return Err(CliError::Config(format!(
            "config is for `{}`, not `{}`",
            cfg.kind().name(),
            kind.name()
        )));
    }
    Ok(cfg)
}

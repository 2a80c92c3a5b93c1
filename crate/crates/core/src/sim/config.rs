//! Experiment configuration file.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ChannelParams, Environment};

/// Delivery schemes compared by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scheme {
    /// Location-aware allocation with coded delivery.
    Proposed,
    /// Location-aware allocation, unicast delivery.
    MultiUserUnicast,
    /// Bottleneck-only allocation, unicast delivery.
    SingleUserUnicast,
    /// Uniform allocation with coded delivery.
    UniformCoded,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Self::Proposed, Self::MultiUserUnicast, Self::SingleUserUnicast, Self::UniformCoded];

    pub fn letter(self) -> char {
        match self {
            Self::Proposed => 'a',
            Self::MultiUserUnicast => 'b',
            Self::SingleUserUnicast => 'c',
            Self::UniformCoded => 'd',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::MultiUserUnicast => "multi_user_unicast",
            Self::SingleUserUnicast => "single_user_unicast",
            Self::UniformCoded => "uniform_coded",
        }
    }

    pub fn is_coded(self) -> bool {
        matches!(self, Self::Proposed | Self::UniformCoded)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|x| s.len() == 1 && s.starts_with(x.letter()) || s == x.name())
            .ok_or_else(|| ConfigError::Scheme(s.to_string()))
    }
}

impl TryFrom<String> for Scheme {
    type Error = ConfigError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> Self {
        s.name().to_string()
    }
}

/// Parses `a,b,d` or full names.
pub fn parse_schemes(list: &str) -> Result<Vec<Scheme>, ConfigError> {
    let mut out: Vec<Scheme> = list.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    pub users: usize,
    pub antennas: usize,
    /// Cache size per user as a fraction of the whole library, `M / S`.
    pub memory_ratio: f64,
    pub drops: usize,
    pub seed: u64,
    /// Channel draws per STU when approximating rates.
    pub rate_samples: usize,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self { users: 36, antennas: 6, memory_ratio: 0.33, drops: 500, seed: 0, rate_samples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSelection {
    pub enabled: Vec<Scheme>,
}

impl Default for SchemeSelection {
    fn default() -> Self {
        Self { enabled: Scheme::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: Environment,
    pub channel: ChannelParams,
    pub experiment: ExperimentParams,
    pub schemes: SchemeSelection,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config: {0}")]
    Toml(String),
    #[error("unknown scheme `{0}`")]
    Scheme(String),
    #[error("{0}")]
    Invalid(String),
}

impl ExperimentConfig {
    /// Parses TOML; also returns the `section.field` names that took their defaults.
    pub fn from_toml(text: &str) -> Result<(Self, Vec<String>), ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
        let given: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
        let full = toml::Table::try_from(Self::default()).map_err(|e| ConfigError::Toml(e.to_string()))?;
        let mut defaulted = Vec::new();
        for (section, fields) in &full {
            let Some(fields) = fields.as_table() else { continue };
            for field in fields.keys() {
                let present = given.get(section).and_then(|s| s.as_table()).is_some_and(|s| s.contains_key(field));
                if !present {
                    defaulted.push(format!("{section}.{field}"));
                }
            }
        }
        config.check()?;
        Ok((config, defaulted))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        self.environment.check().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.channel.check().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let e = &self.experiment;
        if e.users == 0 || e.antennas == 0 {
            return Err(ConfigError::Invalid("users and antennas must be positive".into()));
        }
        if !(0.0..=1.0).contains(&e.memory_ratio) {
            return Err(ConfigError::Invalid("memory_ratio must lie in [0, 1]".into()));
        }
        if e.drops == 0 || e.rate_samples == 0 {
            return Err(ConfigError::Invalid("drops and rate_samples must be positive".into()));
        }
        if self.schemes.enabled.is_empty() {
            return Err(ConfigError::Invalid("no schemes enabled".into()));
        }
        Ok(())
    }
}

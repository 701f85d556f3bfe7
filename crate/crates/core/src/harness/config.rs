use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agent::AgentConfig;
use crate::env::EnvKind;
use crate::priors::PriorSpec;

/// Environment variable that overrides the output directory of a config file.
pub const OUT_ENV: &str = "CAMEL_OUT";

/// Everything needed to reproduce one training run.
///
/// Config files are flat TOML: run keys and agent keys side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub env: EnvKind,
    /// Label used for record file names, usually the arm name.
    pub name: String,
    pub prior: PriorSpec,
    pub seed: u64,
    /// Defaults to 30000 for the pendulum and 60000 for the reacher.
    pub total_steps: Option<u64>,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub out_dir: Option<PathBuf>,
    pub save_checkpoint: bool,
    /// End the run after the first evaluation at or above this return.
    pub stop_at_eval: Option<f64>,
    #[serde(flatten)]
    pub agent: AgentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvKind::Pendulum,
            name: "run".into(),
            prior: PriorSpec::None,
            seed: 0,
            total_steps: None,
            eval_interval: 1000,
            eval_episodes: 3,
            out_dir: None,
            save_checkpoint: false,
            stop_at_eval: None,
            agent: AgentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn total_steps(&self) -> u64 {
        self.total_steps.unwrap_or(match self.env {
            EnvKind::Pendulum => 30_000,
            EnvKind::Reacher => 60_000,
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.agent.validate()?;
        if self.eval_interval < 1 {
            return Err(HarnessError::Config("eval_interval must be at least 1".into()));
        }
        if self.total_steps() < self.agent.learning_starts {
            return Err(HarnessError::Config("total_steps must be at least learning_starts".into()));
        }
        if self.eval_episodes == 0 {
            return Err(HarnessError::Config("eval_episodes must be positive".into()));
        }
        Ok(())
    }

    /// Parse a flat TOML config, rejecting unknown keys.
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        let known = toml::Table::try_from(RunConfig { total_steps: Some(0), out_dir: Some(".".into()), stop_at_eval: Some(0.0), ..Default::default() })
            .expect("config serialises");
        if let Some(key) = table.keys().find(|k| !known.contains_key(*k)) {
            return Err(HarnessError::Config(format!("unknown key `{key}`")));
        }
        let config: RunConfig = table.try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Output directory: `CAMEL_OUT` if set, else the configured directory, else `runs`.
    pub fn resolve_out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs")),
        }
    }

    /// `<name>__seed<seed>`, the stem of this run's output files.
    pub fn file_stem(&self) -> String {
        format!("{}__seed{}", self.name, self.seed)
    }
}

/// One cell of the ablation matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arm {
    /// No prior: plain TD3 through the masked code path.
    Baseline,
    /// Masking-aware actor with epsilon-masking around the configured prior.
    Camel,
    /// Always masked around the configured prior, bounds-blind actor.
    Masked,
    CamelExpert,
    CamelRandom,
    CamelPd,
    ExpertNoMaEm,
    RandomNoMaEm,
    PdNoMaEm,
}

impl Arm {
    pub const ALL: [Arm; 9] = [
        Arm::Baseline,
        Arm::Camel,
        Arm::Masked,
        Arm::CamelExpert,
        Arm::CamelRandom,
        Arm::CamelPd,
        Arm::ExpertNoMaEm,
        Arm::RandomNoMaEm,
        Arm::PdNoMaEm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Baseline => "baseline",
            Arm::Camel => "camel",
            Arm::Masked => "masked",
            Arm::CamelExpert => "camel-expert",
            Arm::CamelRandom => "camel-random",
            Arm::CamelPd => "camel-pd",
            Arm::ExpertNoMaEm => "expert-no-ma-em",
            Arm::RandomNoMaEm => "random-no-ma-em",
            Arm::PdNoMaEm => "pd-no-ma-em",
        }
    }

    /// Set the prior and masking switches of `config` for this arm.
    /// `Camel` and `Masked` keep whatever prior the config already names.
    pub fn apply(self, config: &mut RunConfig) -> Result<(), HarnessError> {
        let (prior, aware) = match self {
            Arm::Baseline => (Some(PriorSpec::None), false),
            Arm::Camel => (None, true),
            Arm::Masked => (None, false),
            Arm::CamelExpert => (Some(PriorSpec::Expert), true),
            Arm::CamelRandom => (Some(PriorSpec::Random), true),
            Arm::CamelPd => (Some(PriorSpec::Pd), true),
            Arm::ExpertNoMaEm => (Some(PriorSpec::Expert), false),
            Arm::RandomNoMaEm => (Some(PriorSpec::Random), false),
            Arm::PdNoMaEm => (Some(PriorSpec::Pd), false),
        };
        if let Some(p) = prior {
            config.prior = p;
        } else if config.prior.is_none() {
            return Err(HarnessError::Config(format!("arm `{}` needs a prior", self.name())));
        }
        config.agent.masking_aware = aware;
        config.agent.epsilon_masking = aware;
        config.name = self.name().to_string();
        Ok(())
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Arm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| HarnessError::Config(format!("unknown arm `{s}`")))
    }
}

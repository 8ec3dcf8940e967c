//! TOML run configuration.
//!
//! Every key is optional; missing keys take the defaults below. The global
//! seed can be overridden with the `EMBAL_SEED` environment variable.
//!
//! ```toml
//! seed = 0
//! setup = "lifelong"        # episodic | lifelong
//! ordering = "seed:3"       # fixed | seed:N
//! agent = "oracle"          # oracle | uniform | random | rl
//! scene_order = []          # explicit scene ids, applied before `ordering`
//!
//! [agents]
//! oracle_threshold = 0.7
//! uniform_period = 20
//! random_prob = 0.05
//! rl_checkpoint = "policy.json"
//! rl_greedy = false
//!
//! [world]                   # scene generation, see WorldParams
//! rows = 24
//! scene_sigma = 0.6
//!
//! [env]                     # episode limits, rewards and refinement
//! max_steps = 2000
//! [env.reward]
//! lambda = 0.01
//! [env.sgd]
//! lr = 0.003
//! ```

use super::{Ordering, Setup};
use crate::agents::{AccuracyOracle, AgentPolicy, RandomAgent, UniformAgent};
use crate::error::Error;
use crate::harness::EnvConfig;
use crate::rl::PolicyCheckpoint;
use crate::world::{Scene, WorldParams};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const SEED_ENV: &str = "EMBAL_SEED";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    #[default]
    Oracle,
    Uniform,
    Random,
    Rl,
}

impl FromStr for AgentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "uniform" => Ok(Self::Uniform),
            "random" => Ok(Self::Random),
            "rl" => Ok(Self::Rl),
            _ => Err(Error::Config(format!("unknown agent `{s}` (oracle|uniform|random|rl)"))),
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Oracle => "oracle",
            Self::Uniform => "uniform",
            Self::Random => "random",
            Self::Rl => "rl",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentParams {
    pub oracle_threshold: f64,
    pub uniform_period: usize,
    pub random_prob: f64,
    pub rl_checkpoint: Option<PathBuf>,
    pub rl_greedy: bool,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            oracle_threshold: 0.7,
            uniform_period: 20,
            random_prob: 0.05,
            rl_checkpoint: None,
            rl_greedy: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub setup: Setup,
    pub ordering: Ordering,
    pub agent: AgentKind,
    pub scene_order: Vec<String>,
    pub agents: AgentParams,
    pub world: WorldParams,
    pub env: EnvConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, Error> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path` and applies the environment seed override.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.apply_env()?;
        Ok(cfg)
    }

    /// Defaults plus the environment seed override.
    pub fn from_env() -> Result<Self, Error> {
        let mut cfg = Self::default();
        cfg.apply_env()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) -> Result<(), Error> {
        self.apply_seed_override(std::env::var(SEED_ENV).ok().as_deref())
    }

    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<(), Error> {
        if let Some(v) = value {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.world.validate()?;
        self.env.reward.validate().map_err(Error::Config)?;
        if self.agent == AgentKind::Rl && self.agents.rl_checkpoint.is_none() {
            return Err(Error::Config("agent `rl` needs agents.rl_checkpoint".into()));
        }
        Ok(())
    }

    /// Applies `scene_order` (when set) and then `ordering`.
    pub fn order_scenes(&self, scenes: &[Scene]) -> Result<Vec<Scene>, Error> {
        if self.scene_order.is_empty() {
            return Ok(self.ordering.apply(scenes));
        }
        let picked = self
            .scene_order
            .iter()
            .map(|id| {
                scenes
                    .iter()
                    .find(|s| &s.id == id)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("scene_order names unknown scene `{id}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.ordering.apply(&picked))
    }

    /// Instantiates the configured agent; `rl` loads its checkpoint.
    pub fn build_agent(&self) -> Result<Box<dyn AgentPolicy>, Error> {
        let a = &self.agents;
        Ok(match self.agent {
            AgentKind::Oracle => Box::new(AccuracyOracle {
                threshold: a.oracle_threshold,
            }),
            AgentKind::Uniform => Box::new(UniformAgent {
                period: a.uniform_period,
            }),
            AgentKind::Random => Box::new(RandomAgent::new(a.random_prob)),
            AgentKind::Rl => {
                let path = a
                    .rl_checkpoint
                    .as_ref()
                    .ok_or_else(|| Error::Config("agent `rl` needs agents.rl_checkpoint".into()))?;
                let mut agent = PolicyCheckpoint::load(path)?.agent()?;
                agent.greedy = a.rl_greedy;
                Box::new(agent)
            }
        })
    }
}

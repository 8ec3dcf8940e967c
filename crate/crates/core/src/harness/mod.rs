//! Episode orchestration, episodic and lifelong protocols, metrics and reports.

pub mod config;
pub mod env;
pub mod log;
pub mod pretrain;
pub mod report;

pub use config::{AgentKind, AgentParams, RunConfig, SEED_ENV};
pub use env::{Env, EnvConfig, StepOutcome};
pub use log::{
    metric_annots, metric_da_per_annot, metric_da_per_step, metric_miou_window, EpisodeLog, MiouCheckpoint,
    StepRecord, Termination,
};
pub use pretrain::{pretrain_baseline, PretrainConfig, PretrainResult};
pub use report::{write_report, RunArchive};

use crate::agents::AgentPolicy;
use crate::error::Error;
use crate::perception::{init_model, SegModel, TrainSet};
use crate::rng::{self, tag};
use crate::world::Scene;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setup {
    /// Fresh segmentation model in every scene.
    #[default]
    Episodic,
    /// Model and annotation buffer carried from scene to scene.
    Lifelong,
}

impl FromStr for Setup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "episodic" => Ok(Setup::Episodic),
            "lifelong" => Ok(Setup::Lifelong),
            _ => Err(Error::Config(format!("unknown setup `{s}` (episodic|lifelong)"))),
        }
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setup::Episodic => "episodic",
            Setup::Lifelong => "lifelong",
        })
    }
}

/// Scene order: as given, or a seeded shuffle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Ordering {
    #[default]
    Fixed,
    Seed(u64),
}

impl Ordering {
    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        let mut out = items.to_vec();
        if let Ordering::Seed(s) = self {
            out.shuffle(&mut rng::seeded(&[*s, tag::ORDERING]));
        }
        out
    }
}

impl FromStr for Ordering {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "fixed" {
            return Ok(Ordering::Fixed);
        }
        s.strip_prefix("seed:")
            .and_then(|n| n.parse().ok())
            .map(Ordering::Seed)
            .ok_or_else(|| Error::Config(format!("bad ordering `{s}` (fixed|seed:N)")))
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ordering::Fixed => f.write_str("fixed"),
            Ordering::Seed(s) => write!(f, "seed:{s}"),
        }
    }
}

impl Serialize for Ordering {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ordering {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-scene seed shared by everything random inside one episode.
pub fn episode_seed(seed: u64, scene: &Scene) -> u64 {
    rng::mix(&[seed, scene.seed])
}

/// Fresh model for `scene`; depends only on the run seed and the scene.
pub fn fresh_model(seed: u64, scene: &Scene) -> SegModel {
    init_model(episode_seed(seed, scene), scene.classes, scene.feature_dim())
}

/// Runs `agent` until frontiers are exhausted or the step cap is hit.
pub fn run_episode(
    scene: &Scene,
    agent: &mut dyn AgentPolicy,
    model: SegModel,
    trainset: TrainSet,
    cfg: &EnvConfig,
    seed: u64,
) -> Result<(EpisodeLog, SegModel, TrainSet), Error> {
    let ep_seed = episode_seed(seed, scene);
    agent.reset(ep_seed);
    let mut env = Env::new(scene, model, trainset, cfg.clone(), ep_seed, agent.name())?;
    while !env.is_done() {
        let action = agent.act(&env.state())?;
        env.step(action)?;
    }
    Ok(env.into_parts())
}

/// Runs `scenes` in the given order under `setup`.
pub fn run_sequence(
    scenes: &[Scene],
    agent: &mut dyn AgentPolicy,
    setup: Setup,
    cfg: &EnvConfig,
    seed: u64,
) -> Result<Vec<EpisodeLog>, Error> {
    Ok(run_sequence_from(scenes, agent, setup, cfg, seed, None)?.0)
}

/// Like [`run_sequence`], starting from `warm` instead of a fresh model.
/// Episodic runs start every scene from `warm`; lifelong runs only the first.
/// Also returns the model as it was at the end of the last scene.
pub fn run_sequence_from(
    scenes: &[Scene],
    agent: &mut dyn AgentPolicy,
    setup: Setup,
    cfg: &EnvConfig,
    seed: u64,
    warm: Option<&SegModel>,
) -> Result<(Vec<EpisodeLog>, Option<SegModel>), Error> {
    let mut logs = Vec::with_capacity(scenes.len());
    let mut carried: Option<(SegModel, TrainSet)> = None;
    let mut last = None;
    for scene in scenes {
        let (model, trainset) = match (setup, carried.take()) {
            (Setup::Lifelong, Some(state)) => state,
            _ => {
                let model = match warm {
                    Some(m) => {
                        if m.classes != scene.classes || m.feature_dim != scene.feature_dim() {
                            return Err(Error::Config(format!(
                                "warm-start model is {}x{}, scene `{}` needs {}x{}",
                                m.classes,
                                m.feature_dim,
                                scene.id,
                                scene.classes,
                                scene.feature_dim()
                            )));
                        }
                        m.clone()
                    }
                    None => fresh_model(seed, scene),
                };
                (model, TrainSet::default())
            }
        };
        let (log, model, trainset) = run_episode(scene, agent, model, trainset, cfg, seed)?;
        logs.push(log);
        last = Some(model.clone());
        if setup == Setup::Lifelong {
            carried = Some((model, trainset));
        }
    }
    Ok((logs, last))
}

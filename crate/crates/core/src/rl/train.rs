//! Point-goal pre-training, lifelong PPO training, policy checkpoints and
//! training curves.

use super::agent::{encode_state, ray_input_width, sample_action, RlAgent};
use super::net::{Adam, NetShape, PolicyInput, PolicyNet};
use super::ppo::{ppo_update, PpoConfig, PpoStats, Rollout, Transition};
use super::reward::{exploration_reward, RewardConfig};
use crate::error::{Error, RlError};
use crate::harness::{fresh_model, Env, EnvConfig};
use crate::mapper::{CellState, OccupancyMap};
use crate::perception::{SegMask, SegModel, TrainSet};
use crate::planner::{navigable_field, polar_goal, shortest_path, split_by_curvature};
use crate::rng::{self, tag, Rng};
use crate::world::{render_view, step, Action, Observation, Pose, Scene};
use crate::grid::Cell;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub const POLICY_FORMAT: &str = "embal-policy";
pub const POLICY_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablations {
    /// Reset the segmentation model every episode.
    pub episodic_training: bool,
    /// Drop the low-accuracy annotation bonus.
    pub no_acc_reward: bool,
    /// Skip point-goal pre-training.
    pub no_nav_pretrain: bool,
    /// No navigation targets; reward newly mapped area instead.
    pub no_global_exploration: bool,
}

impl Ablations {
    pub const FLAGS: [&'static str; 4] = [
        "episodic_training",
        "no_acc_reward",
        "no_nav_pretrain",
        "no_global_exploration",
    ];

    pub fn set(&mut self, flag: &str) -> Result<(), Error> {
        match flag {
            "episodic_training" => self.episodic_training = true,
            "no_acc_reward" => self.no_acc_reward = true,
            "no_nav_pretrain" => self.no_nav_pretrain = true,
            "no_global_exploration" => self.no_global_exploration = true,
            _ => {
                return Err(Error::Config(format!(
                    "unknown ablation `{flag}` (one of {})",
                    Self::FLAGS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn from_flags<S: AsRef<str>>(flags: &[S]) -> Result<Self, Error> {
        let mut a = Self::default();
        for f in flags {
            a.set(f.as_ref())?;
        }
        Ok(a)
    }
}

impl FromStr for Ablations {
    type Err = Error;
    /// Comma-separated flags; empty means none.
    fn from_str(s: &str) -> Result<Self, Error> {
        let flags: Vec<&str> = s.split(',').map(str::trim).filter(|f| !f.is_empty()).collect();
        Self::from_flags(&flags)
    }
}

impl fmt::Display for Ablations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let on = [
            self.episodic_training,
            self.no_acc_reward,
            self.no_nav_pretrain,
            self.no_global_exploration,
        ];
        let names: Vec<&str> = Self::FLAGS.iter().zip(on).filter(|(_, b)| *b).map(|(n, _)| *n).collect();
        f.write_str(&names.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PointGoalConfig {
    /// Geodesic start-goal distance range in cells.
    pub min_hops: usize,
    pub max_hops: usize,
    pub max_steps: usize,
}

impl Default for PointGoalConfig {
    fn default() -> Self {
        Self {
            min_hops: 3,
            max_hops: 12,
            max_steps: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RlConfig {
    pub seed: u64,
    pub pretrain_steps: usize,
    pub train_steps: usize,
    /// PPO settings for point-goal pretraining.
    pub pretrain_ppo: PpoConfig,
    /// PPO settings for lifelong training.
    pub ppo: PpoConfig,
    /// Environment used during lifelong training.
    pub env: EnvConfig,
    pub episodes_per_scene: usize,
    /// Segmentation model reset period, in episodes.
    pub model_reset_period: usize,
    pub point_goal: PointGoalConfig,
    pub ablations: Ablations,
    /// Finished episodes averaged per curve row.
    pub curve_window: usize,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            pretrain_steps: 50_000,
            train_steps: 100_000,
            pretrain_ppo: PpoConfig::default(),
            ppo: PpoConfig {
                lr: 1e-3,
                ..PpoConfig::default()
            },
            env: EnvConfig {
                max_steps: 500,
                ..EnvConfig::default()
            },
            episodes_per_scene: 4,
            model_reset_period: 10,
            point_goal: PointGoalConfig::default(),
            ablations: Ablations::default(),
            curve_window: 10,
        }
    }
}

impl RlConfig {
    /// Lifelong-training environment with ablations applied.
    pub fn effective_env(&self) -> EnvConfig {
        let mut env = self.env.clone();
        if self.ablations.no_acc_reward {
            env.reward.lambda_acc = 0.0;
        }
        if self.ablations.no_global_exploration {
            env.coverage_reward = true;
        }
        env
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Result of one environment step as seen by the learner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskStep {
    pub reward: f64,
    pub done: bool,
    pub annotated: bool,
}

/// An episode the collector can drive.
pub trait Task {
    fn input(&self) -> PolicyInput;
    fn step(&mut self, action: Action) -> Result<TaskStep, Error>;
}

/// Navigation to a random goal on the ground-truth map, with ground-truth
/// masks in place of predictions and Annotate masked.
pub struct PointGoalTask<'s> {
    scene: &'s Scene,
    map: OccupancyMap,
    reward: RewardConfig,
    pose: Pose,
    obs: Observation,
    goal: Cell,
    path: Vec<Cell>,
    waypoints: Vec<Cell>,
    next: usize,
    steps: usize,
    max_steps: usize,
    depth_scale: f64,
    success: bool,
}

/// Occupancy map with every cell set from the scene grid.
pub fn ground_truth_map(scene: &Scene) -> OccupancyMap {
    let mut map = OccupancyMap::for_scene(scene);
    for cell in scene.grid.cells().collect::<Vec<_>>() {
        let s = if scene.is_free(cell) {
            CellState::Navigable
        } else {
            CellState::Obstacle
        };
        map.set_state(cell, s);
    }
    map
}

impl<'s> PointGoalTask<'s> {
    pub fn sample(scene: &'s Scene, cfg: &PointGoalConfig, reward: &RewardConfig, rng: &mut Rng) -> Result<Self, Error> {
        let map = ground_truth_map(scene);
        let free = scene.free_cells();
        for _ in 0..200 {
            let start = free[rng.random_range(0..free.len())];
            let field = navigable_field(&map, start);
            let goals: Vec<Cell> = free
                .iter()
                .copied()
                .filter(|c| {
                    let hops = field.cost(*c) / scene.cell_size;
                    hops.is_finite() && hops >= cfg.min_hops as f64 - 1e-9 && hops <= cfg.max_hops as f64 + 1e-9
                })
                .collect();
            if goals.is_empty() {
                continue;
            }
            let goal = goals[rng.random_range(0..goals.len())];
            let path = shortest_path(&map, start, goal)?;
            let pose = Pose {
                cell: start,
                heading: rng.random_range(0..scene.headings()),
            };
            return Ok(Self {
                scene,
                reward: reward.clone(),
                obs: render_view(scene, pose),
                pose,
                goal,
                waypoints: split_by_curvature(&path),
                path,
                map,
                next: 0,
                steps: 0,
                max_steps: cfg.max_steps,
                depth_scale: scene.optics.max_range,
                success: false,
            });
        }
        Err(Error::Config(format!(
            "scene {} has no start/goal pair {}..={} hops apart",
            scene.id, cfg.min_hops, cfg.max_hops
        )))
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn succeeded(&self) -> bool {
        self.success
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }
}

impl Task for PointGoalTask<'_> {
    fn input(&self) -> PolicyInput {
        let gt = &self.obs.gt_mask;
        let c = self.scene.classes;
        let polar = self
            .waypoints
            .get(self.next)
            .map(|w| polar_goal(self.pose, *w, self.scene.cell_size, &self.scene.optics));
        encode_state(
            &self.obs,
            &SegMask::from_labels(gt, c),
            &SegMask::from_labels(gt, c + 1),
            polar,
            self.depth_scale,
            false,
        )
    }

    fn step(&mut self, action: Action) -> Result<TaskStep, Error> {
        if action == Action::Annotate {
            return Err(Error::InvalidAction {
                agent: "rl".into(),
                step: self.steps + 1,
                detail: "Annotate is disabled during point-goal training".into(),
            });
        }
        self.steps += 1;
        let prev = self.pose;
        self.pose = step(self.scene, self.pose, action);
        self.obs = render_view(self.scene, self.pose);
        let mut reward = 0.0;
        if let Some(&w) = self.waypoints.get(self.next) {
            let e = exploration_reward(prev, self.pose, w, &self.map, &self.reward);
            reward = e.reward;
            if e.reached {
                self.next += 1;
                self.success = self.next == self.waypoints.len();
            }
        }
        if !self.success && !self.path.contains(&self.pose.cell) {
            self.path = shortest_path(&self.map, self.pose.cell, self.goal)?;
            self.waypoints = split_by_curvature(&self.path);
            self.next = 0;
        }
        Ok(TaskStep {
            reward,
            done: self.success || self.steps >= self.max_steps,
            annotated: false,
        })
    }
}

/// Exploration episode with the segmentation model in the loop.
pub struct ExplorationTask<'s> {
    pub env: Env<'s>,
    use_nav: bool,
    depth_scale: f64,
}

impl Task for ExplorationTask<'_> {
    fn input(&self) -> PolicyInput {
        let s = self.env.state();
        let polar = if self.use_nav { s.polar } else { None };
        encode_state(s.obs, s.seg, s.propagated, polar, self.depth_scale, true)
    }

    fn step(&mut self, action: Action) -> Result<TaskStep, Error> {
        let out = self.env.step(action)?;
        Ok(TaskStep {
            reward: out.reward,
            done: out.done,
            annotated: out.annotated,
        })
    }
}

/// Produces the next episode, receiving the one that just finished.
trait TaskSource {
    type T: Task;
    fn next(&mut self, finished: Option<Self::T>) -> Result<Self::T, Error>;
}

struct PointGoalSource<'s> {
    scenes: &'s [Scene],
    cfg: PointGoalConfig,
    reward: RewardConfig,
    rng: Rng,
}

impl<'s> TaskSource for PointGoalSource<'s> {
    type T = PointGoalTask<'s>;
    fn next(&mut self, _finished: Option<Self::T>) -> Result<Self::T, Error> {
        let scene = &self.scenes[self.rng.random_range(0..self.scenes.len())];
        PointGoalTask::sample(scene, &self.cfg, &self.reward, &mut self.rng)
    }
}

/// Cycles scenes, `episodes_per_scene` each, resetting the segmentation
/// model every `reset_period` episodes and carrying it otherwise.
struct LifelongSource<'s> {
    scenes: &'s [Scene],
    env: EnvConfig,
    episodes_per_scene: usize,
    reset_period: usize,
    use_nav: bool,
    seed: u64,
    episode: usize,
    carried: Option<(SegModel, TrainSet)>,
    resets: Vec<bool>,
}

impl<'s> TaskSource for LifelongSource<'s> {
    type T = ExplorationTask<'s>;
    fn next(&mut self, finished: Option<Self::T>) -> Result<Self::T, Error> {
        if let Some(f) = finished {
            let (_, model, trainset) = f.env.into_parts();
            self.carried = Some((model, trainset));
        }
        let idx = (self.episode / self.episodes_per_scene.max(1)) % self.scenes.len();
        let scene = &self.scenes[idx];
        let ep_seed = rng::mix(&[self.seed, self.episode as u64]);
        let reset = self.reset_period <= 1 || self.episode % self.reset_period == 0;
        let (model, trainset) = match (reset, self.carried.take()) {
            (false, Some(state)) => state,
            _ => (fresh_model(ep_seed, scene), TrainSet::default()),
        };
        self.resets.push(reset);
        self.episode += 1;
        Ok(ExplorationTask {
            env: Env::new(scene, model, trainset, self.env.clone(), ep_seed, "rl")?,
            use_nav: self.use_nav,
            depth_scale: scene.optics.max_range,
        })
    }
}

/// Per-episode training summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    /// 1-based.
    pub episode: usize,
    pub steps: usize,
    pub episode_return: f64,
    pub annotations: usize,
    /// Point-goal success, or whether the segmentation model was reset.
    pub flag: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub mean_return: f64,
    pub mean_episode_annotations: f64,
}

struct Collector<S: TaskSource> {
    source: S,
    task: Option<S::T>,
    hidden: Vec<f64>,
    ep_steps: usize,
    ep_return: f64,
    ep_annotations: usize,
    finished: Vec<EpisodeSummary>,
}

impl<S: TaskSource> Collector<S> {
    fn new(source: S, net: &PolicyNet) -> Self {
        Self {
            source,
            task: None,
            hidden: net.zero_hidden(),
            ep_steps: 0,
            ep_return: 0.0,
            ep_annotations: 0,
            finished: Vec::new(),
        }
    }

    /// Collects up to `len` steps; `on_done` reads the finished task.
    fn fragment(
        &mut self,
        net: &PolicyNet,
        len: usize,
        rng: &mut Rng,
        on_done: &dyn Fn(&S::T) -> bool,
    ) -> Result<Rollout, Error> {
        let mut out = Rollout::default();
        for _ in 0..len {
            if self.task.is_none() {
                self.task = Some(self.source.next(None)?);
                self.hidden = net.zero_hidden();
            }
            let task = self.task.as_mut().expect("task present");
            let input = task.input();
            let fwd = net.forward(&input, &self.hidden)?;
            let a = sample_action(&fwd.probs, rng);
            let action = Action::from_index(a).expect("valid index");
            let st = task.step(action)?;
            self.ep_steps += 1;
            self.ep_return += st.reward;
            self.ep_annotations += usize::from(st.annotated);
            out.steps.push(Transition {
                input,
                h_prev: std::mem::replace(&mut self.hidden, fwd.hidden.clone()),
                action: a,
                log_prob: fwd.log_prob(a),
                value: fwd.value,
                reward: st.reward,
                done: st.done,
            });
            if st.done {
                let done_task = self.task.take().expect("task present");
                let flag = on_done(&done_task);
                self.finished.push(EpisodeSummary {
                    episode: self.finished.len() + 1,
                    steps: self.ep_steps,
                    episode_return: self.ep_return,
                    annotations: self.ep_annotations,
                    flag,
                });
                self.ep_steps = 0;
                self.ep_return = 0.0;
                self.ep_annotations = 0;
                self.task = Some(self.source.next(Some(done_task))?);
                self.hidden = net.zero_hidden();
            }
        }
        if let (Some(last), Some(task)) = (out.steps.last(), self.task.as_ref()) {
            if !last.done {
                out.bootstrap_value = net.forward(&task.input(), &self.hidden)?.value;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub steps: usize,
    pub updates: Vec<PpoStats>,
    pub curve: Vec<CurvePoint>,
    pub episodes: Vec<EpisodeSummary>,
}

fn run_stage<S: TaskSource>(
    net: &mut PolicyNet,
    source: S,
    steps: usize,
    ppo: &PpoConfig,
    window: usize,
    rng: &mut Rng,
    on_done: &dyn Fn(&S::T) -> bool,
) -> Result<StageReport, Error> {
    let mut report = StageReport {
        steps: 0,
        updates: Vec::new(),
        curve: Vec::new(),
        episodes: Vec::new(),
    };
    if steps == 0 {
        return Ok(report);
    }
    let mut opt = Adam::new(net.num_params(), ppo.lr);
    let mut collector = Collector::new(source, net);
    let frag_len = ppo.fragment_len.max(1);
    while report.steps < steps {
        let mut batch = Vec::with_capacity(ppo.fragments_per_update);
        for _ in 0..ppo.fragments_per_update.max(1) {
            let len = frag_len.min(steps - report.steps);
            if len == 0 {
                break;
            }
            let r = collector.fragment(net, len, rng, on_done)?;
            report.steps += r.steps.len();
            batch.push(r);
        }
        report.updates.push(ppo_update(net, &mut opt, &batch, ppo, rng)?);
        let recent = &collector.finished[collector.finished.len().saturating_sub(window.max(1))..];
        if !recent.is_empty() {
            let n = recent.len() as f64;
            report.curve.push(CurvePoint {
                step: report.steps,
                mean_return: recent.iter().map(|e| e.episode_return).sum::<f64>() / n,
                mean_episode_annotations: recent.iter().map(|e| e.annotations as f64).sum::<f64>() / n,
            });
        }
    }
    report.episodes = collector.finished;
    Ok(report)
}

pub fn policy_shape(scene: &Scene) -> NetShape {
    NetShape::new(scene.optics.rays, ray_input_width(scene.classes, scene.feature_dim()))
}

/// Point-goal navigation training with the exploration reward only.
pub fn pretrain_pointgoal(net: &mut PolicyNet, scenes: &[Scene], steps: usize, cfg: &RlConfig) -> Result<StageReport, Error> {
    if scenes.is_empty() {
        return Err(Error::Config("point-goal training needs at least one scene".into()));
    }
    let source = PointGoalSource {
        scenes,
        cfg: cfg.point_goal.clone(),
        reward: cfg.env.reward.clone(),
        rng: rng::seeded(&[cfg.seed, tag::POINT_GOAL]),
    };
    let mut rng = rng::seeded(&[cfg.seed, tag::POINT_GOAL, 1]);
    run_stage(net, source, steps, &cfg.pretrain_ppo, cfg.curve_window, &mut rng, &|t| t.succeeded())
}

/// Lifelong PPO training; `flag` in each summary marks a model reset.
pub fn train_lifelong(net: &mut PolicyNet, scenes: &[Scene], steps: usize, cfg: &RlConfig) -> Result<StageReport, Error> {
    if scenes.is_empty() {
        return Err(Error::Config("training needs at least one scene".into()));
    }
    let reset_period = if cfg.ablations.episodic_training {
        1
    } else {
        cfg.model_reset_period
    };
    let source = LifelongSource {
        scenes,
        env: cfg.effective_env(),
        episodes_per_scene: cfg.episodes_per_scene,
        reset_period,
        use_nav: !cfg.ablations.no_global_exploration,
        seed: cfg.seed,
        episode: 0,
        carried: None,
        resets: Vec::new(),
    };
    // Resets are decided when an episode starts, in episode order, so the
    // schedule can be recomputed for the summaries.
    let mut rng = rng::seeded(&[cfg.seed, tag::POLICY, 1]);
    let mut report = run_stage(net, source, steps, &cfg.ppo, cfg.curve_window, &mut rng, &|_| false)?;
    for e in &mut report.episodes {
        e.flag = reset_period <= 1 || (e.episode - 1) % reset_period == 0;
    }
    Ok(report)
}

/// Fraction of sampled point-goal episodes whose final goal is reached.
pub fn pointgoal_success_rate(net: &PolicyNet, scenes: &[Scene], episodes: usize, cfg: &PointGoalConfig, seed: u64) -> Result<f64, Error> {
    if episodes == 0 || scenes.is_empty() {
        return Ok(0.0);
    }
    let reward = RewardConfig::default();
    let mut rng = rng::seeded(&[seed, tag::POINT_GOAL, 2]);
    let mut act_rng = rng::seeded(&[seed, tag::AGENT]);
    let mut hits = 0usize;
    for i in 0..episodes {
        let mut task = PointGoalTask::sample(&scenes[i % scenes.len()], cfg, &reward, &mut rng)?;
        let mut h = net.zero_hidden();
        loop {
            let fwd = net.forward(&task.input(), &h)?;
            let a = sample_action(&fwd.probs, &mut act_rng);
            h = fwd.hidden;
            let st = task.step(Action::from_index(a).expect("valid index"))?;
            if st.done {
                break;
            }
        }
        hits += usize::from(task.succeeded());
    }
    Ok(hits as f64 / episodes as f64)
}

/// Saved policy: configuration, its hash and the network weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub format: String,
    pub format_version: u32,
    pub config: RlConfig,
    pub config_hash: String,
    pub shape: NetShape,
    pub depth_scale: f64,
    pub use_nav: bool,
    pub params: Vec<f64>,
}

impl PolicyCheckpoint {
    pub fn new(net: &PolicyNet, cfg: &RlConfig, depth_scale: f64) -> Self {
        Self {
            format: POLICY_FORMAT.into(),
            format_version: POLICY_VERSION,
            config: cfg.clone(),
            config_hash: cfg.hash(),
            shape: net.shape,
            depth_scale,
            use_nav: !cfg.ablations.no_global_exploration,
            params: net.params.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String, Error> {
        serde_json::to_string(self).map_err(|e| RlError::Checkpoint(e.to_string()).into())
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let ck: Self = serde_json::from_str(text).map_err(|e| RlError::Checkpoint(e.to_string()))?;
        if ck.format != POLICY_FORMAT || ck.format_version != POLICY_VERSION {
            return Err(RlError::Checkpoint(format!(
                "expected {POLICY_FORMAT} v{POLICY_VERSION}, found {} v{}",
                ck.format, ck.format_version
            ))
            .into());
        }
        let hash = ck.config.hash();
        if hash != ck.config_hash {
            return Err(RlError::Checkpoint(format!("config hash {} does not match contents ({hash})", ck.config_hash)).into());
        }
        PolicyNet::from_params(ck.shape, ck.params.clone())?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn net(&self) -> Result<PolicyNet, Error> {
        Ok(PolicyNet::from_params(self.shape, self.params.clone())?)
    }

    pub fn agent(&self) -> Result<RlAgent, Error> {
        Ok(RlAgent::new(self.net()?, self.depth_scale, self.use_nav))
    }
}

/// Both training stages plus the final checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedPolicy {
    pub checkpoint: PolicyCheckpoint,
    pub pretrain: StageReport,
    pub lifelong: StageReport,
}

pub fn train_policy(scenes: &[Scene], cfg: &RlConfig) -> Result<TrainedPolicy, Error> {
    let first = scenes
        .first()
        .ok_or_else(|| Error::Config("training needs at least one scene".into()))?;
    let mut net = PolicyNet::new(policy_shape(first), cfg.seed);
    let pre_steps = if cfg.ablations.no_nav_pretrain { 0 } else { cfg.pretrain_steps };
    let pretrain = pretrain_pointgoal(&mut net, scenes, pre_steps, cfg)?;
    let lifelong = train_lifelong(&mut net, scenes, cfg.train_steps, cfg)?;
    Ok(TrainedPolicy {
        checkpoint: PolicyCheckpoint::new(&net, cfg, first.optics.max_range),
        pretrain,
        lifelong,
    })
}

/// Curve as CSV with columns `step,mean_return,mean_episode_annotations`.
pub fn curve_csv(curve: &[CurvePoint]) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["step", "mean_return", "mean_episode_annotations"])
        .map_err(|e| Error::Config(e.to_string()))?;
    for p in curve {
        w.write_record([
            p.step.to_string(),
            format!("{:.6}", p.mean_return),
            format!("{:.4}", p.mean_episode_annotations),
        ])
        .map_err(|e| Error::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

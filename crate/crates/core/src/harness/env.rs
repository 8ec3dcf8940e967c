use super::log::{EpisodeLog, MiouCheckpoint, StepRecord, Termination};
use crate::agents::AgentState;
use crate::error::Error;
use crate::mapper::OccupancyMap;
use crate::perception::{miou, predict, refine, top_common_classes, LabeledView, SegMask, SegModel, SgdConfig, TrainSet};
use crate::planner::{polar_goal, Navigator, PolarGoal};
use crate::rl::{exploration_reward, perception_reward_from, propagate_mask, total_reward, RewardConfig};
use crate::rng::{self, tag, Rng};
use crate::world::{render_view, sample_reference_views, step, total_navigable_area, Action, ClassId, Observation, Pose, Scene};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    /// Cap on steps per episode, annotations included.
    pub max_steps: usize,
    /// Size of the fixed reference set used for mIoU.
    pub ref_views: usize,
    pub reward: RewardConfig,
    pub sgd: SgdConfig,
    /// Replace waypoint rewards by a per-step newly-mapped-area reward.
    pub coverage_reward: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            max_steps: 2000,
            ref_views: 32,
            reward: RewardConfig::default(),
            sgd: SgdConfig::default(),
            coverage_reward: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub r_exp: f64,
    pub r_seg: f64,
    pub reward: f64,
    pub annotated: bool,
    pub done: bool,
}

/// One exploration episode in one scene; owns the map, the navigator and the
/// segmentation model while the episode runs.
pub struct Env<'s> {
    scene: &'s Scene,
    cfg: EnvConfig,
    refs: Vec<Observation>,
    subset: Vec<ClassId>,
    map: OccupancyMap,
    nav: Navigator,
    pose: Pose,
    obs: Observation,
    seg: SegMask,
    propagated: SegMask,
    last_annotation: Option<Observation>,
    model: SegModel,
    trainset: TrainSet,
    refine_rng: Rng,
    step: usize,
    done: bool,
    miou: f64,
    log: EpisodeLog,
}

impl<'s> Env<'s> {
    pub fn new(scene: &'s Scene, model: SegModel, trainset: TrainSet, cfg: EnvConfig, seed: u64, agent: &str) -> Result<Self, Error> {
        cfg.reward.validate().map_err(Error::Config)?;
        let refs = sample_reference_views(scene, cfg.ref_views, 0);
        let subset = top_common_classes(&refs, scene.top_k, scene.classes);
        let pose = scene.start_pose();
        scene.validate_pose(pose)?;
        let obs = render_view(scene, pose);
        let mut map = OccupancyMap::for_scene(scene);
        map.update(&obs)?;
        let mut nav = Navigator::new(cfg.reward.eps);
        nav.refresh(&map, pose);
        let seg = predict(&model, &obs)?;
        let propagated = propagate_mask(None, &obs, scene.classes);
        let miou0 = miou(&model, &refs, &subset);
        let log = EpisodeLog {
            scene_id: scene.id.clone(),
            agent: agent.to_string(),
            initial_miou: miou0,
            initial_area: map.explored_area(),
            total_area: total_navigable_area(scene),
            steps: Vec::new(),
            checkpoints: Vec::new(),
            annotations: 0,
            step_cap: cfg.max_steps,
            termination: Termination::Explored,
            final_map: String::new(),
        };
        let done = nav.is_complete() || cfg.max_steps == 0;
        let mut env = Self {
            scene,
            refine_rng: rng::seeded(&[seed, scene.seed, tag::REFINE]),
            cfg,
            refs,
            subset,
            map,
            nav,
            pose,
            obs,
            seg,
            propagated,
            last_annotation: None,
            model,
            trainset,
            step: 0,
            done: false,
            miou: miou0,
            log,
        };
        if done {
            env.finish();
        }
        Ok(env)
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    pub fn map(&self) -> &OccupancyMap {
        &self.map
    }

    pub fn navigator(&self) -> &Navigator {
        &self.nav
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn observation(&self) -> &Observation {
        &self.obs
    }

    pub fn model(&self) -> &SegModel {
        &self.model
    }

    pub fn reference_views(&self) -> &[Observation] {
        &self.refs
    }

    pub fn class_subset(&self) -> &[ClassId] {
        &self.subset
    }

    pub fn current_miou(&self) -> f64 {
        self.miou
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn log(&self) -> &EpisodeLog {
        &self.log
    }

    /// Polar form of the current navigation target.
    pub fn polar(&self) -> Option<PolarGoal> {
        self.nav
            .steering_target(&self.map)
            .map(|t| polar_goal(self.pose, t, self.scene.cell_size, &self.scene.optics))
    }

    pub fn state(&self) -> AgentState<'_> {
        AgentState {
            obs: &self.obs,
            seg: &self.seg,
            propagated: &self.propagated,
            polar: self.polar(),
            step: self.step + 1,
            annotations: self.log.annotations,
            turn_angle: self.scene.optics.turn_angle_deg.to_radians(),
        }
    }

    fn finish(&mut self) {
        self.done = true;
        self.log.termination = if self.nav.is_complete() {
            Termination::Explored
        } else {
            Termination::StepCap
        };
        self.log.checkpoints.push(MiouCheckpoint {
            annotation: self.log.annotations,
            step: self.step,
            explored_area: self.map.explored_area(),
            miou: self.miou,
        });
        self.log.final_map = self.map.to_ascii();
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome, Error> {
        if self.done {
            return Err(Error::InvalidAction {
                agent: self.log.agent.clone(),
                step: self.step + 1,
                detail: "episode already finished".into(),
            });
        }
        self.step += 1;
        let cfg = &self.cfg.reward;
        let (mut r_exp, mut r_seg, mut miou_delta) = (0.0, 0.0, 0.0);
        let annotated = action == Action::Annotate;
        if annotated {
            let hits = self.seg.ids.iter().zip(&self.obs.gt_mask).filter(|(a, b)| a == b).count();
            let acc_before = hits as f64 / self.obs.rays().max(1) as f64;
            let before = self.miou;
            refine(
                &mut self.model,
                &mut self.trainset,
                LabeledView::from_observation(&self.obs),
                &self.cfg.sgd,
                &mut self.refine_rng,
            )?;
            self.miou = miou(&self.model, &self.refs, &self.subset);
            miou_delta = self.miou - before;
            r_seg = perception_reward_from(before, self.miou, acc_before, true, cfg);
            self.log.annotations += 1;
            self.seg = predict(&self.model, &self.obs)?;
            self.last_annotation = Some(self.obs.clone());
            self.propagated = propagate_mask(self.last_annotation.as_ref(), &self.obs, self.scene.classes);
            self.log.checkpoints.push(MiouCheckpoint {
                annotation: self.log.annotations,
                step: self.step,
                explored_area: self.map.explored_area(),
                miou: self.miou,
            });
        } else {
            let goal = self.nav.local_goal();
            let prev = self.pose;
            let area_before = self.map.explored_area();
            self.pose = step(self.scene, self.pose, action);
            self.obs = render_view(self.scene, self.pose);
            self.map.update(&self.obs)?;
            self.seg = predict(&self.model, &self.obs)?;
            self.propagated = propagate_mask(self.last_annotation.as_ref(), &self.obs, self.scene.classes);
            if let Some(g) = goal {
                let e = exploration_reward(prev, self.pose, g, &self.map, cfg);
                if e.reached {
                    self.nav.advance();
                }
                if !self.cfg.coverage_reward {
                    r_exp = e.reward;
                }
            }
            if self.cfg.coverage_reward {
                r_exp = cfg.coverage_coef * (self.map.explored_area() - area_before);
            }
            self.nav.refresh(&self.map, self.pose);
        }
        let reward = total_reward(r_exp, r_seg, cfg);
        self.log.steps.push(StepRecord {
            step: self.step,
            action,
            pose: self.pose,
            explored_area: self.map.explored_area(),
            annotated,
            r_exp,
            r_seg,
            reward,
            miou_delta,
        });
        if self.nav.is_complete() || self.step >= self.cfg.max_steps {
            self.finish();
        }
        Ok(StepOutcome {
            r_exp,
            r_seg,
            reward,
            annotated,
            done: self.done,
        })
    }

    /// Ends the episode early (used by fixed-length training rollouts).
    pub fn truncate(&mut self) {
        if !self.done {
            self.finish();
        }
    }

    pub fn into_parts(mut self) -> (EpisodeLog, SegModel, TrainSet) {
        if !self.done {
            self.finish();
        }
        (self.log, self.model, self.trainset)
    }
}

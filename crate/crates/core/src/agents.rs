//! Agent interface, the waypoint-following motion controller and the
//! heuristic annotation baselines.

use crate::error::Error;
use crate::perception::SegMask;
use crate::planner::PolarGoal;
use crate::rng::{self, tag, Rng};
use crate::world::{Action, Observation};
use rand::Rng as _;

/// Everything an agent may look at before choosing an action.
#[derive(Clone, Copy, Debug)]
pub struct AgentState<'a> {
    pub obs: &'a Observation,
    /// Prediction of the current segmentation model on `obs`.
    pub seg: &'a SegMask,
    /// Latest annotation warped into the current view; the channel after the
    /// last class means "no label".
    pub propagated: &'a SegMask,
    /// Active navigation target, `None` once exploration has finished.
    pub polar: Option<PolarGoal>,
    /// 1-based index of the step about to be taken.
    pub step: usize,
    pub annotations: usize,
    pub turn_angle: f64,
}

impl AgentState<'_> {
    /// Ground-truth pixel accuracy of `seg`; only oracles may call this.
    pub fn oracle_accuracy(&self) -> f64 {
        let n = self.obs.gt_mask.len();
        if n == 0 {
            return 0.0;
        }
        let hit = self.seg.ids.iter().zip(&self.obs.gt_mask).filter(|(a, b)| a == b).count();
        hit as f64 / n as f64
    }
}

pub trait AgentPolicy {
    fn name(&self) -> &str;
    /// Called before every episode with an episode-specific seed.
    fn reset(&mut self, seed: u64);
    fn act(&mut self, state: &AgentState) -> Result<Action, Error>;
}

/// Turns toward the goal until it lies within half a turn of straight ahead,
/// then moves forward. Positive bearings (left) and exact ties rotate left.
pub fn motion_controller(goal: Option<PolarGoal>, turn_angle: f64) -> Action {
    match goal {
        Some(g) if g.r > 0.0 => {
            if g.phi.abs() <= turn_angle / 2.0 + 1e-9 {
                Action::MoveForward
            } else if g.phi >= 0.0 {
                Action::RotateLeft
            } else {
                Action::RotateRight
            }
        }
        _ => Action::RotateLeft,
    }
}

/// Annotates whenever the current view's accuracy is below `threshold`.
#[derive(Clone, Debug)]
pub struct AccuracyOracle {
    pub threshold: f64,
}

impl Default for AccuracyOracle {
    fn default() -> Self {
        Self { threshold: 0.7 }
    }
}

impl AgentPolicy for AccuracyOracle {
    fn name(&self) -> &str {
        "oracle"
    }

    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, state: &AgentState) -> Result<Action, Error> {
        Ok(if state.oracle_accuracy() < self.threshold {
            Action::Annotate
        } else {
            motion_controller(state.polar, state.turn_angle)
        })
    }
}

/// Annotates on every `period`-th step, counting all actions.
#[derive(Clone, Debug)]
pub struct UniformAgent {
    pub period: usize,
}

impl Default for UniformAgent {
    fn default() -> Self {
        Self { period: 20 }
    }
}

impl AgentPolicy for UniformAgent {
    fn name(&self) -> &str {
        "uniform"
    }

    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, state: &AgentState) -> Result<Action, Error> {
        Ok(if self.period > 0 && state.step % self.period == 0 {
            Action::Annotate
        } else {
            motion_controller(state.polar, state.turn_angle)
        })
    }
}

/// Annotates with a fixed probability per step, optionally up to a budget.
#[derive(Clone, Debug)]
pub struct RandomAgent {
    pub prob: f64,
    pub budget: Option<usize>,
    rng: Rng,
}

impl RandomAgent {
    pub fn new(prob: f64) -> Self {
        Self {
            prob,
            budget: None,
            rng: rng::seeded(&[0, tag::AGENT]),
        }
    }

    pub fn with_budget(prob: f64, budget: usize) -> Self {
        Self {
            budget: Some(budget),
            ..Self::new(prob)
        }
    }

    pub fn draw(&mut self) -> bool {
        self.rng.random_bool(self.prob.clamp(0.0, 1.0))
    }
}

impl Default for RandomAgent {
    fn default() -> Self {
        Self::new(0.05)
    }
}

impl AgentPolicy for RandomAgent {
    fn name(&self) -> &str {
        "random"
    }

    fn reset(&mut self, seed: u64) {
        self.rng = rng::seeded(&[seed, tag::AGENT]);
    }

    fn act(&mut self, state: &AgentState) -> Result<Action, Error> {
        let under_budget = self.budget.is_none_or(|b| state.annotations < b);
        Ok(if self.draw() && under_budget {
            Action::Annotate
        } else {
            motion_controller(state.polar, state.turn_angle)
        })
    }
}

/// Follows the navigation target and never annotates.
#[derive(Clone, Debug, Default)]
pub struct ExploreOnly;

impl AgentPolicy for ExploreOnly {
    fn name(&self) -> &str {
        "explore"
    }

    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, state: &AgentState) -> Result<Action, Error> {
        Ok(motion_controller(state.polar, state.turn_angle))
    }
}

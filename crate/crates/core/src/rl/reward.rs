use crate::grid::Cell;
use crate::mapper::OccupancyMap;
use crate::perception::{accuracy, miou, SegModel};
use crate::planner::geodesic_distance;
use crate::world::{ClassId, Observation, Pose};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Fixed cost of one annotation.
    pub eps_ann: f64,
    /// Bonus for annotating a view the model gets wrong.
    pub lambda_acc: f64,
    pub tau_acc: f64,
    /// Bonus for reaching the local goal.
    pub lambda_g: f64,
    /// Reach radius in meters.
    pub eps: f64,
    /// Weight of the exploration term in the total reward.
    pub lambda: f64,
    /// Per square meter of newly mapped area, used when waypoint rewards are disabled.
    pub coverage_coef: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            eps_ann: 0.01,
            lambda_acc: 0.01,
            tau_acc: 0.7,
            lambda_g: 1.0,
            eps: 1.0,
            lambda: 0.01,
            coverage_coef: 0.1,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        for (name, v) in [
            ("eps_ann", self.eps_ann),
            ("lambda_acc", self.lambda_acc),
            ("lambda_g", self.lambda_g),
            ("eps", self.eps),
            ("coverage_coef", self.coverage_coef),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        Ok(())
    }
}

/// Segmentation reward from precomputed quantities.
pub fn perception_reward_from(miou_before: f64, miou_after: f64, acc_before: f64, did_annotate: bool, cfg: &RewardConfig) -> f64 {
    if !did_annotate {
        return 0.0;
    }
    let hard = if acc_before < cfg.tau_acc { cfg.lambda_acc } else { 0.0 };
    miou_after - miou_before - cfg.eps_ann + hard
}

#[allow(clippy::too_many_arguments)]
pub fn perception_reward(
    model_before: &SegModel,
    model_after: &SegModel,
    ref_views: &[Observation],
    subset: &[ClassId],
    obs: &Observation,
    did_annotate: bool,
    cfg: &RewardConfig,
) -> f64 {
    if !did_annotate {
        return 0.0;
    }
    perception_reward_from(
        miou(model_before, ref_views, subset),
        miou(model_after, ref_views, subset),
        accuracy(model_before, obs),
        true,
        cfg,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationStep {
    pub reward: f64,
    /// Geodesic progress towards the goal in meters.
    pub progress: f64,
    pub reached: bool,
    /// The goal could not be reached on the current map; reward is 0.
    pub unreachable: bool,
}

/// Geodesic progress toward `goal` plus a bonus once within the reach radius.
pub fn exploration_reward(prev: Pose, new: Pose, goal: Cell, map: &OccupancyMap, cfg: &RewardConfig) -> ExplorationStep {
    let before = geodesic_distance(map, prev.cell, goal);
    let after = geodesic_distance(map, new.cell, goal);
    if !before.is_finite() || !after.is_finite() {
        return ExplorationStep {
            reward: 0.0,
            progress: 0.0,
            unreachable: true,
            reached: false,
        };
    }
    let reached = after < cfg.eps;
    let progress = before - after;
    ExplorationStep {
        reward: progress + if reached { cfg.lambda_g } else { 0.0 },
        progress,
        reached,
        unreachable: false,
    }
}

pub fn total_reward(r_exp: f64, r_seg: f64, cfg: &RewardConfig) -> f64 {
    cfg.lambda * r_exp + (1.0 - cfg.lambda) * r_seg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapper::CellState;

    fn corridor(cell_size: f64) -> OccupancyMap {
        let mut m = OccupancyMap::new(3, 12, cell_size);
        for c in 1..11 {
            m.set_state(Cell::new(1, c), CellState::Navigable);
        }
        m
    }

    fn at(col: usize) -> Pose {
        Pose {
            cell: Cell::new(1, col),
            heading: 0,
        }
    }

    #[test]
    fn segmentation_reward_examples() {
        let cfg = RewardConfig::default();
        assert_eq!(perception_reward_from(0.3, 0.9, 0.1, false, &cfg), 0.0);
        assert!((perception_reward_from(0.30, 0.35, 0.5, true, &cfg) - 0.05).abs() < 1e-12);
        assert!((perception_reward_from(0.4, 0.4, 0.9, true, &cfg) + 0.01).abs() < 1e-15);
        let off = RewardConfig { lambda_acc: 0.0, ..cfg };
        assert!((perception_reward_from(0.30, 0.35, 0.5, true, &off) - 0.04).abs() < 1e-12);
    }

    #[test]
    fn exploration_reward_examples() {
        let cfg = RewardConfig::default();
        let map = corridor(0.5);
        let goal = Cell::new(1, 10);
        // Rotation in place, far from goal.
        assert_eq!(exploration_reward(at(2), at(2), goal, &map, &cfg).reward, 0.0);
        let one = exploration_reward(at(2), at(3), goal, &map, &cfg);
        assert!((one.reward - 0.5).abs() < 1e-12 && !one.reached);
        // 1.0 m away, landing 0.5 m away: within the 1 m radius.
        let bonus = exploration_reward(at(8), at(9), goal, &map, &cfg);
        assert!(bonus.reached);
        assert!((bonus.reward - 1.5).abs() < 1e-12);
        let blocked = exploration_reward(at(2), at(3), Cell::new(0, 0), &map, &cfg);
        assert!(blocked.unreachable && blocked.reward == 0.0);
    }

    #[test]
    fn exploration_progress_is_bounded_by_cell_size() {
        let cfg = RewardConfig::default();
        let map = corridor(0.5);
        for a in 1usize..11 {
            for b in [a.saturating_sub(1).max(1), a, (a + 1).min(10)] {
                for g in 1..11 {
                    let s = exploration_reward(at(a), at(b), Cell::new(1, g), &map, &cfg);
                    assert!(s.progress.abs() <= 0.5 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn total_reward_examples() {
        let cfg = RewardConfig::default();
        assert!((total_reward(1.0, 0.0, &cfg) - 0.01).abs() < 1e-15);
        assert!((total_reward(0.0, 0.05, &cfg) - 0.0495).abs() < 1e-15);
        assert_eq!(total_reward(0.0, 0.0, &cfg), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(RewardConfig::default().validate().is_ok());
        assert!(RewardConfig { lambda: 1.5, ..Default::default() }.validate().is_err());
        assert!(RewardConfig { eps_ann: -0.1, ..Default::default() }.validate().is_err());
    }
}

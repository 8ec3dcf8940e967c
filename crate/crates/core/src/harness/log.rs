use crate::world::{Action, Pose};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based.
    pub step: usize,
    pub action: Action,
    /// Pose after the action.
    pub pose: Pose,
    /// Explored navigable area after the action, m^2.
    pub explored_area: f64,
    pub annotated: bool,
    pub r_exp: f64,
    pub r_seg: f64,
    pub reward: f64,
    /// Reference mIoU change caused by this step's refinement.
    pub miou_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiouCheckpoint {
    /// Number of annotations made so far.
    pub annotation: usize,
    pub step: usize,
    pub explored_area: f64,
    pub miou: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// No reachable frontier left.
    Explored,
    StepCap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub scene_id: String,
    pub agent: String,
    pub initial_miou: f64,
    /// Explored area before the first action.
    pub initial_area: f64,
    pub total_area: f64,
    pub steps: Vec<StepRecord>,
    /// One entry per annotation, then one at episode end.
    pub checkpoints: Vec<MiouCheckpoint>,
    pub annotations: usize,
    pub step_cap: usize,
    pub termination: Termination,
    /// ASCII dump of the map at episode end.
    #[serde(default)]
    pub final_map: String,
}

impl EpisodeLog {
    pub fn final_area(&self) -> f64 {
        self.steps.last().map_or(self.initial_area, |s| s.explored_area)
    }

    pub fn final_miou(&self) -> f64 {
        self.checkpoints.last().map_or(self.initial_miou, |c| c.miou)
    }

    pub fn motion_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.action.is_motion()).count()
    }

    /// Checkpoints taken right after annotations, in order.
    pub fn annotation_checkpoints(&self) -> &[MiouCheckpoint] {
        &self.checkpoints[..self.annotations.min(self.checkpoints.len())]
    }
}

/// Mean newly explored area between consecutive annotations, the first
/// measured from zero. `None` without annotations.
pub fn metric_da_per_annot(log: &EpisodeLog) -> Option<f64> {
    let cps = log.annotation_checkpoints();
    if cps.is_empty() {
        return None;
    }
    let mut prev = 0.0;
    let mut sum = 0.0;
    for c in cps {
        sum += c.explored_area - prev;
        prev = c.explored_area;
    }
    Some(sum / cps.len() as f64)
}

/// Final explored area per motion step; annotations leave the map unchanged
/// and are not counted.
pub fn metric_da_per_step(log: &EpisodeLog) -> Option<f64> {
    let n = log.motion_steps();
    (n > 0).then(|| log.final_area() / n as f64)
}

/// Mean mIoU after annotations `a..=b` (1-based). `None` with fewer than `a` annotations.
pub fn metric_miou_window(log: &EpisodeLog, a: usize, b: usize) -> Option<f64> {
    let cps = log.annotation_checkpoints();
    if a == 0 || cps.len() < a {
        return None;
    }
    let window = &cps[a - 1..b.min(cps.len())];
    Some(window.iter().map(|c| c.miou).sum::<f64>() / window.len() as f64)
}

pub fn metric_annots(log: &EpisodeLog) -> usize {
    log.annotations
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::grid::Cell;

    pub(crate) fn hand_log(areas_at_annotations: &[f64], mious: &[f64], motion: usize, final_area: f64) -> EpisodeLog {
        let pose = Pose {
            cell: Cell::new(1, 1),
            heading: 0,
        };
        let mut steps = Vec::new();
        let mut checkpoints = Vec::new();
        let mut n = 0;
        for (k, (&a, &m)) in areas_at_annotations.iter().zip(mious).enumerate() {
            n += 1;
            steps.push(StepRecord {
                step: n,
                action: Action::Annotate,
                pose,
                explored_area: a,
                annotated: true,
                r_exp: 0.0,
                r_seg: 0.0,
                reward: 0.0,
                miou_delta: 0.0,
            });
            checkpoints.push(MiouCheckpoint {
                annotation: k + 1,
                step: n,
                explored_area: a,
                miou: m,
            });
        }
        for _ in 0..motion {
            n += 1;
            steps.push(StepRecord {
                step: n,
                action: Action::MoveForward,
                pose,
                explored_area: final_area,
                annotated: false,
                r_exp: 0.0,
                r_seg: 0.0,
                reward: 0.0,
                miou_delta: 0.0,
            });
        }
        checkpoints.push(MiouCheckpoint {
            annotation: areas_at_annotations.len(),
            step: n,
            explored_area: final_area,
            miou: mious.last().copied().unwrap_or(0.0),
        });
        EpisodeLog {
            scene_id: "hand".into(),
            agent: "test".into(),
            initial_miou: 0.0,
            initial_area: 0.0,
            total_area: final_area,
            steps,
            checkpoints,
            annotations: areas_at_annotations.len(),
            step_cap: 2000,
            termination: Termination::Explored,
            final_map: String::new(),
        }
    }

    #[test]
    fn area_per_annotation() {
        let log = hand_log(&[2.0, 5.0, 6.0], &[0.1, 0.2, 0.3], 10, 6.0);
        assert_eq!(metric_da_per_annot(&log), Some(2.0));
        assert_eq!(metric_annots(&log), 3);
        assert_eq!(metric_da_per_annot(&hand_log(&[], &[], 5, 3.0)), None);
    }

    #[test]
    fn area_per_step() {
        let log = hand_log(&[], &[], 100, 6.0);
        assert!((metric_da_per_step(&log).unwrap() - 0.06).abs() < 1e-15);
        // Annotations do not count as steps.
        let log = hand_log(&[1.0, 2.0], &[0.1, 0.2], 100, 6.0);
        assert!((metric_da_per_step(&log).unwrap() - 0.06).abs() < 1e-15);
    }

    #[test]
    fn miou_windows() {
        let mious: Vec<f64> = (1..=60).map(|k| k as f64 / 100.0).collect();
        let areas: Vec<f64> = (1..=60).map(|k| k as f64).collect();
        let log = hand_log(&areas, &mious, 0, 60.0);
        // Spreadsheet-style recomputation.
        let first: f64 = (1..=50).map(|k| k as f64 / 100.0).sum::<f64>() / 50.0;
        let second: f64 = (51..=60).map(|k| k as f64 / 100.0).sum::<f64>() / 10.0;
        assert!((metric_miou_window(&log, 1, 50).unwrap() - first).abs() < 1e-12);
        assert!((metric_miou_window(&log, 51, 100).unwrap() - second).abs() < 1e-12);
        assert_eq!(metric_miou_window(&hand_log(&[1.0], &[0.5], 0, 1.0), 51, 100), None);
    }
}

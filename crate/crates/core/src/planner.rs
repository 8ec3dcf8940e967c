//! Frontier selection, shortest paths, curvature-based waypoints and polar
//! goal encoding on top of an [`OccupancyMap`].

use crate::error::PlanError;
use crate::grid::{Cell, Direction, Grid};
use crate::mapper::{CellState, OccupancyMap};
use crate::world::{wrap_angle, Optics, Pose};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Navigable cells with at least one Unknown 4-neighbour.
pub fn frontier_points(map: &OccupancyMap) -> Vec<Cell> {
    map.states()
        .cells()
        .filter(|&c| is_frontier(map, c))
        .collect()
}

pub fn is_frontier(map: &OccupancyMap, cell: Cell) -> bool {
    map.is_navigable(cell)
        && map
            .states()
            .neighbors(cell)
            .any(|(_, n)| map.state(n) == CellState::Unknown)
}

#[derive(Clone, Copy, PartialEq)]
struct QueueEntry {
    cost: f64,
    seq: u64,
    cell: Cell,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (cost, insertion order).
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest-path tree.
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub source: Cell,
    dist: Grid<f64>,
    prev: Grid<Option<Cell>>,
}

impl DistanceField {
    /// Path cost to `cell`, `f64::INFINITY` when unreachable.
    pub fn cost(&self, cell: Cell) -> f64 {
        self.dist.get(cell).copied().unwrap_or(f64::INFINITY)
    }

    /// Path from the source to `target`, inclusive of both ends.
    pub fn path_to(&self, target: Cell) -> Option<Vec<Cell>> {
        if !self.cost(target).is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while let Some(p) = self.prev[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

/// Dijkstra over 4-connected cells. `step_cost(cell)` is the cost of entering
/// `cell`, `None` for impassable cells. Neighbours relax in N, E, S, W order
/// and only strict improvements replace a predecessor, so ties resolve
/// deterministically.
pub fn dijkstra(
    rows: usize,
    cols: usize,
    source: Cell,
    step_cost: impl Fn(Cell) -> Option<f64>,
) -> DistanceField {
    let mut dist = Grid::filled(rows, cols, f64::INFINITY);
    let mut prev = Grid::filled(rows, cols, None);
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    if dist.contains(source) {
        dist[source] = 0.0;
        heap.push(QueueEntry {
            cost: 0.0,
            seq,
            cell: source,
        });
    }
    while let Some(QueueEntry { cost, cell, .. }) = heap.pop() {
        if cost > dist[cell] {
            continue;
        }
        for d in Direction::ALL {
            let Some(next) = cell.step(d).filter(|n| dist.contains(*n)) else {
                continue;
            };
            let Some(w) = step_cost(next) else { continue };
            let nc = cost + w;
            if nc < dist[next] {
                dist[next] = nc;
                prev[next] = Some(cell);
                seq += 1;
                heap.push(QueueEntry {
                    cost: nc,
                    seq,
                    cell: next,
                });
            }
        }
    }
    DistanceField { source, dist, prev }
}

/// Unit-weight shortest-path tree over Navigable cells.
pub fn navigable_field(map: &OccupancyMap, source: Cell) -> DistanceField {
    dijkstra(map.rows(), map.cols(), source, |c| map.is_navigable(c).then_some(1.0))
}

pub fn shortest_path(map: &OccupancyMap, from: Cell, to: Cell) -> Result<Vec<Cell>, PlanError> {
    for c in [from, to] {
        if !map.is_navigable(c) {
            return Err(PlanError::NotNavigable(c));
        }
    }
    navigable_field(map, from)
        .path_to(to)
        .ok_or(PlanError::Unreachable { from, to })
}

/// Hop count times cell size, `f64::INFINITY` if unreachable or off-map.
pub fn geodesic_distance(map: &OccupancyMap, a: Cell, b: Cell) -> f64 {
    if !map.is_navigable(a) || !map.is_navigable(b) {
        return f64::INFINITY;
    }
    navigable_field(map, a).cost(b) * map.cell_size
}

/// Closest reachable frontier by geodesic distance; ties go to the
/// lexicographically smaller `(row, col)`.
pub fn select_frontier(map: &OccupancyMap, pose: Pose) -> Option<Cell> {
    if !map.is_navigable(pose.cell) {
        return None;
    }
    let field = navigable_field(map, pose.cell);
    frontier_points(map)
        .into_iter()
        .filter(|c| field.cost(*c).is_finite())
        .min_by(|a, b| field.cost(*a).total_cmp(&field.cost(*b)).then(a.cmp(b)))
}

/// Cells where the step direction changes, plus the final cell.
pub fn split_by_curvature(path: &[Cell]) -> Vec<Cell> {
    let Some(&last) = path.last() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for i in 1..path.len().saturating_sub(1) {
        let before = Direction::between(path[i - 1], path[i]);
        let after = Direction::between(path[i], path[i + 1]);
        if before != after {
            out.push(path[i]);
        }
    }
    out.push(last);
    out
}

/// Goal relative to the agent: distance and bearing minus heading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarGoal {
    /// Meters.
    pub r: f64,
    /// Radians in `(-pi, pi]`, positive to the agent's left.
    pub phi: f64,
}

impl PolarGoal {
    pub const ZERO: PolarGoal = PolarGoal { r: 0.0, phi: 0.0 };
}

pub fn polar_goal(pose: Pose, goal: Cell, cell_size: f64, optics: &Optics) -> PolarGoal {
    if goal == pose.cell {
        return PolarGoal::ZERO;
    }
    let dx = goal.col as f64 - pose.cell.col as f64;
    let dy_north = pose.cell.row as f64 - goal.row as f64;
    let r = (dx * dx + dy_north * dy_north).sqrt() * cell_size;
    let bearing = dy_north.atan2(dx);
    PolarGoal {
        r,
        phi: wrap_angle(bearing - optics.heading_angle(pose.heading)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavPlan {
    pub frontier_goal: Cell,
    /// Every cell of the planned route, start included.
    pub path: Vec<Cell>,
    pub waypoints: Vec<Cell>,
    pub active_waypoint_index: usize,
}

impl NavPlan {
    pub fn active_waypoint(&self) -> Option<Cell> {
        self.waypoints.get(self.active_waypoint_index).copied()
    }

    pub fn remaining(&self) -> &[Cell] {
        &self.waypoints[self.active_waypoint_index.min(self.waypoints.len())..]
    }
}

/// Exploration progress of a [`Navigator`].
#[derive(Clone, Debug, PartialEq)]
pub enum NavPhase {
    /// Walking the waypoints of a plan towards a frontier.
    Following(NavPlan),
    /// Standing at a reached frontier, turning towards its unknown side.
    Looking { frontier: Cell },
    /// No reachable frontier left.
    Complete,
}

/// Maintains the global plan: frontier choice, waypoints, revalidation after
/// each map update and waypoint advancement.
#[derive(Clone, Debug)]
pub struct Navigator {
    phase: NavPhase,
    /// A waypoint counts as reached when its geodesic distance is below this (meters).
    pub reach_eps: f64,
    pub replans: usize,
}

impl Navigator {
    pub fn new(reach_eps: f64) -> Self {
        Self {
            phase: NavPhase::Complete,
            reach_eps,
            replans: 0,
        }
    }

    pub fn phase(&self) -> &NavPhase {
        &self.phase
    }

    pub fn plan(&self) -> Option<&NavPlan> {
        match &self.phase {
            NavPhase::Following(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.phase == NavPhase::Complete
    }

    /// Active waypoint while following a plan.
    pub fn local_goal(&self) -> Option<Cell> {
        self.plan().and_then(NavPlan::active_waypoint)
    }

    /// Cell the agent should currently head for: the active waypoint, or the
    /// first unknown neighbour of the frontier it is standing on.
    pub fn steering_target(&self, map: &OccupancyMap) -> Option<Cell> {
        match &self.phase {
            NavPhase::Following(p) => p.active_waypoint(),
            NavPhase::Looking { frontier } => map
                .states()
                .neighbors(*frontier)
                .find(|(_, n)| map.state(*n) == CellState::Unknown)
                .map(|(_, n)| n)
                .or(Some(*frontier)),
            NavPhase::Complete => None,
        }
    }

    fn needs_replan(&self, map: &OccupancyMap, pose: Pose) -> bool {
        match &self.phase {
            NavPhase::Complete => true,
            NavPhase::Looking { frontier } => {
                !is_frontier(map, *frontier) || geodesic_distance(map, pose.cell, *frontier) >= self.reach_eps
            }
            NavPhase::Following(plan) => {
                if !is_frontier(map, plan.frontier_goal) || !plan.path.contains(&pose.cell) {
                    return true;
                }
                if plan.remaining().iter().any(|w| !map.is_navigable(*w)) {
                    return true;
                }
                plan.active_waypoint()
                    .is_none_or(|w| !geodesic_distance(map, pose.cell, w).is_finite())
            }
        }
    }

    fn replan(&mut self, map: &OccupancyMap, pose: Pose) {
        self.replans += 1;
        self.phase = match select_frontier(map, pose) {
            None => NavPhase::Complete,
            Some(f) => match shortest_path(map, pose.cell, f) {
                Ok(path) => NavPhase::Following(NavPlan {
                    frontier_goal: f,
                    waypoints: split_by_curvature(&path),
                    path,
                    active_waypoint_index: 0,
                }),
                Err(_) => NavPhase::Complete,
            },
        };
    }

    /// Marks the active waypoint reached and moves on; the last waypoint
    /// switches to the looking phase.
    pub fn advance(&mut self) {
        if let NavPhase::Following(plan) = &mut self.phase {
            if plan.active_waypoint_index + 1 < plan.waypoints.len() {
                plan.active_waypoint_index += 1;
            } else {
                self.phase = NavPhase::Looking {
                    frontier: plan.frontier_goal,
                };
            }
        }
    }

    /// Revalidates against the latest map, replans if needed and skips
    /// waypoints that are already within reach. Returns false once exploration
    /// is complete.
    pub fn refresh(&mut self, map: &OccupancyMap, pose: Pose) -> bool {
        // Two rounds: a replan may immediately finish on an already-reached frontier.
        for _ in 0..2 {
            if self.needs_replan(map, pose) {
                self.replan(map, pose);
            }
            while let Some(w) = self.local_goal() {
                if geodesic_distance(map, pose.cell, w) < self.reach_eps {
                    self.advance();
                } else {
                    break;
                }
            }
            if !self.needs_replan(map, pose) {
                break;
            }
        }
        !self.is_complete()
    }
}

//! Top-down occupancy mapping by per-cell majority voting.
//!
//! Each ray of an observation votes Navigable for every cell it crosses
//! before its hit cell and Obstacle for the hit cell. A cell with no votes is
//! Unknown; otherwise the larger counter wins and ties go to Obstacle.

use crate::error::MapError;
use crate::grid::{Cell, Grid};
use crate::world::raycast::traverse;
use crate::world::Observation;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Navigable,
    Obstacle,
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Votes {
    pub nav: u32,
    pub obs: u32,
}

impl Votes {
    pub fn state(self) -> CellState {
        match (self.nav, self.obs) {
            (0, 0) => CellState::Unknown,
            (n, o) if n > o => CellState::Navigable,
            _ => CellState::Obstacle,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyMap {
    votes: Grid<Votes>,
    state: Grid<CellState>,
    navigable: usize,
    pub cell_size: f64,
}

impl OccupancyMap {
    pub fn new(rows: usize, cols: usize, cell_size: f64) -> Self {
        Self {
            votes: Grid::filled(rows, cols, Votes::default()),
            state: Grid::filled(rows, cols, CellState::Unknown),
            navigable: 0,
            cell_size,
        }
    }

    /// Map pre-sized to a scene.
    pub fn for_scene(scene: &crate::world::Scene) -> Self {
        Self::new(scene.rows(), scene.cols(), scene.cell_size)
    }

    pub fn rows(&self) -> usize {
        self.state.rows()
    }

    pub fn cols(&self) -> usize {
        self.state.cols()
    }

    pub fn state(&self, cell: Cell) -> CellState {
        self.state.get(cell).copied().unwrap_or(CellState::Unknown)
    }

    pub fn votes(&self, cell: Cell) -> Votes {
        self.votes.get(cell).copied().unwrap_or_default()
    }

    pub fn is_navigable(&self, cell: Cell) -> bool {
        self.state(cell) == CellState::Navigable
    }

    pub fn states(&self) -> &Grid<CellState> {
        &self.state
    }

    pub fn navigable_count(&self) -> usize {
        self.navigable
    }

    fn vote(&mut self, cell: Cell, navigable: bool) {
        let v = &mut self.votes[cell];
        if navigable {
            v.nav += 1;
        } else {
            v.obs += 1;
        }
        let new = v.state();
        let old = std::mem::replace(&mut self.state[cell], new);
        match (old == CellState::Navigable, new == CellState::Navigable) {
            (false, true) => self.navigable += 1,
            (true, false) => self.navigable -= 1,
            _ => {}
        }
    }

    /// Overrides the votes of `cell` so that it reads as `state`.
    pub fn set_state(&mut self, cell: Cell, state: CellState) {
        let votes = match state {
            CellState::Navigable => Votes { nav: 1, obs: 0 },
            CellState::Obstacle => Votes { nav: 0, obs: 1 },
            CellState::Unknown => Votes::default(),
        };
        self.votes[cell] = votes;
        let old = std::mem::replace(&mut self.state[cell], state);
        match (old == CellState::Navigable, state == CellState::Navigable) {
            (false, true) => self.navigable += 1,
            (true, false) => self.navigable -= 1,
            _ => {}
        }
    }

    /// Integrates one observation; returns the number of votes cast.
    pub fn update(&mut self, obs: &Observation) -> Result<usize, MapError> {
        let (rows, cols) = (self.rows(), self.cols());
        let pose_cell = obs.pose.cell;
        if !self.state.contains(pose_cell) {
            return Err(MapError::OutOfBounds {
                cell: pose_cell,
                rows,
                cols,
            });
        }
        let origin = pose_cell.center();
        let mut cast = 0;
        for i in 0..obs.rays() {
            let depth_cells = obs.depth[i] / self.cell_size;
            let truncated = obs.hits[i].truncated;
            // Re-walk the ray up to the measured depth: cells entered strictly
            // before `depth` are free space, the cell entered at `depth` is the hit.
            let limit = if truncated { depth_cells } else { depth_cells + 1e-9 };
            let mut entered_at_depth = None;
            let walk = traverse(origin, obs.ray_headings[i], limit, |c| {
                if c.row >= rows || c.col >= cols {
                    return true;
                }
                false
            });
            // `traverse` with a never-blocking predicate lists every crossed
            // cell; the last one entered at (approximately) `depth` is the hit.
            let mut passed = walk.passed;
            if let Some(out) = walk.hit {
                return Err(MapError::OutOfBounds { cell: out, rows, cols });
            }
            if !truncated {
                entered_at_depth = passed.pop();
                if passed.is_empty() {
                    // Hit cell coincides with the origin: impossible for a
                    // free pose; keep the origin as free space.
                    passed.extend(entered_at_depth.take());
                }
            }
            for c in passed {
                self.vote(c, true);
                cast += 1;
            }
            if let Some(c) = entered_at_depth {
                self.vote(c, false);
                cast += 1;
            }
        }
        Ok(cast)
    }

    /// Navigable area in square meters.
    pub fn explored_area(&self) -> f64 {
        self.navigable as f64 * self.cell_size * self.cell_size
    }

    /// ASCII dump: `.` navigable, `#` obstacle, `?` unknown, one row per line.
    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity(self.rows() * (self.cols() + 1));
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                out.push(match self.state[Cell::new(r, c)] {
                    CellState::Navigable => '.',
                    CellState::Obstacle => '#',
                    CellState::Unknown => '?',
                });
            }
            out.push('\n');
        }
        out
    }

    /// Same dump with a header line `P2-ascii <cols> <rows>`.
    pub fn to_pgm_ascii(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "P2-ascii {} {}", self.cols(), self.rows());
        out.push_str(&self.to_ascii());
        out
    }
}

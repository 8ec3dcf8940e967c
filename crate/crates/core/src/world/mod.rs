//! Procedural buildings, the agent's four actions and egocentric ray views.

mod generate;
pub mod io;
pub mod raycast;
mod render;

pub use generate::generate_scene;
pub use render::render_view;

use crate::error::WorldError;
use crate::grid::{Cell, Direction, Grid};
use crate::rng::{self, tag};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Semantic class index in `[0, classes)`.
pub type ClassId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Free,
    Wall,
}

/// Scene and rendering parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldParams {
    /// Grid height including the boundary wall.
    pub rows: usize,
    /// Grid width including the boundary wall.
    pub cols: usize,
    pub min_rooms: usize,
    pub max_rooms: usize,
    /// Minimum interior extent of a room along either axis, in cells.
    pub min_room_size: usize,
    pub classes: usize,
    /// Number of most frequent classes entering the mIoU.
    pub top_k: usize,
    pub feature_dim: usize,
    /// Seed of the global class prototypes shared by all scenes.
    pub prototype_seed: u64,
    pub prototype_scale: f64,
    /// Scale of the per-scene, per-class appearance offset.
    pub scene_sigma: f64,
    /// Scale of the per-pixel feature noise.
    pub pixel_sigma: f64,
    pub fov_deg: f64,
    pub rays: usize,
    /// Maximum sensing range in meters.
    pub max_range: f64,
    /// Edge length of a grid cell in meters.
    pub cell_size: f64,
    pub turn_angle_deg: f64,
    /// Exponent of the power-law class frequency profile.
    pub class_skew: f64,
    /// Longest run of wall faces sharing one class, in cells.
    pub max_segment_len: usize,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            rows: 24,
            cols: 24,
            min_rooms: 3,
            max_rooms: 6,
            min_room_size: 3,
            classes: 12,
            top_k: 10,
            feature_dim: 16,
            prototype_seed: 0,
            prototype_scale: 1.0,
            scene_sigma: 0.6,
            pixel_sigma: 0.8,
            fov_deg: 90.0,
            rays: 64,
            max_range: 50.0,
            cell_size: 1.0,
            turn_angle_deg: 30.0,
            class_skew: 1.0,
            max_segment_len: 3,
        }
    }
}

impl WorldParams {
    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: &str| Err(WorldError::InvalidParams(m.to_string()));
        if self.rows < 3 || self.cols < 3 {
            return bad("grid must be at least 3x3 to hold a boundary wall and one free cell");
        }
        if self.classes < self.top_k || self.top_k < 2 {
            return bad("need classes >= top_k >= 2");
        }
        if self.classes > 250 {
            return bad("at most 250 classes are supported");
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive");
        }
        if self.scene_sigma < 0.0 || self.pixel_sigma < 0.0 || self.prototype_scale <= 0.0 {
            return bad("sigma values must be >= 0 and prototype_scale > 0");
        }
        if self.rays < 8 {
            return bad("need at least 8 rays");
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 360.0) {
            return bad("fov must lie in (0, 360) degrees");
        }
        if self.cell_size <= 0.0 || self.max_range <= 0.0 {
            return bad("cell_size and max_range must be positive");
        }
        let k = 360.0 / self.turn_angle_deg;
        if self.turn_angle_deg <= 0.0 || (k - k.round()).abs() > 1e-9 {
            return bad("turn angle must divide 360 degrees");
        }
        if (90.0 / self.turn_angle_deg).fract().abs() > 1e-9 {
            return bad("turn angle must divide 90 degrees so every axis heading is reachable");
        }
        if self.min_rooms == 0 || self.min_rooms > self.max_rooms {
            return bad("need 1 <= min_rooms <= max_rooms");
        }
        if self.min_room_size == 0 || self.max_segment_len == 0 {
            return bad("min_room_size and max_segment_len must be positive");
        }
        Ok(())
    }

    pub fn headings(&self) -> usize {
        (360.0 / self.turn_angle_deg).round() as usize
    }

    /// Global per-class prototype vectors, pairwise separated by at least
    /// `prototype_scale` so the noiseless problem is linearly separable.
    pub fn class_prototypes(&self) -> Vec<Vec<f64>> {
        let mut rng = rng::seeded(&[self.prototype_seed, tag::PROTOTYPES]);
        let min_sep = self.prototype_scale;
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(self.classes);
        while out.len() < self.classes {
            let v: Vec<f64> = (0..self.feature_dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * self.prototype_scale
                })
                .collect();
            let far = out.iter().all(|p| euclid(p, &v) >= min_sep);
            if far {
                out.push(v);
            }
        }
        out
    }

    pub fn optics(&self) -> Optics {
        Optics {
            fov_deg: self.fov_deg,
            rays: self.rays,
            max_range: self.max_range,
            turn_angle_deg: self.turn_angle_deg,
            pixel_sigma: self.pixel_sigma,
        }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Camera model carried by every scene so rendering is self-contained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optics {
    pub fov_deg: f64,
    pub rays: usize,
    pub max_range: f64,
    pub turn_angle_deg: f64,
    pub pixel_sigma: f64,
}

impl Optics {
    pub fn headings(&self) -> usize {
        (360.0 / self.turn_angle_deg).round() as usize
    }

    pub fn heading_angle(&self, heading: usize) -> f64 {
        wrap_angle(heading as f64 * self.turn_angle_deg.to_radians())
    }

    /// Absolute angle of ray `i`; ray 0 is the leftmost.
    pub fn ray_angle(&self, heading: usize, i: usize) -> f64 {
        let fov = self.fov_deg.to_radians();
        let offset = fov / 2.0 - fov * (i as f64 + 0.5) / self.rays as f64;
        wrap_angle(self.heading_angle(heading) + offset)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

/// Class assignment of every wall face that borders a free cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMap {
    rows: usize,
    cols: usize,
    classes: Vec<u8>,
}

impl SurfaceMap {
    pub const NONE: u8 = u8::MAX;

    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            classes: vec![Self::NONE; rows * cols * 4],
        }
    }

    fn slot(&self, cell: Cell, face: Direction) -> usize {
        (cell.row * self.cols + cell.col) * 4 + face.index()
    }

    pub fn get(&self, cell: Cell, face: Direction) -> Option<ClassId> {
        if cell.row >= self.rows || cell.col >= self.cols {
            return None;
        }
        let v = self.classes[self.slot(cell, face)];
        (v != Self::NONE).then_some(v as ClassId)
    }

    pub fn set(&mut self, cell: Cell, face: Direction, class: ClassId) {
        let s = self.slot(cell, face);
        self.classes[s] = class as u8;
    }

    /// All assigned faces in row-major, N-E-S-W order.
    pub fn iter(&self) -> impl Iterator<Item = (Cell, Direction, ClassId)> + '_ {
        self.classes.iter().enumerate().filter_map(move |(i, &v)| {
            (v != Self::NONE).then(|| {
                let cell_idx = i / 4;
                let cell = Cell::new(cell_idx / self.cols, cell_idx % self.cols);
                (cell, Direction::from_index(i % 4).unwrap(), v as ClassId)
            })
        })
    }
}

/// A generated building. Immutable after generation.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub id: String,
    pub seed: u64,
    pub grid: Grid<CellKind>,
    /// Semantic class of every exposed wall face.
    pub surface_class: SurfaceMap,
    pub classes: usize,
    pub top_k: usize,
    /// Global class prototypes (shared across scenes).
    pub prototypes: Vec<Vec<f64>>,
    /// Scene-specific additive offset per class.
    pub scene_appearance: Vec<Vec<f64>>,
    pub cell_size: f64,
    pub optics: Optics,
}

impl Scene {
    pub fn rows(&self) -> usize {
        self.grid.rows()
    }

    pub fn cols(&self) -> usize {
        self.grid.cols()
    }

    pub fn feature_dim(&self) -> usize {
        self.prototypes.first().map_or(0, Vec::len)
    }

    pub fn headings(&self) -> usize {
        self.optics.headings()
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        matches!(self.grid.get(cell), Some(CellKind::Free))
    }

    pub fn free_cells(&self) -> Vec<Cell> {
        self.grid
            .iter()
            .filter(|(_, k)| **k == CellKind::Free)
            .map(|(c, _)| c)
            .collect()
    }

    pub fn validate_pose(&self, pose: Pose) -> Result<(), WorldError> {
        if self.is_free(pose.cell) && pose.heading < self.headings() {
            Ok(())
        } else {
            Err(WorldError::InvalidPose(pose.cell))
        }
    }

    /// Deterministic start pose shared by every agent evaluated on this scene.
    pub fn start_pose(&self) -> Pose {
        let free = self.free_cells();
        let mut rng = rng::seeded(&[self.seed, tag::START_POSE]);
        let cell = free[rng.random_range(0..free.len())];
        Pose {
            cell,
            heading: rng.random_range(0..self.headings()),
        }
    }
}

/// Agent pose: a free cell and one of `K = 360 / turn_angle` headings.
/// Heading 0 faces east; indices increase counter-clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub cell: Cell,
    pub heading: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    MoveForward,
    RotateLeft,
    RotateRight,
    Annotate,
}

impl Action {
    pub const ALL: [Action; 4] = [
        Action::MoveForward,
        Action::RotateLeft,
        Action::RotateRight,
        Action::Annotate,
    ];

    pub fn index(self) -> usize {
        match self {
            Action::MoveForward => 0,
            Action::RotateLeft => 1,
            Action::RotateRight => 2,
            Action::Annotate => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn is_motion(self) -> bool {
        self != Action::Annotate
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::MoveForward => "move_forward",
            Action::RotateLeft => "rotate_left",
            Action::RotateRight => "rotate_right",
            Action::Annotate => "annotate",
        }
    }
}

/// Axis-aligned unit step closest to the heading direction.
pub fn forward_direction(optics: &Optics, heading: usize) -> Direction {
    let a = optics.heading_angle(heading);
    let (c, s) = (a.cos(), a.sin());
    if c.abs() >= s.abs() {
        if c >= 0.0 {
            Direction::East
        } else {
            Direction::West
        }
    } else if s > 0.0 {
        Direction::North
    } else {
        Direction::South
    }
}

/// Applies one action. Moving into a wall leaves the pose unchanged.
pub fn step(scene: &Scene, pose: Pose, action: Action) -> Pose {
    let k = scene.headings();
    match action {
        Action::MoveForward => {
            let dir = forward_direction(&scene.optics, pose.heading);
            match pose.cell.step(dir) {
                Some(next) if scene.is_free(next) => Pose { cell: next, ..pose },
                _ => pose,
            }
        }
        Action::RotateLeft => Pose {
            heading: (pose.heading + 1) % k,
            ..pose
        },
        Action::RotateRight => Pose {
            heading: (pose.heading + k - 1) % k,
            ..pose
        },
        Action::Annotate => pose,
    }
}

/// Where one ray of a view ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    /// Wall cell that stopped the ray (for truncated rays, the wall the ray
    /// would have reached).
    pub cell: Cell,
    pub face: Direction,
    /// Hit point in cell units.
    pub point: (f64, f64),
    /// True when the wall lies beyond `max_range` and depth was clamped.
    pub truncated: bool,
}

/// Egocentric view: one row of features per ray plus depth and labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub pose: Pose,
    /// `rays x feature_dim`, row-major.
    pub image: Vec<f64>,
    pub feature_dim: usize,
    /// Meters along each ray.
    pub depth: Vec<f64>,
    pub gt_mask: Vec<ClassId>,
    /// Absolute ray angles in radians.
    pub ray_headings: Vec<f64>,
    pub hits: Vec<RayHit>,
}

impl Observation {
    pub fn rays(&self) -> usize {
        self.depth.len()
    }

    pub fn feature(&self, ray: usize) -> &[f64] {
        &self.image[ray * self.feature_dim..(ray + 1) * self.feature_dim]
    }
}

/// `n` poses drawn uniformly over free cells and headings, rendered.
/// The same `(scene, seed)` always yields the same set.
pub fn sample_reference_views(scene: &Scene, n: usize, seed: u64) -> Vec<Observation> {
    sample_poses(scene, n, seed)
        .into_iter()
        .map(|p| render_view(scene, p))
        .collect()
}

pub fn sample_poses(scene: &Scene, n: usize, seed: u64) -> Vec<Pose> {
    let free = scene.free_cells();
    let k = scene.headings();
    let mut rng = rng::seeded(&[scene.seed, seed, tag::REFERENCE_VIEWS]);
    (0..n)
        .map(|_| Pose {
            cell: free[rng.random_range(0..free.len())],
            heading: rng.random_range(0..k),
        })
        .collect()
}

/// Free area of the scene in square meters.
pub fn total_navigable_area(scene: &Scene) -> f64 {
    scene.free_cells().len() as f64 * scene.cell_size * scene.cell_size
}

//! Grid DDA ray traversal shared by the renderer and the mapper.
//!
//! Coordinates are continuous cell units: `x` grows with the column index,
//! `y` with the row index. Angles are measured counter-clockwise from east,
//! so a ray at angle `a` travels along `(cos a, -sin a)`.

use crate::grid::{Cell, Direction};

/// Result of casting one ray until it enters a blocking cell or exceeds its range.
#[derive(Clone, Debug, PartialEq)]
pub struct Traversal {
    /// Cells crossed before the hit cell, starting with the origin cell.
    pub passed: Vec<Cell>,
    /// First blocking cell, `None` when the range ran out first.
    pub hit: Option<Cell>,
    /// Side of the hit cell the ray entered through, named by the direction
    /// pointing from the hit cell back towards the ray.
    pub face: Option<Direction>,
    /// Distance travelled in cell units (clamped to the range when nothing was hit).
    pub distance: f64,
}

pub fn direction_vector(angle: f64) -> (f64, f64) {
    (angle.cos(), -angle.sin())
}

/// Walks the grid from `origin` along `angle`.
///
/// `blocked(cell)` decides which cells stop the ray. The closure must also
/// report out-of-grid cells as blocked; the walk itself only guards against
/// negative coordinates.
pub fn traverse(
    origin: (f64, f64),
    angle: f64,
    max_distance: f64,
    mut blocked: impl FnMut(Cell) -> bool,
) -> Traversal {
    let (dx, dy) = direction_vector(angle);
    let (x0, y0) = origin;
    let mut cx = x0.floor() as i64;
    let mut cy = y0.floor() as i64;
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let t_delta_x = if dx.abs() < 1e-12 { f64::INFINITY } else { 1.0 / dx.abs() };
    let t_delta_y = if dy.abs() < 1e-12 { f64::INFINITY } else { 1.0 / dy.abs() };
    let mut t_max_x = if dx.abs() < 1e-12 {
        f64::INFINITY
    } else if dx > 0.0 {
        (cx as f64 + 1.0 - x0) / dx
    } else {
        (x0 - cx as f64) / -dx
    };
    let mut t_max_y = if dy.abs() < 1e-12 {
        f64::INFINITY
    } else if dy > 0.0 {
        (cy as f64 + 1.0 - y0) / dy
    } else {
        (y0 - cy as f64) / -dy
    };

    let mut passed = vec![Cell::new(cy.max(0) as usize, cx.max(0) as usize)];
    loop {
        let (t, face) = if t_max_x < t_max_y {
            cx += step_x;
            let t = t_max_x;
            t_max_x += t_delta_x;
            (t, if step_x > 0 { Direction::West } else { Direction::East })
        } else {
            cy += step_y;
            let t = t_max_y;
            t_max_y += t_delta_y;
            (t, if step_y > 0 { Direction::North } else { Direction::South })
        };
        if t > max_distance {
            return Traversal {
                passed,
                hit: None,
                face: None,
                distance: max_distance,
            };
        }
        if cx < 0 || cy < 0 {
            // Left the non-negative quadrant: behaves like an outer wall.
            return Traversal {
                passed,
                hit: None,
                face: None,
                distance: t,
            };
        }
        let cell = Cell::new(cy as usize, cx as usize);
        if blocked(cell) {
            return Traversal {
                passed,
                hit: Some(cell),
                face: Some(face),
                distance: t,
            };
        }
        passed.push(cell);
    }
}

use super::{CellKind, Scene, SurfaceMap, WorldParams};
use crate::error::WorldError;
use crate::grid::{Cell, Direction, Grid};
use crate::rng::{self, tag};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use std::collections::VecDeque;

const MAX_ATTEMPTS: usize = 64;

/// Axis-aligned rectangle of free cells, inclusive bounds.
#[derive(Clone, Copy, Debug)]
struct Rect {
    r0: usize,
    c0: usize,
    r1: usize,
    c1: usize,
}

impl Rect {
    fn height(&self) -> usize {
        self.r1 - self.r0 + 1
    }

    fn width(&self) -> usize {
        self.c1 - self.c0 + 1
    }

    fn area(&self) -> usize {
        self.height() * self.width()
    }
}

/// Builds a multi-room floorplan by recursive binary partitioning with one
/// door per partition wall, then assigns classes to wall-face segments.
pub fn generate_scene(params: &WorldParams, seed: u64) -> Result<Scene, WorldError> {
    params.validate()?;
    let mut last_reason = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = rng::seeded(&[seed, tag::LAYOUT, attempt as u64]);
        let grid = layout(params, &mut rng);
        let free = grid.values().iter().filter(|k| **k == CellKind::Free).count();
        if free == 0 {
            last_reason = "no free interior cells".into();
            continue;
        }
        if connected_free(&grid) != free {
            last_reason = "free region not connected".into();
            continue;
        }
        let surface_class = assign_surfaces(params, &grid, &mut rng);
        let prototypes = params.class_prototypes();
        let mut app_rng = rng::seeded(&[seed, tag::APPEARANCE]);
        let scene_appearance = (0..params.classes)
            .map(|_| {
                (0..params.feature_dim)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut app_rng);
                        z * params.scene_sigma
                    })
                    .collect()
            })
            .collect();
        return Ok(Scene {
            id: format!("scene-{seed:06}"),
            seed,
            grid,
            surface_class,
            classes: params.classes,
            top_k: params.top_k,
            prototypes,
            scene_appearance,
            cell_size: params.cell_size,
            optics: params.optics(),
        });
    }
    Err(WorldError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
        reason: last_reason,
    })
}

fn layout(params: &WorldParams, rng: &mut crate::rng::Rng) -> Grid<CellKind> {
    let (rows, cols) = (params.rows, params.cols);
    let mut grid = Grid::filled(rows, cols, CellKind::Wall);
    let interior = Rect {
        r0: 1,
        c0: 1,
        r1: rows - 2,
        c1: cols - 2,
    };
    for cell in grid.cells().collect::<Vec<_>>() {
        if cell.row >= interior.r0 && cell.row <= interior.r1 && cell.col >= interior.c0 && cell.col <= interior.c1 {
            grid[cell] = CellKind::Free;
        }
    }

    let target = rng.random_range(params.min_rooms..=params.max_rooms);
    let min = params.min_room_size;
    let mut rects = vec![interior];
    let mut doors: Vec<Cell> = Vec::new();

    while rects.len() < target {
        // Largest rectangle that still admits a split.
        let mut order: Vec<usize> = (0..rects.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(rects[i].area()));
        let Some((idx, vertical, pos)) = order.into_iter().find_map(|i| {
            let r = rects[i];
            let can_v = r.width() > 2 * min;
            let can_h = r.height() > 2 * min;
            let vertical = match (can_v, can_h) {
                (false, false) => return None,
                (true, false) => true,
                (false, true) => false,
                (true, true) => {
                    if r.width() == r.height() {
                        rng.random_bool(0.5)
                    } else {
                        r.width() > r.height()
                    }
                }
            };
            let (lo, hi) = if vertical {
                (r.c0 + min, r.c1 - min)
            } else {
                (r.r0 + min, r.r1 - min)
            };
            // Skip split lines that would wall off an existing door.
            let candidates: Vec<usize> = (lo..=hi)
                .filter(|&p| {
                    let ends = if vertical {
                        [Cell::new(r.r0 - 1, p), Cell::new(r.r1 + 1, p)]
                    } else {
                        [Cell::new(p, r.c0 - 1), Cell::new(p, r.c1 + 1)]
                    };
                    !ends.iter().any(|e| doors.contains(e))
                })
                .collect();
            if candidates.is_empty() {
                None
            } else {
                Some((i, vertical, candidates[rng.random_range(0..candidates.len())]))
            }
        }) else {
            break;
        };

        let r = rects.swap_remove(idx);
        if vertical {
            for row in r.r0..=r.r1 {
                grid[Cell::new(row, pos)] = CellKind::Wall;
            }
            let door = Cell::new(rng.random_range(r.r0..=r.r1), pos);
            grid[door] = CellKind::Free;
            doors.push(door);
            rects.push(Rect { c1: pos - 1, ..r });
            rects.push(Rect { c0: pos + 1, ..r });
        } else {
            for col in r.c0..=r.c1 {
                grid[Cell::new(pos, col)] = CellKind::Wall;
            }
            let door = Cell::new(pos, rng.random_range(r.c0..=r.c1));
            grid[door] = CellKind::Free;
            doors.push(door);
            rects.push(Rect { r1: pos - 1, ..r });
            rects.push(Rect { r0: pos + 1, ..r });
        }
    }
    grid
}

/// Size of the free component containing the first free cell.
fn connected_free(grid: &Grid<CellKind>) -> usize {
    let Some((start, _)) = grid.iter().find(|(_, k)| **k == CellKind::Free) else {
        return 0;
    };
    let mut seen = Grid::filled(grid.rows(), grid.cols(), false);
    let mut q = VecDeque::from([start]);
    seen[start] = true;
    let mut n = 0;
    while let Some(c) = q.pop_front() {
        n += 1;
        for (_, nb) in grid.neighbors(c) {
            if grid[nb] == CellKind::Free && !seen[nb] {
                seen[nb] = true;
                q.push_back(nb);
            }
        }
    }
    n
}

/// Splits each straight run of exposed wall faces into short segments and
/// draws one class per segment from a skewed, scene-jittered distribution.
fn assign_surfaces(params: &WorldParams, grid: &Grid<CellKind>, rng: &mut crate::rng::Rng) -> SurfaceMap {
    let weights: Vec<f64> = (0..params.classes)
        .map(|c| {
            let jitter: f64 = StandardNormal.sample(rng);
            (c as f64 + 1.0).powf(-params.class_skew) * (0.3 * jitter).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let draw_class = |rng: &mut crate::rng::Rng| {
        let mut u = rng.random::<f64>() * total;
        for (c, w) in weights.iter().enumerate() {
            if u < *w {
                return c;
            }
            u -= w;
        }
        params.classes - 1
    };

    let exposed = |cell: Cell, d: Direction| -> bool {
        grid[cell] == CellKind::Wall && cell.step(d).is_some_and(|n| grid.get(n) == Some(&CellKind::Free))
    };

    let mut map = SurfaceMap::new(grid.rows(), grid.cols());
    for face in Direction::ALL {
        // Faces looking north/south run along rows; east/west along columns.
        let horizontal = matches!(face, Direction::North | Direction::South);
        let (outer, inner) = if horizontal {
            (grid.rows(), grid.cols())
        } else {
            (grid.cols(), grid.rows())
        };
        for o in 0..outer {
            let mut i = 0;
            while i < inner {
                let cell_at = |k: usize| if horizontal { Cell::new(o, k) } else { Cell::new(k, o) };
                if !exposed(cell_at(i), face) {
                    i += 1;
                    continue;
                }
                let mut run_end = i;
                while run_end + 1 < inner && exposed(cell_at(run_end + 1), face) {
                    run_end += 1;
                }
                let mut k = i;
                while k <= run_end {
                    let len = rng.random_range(1..=params.max_segment_len);
                    let class = draw_class(rng);
                    for j in k..(k + len).min(run_end + 1) {
                        map.set(cell_at(j), face, class);
                    }
                    k += len;
                }
                i = run_end + 1;
            }
        }
    }
    map
}

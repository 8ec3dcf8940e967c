use super::raycast::{direction_vector, traverse};
use super::{CellKind, Observation, Pose, RayHit, Scene};
use crate::rng::{self, tag};
use rand_distr::{Distribution, StandardNormal};

/// Casts `rays` rays across the field of view from the centre of the pose cell.
///
/// Pixel features are `prototype[class] + scene_appearance[class] + noise`,
/// where the noise stream is seeded by the scene seed and the pose, so the
/// same viewpoint always renders identically.
pub fn render_view(scene: &Scene, pose: Pose) -> Observation {
    let optics = &scene.optics;
    let w = optics.rays;
    let d = scene.feature_dim();
    let origin = pose.cell.center();
    let max_cells = optics.max_range / scene.cell_size;
    let blocked = |c: crate::grid::Cell| !matches!(scene.grid.get(c), Some(CellKind::Free));

    let mut noise = rng::seeded(&[
        scene.seed,
        tag::PIXEL_NOISE,
        pose.cell.row as u64,
        pose.cell.col as u64,
        pose.heading as u64,
    ]);

    let mut image = Vec::with_capacity(w * d);
    let mut depth = Vec::with_capacity(w);
    let mut gt_mask = Vec::with_capacity(w);
    let mut ray_headings = Vec::with_capacity(w);
    let mut hits = Vec::with_capacity(w);

    for i in 0..w {
        let angle = optics.ray_angle(pose.heading, i);
        // The full (untruncated) cast tells which surface lies along the ray.
        let full = traverse(origin, angle, f64::INFINITY, blocked);
        let cell = full.hit.expect("boundary walls stop every ray");
        let face = full.face.expect("hit implies face");
        let truncated = full.distance > max_cells;
        let dist_cells = full.distance.min(max_cells);
        let (dx, dy) = direction_vector(angle);
        let point = (origin.0 + dx * full.distance, origin.1 + dy * full.distance);
        let class = scene
            .surface_class
            .get(cell, face)
            .expect("every exposed face carries a class");

        for k in 0..d {
            let z: f64 = StandardNormal.sample(&mut noise);
            image.push(scene.prototypes[class][k] + scene.scene_appearance[class][k] + optics.pixel_sigma * z);
        }
        depth.push(dist_cells * scene.cell_size);
        gt_mask.push(class);
        ray_headings.push(angle);
        hits.push(RayHit {
            cell,
            face,
            point,
            truncated,
        });
    }

    Observation {
        pose,
        image,
        feature_dim: d,
        depth,
        gt_mask,
        ray_headings,
        hits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Cell, Direction};
    use crate::world::{generate_scene, WorldParams};

    /// Slab-method intersection against every wall cell; independent of DDA.
    fn brute_force_depth(scene: &Scene, origin: (f64, f64), angle: f64) -> f64 {
        let (dx, dy) = direction_vector(angle);
        let mut best = f64::INFINITY;
        for (cell, kind) in scene.grid.iter() {
            if *kind != CellKind::Wall {
                continue;
            }
            let (x0, x1) = (cell.col as f64, cell.col as f64 + 1.0);
            let (y0, y1) = (cell.row as f64, cell.row as f64 + 1.0);
            let (mut tmin, mut tmax) = (f64::NEG_INFINITY, f64::INFINITY);
            for (o, dir, lo, hi) in [(origin.0, dx, x0, x1), (origin.1, dy, y0, y1)] {
                if dir.abs() < 1e-12 {
                    if o < lo || o > hi {
                        tmin = f64::INFINITY;
                    }
                } else {
                    let a = (lo - o) / dir;
                    let b = (hi - o) / dir;
                    tmin = tmin.max(a.min(b));
                    tmax = tmax.min(a.max(b));
                }
            }
            if tmin <= tmax && tmin >= 0.0 {
                best = best.min(tmin);
            }
        }
        best
    }

    #[test]
    fn depth_matches_brute_force_intersection() {
        let params = WorldParams::default();
        for seed in 0..6 {
            let scene = generate_scene(&params, seed).unwrap();
            let poses = crate::world::sample_poses(&scene, 20, 3);
            for pose in poses {
                let obs = render_view(&scene, pose);
                for i in 0..obs.rays() {
                    let want = brute_force_depth(&scene, pose.cell.center(), obs.ray_headings[i]) * scene.cell_size;
                    assert!((obs.depth[i] - want).abs() < 1e-9, "ray {i}: {} vs {want}", obs.depth[i]);
                }
            }
        }
    }

    fn single_class_scene(class: usize) -> Scene {
        let params = WorldParams {
            rows: 9,
            cols: 9,
            min_rooms: 1,
            max_rooms: 1,
            scene_sigma: 0.0,
            pixel_sigma: 0.0,
            ..WorldParams::default()
        };
        let mut scene = generate_scene(&params, 0).unwrap();
        let faces: Vec<_> = scene.surface_class.iter().collect();
        for (c, f, _) in faces {
            scene.surface_class.set(c, f, class);
        }
        scene
    }

    #[test]
    fn facing_adjacent_wall_sees_one_surface() {
        let scene = single_class_scene(3);
        // Cell (4, 7) is next to the east boundary wall; heading 0 faces it.
        let pose = Pose {
            cell: Cell::new(4, 7),
            heading: 0,
        };
        let obs = render_view(&scene, pose);
        assert!(obs.gt_mask.iter().all(|&c| c == 3));
        // Face is half a cell away; off-axis rays travel up to 0.5 / cos(45 deg).
        for (i, d) in obs.depth.iter().enumerate() {
            assert!(*d >= 0.5 * scene.cell_size - 1e-12 && *d <= scene.cell_size, "ray {i} depth {d}");
            assert_eq!(obs.hits[i].cell.col, 8);
            assert_eq!(obs.hits[i].face, Direction::West);
        }
    }

    #[test]
    fn noiseless_pixels_equal_prototypes() {
        let params = WorldParams {
            scene_sigma: 0.0,
            pixel_sigma: 0.0,
            ..WorldParams::default()
        };
        let scene = generate_scene(&params, 11).unwrap();
        let obs = render_view(&scene, scene.start_pose());
        for i in 0..obs.rays() {
            assert_eq!(obs.feature(i), scene.prototypes[obs.gt_mask[i]].as_slice());
        }
    }

    #[test]
    fn rerendering_is_deterministic() {
        let scene = generate_scene(&WorldParams::default(), 2).unwrap();
        let pose = scene.start_pose();
        assert_eq!(render_view(&scene, pose), render_view(&scene, pose));
    }

    #[test]
    fn shrinking_range_never_increases_depth() {
        let mut scene = generate_scene(&WorldParams::default(), 8).unwrap();
        let poses = crate::world::sample_poses(&scene, 10, 0);
        let full: Vec<_> = poses.iter().map(|p| render_view(&scene, *p)).collect();
        scene.optics.max_range = 3.0;
        for (p, f) in poses.iter().zip(&full) {
            let short = render_view(&scene, *p);
            for i in 0..short.rays() {
                assert!(short.depth[i] <= f.depth[i] + 1e-12);
                assert!(short.depth[i] <= 3.0 + 1e-12 && short.depth[i] > 0.0);
                assert_eq!(short.hits[i].truncated, f.depth[i] > 3.0);
            }
        }
    }
}

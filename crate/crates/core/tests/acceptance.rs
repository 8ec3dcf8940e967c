//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use embal::agents::{AccuracyOracle, AgentPolicy, RandomAgent, UniformAgent};
use embal::grid::{Cell, Grid};
use embal::harness::{
    fresh_model, metric_da_per_annot, metric_da_per_step, metric_miou_window, pretrain_baseline, run_episode,
    run_sequence, EnvConfig, EpisodeLog, Ordering, PretrainConfig, Setup, Termination,
};
use embal::mapper::{CellState, OccupancyMap};
use embal::perception::{init_model, miou_from_labels, refine, LabeledView, SegModel, SgdConfig, TrainSet};
use embal::planner::{frontier_points, geodesic_distance, shortest_path};
use embal::rl::net::{d_log_prob, NUM_ACTIONS};
use embal::rl::{
    pointgoal_success_rate, policy_shape, pretrain_pointgoal, train_lifelong, NetShape, PolicyCheckpoint, PolicyInput, PolicyNet,
    RlConfig,
};
use embal::rng::seeded;
use embal::world::{generate_scene, render_view, CellKind, ClassId, Pose, Scene, WorldParams};
use rand::Rng as _;
use std::collections::VecDeque;
use std::time::Instant;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn scenes(params: &WorldParams, seeds: impl IntoIterator<Item = u64>) -> Vec<Scene> {
    seeds.into_iter().map(|s| generate_scene(params, s).unwrap()).collect()
}

// ---------------------------------------------------------------- 1

fn random_map(rng: &mut embal::rng::Rng, rows: usize, cols: usize) -> OccupancyMap {
    let mut map = OccupancyMap::new(rows, cols, 1.0);
    for r in 0..rows {
        for c in 0..cols {
            let u: f64 = rng.random();
            let s = if u < 0.65 {
                CellState::Navigable
            } else if u < 0.85 {
                CellState::Obstacle
            } else {
                CellState::Unknown
            };
            map.set_state(Cell::new(r, c), s);
        }
    }
    map
}

fn bfs(map: &OccupancyMap, from: Cell, to: Cell) -> Option<usize> {
    let mut dist = Grid::filled(map.rows(), map.cols(), usize::MAX);
    let mut q = VecDeque::from([from]);
    dist[from] = 0;
    while let Some(c) = q.pop_front() {
        if c == to {
            return Some(dist[c]);
        }
        let (r, k) = (c.row as i64, c.col as i64);
        for (dr, dk) in [(-1, 0), (0, 1), (1, 0), (0, -1)] {
            let (nr, nk) = (r + dr, k + dk);
            if nr < 0 || nk < 0 || nr as usize >= map.rows() || nk as usize >= map.cols() {
                continue;
            }
            let n = Cell::new(nr as usize, nk as usize);
            if map.state(n) == CellState::Navigable && dist[n] == usize::MAX {
                dist[n] = dist[c] + 1;
                q.push_back(n);
            }
        }
    }
    None
}

fn brute_frontiers(map: &OccupancyMap) -> Vec<Cell> {
    let mut out = Vec::new();
    for r in 0..map.rows() {
        for c in 0..map.cols() {
            if map.state(Cell::new(r, c)) != CellState::Navigable {
                continue;
            }
            let unknown = |rr: i64, cc: i64| {
                rr >= 0
                    && cc >= 0
                    && (rr as usize) < map.rows()
                    && (cc as usize) < map.cols()
                    && map.state(Cell::new(rr as usize, cc as usize)) == CellState::Unknown
            };
            let (ri, ci) = (r as i64, c as i64);
            if unknown(ri - 1, ci) || unknown(ri, ci + 1) || unknown(ri + 1, ci) || unknown(ri, ci - 1) {
                out.push(Cell::new(r, c));
            }
        }
    }
    out
}

fn miou_by_hand(pred: &[ClassId], truth: &[ClassId], subset: &[ClassId], classes: usize) -> f64 {
    let mut conf = vec![vec![0usize; classes]; classes];
    for (p, t) in pred.iter().zip(truth) {
        conf[*t as usize][*p as usize] += 1;
    }
    let mut ious = Vec::new();
    for &k in subset {
        let k = k as usize;
        let tp = conf[k][k];
        let fn_: usize = conf[k].iter().sum::<usize>() - tp;
        let fp: usize = (0..classes).map(|t| conf[t][k]).sum::<usize>() - tp;
        if tp + fn_ + fp > 0 {
            ious.push(tp as f64 / (tp + fn_ + fp) as f64);
        }
    }
    mean(&ious)
}

fn criterion_1() -> Verdict {
    let t = Instant::now();
    let mut rng = seeded(&[1, 1]);
    let mut mismatches = 0usize;
    let mut pairs = 0usize;
    // Shortest paths against BFS.
    while pairs < 300 {
        let (rows, cols) = (rng.random_range(4..20), rng.random_range(4..20));
        let map = random_map(&mut rng, rows, cols);
        let free: Vec<Cell> = (0..rows * cols)
            .map(|i| Cell::new(i / cols, i % cols))
            .filter(|c| map.state(*c) == CellState::Navigable)
            .collect();
        if free.len() < 2 {
            continue;
        }
        for _ in 0..5 {
            let a = free[rng.random_range(0..free.len())];
            let b = free[rng.random_range(0..free.len())];
            pairs += 1;
            let want = bfs(&map, a, b);
            let got = shortest_path(&map, a, b).ok().map(|p| p.len() - 1);
            let geo = geodesic_distance(&map, a, b);
            let geo = geo.is_finite().then_some(geo as usize);
            if want != got || want != geo {
                mismatches += 1;
            }
        }
        if frontier_points(&map) != brute_frontiers(&map) {
            mismatches += 1;
        }
    }
    // Mapper against the scene grid after exploration.
    let p = WorldParams::default();
    let mut cells_checked = 0usize;
    for scene in scenes(&p, 100..110) {
        let mut map = OccupancyMap::for_scene(&scene);
        let free = scene.free_cells();
        for _ in 0..60 {
            let cell = free[rng.random_range(0..free.len())];
            let heading = rng.random_range(0..scene.headings());
            map.update(&render_view(&scene, Pose { cell, heading })).unwrap();
        }
        for (cell, kind) in scene.grid.iter() {
            let ok = match map.state(cell) {
                CellState::Unknown => true,
                CellState::Navigable => *kind == CellKind::Free,
                CellState::Obstacle => *kind == CellKind::Wall,
            };
            cells_checked += (map.state(cell) != CellState::Unknown) as usize;
            mismatches += (!ok) as usize;
        }
    }
    // mIoU against a confusion matrix.
    for _ in 0..200 {
        let classes = rng.random_range(2..8);
        let n = rng.random_range(1..60);
        let pred: Vec<ClassId> = (0..n).map(|_| rng.random_range(0..classes) as ClassId).collect();
        let truth: Vec<ClassId> = (0..n).map(|_| rng.random_range(0..classes) as ClassId).collect();
        let subset: Vec<ClassId> = (0..classes as ClassId).filter(|_| rng.random_bool(0.7)).collect();
        let want = miou_by_hand(&pred, &truth, &subset, classes);
        let got = miou_from_labels([(pred.as_slice(), truth.as_slice())], &subset);
        let same = (want.is_nan() && (got.is_nan() || got == 0.0)) || (want - got).abs() < 1e-12;
        mismatches += (!same) as usize;
    }
    let secs = t.elapsed().as_secs_f64();
    verdict(
        mismatches == 0 && secs < 60.0,
        format!("{pairs} path pairs, {cells_checked} mapped cells, 200 mIoU cases: {mismatches} mismatches, {secs:.1}s"),
    )
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Verdict {
    let mut rng = seeded(&[2, 2]);
    let h = 1e-6;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
    let mut worst_ce: f64 = 0.0;
    for point in 0..100 {
        let (classes, dim) = (rng.random_range(2..10), rng.random_range(2..12));
        let mut m = init_model(point, classes, dim);
        m.weights.iter_mut().for_each(|w| *w = rng.random_range(-0.5..0.5));
        m.bias.iter_mut().for_each(|w| *w = rng.random_range(-0.5..0.5));
        let rays = rng.random_range(1..10);
        let batch = vec![LabeledView {
            features: (0..rays * dim).map(|_| rng.random_range(-2.0..2.0)).collect(),
            labels: (0..rays).map(|_| rng.random_range(0..classes) as ClassId).collect(),
            feature_dim: dim,
        }];
        let (_, gw, gb) = m.loss_and_grad(&batch);
        for _ in 0..5 {
            let i = rng.random_range(0..gw.len() + gb.len());
            let (mut plus, mut minus) = (m.clone(), m.clone());
            let analytic = if i < gw.len() {
                plus.weights[i] += h;
                minus.weights[i] -= h;
                gw[i]
            } else {
                plus.bias[i - gw.len()] += h;
                minus.bias[i - gw.len()] -= h;
                gb[i - gw.len()]
            };
            let num = (plus.loss_and_grad(&batch).0 - minus.loss_and_grad(&batch).0) / (2.0 * h);
            worst_ce = worst_ce.max(rel(analytic, num));
        }
    }
    let shape = NetShape {
        rays: 10,
        ray_inputs: 5,
        ray_hidden: 4,
        sectors: 3,
        visual: 6,
        nav_hidden: 5,
        core: 7,
    };
    let mut worst_pi: f64 = 0.0;
    for point in 0..100 {
        let mut net = PolicyNet::new(shape, point);
        net.params.iter_mut().for_each(|p| *p = rng.random_range(-0.8..0.8));
        let x = PolicyInput {
            rays: (0..shape.rays * shape.ray_inputs).map(|_| rng.random_range(-1.0..1.0)).collect(),
            nav: [
                rng.random_range(0.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ],
            annotate_allowed: rng.random_bool(0.8),
        };
        let hp: Vec<f64> = (0..shape.core).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = net.forward(&x, &hp).unwrap();
        let mut action = rng.random_range(0..NUM_ACTIONS);
        while f.probs[action] == 0.0 {
            action = rng.random_range(0..NUM_ACTIONS);
        }
        let mut grad = vec![0.0; net.num_params()];
        net.backward(&x, &f, &d_log_prob(&f, action), 0.0, &mut grad);
        for _ in 0..5 {
            let i = rng.random_range(0..net.num_params());
            let (mut plus, mut minus) = (net.clone(), net.clone());
            plus.params[i] += h;
            minus.params[i] -= h;
            let lp = |n: &PolicyNet| n.forward(&x, &hp).unwrap().log_prob(action);
            let num = (lp(&plus) - lp(&minus)) / (2.0 * h);
            worst_pi = worst_pi.max(rel(grad[i], num));
        }
    }
    verdict(
        worst_ce < 1e-4 && worst_pi < 1e-3,
        format!("worst relative error: cross-entropy {worst_ce:.2e} (< 1e-4), log-prob {worst_pi:.2e} (< 1e-3)"),
    )
}

// ---------------------------------------------------------------- 3

/// Independent replay of the documented stopping rule; returns the number of
/// iterations and the resulting model.
fn replay_refine(model: &SegModel, ts: &TrainSet, cfg: &SgdConfig, rng: &mut embal::rng::Rng) -> (usize, SegModel) {
    let mut m = model.clone();
    let n = ts.views.len();
    let last = ts.views.last().unwrap();
    for it in 1..=cfg.max_iterations {
        let mut batch: Vec<LabeledView> = if n < cfg.batch_size {
            ts.views.clone()
        } else {
            let mut b = vec![last.clone()];
            for _ in 1..cfg.batch_size {
                b.push(ts.views[rng.random_range(0..n)].clone());
            }
            b
        };
        for v in batch.iter_mut() {
            if rng.random_bool(cfg.flip_prob) {
                *v = v.flipped();
            }
        }
        let (mut hit, mut total) = (0, 0);
        for v in &batch {
            let pred = m.predict_features(&v.features, v.feature_dim).unwrap();
            hit += pred.ids.iter().zip(&v.labels).filter(|(a, b)| a == b).count();
            total += v.labels.len();
        }
        if hit as f64 / total as f64 >= 0.95 {
            return (it, m);
        }
        let (_, gw, gb) = m.loss_and_grad(&batch);
        m.apply_sgd(&gw, &gb, cfg);
    }
    (cfg.max_iterations, m)
}

fn check_log(log: &EpisodeLog, lambda: f64) -> usize {
    let mut bad = 0;
    let mut prev = log.initial_miou;
    let mut cps = log.checkpoints.iter();
    for st in &log.steps {
        if st.reward != 0.01 * st.r_exp + 0.99 * st.r_seg || lambda != 0.01 {
            bad += 1;
        }
        if st.annotated {
            let cp = cps.next().unwrap();
            bad += (cp.miou - prev != st.miou_delta) as usize;
            prev = cp.miou;
        } else {
            bad += (st.r_seg != 0.0 || st.miou_delta != 0.0) as usize;
        }
    }
    bad += (log.final_miou() != prev) as usize;
    bad
}

fn criterion_3() -> Verdict {
    let cfg = SgdConfig::default();
    let mut refine_bad = 0usize;
    let mut stops = [0usize; 2];
    let p = WorldParams::default();
    for (k, scene) in scenes(&p, 200..206).iter().enumerate() {
        let mut model = init_model(k as u64, scene.classes, scene.feature_dim());
        let mut ts = TrainSet::default();
        let poses = embal::world::sample_poses(scene, 8, k as u64);
        for (j, pose) in poses.iter().enumerate() {
            let view = LabeledView::from_observation(&render_view(scene, *pose));
            let before = model.clone();
            let mut with_view = ts.clone();
            with_view.push(view.clone());
            let seed = [k as u64, j as u64, 3];
            let report = refine(&mut model, &mut ts, view, &cfg, &mut seeded(&seed)).unwrap();
            let (iters, replayed) = replay_refine(&before, &with_view, &cfg, &mut seeded(&seed));
            let rule = if report.reached_target {
                report.final_batch_accuracy >= 0.95 && report.steps + 1 == report.iterations
            } else {
                report.iterations == 1000 && report.steps == 1000
            };
            stops[report.reached_target as usize] += 1;
            let same = iters == report.iterations && replayed.weights == model.weights && replayed.bias == model.bias;
            refine_bad += (!rule || !same || report.iterations > 1000) as usize;
        }
    }
    // An unreachable target runs exactly to the cap.
    let contradictory = LabeledView {
        features: vec![1.0; 8],
        labels: vec![0, 1, 2, 3],
        feature_dim: 2,
    };
    let mut m = init_model(0, 4, 2);
    let r = refine(&mut m, &mut TrainSet::default(), contradictory, &cfg, &mut seeded(&[3])).unwrap();
    refine_bad += (r.iterations != 1000 || r.reached_target) as usize;

    let env = EnvConfig::default();
    let mut log_bad = 0usize;
    let mut steps = 0usize;
    let small = WorldParams {
        rows: 16,
        cols: 16,
        ..WorldParams::default()
    };
    let sc = scenes(&small, 210..213);
    let mut agents: Vec<Box<dyn AgentPolicy>> = vec![
        Box::new(AccuracyOracle::default()),
        Box::new(UniformAgent { period: 10 }),
        Box::new(RandomAgent::new(0.1)),
    ];
    for a in agents.iter_mut() {
        for log in run_sequence(&sc, a.as_mut(), Setup::Lifelong, &env, 3).unwrap() {
            steps += log.steps.len();
            log_bad += check_log(&log, env.reward.lambda);
        }
    }
    verdict(
        refine_bad == 0 && log_bad == 0,
        format!(
            "refine: {} stops at target, {} at cap, {refine_bad} violations; {steps} logged steps: {log_bad} reward/telescoping violations",
            stops[1], stops[0]
        ),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Verdict {
    let env = EnvConfig::default();
    let mut rng = seeded(&[4, 4]);
    let mut capped = 0usize;
    let mut differing = 0usize;
    let mut max_steps = 0usize;
    for i in 0..20u64 {
        let side = rng.random_range(16..=40);
        let params = WorldParams {
            rows: side,
            cols: rng.random_range(16..=40),
            max_rooms: 8,
            ..WorldParams::default()
        };
        let scene = generate_scene(&params, 400 + i).unwrap();
        let mut agents: Vec<Box<dyn AgentPolicy>> = vec![
            Box::new(AccuracyOracle::default()),
            Box::new(UniformAgent { period: 20 }),
            Box::new(RandomAgent::new(0.05)),
        ];
        let mut rates = Vec::new();
        for a in agents.iter_mut() {
            let (log, _, _) = run_episode(&scene, a.as_mut(), fresh_model(i, &scene), TrainSet::default(), &env, i).unwrap();
            capped += (log.termination != Termination::Explored || log.steps.len() > 2000) as usize;
            max_steps = max_steps.max(log.steps.len());
            rates.push(metric_da_per_step(&log));
        }
        differing += (rates[0] != rates[1] || rates[0] != rates[2]) as usize;
    }
    verdict(
        capped == 0 && differing == 0,
        format!("20 scenes up to 40x40: {capped} episodes not ended by exhaustion (longest {max_steps} steps), {differing} scenes with differing dA/step"),
    )
}

// ---------------------------------------------------------------- 5

struct SetupStats {
    miou_1_50: f64,
    da_per_annot: f64,
    annotations: f64,
}

fn stats(logs: &[EpisodeLog]) -> SetupStats {
    SetupStats {
        miou_1_50: mean(&logs.iter().filter_map(|l| metric_miou_window(l, 1, 50)).collect::<Vec<_>>()),
        da_per_annot: mean(&logs.iter().filter_map(metric_da_per_annot).collect::<Vec<_>>()),
        annotations: mean(&logs.iter().map(|l| l.annotations as f64).collect::<Vec<_>>()),
    }
}

fn criterion_5() -> Verdict {
    let t = Instant::now();
    let params = WorldParams::default();
    let env = EnvConfig::default();
    let seeds = 10u64;
    let mut wins = [0usize; 3];
    for seed in 0..seeds {
        let sc = scenes(&params, (0..6).map(|i| 1000 + seed * 10 + i));
        let mut agent = AccuracyOracle::default();
        let epi = stats(&run_sequence(&sc, &mut agent, Setup::Episodic, &env, seed).unwrap());
        let life = stats(&run_sequence(&sc, &mut agent, Setup::Lifelong, &env, seed).unwrap());
        wins[0] += (life.miou_1_50 > epi.miou_1_50) as usize;
        wins[1] += (life.da_per_annot > epi.da_per_annot) as usize;
        wins[2] += (life.annotations < epi.annotations) as usize;
    }
    let need = (0.9 * seeds as f64).ceil() as usize;
    let secs = t.elapsed().as_secs_f64();
    verdict(
        wins.iter().all(|w| *w >= need) && secs < 1800.0,
        format!(
            "lifelong better in mIoU(1-50) {}/{seeds}, dA/annot {}/{seeds}, fewer annotations {}/{seeds} (need {need}); {secs:.0}s",
            wins[0], wins[1], wins[2]
        ),
    )
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Verdict {
    let t = Instant::now();
    let params = WorldParams::default();
    let train = scenes(&params, 7000..7008);
    let held_out = scenes(&params, 8000..8006);
    let env = EnvConfig::default();
    let seeds = 5u64;
    let mut nav_ok = 0;
    let mut wins = [0usize; 3];
    let mut details = Vec::new();
    for seed in 0..seeds {
        let cfg = RlConfig {
            seed,
            ..RlConfig::default()
        };
        let mut net = PolicyNet::new(policy_shape(&train[0]), seed);
        pretrain_pointgoal(&mut net, &train, cfg.pretrain_steps, &cfg).unwrap();
        let pre_success = pointgoal_success_rate(&net, &held_out, 200, &cfg.point_goal, 1).unwrap();
        train_lifelong(&mut net, &train, cfg.train_steps, &cfg).unwrap();
        let checkpoint = PolicyCheckpoint::new(&net, &cfg, train[0].optics.max_range);
        let success = pointgoal_success_rate(&net, &held_out, 200, &cfg.point_goal, 1).unwrap();
        nav_ok += (success >= 0.9) as usize;

        let test = scenes(&params, (0..6).map(|i| 9000 + seed * 10 + i));
        let mut agent = checkpoint.agent().unwrap();
        let epi_logs = run_sequence(&test, &mut agent, Setup::Episodic, &env, seed).unwrap();
        let life_logs = run_sequence(&test, &mut agent, Setup::Lifelong, &env, seed).unwrap();
        let mut random = Vec::new();
        for (scene, log) in test.iter().zip(&epi_logs) {
            let n = log.annotations;
            let mut ra = RandomAgent::with_budget(n as f64 / log.steps.len().max(1) as f64, n);
            let (r, _, _) = run_episode(scene, &mut ra, fresh_model(seed, scene), TrainSet::default(), &env, seed).unwrap();
            random.push(r.final_miou());
        }
        let rl_final = mean(&epi_logs.iter().map(|l| l.final_miou()).collect::<Vec<_>>());
        let rnd_final = mean(&random);
        let (epi, life) = (stats(&epi_logs), stats(&life_logs));
        wins[0] += (rl_final >= rnd_final) as usize;
        wins[1] += (life.miou_1_50 > epi.miou_1_50) as usize;
        wins[2] += (life.annotations < epi.annotations) as usize;
        details.push(format!(
            "seed {seed}: point-goal {pre_success:.3} after pretraining, {success:.3} final; final mIoU {rl_final:.3} vs random {rnd_final:.3}, mIoU(1-50) {:.3}/{:.3}, annotations {:.2}/{:.2}",
            epi.miou_1_50, life.miou_1_50, epi.annotations, life.annotations
        ));
    }
    for d in &details {
        println!("    {d}");
    }
    let need = (0.7 * seeds as f64).ceil() as usize;
    let pass = nav_ok == seeds as usize && wins[0] >= need && wins[1] >= need && wins[2] >= need;
    verdict(
        pass,
        format!(
            "point-goal >= 0.9 on {nav_ok}/{seeds}; >= random at equal budget {}/{seeds}; lifelong mIoU(1-50) gain {}/{seeds}; fewer annotations {}/{seeds} (need {need}); {:.0}s",
            wins[0],
            wins[1],
            wins[2],
            t.elapsed().as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Verdict {
    let params = WorldParams {
        scene_sigma: 2.0,
        ..WorldParams::default()
    };
    let train = scenes(&params, 5000..5012);
    let test = scenes(&params, 6000..6006);
    let pre = pretrain_baseline(&train, 200, &test, &PretrainConfig::default(), 0);
    let env = EnvConfig::default();
    let mut curves = Vec::new();
    for scene in &test {
        let mut agent = AccuracyOracle::default();
        let (log, _, _) = run_episode(scene, &mut agent, fresh_model(0, scene), TrainSet::default(), &env, 0).unwrap();
        let c: Vec<f64> = log.annotation_checkpoints().iter().map(|c| c.miou).collect();
        curves.push((log.initial_miou, c));
    }
    let at = |k: usize| {
        mean(
            &curves
                .iter()
                .map(|(init, c)| if c.is_empty() { *init } else { c[(k - 1).min(c.len() - 1)] })
                .collect::<Vec<_>>(),
        )
    };
    let first = (1..=30).find(|&k| at(k) >= pre.test_miou);
    let best = (1..=30).map(at).fold(f64::NEG_INFINITY, f64::max);
    verdict(
        first.is_some(),
        format!(
            "pre-trained test mIoU {:.3}; oracle mean mIoU reaches it after {} annotations (best {best:.3} within 30)",
            pre.test_miou,
            first.map_or("more than 30".into(), |k| k.to_string())
        ),
    )
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Verdict {
    let params = WorldParams::default();
    let env = EnvConfig::default();
    let sc = scenes(&params, 1500..1518);
    let mut rows = Vec::new();
    for o in 1..=3u64 {
        let ordered = Ordering::Seed(o).apply(&sc);
        let mut agent = AccuracyOracle::default();
        let logs = run_sequence(&ordered, &mut agent, Setup::Lifelong, &env, 0).unwrap();
        let m51: Vec<f64> = logs.iter().filter_map(|l| metric_miou_window(l, 51, 100)).collect();
        let s = stats(&logs);
        rows.push([s.da_per_annot, s.miou_1_50, if m51.is_empty() { f64::NAN } else { mean(&m51) }]);
    }
    let names = ["dA/annot", "mIoU(1-50)", "mIoU(51-100)"];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let v: Vec<f64> = rows.iter().map(|r| r[i]).filter(|x| x.is_finite()).collect();
        if v.len() < rows.len() {
            parts.push(format!("{name} undefined (no episode reaches that many annotations)"));
            continue;
        }
        let spread = (v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)) / mean(&v);
        pass &= spread < 0.1;
        parts.push(format!("{name} spread {:.1}%", 100.0 * spread));
    }
    verdict(pass, format!("3 orderings of 18 scenes: {} (need < 10%)", parts.join(", ")))
}

fn main() {
    // `cargo test` passes harness flags; only `--list` needs handling.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("oracle equivalences", criterion_1),
        ("numerical gradient checks", criterion_2),
        ("protocol conformance", criterion_3),
        ("exploration termination", criterion_4),
        ("lifelong trend, oracle agent", criterion_5),
        ("RL trend", criterion_6),
        ("pre-training analog", criterion_7),
        ("ordering robustness", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        failed += (!v.pass) as usize;
        println!("{} criterion {} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

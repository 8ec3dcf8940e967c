//! A short policy training run: point-goal pretraining, then lifelong
//! training, then an evaluation episode. Steps are kept small so this runs in
//! under a minute; pass larger counts for a real run.
//!
//! `cargo run --release --example train_rl_agent -- [PRETRAIN_STEPS] [TRAIN_STEPS]`

use embal::harness::{run_sequence, EnvConfig, Setup};
use embal::rl::{curve_csv, pointgoal_success_rate, train_policy, RlConfig};
use embal::world::{generate_scene, WorldParams};

fn main() -> embal::Result<()> {
    let arg = |i: usize, d: usize| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let params = WorldParams::default();
    let train: Vec<_> = (0..4).map(|i| generate_scene(&params, 7000 + i)).collect::<Result<_, _>>()?;
    let test: Vec<_> = (0..2).map(|i| generate_scene(&params, 8000 + i)).collect::<Result<_, _>>()?;
    let cfg = RlConfig {
        pretrain_steps: arg(1, 5_000),
        train_steps: arg(2, 5_000),
        ..RlConfig::default()
    };
    let trained = train_policy(&train, &cfg)?;
    print!("lifelong training curve:\n{}", curve_csv(&trained.lifelong.curve)?);
    let net = trained.checkpoint.net()?;
    println!(
        "held-out point-goal success {:.2}",
        pointgoal_success_rate(&net, &test, 50, &cfg.point_goal, 0)?
    );
    let mut agent = trained.checkpoint.agent()?;
    for log in run_sequence(&test, &mut agent, Setup::Lifelong, &EnvConfig::default(), 0)? {
        println!("{}: {} annotations, final mIoU {:.3}", log.scene_id, log.annotations, log.final_miou());
    }
    let path = std::env::temp_dir().join("embal-policy.json");
    trained.checkpoint.save(&path)?;
    println!("checkpoint {} (config {})", path.display(), &trained.checkpoint.config_hash[..12]);
    Ok(())
}

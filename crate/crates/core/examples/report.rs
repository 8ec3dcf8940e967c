//! Archiving two runs and building the report files from them.
//!
//! `cargo run --example report -- [OUT_DIR]`

use embal::agents::UniformAgent;
use embal::harness::{run_sequence, write_report, RunArchive, RunConfig, Setup};
use embal::world::{generate_scene, WorldParams};
use std::path::PathBuf;

fn main() -> embal::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("embal-report"), PathBuf::from);
    let params = WorldParams::default();
    let scenes: Vec<_> = (0..3).map(|i| generate_scene(&params, 20 + i)).collect::<Result<_, _>>()?;
    let mut runs = Vec::new();
    for setup in [Setup::Episodic, Setup::Lifelong] {
        let cfg = RunConfig {
            setup,
            ..RunConfig::default()
        };
        let logs = run_sequence(&scenes, &mut UniformAgent { period: 20 }, setup, &cfg.env, cfg.seed)?;
        let run = RunArchive::new(&format!("uniform-{setup}"), cfg, logs);
        run.save(&out.join(&run.name))?;
        runs.push(run);
    }
    for path in write_report(&runs, &out.join("report"))? {
        println!("== {}", path.display());
        let text = std::fs::read_to_string(&path)?;
        for line in text.lines().take(8) {
            println!("{line}");
        }
    }
    Ok(())
}

//! The three heuristic annotators on the same scene. Motion is shared, so
//! area per step is identical and only annotation behaviour differs.

use embal::agents::{AccuracyOracle, AgentPolicy, RandomAgent, UniformAgent};
use embal::harness::{fresh_model, metric_da_per_annot, metric_da_per_step, run_episode, EnvConfig};
use embal::perception::TrainSet;
use embal::world::{generate_scene, WorldParams};

fn main() -> embal::Result<()> {
    let scene = generate_scene(&WorldParams::default(), 5)?;
    let cfg = EnvConfig::default();
    let agents: Vec<Box<dyn AgentPolicy>> = vec![
        Box::new(AccuracyOracle::default()),
        Box::new(UniformAgent { period: 20 }),
        Box::new(RandomAgent::new(0.05)),
    ];
    println!("agent    annots  steps  final mIoU  dA/annot  dA/step");
    for mut agent in agents {
        let (log, _, _) = run_episode(&scene, agent.as_mut(), fresh_model(0, &scene), TrainSet::default(), &cfg, 0)?;
        println!(
            "{:8} {:6} {:6} {:11.3} {:9.2} {:8.3}",
            log.agent,
            log.annotations,
            log.steps.len(),
            log.final_miou(),
            metric_da_per_annot(&log).unwrap_or(f64::NAN),
            metric_da_per_step(&log).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

//! Offline pretraining on pooled views from training scenes, compared with
//! in-scene annotation by the accuracy oracle on strongly shifted scenes.

use embal::agents::AccuracyOracle;
use embal::harness::{fresh_model, pretrain_baseline, run_episode, EnvConfig, PretrainConfig};
use embal::perception::TrainSet;
use embal::world::{generate_scene, WorldParams};

fn main() -> embal::Result<()> {
    let params = WorldParams {
        scene_sigma: 2.0,
        ..WorldParams::default()
    };
    let train: Vec<_> = (0..12).map(|i| generate_scene(&params, 5000 + i)).collect::<Result<_, _>>()?;
    let test: Vec<_> = (0..3).map(|i| generate_scene(&params, 6000 + i)).collect::<Result<_, _>>()?;
    let pre = pretrain_baseline(&train, 200, &test, &PretrainConfig::default(), 0);
    println!("pretrained model, test mIoU {:.3}", pre.test_miou);
    for scene in &test {
        let (log, _, _) = run_episode(
            scene,
            &mut AccuracyOracle::default(),
            fresh_model(0, scene),
            TrainSet::default(),
            &EnvConfig::default(),
            0,
        )?;
        let curve: Vec<String> = log.annotation_checkpoints().iter().take(10).map(|c| format!("{:.2}", c.miou)).collect();
        println!("{}: oracle mIoU after 1..10 annotations: {}", scene.id, curve.join(" "));
    }
    Ok(())
}

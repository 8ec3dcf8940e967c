//! Annotating views one at a time and watching reference mIoU rise.

use embal::perception::{init_model, miou, refine, top_common_classes, LabeledView, SgdConfig, TrainSet};
use embal::rng::seeded;
use embal::world::{generate_scene, render_view, sample_poses, sample_reference_views, WorldParams};

fn main() -> embal::Result<()> {
    let scene = generate_scene(&WorldParams::default(), 11)?;
    let refs = sample_reference_views(&scene, 32, 0);
    let subset = top_common_classes(&refs, scene.top_k, scene.classes);
    let mut model = init_model(0, scene.classes, scene.feature_dim());
    let mut ts = TrainSet::default();
    let mut rng = seeded(&[1]);
    println!("0 annotations: mIoU {:.3}", miou(&model, &refs, &subset));
    for (k, pose) in sample_poses(&scene, 15, 7).into_iter().enumerate() {
        let view = LabeledView::from_observation(&render_view(&scene, pose));
        let r = refine(&mut model, &mut ts, view, &SgdConfig::default(), &mut rng)?;
        println!(
            "{:2} annotations: mIoU {:.3} ({} SGD steps, batch accuracy {:.2})",
            k + 1,
            miou(&model, &refs, &subset),
            r.steps,
            r.final_batch_accuracy
        );
    }
    let path = std::env::temp_dir().join("embal-model.json");
    model.save(&path)?;
    println!("model saved to {}", path.display());
    Ok(())
}

//! Warping an annotated view's labels into a neighbouring view.

use embal::rl::propagate_mask;
use embal::world::{generate_scene, render_view, step, Action, WorldParams};

fn main() -> embal::Result<()> {
    let scene = generate_scene(&WorldParams::default(), 8)?;
    let start = scene.start_pose();
    let annotated = render_view(&scene, start);
    let mut pose = start;
    for action in [Action::RotateLeft, Action::MoveForward, Action::RotateRight, Action::RotateRight] {
        pose = step(&scene, pose, action);
        let obs = render_view(&scene, pose);
        let mask = propagate_mask(Some(&annotated), &obs, scene.classes);
        let labelled = mask.ids.iter().filter(|&&c| (c as usize) < scene.classes).count();
        let correct = mask
            .ids
            .iter()
            .zip(&obs.gt_mask)
            .filter(|(p, t)| (**p as usize) < scene.classes && p == t)
            .count();
        println!(
            "after {:13}: {labelled:2}/{} rays receive a label, {correct} of them correct",
            action.name(),
            obs.rays()
        );
    }
    Ok(())
}

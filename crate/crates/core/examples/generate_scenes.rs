//! Generates a few scenes, saves them as JSON and prints one as ASCII.
//!
//! `cargo run --example generate_scenes -- [OUT_DIR]`

use embal::world::{generate_scene, io, CellKind, WorldParams};
use std::path::PathBuf;

fn main() -> embal::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("embal-scenes"), PathBuf::from);
    std::fs::create_dir_all(&out)?;
    let params = WorldParams::default();
    for seed in 0..4 {
        let scene = generate_scene(&params, seed)?;
        let path = out.join(format!("{}.json", scene.id));
        io::save(&scene, &path)?;
        assert_eq!(io::load(&path)?, scene);
        println!("{}: {} free cells -> {}", scene.id, scene.free_cells().len(), path.display());
    }
    let scene = io::load(&out.join("scene-000000.json"))?;
    for r in 0..scene.rows() {
        let line: String = (0..scene.cols())
            .map(|c| match scene.grid[embal::grid::Cell::new(r, c)] {
                CellKind::Free => '.',
                CellKind::Wall => '#',
            })
            .collect();
        println!("{line}");
    }
    Ok(())
}

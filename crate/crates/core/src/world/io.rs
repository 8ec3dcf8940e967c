//! Versioned JSON scene files.
//!
//! The grid is stored row-major as a run-length string of `<count><kind>`
//! tokens, `#` for wall and `.` for free, e.g. `"25#1.3#"`. Surfaces are
//! `[row, col, face, class]` quadruples with faces numbered N=0, E=1, S=2, W=3.

use super::{CellKind, Optics, Scene, SurfaceMap};
use crate::error::{Error, WorldError};
use crate::grid::{Cell, Direction, Grid};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCENE_FORMAT: &str = "embal-scene";
pub const SCENE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SceneFile {
    format: String,
    version: u32,
    id: String,
    seed: u64,
    rows: usize,
    cols: usize,
    cell_size: f64,
    classes: usize,
    top_k: usize,
    grid_rle: String,
    surfaces: Vec<[usize; 4]>,
    prototypes: Vec<Vec<f64>>,
    scene_appearance: Vec<Vec<f64>>,
    optics: Optics,
}

pub fn encode_rle(grid: &Grid<CellKind>) -> String {
    let mut out = String::new();
    let mut iter = grid.values().iter().peekable();
    while let Some(&kind) = iter.next() {
        let mut n = 1;
        while iter.peek() == Some(&&kind) {
            iter.next();
            n += 1;
        }
        out.push_str(&n.to_string());
        out.push(if kind == CellKind::Wall { '#' } else { '.' });
    }
    out
}

pub fn decode_rle(rows: usize, cols: usize, rle: &str) -> Result<Grid<CellKind>, WorldError> {
    let mut data = Vec::with_capacity(rows * cols);
    let mut num = String::new();
    for ch in rle.chars() {
        match ch {
            '0'..='9' => num.push(ch),
            '#' | '.' => {
                let n: usize = num
                    .parse()
                    .map_err(|_| WorldError::Format(format!("bad run length before '{ch}'")))?;
                num.clear();
                let kind = if ch == '#' { CellKind::Wall } else { CellKind::Free };
                data.extend(std::iter::repeat_n(kind, n));
            }
            _ => return Err(WorldError::Format(format!("unexpected character '{ch}' in grid"))),
        }
    }
    if !num.is_empty() {
        return Err(WorldError::Format("trailing run length without kind".into()));
    }
    Grid::from_vec(rows, cols, data)
        .ok_or_else(|| WorldError::Format(format!("grid has wrong cell count for {rows}x{cols}")))
}

pub fn to_json(scene: &Scene) -> Result<String, Error> {
    let file = SceneFile {
        format: SCENE_FORMAT.into(),
        version: SCENE_VERSION,
        id: scene.id.clone(),
        seed: scene.seed,
        rows: scene.rows(),
        cols: scene.cols(),
        cell_size: scene.cell_size,
        classes: scene.classes,
        top_k: scene.top_k,
        grid_rle: encode_rle(&scene.grid),
        surfaces: scene
            .surface_class
            .iter()
            .map(|(c, f, k)| [c.row, c.col, f.index(), k])
            .collect(),
        prototypes: scene.prototypes.clone(),
        scene_appearance: scene.scene_appearance.clone(),
        optics: scene.optics.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn from_json(text: &str) -> Result<Scene, Error> {
    let file: SceneFile = serde_json::from_str(text)?;
    if file.format != SCENE_FORMAT {
        return Err(WorldError::Format(format!("unknown format `{}`", file.format)).into());
    }
    if file.version != SCENE_VERSION {
        return Err(WorldError::Format(format!("unsupported version {}", file.version)).into());
    }
    let grid = decode_rle(file.rows, file.cols, &file.grid_rle)?;
    let mut surface_class = SurfaceMap::new(file.rows, file.cols);
    for [row, col, face, class] in file.surfaces {
        let face = Direction::from_index(face).ok_or_else(|| WorldError::Format(format!("bad face index {face}")))?;
        if class >= file.classes || row >= file.rows || col >= file.cols {
            return Err(WorldError::Format(format!("surface ({row}, {col}) out of range")).into());
        }
        surface_class.set(Cell::new(row, col), face, class);
    }
    if file.prototypes.len() != file.classes || file.scene_appearance.len() != file.classes {
        return Err(WorldError::Format("prototype table size differs from class count".into()).into());
    }
    Ok(Scene {
        id: file.id,
        seed: file.seed,
        grid,
        surface_class,
        classes: file.classes,
        top_k: file.top_k,
        prototypes: file.prototypes,
        scene_appearance: file.scene_appearance,
        cell_size: file.cell_size,
        optics: file.optics,
    })
}

pub fn save(scene: &Scene, path: &Path) -> Result<(), Error> {
    std::fs::write(path, to_json(scene)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Scene, Error> {
    from_json(&std::fs::read_to_string(path)?)
}

/// Loads every `*.json` scene in a directory, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<Scene>, Error> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load(p)).collect()
}

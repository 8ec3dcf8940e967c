//! Run archives and the report files built from them.
//!
//! `per_scene.csv` columns, in order:
//! `run, agent, setup, ordering, position, scene_id, annotations, steps,
//! motion_steps, termination, initial_miou, final_miou, miou_1_50,
//! miou_51_100, da_per_annot, da_per_step, explored_area, total_area`.
//! Undefined metrics (for example a mIoU window without enough annotations)
//! are empty fields.
//!
//! `aggregate.csv` has one row per run: `run, agent, setup, ordering,
//! episodes` followed by the mean of every numeric per-scene column from
//! `annotations` on (excluding `termination`), each mean taken over the
//! episodes where the value is defined.
//!
//! `curves.json` holds, per run and episode, mIoU against annotation index,
//! mIoU against explored fraction and cumulative annotations against steps.

use super::config::RunConfig;
use super::log::{metric_da_per_annot, metric_da_per_step, metric_miou_window, EpisodeLog, Termination};
use crate::error::Error;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const RUN_FORMAT: &str = "embal-run";
pub const RUN_VERSION: u32 = 1;
pub const RUN_FILE: &str = "run.json";

pub const SCENE_COLUMNS: [&str; 18] = [
    "run",
    "agent",
    "setup",
    "ordering",
    "position",
    "scene_id",
    "annotations",
    "steps",
    "motion_steps",
    "termination",
    "initial_miou",
    "final_miou",
    "miou_1_50",
    "miou_51_100",
    "da_per_annot",
    "da_per_step",
    "explored_area",
    "total_area",
];

/// Names of the averaged columns in `aggregate.csv`.
pub const MEAN_COLUMNS: [&str; 11] = [
    "annotations",
    "steps",
    "motion_steps",
    "initial_miou",
    "final_miou",
    "miou_1_50",
    "miou_51_100",
    "da_per_annot",
    "da_per_step",
    "explored_area",
    "total_area",
];

/// Everything `run` writes: the configuration and the episode logs in the
/// order the scenes were visited.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunArchive {
    pub format: String,
    pub format_version: u32,
    /// Label used in reports; defaults to the output directory name.
    pub name: String,
    pub config: RunConfig,
    pub logs: Vec<EpisodeLog>,
}

impl RunArchive {
    pub fn new(name: &str, config: RunConfig, logs: Vec<EpisodeLog>) -> Self {
        Self {
            format: RUN_FORMAT.into(),
            format_version: RUN_VERSION,
            name: name.into(),
            config,
            logs,
        }
    }

    pub fn to_json(&self) -> Result<String, Error> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let a: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("run archive: {e}")))?;
        if a.format != RUN_FORMAT || a.format_version != RUN_VERSION {
            return Err(Error::Config(format!(
                "run archive: expected {RUN_FORMAT} v{RUN_VERSION}, found {} v{}",
                a.format, a.format_version
            )));
        }
        Ok(a)
    }

    /// Writes `run.json` plus one map dump per episode under `maps/`.
    pub fn save(&self, dir: &Path) -> Result<(), Error> {
        std::fs::create_dir_all(dir.join("maps"))?;
        std::fs::write(dir.join(RUN_FILE), self.to_json()?)?;
        for (i, log) in self.logs.iter().enumerate() {
            std::fs::write(dir.join("maps").join(format!("{i:03}-{}.txt", log.scene_id)), &log.final_map)?;
        }
        Ok(())
    }

    /// Archives in `dir`: its own `run.json` and those of its direct
    /// subdirectories, sorted by path.
    pub fn load_all(dir: &Path) -> Result<Vec<Self>, Error> {
        let mut paths: Vec<PathBuf> = Vec::new();
        if dir.join(RUN_FILE).is_file() {
            paths.push(dir.join(RUN_FILE));
        }
        let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(RUN_FILE).is_file())
            .collect();
        subdirs.sort();
        paths.extend(subdirs.into_iter().map(|p| p.join(RUN_FILE)));
        paths
            .iter()
            .map(|p| Self::from_json(&std::fs::read_to_string(p)?))
            .collect()
    }
}

/// One per-scene CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRow {
    pub run: String,
    pub agent: String,
    pub setup: String,
    pub ordering: String,
    pub position: usize,
    pub scene_id: String,
    pub annotations: usize,
    pub steps: usize,
    pub motion_steps: usize,
    pub termination: Termination,
    pub initial_miou: f64,
    pub final_miou: f64,
    pub miou_1_50: Option<f64>,
    pub miou_51_100: Option<f64>,
    pub da_per_annot: Option<f64>,
    pub da_per_step: Option<f64>,
    pub explored_area: f64,
    pub total_area: f64,
}

impl SceneRow {
    pub fn from_log(run: &RunArchive, position: usize, log: &EpisodeLog) -> Self {
        Self {
            run: run.name.clone(),
            agent: log.agent.clone(),
            setup: run.config.setup.to_string(),
            ordering: run.config.ordering.to_string(),
            position,
            scene_id: log.scene_id.clone(),
            annotations: log.annotations,
            steps: log.steps.len(),
            motion_steps: log.motion_steps(),
            termination: log.termination,
            initial_miou: log.initial_miou,
            final_miou: log.final_miou(),
            miou_1_50: metric_miou_window(log, 1, 50),
            miou_51_100: metric_miou_window(log, 51, 100),
            da_per_annot: metric_da_per_annot(log),
            da_per_step: metric_da_per_step(log),
            explored_area: log.final_area(),
            total_area: log.total_area,
        }
    }

    fn means(&self) -> [Option<f64>; MEAN_COLUMNS.len()] {
        [
            Some(self.annotations as f64),
            Some(self.steps as f64),
            Some(self.motion_steps as f64),
            Some(self.initial_miou),
            Some(self.final_miou),
            self.miou_1_50,
            self.miou_51_100,
            self.da_per_annot,
            self.da_per_step,
            Some(self.explored_area),
            Some(self.total_area),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub run: String,
    pub agent: String,
    pub setup: String,
    pub ordering: String,
    pub episodes: usize,
    /// Means in [`MEAN_COLUMNS`] order.
    pub means: Vec<Option<f64>>,
}

impl AggregateRow {
    pub fn mean(&self, column: &str) -> Option<f64> {
        MEAN_COLUMNS.iter().position(|c| *c == column).and_then(|i| self.means[i])
    }
}

pub fn scene_rows(runs: &[RunArchive]) -> Vec<SceneRow> {
    runs.iter()
        .flat_map(|r| r.logs.iter().enumerate().map(move |(i, l)| SceneRow::from_log(r, i, l)))
        .collect()
}

pub fn aggregate(run: &RunArchive) -> AggregateRow {
    let rows: Vec<SceneRow> = run.logs.iter().enumerate().map(|(i, l)| SceneRow::from_log(run, i, l)).collect();
    let mut means = Vec::with_capacity(MEAN_COLUMNS.len());
    for c in 0..MEAN_COLUMNS.len() {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.means()[c]).collect();
        means.push((!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64));
    }
    AggregateRow {
        run: run.name.clone(),
        agent: run.logs.first().map_or_else(|| run.config.agent.to_string(), |l| l.agent.clone()),
        setup: run.config.setup.to_string(),
        ordering: run.config.ordering.to_string(),
        episodes: rows.len(),
        means,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("csv: {e}"))
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Explored => "explored",
        Termination::StepCap => "step_cap",
    }
}

pub fn scene_csv(rows: &[SceneRow]) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SCENE_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.run.clone(),
            r.agent.clone(),
            r.setup.clone(),
            r.ordering.clone(),
            r.position.to_string(),
            r.scene_id.clone(),
            r.annotations.to_string(),
            r.steps.to_string(),
            r.motion_steps.to_string(),
            termination_name(r.termination).to_string(),
            r.initial_miou.to_string(),
            r.final_miou.to_string(),
            fmt_opt(r.miou_1_50),
            fmt_opt(r.miou_51_100),
            fmt_opt(r.da_per_annot),
            fmt_opt(r.da_per_step),
            r.explored_area.to_string(),
            r.total_area.to_string(),
        ])
        .map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["run", "agent", "setup", "ordering", "episodes"];
    header.extend(MEAN_COLUMNS);
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![
            r.run.clone(),
            r.agent.clone(),
            r.setup.clone(),
            r.ordering.clone(),
            r.episodes.to_string(),
        ];
        rec.extend(r.means.iter().map(|m| fmt_opt(*m)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

fn parse_opt(s: &str) -> Result<Option<f64>, Error> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(csv_err)
    }
}

/// Parses `per_scene.csv` back into rows.
pub fn parse_scene_csv(text: &str) -> Result<Vec<SceneRow>, Error> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != SCENE_COLUMNS {
        return Err(Error::Config(format!("unexpected per-scene header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| f(i).parse::<f64>().map_err(csv_err);
        let int = |i: usize| f(i).parse::<usize>().map_err(csv_err);
        out.push(SceneRow {
            run: f(0).into(),
            agent: f(1).into(),
            setup: f(2).into(),
            ordering: f(3).into(),
            position: int(4)?,
            scene_id: f(5).into(),
            annotations: int(6)?,
            steps: int(7)?,
            motion_steps: int(8)?,
            termination: match f(9) {
                "explored" => Termination::Explored,
                "step_cap" => Termination::StepCap,
                t => return Err(Error::Config(format!("unknown termination `{t}`"))),
            },
            initial_miou: num(10)?,
            final_miou: num(11)?,
            miou_1_50: parse_opt(f(12))?,
            miou_51_100: parse_opt(f(13))?,
            da_per_annot: parse_opt(f(14))?,
            da_per_step: parse_opt(f(15))?,
            explored_area: num(16)?,
            total_area: num(17)?,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeCurves {
    pub scene_id: String,
    /// `(annotation index, mIoU)`, starting at `(0, initial mIoU)`.
    pub miou_vs_annotations: Vec<(usize, f64)>,
    /// `(explored fraction, mIoU)` at the start, after every annotation and at the end.
    pub miou_vs_explored: Vec<(f64, f64)>,
    /// `(step, annotations so far)` at every annotation and at the end.
    pub annotations_vs_steps: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunCurves {
    pub run: String,
    pub agent: String,
    pub setup: String,
    pub ordering: String,
    /// Mean mIoU per annotation index over episodes that reached it.
    pub mean_miou_vs_annotations: Vec<(usize, f64)>,
    pub episodes: Vec<EpisodeCurves>,
}

pub fn episode_curves(log: &EpisodeLog) -> EpisodeCurves {
    let total = if log.total_area > 0.0 { log.total_area } else { 1.0 };
    let cps = log.annotation_checkpoints();
    let mut by_annot = vec![(0, log.initial_miou)];
    by_annot.extend(cps.iter().map(|c| (c.annotation, c.miou)));
    let mut by_area = vec![(log.initial_area / total, log.initial_miou)];
    by_area.extend(log.checkpoints.iter().map(|c| (c.explored_area / total, c.miou)));
    let mut by_step: Vec<(usize, usize)> = cps.iter().map(|c| (c.step, c.annotation)).collect();
    by_step.push((log.steps.len(), log.annotations));
    EpisodeCurves {
        scene_id: log.scene_id.clone(),
        miou_vs_annotations: by_annot,
        miou_vs_explored: by_area,
        annotations_vs_steps: by_step,
    }
}

pub fn run_curves(run: &RunArchive) -> RunCurves {
    let episodes: Vec<EpisodeCurves> = run.logs.iter().map(episode_curves).collect();
    let longest = episodes.iter().map(|e| e.miou_vs_annotations.len()).max().unwrap_or(0);
    let mean = (0..longest)
        .map(|k| {
            let vals: Vec<f64> = episodes
                .iter()
                .filter_map(|e| e.miou_vs_annotations.get(k).map(|p| p.1))
                .collect();
            (k, vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    let agg = aggregate(run);
    RunCurves {
        run: agg.run,
        agent: agg.agent,
        setup: agg.setup,
        ordering: agg.ordering,
        mean_miou_vs_annotations: mean,
        episodes,
    }
}

/// File names and contents of a report.
pub fn render_report(runs: &[RunArchive]) -> Result<Vec<(&'static str, String)>, Error> {
    let scenes = scene_csv(&scene_rows(runs))?;
    let agg = aggregate_csv(&runs.iter().map(aggregate).collect::<Vec<_>>())?;
    let curves: Vec<RunCurves> = runs.iter().map(run_curves).collect();
    let curves = serde_json::to_string_pretty(&curves).map_err(|e| Error::Config(e.to_string()))?;
    Ok(vec![
        ("per_scene.csv", scenes),
        ("aggregate.csv", agg),
        ("curves.json", curves),
    ])
}

pub fn write_report(runs: &[RunArchive], out: &Path) -> Result<Vec<PathBuf>, Error> {
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for (name, body) in render_report(runs)? {
        let p = out.join(name);
        std::fs::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use embal::harness::{report, run_sequence_from, AgentKind, Ordering, RunArchive, RunConfig, Setup, SEED_ENV};
use embal::perception::SegModel;
use embal::rl::{curve_csv, train_policy, RlConfig};
use embal::world::{generate_scene, io, WorldParams};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "embal", version, about = "Embodied lifelong active-learning testbed")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate scenes as JSON files.
    GenScenes {
        #[arg(long, default_value_t = 18)]
        count: u64,
        /// Seed of the first scene; scene i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// TOML run config whose `[world]` table sets generation parameters.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run an agent over a scene sequence; writes run.json, per-episode map
    /// dumps and the final segmentation model.
    Run {
        #[arg(long)]
        agent: Option<AgentKind>,
        #[arg(long)]
        setup: Option<Setup>,
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        ordering: Option<Ordering>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed and EMBAL_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Segmentation model checkpoint to start from instead of a fresh model.
        #[arg(long)]
        warm_start: Option<PathBuf>,
        /// Policy checkpoint for `--agent rl`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train the annotation policy and write a policy checkpoint.
    TrainRl {
        #[arg(long)]
        scenes: PathBuf,
        /// Lifelong training steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Point-goal pretraining steps.
        #[arg(long)]
        pretrain_steps: Option<usize>,
        /// Repeatable; also accepts comma-separated flags.
        #[arg(long = "ablation", value_name = "FLAG")]
        ablations: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// TOML training config (keys of RlConfig).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build per-scene and aggregate CSVs plus curves from run archives.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn gen_scenes(count: u64, seed: u64, out: &Path, config: Option<&Path>) -> Result<()> {
    let params = match config {
        Some(p) => RunConfig::load(p)?.world,
        None => WorldParams::default(),
    };
    std::fs::create_dir_all(out)?;
    for i in 0..count {
        let scene = generate_scene(&params, seed + i)?;
        io::save(&scene, &out.join(format!("{}.json", scene.id)))?;
    }
    println!("wrote {count} scenes to {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run(
    agent: Option<AgentKind>,
    setup: Option<Setup>,
    scenes: &Path,
    ordering: Option<Ordering>,
    out: &Path,
    config: Option<&Path>,
    seed: Option<u64>,
    warm_start: Option<&Path>,
    checkpoint: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::from_env()?,
    };
    if let Some(a) = agent {
        cfg.agent = a;
    }
    if let Some(s) = setup {
        cfg.setup = s;
    }
    if let Some(o) = ordering {
        cfg.ordering = o;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if checkpoint.is_some() {
        cfg.agents.rl_checkpoint = checkpoint;
    }
    cfg.validate()?;
    let all = io::load_dir(scenes).with_context(|| format!("loading scenes from {}", scenes.display()))?;
    if all.is_empty() {
        bail!("no scene files in {}", scenes.display());
    }
    let ordered = cfg.order_scenes(&all)?;
    let warm = warm_start.map(SegModel::load).transpose()?;
    let mut policy = cfg.build_agent()?;
    let (logs, last) = run_sequence_from(&ordered, policy.as_mut(), cfg.setup, &cfg.env, cfg.seed, warm.as_ref())?;
    let name = out.file_name().map_or_else(|| "run".into(), |n| n.to_string_lossy().into_owned());
    RunArchive::new(&name, cfg, logs).save(out)?;
    if let Some(model) = last {
        model.save(&out.join("model.json"))?;
    }
    println!("wrote {} episodes to {}", ordered.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train_rl(
    scenes: &Path,
    steps: Option<usize>,
    pretrain_steps: Option<usize>,
    ablations: &[String],
    seed: Option<u64>,
    config: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let mut cfg: RlConfig = match config {
        Some(p) => RlConfig::from_toml(&std::fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => RlConfig::default(),
    };
    if let Ok(v) = std::env::var(SEED_ENV) {
        cfg.seed = v.trim().parse().with_context(|| format!("{SEED_ENV}=`{v}`"))?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = steps {
        cfg.train_steps = n;
    }
    if let Some(n) = pretrain_steps {
        cfg.pretrain_steps = n;
    }
    for name in ablations.iter().flat_map(|f| f.split(',')).map(str::trim).filter(|f| !f.is_empty()) {
        cfg.ablations.set(name)?;
    }
    let scenes = io::load_dir(scenes)?;
    let trained = train_policy(&scenes, &cfg)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    trained.checkpoint.save(out)?;
    let curve = out.with_extension("curve.csv");
    std::fs::write(&curve, curve_csv(&trained.lifelong.curve)?)?;
    std::fs::write(out.with_extension("pretrain.csv"), curve_csv(&trained.pretrain.curve)?)?;
    println!(
        "wrote {} (config {}) and {}",
        out.display(),
        &trained.checkpoint.config_hash[..12],
        curve.display()
    );
    Ok(())
}

fn report_cmd(input: &Path, out: &Path) -> Result<()> {
    let runs = RunArchive::load_all(input)?;
    if runs.is_empty() {
        bail!("no {} found in {} or its subdirectories", report::RUN_FILE, input.display());
    }
    for p in report::write_report(&runs, out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::GenScenes { count, seed, out, config } => gen_scenes(count, seed, &out, config.as_deref()),
        Cmd::Run {
            agent,
            setup,
            scenes,
            ordering,
            out,
            config,
            seed,
            warm_start,
            checkpoint,
        } => run(
            agent,
            setup,
            &scenes,
            ordering,
            &out,
            config.as_deref(),
            seed,
            warm_start.as_deref(),
            checkpoint,
        ),
        Cmd::TrainRl {
            scenes,
            steps,
            pretrain_steps,
            ablations,
            seed,
            config,
            out,
        } => train_rl(&scenes, steps, pretrain_steps, &ablations, seed, config.as_deref(), &out),
        Cmd::Report { input, out } => report_cmd(&input, &out),
    }
}

//! Lifelong results under different scene orderings, and a custom ordering
//! from a TOML run config.

use embal::harness::{metric_da_per_annot, metric_miou_window, run_sequence, Ordering, RunConfig};
use embal::world::{generate_scene, WorldParams};

fn main() -> embal::Result<()> {
    let params = WorldParams::default();
    let scenes: Vec<_> = (0..6).map(|i| generate_scene(&params, 1500 + i)).collect::<Result<_, _>>()?;
    for ordering in [Ordering::Fixed, Ordering::Seed(1), Ordering::Seed(2)] {
        let cfg = RunConfig::from_toml(&format!("setup = \"lifelong\"\nordering = \"{ordering}\""))?;
        let ordered = cfg.order_scenes(&scenes)?;
        let logs = run_sequence(&ordered, cfg.build_agent()?.as_mut(), cfg.setup, &cfg.env, cfg.seed)?;
        let da: Vec<f64> = logs.iter().filter_map(metric_da_per_annot).collect();
        let mi: Vec<f64> = logs.iter().filter_map(|l| metric_miou_window(l, 1, 50)).collect();
        let ids: Vec<&str> = ordered.iter().map(|s| &s.id[6..]).collect();
        println!(
            "{ordering:7} [{}]  dA/annot {:.2}  mIoU(1-50) {:.3}",
            ids.join(" "),
            da.iter().sum::<f64>() / da.len() as f64,
            mi.iter().sum::<f64>() / mi.len() as f64
        );
    }
    Ok(())
}

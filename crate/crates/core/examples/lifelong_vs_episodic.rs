//! The accuracy oracle over a six-scene sequence, once with a fresh model per
//! scene and once carrying model and annotations forward.

use embal::agents::AccuracyOracle;
use embal::harness::{metric_da_per_annot, metric_miou_window, run_sequence, EnvConfig, Setup};
use embal::world::{generate_scene, WorldParams};

fn main() -> embal::Result<()> {
    let params = WorldParams::default();
    let scenes: Vec<_> = (0..6).map(|i| generate_scene(&params, 1000 + i)).collect::<Result<_, _>>()?;
    let cfg = EnvConfig::default();
    for setup in [Setup::Episodic, Setup::Lifelong] {
        let logs = run_sequence(&scenes, &mut AccuracyOracle::default(), setup, &cfg, 0)?;
        println!("{setup}:");
        for log in &logs {
            println!(
                "  {}  initial {:.3}  final {:.3}  annots {:3}  mIoU(1-50) {:.3}  dA/annot {:.1}",
                log.scene_id,
                log.initial_miou,
                log.final_miou(),
                log.annotations,
                metric_miou_window(log, 1, 50).unwrap_or(f64::NAN),
                metric_da_per_annot(log).unwrap_or(f64::NAN)
            );
        }
        let total: usize = logs.iter().map(|l| l.annotations).sum();
        println!("  total annotations {total}");
    }
    Ok(())
}

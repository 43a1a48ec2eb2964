//! Trains the GAN and VAE baselines and compares their marginal fit with the
//! correlation-filtered sampler on the five band columns.

use eegsynth::pipeline::fixtures::correlated_gaussian;
use eegsynth::pipeline::{run_baseline, RunConfig};

fn main() -> eegsynth::Result<()> {
    let table = correlated_gaussian(200, 0.5, 7)?;
    for kind in ["gan", "vae"] {
        let mut cfg = RunConfig::default();
        cfg.set("seed", "3")?;
        cfg.set("baseline", kind)?;
        let run = run_baseline(&table, &cfg)?;
        let loss = run.history.main_series();
        println!(
            "{kind}: loss {:.4} -> {:.4} over {} epochs",
            loss[0],
            loss[loss.len() - 1],
            loss.len()
        );
        for fit in [&run.comparison.baseline, &run.comparison.statistical] {
            println!("  {:<18} mean KS D {:.4}", fit.generator, fit.mean_ks_statistic);
        }
    }
    Ok(())
}

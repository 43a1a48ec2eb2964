//! Correlation-thresholded resampling in both modes.

use eegsynth::pipeline::fixtures::correlated_gaussian;
use eegsynth::synth::{synthesize, SynthesisConfig, SynthesisMode};

fn main() -> eegsynth::Result<()> {
    let original = correlated_gaussian(200, 0.5, 7)?;
    for mode in [SynthesisMode::RowBootstrap, SynthesisMode::ColumnBootstrap] {
        let config = SynthesisConfig { mode, seed: 42, ..SynthesisConfig::default() };
        let out = synthesize(&original, &config)?;
        let min = out.per_row_mean_correlation.iter().cloned().fold(f64::INFINITY, f64::min);
        println!(
            "{mode:?}: {} rows from {} candidates, acceptance {:.3}, lowest score {min:.3}",
            out.table.n_rows(),
            out.candidates_tried,
            out.acceptance_rate
        );
    }

    // a threshold no candidate can reach exhausts the round budget
    let strict = SynthesisConfig { threshold: 0.999, max_rounds: 3, seed: 1, ..SynthesisConfig::default() };
    match synthesize(&original, &strict) {
        Err(e) => println!("threshold 0.999: {e} (exit code {})", e.exit_code()),
        Ok(out) => println!("threshold 0.999 produced {} rows", out.table.n_rows()),
    }
    Ok(())
}

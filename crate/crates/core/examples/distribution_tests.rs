//! Per-feature KS and Shapiro-Wilk, PERMANOVA and the correlation structure
//! of an original table against a synthetic one.

use eegsynth::pipeline::fixtures::correlated_gaussian;
use eegsynth::stats::{correlation_matrix, ks_two_sample, permanova, shapiro_wilk};
use eegsynth::synth::{synthesize, SynthesisConfig, SynthesisMode};

fn main() -> eegsynth::Result<()> {
    let original = correlated_gaussian(200, 0.5, 7)?;
    let config = SynthesisConfig { mode: SynthesisMode::ColumnBootstrap, seed: 2, ..SynthesisConfig::default() };
    let synthetic = synthesize(&original, &config)?.table;

    println!("{:<16} {:>6} {:>8} {:>8}", "feature", "KS D", "KS p", "SW p");
    for (j, name) in original.feature_names.iter().enumerate().take(5) {
        let (a, b) = (original.feature_column(j), synthetic.feature_column(j));
        let ks = ks_two_sample(&a, &b)?;
        let sw = shapiro_wilk(&b)?;
        println!("{name:<16} {:>6.3} {:>8.4} {:>8.4}", ks.statistic, ks.p_value, sw.p_value);
    }

    let p = permanova(&original.features, &synthetic.features, 999, 2)?;
    println!("\nPERMANOVA pseudo-F {:.4}, p {:.3} ({} permutations)", p.pseudo_f, p.p_value, p.n_permutations);

    let (co, cs) = (correlation_matrix(&original, false)?, correlation_matrix(&synthetic, false)?);
    let diff = co.compare(&cs)?;
    println!(
        "mean off-diagonal Spearman: original {:.3}, synthetic {:.3}; mean |diff| {:.3}, max {:.3}",
        co.mean_off_diagonal(),
        cs.mean_off_diagonal(),
        diff.mean_abs_diff,
        diff.max_abs_diff
    );
    Ok(())
}

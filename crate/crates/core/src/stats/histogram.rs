use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// Equal-width bins; `edges` has one more entry than `counts`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Bins over `[min, max]` of `x`. A constant input gets a unit-wide range
/// centred on its value.
pub fn histogram(x: &[f64], n_bins: usize) -> Result<Histogram> {
    if x.is_empty() {
        return Err(Error::InsufficientData("histogram of an empty vector".into()));
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    histogram_range(x, n_bins, lo, hi)
}

/// Bins over a fixed `[lo, hi]`; values outside are clamped into the end
/// bins so counts always sum to `x.len()`.
pub fn histogram_range(x: &[f64], n_bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if n_bins < 2 {
        return Err(Error::InvalidSpec(format!("histogram needs >= 2 bins, got {n_bins}")));
    }
    if x.iter().any(|v| !v.is_finite()) || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(Error::DegenerateInput("histogram range or values not finite".into()));
    }
    let (lo, hi) = if hi == lo { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
    let width = (hi - lo) / n_bins as f64;
    let edges = (0..=n_bins)
        .map(|i| if i == n_bins { hi } else { lo + i as f64 * width })
        .collect();
    let mut counts = vec![0; n_bins];
    for &v in x {
        let b = ((v - lo) / width).floor();
        let b = if b < 0.0 { 0 } else { (b as usize).min(n_bins - 1) };
        counts[b] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Original and synthetic histograms of one feature on shared bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramPair {
    pub feature: String,
    pub edges: Vec<f64>,
    pub original: Vec<usize>,
    pub synthetic: Vec<usize>,
}

impl HistogramPair {
    pub fn new(feature: &str, original: &[f64], synthetic: &[f64], n_bins: usize) -> Result<Self> {
        let all = original.iter().chain(synthetic);
        let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
        let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
        let a = histogram_range(original, n_bins, lo, hi)?;
        let b = histogram_range(synthetic, n_bins, lo, hi)?;
        Ok(HistogramPair {
            feature: feature.to_string(),
            edges: a.edges,
            original: a.counts,
            synthetic: b.counts,
        })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("bin_low,bin_high,original,synthetic\n");
        for i in 0..self.original.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.edges[i],
                self.edges[i + 1],
                self.original[i],
                self.synthetic[i]
            );
        }
        out
    }

    /// Overlaid bar chart of both histograms as normalized densities.
    pub fn to_svg(&self) -> String {
        let (w, h, pad) = (480.0, 240.0, 24.0);
        let n_o: usize = self.original.iter().sum::<usize>().max(1);
        let n_s: usize = self.synthetic.iter().sum::<usize>().max(1);
        let frac = |c: usize, n: usize| c as f64 / n as f64;
        let peak = self
            .original
            .iter()
            .map(|&c| frac(c, n_o))
            .chain(self.synthetic.iter().map(|&c| frac(c, n_s)))
            .fold(0.0, f64::max)
            .max(1e-12);
        let bins = self.original.len();
        let bw = (w - 2.0 * pad) / bins as f64;
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{pad}\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            self.feature
        );
        for (series, counts, n, colour) in [
            (0, &self.original, n_o, "#1f77b4"),
            (1, &self.synthetic, n_s, "#ff7f0e"),
        ] {
            for (i, &c) in counts.iter().enumerate() {
                let bh = frac(c, n) / peak * (h - 2.0 * pad);
                let x = pad + i as f64 * bw + series as f64 * bw / 2.0;
                let y = h - pad - bh;
                let _ = writeln!(
                    svg,
                    "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{bh:.2}\" fill=\"{colour}\" fill-opacity=\"0.7\"/>",
                    bw / 2.0
                );
            }
        }
        svg.push_str("</svg>\n");
        svg
    }
}

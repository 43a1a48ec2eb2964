//! Shapiro-Wilk W test, Royston's AS R94 algorithm.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stats::TestResult;

const SMALL: f64 = 1e-19;

const G: [f64; 2] = [-2.273, 0.459];
const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Half of the antisymmetric coefficient vector, largest first.
fn coefficients(n: usize) -> Vec<f64> {
    let nn2 = n / 2;
    let mut a = vec![0.0; nn2];
    if n == 3 {
        a[0] = 0.5f64.sqrt();
        return a;
    }
    let std = Normal::standard();
    let an25 = n as f64 + 0.25;
    let m: Vec<f64> = (1..=nn2)
        .map(|i| std.inverse_cdf((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let (first, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        a[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    a[0] = a1;
    for i in first..nn2 {
        a[i] = -m[i] / fac;
    }
    a
}

/// W statistic and p-value for `3 <= n <= 5000` observations.
pub fn shapiro_wilk(x: &[f64]) -> Result<TestResult> {
    let n = x.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::InsufficientData(format!("shapiro-wilk needs 3..=5000 values, got {n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("shapiro-wilk input holds non-finite values".into()));
    }
    let mut xs = x.to_vec();
    xs.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    };
    xs.iter_mut().for_each(|v| *v -= median);
    let range = xs[n - 1] - xs[0];
    if range < SMALL {
        return Err(Error::DegenerateInput("shapiro-wilk input is constant".into()));
    }

    let half = coefficients(n);
    let full: Vec<f64> = (0..n)
        .map(|i| {
            let j = n - 1 - i;
            match i.cmp(&j) {
                std::cmp::Ordering::Less => -half[i],
                std::cmp::Ordering::Greater => half[j],
                std::cmp::Ordering::Equal => 0.0,
            }
        })
        .collect();
    let sa = full.iter().sum::<f64>() / n as f64;
    let sx = xs.iter().map(|v| v / range).sum::<f64>() / n as f64;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (a, v) in full.iter().zip(&xs) {
        let asa = a - sa;
        let xsx = v / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    Ok(TestResult {
        statistic: w,
        p_value: p_value(w, n).clamp(0.0, 1.0),
        test_name: "shapiro-wilk".into(),
    })
}

fn p_value(w: f64, n: usize) -> f64 {
    if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::PI / 3.0;
        return (pi6 * (w.sqrt().asin() - stqr)).max(0.0);
    }
    let an = n as f64;
    let mut w1 = (1.0 - w).ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if w1 >= gamma {
            return 1e-99;
        }
        w1 = -(gamma - w1).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    Normal::standard().sf((w1 - m) / s)
}

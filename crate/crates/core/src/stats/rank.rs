use crate::error::{Error, Result};

/// 1-based ranks with ties replaced by the mean of the ranks they span.
pub fn mid_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // positions i..j share rank (i+1 + j) / 2
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation; NaN when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "pearson needs equal lengths");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman rank correlation with mid-ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidSpec(format!(
            "spearman needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!("spearman needs >= 3 values, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("spearman input holds non-finite values".into()));
    }
    let r = pearson(&mid_ranks(x), &mid_ranks(y));
    if r.is_nan() {
        return Err(Error::DegenerateInput("spearman input is constant".into()));
    }
    Ok(r)
}

/// Centered mid-ranks scaled to unit norm, so the Spearman correlation of
/// two vectors is the dot product of their profiles. `None` for constant
/// input.
pub fn rank_profile(x: &[f64]) -> Option<Vec<f64>> {
    let mut r = mid_ranks(x);
    let mean = (x.len() as f64 + 1.0) / 2.0;
    r.iter_mut().for_each(|v| *v -= mean);
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    r.iter_mut().for_each(|v| *v /= norm);
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_share_mid_rank() {
        assert_eq!(mid_ranks(&[10.0, 20.0, 10.0, 30.0, 20.0]), vec![1.5, 3.5, 1.5, 5.0, 3.5]);
    }

    #[test]
    fn monotone_and_reversed() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.exp()).collect();
        assert_eq!(spearman(&x, &y).unwrap(), 1.0);
        assert_eq!(spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn tied_hand_value() {
        let r = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[5.0, 6.0, 7.0, 8.0, 7.0]).unwrap();
        assert!((r - 8.0 / 95f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_is_degenerate() {
        assert!(matches!(spearman(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(spearman(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::InsufficientData(_))));
        assert!(rank_profile(&[2.0; 5]).is_none());
    }

    #[test]
    fn profile_dot_is_spearman() {
        let x = [0.3, 1.2, -4.0, 1.2, 8.0, 0.0];
        let y = [1.0, 0.0, 3.0, 2.0, 2.0, -1.0];
        let (px, py) = (rank_profile(&x).unwrap(), rank_profile(&y).unwrap());
        let dot: f64 = px.iter().zip(&py).map(|(a, b)| a * b).sum();
        assert!((dot - spearman(&x, &y).unwrap()).abs() < 1e-14);
    }
}

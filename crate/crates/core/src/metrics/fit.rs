use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MetricsError;

/// Least-squares line through `(ln N, ln error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit, MetricsError> {
    if points.len() < 2 {
        return Err(MetricsError::Fit(format!("need at least 2 points, got {}", points.len())));
    }
    if let Some(&(n, e)) = points.iter().find(|(n, e)| !(*e > 0.0 && e.is_finite() && *n > 0.0)) {
        return Err(MetricsError::Fit(format!("nonpositive or non-finite point ({n}, {e})")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(MetricsError::Fit("all N values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit { slope, intercept, r2 })
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (rx, ry) = (ranks(xs), ranks(ys));
    let m = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / m;
    let my = ry.iter().sum::<f64>() / m;
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Percentile interval of the fitted slope when the per-seed errors at each `N`
/// are resampled with replacement and averaged.
pub fn bootstrap_slope_ci(
    groups: &[(f64, Vec<f64>)],
    reps: usize,
    seed: u64,
    level: f64,
) -> Result<(f64, f64), MetricsError> {
    if groups.iter().any(|(_, e)| e.is_empty()) {
        return Err(MetricsError::Fit("empty seed group".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(reps);
    for _ in 0..reps {
        let pts: Vec<(f64, f64)> = groups
            .iter()
            .map(|(n, e)| {
                let s: f64 = (0..e.len()).map(|_| e[rng.random_range(0..e.len())]).sum();
                (*n, s / e.len() as f64)
            })
            .collect();
        slopes.push(rate_fit(&pts)?.slope);
    }
    slopes.sort_by(f64::total_cmp);
    let q = |p: f64| slopes[((p * (reps - 1) as f64).round() as usize).min(reps - 1)];
    let tail = 0.5 * (1.0 - level);
    Ok((q(tail), q(1.0 - tail)))
}

//! Log-log rate fits, Spearman correlation and a seed bootstrap on synthetic errors.
use kinfluid::metrics::{bootstrap_slope_ci, rate_fit, spearman};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let ns = [250.0, 500.0, 1000.0, 2000.0, 4000.0];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let groups: Vec<(f64, Vec<f64>)> = ns
        .iter()
        .map(|&n: &f64| {
            let e = (0..8).map(|_| n.powf(-0.3) * (1.0 + 0.1 * (2.0 * rng.random::<f64>() - 1.0))).collect();
            (n, e)
        })
        .collect();
    let means: Vec<(f64, f64)> = groups.iter().map(|(n, e)| (*n, e.iter().sum::<f64>() / e.len() as f64)).collect();
    let fit = rate_fit(&means).unwrap();
    let ys: Vec<f64> = means.iter().map(|p| p.1).collect();
    let (lo, hi) = bootstrap_slope_ci(&groups, 2000, 7, 0.95).unwrap();
    println!("true slope -0.3");
    println!("fitted slope {:.4}  r2 {:.4}  spearman {:.2}", fit.slope, fit.r2, spearman(&ns, &ys));
    println!("95% bootstrap interval [{lo:.4}, {hi:.4}]");
}

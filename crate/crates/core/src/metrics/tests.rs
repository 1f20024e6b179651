use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::mollifier::CutoffSpec;
use crate::particles::noise;
use crate::spectral::{InterpScheme, TorusGrid};
use crate::vfp::PhaseGrid;

fn random_field(g: &TorusGrid, comps: usize, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<Vec<f64>> = (0..comps)
        .map(|_| (0..g.len()).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    SpectralField::from_components(g, &vals).unwrap()
}

/// `||(1 - Delta)^{gamma/2} w||_{L^p}` by explicit double sums on a small grid.
fn bessel_oracle(g: &TorusGrid, a: &[Vec<f64>], b: &[Vec<f64>], gamma: f64, p: f64) -> f64 {
    let n = g.res()[0];
    let m = g.len();
    let signed = |i: usize| if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
    let mut pts = vec![0.0; m];
    for c in 0..a.len() {
        let w: Vec<f64> = a[c].iter().zip(&b[c]).map(|(x, y)| x - y).collect();
        for (j, acc) in pts.iter_mut().enumerate() {
            let (j0, j1) = (j / n, j % n);
            let mut s = Complex64::default();
            for k0 in 0..n {
                for k1 in 0..n {
                    let mut coef = Complex64::default();
                    for (l, wl) in w.iter().enumerate() {
                        let (l0, l1) = (l / n, l % n);
                        let ph = -2.0 * PI * ((k0 * l0 + k1 * l1) as f64) / n as f64;
                        coef += Complex64::from_polar(*wl, ph);
                    }
                    coef /= m as f64;
                    let (s0, s1) = (signed(k0), signed(k1));
                    let mult = (1.0 + s0 * s0 + s1 * s1).powf(gamma / 2.0);
                    let ph = 2.0 * PI * ((k0 * j0 + k1 * j1) as f64) / n as f64;
                    s += coef * mult * Complex64::from_polar(1.0, ph);
                }
            }
            *acc += s.re * s.re;
        }
    }
    (pts.iter().map(|s| s.sqrt().powf(p)).sum::<f64>() / m as f64).powf(1.0 / p)
}

#[test]
fn bessel_error_basic_cases() {
    let g = TorusGrid::cubic(2, 8).unwrap();
    let u = random_field(&g, 2, 1);
    assert_eq!(bessel_error(&u, &u, 0.75, 4.0).unwrap(), 0.0);
    let c1 = SpectralField::from_fn(&g, 1, |_, _| 1.5);
    let c2 = SpectralField::from_fn(&g, 1, |_, _| -0.25);
    assert!((bessel_error(&c1, &c2, 0.75, 4.0).unwrap() - 1.75).abs() < 1e-14);
    let w = random_field(&g, 2, 2);
    let z = random_field(&g, 2, 3);
    let d = |a: &SpectralField, b: &SpectralField| bessel_error(a, b, 0.75, 4.0).unwrap();
    assert!((d(&u, &w) - d(&w, &u)).abs() < 1e-13);
    assert!(d(&u, &z) <= d(&u, &w) + d(&w, &z) + 1e-13);
    let other = TorusGrid::cubic(2, 16).unwrap();
    assert!(bessel_error(&u, &SpectralField::zeros(&other, 2), 0.75, 4.0).is_err());
}

#[test]
fn bessel_error_matches_direct_sum() {
    let g = TorusGrid::cubic(2, 8).unwrap();
    // fields without Nyquist content so every convention agrees
    let smooth = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..8).map(|_| StandardNormal.sample(&mut rng)).collect();
        SpectralField::from_fn(&g, 2, move |x, c| {
            let p = 2.0 * PI;
            a[4 * c] * (p * x[0]).sin()
                + a[4 * c + 1] * (p * (x[0] + 2.0 * x[1])).cos()
                + a[4 * c + 2] * (3.0 * p * x[1]).sin()
                + a[4 * c + 3]
        })
    };
    let (u, w) = (smooth(4), smooth(5));
    for (gamma, p) in [(0.75, 4.0), (0.0, 2.0), (0.5, 3.0)] {
        let want = bessel_oracle(&g, &u.to_samples(), &w.to_samples(), gamma, p);
        let got = bessel_error(&u, &w, gamma, p).unwrap();
        assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
    }
}

#[test]
fn energy_and_dissipation_errors() {
    let g = TorusGrid::cubic(2, 16).unwrap();
    let u = SpectralField::from_fn(&g, 2, |x, c| if c == 0 { (2.0 * PI * x[1]).sin() } else { 0.0 });
    let z = SpectralField::zeros(&g, 2);
    assert!((energy_error(&u, &z).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
    assert!((gradient_error_sq(&u, &z).unwrap() - 2.0 * PI * PI).abs() < 1e-10);
    assert_eq!(gradient_error_sq(&u, &u).unwrap(), 0.0);
    assert!((time_integral(&[0.0, 0.5, 1.0], &[1.0, 1.0, 1.0]) - 1.0).abs() < 1e-15);
    assert!((time_integral(&[0.0, 1.0, 3.0], &[0.0, 1.0, 3.0]) - 4.5).abs() < 1e-15);
}

#[test]
fn rho_vanishes_on_identical_streams() {
    let g = PhaseGrid::new(TorusGrid::cubic(2, 8).unwrap(), &[16, 16], 3.0).unwrap();
    let t = [0.0, 0.1];
    let u = vec![random_field(g.x_grid(), 2, 1), random_field(g.x_grid(), 2, 2)];
    let f = vec![
        PhaseSpaceDensity::from_fn(&g, |x, v| (1.0 + 0.2 * x[0]) * (-v[0] * v[0] - v[1] * v[1]).exp()),
        PhaseSpaceDensity::from_fn(&g, |x, v| (1.0 + 0.3 * x[1]) * (-v[0] * v[0] - v[1] * v[1]).exp()),
    ];
    let s = Stream { t: &t, u: &u, f: &f };
    assert_eq!(rho_n(&s, &s, None, 0.75, 4.0, 3.0).unwrap(), 0.0);
    assert_eq!(rho_tilde_n(&f, None, 3.0).unwrap(), 0.0);
    let fam = MollifierFamily::new(0.1, 0.05, 1000, 2).unwrap();
    assert!(rho_n(&s, &s, Some(&fam), 0.75, 4.0, 3.0).unwrap() > 0.0);
    assert!(rho_tilde_n(&f, Some(&fam), 3.0).unwrap() > 0.0);
    let late = [0.0, 0.2];
    let s2 = Stream { t: &late, u: &u, f: &f };
    assert!(matches!(rho_n(&s, &s2, None, 0.75, 4.0, 3.0), Err(MetricsError::Misaligned(_))));
}

#[test]
fn torus_metric_wraps() {
    let d = phase_distance(&[0.05, 0.5], &[0.0, 0.0], &[0.95, 0.5], &[0.0, 0.0]);
    assert!((d - 0.1).abs() < 1e-14);
    let d = phase_distance(&[0.2], &[1.0], &[0.2], &[-2.0]);
    assert_eq!(d, 3.0);
}

fn sample_pair(n: usize, seed: u64, s1: f64, s2: f64) -> (ParticleEnsemble, ParticleEnsemble) {
    let law = crate::particles::InitialLaw::maxwellian(0.3);
    (law.sample(2, n, seed, s1).unwrap(), law.sample(2, n, seed, s2).unwrap())
}

#[test]
fn identical_dynamics_give_zero_chaos_error() {
    let g = TorusGrid::cubic(2, 16).unwrap();
    let u = SpectralField::from_fn(&g, 2, |x, c| if c == 0 { 0.5 * (2.0 * PI * x[1]).sin() } else { 0.0 });
    let (mut a, mut b) = sample_pair(40, 9, 0.5, 0.5);
    let cut = CutoffSpec::new(4.0);
    let mut sa = vec![a.clone()];
    let mut sb = vec![b.clone()];
    for _ in 0..10 {
        a.step_in_field(&u, 0.01, &cut, InterpScheme::Spline4).unwrap();
        b.step_in_field(&u, 0.01, &CutoffSpec::inactive(), InterpScheme::Spline4).unwrap();
        sa.push(a.clone());
        sb.push(b.clone());
    }
    assert_eq!(chaos_error(&sa, &sb).unwrap(), 0.0);
}

#[test]
fn single_particle_noise_mismatch_matches_closed_form() {
    let g = TorusGrid::cubic(2, 8).unwrap();
    let u = SpectralField::zeros(&g, 2);
    let (sig, sig_n, dt): (f64, f64, f64) = (0.5, 0.6, 0.01);
    let (mut a, mut b) = sample_pair(1, 21, sig_n, sig);
    let cut = CutoffSpec::inactive();
    // the difference D = V^N - V bar obeys D+ = e^{-dt} D + (sigma_N - sigma) amp xi
    let amp = ((1.0 - (-2.0 * dt).exp()) / 2.0f64).sqrt();
    let (mut dv, mut dx) = ([0.0; 2], [0.0; 2]);
    let mut sup: f64 = 0.0;
    let (mut sa, mut sb) = (vec![a.clone()], vec![b.clone()]);
    for step in 0..50u64 {
        let mut xi = [0.0; 2];
        noise(21, 0, step, &mut xi);
        for c in 0..2 {
            let next = (-dt).exp() * dv[c] + (sig_n - sig) * amp * xi[c];
            dx[c] += 0.5 * dt * (dv[c] + next);
            dv[c] = next;
        }
        sup = sup.max((dx[0] * dx[0] + dx[1] * dx[1] + dv[0] * dv[0] + dv[1] * dv[1]).sqrt());
        a.step_in_field(&u, dt, &cut, InterpScheme::ExactFourier).unwrap();
        b.step_in_field(&u, dt, &cut, InterpScheme::ExactFourier).unwrap();
        sa.push(a.clone());
        sb.push(b.clone());
    }
    let got = chaos_error(&sa, &sb).unwrap();
    assert!((got - sup).abs() < 1e-12, "{got} vs {sup}");
    assert!(got > 0.0);
}

#[test]
fn decoupled_streams_are_rejected() {
    let (a, _) = sample_pair(5, 1, 0.5, 0.5);
    let (b, _) = sample_pair(5, 2, 0.5, 0.5);
    assert!(matches!(chaos_distance(&a, &b), Err(MetricsError::StreamMismatch(_))));
    let (c, _) = sample_pair(6, 1, 0.5, 0.5);
    assert!(chaos_distance(&a, &c).is_err());
    let mut d = a.clone();
    d.step += 1;
    assert!(chaos_distance(&a, &d).is_err());
}

#[test]
fn exact_power_laws_are_recovered() {
    let pts: Vec<(f64, f64)> = [100.0, 200.0, 400.0].iter().map(|&n: &f64| (n, 5.0 * n.powf(-0.5))).collect();
    let f = rate_fit(&pts).unwrap();
    assert!((f.slope + 0.5).abs() < 1e-12);
    assert!((f.intercept - 5f64.ln()).abs() < 1e-12);
    assert!((f.r2 - 1.0).abs() < 1e-12);
    let two = rate_fit(&[(10.0, 3.0), (1000.0, 0.3)]).unwrap();
    assert!((two.slope + 0.5).abs() < 1e-12);
    assert!((two.intercept + two.slope * 10f64.ln() - 3f64.ln()).abs() < 1e-12);
    assert!(rate_fit(&[(10.0, 1.0), (20.0, 0.0), (40.0, 1.0)]).is_err());
    assert!(rate_fit(&[(10.0, 1.0)]).is_err());
}

#[test]
fn noisy_power_law_slope_is_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let ns: Vec<f64> = (0..5).map(|i| 100.0 * 10f64.powf(i as f64 / 4.0)).collect();
    let studies = 20;
    let mut inside = 0;
    for s in 0..studies {
        let groups: Vec<(f64, Vec<f64>)> = ns
            .iter()
            .map(|&n| {
                let e = (0..8)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        n.powf(-0.3) * (1.0 + 0.1 * z)
                    })
                    .collect();
                (n, e)
            })
            .collect();
        let (lo, hi) = bootstrap_slope_ci(&groups, 500, s, 0.95).unwrap();
        assert!(lo <= hi);
        if lo >= -0.38 && hi <= -0.22 {
            inside += 1;
        }
    }
    assert!(inside as f64 >= 0.95 * studies as f64, "{inside}/{studies}");
}

#[test]
fn spearman_cases() {
    let n = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert!((spearman(&n, &[5.0, 3.0, 2.0, 1.0, 0.5]) + 1.0).abs() < 1e-15);
    assert!((spearman(&n, &[1.0, 4.0, 9.0, 16.0, 25.0]) - 1.0).abs() < 1e-15);
    let r = spearman(&n, &[5.0, 3.0, 3.0, 1.0, 0.5]);
    assert!(r < -0.9 && r > -1.0);
}

#[test]
fn error_record_csv_roundtrip() {
    let r = ErrorRecord {
        n: 500,
        seed: 3,
        sigma_n: 0.6,
        bessel: 0.012,
        weighted: 0.3,
        energy: 0.01,
        dissipation: 1e-3,
        chaos: 0.2,
        rho: 0.05,
        rho_tilde: 0.04,
    };
    assert!(r.is_valid());
    assert_eq!(ErrorRecord::CSV_HEADER.split(',').count(), r.csv_row().split(',').count());
    let back = ErrorRecord::parse_row(&r.csv_row()).unwrap();
    assert_eq!(back.n, 500);
    assert!((back.bessel - 0.012).abs() < 1e-15);
    assert!(!ErrorRecord { chaos: f64::NAN, ..r }.is_valid());
}

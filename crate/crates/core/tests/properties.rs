use std::f64::consts::PI;

use kinfluid::fluid::LimitMode;
use kinfluid::harness::{validate, ExperimentConfig};
use kinfluid::metrics::{bessel_error, phase_distance, rate_fit, spearman, ErrorRecord};
use kinfluid::mollifier::{CutoffSpec, MollifierFamily};
use kinfluid::particles::{noise, ParticleEnsemble};
use kinfluid::spectral::{SpectralField, TorusGrid};
use kinfluid::vfp::{vfp_step, PhaseGrid, PhaseSpaceDensity, VfpSolver};
use proptest::prelude::*;

fn field(n: usize, comps: usize, vals: &[f64]) -> SpectralField {
    let g = TorusGrid::cubic(2, n).unwrap();
    let m = g.len();
    let c: Vec<Vec<f64>> = (0..comps).map(|i| vals[i * m..(i + 1) * m].to_vec()).collect();
    SpectralField::from_components(&g, &c).unwrap()
}

fn samples(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn leray_is_a_divergence_free_projection(v in samples(2 * 64)) {
        let u = field(8, 2, &v);
        let p = u.leray_project().unwrap();
        prop_assert!(p.divergence_residual() <= 1e-12 * (1.0 + u.l2_norm()));
        let pp = p.leray_project().unwrap();
        prop_assert!(pp.sub(&p).unwrap().l2_norm() <= 1e-13);
        prop_assert!(p.l2_norm() <= u.l2_norm() + 1e-13);
    }

    #[test]
    fn heat_is_a_contracting_semigroup(v in samples(64), s in 0.0f64..0.05, t in 0.0f64..0.05) {
        let u = field(8, 1, &v);
        let a = u.heat_propagate(s).unwrap().heat_propagate(t).unwrap();
        let b = u.heat_propagate(s + t).unwrap();
        prop_assert!(a.sub(&b).unwrap().l2_norm() <= 1e-13);
        prop_assert!(b.l2_norm() <= u.l2_norm() + 1e-14);
    }

    #[test]
    fn bessel_error_is_a_metric(a in samples(128), b in samples(128), c in samples(128), gamma in 0.0f64..1.0) {
        let (x, y, z) = (field(8, 2, &a), field(8, 2, &b), field(8, 2, &c));
        let p = 4.0;
        let xy = bessel_error(&x, &y, gamma, p).unwrap();
        let yx = bessel_error(&y, &x, gamma, p).unwrap();
        prop_assert!((xy - yx).abs() <= 1e-12 * (1.0 + xy));
        let xz = bessel_error(&x, &z, gamma, p).unwrap();
        let zy = bessel_error(&z, &y, gamma, p).unwrap();
        prop_assert!(xy <= xz + zy + 1e-12);
        prop_assert_eq!(bessel_error(&x, &x, gamma, p).unwrap(), 0.0);
    }

    #[test]
    fn cutoff_is_odd_bounded_and_identity_inside(a in 0.1f64..10.0, y in -30.0f64..30.0) {
        let c = CutoffSpec::new(a);
        let v = c.scalar(y);
        prop_assert_eq!(c.scalar(-y), -v);
        prop_assert!(v.abs() <= y.abs() + 1e-15);
        prop_assert!(v.abs() <= a + 1.0);
        if y.abs() <= a {
            prop_assert_eq!(v, y);
        }
        if y.abs() >= a + 1.0 {
            prop_assert_eq!(v.abs(), a);
        }
    }

    #[test]
    fn spatial_kernel_coefficients_lie_in_unit_interval(n in 2u64..100_000, k in 0i64..40) {
        let f = MollifierFamily::new(0.1, 0.05, n, 2).unwrap();
        let r = f.theta1_coeff(k);
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!(f.theta1_coeff(k + 1) <= r + 1e-15);
        if k <= 3 {
            prop_assert!(r > 0.0);
        }
        prop_assert!((f.theta1_coeff(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_distance_is_a_metric(p in prop::collection::vec(-3.0f64..3.0, 12)) {
        let (x1, v1, x2, v2, x3, v3) = (&p[0..2], &p[2..4], &p[4..6], &p[6..8], &p[8..10], &p[10..12]);
        let d12 = phase_distance(x1, v1, x2, v2);
        prop_assert!((d12 - phase_distance(x2, v2, x1, v1)).abs() < 1e-12);
        prop_assert!(d12 <= phase_distance(x1, v1, x3, v3) + phase_distance(x3, v3, x2, v2) + 1e-12);
        let shifted: Vec<f64> = x1.iter().map(|x| x + 1.0).collect();
        prop_assert!(phase_distance(x1, v1, &shifted, v1) < 1e-12);
    }

    #[test]
    fn power_laws_are_recovered(c in 0.01f64..100.0, s in -2.0f64..0.5) {
        let pts: Vec<(f64, f64)> = [100.0, 300.0, 1000.0, 5000.0].iter().map(|&n: &f64| (n, c * n.powf(s))).collect();
        let f = rate_fit(&pts).unwrap();
        prop_assert!((f.slope - s).abs() < 1e-10);
        prop_assert!((f.intercept - c.ln()).abs() < 1e-8);
    }

    #[test]
    fn spearman_is_bounded(xs in prop::collection::vec(-5.0f64..5.0, 3..10), seed in any::<u64>()) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| (x * (seed % 7) as f64 + i as f64).sin()).collect();
        let r = spearman(&xs, &ys);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
    }

    #[test]
    fn error_records_roundtrip(v in prop::collection::vec(0.0f64..1e3, 8), n in 2usize..100_000, seed in any::<u64>()) {
        let r = ErrorRecord {
            n, seed, sigma_n: v[0], bessel: v[1], weighted: v[2], energy: v[3],
            dissipation: v[4], chaos: v[5], rho: v[6], rho_tilde: v[7],
        };
        prop_assert!(r.is_valid());
        let back = ErrorRecord::parse_row(&r.csv_row()).unwrap();
        for (a, b) in [(back.bessel, r.bessel), (back.chaos, r.chaos), (back.rho_tilde, r.rho_tilde)] {
            prop_assert!((a - b).abs() <= 1e-11 * (1.0 + b));
        }
        prop_assert_eq!(back.n, n);
        prop_assert_eq!(back.seed, seed);
    }

    #[test]
    fn noise_is_a_pure_function_of_its_counter(seed in any::<u64>(), i in 0usize..10_000, step in 0u64..10_000) {
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        noise(seed, i, step, &mut a);
        noise(seed, i, step, &mut b);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn validator_matches_the_exponent_constraints(gamma in 0.0f64..1.2, p in 1.0f64..8.0) {
        let mut c = ExperimentConfig::default_scenario();
        c.gamma = gamma;
        c.p = p;
        let want = p > 2.0 && gamma > 2.0 / p && gamma < 1.0;
        prop_assert_eq!(validate(&c).passed(), want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn kinetic_step_keeps_mass_and_sign(
        a in -1.0f64..1.0, m in -0.8f64..0.8, std in 0.2f64..0.6, sigma in 0.0f64..0.8, amp in 0.0f64..1.0,
    ) {
        let g = PhaseGrid::new(TorusGrid::cubic(2, 8).unwrap(), &[24, 24], 3.5).unwrap();
        let mut f = PhaseSpaceDensity::from_fn(&g, |x, v| {
            (1.0 + 0.5 * a * (2.0 * PI * x[1]).sin()) * (-((v[0] - m).powi(2) + v[1] * v[1]) / (2.0 * std * std)).exp()
        });
        f.normalize().unwrap();
        let u = SpectralField::from_fn(g.x_grid(), 2, |x, c| if c == 0 { amp * (2.0 * PI * x[1]).sin() } else { 0.0 });
        let s = VfpSolver::new(&g);
        for _ in 0..5 {
            let (next, rep) = vfp_step(&s, &f, &u, sigma, 0.02, &CutoffSpec::inactive(), LimitMode::Plain).unwrap();
            prop_assert!(rep.min_value >= 0.0);
            f = next;
        }
        prop_assert!((f.mass() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn particles_stay_on_the_torus(seed in any::<u64>(), sigma in 0.0f64..1.0) {
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).fract()).collect();
        let v: Vec<f64> = (0..20).map(|i| 3.0 * (i as f64).sin()).collect();
        let mut e = ParticleEnsemble::new(2, x, v, seed, sigma).unwrap();
        let drift = vec![0.0; 20];
        for _ in 0..10 {
            e.advance(&drift, 0.05).unwrap();
        }
        prop_assert!(e.positions().iter().all(|x| (0.0..1.0).contains(x)));
        prop_assert_eq!(e.step, 10);
    }
}

use super::*;
use crate::fluid::NsSolver;
use crate::mollifier::CutoffSpec;
use crate::vfp::{write_density, PhaseSpaceDensity};

fn small() -> ExperimentConfig {
    let mut c = ExperimentConfig::default_scenario();
    c.fluid_res = 16;
    c.phase_x_res = 16;
    c.phase_v_res = 24;
    c.t_end = 0.04;
    c.snapshot_every = 2;
    c.n_schedule = vec![64, 128, 256];
    c.seeds = vec![1, 2];
    c
}

fn label_failed(r: &ValidationReport, needle: &str) -> bool {
    r.failures().any(|c| c.label.contains(needle))
}

#[test]
fn default_scenario_validates() {
    let r = validate(&ExperimentConfig::default_scenario());
    assert!(r.passed(), "{r}");
}

#[test]
fn gamma_below_d_over_p_is_rejected_with_its_label() {
    let mut c = ExperimentConfig::default_scenario();
    c.gamma = 0.4;
    let r = validate(&c);
    assert!(!r.passed());
    assert!(label_failed(&r, "d/p < gamma"));
    assert_eq!(r.failures().count(), 1);
}

#[test]
fn three_dimensional_side_condition() {
    let mut c = ExperimentConfig::default_scenario();
    c.d = 3;
    c.gamma = 0.9;
    c.alpha = 0.06;
    c.beta = 0.03;
    if let InitialDensity::Law { v, .. } = &mut c.initial_f {
        v.mean = vec![0.0; 3];
    }
    let r = validate(&c);
    let side = r.checks.iter().find(|c| c.label.contains("d = 3")).unwrap();
    assert!(side.passed, "{}", side.detail);
    c.gamma = 0.99;
    c.p = 100.0;
    let r = validate(&c);
    assert!(label_failed(&r, "d = 3"));
}

#[test]
fn mollifier_and_cutoff_assumptions() {
    let mut c = ExperimentConfig::default_scenario();
    c.alpha = 0.04;
    assert!(label_failed(&validate(&c), "beta < alpha"));
    let mut c = ExperimentConfig::default_scenario();
    c.alpha = 0.12;
    c.beta = 0.08;
    assert!(label_failed(&validate(&c), "(d+1) alpha < 1/2"));
    let mut c = ExperimentConfig::default_scenario();
    c.cutoff = 0.0;
    assert!(label_failed(&validate(&c), "A > 0"));
    let mut c = ExperimentConfig::default_scenario();
    c.k = 2;
    assert!(label_failed(&validate(&c), "k >= 3"));
}

#[test]
fn degenerate_schedule_is_rejected() {
    let mut c = small();
    c.n_schedule = vec![100, 100];
    assert!(matches!(check_study_schedule(&c), Err(HarnessError::Config(_))));
    c.n_schedule = vec![100, 100, 200];
    assert!(check_study_schedule(&c).is_err());
    c.n_schedule = vec![400, 200, 100];
    assert!(check_study_schedule(&c).is_err());
    let dir = tempfile::tempdir().unwrap();
    c.n_schedule = vec![100, 100];
    let e = convergence_study(&c, dir.path(), 1).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn toml_roundtrip_and_unknown_keys() {
    let c = ExperimentConfig::default_scenario();
    let back = ExperimentConfig::from_toml_str(&c.to_toml()).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.hash(), c.hash());
    let bad = format!("{}\nfoo = 1\n", c.to_toml().replace("[initial_u]", "foo_bar = 2\n[initial_u]"));
    assert!(matches!(ExperimentConfig::from_toml_str(&bad), Err(HarnessError::Config(_))));
    assert_ne!(c.clone().with_seed_offset(5).hash(), c.hash());
}

#[test]
fn snapshot_schedule_includes_the_end() {
    let mut c = small();
    c.t_end = 0.05;
    c.snapshot_every = 2;
    assert_eq!(c.snapshot_steps(), vec![0, 2, 4, 5]);
}

#[test]
fn smoke_coupled_run_is_deterministic() {
    let mut c = ExperimentConfig::default_scenario();
    c.fluid_res = 32;
    c.phase_x_res = 32;
    c.t_end = 0.1;
    let a = run_coupled(&c, 64, 3, None).unwrap();
    assert_eq!(a.particles.len(), c.snapshot_steps().len());
    assert!(a.particles.iter().all(|p| p.len() == 64));
    assert!(a.diagnostics_csv.lines().count() == c.steps() + 2);
    let b = run_coupled(&c, 64, 3, None).unwrap();
    assert_eq!(a.diagnostics_csv, b.diagnostics_csv);
    let other = run_coupled(&c, 64, 4, None).unwrap();
    assert_ne!(a.diagnostics_csv, other.diagnostics_csv);
}

#[test]
fn manifest_records_the_sigma_schedule() {
    let mut c = small();
    c.sigma = 0.1;
    c.t_end = 0.02;
    c.seeds = vec![1];
    let dir = tempfile::tempdir().unwrap();
    let failures = write_coupled_runs(&c, dir.path(), 2).unwrap();
    assert!(failures.is_empty(), "{failures:?}");
    let m = Manifest::read(dir.path()).unwrap();
    assert_eq!(m.seeds, vec![1]);
    for &(n, s) in &m.sigma_n {
        let want = (c.sigma).max((n as f64).ln().powf(-0.25));
        assert!((s - want).abs() < 1e-14, "N={n}: {s} vs {want}");
    }
    assert_eq!(m.sigma_n.len(), 3);
    assert_eq!(m.config_hash, c.hash());
}

#[test]
fn empty_kinetic_phase_gives_pure_navier_stokes() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small();
    c.t_end = 0.1;
    let zero = PhaseSpaceDensity::zeros(&c.phase_grid().unwrap());
    let path = dir.path().join("zero.kphd");
    write_density(&path, &zero).unwrap();
    c.initial_f = InitialDensity::Snapshot { path };
    let run = run_limit(&c, LimitRunMode::Plain, true, |_, _, _, _, _| Ok(())).unwrap();
    let ns = NsSolver::new(&c.fluid_grid().unwrap(), CutoffSpec::inactive());
    let mut u = c.initial_field().unwrap();
    for (step, got) in run.u_every_step.iter().enumerate() {
        assert_eq!(got, &u, "step {step}");
        u = ns.step(&u, None, c.dt).unwrap();
    }
}

#[test]
fn auxiliary_with_fixed_sigma_and_large_cutoff_matches_plain() {
    let mut c = small();
    c.t_end = 0.1;
    c.sigma_rule = SigmaRule::Fixed;
    c.cutoff = 1e6;
    let mut fp = Vec::new();
    let mut fa = Vec::new();
    let p = run_limit(&c, LimitRunMode::Plain, true, |_, _, _, _, f| {
        fp.push(f.clone());
        Ok(())
    })
    .unwrap();
    let a = run_limit(&c, LimitRunMode::Auxiliary(500), true, |_, _, _, _, f| {
        fa.push(f.clone());
        Ok(())
    })
    .unwrap();
    for (x, y) in p.u_every_step.iter().zip(&a.u_every_step) {
        assert!(x.sub(y).unwrap().l2_norm() <= 1e-12);
    }
    for (x, y) in fp.iter().zip(&fa) {
        let m = x.values().iter().zip(y.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(m <= 1e-12, "{m}");
    }
}

#[test]
fn limit_run_conserves_mass() {
    let mut c = small();
    c.t_end = 0.5;
    c.snapshot_every = 10;
    let run = run_limit(&c, LimitRunMode::Plain, false, |_, _, _, _, _| Ok(())).unwrap();
    assert!((run.final_mass - run.initial_mass).abs() <= 1e-10, "{} {}", run.initial_mass, run.final_mass);
}

fn stub_records(f: impl Fn(f64) -> f64) -> Vec<crate::metrics::ErrorRecord> {
    let mut out = Vec::new();
    for n in [250usize, 500, 1000, 2000, 4000] {
        for seed in 1..=4u64 {
            let e = f(n as f64);
            out.push(crate::metrics::ErrorRecord {
                n,
                seed,
                sigma_n: 0.5,
                bessel: e,
                weighted: 2.0 * e,
                energy: e,
                dissipation: e * e,
                chaos: 0.1 * e,
                rho: e,
                rho_tilde: e,
            });
        }
    }
    out
}

#[test]
fn stub_metric_slope_passes_through_the_summary() {
    let s = summarize(&stub_records(|n| n.powf(-0.5)), 0.5);
    for m in ["bessel_err", "weighted_err", "energy_err", "chaos_err", "rho_n"] {
        let r = s.rate(m).unwrap();
        assert!((r.slope + 0.5).abs() < 1e-12, "{m}: {}", r.slope);
        assert!((r.spearman + 1.0).abs() < 1e-12);
        assert!((r.ci_lo + 0.5).abs() < 1e-12 && (r.ci_hi + 0.5).abs() < 1e-12);
    }
    assert!((s.rate("dissipation_err").unwrap().slope + 1.0).abs() < 1e-12);
    assert_eq!(s.means.len(), 5);
    assert_eq!(s.means[0].seeds, 4);
    assert!(s.chaos_summary.iter().all(|c| c.within_bound));
    assert!((s.chaos_summary[0].ratio_rel - 1.0).abs() < 1e-12);
}

#[test]
fn forced_equal_noise_and_stubbed_field_give_zero_chaos() {
    let mut c = small();
    c.sigma_rule = SigmaRule::Fixed;
    c.t_end = 0.1;
    let run = run_limit(&c, LimitRunMode::Plain, true, |_, _, _, _, _| Ok(())).unwrap();
    let n = 128;
    let mut a = initial_particles(&c, n, 9, c.sigma_n(n).unwrap()).unwrap();
    let mut b = initial_particles(&c, n, 9, c.sigma).unwrap();
    let mut pa = Vec::new();
    let mut pb = Vec::new();
    let plain = CutoffSpec::inactive();
    for step in 0..=c.steps() {
        if c.snapshot_steps().contains(&step) {
            pa.push(a.clone());
            pb.push(b.clone());
        }
        if step < c.steps() {
            a.step_in_field(&run.u_every_step[step], c.dt, &plain, c.interp).unwrap();
            b.step_in_field(&run.u_every_step[step], c.dt, &plain, c.interp).unwrap();
        }
    }
    assert_eq!(crate::metrics::chaos_error(&pa, &pb).unwrap(), 0.0);
}

#[test]
fn replot_reproduces_the_study_tables() {
    let c = small();
    let dir = tempfile::tempdir().unwrap();
    let out = convergence_study(&c, dir.path(), 2).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    assert_eq!(out.records.len(), 6);
    assert!(out.records.iter().all(|r| r.is_valid()));
    let names = ["errors.csv", "means.csv", "rates.csv", "chaos.csv", "chaos_summary.csv"];
    let before: Vec<Vec<u8>> = names.iter().map(|n| std::fs::read(dir.path().join(n)).unwrap()).collect();
    for n in names {
        std::fs::remove_file(dir.path().join(n)).unwrap();
    }
    let again = replot(dir.path()).unwrap();
    assert_eq!(again.records, out.records);
    for (n, b) in names.iter().zip(&before) {
        assert_eq!(&std::fs::read(dir.path().join(n)).unwrap(), b, "{n}");
    }
    assert!(dir.path().join("plots/errors_vs_n.svg").exists());
    assert!(dir.path().join("plots/limit_norms.svg").exists());

    let dir2 = tempfile::tempdir().unwrap();
    chaos_study(&c, dir2.path(), 1).unwrap();
    for (n, b) in names.iter().zip(&before) {
        assert_eq!(&std::fs::read(dir2.path().join(n)).unwrap(), b, "{n}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(HarnessError::Config("x".into()).exit_code(), 2);
    assert_eq!(HarnessError::Validation(ValidationReport::default()).exit_code(), 2);
    let s = HarnessError::Solver {
        run: "r".into(),
        step: 1,
        message: "m".into(),
    };
    assert_eq!(s.exit_code(), 3);
    assert_eq!(HarnessError::io(std::path::Path::new("x"), std::io::Error::other("e")).exit_code(), 1);
}

//! A reduced convergence study: limit and auxiliary runs, particle cells on two
//! workers, error tables, rate fits and plots in a temporary directory.
use kinfluid::harness::{convergence_study, replot, ExperimentConfig};

fn main() {
    let mut cfg = ExperimentConfig::default_scenario();
    cfg.fluid_res = 16;
    cfg.phase_x_res = 16;
    cfg.phase_v_res = 24;
    cfg.t_end = 0.1;
    cfg.n_schedule = vec![100, 200, 400, 800];
    cfg.seeds = vec![1, 2, 3];
    cfg.snapshot_every = 5;
    let dir = std::env::temp_dir().join("kinfluid_convergence_example");
    let out = convergence_study(&cfg, &dir, 2).unwrap();
    for m in &out.summary.means {
        println!(
            "N {:4}  bessel {:.4e}  weighted {:.4e}  chaos {:.4e}",
            m.n,
            m.get("bessel_err").unwrap(),
            m.get("weighted_err").unwrap(),
            m.get("chaos_err").unwrap()
        );
    }
    for r in &out.summary.rates {
        println!("{:16} slope {:+.3}  spearman {:+.2}", r.metric, r.slope, r.spearman);
    }
    let again = replot(&dir).unwrap();
    assert_eq!(again.records, out.records);
    println!("tables recomputed from snapshots in {}", dir.display());
}

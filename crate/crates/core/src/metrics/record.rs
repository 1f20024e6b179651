use serde::{Deserialize, Serialize};

/// One `(N, seed)` cell of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub n: usize,
    pub seed: u64,
    pub sigma_n: f64,
    /// `sup_t ||u^N - u||_{gamma,p}`
    pub bessel: f64,
    /// `sup_t ||<v>^k (F^N - F)||_{L^2}`
    pub weighted: f64,
    /// `sup_t ||u^N - u||_{L^2}`
    pub energy: f64,
    /// `int ||grad(u^N - u)||^2 dt`
    pub dissipation: f64,
    /// `max_i sup_t |(X, V) - (X bar, V bar)|`
    pub chaos: f64,
    pub rho: f64,
    pub rho_tilde: f64,
}

impl ErrorRecord {
    pub const CSV_HEADER: &'static str =
        "n,seed,sigma_n,bessel_err,weighted_err,energy_err,dissipation_err,chaos_err,rho_n,rho_tilde_n";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            self.n,
            self.seed,
            self.sigma_n,
            self.bessel,
            self.weighted,
            self.energy,
            self.dissipation,
            self.chaos,
            self.rho,
            self.rho_tilde
        )
    }

    pub fn parse_row(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 10 {
            return None;
        }
        let r = |i: usize| f[i].parse::<f64>().ok();
        Some(Self {
            n: f[0].parse().ok()?,
            seed: f[1].parse().ok()?,
            sigma_n: r(2)?,
            bessel: r(3)?,
            weighted: r(4)?,
            energy: r(5)?,
            dissipation: r(6)?,
            chaos: r(7)?,
            rho: r(8)?,
            rho_tilde: r(9)?,
        })
    }

    pub fn is_valid(&self) -> bool {
        [
            self.sigma_n,
            self.bessel,
            self.weighted,
            self.energy,
            self.dissipation,
            self.chaos,
            self.rho,
            self.rho_tilde,
        ]
        .iter()
        .all(|x| x.is_finite() && *x >= 0.0)
    }
}

use crate::spectral::SpectralField;

use super::fluid_energy;

/// Per-step fluid diagnostics row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidDiagnostics {
    pub t: f64,
    pub l2: f64,
    pub bessel: f64,
    pub energy: f64,
    pub div_residual: f64,
}

impl FluidDiagnostics {
    pub const CSV_HEADER: &'static str = "t,u_l2,u_bessel,energy,div_residual";

    pub fn compute(u: &SpectralField, t: f64, gamma: f64, p: f64) -> Self {
        Self {
            t,
            l2: u.l2_norm(),
            bessel: u.bessel_norm(gamma, p),
            energy: fluid_energy(u),
            div_residual: u.divergence_residual(),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.12e},{:.12e},{:.12e},{:.3e}",
            self.t, self.l2, self.bessel, self.energy, self.div_residual
        )
    }
}

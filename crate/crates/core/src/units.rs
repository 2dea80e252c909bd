//! Physical constants and unit conventions.
//!
//! Physical runs use microseconds for time and rad/μs for angular frequency.
//! Unitless runs (the spin-boson examples) bypass these conversions.

use std::f64::consts::PI;

/// ¹³C gyromagnetic ratio γ/2π in MHz/T (CODATA-derived nuclear value).
pub const GAMMA_C13_MHZ_PER_T: f64 = 10.705;

/// Vacuum permeability over 4π in T·m/A.
pub const MU0_OVER_4PI: f64 = 1e-7;

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Nuclear Larmor frequency ω₀ = 2π·γ·B in rad/μs for a field in tesla.
pub fn larmor_c13(field_tesla: f64) -> f64 {
    2.0 * PI * GAMMA_C13_MHZ_PER_T * field_tesla
}

/// Homonuclear ¹³C dipolar prefactor `(μ0/4π) γ² ħ` expressed in rad/μs·Å³,
/// so that `D' = dipolar_prefactor_c13() / r³` with `r` in ångström.
pub fn dipolar_prefactor_c13() -> f64 {
    let gamma = 2.0 * PI * GAMMA_C13_MHZ_PER_T * 1e6; // rad/(s·T)
    let si = MU0_OVER_4PI * gamma * gamma * HBAR; // rad/s · m³
    si * 1e30 * 1e-6
}

/// Cyclic frequency in MHz to angular frequency in rad/μs.
pub fn mhz_to_angular(f: f64) -> f64 {
    2.0 * PI * f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dipolar_prefactor_magnitude() {
        // Two ¹³C nuclei 2 Å apart couple at roughly 950 Hz.
        let d = dipolar_prefactor_c13() / 8.0;
        let hz = d / (2.0 * PI) * 1e6;
        assert!((hz - 949.0).abs() < 5.0, "{hz}");
    }

    #[test]
    fn larmor_at_one_tesla() {
        assert!((larmor_c13(1.0) / (2.0 * PI) - 10.705).abs() < 1e-12);
    }
}

//! Reference baths used by the examples, shipped configs and tests.
//!
//! Physical presets use μs and rad/μs.

use crate::bath::central_spin::{build_central_spin, CentralSpinSpec, ProbeSubspace};
use crate::bath::BathModel;
use crate::error::Result;
use crate::operator::Operator;
use crate::spin::{on_site, sigma_x, sigma_y, sigma_z};
use crate::units::{larmor_c13, mhz_to_angular};

/// `A = a σ_x`, `B = b σ_z`, maximally mixed.
pub fn qubit(a: f64, b: f64) -> Result<BathModel> {
    Ok(BathModel::maximally_mixed(sigma_x().scale_real(a), sigma_z().scale_real(b))?
        .with_label(format!("qubit a={a} b={b}")))
}

/// Three qubits with inhomogeneous splittings and XY exchange; the noise
/// operator has transverse and longitudinal parts on every site.
pub fn three_spin() -> Result<BathModel> {
    let n = 3;
    let weights = [1.0, 0.7, 0.4];
    let splittings = [0.5, 0.8, 1.15];
    let exchange = 0.1;
    let mut a = Operator::zeros(8);
    let mut b = Operator::zeros(8);
    for k in 0..n {
        let local = &sigma_x().scale_real(0.3) + &sigma_z().scale_real(0.2);
        a = &a + &on_site(&local, k, n).scale_real(weights[k]);
        b = &b + &on_site(&sigma_z(), k, n).scale_real(0.5 * splittings[k]);
    }
    for k in 0..n - 1 {
        let xx = &on_site(&sigma_x(), k, n) * &on_site(&sigma_x(), k + 1, n);
        let yy = &on_site(&sigma_y(), k, n) * &on_site(&sigma_y(), k + 1, n);
        b = &b + &(&xx + &yy).scale_real(exchange);
    }
    Ok(BathModel::maximally_mixed(a, b)?.with_label("three-spin chain"))
}

/// ¹³C positions (Å) of the strongly coupled five-spin cluster.
pub const CLUSTER_POSITIONS: [[f64; 3]; 5] = [
    [0.0, 0.0, 0.0],
    [3.1, 0.4, 1.2],
    [-1.0, 2.9, -1.4],
    [1.6, -2.2, 2.7],
    [-2.4, -1.5, -2.0],
];

/// Longitudinal hyperfine couplings (kHz) of the cluster.
pub const CLUSTER_HZ_KHZ: [f64; 5] = [6.0, -4.0, 8.0, 3.0, -5.0];

/// Field of the cluster example in tesla.
pub const CLUSTER_FIELD_T: f64 = 0.1;

/// Five strongly coupled ¹³C spins seen from the `m_s = ±1` subspace.
pub fn cluster_spec() -> CentralSpinSpec {
    let hyperfine = CLUSTER_HZ_KHZ
        .iter()
        .map(|h| [0.0, 0.0, mhz_to_angular(h * 1e-3)])
        .collect();
    CentralSpinSpec::new(hyperfine, larmor_c13(CLUSTER_FIELD_T), ProbeSubspace::PlusMinusOne)
        .with_positions(CLUSTER_POSITIONS.to_vec())
}

pub fn cluster() -> Result<BathModel> {
    build_central_spin(&cluster_spec())
}

/// Hyperfine magnitudes (MHz) of the dilute five-spin bath.
pub const DILUTE_H_MHZ: [f64; 5] = [0.105, 0.113, 0.103, 0.107, 0.112];

/// Polar angles (degrees) of the dilute hyperfine vectors from the field axis.
pub const DILUTE_THETA_DEG: [f64; 5] = [95.0, 105.0, 115.0, 125.0, 135.0];

pub const DILUTE_FIELD_T: f64 = 0.01;

/// Hyperfine vector of magnitude `h_mhz` at polar angle `theta_deg` in the x-z plane.
pub fn hyperfine_vector(h_mhz: f64, theta_deg: f64) -> [f64; 3] {
    let h = mhz_to_angular(h_mhz);
    let t = theta_deg.to_radians();
    [h * t.sin(), 0.0, h * t.cos()]
}

/// Five weakly interacting ¹³C spins seen from the `m_s = 0, -1` subspace.
pub fn dilute_spec() -> CentralSpinSpec {
    let hyperfine = DILUTE_H_MHZ
        .iter()
        .zip(DILUTE_THETA_DEG)
        .map(|(&h, t)| hyperfine_vector(h, t))
        .collect();
    CentralSpinSpec::new(hyperfine, larmor_c13(DILUTE_FIELD_T), ProbeSubspace::ZeroMinusOne)
}

pub fn dilute_five_spin() -> Result<BathModel> {
    build_central_spin(&dilute_spec())
}

/// Single ¹³C spin with hyperfine magnitude `h_khz` at polar angle `theta_deg`.
pub fn single_spin(h_khz: f64, theta_deg: f64, field_t: f64) -> Result<BathModel> {
    let spec = CentralSpinSpec::new(
        vec![hyperfine_vector(h_khz * 1e-3, theta_deg)],
        larmor_c13(field_t),
        ProbeSubspace::ZeroMinusOne,
    );
    build_central_spin(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::central_spin::dipolar_from_positions;
    use crate::units::dipolar_prefactor_c13;

    #[test]
    fn cluster_couplings_fit_sampling_window() {
        let d = dipolar_from_positions(&CLUSTER_POSITIONS, dipolar_prefactor_c13()).unwrap();
        let max = d.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(max > 1e-4 && max < 0.005, "{max}");
    }

    #[test]
    fn presets_build() {
        assert_eq!(three_spin().unwrap().dim(), 8);
        assert_eq!(cluster().unwrap().dim(), 32);
        assert_eq!(dilute_five_spin().unwrap().dim(), 32);
        assert_eq!(single_spin(18.2, 45.0, 0.01).unwrap().dim(), 2);
    }
}

//! Outcome-conditioned free evolution and CPMG decoupling of the probe-bath coupling.
//!
//! After outcome `r` the probe sits in a state that couples to the bath as
//! `r A`, so the bath evolves under `U_r = exp(-i(rA + B)τ₂)`. Ideal π pulses
//! flip the sign of `r` and average the coupling away.

use serde::{Deserialize, Serialize};

use crate::bath::BathModel;
use crate::channel::FreeEvolver;
use crate::error::{Error, Result};
use crate::operator::{expm_hermitian, Operator};

/// Unitarity tolerance of the conditional propagators.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpmgConfig {
    /// Number of π pulses `N_p`; must be even, 0 disables decoupling.
    pub n_pulses: usize,
    pub tau2: f64,
}

impl CpmgConfig {
    pub fn new(n_pulses: usize, tau2: f64) -> Result<Self> {
        if n_pulses % 2 == 1 {
            return Err(Error::OddPulseCount(n_pulses));
        }
        if !(tau2 >= 0.0) {
            return Err(Error::OutOfRange {
                name: "tau2",
                value: tau2,
            });
        }
        Ok(Self { n_pulses, tau2 })
    }

    /// Pulse times `(2n - 1)τ₂ / (2N_p)`, `n = 1..N_p`.
    pub fn pulse_times(&self) -> Vec<f64> {
        let n = self.n_pulses as f64;
        (1..=self.n_pulses)
            .map(|k| (2 * k - 1) as f64 * self.tau2 / (2.0 * n))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolverMode {
    FreeConditional,
    Cpmg,
    IdealB,
}

#[derive(Clone, Debug)]
pub struct ConditionalEvolver {
    pub u_plus: Operator,
    pub u_minus: Operator,
    pub mode: EvolverMode,
}

impl ConditionalEvolver {
    pub fn branch(&self, r: i8) -> &Operator {
        if r > 0 {
            &self.u_plus
        } else {
            &self.u_minus
        }
    }

    /// Largest deviation of either branch from unitarity.
    pub fn unitarity_defect(&self) -> f64 {
        [&self.u_plus, &self.u_minus]
            .iter()
            .map(|u| (&(&u.adjoint() * u) - &Operator::identity(u.dim())).max_abs())
            .fold(0.0, f64::max)
    }

    pub fn into_free_evolver(self) -> FreeEvolver {
        match self.mode {
            EvolverMode::IdealB => FreeEvolver::Unitary(self.u_plus),
            _ => FreeEvolver::Conditional {
                plus: self.u_plus,
                minus: self.u_minus,
            },
        }
    }
}

impl From<ConditionalEvolver> for FreeEvolver {
    fn from(e: ConditionalEvolver) -> Self {
        e.into_free_evolver()
    }
}

/// Propagators for `r = ±1`: bare conditional evolution for `N_p = 0`,
/// otherwise the CPMG product
/// `(e^{-i(rA+B)τ₂/2N} e^{-i(-rA+B)τ₂/N} e^{-i(rA+B)τ₂/2N})^{N/2}`.
pub fn conditional_propagators(bath: &BathModel, cfg: &CpmgConfig) -> Result<ConditionalEvolver> {
    let cfg = CpmgConfig::new(cfg.n_pulses, cfg.tau2)?;
    let h = |r: f64| &bath.a().scale_real(r) + bath.b();
    let (u_plus, u_minus, mode) = if cfg.n_pulses == 0 {
        (
            expm_hermitian(&h(1.0), cfg.tau2)?,
            expm_hermitian(&h(-1.0), cfg.tau2)?,
            EvolverMode::FreeConditional,
        )
    } else {
        let n = cfg.n_pulses as f64;
        let edge = cfg.tau2 / (2.0 * n);
        let middle = cfg.tau2 / n;
        let block = |r: f64| -> Result<Operator> {
            let outer = expm_hermitian(&h(r), edge)?;
            let inner = expm_hermitian(&h(-r), middle)?;
            Ok(&(&outer * &inner) * &outer)
        };
        (
            power(&block(1.0)?, cfg.n_pulses / 2),
            power(&block(-1.0)?, cfg.n_pulses / 2),
            EvolverMode::Cpmg,
        )
    };
    let ev = ConditionalEvolver { u_plus, u_minus, mode };
    let defect = ev.unitarity_defect();
    if defect > UNITARY_TOL {
        return Err(Error::InvalidState(format!("conditional propagator not unitary ({defect:.2e})")));
    }
    Ok(ev)
}

/// Both branches equal `exp(-iBτ₂)`: the probe is reset before the free step.
pub fn ideal_evolver(bath: &BathModel, tau2: f64) -> Result<ConditionalEvolver> {
    let u = expm_hermitian(bath.b(), tau2)?;
    Ok(ConditionalEvolver {
        u_plus: u.clone(),
        u_minus: u,
        mode: EvolverMode::IdealB,
    })
}

fn power(u: &Operator, k: usize) -> Operator {
    let mut out = Operator::identity(u.dim());
    let mut base = u.clone();
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            out = &out * &base;
        }
        base = &base * &base;
        k >>= 1;
    }
    out
}

/// `ρ ← U_r ρ U_r†`
pub fn trajectory_free_step(rho: &Operator, r: i8, evolver: &ConditionalEvolver) -> Operator {
    evolver.branch(r).sandwich(rho)
}

/// Spectral-norm distance of `U_{+1}` from the decoupled evolution `exp(-iBτ₂)`.
pub fn decoupling_residual(bath: &BathModel, cfg: &CpmgConfig) -> Result<f64> {
    let ev = conditional_propagators(bath, cfg)?;
    let target = expm_hermitian(bath.b(), cfg.tau2)?;
    Ok((&ev.u_plus - &target).spectral_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::presets::{qubit, single_spin};
    use crate::spin::sigma_z;

    #[test]
    fn odd_pulse_count_rejected() {
        assert_eq!(CpmgConfig::new(3, 1.0), Err(Error::OddPulseCount(3)));
        assert!(CpmgConfig::new(4, 1.0).is_ok());
    }

    #[test]
    fn pulse_times_are_symmetric() {
        let t = CpmgConfig::new(4, 8.0).unwrap().pulse_times();
        assert_eq!(t, vec![1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn commuting_coupling_cancels_exactly() {
        let bath = BathModel::maximally_mixed(sigma_z().scale_real(0.4), sigma_z().scale_real(1.3)).unwrap();
        for n_p in [2, 4, 10] {
            let r = decoupling_residual(&bath, &CpmgConfig::new(n_p, 2.7).unwrap()).unwrap();
            assert!(r < 1e-12, "{n_p}: {r}");
        }
    }

    #[test]
    fn bare_branches_differ_when_noncommuting() {
        let bath = qubit(0.2, 1.0).unwrap();
        let ev = conditional_propagators(&bath, &CpmgConfig::new(0, 2.0).unwrap()).unwrap();
        assert!((&ev.u_plus - &ev.u_minus).max_abs() > 1e-3);
        assert_eq!(ev.mode, EvolverMode::FreeConditional);
    }

    #[test]
    fn ideal_mode_is_branch_independent() {
        let bath = qubit(0.2, 1.0).unwrap();
        let ev = ideal_evolver(&bath, 1.5).unwrap();
        let rho = Operator::from_real_rows(&[vec![0.7, 0.2], vec![0.2, 0.3]]).unwrap();
        let a = trajectory_free_step(&rho, 1, &ev);
        let b = trajectory_free_step(&rho, -1, &ev);
        assert!(a.approx_eq(&b, 0.0));
        assert!((a.trace().re - 1.0).abs() < 1e-14);
        assert!(a.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn decoupling_improves_with_pulses_on_single_spin() {
        let bath = single_spin(18.2, 45.0, 0.01).unwrap();
        let r2 = decoupling_residual(&bath, &CpmgConfig::new(2, 3.0).unwrap()).unwrap();
        let r30 = decoupling_residual(&bath, &CpmgConfig::new(30, 3.0).unwrap()).unwrap();
        assert!(r30 < r2);
    }
}

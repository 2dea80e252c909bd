//! Lindblad relaxation and dephasing of bath qubits during free evolution.

use serde::{Deserialize, Serialize};

use crate::bath::BathModel;
use crate::channel::decompose_superop;
use crate::error::{Error, Result};
use crate::operator::{hermitian_eigen, kron, Operator, SuperOperator, C64};
use crate::spin::{on_site, sigma_minus, sigma_z};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DissipationSpec {
    /// Relaxation rate Γ₁ of each bath qubit (jump operator `√Γ₁ σ⁻`).
    pub gamma1: f64,
    /// Dephasing rate Γ_φ of each bath qubit (jump operator `√Γ_φ σ_z`).
    pub gamma_phi: f64,
}

impl DissipationSpec {
    pub fn new(gamma1: f64, gamma_phi: f64) -> Result<Self> {
        for (name, value) in [("gamma1", gamma1), ("gamma_phi", gamma_phi)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::OutOfRange { name, value });
            }
        }
        Ok(Self { gamma1, gamma_phi })
    }

    /// Equal relaxation and dephasing rates.
    pub fn uniform(gamma: f64) -> Result<Self> {
        Self::new(gamma, gamma)
    }

    pub fn is_zero(&self) -> bool {
        self.gamma1 == 0.0 && self.gamma_phi == 0.0
    }
}

/// `ℒ = -i(B ⊗ I - I ⊗ Bᵀ) + Σ_X [X ⊗ X* - ½(X†X ⊗ I + I ⊗ (X†X)ᵀ)]`
pub fn lindbladian(bath: &BathModel, spec: &DissipationSpec) -> Result<SuperOperator> {
    DissipationSpec::new(spec.gamma1, spec.gamma_phi)?;
    let jumps = jump_operators(bath, spec)?;
    generator(bath.b(), &jumps)
}

fn generator(b: &Operator, jumps: &[Operator]) -> Result<SuperOperator> {
    let d = b.dim();
    let id = Operator::identity(d);
    let minus_i = C64::new(0.0, -1.0);
    let hamiltonian = &kron(b, &id) - &kron(&id, &b.transpose());
    let mut gen = SuperOperator::from_mat(d, hamiltonian.scale(minus_i).into_mat())?;
    for x in jumps {
        let xdx = &x.adjoint() * x;
        let hit = kron(x, &x.conj());
        let anti = &kron(&xdx, &id) + &kron(&id, &xdx.transpose());
        let term = &hit - &anti.scale_real(0.5);
        gen = &gen + &SuperOperator::from_mat(d, term.into_mat())?;
    }
    Ok(gen)
}

fn jump_operators(bath: &BathModel, spec: &DissipationSpec) -> Result<Vec<Operator>> {
    if spec.is_zero() {
        return Ok(Vec::new());
    }
    let n = bath.qubit_count().ok_or(Error::DimensionMismatch {
        expected: bath.dim().next_power_of_two(),
        found: bath.dim(),
    })?;
    let mut out = Vec::new();
    for k in 0..n {
        if spec.gamma1 > 0.0 {
            out.push(on_site(&sigma_minus(), k, n).scale_real(spec.gamma1.sqrt()));
        }
        if spec.gamma_phi > 0.0 {
            out.push(on_site(&sigma_z(), k, n).scale_real(spec.gamma_phi.sqrt()));
        }
    }
    Ok(out)
}

/// Eigenvector condition above which the matrix exponential falls back to Padé.
const EIGEN_CONDITION_LIMIT: f64 = 1e4;

/// `exp(τ₂ ℒ)`.
///
/// Works in the eigenbasis of `B`, where the Hamiltonian part of `ℒ` is
/// diagonal, and exponentiates through the eigendecomposition when it is well
/// conditioned. Long free periods make `‖ℒ τ₂‖` large, and Padé scaling and
/// squaring would then accumulate rounding error; it remains the fallback.
pub fn dissipative_free_evolution(
    bath: &BathModel,
    spec: &DissipationSpec,
    tau2: f64,
) -> Result<SuperOperator> {
    if !(tau2 >= 0.0) {
        return Err(Error::OutOfRange {
            name: "tau2",
            value: tau2,
        });
    }
    DissipationSpec::new(spec.gamma1, spec.gamma_phi)?;
    let jumps = jump_operators(bath, spec)?;
    let eig = hermitian_eigen(bath.b())?;
    let w = &eig.vectors;
    let rotated_jumps: Vec<Operator> = jumps.iter().map(|x| eig.to_eigenbasis(x)).collect();
    let rotated = generator(&Operator::diagonal(&eig.values), &rotated_jumps)?;
    let to_eig = SuperOperator::unitary(&w.adjoint());
    let from_eig = SuperOperator::unitary(w);
    match decompose_superop(&rotated) {
        Ok(dec) if dec.condition_estimate < EIGEN_CONDITION_LIMIT => {
            let mut scaled = dec.right.clone();
            for (k, l) in dec.eigenvalues.iter().enumerate() {
                let e = (l * tau2).exp();
                scaled.col_mut(k).iter_mut().for_each(|z| *z *= e);
            }
            let evolved = SuperOperator::from_mat(rotated.dim(), &scaled * &dec.left)?;
            Ok(&(&from_eig * &evolved) * &to_eig)
        }
        _ => Ok(SuperOperator::exp_generator(&lindbladian(bath, spec)?, tau2)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_free_evolution_channel;
    use crate::spin::sigma_x;

    #[test]
    fn pure_dephasing_decay() {
        let bath = BathModel::maximally_mixed(sigma_x(), Operator::zeros(2)).unwrap();
        let spec = DissipationSpec::new(0.0, 0.3).unwrap();
        let s = dissipative_free_evolution(&bath, &spec, 1.7).unwrap();
        let rho = Operator::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let out = s.apply_op(&rho).unwrap();
        assert!((out.get(0, 1).re - 0.5 * (-2.0 * 0.3 * 1.7_f64).exp()).abs() < 1e-13);
        assert!((out.get(0, 0).re - 0.5).abs() < 1e-13);
    }

    #[test]
    fn relaxation_populates_lower_level() {
        let bath = BathModel::maximally_mixed(sigma_x(), Operator::zeros(2)).unwrap();
        let spec = DissipationSpec::new(0.2, 0.0).unwrap();
        let s = dissipative_free_evolution(&bath, &spec, 2.0).unwrap();
        let up = Operator::diagonal(&[1.0, 0.0]);
        let out = s.apply_op(&up).unwrap();
        assert!((out.get(0, 0).re - (-0.4_f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn zero_rates_reduce_to_unitary() {
        let bath = BathModel::maximally_mixed(sigma_x(), sigma_z().scale_real(0.8)).unwrap();
        let s = dissipative_free_evolution(&bath, &DissipationSpec::default(), 3.0).unwrap();
        let u = build_free_evolution_channel(&bath, 3.0).unwrap();
        assert!(s.approx_eq(&u, 1e-13));
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(DissipationSpec::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn non_register_bath_rejected_with_rates() {
        let bath = BathModel::maximally_mixed(Operator::identity(3), Operator::identity(3)).unwrap();
        assert!(lindbladian(&bath, &DissipationSpec::uniform(0.1).unwrap()).is_err());
        assert!(lindbladian(&bath, &DissipationSpec::default()).is_ok());
    }
}

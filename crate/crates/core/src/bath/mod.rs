//! Environment models: the triple `(A, B, rho)` and builders for the
//! spin-boson and central-spin baths.

pub mod central_spin;
pub mod dissipation;
pub mod presets;
pub mod spin_boson;

use crate::error::{Error, Result};
use crate::operator::{hermitian_eigen, hermitian_eigen_with_tol, hermitian_norm, Operator, C64};

pub use central_spin::{build_central_spin, CentralSpinSpec, ProbeSubspace};
pub use dissipation::{dissipative_free_evolution, lindbladian, DissipationSpec};
pub use spin_boson::{build_spin_boson, exact_boson_channel, SpinBosonBath, SpinBosonSpec};

/// Tolerance for density-matrix validity (trace and positivity).
pub const STATE_TOL: f64 = 1e-10;

/// Noise operator `A`, free bath Hamiltonian `B` and initial bath state.
#[derive(Clone, Debug)]
pub struct BathModel {
    a: Operator,
    b: Operator,
    rho: Operator,
    a_norm_eff: f64,
    label: String,
}

impl BathModel {
    /// Validates Hermiticity of `A`, `B` and that `rho` is a density matrix.
    /// The effective norm defaults to the spectral norm of `A`.
    pub fn new(a: Operator, b: Operator, rho: Operator) -> Result<Self> {
        let d = a.dim();
        for op in [&b, &rho] {
            if op.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: op.dim(),
                });
            }
        }
        for (name, op) in [("A", &a), ("B", &b), ("rho", &rho)] {
            if !op.mat().is_all_finite() {
                return Err(Error::InconsistentSpec(format!("{name} has non-finite entries")));
            }
        }
        let a_norm_eff = hermitian_norm(&a)?;
        b.ensure_hermitian(crate::operator::HERMITIAN_TOL)?;
        validate_state(&rho)?;
        Ok(Self {
            a,
            b,
            rho,
            a_norm_eff,
            label: String::new(),
        })
    }

    /// Bath in the Gibbs state of `B` at inverse temperature `beta`.
    pub fn thermal(a: Operator, b: Operator, beta: f64) -> Result<Self> {
        let rho = thermal_state(&b, beta)?;
        Self::new(a, b, rho)
    }

    /// Bath in the maximally mixed state.
    pub fn maximally_mixed(a: Operator, b: Operator) -> Result<Self> {
        let d = a.dim();
        let rho = Operator::identity(d).scale_real(1.0 / d as f64);
        Self::new(a, b, rho)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_effective_norm(mut self, norm: f64) -> Self {
        self.a_norm_eff = norm;
        self
    }

    pub fn with_state(mut self, rho: Operator) -> Result<Self> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        validate_state(&rho)?;
        self.rho = rho;
        Ok(self)
    }

    pub fn a(&self) -> &Operator {
        &self.a
    }

    pub fn b(&self) -> &Operator {
        &self.b
    }

    pub fn rho(&self) -> &Operator {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn a_norm_eff(&self) -> f64 {
        self.a_norm_eff
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of qubits if the dimension is a power of two.
    pub fn qubit_count(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }
}

/// Effective norm of `A` used in the weak-measurement condition.
pub fn effective_norm(bath: &BathModel) -> f64 {
    bath.a_norm_eff()
}

/// Checks Hermiticity, unit trace and positivity to [`STATE_TOL`].
pub fn validate_state(rho: &Operator) -> Result<()> {
    let defect = rho.hermiticity_defect();
    if defect > 1e-10 {
        return Err(Error::InvalidState(format!(
            "density matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
        return Err(Error::InvalidState(format!("trace is {tr}")));
    }
    let eig = hermitian_eigen_with_tol(rho, f64::INFINITY)?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -STATE_TOL {
        return Err(Error::InvalidState(format!(
            "density matrix has negative eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

/// `exp(-beta B) / Z`, shifted by the ground energy for stability.
pub fn thermal_state(b: &Operator, beta: f64) -> Result<Operator> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::OutOfRange {
            name: "beta",
            value: beta,
        });
    }
    let eig = hermitian_eigen(b)?;
    let e0 = eig.values[0];
    let z: f64 = eig.values.iter().map(|e| (-beta * (e - e0)).exp()).sum();
    Ok(eig.apply(|e| C64::new((-beta * (e - e0)).exp() / z, 0.0)))
}

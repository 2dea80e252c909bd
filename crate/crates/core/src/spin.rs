//! Pauli matrices and spin-1/2 operators on qubit registers.
//!
//! Basis order is `|0⟩ = |↑⟩`, `|1⟩ = |↓⟩`, so `σ_z = diag(1, -1)`.

use crate::operator::{Operator, C64, ZERO};

pub fn sigma_x() -> Operator {
    Operator::from_fn(2, |i, j| if i != j { C64::new(1.0, 0.0) } else { ZERO })
}

pub fn sigma_y() -> Operator {
    Operator::from_fn(2, |i, j| match (i, j) {
        (0, 1) => C64::new(0.0, -1.0),
        (1, 0) => C64::new(0.0, 1.0),
        _ => ZERO,
    })
}

pub fn sigma_z() -> Operator {
    Operator::diagonal(&[1.0, -1.0])
}

/// `σ⁻ = |1⟩⟨0|`, lowering `|↑⟩` to `|↓⟩`.
pub fn sigma_minus() -> Operator {
    Operator::from_fn(2, |i, j| if i == 1 && j == 0 { C64::new(1.0, 0.0) } else { ZERO })
}

/// Single-site operator placed on qubit `site` of an `n`-qubit register.
pub fn on_site(op: &Operator, site: usize, n: usize) -> Operator {
    Operator::embed(op, site, &vec![2; n]).expect("site within register")
}

/// Spin-1/2 components `(I_x, I_y, I_z)` of qubit `site`.
pub fn spin_ops(site: usize, n: usize) -> [Operator; 3] {
    [sigma_x(), sigma_y(), sigma_z()].map(|s| on_site(&s.scale_real(0.5), site, n))
}

//! ¹³C nuclear spins around an NV centre.
//!
//! Two probe subspaces are supported. With the probe in `m_s = ±1` the
//! hyperfine coupling enters only through `h_z I_z` and the bath precesses
//! under Zeeman plus secular dipolar terms. With the probe in `m_s = 0, -1`
//! half of the hyperfine field dresses the bath Hamiltonian and the noise
//! operator is `-½ Σ h·I`.

use serde::{Deserialize, Serialize};

use crate::bath::BathModel;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::spin::spin_ops;

/// Largest supported cluster (d = 64).
pub const MAX_SPINS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeSubspace {
    /// Probe levels `m_s = +1` and `m_s = -1`.
    PlusMinusOne,
    /// Probe levels `m_s = 0` and `m_s = -1`.
    ZeroMinusOne,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CentralSpinSpec {
    /// Hyperfine vectors `(h_x, h_y, h_z)` in angular-frequency units.
    pub hyperfine: Vec<[f64; 3]>,
    /// Nuclear positions in ångström, used to derive dipolar couplings.
    pub positions: Option<Vec<[f64; 3]>>,
    /// Explicit dipolar coupling matrix `D_jk`.
    pub dipolar: Option<Vec<Vec<f64>>>,
    /// Nuclear Larmor frequency ω₀.
    pub larmor: f64,
    pub subspace: ProbeSubspace,
    /// `D' r³` in the frequency unit times Å³; see [`crate::units::dipolar_prefactor_c13`].
    pub dipolar_prefactor: f64,
}

impl CentralSpinSpec {
    pub fn new(hyperfine: Vec<[f64; 3]>, larmor: f64, subspace: ProbeSubspace) -> Self {
        Self {
            hyperfine,
            positions: None,
            dipolar: None,
            larmor,
            subspace,
            dipolar_prefactor: crate::units::dipolar_prefactor_c13(),
        }
    }

    pub fn with_positions(mut self, positions: Vec<[f64; 3]>) -> Self {
        self.positions = Some(positions);
        self
    }

    pub fn with_dipolar(mut self, dipolar: Vec<Vec<f64>>) -> Self {
        self.dipolar = Some(dipolar);
        self
    }

    pub fn n_spins(&self) -> usize {
        self.hyperfine.len()
    }

    /// Resolved `D_jk`: from positions, from the explicit matrix, or zero.
    pub fn coupling_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.n_spins();
        let from_positions = match &self.positions {
            Some(p) => {
                if p.len() != n {
                    return Err(Error::InconsistentSpec(format!(
                        "{} positions for {} spins",
                        p.len(),
                        n
                    )));
                }
                Some(dipolar_from_positions(p, self.dipolar_prefactor)?)
            }
            None => None,
        };
        if let Some(d) = &self.dipolar {
            check_coupling_matrix(d, n)?;
            if let Some(p) = &from_positions {
                let scale = p
                    .iter()
                    .flatten()
                    .chain(d.iter().flatten())
                    .fold(0.0_f64, |m, x| m.max(x.abs()));
                let diff = p
                    .iter()
                    .flatten()
                    .zip(d.iter().flatten())
                    .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
                if diff > 1e-9 * scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::InconsistentSpec(
                        "explicit dipolar couplings disagree with positions".into(),
                    ));
                }
            }
            return Ok(d.clone());
        }
        Ok(from_positions.unwrap_or_else(|| vec![vec![0.0; n]; n]))
    }
}

/// `D_jk = D' (1 - 3cos²θ_jk) / r_jk³` with θ measured from the field axis `z`.
pub fn dipolar_from_positions(positions: &[[f64; 3]], prefactor: f64) -> Result<Vec<Vec<f64>>> {
    let n = positions.len();
    let mut d = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in (j + 1)..n {
            let r = [
                positions[k][0] - positions[j][0],
                positions[k][1] - positions[j][1],
                positions[k][2] - positions[j][2],
            ];
            let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
            if r2 == 0.0 {
                return Err(Error::InconsistentSpec(format!(
                    "spins {j} and {k} share a position"
                )));
            }
            let cos2 = r[2] * r[2] / r2;
            let value = prefactor / (r2 * r2.sqrt()) * (1.0 - 3.0 * cos2);
            d[j][k] = value;
            d[k][j] = value;
        }
    }
    Ok(d)
}

fn check_coupling_matrix(d: &[Vec<f64>], n: usize) -> Result<()> {
    if d.len() != n || d.iter().any(|row| row.len() != n) {
        return Err(Error::InconsistentSpec(format!(
            "dipolar matrix must be {n} x {n}"
        )));
    }
    for j in 0..n {
        if d[j][j] != 0.0 {
            return Err(Error::InconsistentSpec("dipolar matrix has nonzero diagonal".into()));
        }
        for k in 0..j {
            if (d[j][k] - d[k][j]).abs() > 1e-12 * d[j][k].abs().max(d[k][j].abs()) {
                return Err(Error::InconsistentSpec("dipolar matrix is not symmetric".into()));
            }
        }
    }
    Ok(())
}

/// Effective Larmor frequency `½ |h + 2ω₀ ẑ|` of a nucleus seen from the `0, -1` subspace.
pub fn effective_larmor(h: [f64; 3], larmor: f64) -> f64 {
    0.5 * (h[0] * h[0] + h[1] * h[1] + (h[2] + 2.0 * larmor).powi(2)).sqrt()
}

/// Squared hyperfine components parallel and perpendicular to the effective
/// field `h + 2ω₀ ẑ`.
pub fn hyperfine_split(h: [f64; 3], larmor: f64) -> (f64, f64) {
    let f = [h[0], h[1], h[2] + 2.0 * larmor];
    let fn2 = f[0] * f[0] + f[1] * f[1] + f[2] * f[2];
    let h2 = h[0] * h[0] + h[1] * h[1] + h[2] * h[2];
    if fn2 == 0.0 {
        return (0.0, h2);
    }
    let dot = h[0] * f[0] + h[1] * f[1] + h[2] * f[2];
    let par = dot * dot / fn2;
    (par, (h2 - par).max(0.0))
}

pub fn build_central_spin(spec: &CentralSpinSpec) -> Result<BathModel> {
    let n = spec.n_spins();
    if n == 0 {
        return Err(Error::EmptyInput("hyperfine vectors"));
    }
    if n > MAX_SPINS {
        return Err(Error::DimensionTooLarge {
            dim: 1 << n,
            limit: 1 << MAX_SPINS,
        });
    }
    if !(spec.larmor >= 0.0) {
        return Err(Error::OutOfRange {
            name: "larmor",
            value: spec.larmor,
        });
    }
    let coupling = spec.coupling_matrix()?;
    let d = 1usize << n;
    let spins: Vec<[Operator; 3]> = (0..n).map(|k| spin_ops(k, n)).collect();

    let mut a = Operator::zeros(d);
    let mut b = Operator::zeros(d);
    for (k, h) in spec.hyperfine.iter().enumerate() {
        let [ix, iy, iz] = &spins[k];
        match spec.subspace {
            ProbeSubspace::PlusMinusOne => {
                a = &a + &iz.scale_real(h[2]);
                b = &b + &iz.scale_real(-spec.larmor);
            }
            ProbeSubspace::ZeroMinusOne => {
                let hi = &(&ix.scale_real(h[0]) + &iy.scale_real(h[1])) + &iz.scale_real(h[2]);
                a = &a + &hi.scale_real(-0.5);
                let dressed = &hi + &iz.scale_real(2.0 * spec.larmor);
                b = &b + &dressed.scale_real(-0.5);
            }
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let djk = coupling[j][k];
            if djk == 0.0 {
                continue;
            }
            let zz = &spins[j][2] * &spins[k][2];
            let flip = &(&spins[j][0] * &spins[k][0]) + &(&spins[j][1] * &spins[k][1]);
            let term = &zz - &flip.scale_real(0.5);
            b = &b + &term.scale_real(djk);
        }
    }
    let label = match spec.subspace {
        ProbeSubspace::PlusMinusOne => format!("central-spin {n} x 13C (ms +-1)"),
        ProbeSubspace::ZeroMinusOne => format!("central-spin {n} x 13C (ms 0,-1)"),
    };
    Ok(BathModel::maximally_mixed(a, b)?.with_label(label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::effective_norm;

    #[test]
    fn effective_norm_of_diagonal_hyperfine() {
        let spec = CentralSpinSpec::new(
            vec![[0.0, 0.0, 0.3], [0.0, 0.0, -0.2], [0.0, 0.0, 0.1]],
            1.0,
            ProbeSubspace::PlusMinusOne,
        );
        let bath = build_central_spin(&spec).unwrap();
        assert!((effective_norm(&bath) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn single_spin_splitting_is_effective_larmor() {
        let h = [0.1, -0.05, 0.07];
        let w0 = 0.6;
        let spec = CentralSpinSpec::new(vec![h], w0, ProbeSubspace::ZeroMinusOne);
        let bath = build_central_spin(&spec).unwrap();
        let eig = crate::operator::hermitian_eigen(bath.b()).unwrap();
        let gap = eig.values[1] - eig.values[0];
        assert!((gap - effective_larmor(h, w0)).abs() < 1e-12);
    }

    #[test]
    fn conflicting_couplings_rejected() {
        let pos = vec![[0.0, 0.0, 0.0], [0.0, 0.0, 3.0]];
        let spec = CentralSpinSpec::new(vec![[0.0, 0.0, 0.1]; 2], 1.0, ProbeSubspace::PlusMinusOne)
            .with_positions(pos.clone())
            .with_dipolar(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(build_central_spin(&spec), Err(Error::InconsistentSpec(_))));

        let consistent = dipolar_from_positions(&pos, spec.dipolar_prefactor).unwrap();
        let ok = spec.clone().with_dipolar(consistent);
        assert!(build_central_spin(&ok).is_ok());
    }

    #[test]
    fn seven_spins_too_large() {
        let spec = CentralSpinSpec::new(vec![[0.0, 0.0, 0.1]; 7], 1.0, ProbeSubspace::PlusMinusOne);
        assert!(matches!(
            build_central_spin(&spec),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn dipolar_sign_follows_angle() {
        let d = dipolar_from_positions(&[[0.0; 3], [0.0, 0.0, 2.0], [2.0, 0.0, 0.0]], 8.0).unwrap();
        assert!((d[0][1] + 2.0).abs() < 1e-12);
        assert!((d[0][2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_hyperfine_has_no_transverse_part() {
        let (par, perp) = hyperfine_split([0.0, 0.0, 0.2], 0.5);
        assert!((par - 0.04).abs() < 1e-15);
        assert!(perp.abs() < 1e-15);
    }
}

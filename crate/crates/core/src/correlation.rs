//! Two-point correlations: the bath noise correlation `C(t)`, the exact
//! correlation of repeated RIM outcomes, its weak-measurement closed form,
//! and correlation spectroscopy with two isolated RIMs.

use serde::{Deserialize, Serialize};

use crate::bath::{BathModel, DissipationSpec};
use crate::channel::{
    bath_eigenbasis, build_rim_channel, generator_diagonal, spectral_decompose, ConcatenatedChannel,
    RimConfig, RimCycle,
};
use crate::error::{Error, Result};
use crate::operator::{vectorize, Operator, SuperOperator, VectorizedOperator, C64, ZERO};

/// Relative amplitude below which modes are dropped.
pub const MODE_PRUNE_REL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    ExactChannel,
    WeakApprox,
    CorrSpectroscopy,
    MonteCarlo,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::ExactChannel => "exact-channel",
            Provenance::WeakApprox => "weak-approx",
            Provenance::CorrSpectroscopy => "corr-spectroscopy",
            Provenance::MonteCarlo => "monte-carlo",
        }
    }
}

/// Samples `C̃(mτ)` for `m = 1..=N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub tau: f64,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    pub n_samples: Option<u64>,
    pub total_detection_time: f64,
}

impl CorrelationSeries {
    /// Series whose detection time follows from the provenance: `Nτ` for
    /// repeated measurements, `N(N+1)τ/2` for correlation spectroscopy.
    pub fn new(tau: f64, values: Vec<f64>, provenance: Provenance) -> Self {
        let n = values.len();
        let total_detection_time = match provenance {
            Provenance::CorrSpectroscopy => corr_detection_time(n, tau),
            _ => weak_detection_time(n, tau),
        };
        Self {
            tau,
            values,
            provenance,
            n_samples: None,
            total_detection_time,
        }
    }

    pub fn with_samples(mut self, n_samples: u64) -> Self {
        self.n_samples = Some(n_samples);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample times `mτ`.
    pub fn times(&self) -> Vec<f64> {
        (1..=self.values.len()).map(|m| m as f64 * self.tau).collect()
    }

    /// Elementwise sum of two series on the same grid.
    pub fn add(&self, other: &CorrelationSeries) -> Result<CorrelationSeries> {
        if self.values.len() != other.values.len() || self.tau != other.tau {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v += w;
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> CorrelationSeries {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn max_abs_deviation(&self, other: &CorrelationSeries) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Detection time `Nτ` of the repeated-measurement protocol.
pub fn weak_detection_time(n: usize, tau: f64) -> f64 {
    n as f64 * tau
}

/// Detection time `τ + 2τ + … + Nτ = N(N+1)τ/2` of correlation spectroscopy.
pub fn corr_detection_time(n: usize, tau: f64) -> f64 {
    (n as f64) * (n as f64 + 1.0) * 0.5 * tau
}

/// One oscillating component of the noise correlation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// `ω_ij = b_i - b_j`
    pub omega: f64,
    /// `|A_ji (Aρ)_ij|`
    pub amplitude: f64,
    /// `arg A_ji (Aρ)_ij`
    pub phase: f64,
    /// `|λ_ij|`, one for the back-action-free correlation.
    pub damping: f64,
    pub i: usize,
    pub j: usize,
}

impl Mode {
    /// Contribution `amplitude * cos(ω t - φ)`; the sum over modes equals
    /// `Re Σ z_ij e^{-iω_ij t}`.
    pub fn value_at(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t - self.phase).cos()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    pub modes: Vec<Mode>,
}

impl ModeTable {
    /// `C(t) = Σ_ij |z_ij| cos(ω_ij t - φ_ij)`
    pub fn correlation_at(&self, t: f64) -> f64 {
        self.modes.iter().map(|m| m.value_at(t)).sum()
    }

    /// Modes with positive frequency, merged over numerically equal ω.
    pub fn positive_frequencies(&self, tol: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        let mut freqs: Vec<f64> = self.modes.iter().map(|m| m.omega).filter(|w| *w > tol).collect();
        freqs.sort_by(f64::total_cmp);
        for w in freqs {
            if out.last().is_none_or(|last| w - last > tol) {
                out.push(w);
            }
        }
        out
    }

    pub fn max_abs_frequency(&self) -> f64 {
        self.modes.iter().map(|m| m.omega.abs()).fold(0.0, f64::max)
    }
}

/// Mode table of `C(t)` in the eigenbasis of `B`, without back-action.
pub fn mode_table(bath: &BathModel) -> Result<ModeTable> {
    build_modes(bath, None)
}

/// Mode table with perturbative damping `|λ_ij| = 1 + τ₁² ⟨⟨ij|ℒ̂|ij⟩⟩`.
pub fn weak_mode_table(bath: &BathModel, cfg: &RimConfig) -> Result<ModeTable> {
    if let Err(w) = cfg.check_weak(bath) {
        log::warn!("{w}");
    }
    build_modes(bath, Some(cfg.tau1))
}

fn build_modes(bath: &BathModel, tau1: Option<f64>) -> Result<ModeTable> {
    let (b, a, v) = bath_eigenbasis(bath)?;
    let d = bath.dim();
    let rho = &(&v.adjoint() * bath.rho()) * &v;
    let arho = &a * &rho;
    let diag = tau1.map(|_| generator_diagonal(&a));
    let mut modes = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let z = a.get(j, i) * arho.get(i, j);
            let damping = match (&diag, tau1) {
                (Some(g), Some(t)) => 1.0 + t * t * g[i * d + j],
                _ => 1.0,
            };
            modes.push(Mode {
                omega: b[i] - b[j],
                amplitude: z.norm(),
                phase: z.arg(),
                damping,
                i,
                j,
            });
        }
    }
    let max = modes.iter().map(|m| m.amplitude).fold(0.0, f64::max);
    modes.retain(|m| m.amplitude >= MODE_PRUNE_REL * max && m.amplitude > 0.0);
    Ok(ModeTable { modes })
}

/// Noise correlation `C(mτ)` for `m = 1..=n`.
pub fn analytic_correlation(bath: &BathModel, tau: f64, n: usize) -> Result<CorrelationSeries> {
    let modes = mode_table(bath)?;
    Ok(analytic_from_modes(&modes, tau, n))
}

pub fn analytic_from_modes(modes: &ModeTable, tau: f64, n: usize) -> CorrelationSeries {
    let values = (1..=n).map(|m| modes.correlation_at(m as f64 * tau)).collect();
    CorrelationSeries::new(tau, values, Provenance::Analytic)
}

/// `4τ₁² Σ |z_ij| |λ_ij|^{m-1} cos(mω_ij τ - φ_ij)`
pub fn weak_correlation(modes: &ModeTable, tau1: f64, tau: f64, n: usize) -> CorrelationSeries {
    let pref = 4.0 * tau1 * tau1;
    let values = (1..=n)
        .map(|m| {
            let t = m as f64 * tau;
            pref * modes
                .modes
                .iter()
                .map(|md| md.damping.powi(m as i32 - 1) * md.value_at(t))
                .sum::<f64>()
        })
        .collect();
    CorrelationSeries::new(tau, values, Provenance::WeakApprox)
}

/// How to evaluate `⟨⟨I|𝒫̂ Φ̂^{m-1} 𝒫̂|ρ⟩⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrelationPath {
    /// Spectral decomposition, falling back to iteration when not diagonalizable.
    Auto,
    Spectral,
    Iterated,
}

/// Exact correlation of RIM outcomes from the superoperator cycle.
pub fn exact_channel_correlation(
    ch: &ConcatenatedChannel,
    rho0: &Operator,
    n: usize,
) -> Result<CorrelationSeries> {
    exact_channel_correlation_with(ch, rho0, n, CorrelationPath::Auto)
}

pub fn exact_channel_correlation_with(
    ch: &ConcatenatedChannel,
    rho0: &Operator,
    n: usize,
    path: CorrelationPath,
) -> Result<CorrelationSeries> {
    if rho0.dim() != ch.dim() {
        return Err(Error::DimensionMismatch {
            expected: ch.dim(),
            found: rho0.dim(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyInput("number of lags"));
    }
    let values = match path {
        CorrelationPath::Iterated => iterated_values(ch, rho0, n)?,
        CorrelationPath::Spectral => spectral_values(ch, rho0, n)?,
        CorrelationPath::Auto => match spectral_values(ch, rho0, n) {
            Err(Error::NonDiagonalizable { condition }) => {
                log::info!("channel not diagonalizable (condition {condition:.2e}); iterating");
                iterated_values(ch, rho0, n)?
            }
            other => other?,
        },
    };
    Ok(CorrelationSeries::new(ch.tau, values, Provenance::ExactChannel))
}

fn spectral_values(ch: &ConcatenatedChannel, rho0: &Operator, n: usize) -> Result<Vec<f64>> {
    let dec = spectral_decompose(ch)?;
    let dim2 = dec.len();
    let row = ch.p_hat.trace_row();
    let col = ch.p_hat.apply(&vectorize(rho0))?;
    let coeffs: Vec<C64> = (0..dim2)
        .map(|k| {
            let left_row: C64 = (0..dim2).map(|i| row[i] * dec.right[(i, k)]).sum();
            let right_col: C64 = (0..dim2).map(|i| dec.left[(k, i)] * col.data()[i]).sum();
            left_row * right_col
        })
        .collect();
    let mut powers = vec![C64::new(1.0, 0.0); dim2];
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let v: C64 = coeffs.iter().zip(&powers).map(|(c, p)| c * p).sum();
        values.push(v.re);
        for (p, l) in powers.iter_mut().zip(&dec.eigenvalues) {
            *p *= l;
        }
    }
    Ok(values)
}

fn iterated_values(ch: &ConcatenatedChannel, rho0: &Operator, n: usize) -> Result<Vec<f64>> {
    let row = ch.p_hat.trace_row();
    let mut v = ch.p_hat.apply(&vectorize(rho0))?;
    let mut values = Vec::with_capacity(n);
    for m in 0..n {
        let c: C64 = row.iter().zip(v.data()).map(|(r, x)| r * x).sum();
        values.push(c.re);
        if m + 1 < n {
            v = ch.superop.apply(&v)?;
        }
    }
    Ok(values)
}

/// Exact correlation by iterating the cycle on operators: `d³` work per lag
/// instead of `d⁴`, for baths too large for superoperators.
pub fn cycle_correlation(cycle: &RimCycle, rho0: &Operator, n: usize) -> Result<CorrelationSeries> {
    if rho0.dim() != cycle.dim() {
        return Err(Error::DimensionMismatch {
            expected: cycle.dim(),
            found: rho0.dim(),
        });
    }
    let obs = cycle.observable();
    let mut x = cycle.apply(rho0, true)?;
    let mut values = Vec::with_capacity(n);
    for m in 0..n {
        values.push(trace_product(obs, &x));
        if m + 1 < n {
            x = cycle.apply(&x, false)?;
        }
    }
    Ok(CorrelationSeries::new(cycle.tau(), values, Provenance::ExactChannel))
}

/// `Re Tr(P X)`
fn trace_product(p: &Operator, x: &Operator) -> f64 {
    let d = p.dim();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += p.get(i, j) * x.get(j, i);
        }
    }
    acc.re
}

/// Correlation spectroscopy: two RIMs separated by `τ₂ + (m-1)τ` of free evolution.
pub fn correlation_spectroscopy(
    bath: &BathModel,
    cfg: &RimConfig,
    tau: f64,
    n: usize,
) -> Result<CorrelationSeries> {
    let rim = build_rim_channel(bath, cfg)?;
    let tau2 = tau - cfg.tau1;
    if tau2 < 0.0 {
        return Err(Error::OutOfRange {
            name: "tau - tau1",
            value: tau2,
        });
    }
    let (b, _, v) = bath_eigenbasis(bath)?;
    let d = bath.dim();
    let [m0, m1] = rim.ops();
    let x = &m0.sandwich(bath.rho()) - &m1.sandwich(bath.rho());
    let p = rim.outcome_observable();
    // In B's eigenbasis free evolution multiplies X_ij by e^{-iω_ij t}.
    let xb = &(&v.adjoint() * &x) * &v;
    let pb = &(&v.adjoint() * &p) * &v;
    let values = (1..=n)
        .map(|m| {
            let t = tau2 + (m - 1) as f64 * tau;
            let mut acc = ZERO;
            for i in 0..d {
                for j in 0..d {
                    acc += pb.get(j, i) * xb.get(i, j) * C64::from_polar(1.0, -(b[i] - b[j]) * t);
                }
            }
            acc.re
        })
        .collect();
    Ok(CorrelationSeries::new(tau, values, Provenance::CorrSpectroscopy))
}

/// Correlation spectroscopy with Lindblad free evolution between the RIMs.
pub fn correlation_spectroscopy_dissipative(
    bath: &BathModel,
    cfg: &RimConfig,
    tau: f64,
    n: usize,
    dissipation: &DissipationSpec,
) -> Result<CorrelationSeries> {
    let tau2 = tau - cfg.tau1;
    let rim = build_rim_channel(bath, cfg)?;
    let gen = crate::bath::lindbladian(bath, dissipation)?;
    let first = SuperOperator::exp_generator(&gen, tau2);
    let period = SuperOperator::exp_generator(&gen, tau);
    let [m0, m1] = rim.ops();
    let x = &m0.sandwich(bath.rho()) - &m1.sandwich(bath.rho());
    let obs = vectorize(&rim.outcome_observable().adjoint());
    let mut v: VectorizedOperator = first.apply(&vectorize(&x))?;
    let mut values = Vec::with_capacity(n);
    for m in 0..n {
        // Tr(P X) = Σ conj(P†)_mn X_mn
        let c: C64 = obs.data().iter().zip(v.data()).map(|(p, x)| p.conj() * x).sum();
        values.push(c.re);
        if m + 1 < n {
            v = period.apply(&v)?;
        }
    }
    Ok(CorrelationSeries::new(tau, values, Provenance::CorrSpectroscopy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::RimCycle;
    use crate::spin::{sigma_x, sigma_z};

    fn qubit_bath(a: f64, b: f64) -> BathModel {
        BathModel::maximally_mixed(sigma_x().scale_real(a), sigma_z().scale_real(b)).unwrap()
    }

    #[test]
    fn commuting_bath_has_constant_correlation() {
        let bath = BathModel::maximally_mixed(sigma_z().scale_real(0.3), sigma_z()).unwrap();
        let c = analytic_correlation(&bath, 0.7, 5).unwrap();
        for v in c.values {
            assert!((v - 0.09).abs() < 1e-15);
        }
    }

    #[test]
    fn uncoupled_bath_has_zero_measured_correlation() {
        let bath = qubit_bath(0.0, 1.0);
        let cfg = RimConfig::new(0.2).unwrap();
        let cycle = RimCycle::ideal(&bath, &cfg, 0.9).unwrap();
        let c = cycle_correlation(&cycle, bath.rho(), 8).unwrap();
        assert!(c.values.iter().all(|v| v.abs() < 1e-15));
        let corr = correlation_spectroscopy(&bath, &cfg, 0.9, 8).unwrap();
        assert!(corr.values.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn detection_time_bookkeeping() {
        assert_eq!(corr_detection_time(100, 1.0), 5050.0);
        assert_eq!(weak_detection_time(100, 1.0), 100.0);
        let s = CorrelationSeries::new(1.0, vec![0.0; 100], Provenance::CorrSpectroscopy);
        assert_eq!(s.total_detection_time, 5050.0);
    }

    #[test]
    fn single_mode_weak_series() {
        let modes = ModeTable {
            modes: vec![Mode {
                omega: 0.5,
                amplitude: 2.0,
                phase: 0.0,
                damping: 1.0,
                i: 0,
                j: 1,
            }],
        };
        let s = weak_correlation(&modes, 0.1, 0.3, 4);
        for (m, v) in s.values.iter().enumerate() {
            let t = (m + 1) as f64 * 0.3;
            assert!((v - 0.04 * 2.0 * (0.5 * t).cos()).abs() < 1e-15);
        }
        assert!(weak_correlation(&ModeTable::default(), 0.1, 0.3, 3)
            .values
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn damping_envelope_power() {
        let modes = ModeTable {
            modes: vec![Mode {
                omega: 0.0,
                amplitude: 1.0,
                phase: 0.0,
                damping: 0.99,
                i: 0,
                j: 0,
            }],
        };
        let s = weak_correlation(&modes, 0.5, 1.0, 100);
        assert!((s.values[99] - 0.99_f64.powi(99)).abs() < 1e-14);
        assert!((0.99_f64.powi(99) - 0.3697).abs() < 1e-4);
    }

    #[test]
    fn spectral_and_iterated_paths_agree() {
        let bath = qubit_bath(0.3, 1.0);
        let cfg = RimConfig::new(0.2).unwrap();
        let ch = RimCycle::ideal(&bath, &cfg, 0.9).unwrap().channel().unwrap();
        let s = exact_channel_correlation_with(&ch, bath.rho(), 40, CorrelationPath::Spectral).unwrap();
        let it = exact_channel_correlation_with(&ch, bath.rho(), 40, CorrelationPath::Iterated).unwrap();
        assert!(s.max_abs_deviation(&it) < 1e-12);
    }

    #[test]
    fn first_lag_is_phat_squared() {
        let bath = qubit_bath(0.3, 1.0);
        let cfg = RimConfig::new(0.2).unwrap();
        let ch = RimCycle::ideal(&bath, &cfg, 0.9).unwrap().channel().unwrap();
        let p2 = &ch.p_hat * &ch.p_hat;
        let expect = p2.apply(&vectorize(bath.rho())).unwrap().trace().re;
        let s = exact_channel_correlation(&ch, bath.rho(), 1).unwrap();
        assert!((s.values[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn dissipative_corr_matches_unitary_without_rates() {
        let bath = qubit_bath(0.3, 1.0);
        let cfg = RimConfig::new(0.2).unwrap();
        let u = correlation_spectroscopy(&bath, &cfg, 0.9, 12).unwrap();
        let d = correlation_spectroscopy_dissipative(&bath, &cfg, 0.9, 12, &DissipationSpec::default())
            .unwrap();
        assert!(u.max_abs_deviation(&d) < 1e-12);
    }
}

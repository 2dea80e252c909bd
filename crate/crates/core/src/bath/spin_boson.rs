//! Ohmic spin-boson bath, `A = Σ g_l (b_l + b_l†)` and `B = Σ ω_l b_l† b_l`,
//! discretized into `N_ω` modes and simulated mode by mode.
//!
//! Modes never couple to each other, so the noise correlation is an exact
//! sum over modes. For the measured correlation the per-mode sum drops the
//! cross-mode back-action terms; the full tensor product is available for
//! small systems to check that approximation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::BathModel;
use crate::channel::{build_rim_channel, FreeEvolver, KrausChannel, RimConfig, RimCycle};
use crate::correlation::{
    analytic_correlation, correlation_spectroscopy, cycle_correlation, weak_correlation,
    weak_mode_table, CorrelationSeries, Provenance,
};
use crate::error::{Error, Result};
use crate::operator::{
    expm_hermitian, hermitian_eigen_with_tol, hermitian_norm, kron, kron_mat,
    Operator, SuperOperator, C64, ONE, ZERO,
};

/// Default bound on the thermal weight outside the truncated Fock space.
pub const DEFAULT_TAIL: f64 = 1e-4;

/// Extra levels kept above the thermal cut for displacement leakage.
pub const DEFAULT_GUARD: usize = 2;

/// Largest full tensor-product dimension assembled by [`SpinBosonBath::full_tensor`].
pub const MAX_TENSOR_DIM: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinBosonSpec {
    /// Ohmic coupling α, `J(ω) = αω` below the cutoff.
    pub alpha: f64,
    pub omega_max: f64,
    pub n_modes: usize,
    /// Inverse temperature β.
    pub beta: f64,
    /// Fixed number of Fock levels per mode; chosen per mode when absent.
    pub n_max: Option<usize>,
    pub tail_tolerance: f64,
    pub guard_levels: usize,
}

impl SpinBosonSpec {
    pub fn new(alpha: f64, omega_max: f64, n_modes: usize, beta: f64) -> Self {
        Self {
            alpha,
            omega_max,
            n_modes,
            beta,
            n_max: None,
            tail_tolerance: DEFAULT_TAIL,
            guard_levels: DEFAULT_GUARD,
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = Some(n_max);
        self
    }

    pub fn with_tail_tolerance(mut self, tol: f64) -> Self {
        self.tail_tolerance = tol;
        self
    }

    pub fn with_guard_levels(mut self, guard: usize) -> Self {
        self.guard_levels = guard;
        self
    }

    /// Guard levels covering the heating from `n_rims` measurement kicks.
    ///
    /// Each RIM displaces a mode by about `g τ₁`, so the occupation drifts up
    /// by roughly `n_rims (g τ₁)²`; the guard is eight times the largest drift
    /// plus the default margin.
    pub fn back_action_guard(&self, tau1: f64, n_rims: usize) -> usize {
        let g = self.couplings().into_iter().fold(0.0, f64::max);
        let drift = n_rims as f64 * (g * tau1).powi(2);
        (8.0 * drift).ceil() as usize + DEFAULT_GUARD
    }

    pub fn spacing(&self) -> f64 {
        self.omega_max / self.n_modes as f64
    }

    /// `ω_l = l Δω`, `l = 1..=N_ω`
    pub fn frequencies(&self) -> Vec<f64> {
        let dw = self.spacing();
        (1..=self.n_modes).map(|l| l as f64 * dw).collect()
    }

    /// `g_l = √(α ω_l Δω)`
    pub fn couplings(&self) -> Vec<f64> {
        let dw = self.spacing();
        self.frequencies()
            .into_iter()
            .map(|w| (self.alpha * w * dw).sqrt())
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let checks = [
            ("alpha", self.alpha, self.alpha >= 0.0),
            ("omega_max", self.omega_max, self.omega_max > 0.0),
            ("beta", self.beta, self.beta > 0.0 && self.beta.is_finite()),
            (
                "tail_tolerance",
                self.tail_tolerance,
                self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0,
            ),
        ];
        for (name, value, ok) in checks {
            if !ok {
                return Err(Error::OutOfRange { name, value });
            }
        }
        if self.n_modes == 0 {
            return Err(Error::EmptyInput("boson modes"));
        }
        if let Some(n) = self.n_max {
            if n < 2 {
                return Err(Error::OutOfRange {
                    name: "n_max",
                    value: n as f64,
                });
            }
        }
        Ok(())
    }
}

/// Bose-Einstein occupation `1 / (e^{βω} - 1)`.
pub fn mean_occupation(beta: f64, omega: f64) -> f64 {
    1.0 / (beta * omega).exp_m1()
}

/// `2n̄ + 1 = coth(βω/2)`, the weight of mode `ω` in the noise spectrum.
pub fn thermal_factor(beta: f64, omega: f64) -> f64 {
    2.0 * mean_occupation(beta, omega) + 1.0
}

/// Smallest level count whose thermal tail `e^{-βω n}` is at most `tol`.
pub fn thermal_cut(beta: f64, omega: f64, tol: f64) -> usize {
    ((1.0 / tol).ln() / (beta * omega)).ceil().max(1.0) as usize
}

/// One truncated oscillator mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BosonMode {
    pub omega: f64,
    pub coupling: f64,
    pub beta: f64,
    /// Fock levels kept.
    pub levels: usize,
    /// Levels carrying all but the tail tolerance of the thermal weight.
    pub occupied_levels: usize,
}

impl BosonMode {
    /// Mode with levels chosen by the thermal rule (`tail`, `guard`).
    pub fn with_rule(omega: f64, coupling: f64, beta: f64, tail: f64, guard: usize) -> Self {
        let cut = thermal_cut(beta, omega, tail);
        Self {
            omega,
            coupling,
            beta,
            levels: cut + guard,
            occupied_levels: cut,
        }
    }

    pub fn thermal_factor(&self) -> f64 {
        thermal_factor(self.beta, self.omega)
    }

    /// Bath model of this mode alone.
    pub fn bath(&self) -> Result<BathModel> {
        let n = self.levels;
        let b = annihilation(n);
        let a = (&b + &b.adjoint()).scale_real(self.coupling);
        let h = number(n).scale_real(self.omega);
        let weights: Vec<f64> = (0..n).map(|k| (-self.beta * self.omega * k as f64).exp()).collect();
        let z: f64 = weights.iter().sum();
        let rho = Operator::diagonal(&weights.iter().map(|w| w / z).collect::<Vec<_>>());
        let cut = self.occupied_levels.min(n);
        let occupied = Operator::from_fn(cut, |i, j| a.get(i, j));
        let norm = hermitian_norm(&occupied)?;
        Ok(BathModel::new(a, h, rho)?
            .with_effective_norm(norm)
            .with_label(format!("boson mode w={}", self.omega)))
    }
}

/// Truncated annihilation operator on `n` levels.
pub fn annihilation(n: usize) -> Operator {
    Operator::from_fn(n, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

fn number(n: usize) -> Operator {
    Operator::diagonal(&(0..n).map(|k| k as f64).collect::<Vec<_>>())
}

/// A spin-boson bath stored as independent single-mode baths.
#[derive(Clone, Debug)]
pub struct SpinBosonBath {
    pub spec: SpinBosonSpec,
    pub modes: Vec<BosonMode>,
    baths: Vec<BathModel>,
    a_norm_eff: f64,
}

pub fn build_spin_boson(spec: &SpinBosonSpec) -> Result<SpinBosonBath> {
    spec.validate()?;
    let mut modes = Vec::with_capacity(spec.n_modes);
    for (w, g) in spec.frequencies().into_iter().zip(spec.couplings()) {
        let rule = BosonMode::with_rule(w, g, spec.beta, spec.tail_tolerance, spec.guard_levels);
        let mode = match spec.n_max {
            None => rule,
            Some(n) => {
                if (-spec.beta * w * n as f64).exp() > spec.tail_tolerance {
                    return Err(Error::TruncationInsufficient {
                        required: rule.levels,
                    });
                }
                BosonMode {
                    levels: n,
                    occupied_levels: rule.occupied_levels.min(n),
                    ..rule
                }
            }
        };
        modes.push(mode);
    }
    let baths = modes.iter().map(BosonMode::bath).collect::<Result<Vec<_>>>()?;
    // Spectra of commuting terms on separate factors add, and each is symmetric.
    let a_norm_eff = baths.iter().map(BathModel::a_norm_eff).sum();
    Ok(SpinBosonBath {
        spec: spec.clone(),
        modes,
        baths,
        a_norm_eff,
    })
}

impl SpinBosonBath {
    pub fn mode_baths(&self) -> &[BathModel] {
        &self.baths
    }

    pub fn a_norm_eff(&self) -> f64 {
        self.a_norm_eff
    }

    /// `Σ_l g_l² (2n̄_l + 1) cos(ω_l t)` for the untruncated oscillators.
    pub fn closed_form_correlation(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| m.coupling * m.coupling * m.thermal_factor() * (m.omega * t).cos())
            .sum()
    }

    /// Noise correlation of the truncated modes, summed.
    pub fn analytic_correlation(&self, tau: f64, n: usize) -> Result<CorrelationSeries> {
        self.sum_over_modes(|bath| analytic_correlation(bath, tau, n))
    }

    /// Exact measured correlation summed over modes (cross-mode back-action dropped).
    pub fn exact_correlation(&self, cfg: &RimConfig, tau: f64, n: usize) -> Result<CorrelationSeries> {
        self.sum_over_modes(|bath| {
            let cycle = RimCycle::ideal(bath, cfg, tau)?;
            cycle_correlation(&cycle, bath.rho(), n)
        })
    }

    /// Weak-measurement closed form summed over modes.
    pub fn weak_correlation(&self, cfg: &RimConfig, tau: f64, n: usize) -> Result<CorrelationSeries> {
        self.sum_over_modes(|bath| {
            let modes = weak_mode_table(bath, cfg)?;
            Ok(weak_correlation(&modes, cfg.tau1, tau, n))
        })
    }

    pub fn correlation_spectroscopy(
        &self,
        cfg: &RimConfig,
        tau: f64,
        n: usize,
    ) -> Result<CorrelationSeries> {
        self.sum_over_modes(|bath| correlation_spectroscopy(bath, cfg, tau, n))
    }

    fn sum_over_modes(
        &self,
        f: impl Fn(&BathModel) -> Result<CorrelationSeries> + Sync,
    ) -> Result<CorrelationSeries> {
        // Collect in mode order so the floating-point sum is independent of scheduling.
        let parts: Vec<CorrelationSeries> = self
            .baths
            .par_iter()
            .map(&f)
            .collect::<Result<Vec<_>>>()?;
        let mut iter = parts.into_iter();
        let mut total = iter.next().ok_or(Error::EmptyInput("boson modes"))?;
        for p in iter {
            total = total.add(&p)?;
        }
        if total.provenance == Provenance::Analytic {
            total.total_detection_time = crate::correlation::weak_detection_time(total.len(), total.tau);
        }
        Ok(total)
    }

    /// All modes on the full tensor-product space, in the thermal product state.
    pub fn full_tensor(&self) -> Result<BathModel> {
        let dim: usize = self.modes.iter().map(|m| m.levels).product();
        if dim > MAX_TENSOR_DIM {
            return Err(Error::DimensionTooLarge {
                dim,
                limit: MAX_TENSOR_DIM,
            });
        }
        let dims: Vec<usize> = self.modes.iter().map(|m| m.levels).collect();
        let mut a = Operator::zeros(dim);
        let mut b = Operator::zeros(dim);
        let mut rho = Operator::identity(1);
        for (l, bath) in self.baths.iter().enumerate() {
            a = &a + &Operator::embed(bath.a(), l, &dims)?;
            b = &b + &Operator::embed(bath.b(), l, &dims)?;
            rho = kron(&rho, bath.rho());
        }
        Ok(BathModel::new(a, b, rho)?
            .with_effective_norm(self.a_norm_eff)
            .with_label(format!("spin-boson {} modes (full tensor)", self.modes.len())))
    }
}

/// Displacement generator `D = (g / iω) [b† δ - b δ*]` with `δ = e^{iωτ₁} - 1`.
pub fn displacement_generator(mode: &BosonMode, levels: usize, tau1: f64) -> Operator {
    let b = annihilation(levels);
    let delta = C64::from_polar(1.0, mode.omega * tau1) - ONE;
    let pref = C64::new(mode.coupling / mode.omega, 0.0) / C64::new(0.0, 1.0);
    let inner = &b.adjoint().scale(delta) - &b.scale(delta.conj());
    inner.scale(pref)
}

/// c-number `Ω₂ = i (g²/ω²)(ωτ₁ - sin ωτ₁)` from the second-order Magnus term.
pub fn magnus_phase(mode: &BosonMode, tau1: f64) -> C64 {
    let x = mode.omega * tau1;
    C64::new(0.0, mode.coupling * mode.coupling / (mode.omega * mode.omega) * (x - x.sin()))
}

/// Kraus operators from the exact displacement form
/// `U_α = e^{-iBτ₁} e^{-i(-1)^α D} e^{Ω₂}`, on `mode.levels + pad` levels.
pub fn exact_boson_kraus(mode: &BosonMode, cfg: &RimConfig, pad: usize) -> Result<KrausChannel> {
    let n = mode.levels + pad;
    let d_op = displacement_generator(mode, n, cfg.tau1);
    let free = expm_hermitian(&number(n).scale_real(mode.omega), cfg.tau1)?;
    let phase = magnus_phase(mode, cfg.tau1).exp();
    let u0 = (&free * &expm_hermitian(&d_op, 1.0)?).scale(phase);
    let u1 = (&free * &expm_hermitian(&d_op, -1.0)?).scale(phase);
    let e = C64::from_polar(1.0, cfg.delta_phi);
    let shifted = u1.scale(e);
    KrausChannel::new(
        (&u0 - &shifted).scale_real(0.5),
        (&u0 + &shifted).scale_real(0.5),
    )
}

/// Cycle channel `Û_B(τ₂) (W ⊗ W*) cos(𝒟̂)` with `W = e^{-iBτ₁}` and
/// `𝒟̂ = D ⊗ I - I ⊗ Dᵀ`, built on `levels + pad` levels and restricted to
/// the lowest `levels`.
pub fn exact_boson_channel(
    mode: &BosonMode,
    cfg: &RimConfig,
    tau2: f64,
    pad: usize,
) -> Result<SuperOperator> {
    let required = thermal_cut(mode.beta, mode.omega, DEFAULT_TAIL);
    if mode.levels < required {
        return Err(Error::TruncationInsufficient { required });
    }
    let n = mode.levels + pad;
    let d_op = displacement_generator(mode, n, cfg.tau1);
    // 𝒟̂ is diagonal in the basis v_a ⊗ v̄_b with eigenvalues d_a - d_b.
    let eig = hermitian_eigen_with_tol(&d_op, 1e-10)?;
    let k = kron_mat(eig.vectors.mat(), eig.vectors.conj().mat());
    let mut scaled = k.clone();
    for a in 0..n {
        for b in 0..n {
            let c = (eig.values[a] - eig.values[b]).cos();
            scaled.col_mut(a * n + b).iter_mut().for_each(|z| *z *= c);
        }
    }
    let mut full = &scaled * k.adjoint();
    // Û_B is diagonal in the Fock basis.
    let t = cfg.tau1 + tau2;
    for i in 0..n {
        for j in 0..n {
            let phase = C64::from_polar(1.0, -mode.omega * t * (i as f64 - j as f64));
            full.row_mut(i * n + j).iter_mut().for_each(|z| *z *= phase);
        }
    }
    let full = SuperOperator::from_mat(n, full)?;
    Ok(restrict_superop(&full, mode.levels))
}

/// Block of a superoperator acting on the lowest `levels` basis states.
pub fn restrict_superop(s: &SuperOperator, levels: usize) -> SuperOperator {
    let n = s.dim();
    let l = levels;
    let m = faer::Mat::from_fn(l * l, l * l, |r, c| {
        let (i, j) = (r / l, r % l);
        let (k, q) = (c / l, c % l);
        s.get(i * n + j, k * n + q)
    });
    SuperOperator::from_mat(l, m).expect("square block")
}

/// Generic cycle channel for one mode on `levels + pad` levels, restricted.
pub fn generic_boson_channel(
    mode: &BosonMode,
    cfg: &RimConfig,
    tau2: f64,
    pad: usize,
) -> Result<SuperOperator> {
    let padded = BosonMode {
        levels: mode.levels + pad,
        ..*mode
    };
    let bath = padded.bath()?;
    let rim = build_rim_channel(&bath, cfg)?;
    let cycle = RimCycle::new(rim, FreeEvolver::ideal(&bath, tau2)?, cfg.tau1 + tau2)?;
    Ok(restrict_superop(&cycle.channel()?.superop, mode.levels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_of_first_mode() {
        let spec = SpinBosonSpec::new(0.4, 2.0, 48, 1.0);
        let g = spec.couplings();
        assert!((g[0] - 0.026_352_313_834_736_5).abs() < 1e-12);
    }

    #[test]
    fn thermal_factor_at_unit_temperature() {
        assert!((thermal_factor(1.0, 1.0) - 2.163_953_413_738_653).abs() < 1e-12);
    }

    #[test]
    fn truncation_rule_for_unit_mode() {
        let mode = BosonMode::with_rule(1.0, 0.1, 1.0, DEFAULT_TAIL, DEFAULT_GUARD);
        assert_eq!(mode.occupied_levels, 10);
        assert_eq!(mode.levels, 12);
    }

    #[test]
    fn fixed_truncation_too_small() {
        let spec = SpinBosonSpec::new(0.4, 2.0, 2, 1.0).with_n_max(4);
        match build_spin_boson(&spec) {
            Err(Error::TruncationInsufficient { required }) => assert_eq!(required, 12),
            other => panic!("{other:?}"),
        }
        assert!(build_spin_boson(&SpinBosonSpec::new(0.4, 2.0, 2, 1.0).with_n_max(1)).is_err());
    }

    #[test]
    fn zero_temperature_amplitude_is_coupling_squared() {
        let spec = SpinBosonSpec::new(0.4, 2.0, 2, 50.0);
        let bath = build_spin_boson(&spec).unwrap();
        let c0 = bath.analytic_correlation(1e-9, 1).unwrap().values[0];
        let g2: f64 = spec.couplings().iter().map(|g| g * g).sum();
        assert!((c0 - g2).abs() < 1e-12 * g2.max(1.0));
    }

    #[test]
    fn magnus_phase_long_time_limit() {
        let mode = BosonMode::with_rule(1.0, 0.1, 1.0, DEFAULT_TAIL, DEFAULT_GUARD);
        let p = magnus_phase(&mode, 1e3);
        assert!((p.im / 1e3 - 0.01).abs() < 1e-5);
    }

    #[test]
    fn displacement_generator_is_hermitian_and_small_time_linear() {
        let mode = BosonMode::with_rule(1.0, 0.1, 1.0, DEFAULT_TAIL, DEFAULT_GUARD);
        let d = displacement_generator(&mode, 8, 1e-4);
        assert!(d.hermiticity_defect() < 1e-15);
        let b = annihilation(8);
        let a = (&b + &b.adjoint()).scale_real(0.1 * 1e-4);
        assert!((&d - &a).max_abs() < 1e-8);
    }

    #[test]
    fn zero_time_measurement_is_identity() {
        let mode = BosonMode::with_rule(1.0, 0.1, 1.0, DEFAULT_TAIL, DEFAULT_GUARD);
        let cfg = RimConfig::new(0.0).unwrap();
        let s = exact_boson_channel(&mode, &cfg, 0.0, 4).unwrap();
        assert!(s.approx_eq(&SuperOperator::identity(mode.levels), 1e-12));
    }
}

//! Channels induced on the bath by repeated Ramsey interferometry
//! measurements (RIMs) and free evolution.

use std::f64::consts::FRAC_PI_2;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::bath::BathModel;
use crate::error::{Error, Result};
use crate::operator::{
    commutator_superop, expm_hermitian, hermitian_eigen, inverse, Operator, SuperOperator, C64,
    ONE, ZERO,
};

/// Default bound on `tau1 * ‖A‖_eff` for the weak-measurement regime.
pub const WEAK_THRESHOLD: f64 = 0.3;

/// Eigenvector-matrix condition estimate above which a channel is treated
/// as non-diagonalizable.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Tolerance for Kraus completeness.
pub const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RimConfig {
    /// Probe-bath interaction time τ₁.
    pub tau1: f64,
    /// Phase difference Δφ of the two π/2 pulses.
    pub delta_phi: f64,
    /// Bound on `tau1 * ‖A‖_eff` for the weak flag.
    pub weak_threshold: f64,
}

impl RimConfig {
    pub fn new(tau1: f64) -> Result<Self> {
        if !(tau1 >= 0.0) || !tau1.is_finite() {
            return Err(Error::OutOfRange {
                name: "tau1",
                value: tau1,
            });
        }
        Ok(Self {
            tau1,
            delta_phi: FRAC_PI_2,
            weak_threshold: WEAK_THRESHOLD,
        })
    }

    pub fn with_delta_phi(mut self, delta_phi: f64) -> Self {
        self.delta_phi = delta_phi;
        self
    }

    pub fn with_weak_threshold(mut self, threshold: f64) -> Self {
        self.weak_threshold = threshold;
        self
    }

    /// Measurement strength `tau1 * ‖A‖_eff`.
    pub fn strength(&self, bath: &BathModel) -> f64 {
        self.tau1 * bath.a_norm_eff()
    }

    pub fn is_weak(&self, bath: &BathModel) -> bool {
        self.strength(bath) <= self.weak_threshold
    }

    /// `Err(WeakMeasurementViolation)` when outside the weak regime.
    pub fn check_weak(&self, bath: &BathModel) -> Result<()> {
        if self.is_weak(bath) {
            Ok(())
        } else {
            Err(Error::WeakMeasurementViolation {
                strength: self.strength(bath),
            })
        }
    }
}

/// A two-outcome measurement given by its Kraus operators.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    ops: [Operator; 2],
}

impl KrausChannel {
    pub fn new(m0: Operator, m1: Operator) -> Result<Self> {
        if m0.dim() != m1.dim() {
            return Err(Error::DimensionMismatch {
                expected: m0.dim(),
                found: m1.dim(),
            });
        }
        let ch = Self { ops: [m0, m1] };
        let defect = ch.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidState(format!(
                "Kraus operators are incomplete (defect {defect:.3e})"
            )));
        }
        Ok(ch)
    }

    pub fn ops(&self) -> &[Operator; 2] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    /// `max |Σ M†M - I|`
    pub fn completeness_defect(&self) -> f64 {
        let d = self.dim();
        let sum = &(&self.ops[0].adjoint() * &self.ops[0]) + &(&self.ops[1].adjoint() * &self.ops[1]);
        (&sum - &Operator::identity(d)).max_abs()
    }

    /// `M̂_a = M_a ⊗ M_a*`
    pub fn measurement_superops(&self) -> [SuperOperator; 2] {
        [
            SuperOperator::unitary(&self.ops[0]),
            SuperOperator::unitary(&self.ops[1]),
        ]
    }

    pub fn superop(&self) -> SuperOperator {
        let [m0, m1] = self.measurement_superops();
        &m0 + &m1
    }

    /// Outcome probabilities `Tr(M_a rho M_a†)`.
    pub fn probabilities(&self, rho: &Operator) -> [f64; 2] {
        self.ops
            .each_ref()
            .map(|m| (&(&m.adjoint() * m) * rho).trace().re)
    }

    /// `Σ_a (-1)^a M_a† M_a`, the observable whose expectation is `⟨r⟩`.
    pub fn outcome_observable(&self) -> Operator {
        let e0 = &self.ops[0].adjoint() * &self.ops[0];
        let e1 = &self.ops[1].adjoint() * &self.ops[1];
        &e0 - &e1
    }
}

/// `M_a = [U₀ - (-1)^a e^{iΔφ} U₁] / 2` with `U_α = exp(-i((-1)^α A + B) τ₁)`.
pub fn build_rim_channel(bath: &BathModel, cfg: &RimConfig) -> Result<KrausChannel> {
    let a = bath.a();
    let b = bath.b();
    let u0 = expm_hermitian(&(a + b), cfg.tau1)?;
    let u1 = expm_hermitian(&(b - a), cfg.tau1)?;
    let phase = C64::from_polar(1.0, cfg.delta_phi);
    let half = C64::new(0.5, 0.0);
    let shifted = u1.scale(phase);
    let m0 = (&u0 - &shifted).scale(half);
    let m1 = (&u0 + &shifted).scale(half);
    KrausChannel::new(m0, m1)
}

/// `Û_B = U_B ⊗ U_B*` with `U_B = exp(-i B τ₂)`.
pub fn build_free_evolution_channel(bath: &BathModel, tau2: f64) -> Result<SuperOperator> {
    if !(tau2 >= 0.0) {
        return Err(Error::OutOfRange {
            name: "tau2",
            value: tau2,
        });
    }
    Ok(SuperOperator::unitary(&expm_hermitian(bath.b(), tau2)?))
}

/// How the bath evolves between two RIMs.
#[derive(Clone, Debug)]
pub enum FreeEvolver {
    /// Outcome-independent unitary.
    Unitary(Operator),
    /// Unitary selected by the last outcome: `plus` after `r = +1`, `minus` after `r = -1`.
    Conditional { plus: Operator, minus: Operator },
    /// Outcome-independent channel, e.g. dissipative evolution.
    Channel(SuperOperator),
}

impl FreeEvolver {
    pub fn ideal(bath: &BathModel, tau2: f64) -> Result<Self> {
        Ok(FreeEvolver::Unitary(expm_hermitian(bath.b(), tau2)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            FreeEvolver::Unitary(u) => u.dim(),
            FreeEvolver::Conditional { plus, .. } => plus.dim(),
            FreeEvolver::Channel(s) => s.dim(),
        }
    }

    /// Unitary applied after outcome `a` (0 ↔ r = +1), if the evolution is unitary.
    pub fn unitary_for(&self, outcome: usize) -> Option<&Operator> {
        match self {
            FreeEvolver::Unitary(u) => Some(u),
            FreeEvolver::Conditional { plus, minus } => Some(if outcome == 0 { plus } else { minus }),
            FreeEvolver::Channel(_) => None,
        }
    }

    pub fn superop_for(&self, outcome: usize) -> SuperOperator {
        match self {
            FreeEvolver::Channel(s) => s.clone(),
            _ => SuperOperator::unitary(self.unitary_for(outcome).expect("unitary branch")),
        }
    }

    pub fn apply(&self, rho: &Operator, outcome: usize) -> Result<Operator> {
        match self {
            FreeEvolver::Channel(s) => s.apply_op(rho),
            _ => Ok(self.unitary_for(outcome).expect("unitary branch").sandwich(rho)),
        }
    }
}

/// One measurement cycle in superoperator form.
#[derive(Clone, Debug)]
pub struct ConcatenatedChannel {
    /// `Φ̂ = Σ_a F̂_a M̂_a`
    pub superop: SuperOperator,
    pub measurement_superops: [SuperOperator; 2],
    /// `𝒫̂ = Σ_a (-1)^a F̂_a M̂_a`
    pub p_hat: SuperOperator,
    /// Cycle period τ = τ₁ + τ₂.
    pub tau: f64,
}

impl ConcatenatedChannel {
    pub fn dim(&self) -> usize {
        self.superop.dim()
    }
}

/// `Φ̂ = free · (M̂₀ + M̂₁)` and `𝒫̂ = free · (M̂₀ - M̂₁)`.
pub fn concatenate(rim: &KrausChannel, free: &SuperOperator, tau: f64) -> Result<ConcatenatedChannel> {
    concatenate_conditional(rim, [free, free], tau)
}

/// Cycle with an outcome-dependent free step `F̂_a` after outcome `a`.
pub fn concatenate_conditional(
    rim: &KrausChannel,
    free: [&SuperOperator; 2],
    tau: f64,
) -> Result<ConcatenatedChannel> {
    for f in free {
        if f.dim() != rim.dim() {
            return Err(Error::DimensionMismatch {
                expected: rim.dim(),
                found: f.dim(),
            });
        }
    }
    let m = rim.measurement_superops();
    let b0 = free[0] * &m[0];
    let b1 = free[1] * &m[1];
    Ok(ConcatenatedChannel {
        superop: &b0 + &b1,
        p_hat: &b0 - &b1,
        measurement_superops: m,
        tau,
    })
}

/// Eigen-decomposition `Φ̂ = Σ_k λ_k |R_k⟩⟩⟨⟨L_k|`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<C64>,
    /// Columns are right eigenvectors, normalized to unit length.
    pub right: Mat<C64>,
    /// Rows are left eigenvectors with `⟨⟨L_j|R_k⟩⟩ = δ_jk`.
    pub left: Mat<C64>,
    /// `‖V‖_F ‖V⁻¹‖_F / n`, equal to 1 for unitary eigenvector matrices.
    pub condition_estimate: f64,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `Σ_k λ_k |R_k⟩⟩⟨⟨L_k|`
    pub fn reconstruct(&self, dim: usize) -> SuperOperator {
        let n = self.len();
        let scaled = Mat::from_fn(n, n, |i, k| self.right[(i, k)] * self.eigenvalues[k]);
        SuperOperator::from_mat(dim, &scaled * &self.left).expect("square decomposition")
    }

    /// `max |⟨⟨L_j|R_k⟩⟩ - δ_jk|`
    pub fn biorthogonality_defect(&self) -> f64 {
        let g = &self.left * &self.right;
        let n = self.len();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for k in 0..n {
                let target = if j == k { ONE } else { ZERO };
                worst = worst.max((g[(j, k)] - target).norm());
            }
        }
        worst
    }
}

pub fn spectral_decompose(ch: &ConcatenatedChannel) -> Result<SpectralDecomposition> {
    decompose_superop(&ch.superop)
}

/// Diagonalizes a superoperator; eigenvalues sorted by modulus descending,
/// then by phase ascending.
pub fn decompose_superop(s: &SuperOperator) -> Result<SpectralDecomposition> {
    let n = s.dim() * s.dim();
    let evd = s
        .mat()
        .eigen()
        .map_err(|e| Error::Backend(format!("{e:?}")))?;
    let values: Vec<C64> = (0..n).map(|k| evd.S()[k]).collect();

    // Modulus is quantized so that numerically tied moduli fall back to the phase.
    let mut order: Vec<usize> = (0..n).collect();
    let key = |k: usize| (-(values[k].norm() * 1e10).round() as i64, values[k].arg());
    order.sort_by(|&x, &y| {
        let (mx, px) = key(x);
        let (my, py) = key(y);
        mx.cmp(&my).then(px.total_cmp(&py)).then(x.cmp(&y))
    });

    let u = evd.U();
    let mut right = Mat::<C64>::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let norm = (0..n).map(|i| u[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            right[(i, col)] = u[(i, k)] / norm;
        }
    }
    let mut left = inverse(right.as_ref());
    for k in 0..n {
        let overlap: C64 = (0..n).map(|i| left[(k, i)] * right[(i, k)]).sum();
        for i in 0..n {
            left[(k, i)] /= overlap;
        }
    }
    let condition_estimate = right.norm_l2() * left.norm_l2() / n as f64;
    if !condition_estimate.is_finite() || condition_estimate > CONDITION_LIMIT {
        return Err(Error::NonDiagonalizable {
            condition: condition_estimate,
        });
    }
    Ok(SpectralDecomposition {
        eigenvalues: order.iter().map(|&k| values[k]).collect(),
        right,
        left,
        condition_estimate,
    })
}

/// Assigns each eigenvector to a distinct pair `(i, j)` of the basis
/// `|ij⟩⟩ = |i⟩⟨j|` built from `basis` columns, greedily by largest overlap.
/// Returns, for each eigen-index `k`, the flat pair index `i * d + j`.
pub fn match_pair_basis(decomp: &SpectralDecomposition, basis: &Operator) -> Vec<usize> {
    let d = basis.dim();
    let n = d * d;
    let v = basis.mat();
    // ⟨⟨ij|R⟩⟩ = Σ_mn conj(v_mi) v_nj R_mn, i.e. (V† R V)_ij.
    let mut overlaps = Vec::with_capacity(n * n);
    for k in 0..n {
        let r = Mat::from_fn(d, d, |m, nn| decomp.right[(m * d + nn, k)]);
        let rot = v.adjoint() * &r * v;
        for p in 0..n {
            overlaps.push((rot[(p / d, p % d)].norm(), k, p));
        }
    }
    overlaps.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut assigned = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut remaining = n;
    for (_, k, p) in overlaps {
        if remaining == 0 {
            break;
        }
        if assigned[k] == usize::MAX && !used[p] {
            assigned[k] = p;
            used[p] = true;
            remaining -= 1;
        }
    }
    assigned
}

/// Generator of measurement back-action `ℒ̂ = -½ Â²` with `Â = A ⊗ I - I ⊗ Aᵀ`.
pub fn measurement_generator(a: &Operator) -> SuperOperator {
    let ahat = commutator_superop(a);
    (&ahat * &ahat).scale(C64::new(-0.5, 0.0))
}

/// Diagonal elements `⟨⟨ij|ℒ̂|ij⟩⟩ = -½ ‖[A, |i⟩⟨j|]‖²_F` in the basis where
/// `a_basis` is expressed, indexed `i * d + j`.
pub fn generator_diagonal(a_basis: &Operator) -> Vec<f64> {
    let d = a_basis.dim();
    let a2 = a_basis * a_basis;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            // (A²)_ii + (A²)_jj - 2 A_ii A_jj for Hermitian A
            let v = a2.get(i, i).re + a2.get(j, j).re - 2.0 * (a_basis.get(i, i) * a_basis.get(j, j)).re;
            out.push(-0.5 * v);
        }
    }
    out
}

/// Weak-measurement approximation of the cycle channel.
#[derive(Clone, Debug)]
pub struct PerturbativeChannel {
    /// `Û'_B (I + τ₁² ℒ̂)` with `Û'_B` over the full period τ.
    pub superop: SuperOperator,
    /// Set when `tau1 * ‖A‖_eff` exceeds the weak threshold.
    pub warning: Option<Error>,
}

pub fn perturbative_channel(bath: &BathModel, cfg: &RimConfig, tau: f64) -> Result<PerturbativeChannel> {
    let warning = cfg.check_weak(bath).err();
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    let free = build_free_evolution_channel(bath, tau)?;
    let gen = measurement_generator(bath.a());
    let step = &SuperOperator::identity(bath.dim()) + &gen.scale(C64::new(cfg.tau1 * cfg.tau1, 0.0));
    Ok(PerturbativeChannel {
        superop: &free * &step,
        warning,
    })
}

/// One RIM followed by free evolution, kept at the operator level so that
/// large baths never form `d² x d²` matrices.
#[derive(Clone, Debug)]
pub struct RimCycle {
    rim: KrausChannel,
    free: FreeEvolver,
    /// `U_a M_a` when the free step is unitary.
    combined: Option<[Operator; 2]>,
    observable: Operator,
    tau: f64,
}

impl RimCycle {
    pub fn new(rim: KrausChannel, free: FreeEvolver, tau: f64) -> Result<Self> {
        if free.dim() != rim.dim() {
            return Err(Error::DimensionMismatch {
                expected: rim.dim(),
                found: free.dim(),
            });
        }
        let combined = match &free {
            FreeEvolver::Channel(_) => None,
            _ => Some([0, 1].map(|a| free.unitary_for(a).unwrap() * &rim.ops()[a])),
        };
        let observable = rim.outcome_observable();
        Ok(Self {
            rim,
            free,
            combined,
            observable,
            tau,
        })
    }

    /// Cycle with ideal `exp(-i B τ₂)` free evolution.
    pub fn ideal(bath: &BathModel, cfg: &RimConfig, tau: f64) -> Result<Self> {
        let tau2 = tau - cfg.tau1;
        if tau2 < 0.0 {
            return Err(Error::OutOfRange {
                name: "tau - tau1",
                value: tau2,
            });
        }
        Self::new(build_rim_channel(bath, cfg)?, FreeEvolver::ideal(bath, tau2)?, tau)
    }

    pub fn rim(&self) -> &KrausChannel {
        &self.rim
    }

    pub fn free(&self) -> &FreeEvolver {
        &self.free
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.rim.dim()
    }

    /// `Σ_a (-1)^a M_a† M_a`
    pub fn observable(&self) -> &Operator {
        &self.observable
    }

    /// Branch `a`: measurement with outcome `a` followed by its free step.
    pub fn branch(&self, x: &Operator, a: usize) -> Result<Operator> {
        match &self.combined {
            Some(k) => Ok(k[a].sandwich(x)),
            None => self.free.apply(&self.rim.ops()[a].sandwich(x), a),
        }
    }

    /// `Φ̂ x` (`signed = false`) or `𝒫̂ x` (`signed = true`).
    pub fn apply(&self, x: &Operator, signed: bool) -> Result<Operator> {
        let b0 = self.branch(x, 0)?;
        let b1 = self.branch(x, 1)?;
        Ok(if signed { &b0 - &b1 } else { &b0 + &b1 })
    }

    /// The same cycle as a superoperator.
    pub fn channel(&self) -> Result<ConcatenatedChannel> {
        let f0 = self.free.superop_for(0);
        let f1 = self.free.superop_for(1);
        concatenate_conditional(&self.rim, [&f0, &f1], self.tau)
    }
}

/// Hermitian eigenbasis of `B`: eigenvalues and the rotated noise operator.
pub(crate) fn bath_eigenbasis(bath: &BathModel) -> Result<(Vec<f64>, Operator, Operator)> {
    let eig = hermitian_eigen(bath.b())?;
    let a = eig.to_eigenbasis(bath.a());
    Ok((eig.values.clone(), a, eig.vectors))
}

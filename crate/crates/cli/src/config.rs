//! Experiment configuration files.
//!
//! Times in the file are given in the unit named by `[units] time` and are
//! converted to microseconds before use; angular frequencies in the outputs
//! are in rad per microsecond. The dimensionless models (`qubit`,
//! `three-spin`, `spin-boson`) may use `time = "arb"`, which applies no scaling.

use std::path::PathBuf;

use qspec_core::bath::presets;
use qspec_core::bath::{build_central_spin, build_spin_boson, BathModel, CentralSpinSpec, ProbeSubspace};
use qspec_core::bath::{SpinBosonBath, SpinBosonSpec};
use qspec_core::compare::NoiseModel;
use qspec_core::spectrum::Window;
use qspec_core::trajectory::LagEstimator;
use qspec_core::units::{larmor_c13, mhz_to_angular};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub units: Units,
    pub bath: BathConfig,
    pub rim: RimSection,
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[default]
    Us,
    Ms,
    Ns,
    Arb,
}

impl TimeUnit {
    /// Factor converting the configured unit to microseconds.
    pub fn to_us(self) -> f64 {
        match self {
            TimeUnit::Us | TimeUnit::Arb => 1.0,
            TimeUnit::Ms => 1e3,
            TimeUnit::Ns => 1e-3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default)]
    pub time: TimeUnit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BathConfig {
    /// `A = a σ_x`, `B = b σ_z`.
    Qubit { a: f64, b: f64 },
    ThreeSpin,
    /// Five strongly coupled ¹³C spins, `m_s = ±1` probe.
    Cluster,
    /// Five weakly coupled ¹³C spins, `m_s = 0, -1` probe.
    DiluteFiveSpin,
    SingleSpin { h_khz: f64, theta_deg: f64, field_t: f64 },
    CentralSpin {
        /// Hyperfine vectors in MHz (cyclic).
        hyperfine_mhz: Vec<[f64; 3]>,
        field_t: f64,
        subspace: ProbeSubspace,
        #[serde(default)]
        positions: Option<Vec<[f64; 3]>>,
    },
    SpinBoson {
        alpha: f64,
        omega_max: f64,
        n_modes: usize,
        beta: f64,
        #[serde(default)]
        n_max: Option<usize>,
        #[serde(default)]
        tail_tolerance: Option<f64>,
        /// Fock levels above the thermal cut; sized from measurement heating when absent.
        #[serde(default)]
        guard_levels: Option<usize>,
    },
}

impl BathConfig {
    pub fn is_physical(&self) -> bool {
        !matches!(
            self,
            BathConfig::Qubit { .. } | BathConfig::ThreeSpin | BathConfig::SpinBoson { .. }
        )
    }
}

/// A built bath: either one finite-dimensional model or independent boson modes.
#[derive(Clone, Debug)]
pub enum Bath {
    Finite(BathModel),
    SpinBoson(SpinBosonBath),
}

impl BathConfig {
    pub fn build(&self) -> Result<Bath, CliError> {
        self.build_for_rims(None)
    }

    /// Builds the bath; `rims = (tau1, n)` sizes the boson guard levels for `n` RIMs.
    pub fn build_for_rims(&self, rims: Option<(f64, usize)>) -> Result<Bath, CliError> {
        let finite = |r: qspec_core::Result<BathModel>| r.map(Bath::Finite).map_err(CliError::from);
        match self {
            BathConfig::Qubit { a, b } => finite(presets::qubit(*a, *b)),
            BathConfig::ThreeSpin => finite(presets::three_spin()),
            BathConfig::Cluster => finite(presets::cluster()),
            BathConfig::DiluteFiveSpin => finite(presets::dilute_five_spin()),
            BathConfig::SingleSpin {
                h_khz,
                theta_deg,
                field_t,
            } => finite(presets::single_spin(*h_khz, *theta_deg, *field_t)),
            BathConfig::CentralSpin {
                hyperfine_mhz,
                field_t,
                subspace,
                positions,
            } => {
                let h = hyperfine_mhz.iter().map(|v| v.map(mhz_to_angular)).collect();
                let mut spec = CentralSpinSpec::new(h, larmor_c13(*field_t), *subspace);
                if let Some(p) = positions {
                    spec = spec.with_positions(p.clone());
                }
                finite(build_central_spin(&spec))
            }
            BathConfig::SpinBoson {
                alpha,
                omega_max,
                n_modes,
                beta,
                n_max,
                tail_tolerance,
                guard_levels,
            } => {
                let mut spec = SpinBosonSpec::new(*alpha, *omega_max, *n_modes, *beta);
                if let Some(n) = n_max {
                    spec = spec.with_n_max(*n);
                }
                if let Some(t) = tail_tolerance {
                    spec = spec.with_tail_tolerance(*t);
                }
                match (guard_levels, rims) {
                    (Some(g), _) => spec = spec.with_guard_levels(*g),
                    (None, Some((tau1, n))) => spec = spec.clone().with_guard_levels(spec.back_action_guard(tau1, n)),
                    (None, None) => {}
                }
                Ok(Bath::SpinBoson(build_spin_boson(&spec)?))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RimSection {
    pub tau1: f64,
    #[serde(default = "default_delta_phi")]
    pub delta_phi: f64,
}

fn default_delta_phi() -> f64 {
    std::f64::consts::FRAC_PI_2
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalMethod {
    /// Exact correlation of repeated RIM outcomes.
    #[default]
    Exact,
    /// Weak-measurement closed form.
    Weak,
    /// Bare noise correlation `C(t)`.
    Analytic,
    /// Two isolated RIMs per lag.
    Corr,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FreeMode {
    /// Probe reset before the free step: `exp(-iBτ₂)` for both outcomes.
    #[default]
    IdealB,
    /// Outcome-conditioned evolution, decoupled by CPMG when `dd_pulses > 0`.
    Conditional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Free evolution time between RIMs; exactly one of `tau2` and `tau` is given.
    #[serde(default)]
    pub tau2: Option<f64>,
    /// Cycle period `τ₁ + τ₂`.
    #[serde(default)]
    pub tau: Option<f64>,
    pub n_points: usize,
    #[serde(default)]
    pub method: SignalMethod,
    #[serde(default)]
    pub free: FreeMode,
    #[serde(default)]
    pub dd_pulses: usize,
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma_phi: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    #[default]
    Exact,
    MonteCarlo,
    Binomial,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default)]
    pub mode: SamplingMode,
    #[serde(default)]
    pub n_samples: Option<u64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub estimator: LagEstimator,
    /// Number of raw trajectories to write to `trajectories.csv`.
    #[serde(default)]
    pub dump_trajectories: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub window: Window,
    #[serde(default = "default_threshold")]
    pub peak_threshold: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_dir(),
            formats: default_formats(),
            window: Window::None,
            peak_threshold: default_threshold(),
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

fn default_threshold() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Weak-method measurement time; defaults to `rim.tau1`.
    #[serde(default)]
    pub tau1: Option<f64>,
    #[serde(default = "default_factors")]
    pub corr_tau1_factors: Vec<f64>,
    #[serde(default)]
    pub n_samples: Vec<u64>,
    #[serde(default = "default_one")]
    pub repetitions: usize,
    #[serde(default = "default_ref_factor")]
    pub n_ref_factor: usize,
    /// Dissipation strengths `Γτ`; each bath qubit relaxes and dephases at `Γ`.
    #[serde(default = "default_gamma_tau")]
    pub gamma_tau: Vec<f64>,
    #[serde(default)]
    pub noise: NoiseModel,
}

fn default_factors() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

fn default_one() -> usize {
    1
}

fn default_ref_factor() -> usize {
    qspec_core::compare::DEFAULT_REF_FACTOR
}

fn default_gamma_tau() -> Vec<f64> {
    vec![0.0]
}

/// Times of one cycle, in microseconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timing {
    pub tau1: f64,
    pub tau2: f64,
    pub tau: f64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn check(&self) -> Result<(), CliError> {
        if self.units.time == TimeUnit::Arb && self.bath.is_physical() {
            return Err(CliError::Config("physical baths need a physical time unit".into()));
        }
        if self.protocol.tau.is_some() == self.protocol.tau2.is_some() {
            return Err(CliError::Config("give exactly one of protocol.tau and protocol.tau2".into()));
        }
        if self.protocol.n_points == 0 {
            return Err(CliError::Config("protocol.n_points must be positive".into()));
        }
        let t = self.timing();
        if !(t.tau1 >= 0.0 && t.tau2 >= 0.0) {
            return Err(CliError::Config("negative measurement or free-evolution time".into()));
        }
        if self.sampling.mode == SamplingMode::MonteCarlo
            && self.sampling.n_samples.is_none()
            && (self.sampling.delta.is_none() || self.sampling.epsilon.is_none())
        {
            return Err(CliError::Config("monte-carlo sampling needs n_samples or delta and epsilon".into()));
        }
        Ok(())
    }

    pub fn timing(&self) -> Timing {
        let s = self.units.time.to_us();
        let tau1 = self.rim.tau1 * s;
        match (self.protocol.tau, self.protocol.tau2) {
            (Some(tau), _) => Timing {
                tau1,
                tau2: tau * s - tau1,
                tau: tau * s,
            },
            (None, Some(tau2)) => Timing {
                tau1,
                tau2: tau2 * s,
                tau: tau1 + tau2 * s,
            },
            (None, None) => Timing {
                tau1,
                tau2: 0.0,
                tau: tau1,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [bath]
        kind = "qubit"
        a = 0.1
        b = 1.0

        [rim]
        tau1 = 0.2

        [protocol]
        tau = 0.9
        n_points = 16

        [units]
        time = "arb"
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.sampling.mode, SamplingMode::Exact);
        assert_eq!(cfg.output.formats, vec![Format::Csv]);
        let t = cfg.timing();
        assert!((t.tau2 - 0.7).abs() < 1e-15);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = MINIMAL.replace("n_points = 16", "n_points = 16\nbogus = 1");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(CliError::Config(_))));
    }

    #[test]
    fn both_periods_rejected() {
        let bad = MINIMAL.replace("tau = 0.9", "tau = 0.9\ntau2 = 0.7");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn physical_bath_needs_units() {
        let bad = MINIMAL.replace("kind = \"qubit\"\n        a = 0.1\n        b = 1.0", "kind = \"cluster\"");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn millisecond_times_are_scaled() {
        let cfg = MINIMAL.replace("time = \"arb\"", "time = \"ms\"");
        let t = ExperimentConfig::parse(&cfg).unwrap().timing();
        assert!((t.tau - 900.0).abs() < 1e-9);
    }
}

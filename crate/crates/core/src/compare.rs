//! Resource comparison between repeated weak measurements and correlation
//! spectroscopy with two isolated RIMs.
//!
//! Each grid point takes the exact expectation values of a method, adds shot
//! noise for `N_s` samples per lag, normalizes by `4τ₁²` and measures the
//! spectral distance to a long-time reference spectrum of `C(t)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{dissipative_free_evolution, lindbladian, BathModel, DissipationSpec};
use crate::channel::{build_rim_channel, decompose_superop, FreeEvolver, RimConfig, RimCycle};
use crate::correlation::{
    analytic_correlation, correlation_spectroscopy, correlation_spectroscopy_dissipative, corr_detection_time,
    cycle_correlation, weak_detection_time, CorrelationSeries, Provenance,
};
use crate::error::{Error, Result};
use crate::operator::{vectorize, SuperOperator, C64};
use crate::spectrum::{estimation_error, reconstruct_spectrum, Spectrum};
use crate::trajectory::{binomial_estimate, trajectory_seed, LagEstimator, TrajectorySampler};

/// Default ratio `N_ref / N` of the reference spectrum.
pub const DEFAULT_REF_FACTOR: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Weak,
    Corr,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Weak => "weak",
            Method::Corr => "corr",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Independent binomial shot noise per lag around the exact expectation.
    #[default]
    Binomial,
    /// Full trajectory sampling for the weak method; corr lags stay binomial,
    /// which is exact for two-shot experiments.
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonGrid {
    pub n: usize,
    pub tau: f64,
    /// Measurement time of the weak method.
    pub tau1: f64,
    /// Correlation spectroscopy runs at `factor · tau1` for each entry.
    pub corr_tau1_factors: Vec<f64>,
    pub n_samples: Vec<u64>,
    pub n_ref_factor: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub noise: NoiseModel,
}

impl ComparisonGrid {
    pub fn new(n: usize, tau: f64, tau1: f64, n_samples: Vec<u64>) -> Self {
        Self {
            n,
            tau,
            tau1,
            corr_tau1_factors: vec![1.0, 2.0, 4.0],
            n_samples,
            n_ref_factor: DEFAULT_REF_FACTOR,
            repetitions: 1,
            seed: 0,
            noise: NoiseModel::Binomial,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::OutOfRange {
                name: "n",
                value: self.n as f64,
            });
        }
        if !(self.tau > self.tau1 * self.corr_tau1_factors.iter().cloned().fold(1.0, f64::max)) {
            return Err(Error::OutOfRange {
                name: "tau",
                value: self.tau,
            });
        }
        if self.repetitions == 0 || self.n_ref_factor == 0 {
            return Err(Error::EmptyInput("repetitions and reference factor"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub method: Method,
    pub n_points: usize,
    pub tau: f64,
    pub tau1: f64,
    pub n_samples: u64,
    /// Evolution time of one pass over all lags.
    pub total_detection_time: f64,
    /// `N_s × t_tot`
    pub resource_complexity: f64,
    /// Mean over repetitions.
    pub estimation_error: f64,
    /// Standard deviation over repetitions (0 for a single repetition).
    pub error_spread: f64,
}

/// `Re Tr(A e^{ℒ mτ}(Aρ))` for `m = 1..=n`, with `ℒ` the free Lindbladian.
pub fn noise_correlation(
    bath: &BathModel,
    dissipation: &DissipationSpec,
    tau: f64,
    n: usize,
) -> Result<CorrelationSeries> {
    if dissipation.is_zero() {
        return analytic_correlation(bath, tau, n);
    }
    let step = SuperOperator::exp_generator(&lindbladian(bath, dissipation)?, tau);
    let start = vectorize(&(bath.a() * bath.rho()));
    let row = vectorize(&bath.a().transpose());
    let values = power_series(&step, row.data(), start.data(), n)?;
    Ok(CorrelationSeries::new(tau, values, Provenance::Analytic))
}

/// `Re row · S^m · col` for `m = 1..=n`, spectrally when possible.
fn power_series(s: &SuperOperator, row: &[C64], col: &[C64], n: usize) -> Result<Vec<f64>> {
    match decompose_superop(s) {
        Ok(dec) => {
            let k_max = dec.len();
            let coeffs: Vec<C64> = (0..k_max)
                .map(|k| {
                    let r: C64 = row.iter().enumerate().map(|(i, x)| x * dec.right[(i, k)]).sum();
                    let l: C64 = col.iter().enumerate().map(|(i, x)| dec.left[(k, i)] * x).sum();
                    r * l
                })
                .collect();
            let mut powers = dec.eigenvalues.clone();
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(coeffs.iter().zip(&powers).map(|(c, p)| c * p).sum::<C64>().re);
                for (p, l) in powers.iter_mut().zip(&dec.eigenvalues) {
                    *p *= l;
                }
            }
            Ok(out)
        }
        Err(Error::NonDiagonalizable { .. }) => {
            let mut v = crate::operator::VectorizedOperator::new(s.dim(), col.to_vec())?;
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                v = s.apply(&v)?;
                out.push(row.iter().zip(v.data()).map(|(a, b)| a * b).sum::<C64>().re);
            }
            Ok(out)
        }
        Err(e) => Err(e),
    }
}

/// Reference spectrum from `N_ref = factor · N` samples, read off at the
/// `N`-grid and rescaled by `N / N_ref` so peak heights are comparable.
pub fn reference_spectrum(
    bath: &BathModel,
    dissipation: &DissipationSpec,
    tau: f64,
    n: usize,
    factor: usize,
) -> Result<Spectrum> {
    let long = reconstruct_spectrum(&noise_correlation(bath, dissipation, tau, n * factor)?)?;
    let scale = 1.0 / factor as f64;
    Ok(Spectrum {
        tau,
        n,
        frequencies: (0..=n).map(|k| long.frequencies[k * factor]).collect(),
        amplitudes: (0..=n).map(|k| long.amplitudes[k * factor] * scale).collect(),
    })
}

/// Exact expectation of the weak (repeated) method.
pub fn weak_expectation(
    bath: &BathModel,
    dissipation: &DissipationSpec,
    cfg: &RimConfig,
    tau: f64,
    n: usize,
) -> Result<CorrelationSeries> {
    cycle_correlation(&weak_cycle(bath, dissipation, cfg, tau)?, bath.rho(), n)
}

fn weak_cycle(bath: &BathModel, dissipation: &DissipationSpec, cfg: &RimConfig, tau: f64) -> Result<RimCycle> {
    let tau2 = tau - cfg.tau1;
    let free = if dissipation.is_zero() {
        FreeEvolver::ideal(bath, tau2)?
    } else {
        FreeEvolver::Channel(dissipative_free_evolution(bath, dissipation, tau2)?)
    };
    RimCycle::new(build_rim_channel(bath, cfg)?, free, tau)
}

/// Exact expectation of correlation spectroscopy.
pub fn corr_expectation(
    bath: &BathModel,
    dissipation: &DissipationSpec,
    cfg: &RimConfig,
    tau: f64,
    n: usize,
) -> Result<CorrelationSeries> {
    if dissipation.is_zero() {
        correlation_spectroscopy(bath, cfg, tau, n)
    } else {
        correlation_spectroscopy_dissipative(bath, cfg, tau, n, dissipation)
    }
}

struct Task {
    method: Method,
    tau1: f64,
    n_samples: u64,
    id: u64,
}

/// One report per method, measurement time and sample count.
pub fn run_comparison(
    bath: &BathModel,
    grid: &ComparisonGrid,
    dissipation: &DissipationSpec,
) -> Result<Vec<ResourceReport>> {
    if grid.n_samples.is_empty() {
        return Ok(Vec::new());
    }
    grid.validate()?;
    let reference = reference_spectrum(bath, dissipation, grid.tau, grid.n, grid.n_ref_factor)?;

    let mut expectations = vec![(Method::Weak, grid.tau1)];
    expectations.extend(grid.corr_tau1_factors.iter().map(|f| (Method::Corr, f * grid.tau1)));
    let exact: Vec<CorrelationSeries> = expectations
        .par_iter()
        .map(|&(method, tau1)| {
            let cfg = RimConfig::new(tau1)?;
            match method {
                Method::Weak => weak_expectation(bath, dissipation, &cfg, grid.tau, grid.n),
                Method::Corr => corr_expectation(bath, dissipation, &cfg, grid.tau, grid.n),
            }
        })
        .collect::<Result<_>>()?;

    let sampler = match grid.noise {
        NoiseModel::MonteCarlo => Some(TrajectorySampler::new(weak_cycle(
            bath,
            dissipation,
            &RimConfig::new(grid.tau1)?,
            grid.tau,
        )?)),
        NoiseModel::Binomial => None,
    };

    let mut tasks = Vec::new();
    for (e, &(method, tau1)) in expectations.iter().enumerate() {
        for &n_samples in &grid.n_samples {
            let id = tasks.len() as u64;
            tasks.push((e, Task { method, tau1, n_samples, id }));
        }
    }
    tasks
        .par_iter()
        .map(|(e, task)| {
            let errors = (0..grid.repetitions as u64)
                .map(|rep| {
                    let seed = trajectory_seed(trajectory_seed(grid.seed, task.id), rep);
                    let noisy = match (&sampler, task.method) {
                        (Some(s), Method::Weak) => {
                            s.sample_correlation(bath.rho(), grid.n, task.n_samples, seed, LagEstimator::FirstOutcome)?
                        }
                        _ => binomial_estimate(&exact[*e], task.n_samples, seed)?,
                    };
                    let est = noisy.scaled(1.0 / (4.0 * task.tau1 * task.tau1));
                    estimation_error(&reference, &reconstruct_spectrum(&est)?)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean = errors.iter().sum::<f64>() / errors.len() as f64;
            let var = errors.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / errors.len() as f64;
            let t_tot = match task.method {
                Method::Weak => weak_detection_time(grid.n, grid.tau),
                Method::Corr => corr_detection_time(grid.n, grid.tau),
            };
            Ok(ResourceReport {
                method: task.method,
                n_points: grid.n,
                tau: grid.tau,
                tau1: task.tau1,
                n_samples: task.n_samples,
                total_detection_time: t_tot,
                resource_complexity: task.n_samples as f64 * t_tot,
                estimation_error: mean,
                error_spread: var.sqrt(),
            })
        })
        .collect()
}

/// Smallest resource complexity among the reports of `method` reaching `target`.
pub fn resource_at_error(reports: &[ResourceReport], method: Method, target: f64) -> Option<f64> {
    reports
        .iter()
        .filter(|r| r.method == method && r.estimation_error <= target)
        .map(|r| r.resource_complexity)
        .min_by(f64::total_cmp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::presets::qubit;

    #[test]
    fn empty_grid_gives_no_reports() {
        let bath = qubit(0.1, 1.0).unwrap();
        let grid = ComparisonGrid::new(16, 1.0, 0.1, vec![]);
        assert!(run_comparison(&bath, &grid, &DissipationSpec::default()).unwrap().is_empty());
    }

    #[test]
    fn single_point_bookkeeping() {
        let bath = qubit(0.1, 1.0).unwrap();
        let mut grid = ComparisonGrid::new(16, 1.0, 0.1, vec![1000]);
        grid.corr_tau1_factors = vec![1.0];
        let r = run_comparison(&bath, &grid, &DissipationSpec::default()).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].method, Method::Weak);
        assert_eq!(r[0].total_detection_time, 16.0);
        assert_eq!(r[1].total_detection_time, 136.0);
        assert_eq!(r[1].resource_complexity, 136_000.0);
    }

    #[test]
    fn dissipative_noise_correlation_reduces_to_analytic() {
        let bath = qubit(0.3, 0.8).unwrap();
        let tiny = DissipationSpec::new(0.0, 1e-300).unwrap();
        let a = noise_correlation(&bath, &tiny, 0.7, 40).unwrap();
        let b = analytic_correlation(&bath, 0.7, 40).unwrap();
        assert!(a.max_abs_deviation(&b) < 1e-10);
    }

    #[test]
    fn dephasing_damps_noise_correlation() {
        let bath = qubit(1.0, 0.8).unwrap();
        let spec = DissipationSpec::new(0.0, 0.05).unwrap();
        let c = noise_correlation(&bath, &spec, 0.5, 200).unwrap();
        // Off-diagonal coherences decay at 2Γ_φ.
        let m = 200.0;
        let expected = (-2.0 * 0.05 * m * 0.5_f64).exp() * (1.6 * m * 0.5_f64).cos();
        assert!((c.values[199] - expected).abs() < 1e-9);
    }
}

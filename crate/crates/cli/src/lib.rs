//! Orchestration behind the `qspec` binary: building baths from configs,
//! running simulations and comparisons, and writing artifacts.

pub mod config;
pub mod output;

use std::path::PathBuf;

use qspec_core::bath::{dissipative_free_evolution, BathModel, DissipationSpec};
use qspec_core::channel::{build_rim_channel, FreeEvolver, RimConfig, RimCycle};
use qspec_core::compare::{noise_correlation, run_comparison, ComparisonGrid, ResourceReport};
use qspec_core::correlation::{
    analytic_correlation, correlation_spectroscopy, correlation_spectroscopy_dissipative, cycle_correlation,
    mode_table, weak_correlation, weak_mode_table, CorrelationSeries,
};
use qspec_core::dd::{conditional_propagators, CpmgConfig};
use qspec_core::spectrum::{
    find_peaks, match_peaks, reconstruct_spectrum_with, validate_frequencies, validate_sampling, PeakAnnotation,
    SamplingDiagnostic, Spectrum,
};
use qspec_core::trajectory::{binomial_estimate, plan_samples, trajectory_seed, TrajectoryRecord, TrajectorySampler};

use config::{Bath, ExperimentConfig, Format, FreeMode, SamplingMode, SignalMethod, Timing};

/// Frequency tolerance for merging transition frequencies of the bath.
const FREQ_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] qspec_core::Error),
    #[error("sampling window violated: {0}")]
    Aliasing(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub sampling: Option<SamplingMode>,
    pub n: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), CliError> {
        if let Some(s) = self.seed {
            cfg.sampling.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output.directory = o.clone();
        }
        if let Some(f) = self.format {
            cfg.output.formats = vec![f];
        }
        if let Some(m) = self.sampling {
            cfg.sampling.mode = m;
        }
        if let Some(n) = self.n {
            cfg.protocol.n_points = n;
        }
        cfg.check()
    }
}

#[derive(Clone, Debug)]
pub struct SimulationOutput {
    pub timing: Timing,
    pub series: CorrelationSeries,
    pub spectrum: Option<Spectrum>,
    pub peaks: Vec<PeakAnnotation>,
    pub reference_frequencies: Vec<f64>,
    pub diagnostic: SamplingDiagnostic,
    pub n_samples: Option<u64>,
    pub trajectories: Vec<TrajectoryRecord>,
    pub warnings: Vec<String>,
}

fn dissipation(cfg: &ExperimentConfig) -> Result<DissipationSpec, CliError> {
    let s = cfg.units.time.to_us();
    // Rates are given per configured time unit.
    Ok(DissipationSpec::new(cfg.protocol.gamma1 / s, cfg.protocol.gamma_phi / s)?)
}

fn resolve_samples(cfg: &ExperimentConfig) -> Result<Option<u64>, CliError> {
    if cfg.sampling.mode == SamplingMode::Exact {
        return Ok(None);
    }
    match (cfg.sampling.n_samples, cfg.sampling.delta, cfg.sampling.epsilon) {
        (Some(n), _, _) => Ok(Some(n)),
        (None, Some(d), Some(e)) => Ok(Some(plan_samples(d, e)?.n_samples)),
        _ => Err(CliError::Config("sampling needs n_samples or delta and epsilon".into())),
    }
}

fn free_evolver(bath: &BathModel, cfg: &ExperimentConfig, t: &Timing) -> Result<FreeEvolver, CliError> {
    let diss = dissipation(cfg)?;
    match cfg.protocol.free {
        FreeMode::IdealB => {
            if cfg.protocol.dd_pulses > 0 {
                return Err(CliError::Config("dd_pulses requires free = \"conditional\"".into()));
            }
            if diss.is_zero() {
                Ok(FreeEvolver::ideal(bath, t.tau2)?)
            } else {
                Ok(FreeEvolver::Channel(dissipative_free_evolution(bath, &diss, t.tau2)?))
            }
        }
        FreeMode::Conditional => {
            if !diss.is_zero() {
                return Err(CliError::Config("conditional evolution with dissipation is not supported".into()));
            }
            let dd = CpmgConfig::new(cfg.protocol.dd_pulses, t.tau2)?;
            Ok(conditional_propagators(bath, &dd)?.into())
        }
    }
}

/// Runs the configured simulation without touching the filesystem.
pub fn simulate(cfg: &ExperimentConfig, strict: bool) -> Result<SimulationOutput, CliError> {
    let t = cfg.timing();
    let rim_cfg = RimConfig::new(t.tau1)?.with_delta_phi(cfg.rim.delta_phi);
    let n = cfg.protocol.n_points;
    let n_samples = resolve_samples(cfg)?;
    let seed = cfg.sampling.seed;
    let mut warnings = Vec::new();
    let mut trajectories = Vec::new();

    let (series, reference_frequencies, diagnostic) = match cfg.bath.build_for_rims(Some((t.tau1, n)))? {
        Bath::Finite(bath) => {
            if let Err(w) = rim_cfg.check_weak(&bath) {
                if cfg.protocol.method == SignalMethod::Weak {
                    warnings.push(w.to_string());
                }
            }
            let diss = dissipation(cfg)?;
            let series = match cfg.protocol.method {
                SignalMethod::Exact => {
                    let cycle = RimCycle::new(build_rim_channel(&bath, &rim_cfg)?, free_evolver(&bath, cfg, &t)?, t.tau)?;
                    if cfg.sampling.mode == SamplingMode::MonteCarlo {
                        let sampler = TrajectorySampler::new(cycle);
                        let ns = n_samples.expect("resolved above");
                        for k in 0..cfg.sampling.dump_trajectories.min(ns as usize) {
                            trajectories.push(sampler.sample(bath.rho(), n, trajectory_seed(seed, k as u64))?);
                        }
                        sampler.sample_correlation(bath.rho(), n, ns, seed, cfg.sampling.estimator)?
                    } else {
                        cycle_correlation(&cycle, bath.rho(), n)?
                    }
                }
                method => {
                    if cfg.sampling.mode == SamplingMode::MonteCarlo {
                        return Err(CliError::Config("monte-carlo sampling needs method = \"exact\"".into()));
                    }
                    if cfg.protocol.free != FreeMode::IdealB {
                        return Err(CliError::Config(format!("method {method:?} needs free = \"ideal-b\"")));
                    }
                    match method {
                        SignalMethod::Weak if diss.is_zero() => {
                            weak_correlation(&weak_mode_table(&bath, &rim_cfg)?, t.tau1, t.tau, n)
                        }
                        SignalMethod::Weak => {
                            return Err(CliError::Config("the weak closed form has no dissipation".into()))
                        }
                        SignalMethod::Analytic if diss.is_zero() => analytic_correlation(&bath, t.tau, n)?,
                        SignalMethod::Analytic => noise_correlation(&bath, &diss, t.tau, n)?,
                        SignalMethod::Corr if diss.is_zero() => correlation_spectroscopy(&bath, &rim_cfg, t.tau, n)?,
                        SignalMethod::Corr => correlation_spectroscopy_dissipative(&bath, &rim_cfg, t.tau, n, &diss)?,
                        SignalMethod::Exact => unreachable!(),
                    }
                }
            };
            let freqs = mode_table(&bath)?.positive_frequencies(FREQ_MERGE_TOL);
            (series, freqs, validate_sampling(&bath, t.tau)?)
        }
        Bath::SpinBoson(sb) => {
            if cfg.sampling.mode == SamplingMode::MonteCarlo {
                return Err(CliError::Config("monte-carlo sampling is not available for spin-boson baths".into()));
            }
            if cfg.protocol.free != FreeMode::IdealB || !dissipation(cfg)?.is_zero() {
                return Err(CliError::Config("spin-boson baths use ideal free evolution only".into()));
            }
            let series = match cfg.protocol.method {
                SignalMethod::Exact => sb.exact_correlation(&rim_cfg, t.tau, n)?,
                SignalMethod::Weak => sb.weak_correlation(&rim_cfg, t.tau, n)?,
                SignalMethod::Analytic => sb.analytic_correlation(t.tau, n)?,
                SignalMethod::Corr => sb.correlation_spectroscopy(&rim_cfg, t.tau, n)?,
            };
            let freqs = sb.spec.frequencies();
            let mut diag = validate_frequencies(&freqs, t.tau);
            diag.two_b_norm = 2.0 * freqs.iter().cloned().fold(0.0, f64::max);
            (series, freqs, diag)
        }
    };

    if !diagnostic.passed() {
        let msg = format!(
            "{} transition frequencies exceed pi/tau = {}; folded images at {:?}",
            diagnostic.aliased.len(),
            diagnostic.nyquist,
            diagnostic.aliased.iter().map(|a| a.folded).collect::<Vec<_>>()
        );
        if strict {
            return Err(CliError::Aliasing(msg));
        }
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let series = match (cfg.sampling.mode, n_samples) {
        (SamplingMode::Binomial, Some(ns)) => binomial_estimate(&series, ns, seed)?,
        _ => series,
    };

    let (spectrum, peaks) = if series.len() >= 2 {
        let spec = reconstruct_spectrum_with(&series, cfg.output.window)?;
        let mut peaks = find_peaks(&spec, cfg.output.peak_threshold)?;
        match_peaks(&mut peaks, &reference_frequencies, spec.resolution());
        (Some(spec), peaks)
    } else {
        warnings.push("fewer than two correlation samples; no spectrum written".into());
        (None, Vec::new())
    };

    Ok(SimulationOutput {
        timing: t,
        series,
        spectrum,
        peaks,
        reference_frequencies,
        diagnostic,
        n_samples,
        trajectories,
        warnings,
    })
}

/// One comparison row per dissipation strength, method and grid point.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ComparisonRow {
    pub gamma_tau: f64,
    #[serde(flatten)]
    pub report: ResourceReport,
}

pub fn compare(cfg: &ExperimentConfig) -> Result<Vec<ComparisonRow>, CliError> {
    let cmp = cfg
        .compare
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [compare] section".into()))?;
    let bath = match cfg.bath.build()? {
        Bath::Finite(b) => b,
        Bath::SpinBoson(_) => return Err(CliError::Config("comparison needs a finite bath".into())),
    };
    let t = cfg.timing();
    let tau1 = cmp.tau1.map(|x| x * cfg.units.time.to_us()).unwrap_or(t.tau1);
    let grid = ComparisonGrid {
        n: cfg.protocol.n_points,
        tau: t.tau,
        tau1,
        corr_tau1_factors: cmp.corr_tau1_factors.clone(),
        n_samples: cmp.n_samples.clone(),
        n_ref_factor: cmp.n_ref_factor,
        repetitions: cmp.repetitions,
        seed: cfg.sampling.seed,
        noise: cmp.noise,
    };
    let mut rows = Vec::new();
    for &gt in &cmp.gamma_tau {
        let diss = DissipationSpec::uniform(gt / t.tau)?;
        for report in run_comparison(&bath, &grid, &diss)? {
            rows.push(ComparisonRow { gamma_tau: gt, report });
        }
    }
    Ok(rows)
}

/// Caps the worker pool at `QSPEC_THREADS` when set.
pub fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("QSPEC_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Config(format!("QSPEC_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

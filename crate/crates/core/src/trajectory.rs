//! Monte Carlo sampling of RIM outcome strings and correlation estimators.
//!
//! Each trajectory draws from its own ChaCha8 generator whose seed is the
//! `(k+1)`-th output of a SplitMix64 stream started at the master seed, so
//! results depend only on `(master seed, trajectory index)` and never on how
//! trajectories are spread over threads.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{validate_state, BathModel};
use crate::channel::{build_rim_channel, FreeEvolver, RimConfig, RimCycle};
use crate::correlation::{CorrelationSeries, Provenance};
use crate::error::{Error, Result};
use crate::operator::{Operator, C64, ONE, ZERO};

/// Outcome probabilities below this force the other outcome.
pub const PROB_FLOOR: f64 = 1e-14;

/// Trace drift beyond this is an error; below it the state is renormalized.
pub const TRACE_DRIFT_TOL: f64 = 1e-8;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` under `master`.
pub fn trajectory_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Outcomes `r = ±1` of `N + 1` consecutive RIMs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub outcomes: Vec<i8>,
    pub seed: u64,
}

impl TrajectoryRecord {
    /// `seed,+-+--…` as used by the trajectory dump.
    pub fn to_csv_line(&self) -> String {
        let s: String = self
            .outcomes
            .iter()
            .map(|&r| if r > 0 { '+' } else { '-' })
            .collect();
        format!("{},{}", self.seed, s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagEstimator {
    /// `r₁ r_{m+1}`, correlating every outcome with the first.
    #[default]
    FirstOutcome,
    /// Average of `r_k r_{k+m}` over all pairs at lag `m`.
    LagAveraged,
}

/// Precomputed cycle for repeated sampling.
#[derive(Clone, Debug)]
pub struct TrajectorySampler {
    cycle: RimCycle,
    effects: [Operator; 2],
    /// `U_a M_a` when the free step is unitary.
    combined: Option<[Mat<C64>; 2]>,
}

impl TrajectorySampler {
    pub fn new(cycle: RimCycle) -> Self {
        let ops = cycle.rim().ops();
        let effects = [0, 1].map(|a| &ops[a].adjoint() * &ops[a]);
        let combined = match cycle.free() {
            FreeEvolver::Channel(_) => None,
            free => Some([0, 1].map(|a| (free.unitary_for(a).unwrap() * &ops[a]).into_mat())),
        };
        Self {
            cycle,
            effects,
            combined,
        }
    }

    pub fn from_bath(bath: &BathModel, cfg: &RimConfig, free: FreeEvolver, tau: f64) -> Result<Self> {
        Ok(Self::new(RimCycle::new(build_rim_channel(bath, cfg)?, free, tau)?))
    }

    pub fn cycle(&self) -> &RimCycle {
        &self.cycle
    }

    /// One trajectory of `n + 1` outcomes starting from `rho0`.
    pub fn sample(&self, rho0: &Operator, n: usize, seed: u64) -> Result<TrajectoryRecord> {
        let d = rho0.dim();
        if d != self.cycle.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cycle.dim(),
                found: d,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rho = rho0.mat().to_owned();
        let mut tmp = Mat::<C64>::zeros(d, d);
        let mut outcomes = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            let p0 = expectation(&self.effects[0], &rho).clamp(0.0, 1.0);
            let p1 = 1.0 - p0;
            let a = if p0 < PROB_FLOOR {
                1
            } else if p1 < PROB_FLOOR {
                0
            } else if rng.random::<f64>() < p0 {
                0
            } else {
                1
            };
            let p = if a == 0 { p0 } else { p1 };
            outcomes.push(if a == 0 { 1 } else { -1 });
            match &self.combined {
                Some(k) => {
                    matmul(tmp.as_mut(), Accum::Replace, k[a].as_ref(), rho.as_ref(), ONE, Par::Seq);
                    matmul(
                        rho.as_mut(),
                        Accum::Replace,
                        tmp.as_ref(),
                        k[a].adjoint(),
                        C64::new(1.0 / p, 0.0),
                        Par::Seq,
                    );
                }
                None => {
                    let m = &self.cycle.rim().ops()[a];
                    let current = Operator::from_mat(rho.clone())?;
                    let measured = m.sandwich(&current).scale_real(1.0 / p);
                    rho = self.cycle.free().apply(&measured, a)?.into_mat();
                }
            }
            let tr: f64 = (0..d).map(|i| rho[(i, i)].re).sum();
            if (tr - 1.0).abs() > TRACE_DRIFT_TOL {
                return Err(Error::InvalidState(format!("trace drifted to {tr}")));
            }
            if tr != 1.0 {
                let inv = 1.0 / tr;
                for j in 0..d {
                    for i in 0..d {
                        rho[(i, j)] *= inv;
                    }
                }
            }
        }
        Ok(TrajectoryRecord { outcomes, seed })
    }

    /// Streams `n_samples` trajectories and accumulates the correlation
    /// estimator without storing outcome strings.
    pub fn sample_correlation(
        &self,
        rho0: &Operator,
        n: usize,
        n_samples: u64,
        master_seed: u64,
        estimator: LagEstimator,
    ) -> Result<CorrelationSeries> {
        if n_samples == 0 {
            return Err(Error::EmptyInput("trajectories"));
        }
        validate_state(rho0)?;
        const CHUNK: u64 = 512;
        let chunks = n_samples.div_ceil(CHUNK);
        let sums = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = vec![0i64; n + 1];
                let end = ((c + 1) * CHUNK).min(n_samples);
                for k in c * CHUNK..end {
                    let rec = self.sample(rho0, n, trajectory_seed(master_seed, k))?;
                    accumulate(&mut acc, &rec.outcomes, n, estimator);
                }
                Ok(acc)
            })
            .try_reduce(
                || vec![0i64; n + 1],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )?;
        Ok(finish(&sums, n, n_samples, self.cycle.tau(), estimator))
    }
}

/// `Re Tr(E rho)`
fn expectation(e: &Operator, rho: &Mat<C64>) -> f64 {
    let d = e.dim();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += e.get(i, j) * rho[(j, i)];
        }
    }
    acc.re
}

fn accumulate(acc: &mut [i64], outcomes: &[i8], n: usize, estimator: LagEstimator) {
    match estimator {
        LagEstimator::FirstOutcome => {
            let r0 = outcomes[0] as i64;
            for m in 1..=n {
                acc[m] += r0 * outcomes[m] as i64;
            }
        }
        LagEstimator::LagAveraged => {
            for m in 1..=n {
                let mut s = 0i64;
                for k in 0..=(n - m) {
                    s += (outcomes[k] * outcomes[k + m]) as i64;
                }
                acc[m] += s;
            }
        }
    }
}

fn finish(sums: &[i64], n: usize, n_samples: u64, tau: f64, estimator: LagEstimator) -> CorrelationSeries {
    let values = (1..=n)
        .map(|m| {
            let pairs = match estimator {
                LagEstimator::FirstOutcome => 1,
                LagEstimator::LagAveraged => n + 1 - m,
            };
            sums[m] as f64 / (n_samples as f64 * pairs as f64)
        })
        .collect();
    CorrelationSeries::new(tau, values, Provenance::MonteCarlo).with_samples(n_samples)
}

/// Single trajectory with a freshly built RIM channel.
pub fn sample_trajectory(
    bath: &BathModel,
    cfg: &RimConfig,
    free: &FreeEvolver,
    n: usize,
    seed: u64,
) -> Result<TrajectoryRecord> {
    validate_state(bath.rho())?;
    let sampler = TrajectorySampler::from_bath(bath, cfg, free.clone(), cfg.tau1)?;
    sampler.sample(bath.rho(), n, seed)
}

/// Correlation estimate `(1/N_s) Σ r₁ r_{m+1}` (or its lag average) from stored records.
pub fn estimate_correlation(
    records: &[TrajectoryRecord],
    n: usize,
    tau: f64,
    estimator: LagEstimator,
) -> Result<CorrelationSeries> {
    if records.is_empty() {
        return Err(Error::EmptyInput("trajectory records"));
    }
    let mut acc = vec![0i64; n + 1];
    for rec in records {
        if rec.outcomes.len() < n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                found: rec.outcomes.len(),
            });
        }
        accumulate(&mut acc, &rec.outcomes[..=n], n, estimator);
    }
    Ok(finish(&acc, n, records.len() as u64, tau, estimator))
}

/// Hoeffding sample size for accuracy δ with failure probability ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub delta: f64,
    pub epsilon: f64,
    pub n_samples: u64,
}

/// `N_s = ⌈(2/δ²) ln(2/ε)⌉`
pub fn plan_samples(delta: f64, epsilon: f64) -> Result<SamplePlan> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
        });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange {
            name: "epsilon",
            value: epsilon,
        });
    }
    let exact = 2.0 / (delta * delta) * (2.0 / epsilon).ln();
    // Absorb roundoff so that exact integers are not bumped up by one.
    let n_samples = (exact * (1.0 - 4.0 * f64::EPSILON)).ceil() as u64;
    Ok(SamplePlan {
        delta,
        epsilon,
        n_samples,
    })
}

/// Shot-noise model: each lag is estimated from `n_samples` independent ±1
/// outcomes with mean equal to the exact correlation.
pub fn binomial_estimate(exact: &CorrelationSeries, n_samples: u64, seed: u64) -> Result<CorrelationSeries> {
    if n_samples == 0 {
        return Err(Error::EmptyInput("samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = exact
        .values
        .iter()
        .map(|&c| {
            let p = ((1.0 + c) * 0.5).clamp(0.0, 1.0);
            let k = Binomial::new(n_samples, p)
                .map_err(|e| Error::InvalidState(e.to_string()))?
                .sample(&mut rng);
            Ok(2.0 * k as f64 / n_samples as f64 - 1.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = exact.clone();
    out.values = values;
    out.n_samples = Some(n_samples);
    Ok(out)
}

/// Probability of outcome `r = +1` at the first RIM.
pub fn first_outcome_probability(bath: &BathModel, cfg: &RimConfig) -> Result<f64> {
    let rim = build_rim_channel(bath, cfg)?;
    Ok(rim.probabilities(bath.rho())[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::presets::qubit;

    #[test]
    fn splitmix_reference_value() {
        // First output of SplitMix64 seeded with 0.
        assert_eq!(trajectory_seed(0, 0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn plan_examples() {
        let e = 2.0 / std::f64::consts::E.powi(2);
        assert_eq!(plan_samples(1.0, e).unwrap().n_samples, 4);
        assert_eq!(plan_samples(0.01, 0.05).unwrap().n_samples, 73_778);
        assert_eq!(plan_samples(0.02, 0.1).unwrap().n_samples, 14_979);
        let a = plan_samples(0.1, 0.05).unwrap().n_samples as f64;
        let b = plan_samples(0.05, 0.05).unwrap().n_samples as f64;
        assert!((b / a - 4.0).abs() < 1e-3);
        assert!(plan_samples(0.0, 0.1).is_err());
        assert!(plan_samples(0.1, 1.0).is_err());
    }

    #[test]
    fn records_estimator_examples() {
        let recs = vec![TrajectoryRecord {
            outcomes: vec![1; 5],
            seed: 0,
        }];
        let c = estimate_correlation(&recs, 4, 1.0, LagEstimator::FirstOutcome).unwrap();
        assert!(c.values.iter().all(|&v| v == 1.0));
        let two = vec![
            TrajectoryRecord {
                outcomes: vec![1, 1, 1],
                seed: 0,
            },
            TrajectoryRecord {
                outcomes: vec![1, -1, 1],
                seed: 1,
            },
        ];
        let c = estimate_correlation(&two, 2, 1.0, LagEstimator::FirstOutcome).unwrap();
        assert_eq!(c.values[0], 0.0);
        assert!(estimate_correlation(&[], 2, 1.0, LagEstimator::FirstOutcome).is_err());
    }

    #[test]
    fn trajectories_are_reproducible() {
        let bath = qubit(0.3, 1.0).unwrap();
        let cfg = RimConfig::new(0.2).unwrap();
        let free = FreeEvolver::ideal(&bath, 0.7).unwrap();
        let a = sample_trajectory(&bath, &cfg, &free, 30, 99).unwrap();
        let b = sample_trajectory(&bath, &cfg, &free, 30, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.outcomes.len(), 31);
    }

    #[test]
    fn uncoupled_bath_gives_fair_coins() {
        let bath = qubit(0.0, 1.0).unwrap();
        let cfg = RimConfig::new(0.2).unwrap();
        let sampler =
            TrajectorySampler::from_bath(&bath, &cfg, FreeEvolver::ideal(&bath, 0.7).unwrap(), 0.9).unwrap();
        let n_s = 100_000u64;
        let mut sum = 0i64;
        for k in 0..n_s {
            let r = sampler.sample(bath.rho(), 0, trajectory_seed(5, k)).unwrap();
            sum += r.outcomes[0] as i64;
        }
        let mean = sum as f64 / n_s as f64;
        assert!(mean.abs() < 3.0 / (n_s as f64).sqrt(), "{mean}");
    }

    #[test]
    fn binomial_model_is_unbiased_in_the_large_sample_limit() {
        let exact = CorrelationSeries::new(1.0, vec![0.3, -0.2, 0.0], Provenance::ExactChannel);
        let est = binomial_estimate(&exact, 10_000_000, 3).unwrap();
        assert!(est.max_abs_deviation(&exact) < 2e-3);
        assert_eq!(est.n_samples, Some(10_000_000));
    }
}

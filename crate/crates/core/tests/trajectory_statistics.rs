use qspec_core::bath::presets;
use qspec_core::channel::{build_rim_channel, RimConfig, RimCycle};
use qspec_core::correlation::exact_channel_correlation;
use qspec_core::trajectory::{estimate_correlation, plan_samples, LagEstimator, TrajectorySampler};

#[test]
fn first_outcome_frequency_matches_kraus_probability() {
    let bath = presets::qubit(0.1, 1.0).unwrap();
    let cfg = RimConfig::new(0.2).unwrap();
    let rim = build_rim_channel(&bath, &cfg).unwrap();
    let p0 = rim.probabilities(bath.rho())[0];
    let sampler = TrajectorySampler::new(RimCycle::ideal(&bath, &cfg, 0.9).unwrap());
    let n_s = 100_000u64;
    let hits = (0..n_s)
        .filter(|&k| sampler.sample(bath.rho(), 1, 77 + k).unwrap().outcomes[0] == 1)
        .count() as f64;
    let sigma = (p0 * (1.0 - p0) / n_s as f64).sqrt();
    assert!((hits / n_s as f64 - p0).abs() < 3.0 * sigma, "p0 {p0}, observed {}", hits / n_s as f64);
}

#[test]
fn per_lag_deviation_respects_hoeffding() {
    let (delta, epsilon) = (0.05, 0.1);
    let n_s = plan_samples(delta, epsilon).unwrap().n_samples;
    let bath = presets::qubit(0.1, 1.0).unwrap();
    let cfg = RimConfig::new(1.0).unwrap();
    let cycle = RimCycle::ideal(&bath, &cfg, 1.5).unwrap();
    let exact = exact_channel_correlation(&cycle.channel().unwrap(), bath.rho(), 16).unwrap();
    let sampler = TrajectorySampler::new(cycle);
    let (mut misses, mut total) = (0, 0);
    for rep in 0..20u64 {
        let est = sampler
            .sample_correlation(bath.rho(), 16, n_s, 500 + rep, LagEstimator::FirstOutcome)
            .unwrap();
        for (a, b) in est.values.iter().zip(&exact.values) {
            total += 1;
            if (a - b).abs() > delta {
                misses += 1;
            }
        }
    }
    assert!((misses as f64) <= epsilon * total as f64, "{misses} of {total} lags outside delta");
}

#[test]
fn sampling_is_independent_of_thread_count() {
    let bath = presets::three_spin().unwrap();
    let cfg = RimConfig::new(0.13).unwrap();
    let sampler = TrajectorySampler::new(RimCycle::ideal(&bath, &cfg, 0.9).unwrap());
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sampler.sample_correlation(bath.rho(), 32, 3000, 9, LagEstimator::LagAveraged).unwrap())
    };
    assert_eq!(run(1).values, run(4).values);
}

#[test]
fn estimator_on_recorded_trajectories_matches_sampler() {
    let bath = presets::qubit(0.1, 1.0).unwrap();
    let cfg = RimConfig::new(0.5).unwrap();
    let sampler = TrajectorySampler::new(RimCycle::ideal(&bath, &cfg, 1.5).unwrap());
    let records: Vec<_> = (0..200u64)
        .map(|k| sampler.sample(bath.rho(), 8, qspec_core::trajectory::trajectory_seed(3, k)).unwrap())
        .collect();
    let from_records = estimate_correlation(&records, 8, 1.5, LagEstimator::FirstOutcome).unwrap();
    let direct = sampler.sample_correlation(bath.rho(), 8, 200, 3, LagEstimator::FirstOutcome).unwrap();
    assert_eq!(from_records.values, direct.values);
}

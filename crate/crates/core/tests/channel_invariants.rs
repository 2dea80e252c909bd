use proptest::prelude::*;
use qspec_core::bath::BathModel;
use qspec_core::channel::{build_free_evolution_channel, build_rim_channel, concatenate, RimConfig};
use qspec_core::operator::{sandwich_superop, vectorize, Operator, SuperOperator, C64};

fn matrix(d: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d)
        .prop_map(move |v| Operator::from_fn(d, |i, j| C64::new(v[i * d + j].0, v[i * d + j].1)))
}

fn hermitian(d: usize) -> impl Strategy<Value = Operator> {
    matrix(d).prop_map(|m| (&m + &m.adjoint()).scale_real(0.5))
}

fn triple() -> impl Strategy<Value = (Operator, Operator, Operator)> {
    prop::sample::select(vec![2usize, 4, 8]).prop_flat_map(|d| (matrix(d), matrix(d), matrix(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sandwich_matches_product((x, rho, y) in triple()) {
        let direct = vectorize(&(&(&x * &rho) * &y));
        let s = sandwich_superop(&x, &y).unwrap();
        let lifted = s.apply(&vectorize(&rho)).unwrap();
        for (a, b) in direct.data().iter().zip(lifted.data()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn superop_product_composes((x, rho, y) in triple()) {
        let sx = SuperOperator::unitary(&x);
        let sy = SuperOperator::unitary(&y);
        let both = (&sx * &sy).apply_op(&rho).unwrap();
        let nested = sx.apply_op(&sy.apply_op(&rho).unwrap()).unwrap();
        prop_assert!((&both - &nested).max_abs() < 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_bath_cycle_is_trace_preserving(
        (a, b) in prop::sample::select(vec![2usize, 4]).prop_flat_map(|d| (hermitian(d), hermitian(d))),
        tau1 in 0.01f64..0.5,
        tau2 in 0.0f64..3.0,
        delta_phi in 0.0f64..std::f64::consts::TAU,
    ) {
        let bath = BathModel::maximally_mixed(a, b).unwrap();
        let cfg = RimConfig::new(tau1).unwrap().with_delta_phi(delta_phi);
        let rim = build_rim_channel(&bath, &cfg).unwrap();
        prop_assert!(rim.completeness_defect() < 1e-10);
        let free = build_free_evolution_channel(&bath, tau2).unwrap();
        let ch = concatenate(&rim, &free, tau1 + tau2).unwrap();
        prop_assert!(ch.superop.trace_preservation_defect() < 1e-10);
        prop_assert!(ch.superop.choi_min_eigenvalue().unwrap() > -1e-10);
        let p = rim.probabilities(bath.rho());
        prop_assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
    }
}

//! Property tests over seeded random instances.

use proptest::prelude::*;
use quotient_em::bounds;
use quotient_em::dataset::{parse_csv, WeightedDataset};
use quotient_em::em::{self, Directions, EmConfig, EmVariant, EpsSchedule, Monitor};
use quotient_em::ipm::{self, Estimator, FeatureMap, KernelSpec};
use quotient_em::models::ModelSpec;
use quotient_em::numerics::Matrix;
use quotient_em::params::ParamVector;
use quotient_em::rng;

fn models() -> Vec<(ModelSpec, Vec<f64>)> {
    vec![
        (ModelSpec::gmm_spherical(3, 2, 1.0), vec![0.2, 0.3, 0.5, -2.0, 0.0, 0.0, 2.0, 2.0, -1.0]),
        (ModelSpec::gmm_full(2, 2), vec![0.4, 0.6, -1.5, 0.0, 1.5, 0.5, 1.0, 0.3, 0.8, 0.6, -0.2, 1.1]),
        (ModelSpec::sign_mixture(2, 1.0), vec![1.0, -0.5]),
        (ModelSpec::factor(3, 2, Matrix::diag(&[0.5, 0.7, 0.9])).unwrap(), vec![1.0, 0.3, -0.4, 0.9, 0.6, -0.8]),
    ]
}

/// A dataset and two starts drawn from `model` under `seed`.
fn instance(model: &ModelSpec, truth: &[f64], seed: u64, n: usize) -> (WeightedDataset, ParamVector, ParamVector) {
    let truth = model.params(truth.to_vec()).unwrap();
    let mut r = rng::stream(seed, "properties", 0);
    let data = model.sample(&truth, n, &mut r).unwrap();
    let a = model.random_start(&data, &mut r).unwrap();
    let b = model.random_start(&data, &mut r).unwrap();
    (data, a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn group_laws(seed in any::<u64>(), which in 0usize..4) {
        let (model, truth) = &models()[which];
        let (_, theta, _) = instance(model, truth, seed, 20);
        let action = model.symmetry();
        let mut r = rng::stream(seed, "group-laws", 0);
        let (g, h) = (action.random_element(&mut r), action.random_element(&mut r));
        let lhs = action.act(&action.compose(&g, &h).unwrap(), &theta).unwrap();
        let rhs = action.act(&g, &action.act(&h, &theta).unwrap()).unwrap();
        prop_assert!(lhs.distance(&rhs).unwrap() <= 1e-12);
        let back = action.act(&action.inverse(&g).unwrap(), &action.act(&g, &theta).unwrap()).unwrap();
        prop_assert!(back.distance(&theta).unwrap() <= 1e-12);
        prop_assert_eq!(action.act(&action.identity(), &theta).unwrap(), theta);
    }

    #[test]
    fn orbit_distance_is_a_quotient_pseudometric(seed in any::<u64>(), which in 0usize..4) {
        let (model, truth) = &models()[which];
        let (_, a, b) = instance(model, truth, seed, 20);
        let action = model.symmetry();
        let g = action.random_element(&mut rng::stream(seed, "orbit", 0));
        let d = action.orbit_distance(&a, &b).unwrap().value;
        prop_assert!(d >= 0.0 && d <= a.distance(&b).unwrap() + 1e-12);
        prop_assert!((action.orbit_distance(&b, &a).unwrap().value - d).abs() <= 1e-9);
        prop_assert!((action.orbit_distance(&a, &action.act(&g, &b).unwrap()).unwrap().value - d).abs() <= 1e-9);
        prop_assert!(action.orbit_distance(&a, &action.act(&g, &a).unwrap()).unwrap().value <= 1e-9);
    }

    #[test]
    fn sections_are_idempotent_and_orbit_constant(seed in any::<u64>(), which in 0usize..4) {
        let (model, truth) = &models()[which];
        let (_, theta, _) = instance(model, truth, seed, 20);
        let action = model.symmetry();
        let g = action.random_element(&mut rng::stream(seed, "section", 0));
        let s = action.section(&theta).unwrap();
        prop_assert!(action.section(&s).unwrap().distance(&s).unwrap() <= 1e-9);
        prop_assert!(action.section(&action.act(&g, &theta).unwrap()).unwrap().distance(&s).unwrap() <= 1e-9);
        prop_assert!(action.is_canonical(&s).unwrap());
    }

    #[test]
    fn m_step_is_equivariant_and_ascends(seed in any::<u64>(), which in 0usize..4) {
        let (model, truth) = &models()[which];
        let (data, theta, _) = instance(model, truth, seed, 60);
        let action = model.symmetry();
        let g = action.random_element(&mut rng::stream(seed, "equivariance", 0));
        let next = model.m_step(&theta, &data).unwrap();
        let moved = model.m_step(&action.act(&g, &theta).unwrap(), &data).unwrap();
        prop_assert!(moved.distance(&action.act(&g, &next).unwrap()).unwrap() <= 1e-9);
        let (p0, p1) = (model.objective(&theta, &data).unwrap(), model.objective(&next, &data).unwrap());
        prop_assert!(p1 >= p0 - 1e-10, "{} -> {}", p0, p1);
    }

    #[test]
    fn feature_ipm_is_orbit_invariant_and_symmetric(seed in any::<u64>(), which in 0usize..4) {
        let (model, truth) = &models()[which];
        let (_, a, b) = instance(model, truth, seed, 20);
        let action = model.symmetry();
        let feature = FeatureMap::polynomial(2, model.dim()).unwrap();
        let g = action.random_element(&mut rng::stream(seed, "ipm", 0));
        let d = ipm::feature_ipm_model(model, &a, &b, &feature).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!((ipm::feature_ipm_model(model, &b, &a, &feature).unwrap() - d).abs() <= 1e-12);
        prop_assert!((ipm::feature_ipm_model(model, &action.act(&g, &a).unwrap(), &b, &feature).unwrap() - d).abs() <= 1e-10);
    }

    #[test]
    fn mmd_is_a_metric_on_samples(seed in any::<u64>(), bw in 0.2f64..3.0) {
        let model = ModelSpec::sign_mixture(2, 1.0);
        let theta = model.params(vec![1.0, 0.0]).unwrap();
        let mut r = rng::stream(seed, "mmd", 0);
        let p = model.sample(&theta, 30, &mut r).unwrap();
        let q = model.sample(&theta, 40, &mut r).unwrap();
        let k = KernelSpec::rbf(bw).unwrap();
        let pq = ipm::mmd(&p, &q, &k, Estimator::VStatistic).unwrap();
        prop_assert!(pq.squared >= -1e-12 && pq.value >= 0.0);
        prop_assert!((ipm::mmd(&q, &p, &k, Estimator::VStatistic).unwrap().value - pq.value).abs() <= 1e-12);
        prop_assert!(ipm::mmd(&p, &p, &k, Estimator::VStatistic).unwrap().value <= 1e-7);
        prop_assert!(pq.value <= 2.0 * k.kappa());
    }

    #[test]
    fn constant_error_schedule_matches_perturbed_envelope(gamma in 0.0f64..0.95, eps in 0.0f64..1.0, e0 in 0.0f64..3.0, horizon in 1usize..40) {
        let a = bounds::inexact_envelope(gamma, e0, &vec![eps; horizon]).unwrap();
        let b = bounds::perturbed_envelope(gamma, eps, e0, horizon).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn contraction_with_errors_stays_under_envelope(seed in any::<u64>(), gamma in 0.0f64..0.95, eps in 0.0f64..0.5, x0 in -3.0f64..3.0) {
        let eps_sched = EpsSchedule::Uniform { max: eps, seed }.materialize(30).unwrap();
        let xs = em::iterate_with_errors(|x| vec![gamma * x[0]], &[x0], &eps_sched, &Directions::Seeded(seed)).unwrap();
        let clean: Vec<f64> = (0..=30).map(|t| gamma.powi(t) * x0).collect();
        let env = bounds::inexact_envelope(gamma, 0.0, &eps_sched).unwrap();
        for t in 0..=30 {
            prop_assert!((xs[t][0] - clean[t]).abs() <= env[t] + 1e-12);
        }
    }

    #[test]
    fn csv_round_trip_is_exact(seed in any::<u64>(), n in 1usize..30) {
        let model = ModelSpec::sign_mixture(3, 1.0);
        let theta = model.params(vec![0.3, -1.0, 2.0]).unwrap();
        let data = model.sample(&theta, n, &mut rng::stream(seed, "csv", 0)).unwrap();
        let back = parse_csv(&data.to_csv_string()).unwrap();
        prop_assert_eq!(back.dataset.points(), data.points());
        prop_assert!(back.dataset.weights().iter().zip(data.weights()).all(|(a, b)| (a - b).abs() <= 1e-15));
    }

    #[test]
    fn zero_error_inexact_run_is_bitwise_exact(seed in any::<u64>()) {
        let (model, truth) = &models()[0];
        let (data, theta, _) = instance(model, truth, seed, 60);
        let exact = EmConfig::exact(15, f64::MIN_POSITIVE);
        let zero = EmConfig { variant: EmVariant::Inexact { epsilons: EpsSchedule::Constant(0.0), directions: Directions::Seeded(seed) }, ..exact.clone() };
        let a = em::em_run(model, &theta, &data, &exact, &Monitor::default()).unwrap();
        let b = em::em_run(model, &theta, &data, &zero, &Monitor::default()).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.thetas().zip(b.thetas()) {
            prop_assert!(x.values().iter().zip(y.values()).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
        prop_assert!(a.phis().iter().zip(b.phis()).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
}

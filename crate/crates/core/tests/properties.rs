mod common;

use nalgebra::DVector;
use proptest::prelude::*;

use common::*;
use rcgain::estimator::{iterate_reset_free, PowerIterationConfig, IDEAL_PLANT_TOL};
use rcgain::lifting::{circulant_coefficients, lift, periodic_response_matrix, periodic_state};
use rcgain::plant::{steady_state_response, BatchExperiment, PlantMode, PlantSession, SteadyStatePlant};
use rcgain::spectral::{
    circulant_eigenvalues, reversed_circulant, reversed_spectrum, symmetric_eig_oracle, time_reversal_matrix,
};
use rcgain::FrequencyResponse;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn realization_matches_transfer_function(seed in any::<u64>()) {
        let tf = random_stable_tf(&mut rng(seed), 3, 4);
        let ss = tf.to_state_space();
        for (a, b) in tf.impulse_response(40).iter().zip(ss.impulse_response(40)) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
        for k in 0..16 {
            let omega = -3.0 + 0.4 * k as f64;
            prop_assert!((tf.freq_response(omega) - ss.freq_response(omega)).norm() < 1e-8);
        }
    }

    #[test]
    fn chained_batches_equal_one_long_run(seed in any::<u64>(), n in 1usize..12, batches in 1usize..6) {
        let mut r = rng(seed);
        let ss = random_stable(&mut r, 5);
        let u: Vec<f64> = (0..n * batches).map(|k| ((k as f64) * 0.7 + seed as f64).sin()).collect();
        let (y_long, _) = ss.simulate(&vec![0.0; ss.order()], &u).unwrap();
        let mut session = PlantSession::new(ss, n, PlantMode::ResetFree, None).unwrap();
        for (j, chunk) in u.chunks(n).enumerate() {
            let rec = session.apply_batch(chunk).unwrap();
            prop_assert_eq!(rec.j, j);
            for (a, b) in rec.y.iter().zip(&y_long[j * n..(j + 1) * n]) {
                prop_assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn lifted_step_equals_sample_simulation(seed in any::<u64>(), n in 1usize..16) {
        let mut r = rng(seed);
        let ss = random_stable(&mut r, 5);
        let lifted = lift(&ss, n).unwrap();
        let x0: Vec<f64> = (0..ss.order()).map(|i| (i as f64 + 1.0).recip()).collect();
        let u: Vec<f64> = (0..n).map(|k| (k as f64 * 1.3).cos()).collect();
        let (y, x_end) = ss.simulate(&x0, &u).unwrap();
        let (y_lift, x_lift) = lifted.step(&DVector::from_vec(x0), &DVector::from_vec(u));
        for (a, b) in y.iter().zip(y_lift.iter()) {
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
        prop_assert!((&x_end - &x_lift).amax() < 1e-10 * (1.0 + x_lift.amax()));
    }

    #[test]
    fn starting_at_the_fixed_point_is_periodic(seed in any::<u64>(), n in 1usize..16) {
        let ss = random_stable(&mut rng(seed), 5);
        let lifted = lift(&ss, n).unwrap();
        let u: Vec<f64> = (0..n).map(|k| (k as f64 * 0.9 + 0.2).sin()).collect();
        let x0 = periodic_state(&lifted, &u).unwrap();
        let m_u = steady_state_response(&ss, n, &u).unwrap();
        let mut session = PlantSession::new(ss, n, PlantMode::ResetFree, Some(x0.as_slice())).unwrap();
        for _ in 0..3 {
            let y = session.apply_batch(&u).unwrap().y;
            for (a, b) in y.iter().zip(&m_u) {
                prop_assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn markov_matrix_is_persymmetric(seed in any::<u64>(), n in 1usize..20) {
        let ss = random_stable(&mut rng(seed), 5);
        let j = lift(&ss, n).unwrap().j;
        let t = time_reversal_matrix(n);
        prop_assert!((j.transpose() - &t * &j * &t).amax() < 1e-14 * (1.0 + j.amax()));
    }

    #[test]
    fn circulant_equals_periodic_response(seed in any::<u64>(), n in 1usize..24) {
        let ss = random_stable(&mut rng(seed), 6);
        let m = periodic_response_matrix(&lift(&ss, n).unwrap()).unwrap();
        let c = circulant_coefficients(&ss, n).unwrap().matrix();
        prop_assert!((c - &m).amax() < 1e-9 * (1.0 + m.amax()));
    }

    #[test]
    fn reversal_preserves_magnitudes(seed in any::<u64>(), n in 1usize..33) {
        let ss = random_stable(&mut rng(seed), 6);
        let spec = circulant_coefficients(&ss, n).unwrap();
        let spectrum = circulant_eigenvalues(&spec);
        let mut mags: Vec<f64> = spectrum.values().iter().map(|z| z.norm()).collect();
        let mut rev: Vec<f64> = reversed_spectrum(&spectrum).unwrap().values().iter().map(|v| v.abs()).collect();
        mags.sort_by(f64::total_cmp);
        rev.sort_by(f64::total_cmp);
        let scale = 1.0 + mags.last().unwrap();
        for (a, b) in mags.iter().zip(&rev) {
            prop_assert!((a - b).abs() < 1e-10 * scale);
        }
        let oracle = symmetric_eig_oracle(&reversed_circulant(&spec).unwrap()).unwrap();
        let fast = reversed_spectrum(&spectrum).unwrap().sorted_desc();
        for (a, b) in fast.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn steady_state_plant_is_linear(seed in any::<u64>(), n in 1usize..12, c in -3.0f64..3.0) {
        let ss = random_stable(&mut rng(seed), 4);
        let mut plant = SteadyStatePlant::new(&ss, n).unwrap();
        let u: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5).ln()).collect();
        let y1 = plant.apply_batch(&u).unwrap().y;
        let scaled: Vec<f64> = u.iter().map(|v| c * v).collect();
        let y2 = plant.apply_batch(&scaled).unwrap().y;
        for (a, b) in y1.iter().zip(&y2) {
            prop_assert!((c * a - b).abs() < 1e-10 * (1.0 + b.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    /// With a shift at least the largest magnitude in the reversed spectrum,
    /// the iteration settles on the positive top eigenvalue whatever the shift.
    #[test]
    fn shifted_iteration_finds_positive_top_eigenvalue(seed in any::<u64>(), factor in 1.0f64..3.0) {
        let ss = random_stable(&mut rng(seed), 4);
        let n = 12;
        let spectrum = circulant_eigenvalues(&circulant_coefficients(&ss, n).unwrap());
        let sorted = reversed_spectrum(&spectrum).unwrap().sorted_desc();
        let (top, second) = (sorted[0], sorted[1]);
        let largest = sorted[0].max(-sorted[n - 1]);
        prop_assume!(top > 1e-3 && (top - second) > 0.2 * top);
        let mut config = PowerIterationConfig::new(n);
        config.shift = Some(factor * largest);
        config.n_update = 1;
        config.max_updates = 20_000;
        config.convergence_tol = IDEAL_PLANT_TOL;
        config.seed = seed;
        let mut plant = SteadyStatePlant::new(&ss, n).unwrap();
        let trace = iterate_reset_free(&mut plant, &config).unwrap();
        prop_assert!(trace.converged);
        prop_assert!(trace.estimate > 0.0);
        prop_assert!((trace.estimate - top).abs() < 1e-6 * (1.0 + top), "{} vs {}", trace.estimate, top);
    }
}

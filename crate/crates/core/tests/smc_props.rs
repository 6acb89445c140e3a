use mtt_core::gaussian::{kalman_filter, rts_smoother, LinearGaussianModel};
use mtt_core::linalg::ObsVec;
use mtt_core::model::{HmmParams, LinearObsModel, SensorKind, TrackingModel};
use mtt_core::smc::{backward_simulate, conditional_particle_filter, particle_filter, Bootstrap, StateSpaceModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn hmm() -> HmmParams {
    HmmParams {
        sigma_x2: 0.49,
        sigma_y2: 2.25,
        sigma_r2: 4.0,
        sigma_b2: 4.0,
        mu_bx: 80.0,
        mu_by: 100.0,
        sigma_bpx2: 9.0,
        sigma_bpy2: 9.0,
        sigma_bvx2: 1.0,
        sigma_bvy2: 1.0,
        delta: 1.0,
        sensor: SensorKind::Linear,
    }
}

fn arb_obs() -> impl Strategy<Value = Vec<Option<ObsVec>>> {
    prop::collection::vec(prop::option::weighted(0.8, (75.0..90.0f64, 90.0..110.0f64).prop_map(|(a, b)| ObsVec::new(a, b))), 1..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weights_are_normalised(obs in arb_obs(), n in 1usize..60, seed in any::<u64>()) {
        let model = TrackingModel::new(&hmm()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ps = particle_filter(&model, &obs, n, &Bootstrap, &mut rng).unwrap();
        for w in &ps.weights {
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn conditional_filter_keeps_the_retained_path(obs in arb_obs(), n in 1usize..40, seed in any::<u64>()) {
        let model = TrackingModel::new(&hmm()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut retained = vec![model.sample_initial(&mut rng)];
        while retained.len() < obs.len() {
            let x = model.sample_transition(retained.last().unwrap(), &mut rng);
            retained.push(x);
        }
        let ps = conditional_particle_filter(&model, &obs, n, &retained, &Bootstrap, &mut rng).unwrap();
        for (t, x) in retained.iter().enumerate() {
            prop_assert_eq!(ps.particles[t][0], *x);
            if t > 0 {
                prop_assert_eq!(ps.ancestors[t][0], 0);
            }
        }
    }
}

#[test]
fn smoothed_paths_match_rts_means() {
    let h = hmm();
    let model = TrackingModel::new(&h).unwrap();
    let obs = vec![Some(ObsVec::new(81.0, 99.0)), None, Some(ObsVec::new(83.5, 101.0)), Some(ObsVec::new(84.0, 103.0))];
    let lg = LinearGaussianModel::from_cv(&h, &LinearObsModel::from_params(&h));
    let sm = rts_smoother(&lg, &kalman_filter(&lg, &obs).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let runs = 3000;
    let mut sum = vec![[0.0; 4]; obs.len()];
    let mut sq = vec![[0.0; 4]; obs.len()];
    for _ in 0..runs {
        let ps = particle_filter(&model, &obs, 200, &Bootstrap, &mut rng).unwrap();
        let (_, path) = backward_simulate(&ps, &model, &mut rng).unwrap();
        for (t, x) in path.iter().enumerate() {
            for d in 0..4 {
                sum[t][d] += x[d];
                sq[t][d] += x[d] * x[d];
            }
        }
    }
    let r = runs as f64;
    for t in 0..obs.len() {
        for d in 0..4 {
            let m = sum[t][d] / r;
            let se = ((sq[t][d] / r - m * m) / r).sqrt();
            let z = (m - sm[t].mean[d]).abs() / se;
            assert!(z < 3.0, "t = {t}, component {d}: {z:.2} SE from the smoother mean");
        }
    }
}

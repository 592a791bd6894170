mod common;

use cemtd::environments::make_vanroy;
use cemtd::mdp::{projection_matrix, sample_double_transition, sample_transition, solve_value_function, MdpOracle};
use cemtd::SimRng;
use common::{random_features, random_mdp, random_vector, rel_err};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;

fn case() -> impl Strategy<Value = (u64, usize, usize, f64)> {
    (any::<u64>(), 5usize..=20, 0.0f64..1.0, 0.0f64..0.99)
        .prop_map(|(seed, n, kf, gamma)| (seed, n, 1 + (kf * (n - 1) as f64) as usize, gamma))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bellman_error_splits_into_projected_and_orthogonal_parts((seed, n, k, gamma) in case()) {
        let mdp = random_mdp(n, gamma, seed);
        let feats = random_features(n, k, seed);
        let oracle = MdpOracle::new(&mdp, Some(&feats)).unwrap();
        let mut rng = SimRng::seed_from_u64(seed);
        let z = random_vector(k, 5.0, &mut rng);
        let tv = oracle.bellman(&feats.values(&z));
        let off: DVector<f64> = &tv - oracle.project(&tv);
        let orth = off.iter().zip(mdp.nu().iter()).map(|(d, w)| w * d * d).sum::<f64>();
        let (msbr, mspbe) = (oracle.msbr(&z), oracle.mspbe(&z));
        prop_assert!(rel_err(msbr, mspbe + orth) < 1e-9, "msbr {msbr} vs {}", mspbe + orth);
        prop_assert!(mspbe <= msbr * (1.0 + 1e-12));
        let bound = oracle.concentration().sqrt() / (1.0 - gamma) * msbr.sqrt();
        prop_assert!(oracle.mse(&z).sqrt() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn value_solves_the_bellman_equation((seed, n, _k, gamma) in case()) {
        let mdp = random_mdp(n, gamma, seed);
        let v = solve_value_function(&mdp).unwrap();
        let tv = mdp.expected_reward() + mdp.transition() * &v * gamma;
        prop_assert!((tv - &v).amax() < 1e-10 * v.amax().max(1.0));
    }

    #[test]
    fn projection_is_idempotent_and_self_adjoint((seed, n, k, gamma) in case()) {
        let mdp = random_mdp(n, gamma, seed);
        let feats = random_features(n, k, seed);
        let pi = projection_matrix(&mdp, &feats).unwrap();
        prop_assert!((&pi * &pi - &pi).amax() < 1e-9);
        let d = DMatrix::from_diagonal(mdp.nu());
        prop_assert!((&d * &pi - pi.transpose() * &d).amax() < 1e-9);
    }
}

#[test]
fn sampled_states_and_successors_follow_nu_and_p() {
    let mdp = random_mdp(6, 0.9, 11);
    let mut rng = SimRng::seed_from_u64(3);
    let n = 200_000;
    let mut visits = vec![0usize; 6];
    let mut pairs = DMatrix::<f64>::zeros(6, 6);
    for _ in 0..n {
        let tr = sample_transition(&mdp, &mut rng);
        visits[tr.s] += 1;
        pairs[(tr.s, tr.s_next)] += 1.0;
    }
    for s in 0..6 {
        let freq = visits[s] as f64 / n as f64;
        assert!((freq - mdp.nu()[s]).abs() < 0.005, "state {s}: {freq} vs {}", mdp.nu()[s]);
        for s2 in 0..6 {
            let cond = pairs[(s, s2)] / visits[s] as f64;
            assert!((cond - mdp.transition()[(s, s2)]).abs() < 0.015);
        }
    }
}

#[test]
fn double_samples_are_conditionally_independent() {
    let env = make_vanroy().unwrap();
    let mut rng = SimRng::seed_from_u64(8);
    let n = 100_000;
    let (mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let tr = sample_double_transition(&env.mdp, &mut rng);
        // Centre each successor on its conditional mean.
        let row = env.mdp.transition().row(tr.s);
        a.push(f64::from(tr.s_next == 0) - row[0]);
        b.push(f64::from(tr.s_next2 == 0) - row[0]);
    }
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((dot / (na * nb)).abs() < 0.02);
}

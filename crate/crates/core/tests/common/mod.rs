#![allow(dead_code)]

use cemtd::mdp::{stationary_distribution, FiniteMdp, LinearFeatures};
use cemtd::SimRng;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

/// Dense random chain with strictly positive rows, so it is ergodic and `ν`
/// is its stationary law.
pub fn random_mdp(n: usize, gamma: f64, seed: u64) -> FiniteMdp {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut p = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.05..1.0));
    for mut row in p.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
    let nu = stationary_distribution(&p, 1e-14, 100_000);
    FiniteMdp::new(p, r, gamma, nu).unwrap()
}

pub fn random_features(n: usize, k: usize, seed: u64) -> LinearFeatures {
    let mut rng = SimRng::seed_from_u64(seed ^ 0x5eed);
    loop {
        let phi = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
        let f = LinearFeatures::new(phi).unwrap();
        if f.full_rank() {
            return f;
        }
    }
}

pub fn random_vector(k: usize, scale: f64, rng: &mut SimRng) -> DVector<f64> {
    DVector::from_fn(k, |_, _| rng.random_range(-scale..scale))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn rel_fro(est: &DMatrix<f64>, exact: &DMatrix<f64>) -> f64 {
    (est - exact).norm() / exact.norm()
}

/// Positive rewards, near-tabular features and a moderate discount: every
/// moment block is far from zero (with `γ` near 1, `γE[φ'|s] − φ` nearly
/// cancels) and `E[φφᵀ]` has eigenvalues above 1/2, which the `1/t` inverse
/// recursion needs to converge at the usual rate.
pub fn tracker_problem(seed: u64) -> (FiniteMdp, LinearFeatures) {
    let mdp = random_mdp(10, 0.5, seed);
    let mdp = mdp.with_reward(mdp.reward().add_scalar(3.0)).unwrap();
    let mut rng = SimRng::seed_from_u64(seed);
    let noise = random_vector(40, 0.3, &mut rng);
    let phi = DMatrix::from_fn(10, 4, |s, j| if s % 4 == j { 2.0 } else { 0.0 } + noise[4 * s + j]);
    let feats = LinearFeatures::new(phi).unwrap();
    assert!(feats.full_rank());
    (mdp, feats)
}

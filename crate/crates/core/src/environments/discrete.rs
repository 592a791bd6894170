use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

use super::features::{fourier_features, rbf_features};
use crate::mdp::{stationary_distribution, FiniteMdp, LinearFeatures, NonlinearManifold};
use crate::{Result, SimRng};

/// A finite benchmark: its Markov reward process, linear features and,
/// for the nonlinear settings, the value family.
#[derive(Debug, Clone)]
pub struct DiscreteEnv {
    pub mdp: FiniteMdp,
    pub feats: LinearFeatures,
    pub name: String,
    pub manifold: Option<NonlinearManifold>,
}

impl DiscreteEnv {
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.mdp = self.mdp.with_gamma(gamma)?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BairdFeatures {
    Perfect,
    Imperfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Rbf,
    Fourier,
}

const STATIONARY_TOL: f64 = 1e-12;

#[rustfmt::skip]
const BAIRD_PHI: [f64; 56] = [
    1., 2., 0., 0., 0., 0., 0., 0.,
    1., 0., 2., 0., 0., 0., 0., 0.,
    1., 0., 0., 2., 0., 0., 0., 0.,
    1., 0., 0., 0., 2., 0., 0., 0.,
    1., 0., 0., 0., 0., 2., 0., 0.,
    1., 0., 0., 0., 0., 0., 2., 0.,
    2., 0., 0., 0., 0., 0., 0., 1.,
];

#[rustfmt::skip]
const BAIRD_PHI1: [f64; 56] = [
    1., 2., 0., 0., 0., 0., 1., 0.,
    1., 0., 2., 0., 0., 0., 0., 0.,
    1., 0., 0., 2., 0., 0., 0., 0.,
    1., 0., 0., 0., 2., 0., 0., 0.,
    1., 0., 0., 0., 0., 0., 0., 2.,
    1., 0., 0., 0., 0., 0., 0., 3.,
    2., 0., 0., 0., 0., 0., 0., 1.,
];

fn uniform(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0 / n as f64)
}

fn baird_phi(set: BairdFeatures) -> DMatrix<f64> {
    match set {
        BairdFeatures::Perfect => DMatrix::from_row_slice(7, 8, &BAIRD_PHI),
        BairdFeatures::Imperfect => DMatrix::from_row_slice(7, 8, &BAIRD_PHI1),
    }
}

/// The 7-star: every state moves to the hub (index 6); ν uniform.
/// Perfect features use `R ≡ 0`, `γ = 0.9`; imperfect ones `R ≡ 2`, `γ = 0.99`.
pub fn make_baird(set: BairdFeatures) -> Result<DiscreteEnv> {
    let p = DMatrix::from_fn(7, 7, |_, j| if j == 6 { 1.0 } else { 0.0 });
    let (reward, gamma, name) = match set {
        BairdFeatures::Perfect => (0.0, 0.9, "baird"),
        BairdFeatures::Imperfect => (2.0, 0.99, "baird-imperfect"),
    };
    let mdp = FiniteMdp::new(p, DMatrix::from_element(7, 7, reward), gamma, uniform(7))?;
    Ok(DiscreteEnv {
        mdp,
        feats: LinearFeatures::new(baird_phi(set))?,
        name: name.into(),
        manifold: None,
    })
}

fn ring_phi() -> DMatrix<f64> {
    let mut phi = DMatrix::zeros(10, 8);
    for i in 0..8 {
        phi[(i, i)] = 1.0;
    }
    phi[(8, 7)] = 1.0;
    phi[(9, 5)] = 1.0;
    phi
}

/// Deterministic 10-cycle with `R ≡ 1`, `γ = 0.99`, ν uniform.
pub fn make_ring10() -> Result<DiscreteEnv> {
    let p = DMatrix::from_fn(10, 10, |i, j| if j == (i + 1) % 10 { 1.0 } else { 0.0 });
    let mdp = FiniteMdp::new(p, DMatrix::from_element(10, 10, 1.0), 0.99, uniform(10))?;
    Ok(DiscreteEnv { mdp, feats: LinearFeatures::new(ring_phi())?, name: "ring10".into(), manifold: None })
}

/// `ln C(n, j)` for `j = 0..=n`.
fn log_binomials(n: usize) -> Vec<f64> {
    let mut ln_fact = vec![0.0; n + 1];
    for i in 1..=n {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    (0..=n).map(|j| ln_fact[n] - ln_fact[j] - ln_fact[n - j]).collect()
}

/// Random chain with binomial rows `C(n,s')b(s)^{s'}(1−b(s))^{n−s'}`
/// renormalized over `s' < n`, reward `G(s)G(s')/(1+s')^{1/4}` and ν the
/// stationary distribution. `γ` is 0.9 for Fourier features and 0.01 for RBFs.
pub fn make_random_mdp(
    n_states: usize,
    n_actions: usize,
    k: usize,
    basis: Basis,
    seed: u64,
) -> Result<DiscreteEnv> {
    let n = n_states;
    let mut rng = SimRng::seed_from_u64(seed);
    let g: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let lc = log_binomials(n);
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        let (lb, lq) = (b[s].ln(), (1.0 - b[s]).ln());
        let logs: Vec<f64> =
            (0..n).map(|j| lc[j] + j as f64 * lb + (n - j) as f64 * lq).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        for j in 0..n {
            p[(s, j)] = w[j] / total;
        }
    }
    let reward = DMatrix::from_fn(n, n, |s, s2| g[s] * g[s2] / (1.0 + s2 as f64).powf(0.25));
    let nu = stationary_distribution(&p, STATIONARY_TOL, 1_000_000);
    let (phi, gamma, label) = match basis {
        Basis::Rbf => (rbf_features(n, k), 0.01, "rbf"),
        Basis::Fourier => (fourier_features(n, k), 0.9, "fourier"),
    };
    let mdp = FiniteMdp::new(p, reward, gamma, nu)?;
    Ok(DiscreteEnv {
        mdp,
        feats: LinearFeatures::new(phi)?,
        name: format!("random-{label}-s{n}-a{n_actions}-k{k}"),
        manifold: None,
    })
}

pub const VANROY_A: [f64; 3] = [100.0, -70.0, -30.0];
pub const VANROY_B: [f64; 3] = [23.094, -98.15, 75.056];
pub const VANROY_TAU: f64 = 0.01;
pub const VANROY_EPS: f64 = 0.001;

/// Three-state chain with the spiral family `ψ_η`; `R ≡ 0`, `γ = 0.9`.
/// The linear features are the spiral's spanning pair `[a b]`.
pub fn make_vanroy() -> Result<DiscreteEnv> {
    #[rustfmt::skip]
    let p = DMatrix::from_row_slice(3, 3, &[
        0.5, 0.0, 0.5,
        0.5, 0.5, 0.0,
        0.0, 0.5, 0.5,
    ]);
    let nu = stationary_distribution(&p, STATIONARY_TOL, 1_000_000);
    let mdp = FiniteMdp::new(p, DMatrix::zeros(3, 3), 0.9, nu)?;
    let a = DVector::from_row_slice(&VANROY_A);
    let b = DVector::from_row_slice(&VANROY_B);
    let phi = DMatrix::from_columns(&[a.clone(), b.clone()]);
    Ok(DiscreteEnv {
        mdp,
        feats: LinearFeatures::new(phi)?,
        name: "vanroy".into(),
        manifold: Some(NonlinearManifold::Spiral { a, b, tau: VANROY_TAU, eps: VANROY_EPS }),
    })
}

/// Baird's star with `R ≡ 0`, `γ = 0.9` and values `Φh(z)`,
/// `h_i(z) = cos²(z_i)e^{0.01 z_i}`.
pub fn make_nonlinear_baird() -> Result<DiscreteEnv> {
    let base = make_baird(BairdFeatures::Perfect)?;
    let mdp = base.mdp.with_reward(DMatrix::zeros(7, 7))?.with_gamma(0.9)?;
    let manifold = NonlinearManifold::CosExp { phi: base.feats.phi().clone(), kappa: 0.01 };
    Ok(DiscreteEnv { mdp, feats: base.feats, name: "baird-nl".into(), manifold: Some(manifold) })
}

/// The 10-ring with `R ≡ 0`, `γ = 0.99` and values `Φh(z)`,
/// `h_i(z) = cos²(z_i)e^{0.1 z_i}`.
pub fn make_nonlinear_ring() -> Result<DiscreteEnv> {
    let base = make_ring10()?;
    let mdp = base.mdp.with_reward(DMatrix::zeros(10, 10))?.with_gamma(0.99)?;
    let manifold = NonlinearManifold::CosExp { phi: base.feats.phi().clone(), kappa: 0.1 };
    Ok(DiscreteEnv { mdp, feats: base.feats, name: "ring10-nl".into(), manifold: Some(manifold) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::solve_value_function;

    #[test]
    fn baird_literals() {
        let env = make_baird(BairdFeatures::Perfect).unwrap();
        let phi = env.feats.phi();
        assert_eq!(phi.row(0).iter().copied().collect::<Vec<_>>(), vec![1., 2., 0., 0., 0., 0., 0., 0.]);
        assert_eq!(phi.row(5).iter().copied().collect::<Vec<_>>(), vec![1., 0., 0., 0., 0., 0., 2., 0.]);
        assert_eq!(phi.row(6).iter().copied().collect::<Vec<_>>(), vec![2., 0., 0., 0., 0., 0., 0., 1.]);
        for s in 0..7 {
            for j in 0..7 {
                assert_eq!(env.mdp.transition()[(s, j)], if j == 6 { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(env.mdp.gamma(), 0.9);
        assert!(solve_value_function(&env.mdp).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn baird_imperfect_literals() {
        let env = make_baird(BairdFeatures::Imperfect).unwrap();
        let phi = env.feats.phi();
        assert_eq!(phi.row(0).iter().copied().collect::<Vec<_>>(), vec![1., 2., 0., 0., 0., 0., 1., 0.]);
        assert_eq!(phi.row(4).iter().copied().collect::<Vec<_>>(), vec![1., 0., 0., 0., 0., 0., 0., 2.]);
        assert_eq!(phi.row(5).iter().copied().collect::<Vec<_>>(), vec![1., 0., 0., 0., 0., 0., 0., 3.]);
        assert_eq!(env.mdp.reward()[(3, 6)], 2.0);
        assert_eq!(env.mdp.gamma(), 0.99);
        let v = solve_value_function(&env.mdp).unwrap();
        assert!(v.iter().all(|&x| (x - 200.0).abs() < 1e-9));
    }

    #[test]
    fn ring_literals_and_value() {
        let env = make_ring10().unwrap();
        for s in 0..10 {
            assert_eq!(env.mdp.transition()[(s, (s + 1) % 10)], 1.0);
        }
        assert_eq!(env.feats.row(8), env.feats.row(7));
        assert_eq!(env.feats.row(9), env.feats.row(5));
        let short = env.with_gamma(0.9).unwrap();
        let v = solve_value_function(&short.mdp).unwrap();
        assert!(v.iter().all(|&x| (x - 10.0).abs() < 1e-9));
    }

    #[test]
    fn random_mdp_is_stochastic_and_seeded() {
        let a = make_random_mdp(64, 8, 4, Basis::Rbf, 3).unwrap();
        let b = make_random_mdp(64, 8, 4, Basis::Rbf, 3).unwrap();
        assert_eq!(a.mdp.transition(), b.mdp.transition());
        for s in 0..64 {
            assert!((a.mdp.transition().row(s).sum() - 1.0).abs() < 1e-12);
        }
        let nu = a.mdp.nu();
        let back = a.mdp.transition().transpose() * nu;
        assert!((back - nu).abs().max() < 1e-10);
        let c = make_random_mdp(64, 8, 4, Basis::Fourier, 4).unwrap();
        assert_ne!(a.mdp.transition(), c.mdp.transition());
        assert_eq!(c.mdp.gamma(), 0.9);
        assert_eq!(a.mdp.gamma(), 0.01);
    }

    #[test]
    fn random_mdp_binomial_row() {
        // Row s of P is proportional to the binomial pmf with parameter b(s).
        let env = make_random_mdp(12, 1, 2, Basis::Rbf, 11).unwrap();
        let mut rng = SimRng::seed_from_u64(11);
        let g: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
        let binom = |n: u64, j: u64| -> f64 { (1..=j).map(|i| (n - j + i) as f64 / i as f64).product() };
        let s = 4;
        let raw: Vec<f64> =
            (0..12).map(|j| binom(12, j as u64) * b[s].powi(j) * (1.0 - b[s]).powi(12 - j)).collect();
        let total: f64 = raw.iter().sum();
        for j in 0..12 {
            assert!((env.mdp.transition()[(s, j as usize)] - raw[j as usize] / total).abs() < 1e-12);
        }
        let r = env.mdp.reward()[(2, 5)];
        assert!((r - g[2] * g[5] / 6f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn vanroy_stationary_uniform() {
        let env = make_vanroy().unwrap();
        for &x in env.mdp.nu().iter() {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
        let m = env.manifold.as_ref().unwrap();
        let v = m.values(&DVector::zeros(1));
        assert_eq!(v.as_slice(), &VANROY_A);
    }

    #[test]
    fn nonlinear_envs_have_zero_value() {
        for env in [make_nonlinear_baird().unwrap(), make_nonlinear_ring().unwrap()] {
            assert!(solve_value_function(&env.mdp).unwrap().iter().all(|&v| v == 0.0));
            let m = env.manifold.as_ref().unwrap();
            let v = m.values(&DVector::zeros(8));
            let sums = env.feats.phi().column_sum();
            assert_eq!(v, sums);
        }
        assert_eq!(make_nonlinear_ring().unwrap().mdp.gamma(), 0.99);
    }
}

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::features::{quadratic_dim, quadratic_features, quadratic_features_mean, quadratic_weights};
use super::lqr::{discounted_lqr, discounted_lyapunov, stationary_covariance};
use crate::linalg::psd_pinv;
use crate::mdp::{DoubleFeatureTransition, Evaluator, FeatureTransition, TransitionStream};
use crate::{Error, Result, SimRng};

/// Evaluation states used by [`ContinuousEnv::evaluator`].
pub const EVAL_STATES: usize = 10_000;
const EVAL_THIN: usize = 10;
const EVAL_SEED: u64 = 0x5eed_e7a1;

/// A linear-Gaussian system `s' = As + Ba + w`, `w ∼ N(0, diag(noise_sd²))`,
/// reward `−sᵀQs − aᵀRa`, evaluated under the Gaussian policy
/// `a ∼ N(−Ks, σ₁²I)` where `K` is the discounted LQR gain.
#[derive(Debug, Clone)]
pub struct ContinuousEnv {
    pub name: String,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub noise_sd: DVector<f64>,
    pub action_sd: f64,
    pub gamma: f64,
    pub dt: f64,
    gain: DMatrix<f64>,
    closed_loop: DMatrix<f64>,
    /// Covariance of `s'` given `s`.
    step_cov: DMatrix<f64>,
    stationary_cov: DMatrix<f64>,
    value_p: DMatrix<f64>,
    value_c: f64,
}

impl ContinuousEnv {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        noise_sd: DVector<f64>,
        action_sd: f64,
        gamma: f64,
        dt: f64,
    ) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
            return Err(Error::Dimension("inconsistent linear system shapes".into()));
        }
        if noise_sd.len() != n {
            return Err(Error::Dimension("noise_sd must have one entry per state".into()));
        }
        let (_, gain) = discounted_lqr(&a, &b, &q, &r, gamma)?;
        let closed_loop = &a - &b * &gain;
        let step_cov = &b * b.transpose() * (action_sd * action_sd)
            + DMatrix::from_diagonal(&noise_sd.map(|x| x * x));
        let cost = &q + gain.transpose() * &r * &gain;
        let value_p = discounted_lyapunov(&closed_loop, &cost, gamma)?;
        let value_c = ((&r).trace() * action_sd * action_sd
            + gamma * (&value_p * &step_cov).trace())
            / (1.0 - gamma);
        let stationary_cov = stationary_covariance(&closed_loop, &step_cov)?;
        Ok(Self {
            name: name.into(),
            a,
            b,
            q,
            r,
            noise_sd,
            action_sd,
            gamma,
            dt,
            gain,
            closed_loop,
            step_cov,
            stationary_cov,
            value_p,
            value_c,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn action_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn feature_dim(&self) -> usize {
        quadratic_dim(self.state_dim())
    }

    /// Policy gain `β₁ᵀ = −K`.
    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    pub fn stationary_cov(&self) -> &DMatrix<f64> {
        &self.stationary_cov
    }

    pub fn features(&self, s: &DVector<f64>, out: &mut DVector<f64>) {
        quadratic_features(s, out);
    }

    /// Noise-free linear step.
    pub fn mean_next(&self, s: &DVector<f64>, a: &DVector<f64>) -> DVector<f64> {
        &self.a * s + &self.b * a
    }

    pub fn reward(&self, s: &DVector<f64>, a: &DVector<f64>) -> f64 {
        -(s.dot(&(&self.q * s)) + a.dot(&(&self.r * a)))
    }

    /// `V(s) = −sᵀPs − c` for the evaluated policy.
    pub fn true_value(&self, s: &DVector<f64>) -> f64 {
        -(s.dot(&(&self.value_p * s))) - self.value_c
    }

    /// Weights `z*` with `φ(s)ᵀz* = V(s)`.
    pub fn true_weights(&self) -> DVector<f64> {
        quadratic_weights(&(-&self.value_p), -self.value_c)
    }

    fn expected_reward(&self, s: &DVector<f64>) -> f64 {
        let mean_a = -(&self.gain * s);
        let var = self.action_sd * self.action_sd;
        self.reward(s, &mean_a) - self.r.trace() * var
    }

    fn draw_action(&self, s: &DVector<f64>, rng: &mut SimRng) -> DVector<f64> {
        let mut a = -(&self.gain * s);
        for x in a.iter_mut() {
            let e: f64 = StandardNormal.sample(rng);
            *x += self.action_sd * e;
        }
        a
    }

    fn draw_next(&self, s: &DVector<f64>, a: &DVector<f64>, rng: &mut SimRng) -> DVector<f64> {
        let mut next = self.mean_next(s, a);
        for (x, sd) in next.iter_mut().zip(self.noise_sd.iter()) {
            let e: f64 = StandardNormal.sample(rng);
            *x += sd * e;
        }
        next
    }

    fn draw_stationary(&self, rng: &mut SimRng) -> DVector<f64> {
        let n = self.state_dim();
        let cov = &self.stationary_cov + DMatrix::identity(n, n) * 1e-300;
        let l = cov.cholesky().map(|c| c.l()).unwrap_or_else(|| DMatrix::zeros(n, n));
        let e = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        l * e
    }

    /// An on-policy trajectory started from the stationary distribution.
    pub fn stream(&self, rng: &mut SimRng) -> ContinuousStream<'_> {
        let state = self.draw_stationary(rng);
        ContinuousStream { env: self, state }
    }

    /// Error metrics on [`EVAL_STATES`] states thinned from a fixed-seed
    /// on-policy rollout, using exact one-step conditional moments.
    pub fn evaluator(&self) -> QuadraticEvaluator {
        self.evaluator_with(EVAL_STATES, EVAL_SEED)
    }

    pub fn evaluator_with(&self, n_states: usize, seed: u64) -> QuadraticEvaluator {
        let k = self.feature_dim();
        let mut rng = SimRng::seed_from_u64(seed);
        let mut s = self.draw_stationary(&mut rng);
        let mut phi = DVector::zeros(k);
        let mut phi_next = DVector::zeros(k);
        let mut gram = DMatrix::zeros(k, k);
        let mut m1 = DMatrix::zeros(k, k);
        let mut b0 = DVector::zeros(k);
        let mut cv = DVector::zeros(k);
        let mut v2 = 0.0;
        for _ in 0..n_states {
            for _ in 0..EVAL_THIN {
                let a = self.draw_action(&s, &mut rng);
                s = self.draw_next(&s, &a, &mut rng);
            }
            quadratic_features(&s, &mut phi);
            quadratic_features_mean(&(&self.closed_loop * &s), &self.step_cov, &mut phi_next);
            let r = self.expected_reward(&s);
            let v = self.true_value(&s);
            gram.ger(1.0, &phi, &phi, 1.0);
            phi_next *= self.gamma;
            phi_next -= &phi;
            m1.ger(1.0, &phi, &phi_next, 1.0);
            b0.axpy(r, &phi, 1.0);
            cv.axpy(v, &phi, 1.0);
            v2 += v * v;
        }
        let inv_n = 1.0 / n_states as f64;
        gram *= inv_n;
        let gram_inv = match gram.clone().cholesky() {
            Some(c) => c.inverse(),
            None => psd_pinv(&gram),
        };
        QuadraticEvaluator {
            gram,
            gram_inv,
            m1: m1 * inv_n,
            b0: b0 * inv_n,
            cv: cv * inv_n,
            v2: v2 * inv_n,
        }
    }
}

/// MSE and MSPBE over a fixed empirical state distribution.
#[derive(Debug, Clone)]
pub struct QuadraticEvaluator {
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    m1: DMatrix<f64>,
    b0: DVector<f64>,
    cv: DVector<f64>,
    v2: f64,
}

impl QuadraticEvaluator {
    pub fn mse(&self, z: &DVector<f64>) -> f64 {
        (z.dot(&(&self.gram * z)) - 2.0 * self.cv.dot(z) + self.v2).max(0.0)
    }

    /// `‖Π(TΦz − Φz)‖²` with the projected residual computed from `E[φδ]`.
    pub fn mspbe(&self, z: &DVector<f64>) -> f64 {
        let y = &self.b0 + &self.m1 * z;
        y.dot(&(&self.gram_inv * &y)).max(0.0)
    }
}

impl Evaluator for QuadraticEvaluator {
    fn sqrt_mse(&self, z: &DVector<f64>) -> f64 {
        self.mse(z).sqrt()
    }

    fn sqrt_mspbe(&self, z: &DVector<f64>) -> Option<f64> {
        Some(self.mspbe(z).sqrt())
    }
}

/// Continuous on-policy roll-out; double samples branch from the current
/// state and the trajectory follows the first branch.
#[derive(Debug, Clone)]
pub struct ContinuousStream<'a> {
    env: &'a ContinuousEnv,
    state: DVector<f64>,
}

impl ContinuousStream<'_> {
    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }
}

impl TransitionStream for ContinuousStream<'_> {
    fn dim(&self) -> usize {
        self.env.feature_dim()
    }

    fn gamma(&self) -> f64 {
        self.env.gamma
    }

    fn next_into(&mut self, rng: &mut SimRng, out: &mut FeatureTransition) {
        let env = self.env;
        let a = env.draw_action(&self.state, rng);
        let next = env.draw_next(&self.state, &a, rng);
        env.features(&self.state, &mut out.phi);
        env.features(&next, &mut out.phi_next);
        out.reward = env.reward(&self.state, &a);
        self.state = next;
    }

    fn next_double_into(&mut self, rng: &mut SimRng, out: &mut DoubleFeatureTransition) {
        let env = self.env;
        let a1 = env.draw_action(&self.state, rng);
        let n1 = env.draw_next(&self.state, &a1, rng);
        let a2 = env.draw_action(&self.state, rng);
        let n2 = env.draw_next(&self.state, &a2, rng);
        env.features(&self.state, &mut out.phi);
        env.features(&n1, &mut out.phi_next);
        env.features(&n2, &mut out.phi_next2);
        out.reward = env.reward(&self.state, &a1);
        out.reward2 = env.reward(&self.state, &a2);
        self.state = n1;
    }
}

pub const CARTPOLE_ACTION_SD: f64 = 0.1;
pub const PENDULUM_ACTION_SD: f64 = 0.1;
pub const PENDULUM_NOISE_SD: f64 = 0.01;

/// Linearized cart-pole, state `(x, ẋ, ψ, ψ̇)`, one horizontal force.
pub fn make_cartpole() -> Result<ContinuousEnv> {
    let (g, m, big_m, l, b, dt, sigma2) = (9.8, 0.5, 0.5, 0.6, 0.1, 0.1, 0.01);
    let d1 = 4.0 * big_m * l - m * l;
    let d2 = 4.0 * big_m - m;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.0, 0.0,                           dt,
        0.0, 1.0, dt * 3.0 * (big_m + m) / d1,   dt * 3.0 * b / d1,
        0.0, dt,  1.0,                           0.0,
        0.0, 0.0, dt * 3.0 * m * g / d2,         1.0 - dt * 4.0 * b / d2,
    ]);
    let bm = DMatrix::from_column_slice(4, 1, &[0.0, -dt * 3.0 / d1, 0.0, dt * 4.0 / d2]);
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 100.0, 0.0]));
    let r = DMatrix::from_element(1, 1, 0.1);
    let noise = DVector::from_vec(vec![0.0, 0.0, 0.0, sigma2]);
    ContinuousEnv::new("cartpole", a, bm, q, r, noise, CARTPOLE_ACTION_SD, 0.95, dt)
}

/// Mass matrix `M_ij = l²(6 − max(i,j))m` (1-based indices).
pub fn pendulum_mass(l: f64, m: f64) -> DMatrix<f64> {
    DMatrix::from_fn(5, 5, |i, j| l * l * (6.0 - (i.max(j) + 1) as f64) * m)
}

/// `U_ii = −gl(6 − i)m` (1-based indices).
pub fn pendulum_u(g: f64, l: f64, m: f64) -> DMatrix<f64> {
    DMatrix::from_fn(5, 5, |i, j| if i == j { -g * l * (6.0 - (i + 1) as f64) * m } else { 0.0 })
}

/// Five-link pendulum linearized about upright, state `(q, q̇) ∈ R¹⁰`,
/// five joint torques, reward `−qᵀq`.
pub fn make_pendulum5() -> Result<ContinuousEnv> {
    let (g, m, l, dt) = (9.8, 1.0, 1.0, 0.1);
    let mass = pendulum_mass(l, m);
    let minv = mass
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("pendulum mass matrix".into()))?;
    let u = pendulum_u(g, l, m);
    let mut a = DMatrix::identity(10, 10);
    let lower = -(&minv * &u) * dt;
    for i in 0..5 {
        a[(i, 5 + i)] = dt;
        for j in 0..5 {
            a[(5 + i, j)] = lower[(i, j)];
        }
    }
    let mut b = DMatrix::zeros(10, 5);
    b.view_mut((5, 0), (5, 5)).copy_from(&(&minv * dt));
    let mut q = DMatrix::zeros(10, 10);
    for i in 0..5 {
        q[(i, i)] = 1.0;
    }
    let r = DMatrix::zeros(5, 5);
    let noise = DVector::from_element(10, PENDULUM_NOISE_SD);
    ContinuousEnv::new("pendulum5", a, b, q, r, noise, PENDULUM_ACTION_SD, 0.95, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartpole_step_matches_printed_map() {
        let env = make_cartpole().unwrap();
        let (g, m, big_m, l, b, dt) = (9.8, 0.5, 0.5, 0.6, 0.1, 0.1);
        let s = DVector::from_vec(vec![0.3, -0.2, 0.05, 0.4]);
        let act = DVector::from_element(1, 1.5);
        let (x, xd, psi, psid, a) = (s[0], s[1], s[2], s[3], act[0]);
        let expect = [
            x + dt * psid,
            xd + dt * (3.0 * (big_m + m) * psi - 3.0 * a + 3.0 * b * psid) / (4.0 * big_m * l - m * l),
            psi + dt * xd,
            psid + dt * (3.0 * m * g * psi + 4.0 * a - 4.0 * b * psid) / (4.0 * big_m - m),
        ];
        let got = env.mean_next(&s, &act);
        for i in 0..4 {
            assert!((got[i] - expect[i]).abs() < 1e-12);
        }
        let r = env.reward(&s, &act);
        assert!((r - (-100.0 * psi * psi - x * x - a * a / 10.0)).abs() < 1e-12);
    }

    #[test]
    fn origin_is_fixed() {
        for env in [make_cartpole().unwrap(), make_pendulum5().unwrap()] {
            let s = DVector::zeros(env.state_dim());
            let a = DVector::zeros(env.action_dim());
            assert_eq!(env.mean_next(&s, &a), s);
        }
    }

    #[test]
    fn feature_dimensions() {
        assert_eq!(make_cartpole().unwrap().feature_dim(), 11);
        assert_eq!(make_pendulum5().unwrap().feature_dim(), 56);
    }

    #[test]
    fn pendulum_matrices() {
        let mass = pendulum_mass(1.0, 1.0);
        assert_eq!(mass[(0, 0)], 5.0);
        assert_eq!(mass[(1, 3)], 2.0);
        assert_eq!(mass, mass.transpose());
        let u = pendulum_u(9.8, 1.0, 1.0);
        assert!((u[(0, 0)] + 49.0).abs() < 1e-12);
        assert!((u[(4, 4)] + 9.8).abs() < 1e-12);
        assert_eq!(u[(0, 1)], 0.0);
    }

    #[test]
    fn true_weights_solve_the_bellman_equation() {
        for env in [make_cartpole().unwrap(), make_pendulum5().unwrap()] {
            let ev = env.evaluator_with(2000, 1);
            let z = env.true_weights();
            assert!(ev.mse(&z).sqrt() < 1e-6 * env.value_c.abs().max(1.0), "{}", env.name);
            assert!(ev.mspbe(&z).sqrt() < 1e-6 * env.value_c.abs().max(1.0), "{}", env.name);
            let off = DVector::from_element(z.len(), 0.0);
            assert!(ev.mspbe(&off) > 0.0);
        }
    }

    #[test]
    fn value_satisfies_one_step_recursion() {
        // V(s) = E[r|s] + γ E[V(s')|s], checked by Monte Carlo at one state.
        let env = make_cartpole().unwrap();
        let s = DVector::from_vec(vec![0.1, -0.1, 0.02, 0.05]);
        let mut rng = SimRng::seed_from_u64(9);
        let n = 200_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let a = env.draw_action(&s, &mut rng);
            let next = env.draw_next(&s, &a, &mut rng);
            acc += env.reward(&s, &a) + env.gamma * env.true_value(&next);
        }
        let mc = acc / n as f64;
        let v = env.true_value(&s);
        assert!((mc - v).abs() < 2e-3 * v.abs(), "{mc} vs {v}");
    }

    #[test]
    fn stream_is_on_policy() {
        let env = make_cartpole().unwrap();
        let mut rng = SimRng::seed_from_u64(2);
        let mut st = env.stream(&mut rng);
        let mut tr = FeatureTransition::zeros(11);
        let mut prev = st.state().clone();
        for _ in 0..5 {
            st.next_into(&mut rng, &mut tr);
            let mut phi = DVector::zeros(11);
            env.features(&prev, &mut phi);
            assert_eq!(phi, tr.phi);
            prev = st.state().clone();
            env.features(&prev, &mut phi);
            assert_eq!(phi, tr.phi_next);
        }
    }
}

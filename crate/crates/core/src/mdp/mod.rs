//! Finite Markov reward processes, exact oracles and samplers.

mod manifold;
mod oracle;
mod sample;
mod stream;

pub use manifold::NonlinearManifold;
pub use oracle::{
    exact_msbr_moments, exact_mspbe_moments, msbr_exact, mse, mspbe_exact, projection_matrix,
    solve_value_function, stationary_distribution, MdpOracle, MsbrMoments, MspbeMoments,
};
pub use sample::{rollout_onpolicy, sample_double_transition, sample_transition};
pub use stream::{
    DoubleFeatureTransition, Evaluator, FeatureTransition, IidStream, ManifoldEvaluator,
    TransitionStream,
};

use nalgebra::{DMatrix, DVector};

use crate::linalg::numerical_rank;
use crate::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// A policy-induced Markov reward process `(P, R, γ, ν)`.
#[derive(Debug, Clone)]
pub struct FiniteMdp {
    p: DMatrix<f64>,
    reward: DMatrix<f64>,
    gamma: f64,
    nu: DVector<f64>,
    nu_cdf: Vec<f64>,
    row_cdf: Vec<Vec<f64>>,
}

impl FiniteMdp {
    pub fn new(
        p: DMatrix<f64>,
        reward: DMatrix<f64>,
        gamma: f64,
        nu: DVector<f64>,
    ) -> Result<Self> {
        let n = p.nrows();
        if n == 0 || p.ncols() != n {
            return Err(Error::InvalidMdp(format!("P must be square, got {}x{}", n, p.ncols())));
        }
        if reward.shape() != (n, n) {
            return Err(Error::InvalidMdp("reward must be n x n".into()));
        }
        if nu.len() != n {
            return Err(Error::InvalidMdp("nu must have n entries".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidMdp(format!("gamma must lie in [0,1), got {gamma}")));
        }
        for s in 0..n {
            let row = p.row(s);
            if row.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidMdp(format!("row {s} of P has a negative entry")));
            }
            if (row.sum() - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidMdp(format!("row {s} of P sums to {}", row.sum())));
            }
        }
        if nu.iter().any(|&x| !(x > 0.0)) || (nu.sum() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMdp("nu must be a strictly positive distribution".into()));
        }
        if reward.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMdp("reward has non-finite entries".into()));
        }
        let nu_cdf = cumulative(nu.iter().copied());
        let row_cdf = (0..n).map(|s| cumulative(p.row(s).iter().copied())).collect();
        Ok(Self { p, reward, gamma, nu, nu_cdf, row_cdf })
    }

    pub fn n_states(&self) -> usize {
        self.p.nrows()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn reward(&self) -> &DMatrix<f64> {
        &self.reward
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn nu(&self) -> &DVector<f64> {
        &self.nu
    }

    /// `R^π(s) = Σ_{s'} P(s,s') R(s,s')`.
    pub fn expected_reward(&self) -> DVector<f64> {
        let n = self.n_states();
        DVector::from_fn(n, |s, _| self.p.row(s).dot(&self.reward.row(s)))
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.p.clone(), self.reward.clone(), gamma, self.nu.clone())
    }

    pub fn with_reward(&self, reward: DMatrix<f64>) -> Result<Self> {
        Self::new(self.p.clone(), reward, self.gamma, self.nu.clone())
    }

    pub(crate) fn nu_cdf(&self) -> &[f64] {
        &self.nu_cdf
    }

    pub(crate) fn row_cdf(&self, s: usize) -> &[f64] {
        &self.row_cdf[s]
    }
}

fn cumulative(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = it
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

/// Linear features: row `s` of `phi` is `φ(s)ᵀ`.
#[derive(Debug, Clone)]
pub struct LinearFeatures {
    phi: DMatrix<f64>,
    rank: usize,
}

impl LinearFeatures {
    pub fn new(phi: DMatrix<f64>) -> Result<Self> {
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::Dimension("feature matrix has non-finite entries".into()));
        }
        let rank = numerical_rank(&phi);
        Ok(Self { phi, rank })
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn n_states(&self) -> usize {
        self.phi.nrows()
    }

    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn full_rank(&self) -> bool {
        self.rank == self.dim()
    }

    /// Copies `φ(s)` into `out`.
    #[inline]
    pub fn write_row(&self, s: usize, out: &mut DVector<f64>) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.phi[(s, j)];
        }
    }

    pub fn row(&self, s: usize) -> DVector<f64> {
        self.phi.row(s).transpose()
    }

    pub fn values(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.phi * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s: usize,
    pub r: f64,
    pub s_next: usize,
}

/// Two successors drawn independently from the same state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleTransition {
    pub s: usize,
    pub r: f64,
    pub r_prime: f64,
    pub s_next: usize,
    pub s_next2: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_stochastic_rows() {
        let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 0.0, 1.0]);
        let r = DMatrix::zeros(2, 2);
        let nu = DVector::from_element(2, 0.5);
        assert!(FiniteMdp::new(p, r, 0.9, nu).is_err());
    }

    #[test]
    fn rejects_gamma_one_and_zero_mass_nu() {
        let p = DMatrix::identity(2, 2);
        let r = DMatrix::zeros(2, 2);
        assert!(FiniteMdp::new(p.clone(), r.clone(), 1.0, DVector::from_element(2, 0.5)).is_err());
        assert!(FiniteMdp::new(p, r, 0.5, DVector::from_vec(vec![1.0, 0.0])).is_err());
    }

    #[test]
    fn expected_reward_averages_over_successors() {
        let p = DMatrix::from_row_slice(2, 2, &[0.25, 0.75, 1.0, 0.0]);
        let r = DMatrix::from_row_slice(2, 2, &[4.0, 8.0, 2.0, 100.0]);
        let mdp = FiniteMdp::new(p, r, 0.5, DVector::from_element(2, 0.5)).unwrap();
        let rp = mdp.expected_reward();
        assert!((rp[0] - 7.0).abs() < 1e-15);
        assert!((rp[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rank_flag() {
        let f = LinearFeatures::new(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]))
            .unwrap();
        assert_eq!(f.rank(), 1);
        assert!(!f.full_rank());
        let g = LinearFeatures::new(DMatrix::identity(3, 3)).unwrap();
        assert!(g.full_rank());
    }
}

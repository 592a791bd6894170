use nalgebra::{DMatrix, DVector};

use crate::linalg::solve_or_pinv;
use crate::mdp::FeatureTransition;
use crate::{Error, Result};

/// Default `ε` in `A₀ = εI`.
pub const LS_EPSILON: f64 = 1e-3;

/// Accumulated statistics of LSTD(λ) and LSPE(λ).
///
/// `b_inv` tracks `B⁻¹` for `B = εI + Σφφᵀ` by rank-one updates, and
/// `z` is the LSPE iterate `z ← z + B⁻¹(b − Az)`.
#[derive(Debug, Clone)]
pub struct LeastSquaresState {
    pub a: DMatrix<f64>,
    pub b_inv: Option<DMatrix<f64>>,
    pub b: DVector<f64>,
    pub e: DVector<f64>,
    pub z: DVector<f64>,
    diff: DVector<f64>,
    scratch: DVector<f64>,
}

impl LeastSquaresState {
    pub fn new(k: usize, epsilon: f64) -> Self {
        Self {
            a: DMatrix::identity(k, k) * epsilon,
            b_inv: None,
            b: DVector::zeros(k),
            e: DVector::zeros(k),
            z: DVector::zeros(k),
            diff: DVector::zeros(k),
            scratch: DVector::zeros(k),
        }
    }

    /// State that also runs the LSPE iteration.
    pub fn with_lspe(k: usize, epsilon: f64) -> Self {
        Self { b_inv: Some(DMatrix::identity(k, k) / epsilon), ..Self::new(k, epsilon) }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `e ← φ + γλe`, `A ← A + e(φ − γφ')ᵀ`, `b ← b + e r`, then one LSPE
    /// iteration when enabled.
    pub fn push(&mut self, tr: &FeatureTransition, lambda: f64, gamma: f64) {
        self.e *= gamma * lambda;
        self.e += &tr.phi;
        self.diff.copy_from(&tr.phi);
        self.diff.axpy(-gamma, &tr.phi_next, 1.0);
        self.a.ger(1.0, &self.e, &self.diff, 1.0);
        self.b.axpy(tr.reward, &self.e, 1.0);
        if let Some(b_inv) = self.b_inv.as_mut() {
            // Sherman-Morrison for B + φφᵀ.
            b_inv.mul_to(&tr.phi, &mut self.scratch);
            let denom = 1.0 + tr.phi.dot(&self.scratch);
            b_inv.ger(-1.0 / denom, &self.scratch, &self.scratch, 1.0);
            self.scratch.copy_from(&self.b);
            self.scratch.gemv(-1.0, &self.a, &self.z, 1.0);
            self.z.gemv(1.0, b_inv, &self.scratch, 1.0);
        }
    }

    /// `A_T⁻¹ b_T`, with a pseudo-inverse fallback.
    pub fn lstd_solve(&self) -> Result<DVector<f64>> {
        solve_or_pinv(&self.a, &self.b)
            .ok_or_else(|| Error::Singular("LSTD matrix has no usable pseudo-inverse".into()))
    }

    /// Current LSPE iterate.
    pub fn lspe_solve(&self) -> Result<DVector<f64>> {
        match self.b_inv {
            Some(_) if self.z.iter().all(|x| x.is_finite()) => Ok(self.z.clone()),
            Some(_) => Err(Error::Singular("LSPE iterate is not finite".into())),
            None => Err(Error::Config("state was built without LSPE".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_state_solves_to_zero() {
        let s = LeastSquaresState::with_lspe(3, LS_EPSILON);
        assert_eq!(s.lstd_solve().unwrap(), DVector::zeros(3));
        assert_eq!(s.lspe_solve().unwrap(), DVector::zeros(3));
    }

    #[test]
    fn sherman_morrison_tracks_inverse() {
        let mut s = LeastSquaresState::with_lspe(2, 0.5);
        let mut b = DMatrix::identity(2, 2) * 0.5;
        for (x, y) in [(1.0, 2.0), (-0.5, 0.3), (2.0, 2.0)] {
            let phi = DVector::from_vec(vec![x, y]);
            b += &phi * phi.transpose();
            let tr = FeatureTransition { phi, reward: 1.0, phi_next: DVector::zeros(2) };
            s.push(&tr, 0.0, 0.9);
        }
        let direct = b.try_inverse().unwrap();
        assert!((direct - s.b_inv.unwrap()).abs().max() < 1e-12);
    }

    #[test]
    fn one_state_fixed_point() {
        // φ ≡ 1, deterministic self-loop, r = 1: z* = 1/(1−γ).
        let mut s = LeastSquaresState::with_lspe(1, 1e-6);
        let tr = FeatureTransition {
            phi: DVector::from_element(1, 1.0),
            reward: 1.0,
            phi_next: DVector::from_element(1, 1.0),
        };
        for _ in 0..2000 {
            s.push(&tr, 0.0, 0.5);
        }
        assert!((s.lstd_solve().unwrap()[0] - 2.0).abs() < 1e-5);
        assert!((s.lspe_solve().unwrap()[0] - 2.0).abs() < 1e-5);
    }
}

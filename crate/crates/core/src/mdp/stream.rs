use nalgebra::DVector;

use super::sample::{draw_index, draw_successor};
use super::{FiniteMdp, LinearFeatures, MdpOracle, NonlinearManifold};
use crate::SimRng;

/// `(φ(s), r, φ(s'))` with preallocated buffers.
#[derive(Debug, Clone)]
pub struct FeatureTransition {
    pub phi: DVector<f64>,
    pub reward: f64,
    pub phi_next: DVector<f64>,
}

impl FeatureTransition {
    pub fn zeros(k: usize) -> Self {
        Self { phi: DVector::zeros(k), reward: 0.0, phi_next: DVector::zeros(k) }
    }
}

/// `(φ(s), r, r', φ(s'), φ(s''))` with `s'`, `s''` independent given `s`.
#[derive(Debug, Clone)]
pub struct DoubleFeatureTransition {
    pub phi: DVector<f64>,
    pub reward: f64,
    pub reward2: f64,
    pub phi_next: DVector<f64>,
    pub phi_next2: DVector<f64>,
}

impl DoubleFeatureTransition {
    pub fn zeros(k: usize) -> Self {
        Self {
            phi: DVector::zeros(k),
            reward: 0.0,
            reward2: 0.0,
            phi_next: DVector::zeros(k),
            phi_next2: DVector::zeros(k),
        }
    }
}

/// A source of feature-space transitions.
pub trait TransitionStream: Send {
    fn dim(&self) -> usize;
    fn gamma(&self) -> f64;
    fn next_into(&mut self, rng: &mut SimRng, out: &mut FeatureTransition);
    fn next_double_into(&mut self, rng: &mut SimRng, out: &mut DoubleFeatureTransition);
}

/// Error metrics of a linear parameter vector.
pub trait Evaluator: Send + Sync {
    fn sqrt_mse(&self, z: &DVector<f64>) -> f64;
    fn sqrt_mspbe(&self, z: &DVector<f64>) -> Option<f64>;
}

impl Evaluator for MdpOracle {
    fn sqrt_mse(&self, z: &DVector<f64>) -> f64 {
        self.mse(z).sqrt()
    }

    fn sqrt_mspbe(&self, z: &DVector<f64>) -> Option<f64> {
        Some(self.mspbe(z).max(0.0).sqrt())
    }
}

/// Transitions with `s ∼ ν` drawn afresh every step.
#[derive(Debug, Clone)]
pub struct IidStream<'a> {
    mdp: &'a FiniteMdp,
    feats: &'a LinearFeatures,
}

impl<'a> IidStream<'a> {
    pub fn new(mdp: &'a FiniteMdp, feats: &'a LinearFeatures) -> Self {
        Self { mdp, feats }
    }
}

impl TransitionStream for IidStream<'_> {
    fn dim(&self) -> usize {
        self.feats.dim()
    }

    fn gamma(&self) -> f64 {
        self.mdp.gamma()
    }

    fn next_into(&mut self, rng: &mut SimRng, out: &mut FeatureTransition) {
        let s = draw_index(self.mdp.nu_cdf(), rng);
        let s1 = draw_successor(self.mdp, s, rng);
        self.feats.write_row(s, &mut out.phi);
        self.feats.write_row(s1, &mut out.phi_next);
        out.reward = self.mdp.reward()[(s, s1)];
    }

    fn next_double_into(&mut self, rng: &mut SimRng, out: &mut DoubleFeatureTransition) {
        let s = draw_index(self.mdp.nu_cdf(), rng);
        let s1 = draw_successor(self.mdp, s, rng);
        let s2 = draw_successor(self.mdp, s, rng);
        self.feats.write_row(s, &mut out.phi);
        self.feats.write_row(s1, &mut out.phi_next);
        self.feats.write_row(s2, &mut out.phi_next2);
        out.reward = self.mdp.reward()[(s, s1)];
        out.reward2 = self.mdp.reward()[(s, s2)];
    }
}

/// Errors of a nonlinear value family, measured through its values.
#[derive(Debug, Clone)]
pub struct ManifoldEvaluator {
    pub oracle: MdpOracle,
    pub manifold: NonlinearManifold,
}

impl Evaluator for ManifoldEvaluator {
    fn sqrt_mse(&self, z: &DVector<f64>) -> f64 {
        self.oracle.mse_values(&self.manifold.values(z)).sqrt()
    }

    fn sqrt_mspbe(&self, _z: &DVector<f64>) -> Option<f64> {
        None
    }
}

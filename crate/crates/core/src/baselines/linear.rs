use nalgebra::DVector;

use crate::mdp::{DoubleFeatureTransition, FeatureTransition};

/// Norm above which a weight vector counts as diverged.
pub const DIVERGENCE_NORM: f64 = 1e8;

/// Weights of a first-order linear method. Once `diverged` is set the
/// weights are frozen so the run can continue to its budget.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictor {
    pub z: DVector<f64>,
    /// Secondary weights `v` of GTD2 and TDC.
    pub aux: Option<DVector<f64>>,
    /// Eligibility trace.
    pub e: DVector<f64>,
    pub diverged: bool,
}

impl LinearPredictor {
    pub fn new(k: usize) -> Self {
        Self { z: DVector::zeros(k), aux: None, e: DVector::zeros(k), diverged: false }
    }

    pub fn with_aux(k: usize) -> Self {
        Self { aux: Some(DVector::zeros(k)), ..Self::new(k) }
    }

    pub fn from_weights(z: DVector<f64>) -> Self {
        let k = z.len();
        Self { z, ..Self::with_aux(k) }
    }

    fn check(&mut self) {
        let n = self.z.norm();
        let aux_bad = self.aux.as_ref().is_some_and(|v| !v.norm().is_finite());
        if !n.is_finite() || n > DIVERGENCE_NORM || aux_bad {
            self.diverged = true;
        }
    }
}

fn td_error(z: &DVector<f64>, tr: &FeatureTransition, gamma: f64) -> f64 {
    tr.reward + gamma * z.dot(&tr.phi_next) - z.dot(&tr.phi)
}

/// `e ← φ + γλe`, `z ← z + αδe`.
pub fn td_lambda_step(p: &mut LinearPredictor, tr: &FeatureTransition, alpha: f64, lambda: f64, gamma: f64) {
    if p.diverged {
        return;
    }
    let delta = td_error(&p.z, tr, gamma);
    p.e *= gamma * lambda;
    p.e += &tr.phi;
    p.z.axpy(alpha * delta, &p.e, 1.0);
    p.check();
}

/// Residual gradient with double sampling: `δ` uses `s'`, the gradient
/// factor `φ − γφ''` uses the independent `s''`.
pub fn rg_step(p: &mut LinearPredictor, tr: &DoubleFeatureTransition, alpha: f64, gamma: f64) {
    if p.diverged {
        return;
    }
    let delta = tr.reward + gamma * p.z.dot(&tr.phi_next) - p.z.dot(&tr.phi);
    p.z.axpy(alpha * delta, &tr.phi, 1.0);
    p.z.axpy(-alpha * delta * gamma, &tr.phi_next2, 1.0);
    p.check();
}

/// `z ← z + α(φ − γφ')(φᵀv)`, `v ← v + β(δ − φᵀv)φ`.
pub fn gtd2_step(p: &mut LinearPredictor, tr: &FeatureTransition, alpha: f64, beta: f64, gamma: f64) {
    if p.diverged {
        return;
    }
    let delta = td_error(&p.z, tr, gamma);
    let v = p.aux.get_or_insert_with(|| DVector::zeros(tr.phi.len()));
    let phi_v = tr.phi.dot(v);
    p.z.axpy(alpha * phi_v, &tr.phi, 1.0);
    p.z.axpy(-alpha * phi_v * gamma, &tr.phi_next, 1.0);
    v.axpy(beta * (delta - phi_v), &tr.phi, 1.0);
    p.check();
}

/// `z ← z + α(δφ − γφ'(φᵀv))`, `v ← v + β(δ − φᵀv)φ`.
pub fn tdc_step(p: &mut LinearPredictor, tr: &FeatureTransition, alpha: f64, beta: f64, gamma: f64) {
    if p.diverged {
        return;
    }
    let delta = td_error(&p.z, tr, gamma);
    let v = p.aux.get_or_insert_with(|| DVector::zeros(tr.phi.len()));
    let phi_v = tr.phi.dot(v);
    p.z.axpy(alpha * delta, &tr.phi, 1.0);
    p.z.axpy(-alpha * gamma * phi_v, &tr.phi_next, 1.0);
    v.axpy(beta * (delta - phi_v), &tr.phi, 1.0);
    p.check();
}

use nalgebra::DVector;

use crate::mdp::{NonlinearManifold, Transition};

/// Optional projection `Π_C` applied to the parameter after each step.
pub type Projector<'a> = Option<&'a dyn Fn(&mut DVector<f64>)>;

/// One step of nonlinear GTD2 (for a linear family this is the TDC step):
/// `w ← w + β(δ − ∇Vᵀw)∇V`,
/// `θ ← Π_C(θ + α(δ∇V(s) − γ∇V(s')(∇V(s)ᵀw) − h))` with
/// `h = (δ − ∇Vᵀw)∇²V(s)w`; gradients and `h` use the pre-step `θ`, `w`.
#[allow(clippy::too_many_arguments)]
pub fn gtd2_nl_step(
    theta: &mut DVector<f64>,
    w: &mut DVector<f64>,
    tr: &Transition,
    v: &NonlinearManifold,
    alpha: f64,
    beta: f64,
    gamma: f64,
    projector: Projector<'_>,
) {
    let delta = tr.r + gamma * v.evaluate(theta, tr.s_next) - v.evaluate(theta, tr.s);
    let grad = v.gradient(theta, tr.s);
    let grad_next = v.gradient(theta, tr.s_next);
    let gw = grad.dot(w);
    let h = v.hessian_vec(theta, tr.s, w) * (delta - gw);
    let step = &grad * delta - &grad_next * (gamma * gw) - h;
    w.axpy(beta * (delta - gw), &grad, 1.0);
    theta.axpy(alpha, &step, 1.0);
    if let Some(proj) = projector {
        proj(theta);
    }
}

/// Nonlinear TD(0): `θ ← θ + αδ∇V(s)`.
pub fn td0_nl_step(theta: &mut DVector<f64>, tr: &Transition, v: &NonlinearManifold, alpha: f64, gamma: f64) {
    let delta = tr.r + gamma * v.evaluate(theta, tr.s_next) - v.evaluate(theta, tr.s);
    let grad = v.gradient(theta, tr.s);
    theta.axpy(alpha * delta, &grad, 1.0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::linear::{tdc_step, LinearPredictor};
    use crate::mdp::FeatureTransition;
    use nalgebra::DMatrix;

    #[test]
    fn linear_family_reduces_to_tdc() {
        let phi = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.2, 2.0, 0.7, 0.7]);
        let v = NonlinearManifold::Linear { phi: phi.clone() };
        let mut theta = DVector::from_vec(vec![0.3, -0.4]);
        let mut w = DVector::from_vec(vec![0.1, 0.2]);
        let mut p = LinearPredictor::from_weights(theta.clone());
        p.aux = Some(w.clone());
        for (s, r, s2) in [(0, 1.0, 1), (1, -0.5, 2), (2, 0.25, 0), (0, 2.0, 2)] {
            let tr = Transition { s, r, s_next: s2 };
            gtd2_nl_step(&mut theta, &mut w, &tr, &v, 0.05, 0.1, 0.9, None);
            let ft = FeatureTransition {
                phi: phi.row(s).transpose(),
                reward: r,
                phi_next: phi.row(s2).transpose(),
            };
            tdc_step(&mut p, &ft, 0.05, 0.1, 0.9);
        }
        assert!((theta - p.z).abs().max() < 1e-12);
        assert!((w - p.aux.unwrap()).abs().max() < 1e-12);
    }

    #[test]
    fn no_op_when_w_and_delta_vanish() {
        let phi = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let v = NonlinearManifold::CosExp { phi, kappa: 0.01 };
        // cos²(π/2) = 0, so V ≡ 0 and δ = r = 0.
        let mut theta = DVector::from_element(2, std::f64::consts::FRAC_PI_2);
        let before = theta.clone();
        let mut w = DVector::zeros(2);
        gtd2_nl_step(&mut theta, &mut w, &Transition { s: 0, r: 0.0, s_next: 1 }, &v, 0.1, 0.1, 0.9, None);
        assert!((theta - before).abs().max() < 1e-15);
        assert!(w.abs().max() < 1e-15);
    }

    #[test]
    fn projector_is_applied() {
        let v = NonlinearManifold::Linear { phi: DMatrix::identity(2, 2) };
        let mut theta = DVector::zeros(2);
        let mut w = DVector::from_element(2, 1.0);
        let clip = |t: &mut DVector<f64>| t.apply(|x| *x = x.clamp(-0.01, 0.01));
        gtd2_nl_step(&mut theta, &mut w, &Transition { s: 0, r: 5.0, s_next: 1 }, &v, 1.0, 0.1, 0.9, Some(&clip));
        assert!(theta.abs().max() <= 0.01);
    }
}

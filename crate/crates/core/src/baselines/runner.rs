use nalgebra::DVector;

use super::least_squares::{LeastSquaresState, LS_EPSILON};
use super::linear::{gtd2_step, rg_step, td_lambda_step, tdc_step, LinearPredictor, DIVERGENCE_NORM};
use super::nonlinear::{gtd2_nl_step, td0_nl_step};
use crate::ce::StepSchedule;
use crate::mdp::{
    sample_transition, DoubleFeatureTransition, Evaluator, FeatureTransition, FiniteMdp,
    NonlinearManifold, TransitionStream,
};
use crate::objectives::{RunOptions, TraceRecord};
use crate::{Error, Result, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearMethod {
    Td,
    Rg,
    Gtd2,
    Tdc,
    Lstd,
    Lspe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearMethod {
    Td0,
    Gtd2,
}

/// Step sizes and trace parameters shared by the baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub alpha: StepSchedule,
    /// Secondary step size of GTD2 and TDC.
    pub beta: StepSchedule,
    pub lambda: f64,
    pub epsilon: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            alpha: StepSchedule::Constant(0.001),
            beta: StepSchedule::Constant(0.05),
            lambda: 0.0,
            epsilon: LS_EPSILON,
        }
    }
}

fn record(t: u64, z: &DVector<f64>, eval: &dyn Evaluator, diverged: bool) -> TraceRecord {
    let sqrt_mse = eval.sqrt_mse(z);
    TraceRecord {
        t,
        sqrt_mse,
        sqrt_mspbe: eval.sqrt_mspbe(z),
        gamma_p: f64::NAN,
        sigma_fro: f64::NAN,
        threshold: f64::NAN,
        diverged: diverged || !sqrt_mse.is_finite(),
    }
}

fn due(t: u64, opts: &RunOptions) -> bool {
    opts.cadence > 0 && t % opts.cadence == 0
}

/// Runs a linear baseline and records its metrics. First-order methods
/// start from `z0`; the least-squares ones ignore it.
#[allow(clippy::too_many_arguments)]
pub fn run_linear_baseline(
    method: LinearMethod,
    stream: &mut dyn TransitionStream,
    eval: &dyn Evaluator,
    z0: &DVector<f64>,
    cfg: &BaselineConfig,
    opts: &RunOptions,
    rng: &mut SimRng,
) -> Result<Vec<TraceRecord>> {
    let k = stream.dim();
    if z0.len() != k {
        return Err(Error::Dimension(format!("z0 has {} entries, features have {k}", z0.len())));
    }
    let gamma = stream.gamma();
    let mut records = Vec::new();
    match method {
        LinearMethod::Lstd | LinearMethod::Lspe => {
            let mut ls = if method == LinearMethod::Lspe {
                LeastSquaresState::with_lspe(k, cfg.epsilon)
            } else {
                LeastSquaresState::new(k, cfg.epsilon)
            };
            let mut tr = FeatureTransition::zeros(k);
            for t in 1..=opts.iters {
                stream.next_into(rng, &mut tr);
                ls.push(&tr, cfg.lambda, gamma);
                if due(t, opts) {
                    let z = if method == LinearMethod::Lstd { ls.lstd_solve() } else { ls.lspe_solve() };
                    records.push(match z {
                        Ok(z) => record(t, &z, eval, z.norm() > DIVERGENCE_NORM),
                        Err(_) => record(t, &DVector::from_element(k, f64::NAN), eval, true),
                    });
                }
            }
        }
        LinearMethod::Rg => {
            let mut p = LinearPredictor::from_weights(z0.clone());
            let mut tr = DoubleFeatureTransition::zeros(k);
            for t in 1..=opts.iters {
                stream.next_double_into(rng, &mut tr);
                rg_step(&mut p, &tr, cfg.alpha.evaluate(t), gamma);
                if due(t, opts) {
                    records.push(record(t, &p.z, eval, p.diverged));
                }
            }
        }
        LinearMethod::Td | LinearMethod::Gtd2 | LinearMethod::Tdc => {
            let mut p = LinearPredictor::from_weights(z0.clone());
            let mut tr = FeatureTransition::zeros(k);
            for t in 1..=opts.iters {
                stream.next_into(rng, &mut tr);
                let alpha = cfg.alpha.evaluate(t);
                let beta = cfg.beta.evaluate(t);
                match method {
                    LinearMethod::Td => td_lambda_step(&mut p, &tr, alpha, cfg.lambda, gamma),
                    LinearMethod::Gtd2 => gtd2_step(&mut p, &tr, alpha, beta, gamma),
                    _ => tdc_step(&mut p, &tr, alpha, beta, gamma),
                }
                if due(t, opts) {
                    records.push(record(t, &p.z, eval, p.diverged));
                }
            }
        }
    }
    Ok(records)
}

/// Runs TD(0) or GTD2 over a nonlinear value family on states drawn from ν.
#[allow(clippy::too_many_arguments)]
pub fn run_nonlinear_baseline(
    method: NonlinearMethod,
    mdp: &FiniteMdp,
    manifold: &NonlinearManifold,
    eval: &dyn Evaluator,
    theta0: &DVector<f64>,
    cfg: &BaselineConfig,
    opts: &RunOptions,
    rng: &mut SimRng,
) -> Result<Vec<TraceRecord>> {
    let gamma = mdp.gamma();
    let mut theta = theta0.clone();
    let mut w = DVector::zeros(theta.len());
    let mut diverged = false;
    let mut records = Vec::new();
    for t in 1..=opts.iters {
        if !diverged {
            let tr = sample_transition(mdp, rng);
            let alpha = cfg.alpha.evaluate(t);
            let mut next = theta.clone();
            match method {
                NonlinearMethod::Td0 => td0_nl_step(&mut next, &tr, manifold, alpha, gamma),
                NonlinearMethod::Gtd2 => {
                    gtd2_nl_step(&mut next, &mut w, &tr, manifold, alpha, cfg.beta.evaluate(t), gamma, None)
                }
            }
            let n = next.norm();
            if !n.is_finite() || n > DIVERGENCE_NORM || !w.norm().is_finite() {
                diverged = true;
            } else {
                theta = next;
            }
        }
        if due(t, opts) {
            records.push(record(t, &theta, eval, diverged));
        }
    }
    Ok(records)
}

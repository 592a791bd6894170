//! Stochastic-approximation cross-entropy optimizer.
//!
//! Every recursion runs online: one mixture sample per iteration feeds the
//! quantile tracker `γ`, the elite-moment trackers `ξ⁽⁰⁾`, `ξ⁽¹⁾` and, once a
//! previous model exists, its own quantile `γᵖ`. The model moves only when the
//! threshold tracker `T` says `γ` has been beating `γᵖ` consistently.

mod gaussian;
mod schedule;

pub use gaussian::{sample_mixture, GaussianModel, GaussianSampler};
pub use schedule::{check_schedules, ScheduleRegime, StepSchedule};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::{Error, Result};

const EXP_CLAMP: f64 = 500.0;
const COLLAPSE_TOL: f64 = 1e-12;

/// Clock used for the model step size `α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelClock {
    /// `α` is evaluated at the iteration counter.
    Iteration,
    /// `α` is evaluated at the number of model updates so far plus one.
    Update,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CeConfig {
    pub rho: f64,
    pub lambda_mix: f64,
    pub epsilon1: f64,
    pub r_shape: f64,
    /// Initial comparison gain.
    pub c: f64,
    /// Optional factor applied to `c` after every model update.
    pub c_decay: Option<f64>,
    pub step_alpha: StepSchedule,
    pub step_beta: StepSchedule,
    pub model_clock: ModelClock,
    /// Start `ξ⁽⁰⁾`, `ξ⁽¹⁾` at `θ₀` instead of zero.
    pub xi_from_model: bool,
}

impl Default for CeConfig {
    fn default() -> Self {
        Self {
            rho: 0.1,
            lambda_mix: 0.01,
            epsilon1: 0.9,
            r_shape: 1e-3,
            c: 0.05,
            c_decay: None,
            step_alpha: StepSchedule::Constant(0.01),
            step_beta: StepSchedule::Constant(0.05),
            model_clock: ModelClock::Iteration,
            xi_from_model: false,
        }
    }
}

impl CeConfig {
    pub fn validate(&self) -> Result<()> {
        let open01 = |x: f64| x > 0.0 && x < 1.0;
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} out of range")))
            }
        };
        check(open01(self.rho), "rho")?;
        check((0.0..1.0).contains(&self.lambda_mix), "lambda")?;
        check(open01(self.epsilon1), "epsilon1")?;
        check(self.r_shape > 0.0 && self.r_shape.is_finite(), "r")?;
        check(open01(self.c), "c")?;
        check(self.c_decay.is_none_or(|d| d > 0.0 && d <= 1.0), "c_decay")?;
        self.step_alpha.validate()?;
        self.step_beta.validate()
    }

    pub fn schedule_regime(&self) -> ScheduleRegime {
        check_schedules(&self.step_alpha, &self.step_beta)
    }
}

/// All tracker variables of the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct CeState {
    pub theta: GaussianModel,
    pub theta_prev: Option<GaussianModel>,
    pub gamma_t: f64,
    pub gamma_prev: f64,
    pub xi0: DVector<f64>,
    pub xi1: DMatrix<f64>,
    pub threshold: f64,
    pub c: f64,
    pub t: u64,
    pub n_updates: u64,
    pub converged: bool,
}

impl CeState {
    pub fn initial(theta0: &GaussianModel, cfg: &CeConfig) -> Self {
        let k = theta0.dim();
        Self {
            theta: theta0.clone(),
            theta_prev: None,
            gamma_t: 0.0,
            gamma_prev: f64::NEG_INFINITY,
            xi0: if cfg.xi_from_model { theta0.mu.clone() } else { DVector::zeros(k) },
            xi1: if cfg.xi_from_model { theta0.sigma.clone() } else { DMatrix::zeros(k, k) },
            threshold: 0.0,
            c: cfg.c,
            t: 0,
            n_updates: 0,
            converged: false,
        }
    }
}

/// `S(x) = exp(r x)` with the exponent clamped to ±500.
#[inline]
pub fn shape_s(x: f64, r: f64) -> f64 {
    (r * x).clamp(-EXP_CLAMP, EXP_CLAMP).exp()
}

#[inline]
pub fn g0(h: f64, gamma: f64, r: f64) -> f64 {
    if h >= gamma {
        shape_s(h, r)
    } else {
        0.0
    }
}

pub fn g1(h: f64, x: &DVector<f64>, gamma: f64, r: f64) -> DVector<f64> {
    x * g0(h, gamma, r)
}

pub fn g2(h: f64, x: &DVector<f64>, gamma: f64, mu: &DVector<f64>, r: f64) -> DMatrix<f64> {
    let d = x - mu;
    &d * d.transpose() * g0(h, gamma, r)
}

/// `γ − β(−(1−ρ)1[h≥γ] + ρ1[h≤γ])`.
#[inline]
pub fn update_quantile(gamma_t: f64, h_val: f64, rho: f64, beta_t: f64) -> f64 {
    let mut delta = 0.0;
    if h_val >= gamma_t {
        delta -= 1.0 - rho;
    }
    if h_val <= gamma_t {
        delta += rho;
    }
    gamma_t - beta_t * delta
}

pub fn update_xi0(
    xi0: &DVector<f64>,
    z: &DVector<f64>,
    h_val: f64,
    gamma_t: f64,
    beta_t: f64,
    r: f64,
) -> DVector<f64> {
    let w = g0(h_val, gamma_t, r);
    xi0 + (z - xi0) * (beta_t * w)
}

pub fn update_xi1(
    xi1: &DMatrix<f64>,
    z: &DVector<f64>,
    h_val: f64,
    gamma_t: f64,
    xi0: &DVector<f64>,
    beta_t: f64,
    r: f64,
) -> DMatrix<f64> {
    let mut out = xi1.clone();
    let w = g0(h_val, gamma_t, r);
    let d = z - xi0;
    xi1_in_place(&mut out, &d, beta_t * w);
    out
}

/// `ξ⁽¹⁾ ← (1−bw)ξ⁽¹⁾ + bw·d dᵀ`, kept exactly symmetric.
fn xi1_in_place(xi1: &mut DMatrix<f64>, d: &DVector<f64>, bw: f64) {
    if bw == 0.0 {
        return;
    }
    let k = d.len();
    for j in 0..k {
        for i in j..k {
            let v = (1.0 - bw) * xi1[(i, j)] + bw * d[i] * d[j];
            xi1[(i, j)] = v;
            xi1[(j, i)] = v;
        }
    }
}

/// `T + c(1[γ>γᵖ] − 1[γ≤γᵖ] − T)`, held off ±1 by one machine epsilon so
/// rounding never closes the open interval.
#[inline]
pub fn update_threshold_tracker(t: f64, gamma_t1: f64, gamma_prev_t1: f64, c: f64) -> f64 {
    let sign = if gamma_t1 > gamma_prev_t1 { 1.0 } else { -1.0 };
    let bound = 1.0 - f64::EPSILON;
    (t + c * (sign - t)).clamp(-bound, bound)
}

/// Applies the model update when `T > ε₁`; otherwise returns the state as is.
pub fn maybe_update_model(state: CeState, cfg: &CeConfig, alpha_t: f64) -> CeState {
    let mut state = state;
    apply_model_update(&mut state, cfg, alpha_t);
    state
}

fn apply_model_update(state: &mut CeState, cfg: &CeConfig, alpha_t: f64) -> bool {
    if state.threshold <= cfg.epsilon1 {
        return false;
    }
    state.gamma_prev = state.gamma_t;
    state.theta_prev = Some(state.theta.clone());
    let theta = &mut state.theta;
    theta.mu += (&state.xi0 - &theta.mu) * alpha_t;
    theta.sigma += (&state.xi1 - &theta.sigma) * alpha_t;
    let lmax = theta.make_psd();
    state.converged = lmax < COLLAPSE_TOL;
    state.threshold = 0.0;
    if let Some(d) = cfg.c_decay {
        state.c *= d;
    }
    state.n_updates += 1;
    true
}

/// Outcome of one optimizer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub h: f64,
    pub model_updated: bool,
}

/// Online CE optimizer with cached model factorizations.
#[derive(Debug, Clone)]
pub struct CeOptimizer {
    cfg: CeConfig,
    theta0: GaussianModel,
    state: CeState,
    sampler0: GaussianSampler,
    sampler: GaussianSampler,
    sampler_prev: Option<GaussianSampler>,
    z: DVector<f64>,
    zp: DVector<f64>,
    eps: DVector<f64>,
    diff: DVector<f64>,
}

impl CeOptimizer {
    pub fn new(cfg: CeConfig, theta0: GaussianModel) -> Result<Self> {
        cfg.validate()?;
        let k = theta0.dim();
        let sampler0 = theta0.sampler()?;
        let state = CeState::initial(&theta0, &cfg);
        Ok(Self {
            sampler: sampler0.clone(),
            sampler0,
            sampler_prev: None,
            state,
            theta0,
            cfg,
            z: DVector::zeros(k),
            zp: DVector::zeros(k),
            eps: DVector::zeros(k),
            diff: DVector::zeros(k),
        })
    }

    pub fn state(&self) -> &CeState {
        &self.state
    }

    pub fn config(&self) -> &CeConfig {
        &self.cfg
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.state.theta.mu
    }

    /// One iteration against the objective `z ↦ J̄(z)`.
    pub fn step<F, R>(&mut self, mut objective: F, rng: &mut R) -> Result<StepInfo>
    where
        F: FnMut(&DVector<f64>) -> f64,
        R: Rng + ?Sized,
    {
        let cfg = &self.cfg;
        let st = &mut self.state;
        st.t += 1;
        let beta = cfg.step_beta.evaluate(st.t);

        let use_initial = rng.random::<f64>() < cfg.lambda_mix;
        let own = if use_initial { &self.sampler0 } else { &self.sampler };
        own.draw_into(rng, &mut self.eps, &mut self.z);
        let h = objective(&self.z);
        if h.is_nan() {
            return Err(Error::NumericalAbort("objective returned NaN".into()));
        }
        let gamma_old = st.gamma_t;
        st.gamma_t = update_quantile(gamma_old, h, cfg.rho, beta);
        let bw = beta * g0(h, gamma_old, cfg.r_shape);
        if bw != 0.0 {
            self.diff.copy_from(&self.z);
            self.diff -= &st.xi0;
            xi1_in_place(&mut st.xi1, &self.diff, bw);
            st.xi0.axpy(bw, &self.diff, 1.0);
        }

        if let Some(sp) = &self.sampler_prev {
            let use_initial = rng.random::<f64>() < cfg.lambda_mix;
            let prev = if use_initial { &self.sampler0 } else { sp };
            prev.draw_into(rng, &mut self.eps, &mut self.zp);
            let hp = objective(&self.zp);
            st.gamma_prev = update_quantile(st.gamma_prev, hp, cfg.rho, beta);
        }

        st.threshold = update_threshold_tracker(st.threshold, st.gamma_t, st.gamma_prev, st.c);
        debug_assert!(st.threshold > -1.0 && st.threshold < 1.0);

        let clock = match cfg.model_clock {
            ModelClock::Iteration => st.t,
            ModelClock::Update => st.n_updates + 1,
        };
        let alpha = cfg.step_alpha.evaluate(clock);
        let updated = apply_model_update(st, cfg, alpha);
        if updated {
            let fresh = st.theta.sampler()?;
            self.sampler_prev = Some(std::mem::replace(&mut self.sampler, fresh));
        }
        Ok(StepInfo { h, model_updated: updated })
    }

    pub fn theta0(&self) -> &GaussianModel {
        &self.theta0
    }
}

/// Per-iteration record of [`run_ce`].
#[derive(Debug, Clone, PartialEq)]
pub struct CeSnapshot {
    pub t: u64,
    pub mu: DVector<f64>,
    pub sigma_fro: f64,
    pub gamma_t: f64,
    pub gamma_prev: f64,
    pub threshold: f64,
    pub model_updated: bool,
}

/// Runs the optimizer on a fixed objective and records every iteration.
pub fn run_ce<F, R>(
    mut objective: F,
    cfg: &CeConfig,
    theta0: &GaussianModel,
    iters: u64,
    rng: &mut R,
) -> Result<Vec<CeSnapshot>>
where
    F: FnMut(&DVector<f64>) -> f64,
    R: Rng + ?Sized,
{
    let mut opt = CeOptimizer::new(cfg.clone(), theta0.clone())?;
    let mut out = Vec::with_capacity(iters as usize);
    for _ in 0..iters {
        let info = opt.step(&mut objective, rng)?;
        let st = opt.state();
        out.push(CeSnapshot {
            t: st.t,
            mu: st.theta.mu.clone(),
            sigma_fro: st.theta.sigma_fro(),
            gamma_t: st.gamma_t,
            gamma_prev: st.gamma_prev,
            threshold: st.threshold,
            model_updated: info.model_updated,
        });
    }
    Ok(out)
}

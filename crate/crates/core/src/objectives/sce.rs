use nalgebra::DVector;

use super::trackers::{check_ceiling, MsbrTracker, MspbeTracker, NlMsbrTracker, SpiralTables};
use crate::ce::{CeConfig, CeOptimizer, CeState, GaussianModel};
use crate::mdp::{
    sample_double_transition, DoubleFeatureTransition, Evaluator, FeatureTransition, FiniteMdp,
    NonlinearManifold, TransitionStream,
};
use crate::{Result, SimRng};

/// One metrics record of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    pub sqrt_mse: f64,
    pub sqrt_mspbe: Option<f64>,
    pub gamma_p: f64,
    pub sigma_fro: f64,
    pub threshold: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub iters: u64,
    /// Metrics are recorded whenever `t` is a multiple of this.
    pub cadence: u64,
    /// Abort when a tracker's sup-norm exceeds this.
    pub ceiling: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { iters: 10_000, cadence: 100, ceiling: 1e6 }
    }
}

#[derive(Debug, Clone)]
pub struct SceOutcome {
    pub records: Vec<TraceRecord>,
    pub state: CeState,
}

impl SceOutcome {
    pub fn mean(&self) -> &DVector<f64> {
        &self.state.theta.mu
    }
}

fn record(st: &CeState, eval: &dyn Evaluator) -> TraceRecord {
    let mu = &st.theta.mu;
    let finite = mu.iter().all(|x| x.is_finite());
    TraceRecord {
        t: st.t,
        sqrt_mse: eval.sqrt_mse(mu),
        sqrt_mspbe: eval.sqrt_mspbe(mu),
        gamma_p: st.gamma_prev,
        sigma_fro: st.theta.sigma_fro(),
        threshold: st.threshold,
        diverged: !finite,
    }
}

fn due(t: u64, opts: &RunOptions) -> bool {
    opts.cadence > 0 && t % opts.cadence == 0
}

/// SCE-MSPBEM: the CE optimizer maximizing `J̄_p(ω_t, ·)`.
pub fn run_sce_mspbem(
    stream: &mut dyn TransitionStream,
    eval: &dyn Evaluator,
    cfg: &CeConfig,
    theta0: &GaussianModel,
    opts: &RunOptions,
    rng: &mut SimRng,
) -> Result<SceOutcome> {
    let k = stream.dim();
    let gamma = stream.gamma();
    let mut opt = CeOptimizer::new(cfg.clone(), theta0.clone())?;
    let mut w = MspbeTracker::new(k);
    let mut tr = FeatureTransition::zeros(k);
    let (mut v, mut wv) = (DVector::zeros(k), DVector::zeros(k));
    let mut records = Vec::new();
    for t in 1..=opts.iters {
        stream.next_into(rng, &mut tr);
        w.step_transition(&tr, gamma, cfg.step_alpha.evaluate(t));
        opt.step(|z| w.jp(z, &mut v, &mut wv), rng)?;
        if due(t, opts) {
            check_ceiling(w.sup_norm(), opts.ceiling, "MSPBE")?;
            records.push(record(opt.state(), eval));
        }
    }
    Ok(SceOutcome { records, state: opt.state().clone() })
}

/// How a parameter vector enters `J̄_b`.
#[derive(Debug, Clone, Copy)]
pub enum MsbrParam<'a> {
    /// `J̄_b(υ, z)`
    Linear,
    /// `J̄_b(υ, h(z))` for a `Φh(z)` manifold.
    Manifold(&'a NonlinearManifold),
}

/// SCE-MSBRM: the CE optimizer maximizing `J̄_b(υ_t, ·)` on double samples.
pub fn run_sce_msbrm(
    stream: &mut dyn TransitionStream,
    param: MsbrParam<'_>,
    eval: &dyn Evaluator,
    cfg: &CeConfig,
    theta0: &GaussianModel,
    opts: &RunOptions,
    rng: &mut SimRng,
) -> Result<SceOutcome> {
    let k = stream.dim();
    let gamma = stream.gamma();
    let mut opt = CeOptimizer::new(cfg.clone(), theta0.clone())?;
    let mut u = MsbrTracker::new(k);
    let mut tr = DoubleFeatureTransition::zeros(k);
    let mut buf = DVector::zeros(k);
    let mut records = Vec::new();
    for t in 1..=opts.iters {
        stream.next_double_into(rng, &mut tr);
        u.step(&tr, gamma, cfg.step_alpha.evaluate(t));
        match param {
            MsbrParam::Linear => opt.step(|z| u.jb(z, &mut buf), rng)?,
            MsbrParam::Manifold(m) => opt.step(|z| u.jb(&m.h(z).unwrap(), &mut buf), rng)?,
        };
        if due(t, opts) {
            check_ceiling(u.sup_norm(), opts.ceiling, "MSBR")?;
            records.push(record(opt.state(), eval));
        }
    }
    Ok(SceOutcome { records, state: opt.state().clone() })
}

/// SCE-MSBRM over the one-parameter spiral family, using the 3×3 tracker.
pub fn run_sce_msbrm_spiral(
    mdp: &FiniteMdp,
    tables: &SpiralTables,
    eval: &dyn Evaluator,
    cfg: &CeConfig,
    theta0: &GaussianModel,
    opts: &RunOptions,
    rng: &mut SimRng,
) -> Result<SceOutcome> {
    let gamma = mdp.gamma();
    let mut opt = CeOptimizer::new(cfg.clone(), theta0.clone())?;
    let mut u = NlMsbrTracker::new();
    let mut records = Vec::new();
    for t in 1..=opts.iters {
        let tr = sample_double_transition(mdp, rng);
        u.step(&tr, tables, gamma, cfg.step_alpha.evaluate(t));
        opt.step(|z| -u.msbr(z[0], tables.tau, tables.eps), rng)?;
        if due(t, opts) {
            check_ceiling(u.sup_norm(), opts.ceiling, "spiral MSBR")?;
            records.push(record(opt.state(), eval));
        }
    }
    Ok(SceOutcome { records, state: opt.state().clone() })
}

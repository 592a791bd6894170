use nalgebra::DMatrix;
use rand::SeedableRng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::baselines::{run_linear_baseline, run_nonlinear_baseline, LinearMethod, NonlinearMethod};
use crate::ce::GaussianModel;
use crate::environments::{build, Benchmark, ContinuousEnv, DiscreteEnv, QuadraticEvaluator};
use crate::mdp::{Evaluator, IidStream, ManifoldEvaluator, MdpOracle, NonlinearManifold, TransitionStream};
use crate::objectives::{
    run_sce_msbrm, run_sce_msbrm_spiral, run_sce_mspbem, MsbrParam, SpiralTables, TraceRecord,
};
use crate::{Error, Result, SimRng};

/// Records of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub trial: usize,
    pub records: Vec<TraceRecord>,
}

/// All trials of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoTrace {
    pub algo: String,
    pub trials: Vec<TrialTrace>,
}

/// Cross-trial summary at one record time.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedRecord {
    pub t: u64,
    pub sqrt_mse: f64,
    /// Unbiased sample variance of `sqrt_mse` across trials (0 for one trial).
    pub sqrt_mse_var: f64,
    pub sqrt_mspbe: Option<f64>,
    pub gamma_p: f64,
    pub sigma_fro: f64,
    pub threshold: f64,
    pub n_diverged: usize,
}

/// Independent stream for `trial` under a master seed.
pub fn trial_rng(seed: u64, trial: usize) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// A built environment with its evaluator.
pub enum EnvContext {
    Finite { env: DiscreteEnv, eval: Box<dyn Evaluator> },
    Continuous { env: ContinuousEnv, eval: QuadraticEvaluator },
}

impl EnvContext {
    pub fn new(name: &str, seed: u64) -> Result<Self> {
        Ok(match build(name, seed)? {
            Benchmark::Discrete(env) => {
                let eval: Box<dyn Evaluator> = match &env.manifold {
                    Some(m) => Box::new(ManifoldEvaluator {
                        oracle: MdpOracle::new(&env.mdp, None)?,
                        manifold: m.clone(),
                    }),
                    None => Box::new(MdpOracle::new(&env.mdp, Some(&env.feats))?),
                };
                Self::Finite { env, eval }
            }
            Benchmark::Continuous(env) => {
                let eval = env.evaluator();
                Self::Continuous { env, eval }
            }
        })
    }

    pub fn evaluator(&self) -> &dyn Evaluator {
        match self {
            Self::Finite { eval, .. } => eval.as_ref(),
            Self::Continuous { eval, .. } => eval,
        }
    }

    /// Dimension of the searched parameter.
    pub fn param_dim(&self) -> usize {
        match self {
            Self::Finite { env, .. } => match &env.manifold {
                Some(m) => m.dim_param(),
                None => env.feats.dim(),
            },
            Self::Continuous { env, .. } => env.feature_dim(),
        }
    }

    fn manifold(&self) -> Option<&NonlinearManifold> {
        match self {
            Self::Finite { env, .. } => env.manifold.as_ref(),
            Self::Continuous { .. } => None,
        }
    }

    fn stream<'a>(&'a self, rng: &mut SimRng) -> Box<dyn TransitionStream + 'a> {
        match self {
            Self::Finite { env, .. } => Box::new(IidStream::new(&env.mdp, &env.feats)),
            Self::Continuous { env, .. } => Box::new(env.stream(rng)),
        }
    }
}

fn linear_method(algo: &str) -> Option<LinearMethod> {
    Some(match algo {
        "td0" => LinearMethod::Td,
        "rg" => LinearMethod::Rg,
        "gtd2" => LinearMethod::Gtd2,
        "tdc" => LinearMethod::Tdc,
        "lstd" => LinearMethod::Lstd,
        "lspe" => LinearMethod::Lspe,
        _ => return None,
    })
}

/// Runs one trial of `algo`.
pub fn run_trial(cfg: &ExperimentConfig, ctx: &EnvContext, algo: &str, trial: usize) -> Result<TrialTrace> {
    let mut rng = trial_rng(cfg.seed, trial);
    let opts = cfg.run_options();
    let eval = ctx.evaluator();
    let k = ctx.param_dim();
    let theta0 = GaussianModel::new(cfg.mu0.vector(k)?, DMatrix::identity(k, k) * cfg.sigma0)?;
    let z0 = cfg.z0.vector(k)?;
    let records = match (ctx.manifold(), algo) {
        (None, "sce-mspbem") => {
            let mut stream = ctx.stream(&mut rng);
            run_sce_mspbem(stream.as_mut(), eval, &cfg.ce, &theta0, &opts, &mut rng)?.records
        }
        (None, "sce-msbrm") => {
            let mut stream = ctx.stream(&mut rng);
            run_sce_msbrm(stream.as_mut(), MsbrParam::Linear, eval, &cfg.ce, &theta0, &opts, &mut rng)?.records
        }
        (None, a) => {
            let method = linear_method(a).ok_or_else(|| Error::Config(format!("unknown algorithm `{a}`")))?;
            let mut stream = ctx.stream(&mut rng);
            run_linear_baseline(method, stream.as_mut(), eval, &z0, &cfg.baseline(), &opts, &mut rng)?
        }
        (Some(m), a) => {
            let EnvContext::Finite { env, .. } = ctx else { unreachable!() };
            match (m, a) {
                (NonlinearManifold::Spiral { a, b, tau, eps }, "sce-msbrm") => {
                    let tables = SpiralTables { a: a.clone(), b: b.clone(), tau: *tau, eps: *eps };
                    run_sce_msbrm_spiral(&env.mdp, &tables, eval, &cfg.ce, &theta0, &opts, &mut rng)?.records
                }
                (_, "sce-msbrm") => {
                    let mut stream = IidStream::new(&env.mdp, &env.feats);
                    run_sce_msbrm(&mut stream, MsbrParam::Manifold(m), eval, &cfg.ce, &theta0, &opts, &mut rng)?
                        .records
                }
                (_, "td0" | "gtd2") => {
                    let method = if a == "td0" { NonlinearMethod::Td0 } else { NonlinearMethod::Gtd2 };
                    run_nonlinear_baseline(method, &env.mdp, m, eval, &z0, &cfg.baseline(), &opts, &mut rng)?
                }
                _ => {
                    return Err(Error::Config(format!(
                        "`{a}` is not available on the nonlinear environment `{}`",
                        cfg.env
                    )))
                }
            }
        }
    };
    Ok(TrialTrace { trial, records })
}

/// Runs every trial of every configured algorithm, trials in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<AlgoTrace>> {
    cfg.validate()?;
    let ctx = EnvContext::new(&cfg.env, cfg.seed)?;
    run_experiment_in(cfg, &ctx)
}

/// As [`run_experiment`] with an already built environment.
pub fn run_experiment_in(cfg: &ExperimentConfig, ctx: &EnvContext) -> Result<Vec<AlgoTrace>> {
    cfg.validate()?;
    cfg.algos
        .iter()
        .map(|algo| {
            let trials = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| run_trial(cfg, ctx, algo, trial))
                .collect::<Result<Vec<_>>>()?;
            Ok(AlgoTrace { algo: algo.clone(), trials })
        })
        .collect()
}

fn mean_of(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Per-time means over trials. Diverged trials enter the means with their
/// frozen values and are counted in `n_diverged`.
pub fn average_trials(trials: &[TrialTrace]) -> Result<Vec<AveragedRecord>> {
    let Some(first) = trials.first() else { return Ok(Vec::new()) };
    let n = first.records.len();
    for tr in trials {
        if tr.records.len() != n || tr.records.iter().zip(&first.records).any(|(a, b)| a.t != b.t) {
            return Err(Error::Dimension(format!("trial {} has mismatched record times", tr.trial)));
        }
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let rows: Vec<&TraceRecord> = trials.iter().map(|tr| &tr.records[i]).collect();
        let sqrt_mse = mean_of(rows.iter().map(|r| r.sqrt_mse));
        let sqrt_mse_var = if rows.len() > 1 {
            rows.iter().map(|r| (r.sqrt_mse - sqrt_mse).powi(2)).sum::<f64>() / (rows.len() - 1) as f64
        } else {
            0.0
        };
        let sqrt_mspbe = if rows.iter().all(|r| r.sqrt_mspbe.is_some()) {
            Some(mean_of(rows.iter().filter_map(|r| r.sqrt_mspbe)))
        } else {
            None
        };
        out.push(AveragedRecord {
            t: rows[0].t,
            sqrt_mse,
            sqrt_mse_var,
            sqrt_mspbe,
            gamma_p: mean_of(rows.iter().map(|r| r.gamma_p)),
            sigma_fro: mean_of(rows.iter().map(|r| r.sigma_fro)),
            threshold: mean_of(rows.iter().map(|r| r.threshold)),
            n_diverged: rows.iter().filter(|r| r.diverged).count(),
        });
    }
    Ok(out)
}

/// Mean over trials of the final `sqrt_mse`.
pub fn final_sqrt_mse(trace: &AlgoTrace) -> f64 {
    mean_of(trace.trials.iter().filter_map(|t| t.records.last()).map(|r| r.sqrt_mse))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: u64, mse: f64, diverged: bool) -> TraceRecord {
        TraceRecord {
            t,
            sqrt_mse: mse,
            sqrt_mspbe: Some(mse / 2.0),
            gamma_p: -1.0,
            sigma_fro: 1.0,
            threshold: 0.0,
            diverged,
        }
    }

    #[test]
    fn averaging_keeps_diverged_trials() {
        let trials = vec![
            TrialTrace { trial: 0, records: vec![rec(10, 1.0, false), rec(20, 2.0, false)] },
            TrialTrace { trial: 1, records: vec![rec(10, 3.0, false), rec(20, 4.0e8, true)] },
        ];
        let avg = average_trials(&trials).unwrap();
        assert_eq!(avg[0].sqrt_mse, 2.0);
        assert_eq!(avg[0].sqrt_mse_var, 2.0);
        assert_eq!(avg[0].n_diverged, 0);
        assert_eq!(avg[1].sqrt_mse, 2.0e8 + 1.0);
        assert_eq!(avg[1].n_diverged, 1);
    }

    #[test]
    fn averaging_rejects_mismatched_times() {
        let trials = vec![
            TrialTrace { trial: 0, records: vec![rec(10, 1.0, false)] },
            TrialTrace { trial: 1, records: vec![rec(11, 1.0, false)] },
        ];
        assert!(average_trials(&trials).is_err());
    }

    #[test]
    fn trial_streams_differ_and_repeat() {
        use rand::Rng;
        let a: u64 = trial_rng(7, 0).random();
        let b: u64 = trial_rng(7, 1).random();
        let a2: u64 = trial_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn runs_are_reproducible_and_ordered() {
        let mut cfg = ExperimentConfig::for_env("ring10").unwrap();
        cfg.algos = vec!["td0".into(), "sce-mspbem".into()];
        cfg.iters = 2000;
        cfg.trials = 3;
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert_eq!(a.len(), 2);
        assert_eq!(a[1].algo, "sce-mspbem");
        assert!(a[0].trials.iter().enumerate().all(|(i, t)| t.trial == i && t.records.len() == 20));
    }

    #[test]
    fn nonlinear_envs_reject_linear_only_methods() {
        let mut cfg = ExperimentConfig::for_env("baird-nl").unwrap();
        cfg.algos = vec!["lstd".into()];
        cfg.iters = 10;
        cfg.trials = 1;
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
        cfg.algos = vec!["sce-msbrm".into(), "gtd2".into(), "td0".into()];
        cfg.iters = 200;
        assert!(run_experiment(&cfg).is_ok());
    }

    #[test]
    fn continuous_env_runs() {
        let mut cfg = ExperimentConfig::for_env("pendulum5").unwrap();
        cfg.algos = vec!["sce-mspbem".into(), "tdc".into()];
        cfg.iters = 200;
        cfg.trials = 2;
        let out = run_experiment(&cfg).unwrap();
        assert!(out[0].trials[0].records[0].sqrt_mspbe.is_some());
    }
}

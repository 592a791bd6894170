use std::path::PathBuf;

use nalgebra::DVector;

use crate::baselines::{BaselineConfig, LS_EPSILON};
use crate::ce::{CeConfig, ModelClock, StepSchedule};
use crate::environments::ENV_NAMES;
use crate::objectives::RunOptions;
use crate::{Error, Result};

pub const ALGO_NAMES: [&str; 8] = ["sce-mspbem", "sce-msbrm", "td0", "rg", "gtd2", "tdc", "lstd", "lspe"];

/// Per-environment defaults. Algorithm constants follow the published
/// tables; `r`, the initial model, the iteration budget and the baseline
/// steps are free choices.
const TABLES: [(&str, &str); 10] = [
    (
        "baird",
        "alpha=0.001\nbeta=0.05\nc=0.01\nlambda=0.01\nepsilon1=0.8\nrho=0.1\nr=0.01\n\
         mu0=1,1,1,1,1,1,10,1\nsigma0=30\nz0=1,1,1,1,1,1,10,1\niters=2000000\n\
         base_alpha=0.01\nbase_beta=0.05\n",
    ),
    (
        "baird-imperfect",
        "alpha=0.001\nbeta=0.05\nc=0.01\nlambda=0.01\nepsilon1=0.8\nrho=0.1\nr=0.001\n\
         mu0=0\nsigma0=100\nz0=0\niters=1000000\nbase_alpha=0.001\nbase_beta=0.05\n",
    ),
    (
        "ring10",
        "alpha=0.001\nbeta=0.05\nc=0.075\nlambda=0.001\nepsilon1=0.85\nrho=0.1\nr=0.01\n\
         mu0=0\nsigma0=100\nz0=0\niters=1000000\nbase_alpha=0.01\nbase_beta=0.05\n",
    ),
    (
        "random-rbf",
        "alpha=0.001\nbeta=0.05\nc=0.075\nlambda=0.001\nepsilon1=0.85\nrho=0.1\nr=0.01\n\
         mu0=0\nsigma0=10\nz0=0\niters=1000000\nbase_alpha=0.01\nbase_beta=0.05\n",
    ),
    (
        "random-fourier",
        "alpha=0.001\nbeta=0.05\nc=0.075\nlambda=0.001\nepsilon1=0.85\nrho=0.1\nr=0.01\n\
         mu0=0\nsigma0=10\nz0=0\niters=1000000\nbase_alpha=0.01\nbase_beta=0.05\n",
    ),
    (
        "cartpole",
        "alpha=1/t\nbeta=t^-0.6\nc=0.01\nlambda=0.01\nepsilon1=0.95\nrho=0.1\nr=0.1\n\
         clock=update\nmu0=1000\nsigma0=1000000\nz0=0\niters=2000000\nbase_alpha=0.01\nbase_beta=0.05\n",
    ),
    (
        "pendulum5",
        "alpha=0.001\nbeta=0.05\nc=0.05\nlambda=0.01\nepsilon1=0.95\nrho=0.1\nr=0.1\n\
         mu0=100\nsigma0=10000\nz0=0\niters=4000000\nbase_alpha=0.01\nbase_beta=0.05\n",
    ),
    (
        "vanroy",
        "alpha=1/t\nbeta=0.9\nc=0.03\nlambda=0.01\nepsilon1=0.95\nrho=0.1\nr=0.000001\n\
         clock=update\nxi_init=model\nmu0=0\nsigma0=100000\nz0=0\niters=5000000\nbase_alpha=0.001\nbase_beta=0.01\n",
    ),
    (
        "baird-nl",
        "alpha=0.02\nbeta=0.1\nc=0.05\nlambda=0.001\nepsilon1=0.8\nrho=0.1\nr=0.2\n\
         mu0=0\nsigma0=10\nz0=0\niters=2000000\nbase_alpha=0.02\nbase_beta=0.1\n",
    ),
    (
        "ring10-nl",
        "alpha=0.04\nbeta=0.2\nc=0.08\nlambda=0.001\nepsilon1=0.8\nrho=0.1\nr=0.05\n\
         mu0=0\nsigma0=10\nz0=0\niters=1000000\nbase_alpha=0.04\nbase_beta=0.2\n",
    ),
];

/// The embedded default table for `env`.
pub fn default_table(env: &str) -> Result<&'static str> {
    TABLES
        .iter()
        .find(|(name, _)| *name == env)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::Config(format!("unknown environment `{env}`")))
}

/// Parses flat `key=value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// A constant fill or an explicit vector.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Fill(f64),
    Values(Vec<f64>),
}

impl InitSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let vals: std::result::Result<Vec<f64>, _> = text.split(',').map(|x| x.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|_| Error::Config(format!("cannot parse vector `{text}`")))?;
        Ok(if vals.len() == 1 { Self::Fill(vals[0]) } else { Self::Values(vals) })
    }

    pub fn vector(&self, k: usize) -> Result<DVector<f64>> {
        match self {
            Self::Fill(x) => Ok(DVector::from_element(k, *x)),
            Self::Values(v) if v.len() == k => Ok(DVector::from_vec(v.clone())),
            Self::Values(v) => Err(Error::Config(format!("initial vector has {} entries, need {k}", v.len()))),
        }
    }
}

impl std::fmt::Display for InitSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Fill(x) => write!(f, "{x}"),
            Self::Values(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: String,
    pub algos: Vec<String>,
    pub iters: u64,
    pub trials: usize,
    pub seed: u64,
    pub cadence: u64,
    pub ceiling: f64,
    pub ce: CeConfig,
    pub mu0: InitSpec,
    /// Initial covariance `sigma0 · I`.
    pub sigma0: f64,
    pub z0: InitSpec,
    pub base_alpha: Option<StepSchedule>,
    pub base_beta: Option<StepSchedule>,
    pub trace_lambda: f64,
    pub ls_epsilon: f64,
    pub out: Option<PathBuf>,
    /// `--param` overrides in the order given, echoed into CSV output.
    pub overrides: Vec<(String, String)>,
}

impl ExperimentConfig {
    /// Defaults for `env` from its embedded table.
    pub fn for_env(env: &str) -> Result<Self> {
        if !ENV_NAMES.contains(&env) {
            return Err(Error::Config(format!("unknown environment `{env}`")));
        }
        let mut cfg = Self {
            env: env.to_string(),
            algos: vec!["sce-mspbem".into()],
            iters: 10_000,
            trials: 10,
            seed: 0,
            cadence: 100,
            ceiling: 1e6,
            ce: CeConfig::default(),
            mu0: InitSpec::Fill(0.0),
            sigma0: 1.0,
            z0: InitSpec::Fill(0.0),
            base_alpha: None,
            base_beta: None,
            trace_lambda: 0.0,
            ls_epsilon: LS_EPSILON,
            out: None,
            overrides: Vec::new(),
        };
        for (k, v) in parse_key_values(default_table(env)?)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| v.parse::<f64>().map_err(|_| Error::Config(format!("`{key}` expects a number, got `{v}`")));
        let int = |v: &str| v.parse::<u64>().map_err(|_| Error::Config(format!("`{key}` expects an integer, got `{v}`")));
        match key {
            "env" => {
                if value != self.env {
                    return Err(Error::Config(format!("env is `{}`; `{value}` must be chosen first", self.env)));
                }
            }
            "algo" => self.algos = value.split(',').map(|s| s.trim().to_string()).collect(),
            "iters" => self.iters = int(value)?,
            "trials" => self.trials = int(value)? as usize,
            "seed" => self.seed = int(value)?,
            "cadence" => self.cadence = int(value)?,
            "ceiling" => self.ceiling = num(value)?,
            "rho" => self.ce.rho = num(value)?,
            "lambda" => self.ce.lambda_mix = num(value)?,
            "epsilon1" => self.ce.epsilon1 = num(value)?,
            "r" => self.ce.r_shape = num(value)?,
            "c" => self.ce.c = num(value)?,
            "c_decay" => self.ce.c_decay = if value == "none" { None } else { Some(num(value)?) },
            "alpha" => self.ce.step_alpha = StepSchedule::parse(value)?,
            "beta" => self.ce.step_beta = StepSchedule::parse(value)?,
            "clock" => {
                self.ce.model_clock = match value {
                    "iteration" => ModelClock::Iteration,
                    "update" => ModelClock::Update,
                    _ => return Err(Error::Config(format!("clock must be iteration or update, got `{value}`"))),
                }
            }
            "xi_init" => {
                self.ce.xi_from_model = match value {
                    "zero" => false,
                    "model" => true,
                    _ => return Err(Error::Config(format!("xi_init must be zero or model, got `{value}`"))),
                }
            }
            "mu0" => self.mu0 = InitSpec::parse(value)?,
            "sigma0" => self.sigma0 = num(value)?,
            "z0" => self.z0 = InitSpec::parse(value)?,
            "base_alpha" => self.base_alpha = Some(StepSchedule::parse(value)?),
            "base_beta" => self.base_beta = Some(StepSchedule::parse(value)?),
            "trace_lambda" => self.trace_lambda = num(value)?,
            "ls_epsilon" => self.ls_epsilon = num(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown parameter `{other}`"))),
        }
        Ok(())
    }

    /// Applies an explicit override and remembers it for the output header.
    pub fn override_param(&mut self, key: &str, value: &str) -> Result<()> {
        self.set(key, value)?;
        self.overrides.push((key.to_string(), value.to_string()));
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.algos.is_empty() {
            return Err(Error::Config("no algorithm given".into()));
        }
        for a in &self.algos {
            if !ALGO_NAMES.contains(&a.as_str()) {
                return Err(Error::Config(format!("unknown algorithm `{a}`")));
            }
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::Config("sigma0 must be positive".into()));
        }
        if !(self.ls_epsilon > 0.0) {
            return Err(Error::Config("ls_epsilon must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.trace_lambda) {
            return Err(Error::Config("trace_lambda must lie in [0,1]".into()));
        }
        self.ce.validate()
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions { iters: self.iters, cadence: self.cadence, ceiling: self.ceiling }
    }

    /// Baseline steps, falling back to the CE schedules.
    pub fn baseline(&self) -> BaselineConfig {
        BaselineConfig {
            alpha: self.base_alpha.unwrap_or(self.ce.step_alpha),
            beta: self.base_beta.unwrap_or(self.ce.step_beta),
            lambda: self.trace_lambda,
            epsilon: self.ls_epsilon,
        }
    }

    /// Settings echoed at the top of every CSV.
    pub fn provenance(&self) -> Vec<String> {
        let mut lines = vec![
            format!("env={}", self.env),
            format!("iters={}", self.iters),
            format!("trials={}", self.trials),
            format!("seed={}", self.seed),
            format!("cadence={}", self.cadence),
            format!(
                "ce rho={} lambda={} epsilon1={} r={} c={} alpha={} beta={}",
                self.ce.rho,
                self.ce.lambda_mix,
                self.ce.epsilon1,
                self.ce.r_shape,
                self.ce.c,
                self.ce.step_alpha,
                self.ce.step_beta
            ),
            format!(
                "init mu0={} sigma0={} z0={} xi_init={} clock={}",
                self.mu0,
                self.sigma0,
                self.z0,
                if self.ce.xi_from_model { "model" } else { "zero" },
                match self.ce.model_clock {
                    ModelClock::Iteration => "iteration",
                    ModelClock::Update => "update",
                }
            ),
        ];
        for (k, v) in &self.overrides {
            lines.push(format!("param {k}={v}"));
        }
        lines
    }
}

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use super::config::{parse_key_values, ExperimentConfig, ALGO_NAMES};
use super::csv::{fmt_f64, write_average, write_trace};
use super::run::{average_trials, run_experiment_in, EnvContext};
use crate::environments::{build, Benchmark, ENV_NAMES};
use crate::mdp::MdpOracle;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cemtd", about = "Cross-entropy online value prediction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its metrics as CSV.
    Run(RunArgs),
    /// Print exact values and fixed points of a finite environment.
    Oracle(OracleArgs),
    /// List environments and algorithms.
    List,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    env: Option<String>,
    /// Comma-separated algorithm names.
    #[arg(long)]
    algo: Option<String>,
    /// Flat `key=value` file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed; falls back to `CEMTD_SEED`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cadence: Option<u64>,
    /// Output CSV; with several algorithms one file per algorithm.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write cross-trial averages.
    #[arg(long)]
    average: bool,
    /// Override any parameter, `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    env: String,
    /// Replace the discount factor.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NumericalAbort(_) | Error::Singular(_) | Error::DegenerateModel => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn cli_main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let res = match cli.command {
        Command::Run(a) => run_cmd(a, out, err),
        Command::Oracle(a) => oracle_cmd(a, out),
        Command::List => list_cmd(out),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Resolves a run configuration: table defaults, then the config file,
/// then flags, then `--param` overrides.
fn resolve(a: &RunArgs, env_seed: Option<String>) -> Result<ExperimentConfig> {
    let file_kv = match &a.config {
        Some(p) => parse_key_values(&std::fs::read_to_string(p)?)?,
        None => Vec::new(),
    };
    let file_env = file_kv.iter().find(|(k, _)| k == "env").map(|(_, v)| v.clone());
    let env = a
        .env
        .clone()
        .or(file_env)
        .ok_or_else(|| Error::Config("no environment given (use --env)".into()))?;
    let mut cfg = ExperimentConfig::for_env(&env)?;
    for (k, v) in &file_kv {
        if k != "env" {
            cfg.set(k, v)?;
        }
    }
    if let Some(x) = &a.algo {
        cfg.set("algo", x)?;
    }
    if let Some(x) = a.iters {
        cfg.iters = x;
    }
    if let Some(x) = a.trials {
        cfg.trials = x;
    }
    match (a.seed, env_seed) {
        (Some(s), _) => cfg.seed = s,
        (None, Some(s)) => {
            cfg.seed = s.trim().parse().map_err(|_| Error::Config(format!("CEMTD_SEED is not an integer: `{s}`")))?
        }
        (None, None) => {}
    }
    if let Some(x) = a.cadence {
        cfg.cadence = x;
    }
    if let Some(p) = &a.out {
        cfg.out = Some(p.clone());
    }
    for p in &a.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--param expects key=value, got `{p}`")))?;
        cfg.override_param(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `dir/stem[.algo][.avg].csv`
fn output_path(base: &Path, algo: Option<&str>, average: bool) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let mut name = stem;
    if let Some(a) = algo {
        name.push('.');
        name.push_str(a);
    }
    if average {
        name.push_str(".avg");
    }
    name.push_str(".csv");
    base.with_file_name(name)
}

fn run_cmd(a: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = resolve(&a, std::env::var("CEMTD_SEED").ok())?;
    let ctx = EnvContext::new(&cfg.env, cfg.seed)?;
    let traces = run_experiment_in(&cfg, &ctx)?;
    let prov = cfg.provenance();
    let several = traces.len() > 1;
    for trace in &traces {
        let avg = if a.average { Some(average_trials(&trace.trials)?) } else { None };
        match &cfg.out {
            Some(base) => {
                let algo = several.then_some(trace.algo.as_str());
                let path = output_path(base, algo, false);
                let mut w = BufWriter::new(File::create(&path)?);
                write_trace(&mut w, trace, &prov)?;
                w.flush()?;
                writeln!(err, "wrote {}", path.display())?;
                if let Some(rows) = &avg {
                    let path = output_path(base, algo, true);
                    let mut w = BufWriter::new(File::create(&path)?);
                    write_average(&mut w, &trace.algo, rows, &prov)?;
                    w.flush()?;
                    writeln!(err, "wrote {}", path.display())?;
                }
            }
            None => {
                write_trace(out, trace, &prov)?;
                if let Some(rows) = &avg {
                    write_average(out, &trace.algo, rows, &prov)?;
                }
            }
        }
    }
    Ok(())
}

fn fmt_vec(v: &DVector<f64>) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

fn oracle_cmd(a: OracleArgs, out: &mut dyn Write) -> Result<()> {
    let Benchmark::Discrete(mut env) = build(&a.env, a.seed)? else {
        return Err(Error::Config(format!("`{}` is not a finite environment", a.env)));
    };
    if let Some(g) = a.gamma {
        env = env.with_gamma(g)?;
    }
    let oracle = MdpOracle::new(&env.mdp, Some(&env.feats))?;
    let td = oracle.td_fixed_point()?;
    let br = oracle.msbr_minimizer()?;
    writeln!(out, "env: {}", env.name)?;
    writeln!(out, "states: {}", env.mdp.n_states())?;
    writeln!(out, "features: {} (rank {})", env.feats.dim(), env.feats.rank())?;
    writeln!(out, "gamma: {}", env.mdp.gamma())?;
    writeln!(out, "value: {}", fmt_vec(oracle.value()))?;
    writeln!(out, "mspbe_minimizer: {}", fmt_vec(&td))?;
    writeln!(out, "mspbe_minimizer_sqrt_mse: {}", fmt_f64(oracle.mse(&td).sqrt()))?;
    writeln!(out, "mspbe_minimizer_sqrt_mspbe: {}", fmt_f64(oracle.mspbe(&td).max(0.0).sqrt()))?;
    writeln!(out, "msbr_minimizer: {}", fmt_vec(&br))?;
    writeln!(out, "msbr_minimizer_sqrt_mse: {}", fmt_f64(oracle.mse(&br).sqrt()))?;
    writeln!(out, "msbr_minimizer_sqrt_msbr: {}", fmt_f64(oracle.msbr(&br).max(0.0).sqrt()))?;
    Ok(())
}

fn list_cmd(out: &mut dyn Write) -> Result<()> {
    writeln!(out, "environments: {}", ENV_NAMES.join(" "))?;
    writeln!(out, "algorithms: {}", ALGO_NAMES.join(" "))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = cli_main(std::iter::once("cemtd").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn list_and_usage_errors() {
        let (code, out, _) = run(&["list"]);
        assert_eq!(code, 0);
        assert!(out.contains("vanroy") && out.contains("lspe"));
        assert_eq!(run(&["bogus"]).0, EXIT_CONFIG);
        assert_eq!(run(&["run", "--env", "nowhere"]).0, EXIT_CONFIG);
        assert_eq!(run(&["run", "--env", "ring10", "--param", "c"]).0, EXIT_CONFIG);
    }

    #[test]
    fn oracle_prints_limits() {
        let (code, out, _) = run(&["oracle", "--env", "ring10"]);
        assert_eq!(code, 0);
        assert!(out.contains("mspbe_minimizer_sqrt_mse: "));
        assert_eq!(run(&["oracle", "--env", "cartpole"]).0, EXIT_CONFIG);
    }

    #[test]
    fn resolve_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        std::fs::write(&path, "env=ring10\nc=0.5\niters=7\n").unwrap();
        let a = RunArgs {
            env: None,
            algo: Some("td0".into()),
            config: Some(path),
            iters: Some(9),
            trials: None,
            seed: None,
            cadence: None,
            out: None,
            average: false,
            params: vec!["c=0.25".into()],
        };
        let cfg = resolve(&a, Some("41".into())).unwrap();
        assert_eq!((cfg.env.as_str(), cfg.iters, cfg.ce.c, cfg.seed), ("ring10", 9, 0.25, 41));
        assert_eq!(cfg.algos, vec!["td0".to_string()]);
    }

    #[test]
    fn output_naming() {
        let base = Path::new("/tmp/x/run.csv");
        assert_eq!(output_path(base, None, false), Path::new("/tmp/x/run.csv"));
        assert_eq!(output_path(base, Some("tdc"), true), Path::new("/tmp/x/run.tdc.avg.csv"));
    }
}

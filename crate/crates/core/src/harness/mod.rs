//! Experiment configuration, multi-trial execution, CSV output and the CLI.

mod cli;
mod config;
mod csv;
mod run;

pub use cli::{cli_main, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
pub use config::{default_table, parse_key_values, ExperimentConfig, InitSpec, ALGO_NAMES};
pub use csv::{fmt_f64, write_average, write_trace, AVERAGE_HEADER, TRACE_HEADER};
pub use run::{
    average_trials, final_sqrt_mse, run_experiment, run_experiment_in, run_trial, trial_rng, AlgoTrace,
    AveragedRecord, EnvContext, TrialTrace,
};

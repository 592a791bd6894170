//! First-order and least-squares reference predictors.

mod least_squares;
mod linear;
mod nonlinear;
mod runner;

pub use least_squares::{LeastSquaresState, LS_EPSILON};
pub use linear::{gtd2_step, rg_step, td_lambda_step, tdc_step, LinearPredictor, DIVERGENCE_NORM};
pub use nonlinear::{gtd2_nl_step, td0_nl_step, Projector};
pub use runner::{run_linear_baseline, run_nonlinear_baseline, BaselineConfig, LinearMethod, NonlinearMethod};

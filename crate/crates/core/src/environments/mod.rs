//! Benchmark environments: the finite chains with their printed matrices and
//! the two linearized control systems with LQR evaluation policies.

mod continuous;
mod discrete;
mod features;
mod lqr;

pub use continuous::{
    make_cartpole, make_pendulum5, pendulum_mass, pendulum_u, ContinuousEnv, ContinuousStream,
    QuadraticEvaluator, EVAL_STATES,
};
pub use discrete::{
    make_baird, make_nonlinear_baird, make_nonlinear_ring, make_random_mdp, make_ring10,
    make_vanroy, BairdFeatures, Basis, DiscreteEnv, VANROY_A, VANROY_B, VANROY_EPS, VANROY_TAU,
};
pub use features::{fourier_features, quadratic_dim, quadratic_features, rbf_features};
pub use lqr::{discounted_lqr, discounted_lyapunov};

use crate::{Error, Result};

/// Every environment addressable by name.
pub const ENV_NAMES: [&str; 10] = [
    "baird",
    "baird-imperfect",
    "ring10",
    "random-rbf",
    "random-fourier",
    "cartpole",
    "pendulum5",
    "vanroy",
    "baird-nl",
    "ring10-nl",
];

/// A constructed benchmark.
#[derive(Debug, Clone)]
pub enum Benchmark {
    Discrete(DiscreteEnv),
    Continuous(ContinuousEnv),
}

/// Builds a named environment. `seed` only affects the random MDPs, which
/// use 1000 states and 50 features.
pub fn build(name: &str, seed: u64) -> Result<Benchmark> {
    Ok(match name {
        "baird" => Benchmark::Discrete(make_baird(BairdFeatures::Perfect)?),
        "baird-imperfect" => Benchmark::Discrete(make_baird(BairdFeatures::Imperfect)?),
        "ring10" => Benchmark::Discrete(make_ring10()?),
        "random-rbf" => Benchmark::Discrete(make_random_mdp(1000, 200, 50, Basis::Rbf, seed)?),
        "random-fourier" => {
            Benchmark::Discrete(make_random_mdp(1000, 200, 50, Basis::Fourier, seed)?)
        }
        "cartpole" => Benchmark::Continuous(make_cartpole()?),
        "pendulum5" => Benchmark::Continuous(make_pendulum5()?),
        "vanroy" => Benchmark::Discrete(make_vanroy()?),
        "baird-nl" => Benchmark::Discrete(make_nonlinear_baird()?),
        "ring10-nl" => Benchmark::Discrete(make_nonlinear_ring()?),
        other => return Err(Error::Config(format!("unknown environment `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_builds() {
        for name in ENV_NAMES {
            let env = build(name, 1).unwrap();
            match env {
                Benchmark::Discrete(d) => assert!(d.name.starts_with(name.split('-').next().unwrap())),
                Benchmark::Continuous(c) => assert_eq!(c.name, name),
            }
        }
        assert!(build("mountain-car", 0).is_err());
    }
}

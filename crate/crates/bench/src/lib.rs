//! Fixtures shared by the benchmarks.

use entlqc_core::{random_instance, solve_optimal_default, EnvModel, OptimalSolution, Policy, TauMode};

pub const SEED: u64 = 7;
pub const GAMMA: f64 = 0.9;

pub struct Fixture {
    pub env: EnvModel,
    pub init: Policy,
    pub sol: OptimalSolution,
}

/// Random instance with `τ = σ_min(R)`, the standard initial policy and the
/// exact optimum.
pub fn fixture(n: usize, k: usize) -> Fixture {
    let env = random_instance(n, k, SEED, GAMMA, TauMode::SigmaMinR).expect("valid instance");
    let sol = solve_optimal_default(&env).expect("solvable instance");
    Fixture {
        init: Policy::constant(n, k, 0.01, 1.0),
        env,
        sol,
    }
}

//! Policy optimization: update rules, prescribed rates and constants, and
//! the iteration driver.

pub mod constants;
pub mod driver;
pub mod steps;
pub mod trace;

pub use constants::{default_rho, rpg_rates, theory_constants, xi_zeta_omega, RpgRates, TheoryConstants};
pub use driver::{noise_floor, run, run_with, Method, RunOptions, StopRule};
pub use steps::{gauss_newton_step, ipo_step, rpg_step};
pub use trace::{IterateRecord, IterateTrace, MethodTag, TraceRow, TraceStatus};

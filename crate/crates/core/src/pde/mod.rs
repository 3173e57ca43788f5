//! Finite-difference engine for the switching-discount Black–Scholes family.
//!
//! The spatial grid is uniform in `S` on `[0, S₀·exp(kσ√T)]` with nodes
//! nudged onto strikes and spot; time stepping is θ-weighted with Rannacher
//! start-up. At `S = 0` the equation is an ODE solved exactly per step, and
//! at `S_max` the solution is extrapolated linearly.

mod coefficients;
mod convergence;
mod grid;
mod solver;
mod surface;
mod tridiag;

pub use coefficients::{build_coefficients, CollateralSpec, GeneralizedPreset, PdeCoefficients, PdeMode, PostedAmount};
pub use convergence::{convergence_study, ConvergenceRow};
pub use grid::GridSpec;
pub use solver::solve_pde;
pub use surface::{SolveStats, ValueSurface};

//! Numerical laboratory for the logarithmic Schrödinger equation
//!
//! ```text
//! i∂ₜu + Δu + u log|u|² = 0,   x ∈ ℝᴺ (N = 1, 2, 3),
//! ```
//!
//! discretized on a periodic box `[-L, L)ᴺ`. The crate evaluates the energy,
//! action and Nehari functionals, the Orlicz/Luxemburg norm of the energy
//! space, computes ground states on the Nehari manifold, evolves the equation
//! with an exact-substep Strang splitting and measures the distance of
//! perturbed Gaussons to the Gausson orbit.

pub mod checks;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod functionals;
pub mod gausson;
pub mod grid;
pub mod ground_state;
pub mod io;

mod nelder_mead;
pub mod orbit;
pub mod sampling;
pub mod stability;

pub use error::{Error, Result};
pub use evolve::{evolve_run, nonlinear_phase_step, strang_step, EvolveOptions, TrajectoryDiagnostics};
pub use functionals::{
    a_pointwise, action, b_pointwise, charge, energy, entropy_term, log_sobolev_gap, luxemburg_norm, nehari,
    nehari_rescale, w_norm, FunctionalReport,
};
pub use gausson::{d_closed, elliptic_residual, gausson_field, orbit_element, GaussonParams};
pub use grid::{integrate, kinetic, laplacian, make_grid, shift_field, Field, Grid};
pub use ground_state::{align_to_orbit, minimize_action, GroundStateResult, Init, MinimizeOptions};
pub use num_complex::Complex64;
pub use orbit::{orbit_distance, NormKind, OrbitFit};
pub use stability::{
    brezis_lieb_demo, make_perturbation, stability_experiment, PerturbationKind, PerturbationSpec, StabilityReport,
};

//! Ground states as minimizers of the action on the Nehari manifold.
//!
//! On `{I_ω = 0}` the action reduces to `S_ω = ½‖u‖²`, and the radial map
//! `u ↦ exp(I_ω(u)/(2‖u‖²)) u` projects any nonzero field onto the manifold
//! exactly. The minimizer is therefore found by projected descent: a
//! preconditioned step along the `L²` gradient of `S_ω`,
//! `-Δu + ωu - u log|u|²`, followed by the exact projection, with Armijo
//! backtracking on the projected value `½‖u‖²`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{charge, nehari, nehari_rescale};
use crate::gausson::{d_closed, gausson_field, stationary_gradient, GaussonParams};
use crate::grid::{Field, Grid};
use crate::orbit::{orbit_distance, NormKind};
use crate::sampling::{band_limited_noise, gaussian_envelope, rng_from_seed};

const ARMIJO: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Stop once `‖P g‖ <= grad_tol · ‖u‖`, with `P g` the Nehari-tangential gradient.
    pub grad_tol: f64,
    /// First trial step.
    pub step_init: f64,
    pub backtrack_factor: f64,
    pub seed: u64,
    /// Shift `c` of the spectral preconditioner `(c + |k|²)^{-1}`.
    pub precond_shift: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-6,
            step_init: 0.1,
            backtrack_factor: 0.5,
            seed: 0,
            precond_shift: 1.0,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return Err(Error::InvalidArgument("grad_tol must be positive".into()));
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return Err(Error::InvalidArgument("step_init must be positive".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidArgument("backtrack_factor must lie in (0, 1)".into()));
        }
        if !(self.precond_shift > 0.0 && self.precond_shift.is_finite()) {
            return Err(Error::InvalidArgument("precond_shift must be positive".into()));
        }
        Ok(())
    }
}

/// Starting point of a minimization.
#[derive(Clone, Debug)]
pub enum Init {
    Field(Field),
    /// Broad Gaussian envelope times band-limited complex noise (seeded).
    Random,
    /// `φ_ω` times `(1 + noise/5)`.
    GaussonPerturbed,
    /// Off-centre anisotropic Gaussian.
    Anisotropic,
}

impl std::str::FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "gausson-perturbed" => Ok(Self::GaussonPerturbed),
            "anisotropic" => Ok(Self::Anisotropic),
            other => Err(Error::InvalidArgument(format!("unknown initializer {other:?}"))),
        }
    }
}

impl Init {
    pub fn build(&self, omega: f64, grid: &Grid, seed: u64) -> Result<Field> {
        let dim = grid.dim();
        let field = match self {
            Init::Field(f) => {
                if f.grid() != grid {
                    return Err(Error::InvalidArgument("initial field lives on another grid".into()));
                }
                f.clone()
            }
            Init::Random => {
                let mut rng = rng_from_seed(seed);
                let noise = band_limited_noise(grid, &mut rng, 1.0);
                let env = gaussian_envelope(grid, &vec![0.0; dim], &[3.0]);
                noise.zip_map(&env, |a, b| a * b)
            }
            Init::GaussonPerturbed => {
                let mut rng = rng_from_seed(seed);
                let noise = band_limited_noise(grid, &mut rng, 2.0);
                let phi = gausson_field(&GaussonParams::new(omega, dim)?, grid)?;
                phi.zip_map(&noise, |p, n| p * (1.0 + 0.2 * n))
            }
            Init::Anisotropic => {
                let center = [1.0, -0.5, 0.25];
                gaussian_envelope(grid, &center[..dim], &[1.6, 0.8, 1.2][..dim])
            }
        };
        if field.is_zero() {
            return Err(Error::ZeroField("minimize_action initializer"));
        }
        Ok(field)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// `S_ω` on the manifold, evaluated as `½‖u‖²`.
    pub action: f64,
    pub nehari_residual: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundStateResult {
    #[serde(skip)]
    pub minimizer: Option<Field>,
    pub omega: f64,
    pub dim: usize,
    pub action_value: f64,
    pub d_closed_ref: f64,
    pub relative_error: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub charge: f64,
    pub nehari: f64,
    pub elliptic_residual: f64,
    pub orbit_distance_l2: f64,
    pub orbit_theta: f64,
    pub orbit_y: Vec<f64>,
    pub trace: Vec<TraceEntry>,
}

impl GroundStateResult {
    pub fn minimizer(&self) -> &Field {
        self.minimizer.as_ref().expect("minimizer is always set by minimize_action")
    }
}

/// Minimize `S_ω` over the Nehari manifold.
///
/// Non-convergence is not an error: the result comes back with
/// `converged = false` and the full trace.
pub fn minimize_action(omega: f64, grid: &Grid, init: &Init, opts: &MinimizeOptions) -> Result<GroundStateResult> {
    opts.validate()?;
    if !omega.is_finite() {
        return Err(Error::InvalidArgument("omega must be finite".into()));
    }
    let start = init.build(omega, grid, opts.seed)?;
    let mut u = nehari_rescale(&start, omega)?;
    let precond: Vec<f64> = grid
        .k_squared()
        .iter()
        .map(|k2| (1.0 + opts.precond_shift) / (opts.precond_shift + k2))
        .collect();

    let mut trace = Vec::new();
    let mut objective = 0.5 * charge(&u);
    let mut step = opts.step_init;
    let mut converged = false;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;

    for it in 0..opts.max_iters {
        let g = stationary_gradient(&u, omega);
        let q = 2.0 * objective;
        let along_u = g.real_inner(&u) / q;
        let tangent = g.zip_map(&u, |gv, uv| gv - uv * along_u);
        grad_norm = tangent.l2_norm();
        trace.push(TraceEntry {
            iteration: it,
            action: objective,
            nehari_residual: nehari(&u, omega),
            grad_norm,
            step,
        });
        iterations = it;
        if grad_norm <= opts.grad_tol * q.sqrt() {
            converged = true;
            break;
        }

        let mut dir = tangent.values().to_vec();
        grid.apply_spectral(&mut dir, |i| Complex64::new(precond[i], 0.0));
        let dir = Field::from_parts(grid, dir);
        let slope = tangent.real_inner(&dir);
        if !(slope > 0.0) {
            break;
        }

        let mut tau = step;
        let mut accepted = None;
        while tau > 1e-14 {
            let trial = u.zip_map(&dir, |a, d| a - d * tau);
            if let Ok(projected) = nehari_rescale(&trial, omega) {
                let value = 0.5 * charge(&projected);
                if value <= objective - ARMIJO * tau * slope {
                    accepted = Some((projected, value));
                    break;
                }
            }
            tau *= opts.backtrack_factor;
        }
        let Some((next, value)) = accepted else {
            // Line search stalled at roundoff level.
            break;
        };
        u = next;
        objective = value;
        step = (tau / opts.backtrack_factor).min(1e3);
        iterations = it + 1;
    }

    let params = GaussonParams::new(omega, grid.dim())?;
    let d_ref = d_closed(params.omega, params.dim);
    let fit = orbit_distance(&u, omega, NormKind::L2)?;
    let residual = crate::gausson::elliptic_residual(&u, omega)?;
    Ok(GroundStateResult {
        omega,
        dim: grid.dim(),
        action_value: objective,
        d_closed_ref: d_ref,
        relative_error: (objective - d_ref).abs() / d_ref,
        converged,
        iterations,
        grad_norm,
        charge: charge(&u),
        nehari: nehari(&u, omega),
        elliptic_residual: residual,
        orbit_distance_l2: fit.distance,
        orbit_theta: fit.theta,
        orbit_y: fit.y,
        trace,
        minimizer: Some(u),
    })
}

/// Best-fit phase and translation of `field` against the Gausson orbit, with
/// the residual distance in the requested norm.
pub fn align_to_orbit(field: &Field, omega: f64, norm_kind: NormKind) -> Result<(f64, Vec<f64>, f64)> {
    let fit = orbit_distance(field, omega, norm_kind)?;
    Ok((fit.theta, fit.y, fit.distance))
}

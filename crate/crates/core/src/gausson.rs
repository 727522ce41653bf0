//! The Gausson family `φ_ω(x) = e^{(ω+N)/2} e^{-|x|²/2}`, its orbit under
//! phase rotation and translation, and the closed form of the ground-state
//! level `d(ω) = ½ π^{N/2} e^{ω+N}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{charge, LOG_FLOOR};
use crate::grid::{laplacian, Field, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussonParams {
    pub omega: f64,
    pub dim: usize,
}

impl GaussonParams {
    pub fn new(omega: f64, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("dimension {dim} outside 1..=3")));
        }
        if !omega.is_finite() {
            return Err(Error::InvalidArgument("omega must be finite".into()));
        }
        Ok(Self { omega, dim })
    }

    /// Peak value `e^{(ω+N)/2}`.
    pub fn amplitude(&self) -> f64 {
        (0.5 * (self.omega + self.dim as f64)).exp()
    }
}

fn check_dim(params: &GaussonParams, grid: &Grid) -> Result<()> {
    if params.dim != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            actual: params.dim,
        });
    }
    Ok(())
}

pub fn gausson_field(params: &GaussonParams, grid: &Grid) -> Result<Field> {
    check_dim(params, grid)?;
    let log_amp = 0.5 * (params.omega + params.dim as f64);
    Field::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        Complex64::new((log_amp - 0.5 * r2).exp(), 0.0)
    })
}

/// `d(ω) = ½ π^{N/2} e^{ω+N}`.
pub fn d_closed(omega: f64, dim: usize) -> f64 {
    let n = dim as f64;
    0.5 * std::f64::consts::PI.powf(n / 2.0) * (omega + n).exp()
}

/// `‖-Δφ + ωφ - φ log|φ|²‖ / ‖φ‖`.
pub fn elliptic_residual(field: &Field, omega: f64) -> Result<f64> {
    let norm = field.l2_norm();
    if norm == 0.0 {
        return Err(Error::ZeroField("elliptic_residual"));
    }
    let r = stationary_gradient(field, omega);
    Ok(r.l2_norm() / norm)
}

/// `-Δu + ωu - u log|u|²`, the left side of the stationary equation and the
/// `L²` gradient of `S_ω`.
pub fn stationary_gradient(field: &Field, omega: f64) -> Field {
    let lap = laplacian(field);
    let values = field
        .values()
        .iter()
        .zip(lap.values())
        .map(|(&u, &d)| {
            let m2 = u.norm_sqr();
            let log_term = if m2 < LOG_FLOOR { 0.0 } else { m2.ln() };
            -d + u * (omega - log_term)
        })
        .collect();
    Field::from_parts(field.grid(), values)
}

/// `e^{iθ} φ_ω(· - y)`, sampled with minimum-image displacements on the torus.
pub fn orbit_element(params: &GaussonParams, theta: f64, y: &[f64], grid: &Grid) -> Result<Field> {
    check_dim(params, grid)?;
    if y.len() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            actual: y.len(),
        });
    }
    if y.iter().any(|c| !c.is_finite()) || !theta.is_finite() {
        return Err(Error::InvalidArgument("orbit parameters must be finite".into()));
    }
    let limit = 0.5 * grid.half_width();
    if y.iter().map(|c| c * c).sum::<f64>().sqrt() > limit {
        return Err(Error::InvalidArgument(format!(
            "translation {y:?} leaves the bulk (|y| must be <= {limit})"
        )));
    }
    Ok(orbit_sample(params, theta, y, grid))
}

/// Same as [`orbit_element`] without the bulk check.
pub(crate) fn orbit_sample(params: &GaussonParams, theta: f64, y: &[f64], grid: &Grid) -> Field {
    let log_amp = 0.5 * (params.omega + params.dim as f64);
    let phase = Complex64::from_polar(1.0, theta);
    let dim = grid.dim();
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            let r2: f64 = (0..dim).map(|a| grid.wrap(x[a] - y[a]).powi(2)).sum();
            phase * (log_amp - 0.5 * r2).exp()
        })
        .collect();
    Field::from_parts(grid, values)
}

/// `‖φ_ω‖² = 2 d(ω)`.
pub fn gausson_charge(params: &GaussonParams) -> f64 {
    2.0 * d_closed(params.omega, params.dim)
}

/// Quadrature charge of the sampled Gausson.
pub fn sampled_charge(params: &GaussonParams, grid: &Grid) -> Result<f64> {
    Ok(charge(&gausson_field(params, grid)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{action, energy, nehari};
    use crate::grid::{make_grid, shift_field};
    use std::f64::consts::{E, PI};

    fn grid1() -> Grid {
        make_grid(1, 12.0, 256).unwrap()
    }

    #[test]
    fn gausson_values() {
        let g = grid1();
        let phi = gausson_field(&GaussonParams::new(0.0, 1).unwrap(), &g).unwrap();
        let center = g.points() / 2;
        assert_eq!(g.coordinate(center), 0.0);
        assert!((phi.values()[center].re - 1.648_721_3).abs() < 1e-7);
        let phi_m1 = gausson_field(&GaussonParams::new(-1.0, 1).unwrap(), &g).unwrap();
        assert_eq!(phi_m1.values()[center].re, 1.0);
        for j in 1..center {
            assert_eq!(phi.values()[center + j], phi.values()[center - j]);
        }
        let g2 = make_grid(2, 10.0, 32).unwrap();
        assert!(gausson_field(&GaussonParams::new(0.0, 1).unwrap(), &g2).is_err());
        assert!(GaussonParams::new(0.0, 4).is_err());
    }

    #[test]
    fn d_closed_values() {
        assert!((d_closed(0.0, 1) - 2.409_014_547).abs() < 1e-9);
        assert!((d_closed(0.0, 2) - 11.606_702_179).abs() < 1e-9);
        assert!((d_closed(0.0, 1) - 0.5 * PI.sqrt() * E).abs() < 1e-15);
        for n in 1..=3 {
            assert!((d_closed(-(n as f64), n) - 0.5 * PI.powf(n as f64 / 2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_identities() {
        for (dim, l, m) in [(1, 12.0, 256), (2, 10.0, 128)] {
            let g = make_grid(dim, l, m).unwrap();
            for omega in [-1.0, 0.0, 1.0] {
                let p = GaussonParams::new(omega, dim).unwrap();
                let phi = gausson_field(&p, &g).unwrap();
                let d = d_closed(omega, dim);
                assert!((charge(&phi) - 2.0 * d).abs() <= 1e-8 * d);
                assert!((action(&phi, omega) - d).abs() <= 1e-8 * d);
                assert!((energy(&phi) + omega * d).abs() <= 1e-7 * d);
            }
        }
    }

    #[test]
    fn residual_of_exact_solution() {
        let g = grid1();
        for omega in [-1.0, 0.0, 1.0] {
            let p = GaussonParams::new(omega, 1).unwrap();
            let phi = gausson_field(&p, &g).unwrap();
            let r = elliptic_residual(&phi, omega).unwrap();
            assert!(r <= 1e-8, "ω={omega}: {r}");

            let scaled = phi.scaled(Complex64::new(1.1, 0.0));
            let r = elliptic_residual(&scaled, omega).unwrap();
            assert!((r - 1.21f64.ln()).abs() < 1e-8, "{r}");

            let moved = shift_field(&phi, &[1.3]).unwrap();
            assert!(elliptic_residual(&moved, omega).unwrap() <= 1e-8);
        }
        assert!(elliptic_residual(&Field::zeros(&g), 0.0).is_err());
    }

    #[test]
    fn orbit_elements() {
        let g = grid1();
        let p = GaussonParams::new(0.0, 1).unwrap();
        let phi = gausson_field(&p, &g).unwrap();
        assert_eq!(orbit_element(&p, 0.0, &[0.0], &g).unwrap(), phi);
        let q = charge(&phi);
        for theta in [-2.0, 0.3, 1.9] {
            for y in [-4.0, -0.77, 2.5, 6.0] {
                let u = orbit_element(&p, theta, &[y], &g).unwrap();
                assert!((charge(&u) - q).abs() <= 1e-12 * q);
                assert!(nehari(&u, 0.0).abs() <= 1e-7 * q);
            }
        }
        assert!(orbit_element(&p, 0.0, &[6.5], &g).is_err());
        assert!(orbit_element(&p, 0.0, &[1.0, 1.0], &g).is_err());
    }
}

//! Distance from a field to the Gausson orbit `{e^{iθ} φ_ω(· - y)}`.
//!
//! The infimum over `(θ, y)` is approximated coarse to fine:
//!
//! 1. `y` from the peak of the cross-correlation of `|u|` with `φ_ω` over
//!    every grid offset (one forward/inverse transform pair), refined below
//!    one cell by a three-point quadratic fit of the log-correlation.
//! 2. `θ = arg ⟨φ_ω(· - y), u⟩`, the exact `L²` optimum for fixed `y`.
//! 3. Gauss–Newton on the `L²` residual in `(θ, y)`.
//! 4. A budgeted Nelder–Mead polish on the requested norm.
//!
//! The identity gauge `(0, 0)` is always a candidate, so the reported
//! distance never exceeds the plain distance to `φ_ω`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::w_norm;
use crate::gausson::{gausson_field, orbit_sample, GaussonParams};
use crate::grid::{Field, Grid, MAX_DIM};
use crate::nelder_mead;

/// Evaluation budget of the derivative-free polish.
pub const POLISH_BUDGET: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    W,
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L2" | "l2" => Ok(Self::L2),
            "W" | "w" => Ok(Self::W),
            other => Err(Error::InvalidArgument(format!("unknown norm kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitFit {
    pub distance: f64,
    pub theta: f64,
    pub y: Vec<f64>,
    /// Distance in grid cells between the correlation-peak estimate of `y`
    /// and the final minimizer.
    pub polish_shift_cells: f64,
    /// The polish moved `y` by more than one cell; the coarse stage may have
    /// picked the wrong basin.
    pub polish_moved_cell: bool,
}

/// Orbit distance in the requested norm with its minimizing `(θ, y)`.
pub fn orbit_distance(field: &Field, omega: f64, norm_kind: NormKind) -> Result<OrbitFit> {
    if field.is_zero() {
        return Err(Error::ZeroField("orbit_distance"));
    }
    let grid = field.grid();
    let params = GaussonParams::new(omega, grid.dim())?;
    let dim = grid.dim();

    let coarse = correlation_peak(field, &params)?;
    let ref_at = |y: &[f64]| orbit_sample(&params, 0.0, y, grid);
    let theta0 = ref_at(&coarse).inner(field).arg();
    let (theta1, y1) = gauss_newton(field, &params, theta0, coarse.clone());

    let dist = |p: &[f64]| -> f64 {
        let model = orbit_sample(&params, p[0], &p[1..], grid);
        let diff: Vec<Complex64> = field
            .values()
            .iter()
            .zip(model.values())
            .map(|(a, b)| a - b)
            .collect();
        let diff = Field::from_parts(grid, diff);
        match norm_kind {
            NormKind::L2 => diff.l2_norm(),
            NormKind::W => w_norm(&diff),
        }
    };

    let mut start = vec![theta1];
    start.extend_from_slice(&y1);
    let mut scale = vec![1e-2];
    scale.extend(std::iter::repeat_n(0.25 * grid.spacing(), dim));
    let polished = nelder_mead::minimize(dist, &start, &scale, POLISH_BUDGET);

    let mut best_point = polished.point;
    let mut best_value = polished.value;
    let mut identity = vec![0.0; dim + 1];
    let identity_value = dist(&identity);
    if identity_value < best_value {
        best_value = identity_value;
        std::mem::swap(&mut best_point, &mut identity);
    }

    let theta = wrap_angle(best_point[0]);
    let y: Vec<f64> = best_point[1..].iter().map(|&c| grid.wrap(c)).collect();
    let shift = y
        .iter()
        .zip(&coarse)
        .map(|(a, b)| grid.wrap(a - b).powi(2))
        .sum::<f64>()
        .sqrt()
        / grid.spacing();
    Ok(OrbitFit {
        distance: best_value,
        theta,
        y,
        polish_shift_cells: shift,
        polish_moved_cell: shift > 1.0,
    })
}

fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = theta.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

/// Translation maximizing `Σ |u|(x) φ_ω(x - y)` over grid offsets, with a
/// sub-cell quadratic fit per axis.
fn correlation_peak(field: &Field, params: &GaussonParams) -> Result<Vec<f64>> {
    let grid = field.grid();
    let mut a: Vec<Complex64> = field.values().iter().map(|v| Complex64::new(v.norm(), 0.0)).collect();
    let mut b = gausson_field(params, grid)?.into_values();
    grid.forward(&mut a);
    grid.forward(&mut b);
    let mut c: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y.conj()).collect();
    grid.inverse(&mut c);
    let corr: Vec<f64> = c.iter().map(|v| v.re).collect();

    let (peak, _) = corr
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });

    let idx = grid.unravel(peak);
    let m = grid.points();
    let h = grid.spacing();
    let mut y = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        let neighbour = |step: isize| {
            let mut j = idx;
            j[axis] = ((idx[axis] as isize + step).rem_euclid(m as isize)) as usize;
            corr[grid.ravel(&j[..grid.dim()])]
        };
        let (cm, c0, cp) = (neighbour(-1), corr[peak], neighbour(1));
        let offset = subcell_offset(cm, c0, cp);
        // Offset index s means φ(x - s h) best matches |u|.
        let s = idx[axis] as f64 + offset;
        y.push(grid.wrap(s * h));
    }
    Ok(y)
}

/// Vertex of the parabola through three equally spaced samples, in units of
/// the spacing. Uses the log of the samples when all are positive, which is
/// exact for Gaussian-shaped peaks.
fn subcell_offset(cm: f64, c0: f64, cp: f64) -> f64 {
    let (l, c, r) = if cm > 0.0 && c0 > 0.0 && cp > 0.0 {
        (cm.ln(), c0.ln(), cp.ln())
    } else {
        (cm, c0, cp)
    };
    let denom = l - 2.0 * c + r;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
}

/// Gauss–Newton on `‖u - e^{iθ} φ_ω(· - y)‖²_{L²}`.
fn gauss_newton(field: &Field, params: &GaussonParams, theta: f64, y: Vec<f64>) -> (f64, Vec<f64>) {
    let grid = field.grid();
    let dim = grid.dim();
    let n = dim + 1;
    let l2 = |theta: f64, y: &[f64]| {
        let model = orbit_sample(params, theta, y, grid);
        field
            .values()
            .iter()
            .zip(model.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
    };

    let mut theta = theta;
    let mut y = y;
    let mut current = l2(theta, &y);
    for _ in 0..12 {
        let model = orbit_sample(params, theta, &y, grid);
        let residual: Vec<Complex64> = field
            .values()
            .iter()
            .zip(model.values())
            .map(|(a, b)| a - b)
            .collect();
        // Columns: d/dθ = i·model, d/dy_a = (x_a - y_a)·model.
        let mut jtj = [[0.0; MAX_DIM + 1]; MAX_DIM + 1];
        let mut jtr = [0.0; MAX_DIM + 1];
        let mut col = [Complex64::new(0.0, 0.0); MAX_DIM + 1];
        for (i, (&mv, r)) in model.values().iter().zip(&residual).enumerate() {
            let x = grid.position(i);
            col[0] = Complex64::new(0.0, 1.0) * mv;
            for a in 0..dim {
                col[a + 1] = mv * grid.wrap(x[a] - y[a]);
            }
            for p in 0..n {
                jtr[p] += col[p].re * r.re + col[p].im * r.im;
                for q in p..n {
                    jtj[p][q] += col[p].re * col[q].re + col[p].im * col[q].im;
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                jtj[p][q] = jtj[q][p];
            }
        }
        let Some(step) = solve_small(jtj, jtr, n) else {
            break;
        };

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let cand_theta = theta + t * step[0];
            let cand_y: Vec<f64> = (0..dim).map(|a| y[a] + t * step[a + 1]).collect();
            let v = l2(cand_theta, &cand_y);
            if v < current {
                theta = cand_theta;
                y = cand_y;
                current = v;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        let step_norm = step.iter().take(n).map(|s| s * s).sum::<f64>().sqrt();
        if !accepted || step_norm < 1e-14 {
            break;
        }
    }
    (theta, y)
}

/// Gaussian elimination with partial pivoting on the leading `n×n` block.
fn solve_small(mut a: [[f64; MAX_DIM + 1]; MAX_DIM + 1], mut b: [f64; MAX_DIM + 1], n: usize) -> Option<[f64; MAX_DIM + 1]> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; MAX_DIM + 1];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Plain distance `‖u - φ_ω‖` in the requested norm (no gauge optimization).
pub fn distance_to_gausson(field: &Field, omega: f64, norm_kind: NormKind) -> Result<f64> {
    let grid: &Grid = field.grid();
    let phi = gausson_field(&GaussonParams::new(omega, grid.dim())?, grid)?;
    let diff = field.sub(&phi)?;
    Ok(match norm_kind {
        NormKind::L2 => diff.l2_norm(),
        NormKind::W => w_norm(&diff),
    })
}

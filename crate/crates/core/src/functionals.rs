//! Scalar functionals of a field: charge, the logarithmic entropy term, the
//! energy, the action `S_ω` and Nehari functional `I_ω`, the Young function
//! `A` with its companion `B`, the Luxemburg and `W` norms, the
//! log-Sobolev gap and the exact rescaling onto the Nehari manifold.
//!
//! With `Q = ‖u‖²`, `K = ∫|∇u|²` and `H = ∫|u|² log|u|²`:
//!
//! ```text
//! E(u)   = K/2 - H/2
//! S_ω(u) = E(u) + (ω+1)/2 · Q
//! I_ω(u) = K + ω Q - H
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{kinetic, refine_field, Field};

/// Below this value of `|u|²` the integrand `|u|² log|u|²` is taken to be 0.
pub const LOG_FLOOR: f64 = 1e-300;

/// Seam `e^{-3}` between the two branches of `A`.
pub const A_SEAM: f64 = 0.049_787_068_367_863_944;

const E_MINUS_6: f64 = 0.002_478_752_176_666_358_4;

/// `s log s` for `s = |u|²`, with `0·log 0 = 0` below [`LOG_FLOOR`].
#[inline]
pub fn entropy_density(modulus_sq: f64) -> f64 {
    if modulus_sq < LOG_FLOOR {
        0.0
    } else {
        modulus_sq * modulus_sq.ln()
    }
}

/// `‖u‖²_{L²}`.
pub fn charge(field: &Field) -> f64 {
    field.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * field.grid().cell_volume()
}

/// `∫|u|² log|u|²`.
pub fn entropy_term(field: &Field) -> f64 {
    field
        .values()
        .iter()
        .map(|v| entropy_density(v.norm_sqr()))
        .sum::<f64>()
        * field.grid().cell_volume()
}

pub fn energy(field: &Field) -> f64 {
    0.5 * kinetic(field) - 0.5 * entropy_term(field)
}

/// Action `S_ω(u)`.
pub fn action(field: &Field, omega: f64) -> f64 {
    energy(field) + 0.5 * (omega + 1.0) * charge(field)
}

/// Nehari functional `I_ω(u) = ⟨S_ω'(u), u⟩`.
pub fn nehari(field: &Field, omega: f64) -> f64 {
    kinetic(field) + omega * charge(field) - entropy_term(field)
}

/// `F(s) = s² log s²`.
#[inline]
pub fn f_pointwise(s: f64) -> f64 {
    entropy_density(s * s)
}

/// Young function `A`, no sign check.
#[inline]
pub(crate) fn a_unchecked(s: f64) -> f64 {
    if s <= A_SEAM {
        -entropy_density(s * s)
    } else {
        3.0 * s * s + 4.0 * A_SEAM * s - E_MINUS_6
    }
}

/// Young function `A(s)`: `-s² log s²` up to `e^{-3}`, then `3s² + 4e^{-3}s - e^{-6}`.
pub fn a_pointwise(s: f64) -> Result<f64> {
    check_nonneg(s)?;
    Ok(a_unchecked(s))
}

/// `B(s) = F(s) + A(s)`.
pub fn b_pointwise(s: f64) -> Result<f64> {
    check_nonneg(s)?;
    Ok(f_pointwise(s) + a_unchecked(s))
}

/// Left and right one-sided values and derivatives of `A` at the seam,
/// each evaluated from its own branch formula.
pub fn a_seam_branches() -> ((f64, f64), (f64, f64)) {
    seam_branches_with(A_SEAM)
}

/// Seam branches with `c` in place of `e^{-3}` in the right-branch coefficients.
pub(crate) fn seam_branches_with(c: f64) -> ((f64, f64), (f64, f64)) {
    let s = A_SEAM;
    // -s² log s²  and  -2s(log s² + 1)
    let log_s2 = (s * s).ln();
    let left = (-s * s * log_s2, -2.0 * s * (log_s2 + 1.0));
    let right = (3.0 * s * s + 4.0 * c * s - c * c, 6.0 * s + 4.0 * c);
    (left, right)
}

fn check_nonneg(s: f64) -> Result<()> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::InvalidArgument(format!("A/B need s >= 0, got {s}")));
    }
    Ok(())
}

/// Orlicz modular `∫A(|u|)`.
pub fn orlicz_modular(field: &Field) -> f64 {
    Modular::new(field).eval(1.0)
}

/// Largest refined grid used for Orlicz quadrature, in points.
const MODULAR_MAX_POINTS: usize = 1 << 22;

/// Quadrature of `∫A(|u|/k)`.
///
/// The modulus of a complex field has near-zeros where `s² log s²` is far
/// from smooth on the scale of the grid, so the integrand is sampled on the
/// trigonometric interpolant refined fourfold per axis (less when that grid
/// would get too large).
///
/// `A` is `C²` at the seam `s = e^{-3}`, but `A'''` jumps by `4e³` and `A''''`
/// by `-4e⁶`, so the plain rectangle rule drops to fourth order in `h` along
/// the level set `{|u|/k = e^{-3}}` (and is not translation invariant below
/// that level). Each crossing of the seam between two nodes of a grid line
/// along the last axis, at `x_j + τh`, gets the two leading Euler–Maclaurin
/// terms back:
///
/// ```text
/// + [f'''] h⁴ B₄(τ)/24 - [f''''] h⁵ B₅(τ)/120,     f = A∘s,
/// ```
///
/// with `s'` and `s''` at the crossing taken from the local quintic
/// interpolant through six nodes.
///
/// Near-zeros of `|u|` narrower than a few cells make `-s² log s²` nearly
/// singular even on the refined grid. There `q = |u|²` is still smooth, and
/// the rectangle-rule error of `q log q` is subtracted in closed form (see
/// [`log_singularity_error`]); it scales as `k^{-2}`.
struct Modular {
    moduli: Vec<f64>,
    log_sq: Vec<f64>,
    /// `(h Σ - ∫)` of `|u|² log|u|²` at one near-zero, and the largest `|u|` around it.
    near_zeros: Vec<(f64, f64)>,
    points: usize,
    spacing: f64,
    cell_volume: f64,
}

impl Modular {
    fn new(field: &Field) -> Self {
        let mut factor: usize = 4;
        while factor > 1 && field.len() * factor.pow(field.grid().dim() as u32) > MODULAR_MAX_POINTS {
            factor /= 2;
        }
        let fine = refine_field(field, factor).expect("power-of-two refinement");
        let grid = fine.grid();
        let moduli: Vec<f64> = fine.values().iter().map(|v| v.norm()).collect();
        let log_sq = moduli.iter().map(|s| (s * s).ln()).collect();
        let near_zeros = near_zeros(&moduli, grid.points(), grid.spacing());
        Self {
            moduli,
            log_sq,
            near_zeros,
            points: grid.points(),
            spacing: grid.spacing(),
            cell_volume: grid.cell_volume(),
        }
    }

    fn is_zero(&self) -> bool {
        self.moduli.iter().all(|&s| s == 0.0)
    }

    fn eval(&self, inv_k: f64) -> f64 {
        self.eval_with_slope(inv_k).0
    }

    /// `∫A(s)` and `∫s A'(s)` for `s = |u|·inv_k`; `d/dk ∫A(|u|/k) = -∫s A'(s) / k`.
    fn eval_with_slope(&self, inv_k: f64) -> (f64, f64) {
        // log(s²) = log|u|² + log_k, so no logarithms per sample
        let log_k = 2.0 * inv_k.ln();
        let mut sum = 0.0;
        let mut slope = 0.0;
        for (&m, &log_sq) in self.moduli.iter().zip(&self.log_sq) {
            let s = m * inv_k;
            let s2 = s * s;
            if s > A_SEAM {
                sum += 3.0 * s2 + 4.0 * A_SEAM * s - E_MINUS_6;
                slope += 6.0 * s2 + 4.0 * A_SEAM * s;
            } else if s2 >= LOG_FLOOR {
                let l = log_sq + log_k;
                sum -= s2 * l;
                slope -= 2.0 * s2 * (l + 1.0);
            }
        }
        let seams: f64 = self
            .moduli
            .chunks_exact(self.points)
            .map(|line| self.seam_correction(line, inv_k))
            .sum();
        // only valid while the whole neighbourhood stays on the logarithmic branch
        let logs: f64 = self
            .near_zeros
            .iter()
            .filter(|&&(_, peak)| peak * inv_k <= A_SEAM)
            .map(|&(err, _)| err * inv_k * inv_k)
            .sum();
        // corrections are line integrals; the remaining axes use the rectangle rule
        let value = (sum + (seams + logs) / self.spacing) * self.cell_volume;
        let slope = (slope + 2.0 * logs / self.spacing) * self.cell_volume;
        (value, slope)
    }

    fn seam_correction(&self, line: &[f64], inv_k: f64) -> f64 {
        let m = self.points;
        let h = self.spacing;
        let c = A_SEAM;
        let mut total = 0.0;
        for j in 0..m {
            let a = line[j] * inv_k - c;
            let b = line[(j + 1) % m] * inv_k - c;
            if (a < 0.0) == (b < 0.0) {
                continue;
            }
            let p: [f64; 6] = std::array::from_fn(|i| line[(j + m + i - 2) % m] * inv_k - c);
            let poly = Quintic::interpolate(&p);
            let t = poly.root_in_unit(a, b);
            let s1 = poly.derivative(t) / h;
            let s2 = poly.second_derivative(t) / (h * h);
            let jump3 = 4.0 / c * s1.abs().powi(3);
            let jump4 = s1.signum() * (-4.0 / (c * c) * s1.powi(4) + 24.0 / c * s1 * s1 * s2);
            total += jump3 * h.powi(4) * bernoulli4(t) / 24.0 - jump4 * h.powi(5) * bernoulli5(t) / 120.0;
        }
        total
    }
}

/// Rectangle-rule errors of `|u|² log|u|²` at the narrow local minima of `|u|`
/// along each line of the last axis.
fn near_zeros(moduli: &[f64], points: usize, h: f64) -> Vec<(f64, f64)> {
    let peak = moduli.iter().fold(0.0f64, |a, &b| a.max(b * b));
    let mut out = Vec::new();
    for line in moduli.chunks_exact(points) {
        let m = points;
        let q = |i: usize| line[i % m] * line[i % m];
        for j in m..2 * m {
            let window: [f64; 6] = std::array::from_fn(|i| q(j + i - 2));
            let qj = window[2];
            // q ≈ a²(ξ² + w²) grows by 25% two cells out when w is four cells
            if !(qj < window[1] && qj <= window[3] && window[0].max(window[4]) > 1.2 * qj) {
                continue;
            }
            let top = window.iter().fold(0.0f64, |a, &b| a.max(b));
            if top < NEAR_ZERO_FLOOR * peak {
                continue;
            }
            if let Some(err) = log_singularity_error(&Quintic::interpolate(&window), h) {
                out.push((err, top.sqrt()));
            }
        }
    }
    out
}

/// Near-zeros of `|u|` narrower than this many cells get the log correction.
const NEAR_ZERO_CELLS: f64 = 4.0;

/// Near-zeros holding less than this fraction of the peak `|u|²` are ignored.
const NEAR_ZERO_FLOOR: f64 = 1e-16;

/// Rectangle-rule error `h Σ f - ∫f` of `f = q log q` near a local minimum of
/// `q` on one line, where `q` is the interpolant in node units. With the
/// complex zero `x₀ ± iw` of `q` and `q = Σ c_m ξ^m` about `x₀`, the error is
/// `Σ_m c_m Σ_{n≠0} (i∂_k)^m ĝ(2πn/h) e^{-2πinx₀/h}` for
/// `ĝ(k) = -2π e^{-w|k|}/|k|`, the transform of `log(ξ² + w²)`.
fn log_singularity_error(q: &Quintic, h: f64) -> Option<f64> {
    let t = q.local_min();
    let a2 = 0.5 * q.second_derivative(t);
    if !(a2 > 0.0) {
        return None;
    }
    let mut z = Complex64::new(t, (q.value(t).max(0.0) / a2).sqrt().max(1e-6));
    for _ in 0..60 {
        let step = q.complex_value(z) / q.complex_derivative(z);
        z -= step;
        if !(step.norm() > 1e-14) {
            break;
        }
    }
    if !z.is_finite() || (z.re - t).abs() > 1.0 {
        return None;
    }
    let w = z.im.abs() * h;
    if w > NEAR_ZERO_CELLS * h {
        return None;
    }
    let mut c = q.taylor_at(z.re);
    for (m, cm) in c.iter_mut().enumerate() {
        *cm /= h.powi(m as i32);
    }
    let binom = [[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0, 0.0], [1.0, 4.0, 6.0, 4.0, 1.0, 0.0], [1.0, 5.0, 10.0, 10.0, 5.0, 1.0]];
    let factorial = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];
    let mut total = 0.0;
    for n in 1..=4000 {
        let k = 2.0 * std::f64::consts::PI * n as f64 / h;
        let decay = (-w * k).exp();
        if decay < 1e-18 {
            break;
        }
        let (sin, cos) = (2.0 * std::f64::consts::PI * n as f64 * z.re).sin_cos();
        for (m, cm) in c.iter().enumerate() {
            // m-th derivative of -2π e^{-wk}/k
            let mut g = 0.0;
            for j in 0..=m {
                g += binom[m][j] * (-w).powi((m - j) as i32) * (-1f64).powi(j as i32) * factorial[j] / k.powi(1 + j as i32);
            }
            g *= -2.0 * std::f64::consts::PI * decay;
            // the ±n terms pair into 2 Re(i^m) cos for even m and -2 Re(i^{m+1}) sin for odd m
            total += cm * if m % 2 == 0 {
                2.0 * (-1f64).powi((m / 2) as i32) * g * cos
            } else {
                -2.0 * (-1f64).powi(((m + 1) / 2) as i32) * g * sin
            };
        }
    }
    Some(total)
}

fn bernoulli4(t: f64) -> f64 {
    t * t * (t * t - 2.0 * t + 1.0) - 1.0 / 30.0
}

fn bernoulli5(t: f64) -> f64 {
    t * (t * t * (t * t - 2.5 * t + 5.0 / 3.0) - 1.0 / 6.0)
}

/// Interpolant through the nodes `-2, -1, 0, 1, 2, 3`.
struct Quintic([f64; 6]);

impl Quintic {
    fn interpolate(values: &[f64; 6]) -> Self {
        let nodes = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        let mut coef = [0.0; 6];
        for i in 0..6 {
            // expand Π_{m≠i} (t - x_m) / (x_i - x_m)
            let mut basis = [0.0; 6];
            basis[0] = 1.0;
            let mut degree = 0;
            let mut denom = 1.0;
            for (m, &xm) in nodes.iter().enumerate() {
                if m == i {
                    continue;
                }
                for d in (0..=degree).rev() {
                    basis[d + 1] += basis[d];
                    basis[d] *= -xm;
                }
                degree += 1;
                denom *= nodes[i] - xm;
            }
            for d in 0..6 {
                coef[d] += values[i] * basis[d] / denom;
            }
        }
        Self(coef)
    }

    fn value(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    fn derivative(&self, t: f64) -> f64 {
        (1..6).rev().fold(0.0, |acc, d| acc * t + d as f64 * self.0[d])
    }

    fn second_derivative(&self, t: f64) -> f64 {
        (2..6).rev().fold(0.0, |acc, d| acc * t + (d * (d - 1)) as f64 * self.0[d])
    }

    fn complex_value(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    fn complex_derivative(&self, z: Complex64) -> Complex64 {
        (1..6).rev().fold(Complex64::new(0.0, 0.0), |acc, d| acc * z + d as f64 * self.0[d])
    }

    /// Coefficients of the same polynomial in powers of `t - t0`.
    fn taylor_at(&self, t0: f64) -> [f64; 6] {
        let mut c = self.0;
        for i in 0..6 {
            for j in (i..5).rev() {
                c[j] += t0 * c[j + 1];
            }
        }
        c
    }

    /// Minimizer on `[-1, 1]` by safeguarded Newton on the derivative.
    fn local_min(&self) -> f64 {
        let mut t: f64 = 0.0;
        for _ in 0..50 {
            let d2 = self.second_derivative(t);
            if d2 <= 0.0 {
                break;
            }
            let next = (t - self.derivative(t) / d2).clamp(-1.0, 1.0);
            let done = (next - t).abs() <= 1e-15;
            t = next;
            if done {
                break;
            }
        }
        t
    }

    /// Root in `[0, 1]` from end values of opposite sign: Newton from the
    /// secant guess, falling back to bisection when a step leaves the bracket.
    fn root_in_unit(&self, at0: f64, at1: f64) -> f64 {
        // `neg` is the end where the polynomial is negative
        let (mut neg, mut pos) = if at0 < 0.0 { (0.0, 1.0) } else { (1.0, 0.0) };
        let mut t = at0 / (at0 - at1);
        for _ in 0..60 {
            let v = self.value(t);
            if v == 0.0 {
                break;
            }
            if v < 0.0 {
                neg = t;
            } else {
                pos = t;
            }
            let d = self.derivative(t);
            let newton = t - v / d;
            let (a, b) = if neg < pos { (neg, pos) } else { (pos, neg) };
            let next = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
            let done = (next - t).abs() <= 1e-15;
            t = next;
            if done {
                break;
            }
        }
        t
    }
}

const LUXEMBURG_RTOL: f64 = 1e-12;
const LUXEMBURG_MAX_EVALS: usize = 200;

/// Luxemburg norm `inf{k > 0 : ∫A(|u|/k) <= 1}`.
///
/// `k ↦ ∫A(|u|/k)` is continuous and strictly decreasing for `u ≠ 0`, so the
/// Newton steps on it are safeguarded by the bracket that the evaluations
/// build up, with bisection as the fallback.
pub fn luxemburg_norm(field: &Field) -> f64 {
    let quad = Modular::new(field);
    if quad.is_zero() {
        return 0.0;
    }
    // Newton from the L² norm; every evaluation tightens a bracket, and steps
    // are limited to a factor of two and fall back to bisection outside it
    let mut k = (quad.moduli.iter().map(|s| s * s).sum::<f64>() * quad.cell_volume).sqrt();
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..LUXEMBURG_MAX_EVALS {
        let (m, slope) = quad.eval_with_slope(1.0 / k);
        if m > 1.0 {
            lo = k;
        } else {
            hi = k;
        }
        if hi.is_finite() && hi - lo <= LUXEMBURG_RTOL * hi {
            return 0.5 * (lo + hi);
        }
        let step = (m - 1.0) * k / slope;
        if step.abs() <= 0.1 * LUXEMBURG_RTOL * k {
            return k;
        }
        let mut next = (k + step).clamp(0.5 * k, 2.0 * k);
        if !(next > lo && next < hi) {
            next = if hi.is_infinite() {
                2.0 * k
            } else if lo == 0.0 {
                0.5 * k
            } else {
                0.5 * (lo + hi)
            };
        }
        k = next;
    }
    k
}

/// `‖u‖_{H¹} = sqrt(‖u‖² + ‖∇u‖²)`.
pub fn h1_norm(field: &Field) -> f64 {
    (charge(field) + kinetic(field)).sqrt()
}

/// `‖u‖_W = ‖u‖_{H¹} + ‖u‖_{L^A}`.
pub fn w_norm(field: &Field) -> f64 {
    h1_norm(field) + luxemburg_norm(field)
}

/// Right side minus left side of the logarithmic Sobolev inequality,
///
/// ```text
/// (α²/π) K + (log Q - N(1 + log α)) Q - H  >= 0.
/// ```
pub fn log_sobolev_gap(field: &Field, alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let q = charge(field);
    if q == 0.0 {
        return Err(Error::ZeroField("log_sobolev_gap"));
    }
    let n = field.grid().dim() as f64;
    let k = kinetic(field);
    let h = entropy_term(field);
    Ok(alpha * alpha / std::f64::consts::PI * k + (q.ln() - n * (1.0 + alpha.ln())) * q - h)
}

/// Scale `u` by `ρ = exp(I_ω(u) / (2‖u‖²))`, which lands exactly on the
/// Nehari manifold because `I_ω(λu) = λ²(I_ω(u) - log(λ²)‖u‖²)`.
pub fn nehari_rescale(field: &Field, omega: f64) -> Result<Field> {
    let q = charge(field);
    if q == 0.0 {
        return Err(Error::ZeroField("nehari_rescale"));
    }
    let rho = (nehari(field, omega) / (2.0 * q)).exp();
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Nehari scale factor out of range ({rho:e})"
        )));
    }
    let out = field.scaled(Complex64::new(rho, 0.0));
    if !out.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(out)
}

/// Every scalar functional of one field at one frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub omega: f64,
    pub charge: f64,
    pub kinetic: f64,
    pub entropy: f64,
    pub energy: f64,
    pub action: f64,
    pub nehari: f64,
    pub luxemburg: f64,
    pub h1_norm: f64,
    pub w_norm: f64,
}

impl FunctionalReport {
    pub const CSV_HEADER: &'static str =
        "omega,charge,kinetic,entropy,energy,action,nehari,luxemburg,h1_norm,w_norm";

    pub fn compute(field: &Field, omega: f64) -> Self {
        let charge = charge(field);
        let kinetic = kinetic(field);
        let entropy = entropy_term(field);
        let energy = 0.5 * kinetic - 0.5 * entropy;
        let luxemburg = luxemburg_norm(field);
        let h1_norm = (charge + kinetic).sqrt();
        Self {
            omega,
            charge,
            kinetic,
            entropy,
            energy,
            action: energy + 0.5 * (omega + 1.0) * charge,
            nehari: kinetic + omega * charge - entropy,
            luxemburg,
            h1_norm,
            w_norm: h1_norm + luxemburg,
        }
    }

    pub fn to_csv_row(&self) -> String {
        [
            self.omega,
            self.charge,
            self.kinetic,
            self.entropy,
            self.energy,
            self.action,
            self.nehari,
            self.luxemburg,
            self.h1_norm,
            self.w_norm,
        ]
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, shift_field, Grid};
    use crate::sampling::random_bulk_field;
    use std::f64::consts::{E, PI};

    fn gausson(grid: &Grid, omega: f64) -> Field {
        let n = grid.dim() as f64;
        Field::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            Complex64::new(((omega + n) / 2.0 - r2 / 2.0).exp(), 0.0)
        })
        .unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn seam_constant() {
        assert_eq!(A_SEAM, (-3.0f64).exp());
        assert_eq!(E_MINUS_6, (-6.0f64).exp());
    }

    #[test]
    fn charge_examples() {
        let g1 = make_grid(1, 12.0, 256).unwrap();
        assert!(close(charge(&gausson(&g1, 0.0)), PI.sqrt() * E, 1e-8));
        assert_eq!(charge(&Field::zeros(&g1)), 0.0);
        let g2 = make_grid(2, 10.0, 128).unwrap();
        assert!(close(charge(&gausson(&g2, 0.0)), PI * E * E, 1e-8));
    }

    #[test]
    fn entropy_examples() {
        let g = make_grid(1, 12.0, 256).unwrap();
        assert!(close(entropy_term(&gausson(&g, 0.0)), E * PI.sqrt() / 2.0, 1e-8));
        assert_eq!(entropy_term(&Field::constant(&g, Complex64::new(0.6, 0.8))), 0.0);

        // entropy(αu) = |α|² entropy(u) + |α|² log|α|² charge(u)
        let u = random_bulk_field(&g, 5, 2.0, 2.5);
        let alpha: f64 = 2.0;
        let lhs = entropy_term(&u.scaled(Complex64::new(alpha, 0.0)));
        let rhs = alpha * alpha * entropy_term(&u) + alpha * alpha * (alpha * alpha).ln() * charge(&u);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn energy_examples() {
        let g = make_grid(1, 12.0, 256).unwrap();
        assert!(energy(&gausson(&g, 0.0)).abs() < 1e-8);
        assert!(close(energy(&gausson(&g, 1.0)), -0.5 * PI.sqrt() * E * E, 1e-7));
        assert_eq!(energy(&Field::zeros(&g)), 0.0);
        let g2 = make_grid(2, 10.0, 128).unwrap();
        assert!(energy(&gausson(&g2, 0.0)).abs() < 1e-8);
    }

    #[test]
    fn action_and_nehari_on_gausson() {
        for (dim, l, m) in [(1, 12.0, 256), (2, 10.0, 128)] {
            let g = make_grid(dim, l, m).unwrap();
            for omega in [-1.0, 0.0, 1.0] {
                let phi = gausson(&g, omega);
                let q = charge(&phi);
                assert!(nehari(&phi, omega).abs() <= 1e-7 * q);
                let d = 0.5 * PI.powf(dim as f64 / 2.0) * (omega + dim as f64).exp();
                assert!((action(&phi, omega) - d).abs() <= 1e-8 * d);
            }
        }
    }

    #[test]
    fn action_minus_half_nehari_is_half_charge() {
        let g = make_grid(1, 12.0, 128).unwrap();
        for seed in 0..50u64 {
            let u = random_bulk_field(&g, seed, 3.0, 2.0).scaled(Complex64::new(1.0 + seed as f64 * 0.1, 0.0));
            let omega = seed as f64 * 0.07 - 1.5;
            let lhs = action(&u, omega) - 0.5 * nehari(&u, omega);
            let rhs = 0.5 * charge(&u);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "seed {seed}");
        }
    }

    #[test]
    fn a_and_b_pointwise_examples() {
        let s = (-3.0f64).exp();
        let expect = 6.0 * (-6.0f64).exp();
        assert!(close(a_pointwise(s).unwrap(), expect, 1e-17));
        assert!(close(expect, 0.014_872_513, 1e-9));
        assert_eq!(a_pointwise(0.0).unwrap(), 0.0);
        assert_eq!(b_pointwise(0.0).unwrap(), 0.0);
        let b1 = 3.0 + 4.0 * (-3.0f64).exp() - (-6.0f64).exp();
        assert!(close(b_pointwise(1.0).unwrap(), b1, 1e-15));
        assert!(close(b1, 3.196_669_521, 1e-9));
        assert!(a_pointwise(-1e-3).is_err());
        assert!(b_pointwise(f64::NAN).is_err());
    }

    #[test]
    fn a_is_c1_at_seam() {
        let ((lv, ld), (rv, rd)) = a_seam_branches();
        let v = 6.0 * (-6.0f64).exp();
        let d = 10.0 * (-3.0f64).exp();
        for x in [lv, rv] {
            assert!((x - v).abs() <= 1e-15);
        }
        for x in [ld, rd] {
            assert!((x - d).abs() <= 1e-15);
        }
    }

    /// `‖φ₀‖_{L^A}` in two dimensions (mpmath, radial quadrature).
    const K2_STAR: f64 = 9.879_516_641_293_941_6;

    #[test]
    fn modular_is_shift_invariant_across_near_zeros() {
        // |u| dips to 4e-4 at x = 0.3 over a width far below the spacing, and crosses the seam
        let g = make_grid(1, 12.0, 256).unwrap();
        let u = Field::from_fn(&g, |x| {
            Complex64::new(0.05 * (x[0] - 0.3), 4e-4) * (-x[0] * x[0] / 4.0).exp()
        })
        .unwrap();
        let h = g.spacing();
        let m0 = orlicz_modular(&u);
        let k0 = luxemburg_norm(&u);
        for f in [0.13, 0.5, 0.81] {
            let v = shift_field(&u, &[f * h]).unwrap();
            assert!((orlicz_modular(&v) - m0).abs() <= 1e-12 * m0, "{f}");
            assert!((luxemburg_norm(&v) - k0).abs() <= 1e-11 * k0, "{f} {} {}", luxemburg_norm(&v), k0);
        }
    }

    #[test]
    fn luxemburg_examples() {
        let g = make_grid(1, 12.0, 256).unwrap();
        assert_eq!(luxemburg_norm(&Field::zeros(&g)), 0.0);
        let u = random_bulk_field(&g, 9, 2.0, 2.0);
        let a = luxemburg_norm(&u);
        let b = luxemburg_norm(&u.scaled(Complex64::new(3.0, 0.0)));
        assert!((b - 3.0 * a).abs() <= 1e-10 * b);

        // Independent oracle (mpmath adaptive quadrature + root find on ℝ).
        let k_star = 4.203_120_270_037_837_3;
        let phi = gausson(&g, 0.0);
        let k = luxemburg_norm(&phi);
        assert!((k - k_star).abs() <= 1e-10 * k_star, "{k}");
        let modular = orlicz_modular(&phi.scaled(Complex64::new(1.0 / k, 0.0)));
        assert!((modular - 1.0).abs() <= 1e-10);

        // sub-cell translates see the same norm
        let moved = crate::grid::shift_field(&phi, &[0.37]).unwrap();
        assert!((luxemburg_norm(&moved) - k).abs() <= 1e-11 * k);

        let g2 = make_grid(2, 10.0, 128).unwrap();
        let k2 = luxemburg_norm(&gausson(&g2, 0.0));
        assert!((k2 - K2_STAR).abs() <= 1e-10 * K2_STAR, "{k2}");
    }

    #[test]
    fn w_norm_examples() {
        let g = make_grid(1, 12.0, 256).unwrap();
        assert_eq!(w_norm(&Field::zeros(&g)), 0.0);
        let phi = gausson(&g, 0.0);
        let h1 = (PI.sqrt() * E + E * PI.sqrt() / 2.0).sqrt();
        assert!((h1_norm(&phi) - h1).abs() < 1e-9);
        let expect = h1 + 4.203_120_270_037_837_3;
        assert!((w_norm(&phi) - expect).abs() < 1e-9);
        let u = random_bulk_field(&g, 1, 3.0, 2.0);
        assert!(w_norm(&u) >= h1_norm(&u));
    }

    #[test]
    fn log_sobolev_equality_cases() {
        let g = make_grid(1, 12.0, 256).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::new((-PI * x[0] * x[0] / 2.0).exp(), 0.0)).unwrap();
        assert!(log_sobolev_gap(&f, 1.0).unwrap().abs() < 1e-9);
        let phi = gausson(&g, 0.0);
        assert!(log_sobolev_gap(&phi, PI.sqrt()).unwrap().abs() < 1e-9);
        assert!(log_sobolev_gap(&Field::zeros(&g), 1.0).is_err());
        assert!(log_sobolev_gap(&phi, 0.0).is_err());
    }

    #[test]
    fn nehari_rescale_examples() {
        let g = make_grid(1, 12.0, 256).unwrap();
        for omega in [-1.0, 0.0, 1.0] {
            let phi = gausson(&g, omega);
            let same = nehari_rescale(&phi, omega).unwrap();
            assert!(same.sub(&phi).unwrap().max_abs() <= 1e-7 * phi.max_abs());
            for lambda in [0.5, 2.0, 5.0] {
                let back = nehari_rescale(&phi.scaled(Complex64::new(lambda, 0.0)), omega).unwrap();
                let err = back.sub(&phi).unwrap().max_abs();
                assert!(err <= 1e-12 * phi.max_abs().max(1.0) * 10.0, "λ={lambda}: {err}");
            }
        }
        assert!(nehari_rescale(&Field::zeros(&g), 0.0).is_err());
    }

    #[test]
    fn report_identities() {
        let g = make_grid(1, 12.0, 128).unwrap();
        let u = random_bulk_field(&g, 4, 2.0, 2.0);
        let r = FunctionalReport::compute(&u, 0.3);
        let scale = r.charge.max(r.kinetic).max(r.entropy.abs());
        assert!((r.energy - (0.5 * r.kinetic - 0.5 * r.entropy)).abs() <= 1e-12 * scale);
        assert!((r.action - r.energy - 0.65 * r.charge).abs() <= 1e-12 * scale);
        assert!((r.nehari - (r.kinetic + 0.3 * r.charge - r.entropy)).abs() <= 1e-12 * scale);
        assert!((r.action - 0.5 * r.nehari - 0.5 * r.charge).abs() <= 1e-12 * scale);
        assert!((r.w_norm - r.h1_norm - r.luxemburg).abs() <= 1e-12 * r.w_norm);
        assert_eq!(r.to_csv_row().split(',').count(), 10);
        assert_eq!(FunctionalReport::CSV_HEADER.split(',').count(), 10);
        let json = serde_json::to_value(&r).unwrap();
        let keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 10);
    }
}

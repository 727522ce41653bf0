//! Periodic tensor grids on `[-L, L)^N` and complex fields sampled on them.
//!
//! Every integral over space is a rectangle rule on the torus, and every
//! derivative is spectral. The forward transform is unnormalized and the
//! inverse divides by `M^N`; the Parseval constant needed by [`kinetic`] is
//! folded in there.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Uniform periodic grid. Cloning is cheap: the transform plans and the
/// wavenumber tables are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    half_width: f64,
    points: usize,
    spacing: f64,
    len: usize,
    /// Per-axis wavenumbers in transform order.
    wavenumbers: Vec<f64>,
    /// |k|^2 for every site of the transformed array.
    k_squared: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim())
            .field("half_width", &self.half_width())
            .field("points", &self.points())
            .field("spacing", &self.spacing())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.dim() == other.dim()
                && self.points() == other.points()
                && self.half_width() == other.half_width())
    }
}

/// Integer frequencies `m` in transform order: `0, 1, …, M/2-1, -M/2, …, -1`.
pub fn frequencies(points: usize) -> Vec<i64> {
    let m = points as i64;
    (0..m).map(|j| if j < m / 2 { j } else { j - m }).collect()
}

/// Build a grid. Same as [`Grid::new`].
pub fn make_grid(dim: usize, half_width: f64, points: usize) -> Result<Grid> {
    Grid::new(dim, half_width, points)
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} outside 1..=3")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 16, got {points}"
            )));
        }
        let len = points
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::InvalidGrid("grid too large".into()))?;

        let base = std::f64::consts::PI / half_width;
        let wavenumbers: Vec<f64> = frequencies(points).into_iter().map(|m| base * m as f64).collect();
        let k_squared = (0..len)
            .map(|flat| {
                let mut rest = flat;
                let mut acc = 0.0;
                for _ in 0..dim {
                    let k = wavenumbers[rest % points];
                    acc += k * k;
                    rest /= points;
                }
                acc
            })
            .collect();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);

        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                half_width,
                points,
                spacing: 2.0 * half_width / points as f64,
                len,
                wavenumbers,
                k_squared,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    pub fn points(&self) -> usize {
        self.inner.points
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Number of sample sites, `M^N`.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim() as i32)
    }

    /// Per-axis wavenumbers `(π/L)·m` in transform order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// `|k|^2` at every site of the transformed array.
    pub fn k_squared(&self) -> &[f64] {
        &self.inner.k_squared
    }

    /// Coordinate of index `j` along any axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width() + self.spacing() * j as f64
    }

    /// Per-axis indices of a flat (row-major) index. Entries past `dim` are zero.
    pub fn unravel(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut rest = flat;
        for axis in (0..self.dim()).rev() {
            idx[axis] = rest % self.points();
            rest /= self.points();
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.dim()).fold(0, |acc, &i| acc * self.points() + i)
    }

    /// Position of a site. Entries past `dim` are zero.
    pub fn position(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.unravel(flat);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    /// Per-axis wavenumbers of a site of the transformed array.
    pub fn wavevector(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.unravel(flat);
        let mut k = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            k[axis] = self.inner.wavenumbers[idx[axis]];
        }
        k
    }

    /// Wrap a displacement into `[-L, L)` (minimum image on the torus).
    pub fn wrap(&self, d: f64) -> f64 {
        let period = 2.0 * self.half_width();
        let w = d - period * ((d + self.half_width()) / period).floor();
        if w >= self.half_width() {
            w - period
        } else {
            w
        }
    }

    /// Rectangle rule `h^N Σ samples`.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        self.check_len(samples.len())?;
        Ok(self.cell_volume() * samples.iter().sum::<f64>())
    }

    pub(crate) fn check_len(&self, actual: usize) -> Result<()> {
        if actual != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                actual,
            });
        }
        Ok(())
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.forward);
    }

    /// Inverse transform including the `1/M^N` factor, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.inverse);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        let m = self.points();
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut lines: Vec<Complex64> = Vec::new();
        for axis in 0..self.dim() {
            let stride = m.pow((self.dim() - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            // Gather every line along `axis` contiguously, transform, scatter back.
            lines.resize(data.len(), Complex64::new(0.0, 0.0));
            let block = m * stride;
            let mut line = 0;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    let dst = &mut lines[line * m..(line + 1) * m];
                    for (j, d) in dst.iter_mut().enumerate() {
                        *d = data[base + j * stride];
                    }
                    line += 1;
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            let mut line = 0;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    let src = &lines[line * m..(line + 1) * m];
                    for (j, s) in src.iter().enumerate() {
                        data[base + j * stride] = *s;
                    }
                    line += 1;
                }
            }
        }
    }

    /// Multiply the spectrum of `values` by `multiplier(flat_index)` and transform back.
    pub fn apply_spectral<F>(&self, values: &mut [Complex64], multiplier: F)
    where
        F: Fn(usize) -> Complex64,
    {
        self.forward(values);
        values.iter_mut().enumerate().for_each(|(i, v)| *v *= multiplier(i));
        self.inverse(values);
    }
}

/// Complex samples on a [`Grid`], row-major with axis 0 slowest.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Trusted constructor for values produced by this crate's own kernels.
    pub(crate) fn from_parts(grid: &Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_parts(grid, vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    pub fn constant(grid: &Grid, value: Complex64) -> Self {
        Self::from_parts(grid, vec![value; grid.len()])
    }

    /// Sample `f` at every site. `f` receives the first `dim` coordinates.
    pub fn from_fn<F>(grid: &Grid, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.position(i);
                f(&x[..dim])
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `|u|^2` at every site.
    pub fn modulus_sq(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self::from_parts(&self.grid, self.values.iter().map(|v| v * alpha).collect())
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64,
    {
        Self::from_parts(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn add(&self, other: &Field) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with<F>(&self, other: &Field, f: F) -> Result<Self>
    where
        F: Fn(Complex64, Complex64) -> Complex64,
    {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("fields live on different grids".into()));
        }
        Ok(Self::from_parts(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub(crate) fn map_indexed<F>(&self, f: F) -> Field
    where
        F: Fn(usize, Complex64) -> Complex64,
    {
        let values = self.values().iter().enumerate().map(|(i, &v)| f(i, v)).collect();
        Field::from_parts(self.grid(), values)
    }

    pub(crate) fn zip_map<F>(&self, other: &Field, f: F) -> Field
    where
        F: Fn(Complex64, Complex64) -> Complex64,
    {
        let values = self.values().iter().zip(other.values()).map(|(&a, &b)| f(a, b)).collect();
        Field::from_parts(self.grid(), values)
    }

    /// Real inner product `Re ∫ conj(self)·other`.
    pub fn real_inner(&self, other: &Field) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        s * self.grid.cell_volume()
    }

    /// Complex inner product `∫ conj(self)·other`.
    pub fn inner(&self, other: &Field) -> Complex64 {
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        s * self.grid.cell_volume()
    }

    /// `‖u‖_{L²}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `h^N Σ samples`.
pub fn integrate(grid: &Grid, samples: &[f64]) -> Result<f64> {
    grid.integrate(samples)
}

/// Unhalved Dirichlet integral `∫|∇u|²`, evaluated spectrally.
pub fn kinetic(field: &Field) -> f64 {
    let grid = field.grid();
    let mut spec = field.values().to_vec();
    grid.forward(&mut spec);
    let s: f64 = spec
        .iter()
        .zip(grid.k_squared())
        .map(|(v, k2)| k2 * v.norm_sqr())
        .sum();
    // Parseval with an unnormalized forward transform.
    s * grid.cell_volume() / grid.len() as f64
}

/// Spectral Laplacian: multiply the transform by `-|k|²`.
pub fn laplacian(field: &Field) -> Field {
    let grid = field.grid();
    let k2 = grid.k_squared();
    let mut values = field.values().to_vec();
    grid.apply_spectral(&mut values, |i| Complex64::new(-k2[i], 0.0));
    Field::from_parts(grid, values)
}

/// The grid with `factor` times as many points per axis, shared between calls.
fn finer_grid(grid: &Grid, factor: usize) -> Result<Grid> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64, usize), Grid>>> = OnceLock::new();
    let key = (grid.dim(), grid.half_width().to_bits(), grid.points() * factor);
    let mut cache = CACHE.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    if let Some(g) = cache.get(&key) {
        return Ok(g.clone());
    }
    let g = Grid::new(key.0, grid.half_width(), key.2)?;
    cache.insert(key, g.clone());
    Ok(g)
}

/// The trigonometric interpolant of `field` sampled `factor` times more
/// densely per axis. The Nyquist coefficient is split evenly between `±M/2`.
pub fn refine_field(field: &Field, factor: usize) -> Result<Field> {
    if factor == 1 {
        return Ok(field.clone());
    }
    if !factor.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("refinement factor {factor} is not a power of two")));
    }
    let grid = field.grid();
    let fine = finer_grid(grid, factor)?;
    let (m, mf, dim) = (grid.points(), fine.points(), grid.dim());
    let freqs = frequencies(m);
    let mut spec = field.values().to_vec();
    grid.forward(&mut spec);
    let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
    for (flat, v) in spec.iter().enumerate() {
        let idx = grid.unravel(flat);
        let nyquist: Vec<usize> = (0..dim).filter(|&a| freqs[idx[a]] == -(m as i64) / 2).collect();
        let weight = 0.5f64.powi(nyquist.len() as i32);
        for mirror in 0..1usize << nyquist.len() {
            let mut target = 0;
            for axis in 0..dim {
                let mut f = freqs[idx[axis]];
                if let Some(bit) = nyquist.iter().position(|&a| a == axis) {
                    if mirror >> bit & 1 == 1 {
                        f = -f;
                    }
                }
                target = target * mf + f.rem_euclid(mf as i64) as usize;
            }
            out[target] += v * weight;
        }
    }
    // undo the 1/M^N of the coarse inverse in favour of 1/(rM)^N
    fine.inverse(&mut out);
    let scale = fine.len() as f64 / grid.len() as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(Field::from_parts(&fine, out))
}

/// Sample `u(· - offset)` on the torus.
///
/// Whole cells are an index rotation; the sub-cell remainder is a spectral
/// phase ramp `e^{-i k·f}`.
pub fn shift_field(field: &Field, offset: &[f64]) -> Result<Field> {
    let grid = field.grid();
    if offset.len() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            actual: offset.len(),
        });
    }
    if offset.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidArgument("shift offset must be finite".into()));
    }
    let h = grid.spacing();
    let m = grid.points() as i64;
    let mut cells = [0i64; MAX_DIM];
    let mut frac = [0.0; MAX_DIM];
    for (axis, &y) in offset.iter().enumerate() {
        let n = (y / h).round();
        cells[axis] = n as i64;
        frac[axis] = y - n * h;
    }

    let src = field.values();
    let mut values = if cells.iter().all(|&c| c == 0) {
        src.to_vec()
    } else {
        let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
        for (flat, v) in out.iter_mut().enumerate() {
            let idx = grid.unravel(flat);
            let mut from = [0usize; MAX_DIM];
            for axis in 0..grid.dim() {
                from[axis] = (idx[axis] as i64 - cells[axis]).rem_euclid(m) as usize;
            }
            *v = src[grid.ravel(&from[..grid.dim()])];
        }
        out
    };

    if frac.iter().any(|&f| f != 0.0) {
        grid.apply_spectral(&mut values, |i| {
            let k = grid.wavevector(i);
            let phase: f64 = k.iter().zip(&frac).map(|(k, f)| k * f).sum();
            Complex64::from_polar(1.0, -phase)
        });
    }
    Ok(Field::from_parts(grid, values))
}

/// Fraction of the charge sitting within `width` of the box boundary along any axis.
pub fn boundary_mass_fraction(field: &Field, width: f64) -> f64 {
    let grid = field.grid();
    let edge = grid.half_width() - width;
    let mut near = 0.0;
    let mut total = 0.0;
    for (i, v) in field.values().iter().enumerate() {
        let m2 = v.norm_sqr();
        total += m2;
        let x = grid.position(i);
        if x[..grid.dim()].iter().any(|c| c.abs() >= edge) {
            near += m2;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        near / total
    }
}

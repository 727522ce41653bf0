//! Seeded random fields used by initializers, perturbations and property sweeps.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Field, Grid};

/// Portable, seedable generator used everywhere in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex noise containing only modes with `|k| <= band_limit`, scaled to unit peak modulus.
/// The zero mode is always present, so the result is never identically zero.
pub fn band_limited_noise<R: Rng>(grid: &Grid, rng: &mut R, band_limit: f64) -> Field {
    let k2 = grid.k_squared();
    let cutoff = band_limit * band_limit;
    let mut spec: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            // Draw for every mode so the stream does not depend on the cutoff.
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            if k2[i] <= cutoff {
                Complex64::new(re, im)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    if spec[0].norm() == 0.0 {
        spec[0] = Complex64::new(1.0, 0.0);
    }
    grid.inverse(&mut spec);
    let peak = spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
    spec.iter_mut().for_each(|v| *v /= peak);
    Field::from_parts(grid, spec)
}

/// Gaussian envelope of the given width centred at `center`.
pub fn gaussian_envelope(grid: &Grid, center: &[f64], widths: &[f64]) -> Field {
    let dim = grid.dim();
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            let q: f64 = (0..dim)
                .map(|a| {
                    let d = grid.wrap(x[a] - center.get(a).copied().unwrap_or(0.0));
                    let w = widths.get(a).copied().unwrap_or(widths[0]);
                    d * d / (w * w)
                })
                .sum();
            Complex64::new((-0.5 * q).exp(), 0.0)
        })
        .collect();
    Field::from_parts(grid, values)
}

/// Smooth random complex field concentrated in the bulk: a centred Gaussian
/// envelope of width `width` times band-limited noise.
pub fn random_bulk_field(grid: &Grid, seed: u64, band_limit: f64, width: f64) -> Field {
    let mut rng = rng_from_seed(seed);
    let noise = band_limited_noise(grid, &mut rng, band_limit);
    let env = gaussian_envelope(grid, &vec![0.0; grid.dim()], &[width]);
    let values = noise.values().iter().zip(env.values()).map(|(n, e)| n * e).collect();
    Field::from_parts(grid, values)
}

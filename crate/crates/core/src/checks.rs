//! Property suites over seeded random fields: the logarithmic Sobolev
//! inequality, the Orlicz/Luxemburg relations, the `C¹` seam of `A`, the
//! Nehari rescaling identity and the Brézis–Lieb translate sequence.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functionals::{
    charge, log_sobolev_gap, luxemburg_norm, nehari, nehari_rescale, orlicz_modular, seam_branches_with, A_SEAM,
};
use crate::gausson::{gausson_field, GaussonParams};
use crate::grid::{make_grid, Field, Grid};
use crate::sampling::{rng_from_seed, random_bulk_field};
use crate::stability::brezis_lieb_demo;

pub const LOG_SOBOLEV_ALPHAS: [f64; 4] = [0.5, 1.0, 1.772_453_850_905_516, 3.0];
pub const LOG_SOBOLEV_SLACK: f64 = 1e-9;
pub const LOG_SOBOLEV_EQUALITY_TOL: f64 = 1e-8;
pub const SEAM_TOL: f64 = 1e-15;
pub const HOMOGENEITY_TOL: f64 = 1e-10;
pub const NEHARI_TOL: f64 = 1e-10;
pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const BREZIS_LIEB_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksOptions {
    pub seed: u64,
    /// Random fields per suite.
    pub samples: usize,
    /// Perturb the seam constant of `A` by one part in 10⁶ (harness self-test).
    pub inject_seam_fault: bool,
}

impl Default for ChecksOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 100,
            inject_seam_fault: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChecksReport {
    pub seed: u64,
    pub samples: usize,
    pub rows: Vec<CheckRow>,
}

impl ChecksReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn row(&self, name: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,passed,worst,tolerance,cases\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:e},{:e},{}\n", r.name, r.passed, r.worst, r.tolerance, r.cases));
        }
        out
    }
}

impl fmt::Display for ChecksReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:<6} {:>12} {:>10} {:>6}  detail", "check", "result", "worst", "tol", "cases")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<24} {:<6} {:>12.3e} {:>10.1e} {:>6}  {}",
                r.name,
                if r.passed { "PASS" } else { "FAIL" },
                r.worst,
                r.tolerance,
                r.cases,
                r.detail
            )?;
        }
        Ok(())
    }
}

/// A seeded random field: alternating 1-D and 2-D grids, random band limit,
/// envelope width and overall amplitude (spanning `10^{±1}`).
struct FieldSampler {
    grids: [Grid; 2],
    rng: rand_chacha::ChaCha8Rng,
}

impl FieldSampler {
    fn new(seed: u64) -> Result<Self> {
        Ok(Self {
            grids: [make_grid(1, 12.0, 256)?, make_grid(2, 10.0, 64)?],
            rng: rng_from_seed(seed),
        })
    }

    fn sample(&mut self, i: usize) -> Field {
        let grid = &self.grids[i % 2];
        let band = self.rng.random_range(1.0..4.0);
        let width = self.rng.random_range(1.0..2.5);
        let amp = 10f64.powf(self.rng.random_range(-1.0..1.0));
        let field_seed: u64 = self.rng.random();
        random_bulk_field(grid, field_seed, band, width).scaled(Complex64::new(amp, 0.0))
    }
}

pub fn run_checks(opts: &ChecksOptions) -> Result<ChecksReport> {
    let rows = vec![
        log_sobolev_sweep(opts)?,
        log_sobolev_equality()?,
        a_seam(opts.inject_seam_fault),
        luxemburg_sandwich(opts)?,
        luxemburg_homogeneity(opts)?,
        nehari_projection(opts)?,
        nehari_fixed_point()?,
        brezis_lieb()?,
    ];
    Ok(ChecksReport {
        seed: opts.seed,
        samples: opts.samples,
        rows,
    })
}

fn row(name: &str, passed: bool, worst: f64, tolerance: f64, cases: usize, detail: impl Into<String>) -> CheckRow {
    CheckRow {
        name: name.into(),
        passed,
        worst,
        tolerance,
        cases,
        detail: detail.into(),
    }
}

/// Smallest gap over the sweep; must stay above `-LOG_SOBOLEV_SLACK`.
pub fn log_sobolev_sweep(opts: &ChecksOptions) -> Result<CheckRow> {
    let mut sampler = FieldSampler::new(opts.seed)?;
    let mut worst = f64::INFINITY;
    for i in 0..opts.samples {
        let u = sampler.sample(i);
        for alpha in LOG_SOBOLEV_ALPHAS {
            worst = worst.min(log_sobolev_gap(&u, alpha)?);
        }
    }
    Ok(row(
        "log_sobolev_sweep",
        worst >= -LOG_SOBOLEV_SLACK,
        worst,
        LOG_SOBOLEV_SLACK,
        opts.samples * LOG_SOBOLEV_ALPHAS.len(),
        "min gap over fields × α",
    ))
}

/// `|gap|` on the Gaussians `c·exp(-π|x|²/(2α²))` that attain equality.
pub fn log_sobolev_equality() -> Result<CheckRow> {
    let grid = make_grid(1, 12.0, 256)?;
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for alpha in LOG_SOBOLEV_ALPHAS {
        for amp in [0.3, 1.0, 4.0] {
            let f = Field::from_fn(&grid, |x| {
                Complex64::new(amp * (-PI * x[0] * x[0] / (2.0 * alpha * alpha)).exp(), 0.0)
            })?;
            worst = worst.max(log_sobolev_gap(&f, alpha)?.abs());
            cases += 1;
        }
    }
    Ok(row(
        "log_sobolev_equality",
        worst <= LOG_SOBOLEV_EQUALITY_TOL,
        worst,
        LOG_SOBOLEV_EQUALITY_TOL,
        cases,
        "max |gap| on matched Gaussians",
    ))
}

/// Both branches of `A` must give `6e^{-6}` and slope `10e^{-3}` at `e^{-3}`.
pub fn a_seam(inject_fault: bool) -> CheckRow {
    let c = if inject_fault { A_SEAM * (1.0 + 1e-6) } else { A_SEAM };
    let ((lv, ld), (rv, rd)) = seam_branches_with(c);
    let value = 6.0 * (-6.0f64).exp();
    let slope = 10.0 * (-3.0f64).exp();
    let worst = [lv - value, rv - value, ld - slope, rd - slope]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
    row(
        "a_seam",
        worst <= SEAM_TOL,
        worst,
        SEAM_TOL,
        4,
        if inject_fault { "FAULT INJECTED" } else { "branch values and slopes" },
    )
}

/// `min(k, k²) <= ∫A(|u|) <= max(k, k²)` with `k` the Luxemburg norm.
pub fn luxemburg_sandwich(opts: &ChecksOptions) -> Result<CheckRow> {
    let mut sampler = FieldSampler::new(opts.seed.wrapping_add(1))?;
    // positive = violation, relative to the bound
    let mut worst = f64::NEG_INFINITY;
    for i in 0..opts.samples {
        let u = sampler.sample(i);
        let k = luxemburg_norm(&u);
        let m = orlicz_modular(&u);
        let (lo, hi) = (k.min(k * k), k.max(k * k));
        worst = worst.max((lo - m) / lo).max((m - hi) / hi);
    }
    // the bisection leaves k accurate to ~1e-12 relative
    let tol = 1e-10;
    Ok(row(
        "luxemburg_sandwich",
        worst <= tol,
        worst,
        tol,
        opts.samples,
        "max relative violation of min(k,k²) <= ∫A <= max(k,k²)",
    ))
}

pub fn luxemburg_homogeneity(opts: &ChecksOptions) -> Result<CheckRow> {
    let mut sampler = FieldSampler::new(opts.seed.wrapping_add(2))?;
    let mut worst: f64 = 0.0;
    let n = opts.samples.min(20);
    for i in 0..n {
        let u = sampler.sample(i);
        let k = luxemburg_norm(&u);
        for lambda in [0.1, 3.0, 17.0] {
            let scaled = u.scaled(Complex64::from_polar(lambda, 0.4 * i as f64));
            worst = worst.max((luxemburg_norm(&scaled) - lambda * k).abs() / (lambda * k));
        }
    }
    Ok(row(
        "luxemburg_homogeneity",
        worst <= HOMOGENEITY_TOL,
        worst,
        HOMOGENEITY_TOL,
        3 * n,
        "max |k(λu) - |λ|k(u)| / |λ|k(u)",
    ))
}

/// `|I_ω(ρu)| <= 1e-10 · max(1, ‖ρu‖²)`.
pub fn nehari_projection(opts: &ChecksOptions) -> Result<CheckRow> {
    let mut sampler = FieldSampler::new(opts.seed.wrapping_add(3))?;
    let mut worst: f64 = 0.0;
    for i in 0..opts.samples {
        let u = sampler.sample(i);
        let omega = [-1.0, 0.0, 1.0][i % 3];
        let v = nehari_rescale(&u, omega)?;
        worst = worst.max(nehari(&v, omega).abs() / charge(&v).max(1.0));
    }
    Ok(row(
        "nehari_projection",
        worst <= NEHARI_TOL,
        worst,
        NEHARI_TOL,
        opts.samples,
        "max |I_ω(ρu)| / max(1, Q)",
    ))
}

/// Rescaling `λφ_ω` lands back on `φ_ω`.
pub fn nehari_fixed_point() -> Result<CheckRow> {
    let grid = make_grid(1, 12.0, 256)?;
    let mut worst: f64 = 0.0;
    for omega in [-1.0, 0.0, 1.0] {
        let phi = gausson_field(&GaussonParams::new(omega, 1)?, &grid)?;
        for lambda in [0.5, 2.0, 5.0] {
            let back = nehari_rescale(&phi.scaled(Complex64::new(lambda, 0.0)), omega)?;
            worst = worst.max(back.sub(&phi)?.max_abs());
        }
    }
    Ok(row(
        "nehari_fixed_point",
        worst <= FIXED_POINT_TOL,
        worst,
        FIXED_POINT_TOL,
        9,
        "max pointwise |ρ(λφ)λφ - φ|",
    ))
}

/// Residuals of the translate sequence `φ₀ + ½φ₀(· - s)`, `s = 1..8`.
pub fn brezis_lieb_sequence() -> Result<Vec<(f64, f64)>> {
    let grid = make_grid(1, 16.0, 256)?;
    let base = gausson_field(&GaussonParams::new(0.0, 1)?, &grid)?;
    let bump = base.scaled(Complex64::new(0.5, 0.0));
    let shifts: Vec<f64> = (1..=8).map(f64::from).collect();
    brezis_lieb_demo(&base, &bump, &shifts)
}

pub fn brezis_lieb() -> Result<CheckRow> {
    let seq = brezis_lieb_sequence()?;
    let monotone = seq.windows(2).all(|w| w[1].1 < w[0].1);
    let last = seq.last().map_or(f64::NAN, |p| p.1);
    Ok(row(
        "brezis_lieb",
        monotone && last <= BREZIS_LIEB_TOL,
        last,
        BREZIS_LIEB_TOL,
        seq.len(),
        format!("r(s) for s=1..8, monotone={monotone}"),
    ))
}

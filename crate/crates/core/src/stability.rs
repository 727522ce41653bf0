//! Orbital-stability experiments on the Gausson.
//!
//! A perturbed Gausson `u₀ = φ_ω + p` with `‖p‖_W = δ` is evolved and its
//! `W` distance to the orbit `{e^{iθ} φ_ω(· - y)}` is sampled along the
//! trajectory. Also hosts the translate-sequence demonstration of the
//! Brézis–Lieb splitting for `F(s) = s² log s²`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{evolve_observed, EvolveOptions, TrajectoryDiagnostics};
use crate::functionals::{entropy_density, w_norm};
use crate::gausson::{gausson_field, orbit_sample, GaussonParams};
use crate::grid::{shift_field, Field, Grid};
use crate::orbit::{orbit_distance, NormKind};
use crate::sampling::{band_limited_noise, gaussian_envelope, rng_from_seed};

/// Relative tolerance on the calibrated perturbation size.
pub const DELTA_TOLERANCE: f64 = 0.05;

/// Largest admissible `δ` as a fraction of `‖φ_ω‖_W`.
pub const MAX_DELTA_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    RadialBump,
    AnisotropicBump,
    RandomBandlimited,
    TranslationOffset,
    PhaseRamp,
}

impl std::str::FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "radial_bump" => Self::RadialBump,
            "anisotropic_bump" => Self::AnisotropicBump,
            "random_bandlimited" => Self::RandomBandlimited,
            "translation_offset" => Self::TranslationOffset,
            "phase_ramp" => Self::PhaseRamp,
            other => return Err(Error::InvalidArgument(format!("unknown perturbation kind {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    /// Target `‖u₀ - φ_ω‖_W`. Zero means the unperturbed Gausson.
    pub delta: f64,
    pub seed: u64,
    /// Largest wavenumber of the random shapes.
    pub band_limit: f64,
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be >= 0, got {}", self.delta)));
        }
        if !(self.band_limit.is_finite() && self.band_limit > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "band_limit must be positive, got {}",
                self.band_limit
            )));
        }
        Ok(())
    }
}

/// Build `u₀ = φ_ω + p` with `‖u₀ - φ_ω‖_W = δ` (within 5%).
pub fn make_perturbation(base: &GaussonParams, spec: &PerturbationSpec, grid: &Grid) -> Result<Field> {
    spec.validate()?;
    let phi = gausson_field(base, grid)?;
    let limit = MAX_DELTA_FRACTION * w_norm(&phi);
    if spec.delta > limit {
        return Err(Error::InvalidArgument(format!(
            "delta {} exceeds {MAX_DELTA_FRACTION}·‖φ_ω‖_W = {limit}",
            spec.delta
        )));
    }
    if spec.delta == 0.0 {
        return Ok(phi);
    }

    let u0 = match spec.kind {
        PerturbationKind::RadialBump
        | PerturbationKind::AnisotropicBump
        | PerturbationKind::RandomBandlimited => {
            let shape = perturbation_shape(spec, grid);
            let size = w_norm(&shape);
            if !(size.is_finite() && size > 0.0) {
                return Err(Error::UnreachableDelta(format!(
                    "{:?} shape is numerically zero on this grid",
                    spec.kind
                )));
            }
            // ‖·‖_W is a norm, so the amplitude follows in closed form.
            phi.add(&shape.scaled(Complex64::new(spec.delta / size, 0.0)))?
        }
        PerturbationKind::TranslationOffset => {
            let max_shift = 0.5 * grid.half_width();
            let family = |s: f64| {
                let mut y = vec![0.0; grid.dim()];
                y[0] = s;
                orbit_sample(base, 0.0, &y, grid)
            };
            let s = calibrate(&phi, family, max_shift, spec.delta)?;
            let mut y = vec![0.0; grid.dim()];
            y[0] = s;
            orbit_sample(base, 0.0, &y, grid)
        }
        PerturbationKind::PhaseRamp => {
            let max_k = 0.25 * std::f64::consts::PI / grid.spacing();
            let ramp = |k: f64| phi.map_indexed(|i, v| v * Complex64::from_polar(1.0, k * grid.position(i)[0]));
            let k = calibrate(&phi, ramp, max_k, spec.delta)?;
            phi.map_indexed(|i, v| v * Complex64::from_polar(1.0, k * grid.position(i)[0]))
        }
    };

    let achieved = w_norm(&u0.sub(&phi)?);
    if (achieved - spec.delta).abs() > DELTA_TOLERANCE * spec.delta {
        return Err(Error::UnreachableDelta(format!(
            "calibrated perturbation has size {achieved}, target {}",
            spec.delta
        )));
    }
    Ok(u0)
}

/// Unit-free shape of the additive perturbation kinds.
fn perturbation_shape(spec: &PerturbationSpec, grid: &Grid) -> Field {
    let dim = grid.dim();
    match spec.kind {
        PerturbationKind::RadialBump => gaussian_envelope(grid, &vec![0.0; dim], &[0.8]),
        PerturbationKind::AnisotropicBump => {
            let mut center = vec![0.0; dim];
            center[0] = 1.0;
            gaussian_envelope(grid, &center, &[0.7, 1.4, 1.0][..dim])
        }
        _ => {
            let mut rng = rng_from_seed(spec.seed);
            let noise = band_limited_noise(grid, &mut rng, spec.band_limit);
            let env = gaussian_envelope(grid, &vec![0.0; dim], &[1.5]);
            noise.zip_map(&env, |a, b| a * b)
        }
    }
}

/// Bisection for the parameter `s ∈ [0, s_max]` at which
/// `‖family(s) - φ‖_W = δ`, assuming the size grows with `s`.
fn calibrate<F>(phi: &Field, family: F, s_max: f64, delta: f64) -> Result<f64>
where
    F: Fn(f64) -> Field,
{
    let size = |s: f64| -> Result<f64> { Ok(w_norm(&family(s).sub(phi)?)) };
    if size(s_max)? < delta {
        return Err(Error::UnreachableDelta(format!(
            "largest admissible parameter {s_max} only reaches size {}",
            size(s_max)?
        )));
    }
    let (mut lo, mut hi) = (0.0, s_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if size(mid)? < delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * s_max {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConservationSummary {
    pub max_charge_drift: f64,
    pub max_energy_drift: f64,
    pub max_boundary_mass: f64,
    pub boundary_warning: bool,
}

impl From<&TrajectoryDiagnostics> for ConservationSummary {
    fn from(d: &TrajectoryDiagnostics) -> Self {
        Self {
            max_charge_drift: d.max_charge_drift(),
            max_energy_drift: d.max_energy_drift(),
            max_boundary_mass: d.max_boundary_mass(),
            boundary_warning: d.boundary_warning,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub spec: PerturbationSpec,
    pub omega: f64,
    pub dim: usize,
    pub times: Vec<f64>,
    /// `inf_{θ,y} ‖u(t) - e^{iθ} φ_ω(· - y)‖_W`.
    pub orbit_distance_w: Vec<f64>,
    pub orbit_distance_l2: Vec<f64>,
    /// Minimizing gauge of the `W` distance.
    pub theta: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub charge_drift: Vec<f64>,
    pub energy_drift: Vec<f64>,
    pub max_distance_w: f64,
    /// Orbit distance at `t = 0`. Zero for pure translations.
    pub initial_distance_w: f64,
    /// `‖u₀ - φ_ω‖_W`, the calibrated perturbation size.
    pub initial_offset_w: f64,
    /// Samples where the `W` polish moved the minimizer by more than one cell.
    pub polish_flags: usize,
    pub conservation: ConservationSummary,
}

impl StabilityReport {
    fn new(spec: &PerturbationSpec, omega: f64, dim: usize, initial_offset_w: f64) -> Self {
        Self {
            spec: spec.clone(),
            omega,
            dim,
            times: Vec::new(),
            orbit_distance_w: Vec::new(),
            orbit_distance_l2: Vec::new(),
            theta: Vec::new(),
            y: Vec::new(),
            charge_drift: Vec::new(),
            energy_drift: Vec::new(),
            max_distance_w: 0.0,
            initial_distance_w: 0.0,
            initial_offset_w,
            polish_flags: 0,
            conservation: ConservationSummary::default(),
        }
    }

    pub fn csv_header(dim: usize) -> String {
        let mut cols = vec!["t", "dist_w", "dist_l2", "theta"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        cols.extend((0..dim).map(|a| format!("y{a}")));
        cols.push("charge_drift".into());
        cols.push("energy_drift".into());
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.dim);
        out.push('\n');
        for i in 0..self.times.len() {
            let mut row = vec![
                self.times[i],
                self.orbit_distance_w[i],
                self.orbit_distance_l2[i],
                self.theta[i],
            ];
            row.extend(&self.y[i]);
            row.push(self.charge_drift.get(i).copied().unwrap_or(f64::NAN));
            row.push(self.energy_drift.get(i).copied().unwrap_or(f64::NAN));
            out.push_str(&row.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    fn finish(&mut self, diag: &TrajectoryDiagnostics) {
        self.charge_drift = diag.charge_drift.clone();
        self.energy_drift = diag.energy_drift.clone();
        self.conservation = diag.into();
        self.max_distance_w = self.orbit_distance_w.iter().copied().fold(0.0, f64::max);
        self.initial_distance_w = self.orbit_distance_w.first().copied().unwrap_or(0.0);
    }
}

/// Evolve `φ_ω + p` and sample the orbit distance on the diagnostic schedule.
pub fn stability_experiment(
    omega: f64,
    grid: &Grid,
    spec: &PerturbationSpec,
    eopts: &EvolveOptions,
) -> Result<StabilityReport> {
    eopts.validate()?;
    let params = GaussonParams::new(omega, grid.dim())?;
    let u0 = make_perturbation(&params, spec, grid)?;
    let phi = gausson_field(&params, grid)?;
    let mut report = StabilityReport::new(spec, omega, grid.dim(), w_norm(&u0.sub(&phi)?));

    let result = evolve_observed(&u0, eopts, omega, |t, field| {
        let w = orbit_distance(field, omega, NormKind::W)?;
        let l2 = orbit_distance(field, omega, NormKind::L2)?;
        report.times.push(t);
        report.orbit_distance_w.push(w.distance);
        report.orbit_distance_l2.push(l2.distance);
        report.theta.push(w.theta);
        report.y.push(w.y);
        report.polish_flags += usize::from(w.polish_moved_cell);
        Ok(())
    });
    match result {
        Ok(diag) => {
            report.finish(&diag);
            Ok(report)
        }
        Err(Error::EvolutionAborted { time, reason, partial }) => {
            report.finish(&partial);
            Err(Error::StabilityAborted {
                time,
                reason,
                partial: Box::new(report),
            })
        }
        Err(e) => Err(e),
    }
}

/// One experiment per `δ`, run on at most `jobs` worker threads. Results keep
/// the order of `deltas`.
pub fn stability_sweep(
    omega: f64,
    grid: &Grid,
    spec: &PerturbationSpec,
    deltas: &[f64],
    eopts: &EvolveOptions,
    jobs: usize,
) -> Result<Vec<StabilityReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| {
        deltas
            .par_iter()
            .map(|&delta| {
                let spec = PerturbationSpec { delta, ..spec.clone() };
                stability_experiment(omega, grid, &spec, eopts)
            })
            .collect()
    })
}

/// For `uₙ = base + bump(· - sₙ e₁)`, the residual
/// `rₙ = |∫F(|uₙ|) - F(|uₙ - base|) - ∫F(|base|)|` with `F(s) = s² log s²`.
/// Returns `(sₙ, rₙ)` pairs.
pub fn brezis_lieb_demo(base: &Field, bump: &Field, shifts: &[f64]) -> Result<Vec<(f64, f64)>> {
    let grid = base.grid();
    if bump.grid() != grid {
        return Err(Error::InvalidArgument("base and bump live on different grids".into()));
    }
    let limit = 0.5 * grid.half_width();
    if shifts.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("shifts must be nondecreasing".into()));
    }
    if let Some(&s) = shifts.iter().find(|s| !s.is_finite() || s.abs() > limit) {
        return Err(Error::InvalidArgument(format!(
            "shift {s} leaves the bulk region (|s| <= {limit})"
        )));
    }
    let vol = grid.cell_volume();
    let base_term: f64 = base.values().iter().map(|v| entropy_density(v.norm_sqr())).sum::<f64>() * vol;
    shifts
        .iter()
        .map(|&s| {
            let mut offset = vec![0.0; grid.dim()];
            offset[0] = s;
            let moved = shift_field(bump, &offset)?;
            let split: f64 = base
                .values()
                .iter()
                .zip(moved.values())
                .map(|(b, m)| entropy_density((b + m).norm_sqr()) - entropy_density(m.norm_sqr()))
                .sum::<f64>()
                * vol;
            Ok((s, (split - base_term).abs()))
        })
        .collect()
}

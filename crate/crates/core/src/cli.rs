//! The `lognls` command line: configuration, the four commands and their
//! output files.
//!
//! Exit codes: 0 success, 1 a property check failed, 2 invalid configuration
//! or usage, 3 numerical abort or non-convergence.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::checks::{run_checks, ChecksOptions};
use crate::error::{Error, Result};
use crate::evolve::{evolve_run, EvolveOptions, TrajectoryDiagnostics};
use crate::functionals::w_norm;
use crate::gausson::{gausson_field, GaussonParams};
use crate::grid::{make_grid, Grid};
use crate::ground_state::{minimize_action, GroundStateResult, Init, MinimizeOptions};
use crate::io::{gnuplot_script, read_snapshot, write_json, write_snapshot, write_text, Series};
use crate::stability::{
    make_perturbation, stability_sweep, PerturbationKind, PerturbationSpec, StabilityReport, MAX_DELTA_FRACTION,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PROPERTY: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

pub const DEFAULT_OUT: &str = "lognls-out";
pub const OUT_ENV: &str = "LOGNLS_OUT";

#[derive(Debug, Parser)]
#[command(name = "lognls", version, about = "Experiments for the logarithmic Schrödinger equation")]
pub struct Cli {
    /// TOML run configuration
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory [default: $LOGNLS_OUT, else ./lognls-out]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Maximum number of concurrent experiments
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Suppress tables on stdout
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the action on the Nehari manifold for each ω and compare with d(ω)
    Groundstate,
    /// Evolve an initial state and record conservation diagnostics
    Simulate,
    /// Perturb the Gausson, evolve, and track the orbit distance
    Stability,
    /// Run the property suites and print a pass/fail table
    Checks(ChecksArgs),
}

#[derive(Debug, Args)]
pub struct ChecksArgs {
    /// Break the seam constant of A to confirm the harness catches it
    #[arg(long)]
    pub inject_fault: bool,
    /// Random fields per suite
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub grid: GridConfig,
    pub groundstate: GroundStateConfig,
    pub simulate: SimulateConfig,
    pub stability: StabilityConfig,
    pub checks: ChecksConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            half_width: 12.0,
            points: 256,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        make_grid(self.dim, self.half_width, self.points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundStateConfig {
    pub omegas: Vec<f64>,
    /// `random`, `gausson-perturbed` or `anisotropic`
    pub init: String,
    pub minimize: MinimizeOptions,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        Self {
            omegas: vec![-1.0, 0.0, 1.0],
            init: "random".into(),
            minimize: MinimizeOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub omega: f64,
    /// Initial state `φ_ω + p`; `delta = 0` gives the bare Gausson.
    pub kind: PerturbationKind,
    pub delta: f64,
    pub band_limit: f64,
    /// Start from a stored field instead (overrides kind/delta).
    pub initial_snapshot: Option<PathBuf>,
    pub evolve: EvolveOptions,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            omega: 0.0,
            kind: PerturbationKind::RadialBump,
            delta: 0.0,
            band_limit: 2.0,
            initial_snapshot: None,
            evolve: EvolveOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub omega: f64,
    pub kind: PerturbationKind,
    pub deltas: Vec<f64>,
    pub band_limit: f64,
    pub evolve: EvolveOptions,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            omega: 0.0,
            kind: PerturbationKind::RandomBandlimited,
            deltas: vec![0.01],
            band_limit: 2.0,
            evolve: EvolveOptions {
                t_final: 20.0,
                ..EvolveOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksConfig {
    pub samples: usize,
    pub inject_seam_fault: bool,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        let d = ChecksOptions::default();
        Self {
            samples: d.samples,
            inject_seam_fault: d.inject_seam_fault,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// Everything a command needs besides its own config section.
#[derive(Clone, Debug)]
pub struct Context {
    pub out: PathBuf,
    /// `--seed`, else the top-level `seed` key.
    pub seed: Option<u64>,
    pub jobs: usize,
    pub quiet: bool,
}

impl Context {
    /// Flags win over the config file, which wins over `LOGNLS_OUT` and defaults.
    pub fn resolve(cli: &Cli, cfg: &RunConfig) -> Self {
        let out = cli
            .out
            .clone()
            .or_else(|| cfg.out.clone())
            .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let jobs = cli
            .jobs
            .or(cfg.jobs)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1);
        Self {
            out,
            seed: cli.seed.or(cfg.seed),
            jobs,
            quiet: cli.quiet,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn say(&self, text: &str) {
        if !self.quiet {
            println!("{text}");
        }
    }
}

/// Map an error to its exit code.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NonFinite | Error::ZeroField(_) | Error::EvolutionAborted { .. } | Error::StabilityAborted { .. } => {
            EXIT_NUMERICAL
        }
        _ => EXIT_CONFIG,
    }
}

/// Parse `args`, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("lognls: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<u8> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = Context::resolve(cli, &cfg);
    std::fs::create_dir_all(&ctx.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", ctx.out.display())))?;
    match &cli.command {
        Command::Groundstate => cmd_groundstate(&ctx, &cfg),
        Command::Simulate => cmd_simulate(&ctx, &cfg),
        Command::Stability => cmd_stability(&ctx, &cfg),
        Command::Checks(args) => {
            let mut cfg = cfg;
            cfg.checks.inject_seam_fault |= args.inject_fault;
            if let Some(n) = args.samples {
                cfg.checks.samples = n;
            }
            cmd_checks(&ctx, &cfg)
        }
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

pub const GROUNDSTATE_TABLE_HEADER: &str =
    "omega,action,d_closed,relative_error,converged,iterations,elliptic_residual,orbit_distance_l2";

pub fn cmd_groundstate(ctx: &Context, cfg: &RunConfig) -> Result<u8> {
    let gs = &cfg.groundstate;
    if gs.omegas.is_empty() {
        return Err(Error::Config("groundstate.omegas is empty".into()));
    }
    if let Some(w) = gs.omegas.iter().find(|w| !w.is_finite()) {
        return Err(Error::Config(format!("groundstate.omegas contains {w}")));
    }
    let grid = cfg.grid.build()?;
    let init: Init = gs.init.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
    let opts = MinimizeOptions {
        seed: ctx.seed.unwrap_or(gs.minimize.seed),
        ..gs.minimize.clone()
    };
    opts.validate().map_err(|e| Error::Config(e.to_string()))?;

    let results: Vec<Result<GroundStateResult>> = thread_pool(ctx.jobs)?.install(|| {
        use rayon::prelude::*;
        gs.omegas
            .par_iter()
            .map(|&omega| minimize_action(omega, &grid, &init, &opts))
            .collect()
    });

    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut table = String::from(GROUNDSTATE_TABLE_HEADER);
    table.push('\n');
    for r in &results {
        let stem = format!("groundstate_omega{}", r.omega);
        write_json(&ctx.path(&format!("{stem}.json")), r)?;
        write_snapshot(&ctx.path(&format!("{stem}.bin")), r.minimizer(), 0.0)?;
        let mut trace = String::from("iteration,action,nehari_residual,grad_norm,step\n");
        for e in &r.trace {
            trace.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                e.iteration, e.action, e.nehari_residual, e.grad_norm, e.step
            ));
        }
        write_text(&ctx.path(&format!("{stem}_trace.csv")), &trace)?;
        table.push_str(&format!(
            "{},{:e},{:e},{:e},{},{},{:e},{:e}\n",
            r.omega,
            r.action_value,
            r.d_closed_ref,
            r.relative_error,
            r.converged,
            r.iterations,
            r.elliptic_residual,
            r.orbit_distance_l2
        ));
    }
    write_text(&ctx.path("groundstate_table.csv"), &table)?;
    let series: Vec<Series> = gs
        .omegas
        .iter()
        .map(|w| Series::new(format!("groundstate_omega{w}_trace.csv"), 4, format!("ω = {w}")))
        .collect();
    write_text(
        &ctx.path("groundstate_trace.gp"),
        &gnuplot_script("groundstate_trace.png", "tangential gradient", "iteration", "‖Pg‖", &series, true),
    )?;

    if !ctx.quiet {
        println!("{:>8} {:>16} {:>16} {:>10} {:>9} {:>6}", "omega", "action", "d(omega)", "rel.err", "converged", "iters");
        for r in &results {
            println!(
                "{:>8} {:>16.10} {:>16.10} {:>10.2e} {:>9} {:>6}",
                r.omega, r.action_value, r.d_closed_ref, r.relative_error, r.converged, r.iterations
            );
        }
    }
    let all_converged = results.iter().all(|r| r.converged);
    if !all_converged {
        eprintln!("lognls: at least one minimization did not converge");
        return Ok(EXIT_NUMERICAL);
    }
    Ok(EXIT_OK)
}

pub fn cmd_simulate(ctx: &Context, cfg: &RunConfig) -> Result<u8> {
    let sim = &cfg.simulate;
    sim.evolve.validate().map_err(|e| Error::Config(e.to_string()))?;
    let init = match &sim.initial_snapshot {
        Some(path) => read_snapshot(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?.0,
        None => {
            let grid = cfg.grid.build()?;
            let params = GaussonParams::new(sim.omega, grid.dim())?;
            let spec = PerturbationSpec {
                kind: sim.kind,
                delta: sim.delta,
                seed: ctx.seed.unwrap_or(0),
                band_limit: sim.band_limit,
            };
            make_perturbation(&params, &spec, &grid)?
        }
    };

    let (diag, aborted) = match evolve_run(&init, &sim.evolve, sim.omega) {
        Ok(d) => (d, None),
        Err(Error::EvolutionAborted { time, reason, partial }) => (*partial, Some((time, reason))),
        Err(e) => return Err(e),
    };
    write_simulation(ctx, &diag)?;
    if let Some((time, reason)) = aborted {
        eprintln!("lognls: evolution aborted at t = {time}: {reason}");
        return Ok(EXIT_NUMERICAL);
    }
    ctx.say(&format!(
        "t = {}: max charge drift {:.3e}, max energy drift {:.3e}, standing-wave defect {:.3e}{}",
        diag.times.last().copied().unwrap_or(0.0),
        diag.max_charge_drift(),
        diag.max_energy_drift(),
        diag.standing_wave_defect.last().copied().unwrap_or(0.0),
        if diag.boundary_warning { " (boundary mass warning)" } else { "" }
    ));
    Ok(EXIT_OK)
}

fn write_simulation(ctx: &Context, diag: &TrajectoryDiagnostics) -> Result<()> {
    write_text(&ctx.path("diagnostics.csv"), &diag.to_csv())?;
    write_json(&ctx.path("diagnostics.json"), diag)?;
    for (i, (t, field)) in diag.snapshots.iter().enumerate() {
        write_snapshot(&ctx.path(&format!("snapshot_{i:05}.bin")), field, *t)?;
    }
    let csv = "diagnostics.csv";
    write_text(
        &ctx.path("drift.gp"),
        &gnuplot_script(
            "drift.png",
            "conservation drift",
            "t",
            "relative drift",
            &[
                Series::new(csv, 4, "charge"),
                Series::new(csv, 5, "energy"),
                Series::new(csv, 6, "boundary mass"),
            ],
            true,
        ),
    )
}

pub const STABILITY_SUMMARY_HEADER: &str =
    "delta,initial_offset_w,initial_distance_w,max_distance_w,ratio,max_charge_drift,max_energy_drift,polish_flags";

pub fn cmd_stability(ctx: &Context, cfg: &RunConfig) -> Result<u8> {
    let st = &cfg.stability;
    if st.deltas.is_empty() {
        return Err(Error::Config("stability.deltas is empty".into()));
    }
    st.evolve.validate().map_err(|e| Error::Config(e.to_string()))?;
    let grid = cfg.grid.build()?;
    let spec = PerturbationSpec {
        kind: st.kind,
        delta: st.deltas[0],
        seed: ctx.seed.unwrap_or(0),
        band_limit: st.band_limit,
    };
    // Reject bad deltas before spending time on any run.
    let phi = gausson_field(&GaussonParams::new(st.omega, grid.dim())?, &grid)?;
    let limit = MAX_DELTA_FRACTION * w_norm(&phi);
    for &delta in &st.deltas {
        PerturbationSpec { delta, ..spec.clone() }
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if delta > limit {
            return Err(Error::Config(format!(
                "delta {delta} exceeds {MAX_DELTA_FRACTION}·‖φ_ω‖_W = {limit}"
            )));
        }
    }

    let (reports, aborted) = match stability_sweep(st.omega, &grid, &spec, &st.deltas, &st.evolve, ctx.jobs) {
        Ok(r) => (r, None),
        Err(Error::StabilityAborted { time, reason, partial }) => (vec![*partial], Some((time, reason))),
        Err(e) => return Err(e),
    };

    let mut summary = String::from(STABILITY_SUMMARY_HEADER);
    summary.push('\n');
    let mut series = Vec::new();
    for r in &reports {
        let stem = format!("stability_delta{}", r.spec.delta);
        write_json(&ctx.path(&format!("{stem}.json")), r)?;
        write_text(&ctx.path(&format!("{stem}.csv")), &r.to_csv())?;
        let csv = format!("{stem}.csv");
        write_text(
            &ctx.path(&format!("{stem}.gp")),
            &gnuplot_script(
                &format!("{stem}.png"),
                &format!("orbit distance, δ = {}", r.spec.delta),
                "t",
                "distance",
                &[Series::new(&csv, 2, "W"), Series::new(&csv, 3, "L²")],
                false,
            ),
        )?;
        series.push(Series::new(csv, 2, format!("δ = {}", r.spec.delta)));
        summary.push_str(&stability_summary_row(r));
    }
    write_text(&ctx.path("stability_summary.csv"), &summary)?;
    write_text(
        &ctx.path("stability_sweep.gp"),
        &gnuplot_script("stability_sweep.png", "W orbit distance", "t", "dist_W", &series, false),
    )?;

    if let Some((time, reason)) = aborted {
        eprintln!("lognls: stability run aborted at t = {time}: {reason}");
        return Ok(EXIT_NUMERICAL);
    }
    if !ctx.quiet {
        println!("{:>10} {:>12} {:>12} {:>8} {:>6}", "delta", "offset_W", "max dist_W", "ratio", "flags");
        for r in &reports {
            println!(
                "{:>10} {:>12.4e} {:>12.4e} {:>8.3} {:>6}",
                r.spec.delta,
                r.initial_offset_w,
                r.max_distance_w,
                ratio(r),
                r.polish_flags
            );
        }
    }
    Ok(EXIT_OK)
}

fn ratio(r: &StabilityReport) -> f64 {
    if r.spec.delta > 0.0 {
        r.max_distance_w / r.spec.delta
    } else {
        0.0
    }
}

fn stability_summary_row(r: &StabilityReport) -> String {
    format!(
        "{},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
        r.spec.delta,
        r.initial_offset_w,
        r.initial_distance_w,
        r.max_distance_w,
        ratio(r),
        r.conservation.max_charge_drift,
        r.conservation.max_energy_drift,
        r.polish_flags
    )
}

pub fn cmd_checks(ctx: &Context, cfg: &RunConfig) -> Result<u8> {
    if cfg.checks.samples == 0 {
        return Err(Error::Config("checks.samples must be >= 1".into()));
    }
    let opts = ChecksOptions {
        seed: ctx.seed.unwrap_or(0),
        samples: cfg.checks.samples,
        inject_seam_fault: cfg.checks.inject_seam_fault,
    };
    let report = run_checks(&opts)?;
    write_json(&ctx.path("checks.json"), &report)?;
    write_text(&ctx.path("checks.csv"), &report.to_csv())?;
    ctx.say(&report.to_string());
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_PROPERTY })
}

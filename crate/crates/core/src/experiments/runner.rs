//! Scenario execution and file output.
//!
//! A run writes `series.csv` (diagnostics), numbered snapshots and
//! `manifest.json` into its output directory. CSV content depends only on
//! the scenario, so identical scenarios give byte-identical CSV files.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::compartment::{run_compartment, CompartmentState};
use crate::diagnostics::{diagonal_anisotropy, dominant_diagonal_mode, longest_phase_drift, DiagnosticsSeries};
use crate::error::{Error, Result};
use crate::field::{DensityField1D, DensityField2D};
use crate::lattice::{run as run_lattice, LatticeRunOptions, LatticeState};
use crate::params::{BoundaryDescriptor, Grid, ModelParams};
use crate::pde1d::{fourier_amplitude, run_1d, window_rate, Run1dOptions};
use crate::pde2d::{run_2d, Advection, PdeMode, Run2dOptions};
use crate::stability::{growth_rate, raster_region_map, EquilibriumPoint, RegionRaster};

use super::config::{ModelKind, Perturbation, Scenario};

/// Relative mass tolerance for the conservation flag.
pub const CONSERVATION_TOL: f64 = 1e-10;

/// Anisotropy a lattice snapshot needs to count towards a phase-drift run.
pub const WAVE_ANISOTROPY: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Conservation {
    pub max_rel_drift_r: f64,
    pub max_rel_drift_b: f64,
    pub conserved: bool,
}

impl Conservation {
    pub fn of(series: &DiagnosticsSeries) -> Option<Self> {
        let first = series.samples().first()?;
        let drift = |m0: f64, m: f64| (m - m0).abs() / if m0 != 0.0 { m0.abs() } else { 1.0 };
        let (mut dr, mut db) = (0.0f64, 0.0f64);
        for s in series.samples() {
            dr = dr.max(drift(first.mass_r, s.mass_r));
            db = db.max(drift(first.mass_b, s.mass_b));
        }
        Some(Self {
            max_rel_drift_r: dr,
            max_rel_drift_b: db,
            conserved: dr <= CONSERVATION_TOL && db <= CONSERVATION_TOL,
        })
    }
}

/// Compartment solutions against finer regularized-PDE solutions with
/// `eps = h/2` on each level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub levels: Vec<usize>,
    /// Mean absolute difference of `r` and `b` per level.
    pub errors: Vec<f64>,
    /// Least-squares slope of `ln error` against `ln h`.
    pub order: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Manifest {
    pub name: String,
    pub model: String,
    pub version: String,
    pub seed: u64,
    pub params: Option<ModelParams>,
    pub config: String,
    pub wall_time_s: f64,
    pub steps: u64,
    pub samples: usize,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conservation: Option<Conservation>,
    /// `|M(T) - M(0) - net inflow|` per species on mixed boundaries.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_balance_error: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamped: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entered_elliptic: Option<bool>,
    /// Final `(red, blue)` exit fluxes of a mixed-boundary run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exit_flux: Option<(f64, f64)>,
    /// Set when a species' final exit flux is below 10% of the free-flow
    /// inflow `inflow * (1 - inflow)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deadlock: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segregation: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_anisotropy: Option<f64>,
    /// Longest run of snapshots with a steadily drifting dominant diagonal
    /// mode and `|anisotropy| >= 0.3`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_drift_run: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pert_l2: Option<(f64, f64)>,
    /// Fitted rate of the `sin(2 pi x)` mode of `r` and the linear
    /// prediction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_rate: Option<(Option<f64>, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceReport>,
}

#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum FinalState {
    Lattice(LatticeState),
    Compartment(CompartmentState),
    Pde2d(DensityField2D),
    Pde1d(DensityField1D),
    Raster(RegionRaster),
    Convergence,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub series: DiagnosticsSeries,
    pub last: FinalState,
    /// `(t, red, blue)` exit fluxes at each sample of a 2D run.
    pub exits: Vec<(f64, f64, f64)>,
    /// `(anisotropy, dominant mode)` of each lattice sample.
    pub lattice_modes: Vec<(f64, crate::diagnostics::DiagonalMode)>,
}

struct Snapshots<'a> {
    dir: Option<&'a Path>,
    every: u64,
    count: u64,
    files: Vec<String>,
    error: Option<std::io::Error>,
}

impl<'a> Snapshots<'a> {
    fn new(dir: Option<&'a Path>, every: u64) -> Self {
        Self {
            dir,
            every,
            count: 0,
            files: Vec::new(),
            error: None,
        }
    }

    fn write(&mut self, name: String, content: impl FnOnce() -> String) {
        let Some(dir) = self.dir else { return };
        if self.error.is_some() {
            return;
        }
        match std::fs::write(dir.join(&name), content()) {
            Ok(()) => self.files.push(name),
            Err(e) => self.error = Some(e),
        }
    }

    /// Offers sample number `count`; writes it when it falls on the
    /// cadence. `content` yields `(extension, text)` pairs.
    fn offer(&mut self, content: impl FnOnce() -> Vec<(&'static str, String)>) {
        let k = self.count;
        self.count += 1;
        if k == 0 || (self.every > 0 && k.is_multiple_of(self.every)) {
            for (ext, text) in content() {
                self.write(format!("snapshot_{k:05}.{ext}"), || text);
            }
        }
    }

    fn finish(self) -> Result<Vec<String>> {
        match self.error {
            Some(e) => Err(e.into()),
            None => Ok(self.files),
        }
    }
}

fn profile_1d(p: Perturbation, x: f64) -> f64 {
    match p {
        Perturbation::Sin => (2.0 * PI * x).sin(),
        Perturbation::Cos => (2.0 * PI * x).cos(),
        _ => 0.0,
    }
}

fn profile_2d(p: Perturbation, x: f64, y: f64) -> (f64, f64) {
    match p {
        Perturbation::HalfWave => ((PI * x).cos() * (PI * y).sin(), (PI * x).sin() * (PI * y).cos()),
        Perturbation::FullWave => (
            (2.0 * PI * x).sin() * (2.0 * PI * y).cos(),
            (2.0 * PI * x).cos() * (2.0 * PI * y).sin(),
        ),
        _ => (0.0, 0.0),
    }
}

/// Initial densities `(r, b)` of a 2D scenario at `(x, y)`.
pub fn initial_2d(s: &Scenario, x: f64, y: f64) -> (f64, f64) {
    let (pr, pb) = profile_2d(s.perturbation, x, y);
    (s.r_inf + s.amplitude * pr, s.b_inf + s.amplitude * pb)
}

pub fn initial_field_2d(s: &Scenario) -> Result<DensityField2D> {
    let d = DensityField2D::from_fn(s.grid()?, |x, y| initial_2d(s, x, y))?;
    if !d.in_simplex(0.0) {
        return Err(Error::invalid("amplitude", "initial densities leave the simplex"));
    }
    Ok(d)
}

pub fn initial_field_1d(s: &Scenario) -> Result<DensityField1D> {
    let d = DensityField1D::from_fn(s.grid()?, |x| {
        let w = s.amplitude * profile_1d(s.perturbation, x);
        (s.r_inf + w, s.b_inf - w)
    })?;
    if d.r.iter().zip(&d.b).any(|(&r, &b)| r < 0.0 || b < 0.0 || r + b > 1.0) {
        return Err(Error::invalid("amplitude", "initial densities leave the simplex"));
    }
    Ok(d)
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs the compartment model on every refinement level for `t_end` and
/// compares with the regularized system at `eps = h/2`, solved with
/// limited second-order advection on a grid `oracle_refine` times finer and
/// averaged back onto the level's cells.
pub fn convergence_study(s: &Scenario) -> Result<ConvergenceReport> {
    let mut errors = Vec::new();
    let mut hs = Vec::new();
    for &n in &s.refinement_levels {
        let h = 1.0 / n as f64;
        let p = ModelParams {
            epsilon: h / 2.0,
            h,
            dt: s.params.alpha * h,
            ..s.params
        };
        let steps = (s.t_end / p.dt).round().max(1.0) as u64;
        let initial = CompartmentState::from_fn(n, |x, y| initial_2d(s, x, y))?;
        let (coarse, _) = run_compartment(initial, &p, steps, 0, |_| {})?;
        let m = n * s.oracle_refine;
        let fine = DensityField2D::from_fn(Grid::periodic_2d(m)?, |x, y| initial_2d(s, x, y))?;
        let t = steps as f64 * p.dt;
        let oracle = run_2d(
            fine,
            &p,
            PdeMode::Parabolic,
            Run2dOptions {
                t_end: t,
                sample_interval: t,
                dt: None,
                advection: Advection::Muscl,
            },
            |_| {},
        )?;
        let fr = oracle.last.r.coarsen(s.oracle_refine);
        let fb = oracle.last.b.coarsen(s.oracle_refine);
        let e = (fr.l1_distance(&coarse.r) + fb.l1_distance(&coarse.b)) / (n * n) as f64;
        log::info!("refinement n = {n}: error {e:.4e} after {steps} steps");
        errors.push(e);
        hs.push(h);
    }
    Ok(ConvergenceReport {
        levels: s.refinement_levels.clone(),
        order: log_log_slope(&hs, &errors),
        errors,
    })
}

/// Runs `s`. With `out_dir`, writes the series, snapshots and manifest
/// there (the directory is created if needed).
pub fn execute(s: &Scenario, out_dir: Option<&Path>) -> Result<RunOutcome> {
    s.validate()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let start = Instant::now();
    let mut manifest = Manifest {
        name: s.name.clone(),
        model: s.model.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: s.seed,
        params: Some(s.params),
        config: s.to_config(),
        ..Manifest::default()
    };
    let mut snaps = Snapshots::new(out_dir, s.snapshots_every);
    let mut exits = Vec::new();
    let mut lattice_modes = Vec::new();
    let (series, last) = match s.model {
        ModelKind::Lattice => {
            let initial = LatticeState::random_with_density(s.n, s.rho_total, s.red_fraction, s.seed)?;
            let options = LatticeRunOptions {
                steps: s.steps,
                sample_every: s.sample_every,
                coarse_factor: s.coarse_factor,
            };
            let (last, series) = run_lattice(initial, &s.params, s.scheduler, options, |st| {
                let (r, b) = st.occupancy_fields();
                let coarse = r.zip_map(&b, |x, y| x + y).coarsen(s.coarse_factor);
                lattice_modes.push((diagonal_anisotropy(&coarse), dominant_diagonal_mode(&coarse)));
                snaps.offer(|| vec![("txt", st.to_text()), ("csv", st.to_csv())]);
            })?;
            manifest.steps = s.steps;
            manifest.conservation = Conservation::of(&series);
            let seg = series.column(|x| x.segregation);
            if let (Some(a), Some(b)) = (seg.first(), seg.last()) {
                manifest.segregation = Some((*a, *b));
            }
            manifest.final_anisotropy = lattice_modes.last().map(|m| m.0);
            manifest.phase_drift_run = Some(longest_phase_drift(&lattice_modes, WAVE_ANISOTROPY));
            snaps.write("final.txt".into(), || last.to_text());
            (series, FinalState::Lattice(last))
        }
        ModelKind::Compartment if !s.refinement_levels.is_empty() => {
            let report = convergence_study(s)?;
            manifest.convergence = Some(report);
            (DiagnosticsSeries::default(), FinalState::Convergence)
        }
        ModelKind::Compartment => {
            let initial = CompartmentState::from_fn(s.n, |x, y| initial_2d(s, x, y))?;
            let (last, series) = run_compartment(initial, &s.params, s.steps, s.sample_every, |st| {
                snaps.offer(|| st.to_density().map(|d| vec![("csv", d.to_csv())]).unwrap_or_default());
            })?;
            manifest.steps = s.steps;
            manifest.conservation = Conservation::of(&series);
            let d = last.to_density()?;
            snaps.write("final.csv".into(), || d.to_csv());
            (series, FinalState::Compartment(last))
        }
        ModelKind::Pde2d => {
            let initial = initial_field_2d(s)?;
            let options = Run2dOptions {
                t_end: s.t_end,
                sample_interval: s.sample_interval,
                dt: s.pde_dt,
                advection: s.advection,
            };
            let out = run_2d(initial, &s.params, s.mode, options, |st| {
                snaps.offer(|| vec![("csv", st.to_csv())]);
            })?;
            manifest.steps = out.steps;
            manifest.clamped = Some(out.clamped);
            manifest.final_anisotropy = out.series.samples().last().and_then(|x| x.anisotropy);
            match s.boundary {
                BoundaryDescriptor::Periodic => manifest.conservation = Conservation::of(&out.series),
                BoundaryDescriptor::Mixed { inflow, .. } => {
                    let first = out.series.samples()[0];
                    let fin = out.series.samples()[out.series.len() - 1];
                    manifest.mass_balance_error = Some((
                        (fin.mass_r - first.mass_r - out.net_boundary_mass.0).abs(),
                        (fin.mass_b - first.mass_b - out.net_boundary_mass.1).abs(),
                    ));
                    if let Some(&(_, er, eb)) = out.exits.last() {
                        manifest.exit_flux = Some((er, eb));
                        manifest.deadlock = Some(er.min(eb) < 0.1 * inflow * (1.0 - inflow));
                    }
                }
            }
            snaps.write("final.csv".into(), || out.last.to_csv());
            exits = out.exits;
            (out.series, FinalState::Pde2d(out.last))
        }
        ModelKind::Pde1d => {
            let initial = initial_field_1d(s)?;
            let q = EquilibriumPoint::new(s.r_inf, s.b_inf)?;
            let options = Run1dOptions {
                t_end: s.t_end,
                sample_interval: s.sample_interval,
                dt: s.pde_dt,
                advection: s.advection,
                equilibrium: Some(q),
            };
            let mut amplitudes = Vec::new();
            let out = run_1d(initial, &s.params, s.mode, options, |st| {
                amplitudes.push(fourier_amplitude(&st.r, s.r_inf, 1));
                snaps.offer(|| vec![("csv", st.to_csv())]);
            })?;
            manifest.steps = out.steps;
            manifest.clamped = Some(out.clamped);
            manifest.entered_elliptic = Some(out.entered_elliptic);
            manifest.conservation = Conservation::of(&out.series);
            let pert = out.series.column(|x| x.pert_l2);
            manifest.pert_l2 = Some((pert[0], pert[pert.len() - 1]));
            if s.mode == PdeMode::Parabolic && s.params.epsilon > 0.0 {
                let theory = growth_rate(&q, 2.0, s.params.epsilon);
                let (lo, hi) = if theory > 0.0 { (1.5, 5.0) } else { (0.2, 0.7) };
                manifest.mode_rate = Some((window_rate(&out.series.times(), &amplitudes, lo, hi), theory));
            }
            snaps.write("final.csv".into(), || out.last.to_csv());
            (out.series, FinalState::Pde1d(out.last))
        }
        ModelKind::StabilityMap => {
            let raster = raster_region_map(s.resolution, s.params.epsilon, s.method)?;
            snaps.write("raster.csv".into(), || raster.to_csv());
            (DiagnosticsSeries::default(), FinalState::Raster(raster))
        }
    };
    manifest.samples = series.len();
    let mut files = snaps.finish()?;
    if let Some(dir) = out_dir {
        if !series.is_empty() {
            std::fs::write(dir.join("series.csv"), series.to_csv())?;
            files.push("series.csv".into());
        }
        files.push("manifest.json".into());
    }
    manifest.files = files;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    if let Some(dir) = out_dir {
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    }
    Ok(RunOutcome {
        manifest,
        series,
        last,
        exits,
        lattice_modes,
    })
}

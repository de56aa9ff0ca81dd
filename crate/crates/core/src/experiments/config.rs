//! Scenario description and the flat `key = value` config format.
//!
//! A config file holds one scenario. Blank lines and text after `#` are
//! ignored. An optional `preset = <name>` line, which must precede every
//! other key, selects the base scenario; later keys override it. Keys not
//! set fall back to [`Scenario::default`], except `h` (defaults to `1/n`)
//! and `dt` (defaults to `alpha * h`).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Scheduler;
use crate::params::{BoundaryDescriptor, Dims, Grid, ModelParams};
use crate::pde2d::{Advection, PdeMode};
use crate::stability::RegionMethod;

use super::presets::preset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lattice,
    Compartment,
    Pde2d,
    Pde1d,
    StabilityMap,
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "lattice" => Ok(ModelKind::Lattice),
            "compartment" => Ok(ModelKind::Compartment),
            "pde2d" => Ok(ModelKind::Pde2d),
            "pde1d" => Ok(ModelKind::Pde1d),
            "stability_map" => Ok(ModelKind::StabilityMap),
            other => Err(format!(
                "unknown model `{other}` (lattice|compartment|pde2d|pde1d|stability_map)"
            )),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Lattice => "lattice",
            ModelKind::Compartment => "compartment",
            ModelKind::Pde2d => "pde2d",
            ModelKind::Pde1d => "pde1d",
            ModelKind::StabilityMap => "stability_map",
        })
    }
}

/// Shape of the initial perturbation added to `(r_inf, b_inf)`.
///
/// - `sin` / `cos` (1D): `r = r_inf + A f(2 pi x)`, `b = b_inf - A f(2 pi x)`.
/// - `half_wave` (2D): `r = r_inf + A cos(pi x) sin(pi y)`,
///   `b = b_inf + A sin(pi x) cos(pi y)`.
/// - `full_wave` (2D): `r = r_inf + A sin(2 pi x) cos(2 pi y)`,
///   `b = b_inf + A cos(2 pi x) sin(2 pi y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    None,
    Sin,
    Cos,
    HalfWave,
    FullWave,
}

impl FromStr for Perturbation {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "none" => Ok(Perturbation::None),
            "sin" => Ok(Perturbation::Sin),
            "cos" => Ok(Perturbation::Cos),
            "half_wave" => Ok(Perturbation::HalfWave),
            "full_wave" => Ok(Perturbation::FullWave),
            other => Err(format!(
                "unknown perturbation `{other}` (none|sin|cos|half_wave|full_wave)"
            )),
        }
    }
}

impl std::fmt::Display for Perturbation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Perturbation::None => "none",
            Perturbation::Sin => "sin",
            Perturbation::Cos => "cos",
            Perturbation::HalfWave => "half_wave",
            Perturbation::FullWave => "full_wave",
        })
    }
}

impl Perturbation {
    pub fn is_1d(&self) -> bool {
        matches!(self, Perturbation::Sin | Perturbation::Cos)
    }

    pub fn is_2d(&self) -> bool {
        matches!(self, Perturbation::HalfWave | Perturbation::FullWave)
    }
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub model: ModelKind,
    pub params: ModelParams,
    /// Cells (or lattice sites) per axis.
    pub n: usize,
    pub boundary: BoundaryDescriptor,
    pub r_inf: f64,
    pub b_inf: f64,
    pub perturbation: Perturbation,
    pub amplitude: f64,
    /// Lattice occupancy `P / N^2`.
    pub rho_total: f64,
    /// Share of red among the placed individuals.
    pub red_fraction: f64,
    pub seed: u64,
    /// Physical end time of continuum runs.
    pub t_end: f64,
    /// Step count of lattice and compartment runs.
    pub steps: u64,
    /// Sampling interval of continuum runs.
    pub sample_interval: f64,
    /// Sampling cadence in steps of lattice and compartment runs.
    pub sample_every: u64,
    /// Write every k-th sample as a snapshot; 0 keeps only the first and
    /// last.
    pub snapshots_every: u64,
    pub mode: PdeMode,
    pub advection: Advection,
    /// Fixed continuum time step; `None` adapts to the stability limit.
    pub pde_dt: Option<f64>,
    pub scheduler: Scheduler,
    pub coarse_factor: usize,
    pub resolution: usize,
    pub method: RegionMethod,
    /// Grid sizes of a compartment refinement study; empty for a single
    /// compartment run.
    pub refinement_levels: Vec<usize>,
    /// Oracle grid factor of the refinement study.
    pub oracle_refine: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            model: ModelKind::Pde2d,
            params: ModelParams {
                h: 1.0 / 64.0,
                dt: 0.5 / 64.0,
                ..ModelParams::default()
            },
            n: 64,
            boundary: BoundaryDescriptor::Periodic,
            r_inf: 0.4,
            b_inf: 0.4,
            perturbation: Perturbation::HalfWave,
            amplitude: 0.02,
            rho_total: 0.2,
            red_fraction: 0.5,
            seed: 1,
            t_end: 20.0,
            steps: 500,
            sample_interval: 0.1,
            sample_every: 5,
            snapshots_every: 0,
            mode: PdeMode::Parabolic,
            advection: Advection::Upwind,
            pde_dt: None,
            scheduler: Scheduler::RandomSequential,
            coarse_factor: 4,
            resolution: 256,
            method: RegionMethod::Scan,
            refinement_levels: Vec::new(),
            oracle_refine: 2,
            out_dir: None,
        }
    }
}

const KEYS: &[&str] = &[
    "name",
    "model",
    "alpha",
    "gamma0",
    "gamma1",
    "gamma2",
    "epsilon",
    "h",
    "dt",
    "n",
    "boundary",
    "inflow",
    "outflux",
    "r_inf",
    "b_inf",
    "perturbation",
    "amplitude",
    "rho_total",
    "red_fraction",
    "seed",
    "t_end",
    "steps",
    "sample_interval",
    "sample_every",
    "snapshots_every",
    "mode",
    "advection",
    "pde_dt",
    "scheduler",
    "coarse_factor",
    "resolution",
    "method",
    "refinement_levels",
    "oracle_refine",
    "out_dir",
];

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| Error::Config {
        line,
        message: format!("`{key}`: cannot parse `{value}`: {e}"),
    })
}

impl Scenario {
    pub fn grid(&self) -> Result<Grid> {
        let dims = match self.model {
            ModelKind::Pde1d => Dims::One,
            _ => Dims::Two,
        };
        Grid::new(dims, self.n, 1.0, self.boundary)
    }

    /// Checks the invariants of the selected model. Errors name the
    /// offending parameter.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let simplex = self.r_inf >= 0.0 && self.b_inf >= 0.0 && self.r_inf + self.b_inf <= 1.0;
        match self.model {
            ModelKind::StabilityMap => {
                if self.resolution < 32 {
                    return Err(Error::invalid("resolution", "need at least 32 samples per axis"));
                }
                if !(self.params.epsilon > 0.0) {
                    return Err(Error::invalid("epsilon", "the wavenumber scan needs epsilon > 0"));
                }
                return Ok(());
            }
            ModelKind::Lattice => {
                if !self.params.jump_probabilities_bounded() {
                    return Err(Error::invalid(
                        "alpha",
                        "alpha * max(1 + 2 gamma0, 2 gamma0 + gamma1 + gamma2) must not exceed 1",
                    ));
                }
                if !(0.0..=1.0).contains(&self.rho_total) {
                    return Err(Error::invalid("rho_total", "must lie in [0, 1]"));
                }
                if !(0.0..=1.0).contains(&self.red_fraction) {
                    return Err(Error::invalid("red_fraction", "must lie in [0, 1]"));
                }
                if self.coarse_factor == 0 || !self.n.is_multiple_of(self.coarse_factor) {
                    return Err(Error::invalid("coarse_factor", "must divide n"));
                }
                if self.boundary != BoundaryDescriptor::Periodic {
                    return Err(Error::Unsupported("lattice runs are periodic".into()));
                }
            }
            ModelKind::Compartment => {
                if !self.params.satisfies_cfl() || !self.params.jump_probabilities_bounded() {
                    return Err(Error::invalid(
                        "alpha",
                        "alpha * max(1 + 2 gamma0, 2 gamma0 + gamma1 + gamma2) must not exceed 1",
                    ));
                }
                if self.boundary != BoundaryDescriptor::Periodic {
                    return Err(Error::Unsupported("compartment runs are periodic".into()));
                }
                if self.refinement_levels.iter().any(|&n| n < 4) {
                    return Err(Error::invalid("refinement_levels", "every level needs n >= 4"));
                }
                if !self.refinement_levels.is_empty() && self.refinement_levels.len() < 2 {
                    return Err(Error::invalid("refinement_levels", "need at least two levels"));
                }
                if self.oracle_refine == 0 {
                    return Err(Error::invalid("oracle_refine", "must be positive"));
                }
            }
            ModelKind::Pde2d | ModelKind::Pde1d => {
                if !(self.t_end > 0.0) || !self.t_end.is_finite() {
                    return Err(Error::invalid("t_end", "must be positive"));
                }
                if !(self.sample_interval > 0.0) {
                    return Err(Error::invalid("sample_interval", "must be positive"));
                }
                if let Some(dt) = self.pde_dt {
                    if !(dt > 0.0) {
                        return Err(Error::invalid("pde_dt", "must be positive"));
                    }
                }
                if self.mode == PdeMode::Hyperbolic && self.boundary != BoundaryDescriptor::Periodic {
                    return Err(Error::Unsupported(
                        "mixed boundaries need the parabolic mode".into(),
                    ));
                }
            }
        }
        if !simplex {
            return Err(Error::invalid("r_inf", "(r_inf, b_inf) must lie in the density simplex"));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::invalid("amplitude", "must be nonnegative"));
        }
        let one_d = self.model == ModelKind::Pde1d;
        if (one_d && self.perturbation.is_2d()) || (!one_d && self.perturbation.is_1d()) {
            return Err(Error::invalid("perturbation", "shape does not match the model dimension"));
        }
        self.grid()?;
        Ok(())
    }

    /// Parses a config text; `line` numbers in errors are 1-based.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Scenario::default();
        let mut lines: HashMap<String, usize> = HashMap::new();
        let (mut h_set, mut dt_set) = (false, false);
        let mut inflow = 0.1;
        let mut outflux = 0.8;
        let mut boundary = "periodic".to_string();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key == "preset" {
                if !lines.is_empty() {
                    return Err(Error::Config {
                        line,
                        message: "`preset` must come before every other key".into(),
                    });
                }
                s = preset(value).map_err(|e| Error::Config {
                    line,
                    message: e.to_string(),
                })?;
                h_set = true;
                dt_set = true;
                if let BoundaryDescriptor::Mixed { inflow: i, outflux: o } = s.boundary {
                    boundary = "mixed".into();
                    inflow = i;
                    outflux = o;
                }
                lines.insert(key.into(), line);
                continue;
            }
            if !KEYS.contains(&key) {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key `{key}`"),
                });
            }
            if let Some(prev) = lines.insert(key.into(), line) {
                return Err(Error::Config {
                    line,
                    message: format!("`{key}` already set on line {prev}"),
                });
            }
            let p = &mut s.params;
            match key {
                "name" => s.name = value.to_string(),
                "model" => s.model = parse_value(line, key, value)?,
                "alpha" => p.alpha = parse_value(line, key, value)?,
                "gamma0" => p.gamma0 = parse_value(line, key, value)?,
                "gamma1" => p.gamma1 = parse_value(line, key, value)?,
                "gamma2" => p.gamma2 = parse_value(line, key, value)?,
                "epsilon" => p.epsilon = parse_value(line, key, value)?,
                "h" => {
                    p.h = parse_value(line, key, value)?;
                    h_set = true;
                }
                "dt" => {
                    p.dt = parse_value(line, key, value)?;
                    dt_set = true;
                }
                "n" => s.n = parse_value(line, key, value)?,
                "boundary" => {
                    if value != "periodic" && value != "mixed" {
                        return Err(Error::Config {
                            line,
                            message: format!("unknown boundary `{value}` (periodic|mixed)"),
                        });
                    }
                    boundary = value.to_string();
                }
                "inflow" => inflow = parse_value(line, key, value)?,
                "outflux" => outflux = parse_value(line, key, value)?,
                "r_inf" => s.r_inf = parse_value(line, key, value)?,
                "b_inf" => s.b_inf = parse_value(line, key, value)?,
                "perturbation" => s.perturbation = parse_value(line, key, value)?,
                "amplitude" => s.amplitude = parse_value(line, key, value)?,
                "rho_total" => s.rho_total = parse_value(line, key, value)?,
                "red_fraction" => s.red_fraction = parse_value(line, key, value)?,
                "seed" => s.seed = parse_value(line, key, value)?,
                "t_end" => s.t_end = parse_value(line, key, value)?,
                "steps" => s.steps = parse_value(line, key, value)?,
                "sample_interval" => s.sample_interval = parse_value(line, key, value)?,
                "sample_every" => s.sample_every = parse_value(line, key, value)?,
                "snapshots_every" => s.snapshots_every = parse_value(line, key, value)?,
                "mode" => s.mode = parse_value(line, key, value)?,
                "advection" => s.advection = parse_value(line, key, value)?,
                "pde_dt" => {
                    s.pde_dt = match value {
                        "auto" => None,
                        v => Some(parse_value(line, key, v)?),
                    }
                }
                "scheduler" => s.scheduler = parse_value(line, key, value)?,
                "coarse_factor" => s.coarse_factor = parse_value(line, key, value)?,
                "resolution" => s.resolution = parse_value(line, key, value)?,
                "method" => s.method = parse_value(line, key, value)?,
                "refinement_levels" => {
                    s.refinement_levels = if value.is_empty() {
                        Vec::new()
                    } else {
                        value
                            .split(',')
                            .map(|v| parse_value(line, key, v.trim()))
                            .collect::<Result<_>>()?
                    }
                }
                "oracle_refine" => s.oracle_refine = parse_value(line, key, value)?,
                "out_dir" => s.out_dir = Some(PathBuf::from(value)),
                _ => unreachable!("key list and match arms agree"),
            }
        }
        s.boundary = if boundary == "mixed" {
            BoundaryDescriptor::Mixed { inflow, outflux }
        } else {
            BoundaryDescriptor::Periodic
        };
        // derived defaults follow n and alpha unless set explicitly
        let keyed = |k: &str| lines.contains_key(k);
        if !h_set || (keyed("n") && !keyed("h")) {
            s.params.h = 1.0 / s.n as f64;
        }
        if !dt_set || ((keyed("n") || keyed("alpha") || keyed("h")) && !keyed("dt")) {
            s.params.dt = s.params.alpha * s.params.h;
        }
        s.validate().map_err(|e| {
            let line = match &e {
                Error::InvalidParameter { name, .. } => lines.get(*name).copied().unwrap_or(0),
                _ => 0,
            };
            Error::Config {
                line,
                message: e.to_string(),
            }
        })?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Writes every key; [`Scenario::parse`] returns an equal scenario.
    pub fn to_config(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("name", self.name.clone());
        put("model", self.model.to_string());
        put("alpha", p.alpha.to_string());
        put("gamma0", p.gamma0.to_string());
        put("gamma1", p.gamma1.to_string());
        put("gamma2", p.gamma2.to_string());
        put("epsilon", p.epsilon.to_string());
        put("h", p.h.to_string());
        put("dt", p.dt.to_string());
        put("n", self.n.to_string());
        match self.boundary {
            BoundaryDescriptor::Periodic => put("boundary", "periodic".into()),
            BoundaryDescriptor::Mixed { inflow, outflux } => {
                put("boundary", "mixed".into());
                put("inflow", inflow.to_string());
                put("outflux", outflux.to_string());
            }
        }
        put("r_inf", self.r_inf.to_string());
        put("b_inf", self.b_inf.to_string());
        put("perturbation", self.perturbation.to_string());
        put("amplitude", self.amplitude.to_string());
        put("rho_total", self.rho_total.to_string());
        put("red_fraction", self.red_fraction.to_string());
        put("seed", self.seed.to_string());
        put("t_end", self.t_end.to_string());
        put("steps", self.steps.to_string());
        put("sample_interval", self.sample_interval.to_string());
        put("sample_every", self.sample_every.to_string());
        put("snapshots_every", self.snapshots_every.to_string());
        put("mode", self.mode.to_string());
        put("advection", self.advection.to_string());
        put(
            "pde_dt",
            self.pde_dt.map_or_else(|| "auto".into(), |v| v.to_string()),
        );
        put("scheduler", self.scheduler.to_string());
        put("coarse_factor", self.coarse_factor.to_string());
        put("resolution", self.resolution.to_string());
        put("method", self.method.to_string());
        put(
            "refinement_levels",
            self.refinement_levels
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("oracle_refine", self.oracle_refine.to_string());
        if let Some(dir) = &self.out_dir {
            put("out_dir", dir.display().to_string());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_line_sets_the_base() {
        let s = Scenario::parse("preset = ex2d_periodic\n").unwrap();
        assert_eq!(s.params.gamma0, 0.2);
        assert_eq!(s.params.gamma1, 0.15);
        assert_eq!(s.params.gamma2, 0.1);
        assert_eq!(s.params.epsilon, 0.05);
        assert_eq!((s.r_inf, s.b_inf, s.t_end), (0.4, 0.4, 20.0));
    }

    #[test]
    fn overrides_and_comments() {
        let text = "# waves with a different seed\npreset = particle_waves\nseed = 7 # trailing\n\nsteps=20\n";
        let s = Scenario::parse(text).unwrap();
        assert_eq!(s.seed, 7);
        assert_eq!(s.steps, 20);
        assert_eq!(s.params.alpha, 1.0);
    }

    #[test]
    fn negative_rate_names_the_invariant() {
        let err = Scenario::parse("preset = ex2d_periodic\n\ngamma0 = -1\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{msg}");
        assert!(msg.contains("gamma0") && msg.contains("nonnegative"), "{msg}");
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let err = Scenario::parse("model = pde1d\nperturbation = sin\ngamma3 = 0.1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("gamma3"));
    }

    #[test]
    fn malformed_lines_are_rejected() {
        for (text, line) in [
            ("model = pde2d\nnonsense\n", 2),
            ("n = ten\n", 1),
            ("n = 8\nn = 9\n", 2),
            ("n = 8\npreset = ex2d_periodic\n", 2),
            ("preset = nope\n", 1),
            ("model = blob\n", 1),
        ] {
            match Scenario::parse(text) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn derived_h_and_dt_follow_n_and_alpha() {
        let s = Scenario::parse("model = compartment\nperturbation = full_wave\nn = 32\nalpha = 0.4\n").unwrap();
        assert_eq!(s.params.h, 1.0 / 32.0);
        assert_eq!(s.params.dt, 0.4 / 32.0);
    }

    #[test]
    fn round_trip_of_a_custom_scenario() {
        let mut s = Scenario::parse("preset = ex2d_mixed_b\n").unwrap();
        s.pde_dt = Some(0.001);
        s.refinement_levels = vec![8, 16];
        s.out_dir = Some("runs/b".into());
        let back = Scenario::parse(&s.to_config()).unwrap();
        assert_eq!(back, s);
    }
}

//! Deterministic compartment dynamics on a periodic square.
//!
//! Each cell holds occupied fractions `r` and `b`; in one time step a
//! fraction of each species leaves every cell with the lattice jump rates
//! evaluated on the old state. The red update is written in the frame
//! `(forward, lateral) = (i, j)`; blue reuses it on transposed arrays, so the
//! swap-transpose symmetry holds bit for bit.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{entropy_2d, DiagnosticsSample, DiagnosticsSeries, EntropyConfig};
use crate::error::{Error, Result};
use crate::field::{DensityField2D, Field2};
use crate::params::{Grid, ModelParams};

/// Tolerance on `[0, 1]` beyond which a step aborts.
pub const BOX_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompartmentState {
    pub r: Field2,
    pub b: Field2,
    pub t: f64,
}

impl CompartmentState {
    pub fn new(r: Field2, b: Field2) -> Result<Self> {
        if r.n() != b.n() {
            return Err(Error::invalid("b", "size differs from r"));
        }
        let s = Self { r, b, t: 0.0 };
        s.check_box(0.0)?;
        Ok(s)
    }

    /// Samples `f(x, y) -> (r, b)` at the cell centers of the unit square.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let grid = Grid::periodic_2d(n)?;
        let d = DensityField2D::from_fn(grid, f)?;
        Self::new(d.r, d.b)
    }

    pub fn n(&self) -> usize {
        self.r.n()
    }

    pub fn swap_transposed(&self) -> Self {
        Self {
            r: self.b.transpose(),
            b: self.r.transpose(),
            t: self.t,
        }
    }

    /// View as a density field on the periodic unit square.
    pub fn to_density(&self) -> Result<DensityField2D> {
        let mut d = DensityField2D::new(Grid::periodic_2d(self.n())?, self.r.clone(), self.b.clone())?;
        d.t = self.t;
        Ok(d)
    }

    fn check_box(&self, t: f64) -> Result<()> {
        for (k, (&r, &b)) in self.r.as_slice().iter().zip(self.b.as_slice()).enumerate() {
            let bad = r < -BOX_TOL || b < -BOX_TOL || r > 1.0 + BOX_TOL || b > 1.0 + BOX_TOL || r + b > 1.0 + BOX_TOL;
            if bad || !r.is_finite() || !b.is_finite() {
                let n = self.n();
                return Err(Error::abort(
                    t,
                    format!("cell ({}, {}) left the box: r = {r}, b = {b}", k % n, k / n),
                ));
            }
        }
        Ok(())
    }
}

/// One update of `q` (walking towards `+f`) in the presence of `p`, both
/// indexed `(f, l)`.
fn update_species(q: &Field2, p: &Field2, params: &ModelParams) -> Field2 {
    let a = params.alpha;
    let vac = |f: isize, l: isize| 1.0 - q.wrap(f, l) - p.wrap(f, l);
    // outgoing fractions (forward, lateral -1, lateral +1) of cell (f, l)
    let out = |f: isize, l: isize| {
        let blocked = p.wrap(f + 1, l);
        let qv = q.wrap(f, l);
        (
            a * vac(f + 1, l) * qv,
            a * vac(f, l - 1) * (params.gamma0 + params.gamma1 * blocked) * qv,
            a * vac(f, l + 1) * (params.gamma0 + params.gamma2 * blocked) * qv,
        )
    };
    Field2::from_fn(q.n(), |f, l| {
        let (f, l) = (f as isize, l as isize);
        let (fwd, minus, plus) = out(f, l);
        let from_back = out(f - 1, l).0;
        let from_above = out(f, l + 1).1;
        let from_below = out(f, l - 1).2;
        q.wrap(f, l) - (fwd + minus + plus) + (from_back + from_above + from_below)
    })
}

fn raw_step(s: &CompartmentState, params: &ModelParams) -> (Field2, Field2) {
    let r = update_species(&s.r, &s.b, params);
    let b = update_species(&s.b.transpose(), &s.r.transpose(), params).transpose();
    (r, b)
}

/// Advances the compartment state by one step `dt = params.dt`.
pub fn compartment_step(s: &CompartmentState, params: &ModelParams) -> Result<CompartmentState> {
    if !params.satisfies_cfl() {
        return Err(Error::invalid(
            "alpha",
            "alpha * max(1, 2 gamma0 + gamma1 + gamma2) must not exceed 1",
        ));
    }
    let (r, b) = raw_step(s, params);
    let next = CompartmentState {
        r,
        b,
        t: s.t + params.dt,
    };
    next.check_box(next.t)?;
    Ok(next)
}

fn sample(s: &CompartmentState, params: &ModelParams) -> Result<DiagnosticsSample> {
    let d = s.to_density()?;
    let (mass_r, mass_b) = d.masses();
    Ok(DiagnosticsSample {
        t: s.t,
        mass_r,
        mass_b,
        entropy: Some(entropy_2d(&d, &EntropyConfig::with_epsilon(params.epsilon))),
        ..DiagnosticsSample::default()
    })
}

/// Applies `steps` updates, sampling every `sample_every` steps (and at the
/// start and end) and passing each sampled state to `observer`.
pub fn run_compartment(
    initial: CompartmentState,
    params: &ModelParams,
    steps: u64,
    sample_every: u64,
    mut observer: impl FnMut(&CompartmentState),
) -> Result<(CompartmentState, DiagnosticsSeries)> {
    let mut series = DiagnosticsSeries::default();
    let mut state = initial;
    series.push(sample(&state, params)?)?;
    observer(&state);
    for k in 1..=steps {
        state = compartment_step(&state, params)?;
        if (sample_every > 0 && k % sample_every == 0) || k == steps {
            series.push(sample(&state, params)?)?;
            observer(&state);
        }
    }
    Ok((state, series))
}

//! Counterflow on a periodic line: red walks towards `+x`, blue towards
//! `-x`.
//!
//! The `(r, b)` solver is a conservative finite-volume scheme with the same
//! face rules as the 2D solver; blue is handled by running the red update on
//! mirrored arrays, which makes the reflection symmetry exact. A separate
//! solver for the `(xi, eta)` formulation uses a Rusanov flux and serves as
//! an independent cross-check.

use num_complex::Complex64;

use crate::diagnostics::{entropy_1d, lyapunov_relative, DiagnosticsSample, DiagnosticsSeries, EntropyConfig};
use crate::error::{Error, Result};
use crate::field::{DensityField1D, XiEtaField};
use crate::params::ModelParams;
use crate::pde2d::{Advection, PdeMode, CLAMP_TOL, C_SAFE};
use crate::stability::{classify_hyperbolic_1d, spectral_radius_c, EquilibriumPoint};

#[inline]
fn wrap(v: &[f64], k: isize) -> f64 {
    v[k.rem_euclid(v.len() as isize) as usize]
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Time derivative of `q` (walking towards `+x`) with partner `p`.
fn species_rhs(q: &[f64], p: &[f64], h: f64, params: &ModelParams, mode: PdeMode, adv: Advection) -> Vec<f64> {
    let n = q.len();
    let eps = if mode == PdeMode::Parabolic { params.epsilon } else { 0.0 };
    // flux through the face left of cell k, k = 0..=n
    let flux: Vec<f64> = (0..=n as isize)
        .map(|k| {
            let (qa, qc) = (wrap(q, k - 1), wrap(q, k));
            let (pa, pc) = (wrap(p, k - 1), wrap(p, k));
            let vac = 1.0 - 0.5 * (qa + pa + qc + pc);
            let q_face = match (adv, vac >= 0.0) {
                (Advection::Upwind, true) => qa,
                (Advection::Upwind, false) => qc,
                (Advection::Muscl, true) => qa + 0.5 * minmod(qa - wrap(q, k - 2), qc - qa),
                (Advection::Muscl, false) => qc - 0.5 * minmod(qc - qa, wrap(q, k + 1) - qc),
            };
            let mut f = vac * q_face;
            if eps > 0.0 {
                let (qm, pm) = (0.5 * (qa + qc), 0.5 * (pa + pc));
                f -= eps * ((1.0 - pm) * (qc - qa) + qm * (pc - pa)) / h;
            }
            f
        })
        .collect();
    (0..n).map(|k| -(flux[k + 1] - flux[k]) / h).collect()
}

fn reversed(v: &[f64]) -> Vec<f64> {
    v.iter().rev().copied().collect()
}

fn rhs(s: &DensityField1D, p: &ModelParams, mode: PdeMode, adv: Advection) -> (Vec<f64>, Vec<f64>) {
    let h = s.grid.h();
    let kr = species_rhs(&s.r, &s.b, h, p, mode, adv);
    let kb = reversed(&species_rhs(&reversed(&s.b), &reversed(&s.r), h, p, mode, adv));
    (kr, kb)
}

/// Largest stable step: `C_SAFE * min(h / S, h^2 / (2 eps))` with `S` the
/// largest characteristic speed over the cells.
pub fn dt_stable_1d(s: &DensityField1D, p: &ModelParams, mode: PdeMode) -> f64 {
    let h = s.grid.h();
    let speed = s
        .r
        .iter()
        .zip(&s.b)
        .map(|(&r, &b)| spectral_radius_c(r, b))
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut dt = h / speed;
    if mode == PdeMode::Parabolic && p.epsilon > 0.0 {
        dt = dt.min(h * h / (2.0 * p.epsilon));
    }
    C_SAFE * dt
}

fn admit(v: &mut [f64], t: f64, name: &str, clamped: &mut usize) -> Result<()> {
    for x in v.iter_mut() {
        if !x.is_finite() {
            return Err(Error::abort(t, format!("{name} is not finite")));
        }
        if *x < 0.0 {
            if *x < -CLAMP_TOL {
                return Err(Error::abort(t, format!("{name} = {x} below zero")));
            }
            *x = 0.0;
            *clamped += 1;
        } else if *x > 1.0 + CLAMP_TOL {
            return Err(Error::abort(t, format!("{name} = {x} above one")));
        }
    }
    Ok(())
}

/// One midpoint step with upwind advection; returns the new state and the
/// number of clamped undershoots.
pub fn step_1d(s: &DensityField1D, p: &ModelParams, mode: PdeMode, dt: f64) -> Result<(DensityField1D, usize)> {
    step_1d_with(s, p, mode, Advection::Upwind, dt)
}

pub fn step_1d_with(
    s: &DensityField1D,
    p: &ModelParams,
    mode: PdeMode,
    adv: Advection,
    dt: f64,
) -> Result<(DensityField1D, usize)> {
    let axpy = |a: &[f64], c: f64, k: &[f64]| -> Vec<f64> { a.iter().zip(k).map(|(x, y)| x + c * y).collect() };
    let (kr, kb) = rhs(s, p, mode, adv);
    let mid = DensityField1D {
        grid: s.grid,
        r: axpy(&s.r, 0.5 * dt, &kr),
        b: axpy(&s.b, 0.5 * dt, &kb),
        t: s.t + 0.5 * dt,
    };
    let (kr, kb) = rhs(&mid, p, mode, adv);
    let t = s.t + dt;
    let mut next = DensityField1D {
        grid: s.grid,
        r: axpy(&s.r, dt, &kr),
        b: axpy(&s.b, dt, &kb),
        t,
    };
    let mut clamped = 0;
    admit(&mut next.r, t, "r", &mut clamped)?;
    admit(&mut next.b, t, "b", &mut clamped)?;
    if let Some(k) = (0..next.r.len()).find(|&k| next.r[k] + next.b[k] > 1.0 + CLAMP_TOL) {
        return Err(Error::abort(
            t,
            format!("total density {} above one in cell {k}", next.r[k] + next.b[k]),
        ));
    }
    Ok((next, clamped))
}

/// Residuals of the zero-flux stationary equations, with central
/// differences.
pub fn stationary_residual(s: &DensityField1D, p: &ModelParams) -> (Vec<f64>, Vec<f64>) {
    let n = s.r.len() as isize;
    let h = s.grid.h();
    let eps = p.epsilon;
    let (mut res_r, mut res_b) = (Vec::new(), Vec::new());
    for k in 0..n {
        let (r, b) = (s.r[k as usize], s.b[k as usize]);
        let dr = (wrap(&s.r, k + 1) - wrap(&s.r, k - 1)) / (2.0 * h);
        let db = (wrap(&s.b, k + 1) - wrap(&s.b, k - 1)) / (2.0 * h);
        let vac = 1.0 - r - b;
        res_r.push(-vac * r + eps * ((1.0 - b) * dr + r * db));
        res_b.push(vac * b + eps * ((1.0 - r) * db + b * dr));
    }
    (res_r, res_b)
}

/// One midpoint step of the `(xi, eta)` system on the unit periodic line,
/// with a Rusanov flux for the first-order part and central differences for
/// the diffusive part.
pub fn step_xi_eta(x: &XiEtaField, p: &ModelParams, dt: f64) -> XiEtaField {
    let rhs = |x: &XiEtaField| -> (Vec<f64>, Vec<f64>) {
        let n = x.len();
        let h = 1.0 / n as f64;
        let eps = p.epsilon;
        let speed = |xi: f64, eta: f64| spectral_radius_c(0.5 * (1.0 - xi + eta), 0.5 * (1.0 - xi - eta));
        let (mut fx, mut fe) = (Vec::with_capacity(n + 1), Vec::with_capacity(n + 1));
        for k in 0..=n as isize {
            let (xa, xc) = (wrap(&x.xi, k - 1), wrap(&x.xi, k));
            let (ea, ec) = (wrap(&x.eta, k - 1), wrap(&x.eta, k));
            let a = speed(xa, ea).max(speed(xc, ec));
            // physical fluxes: F_xi = -eta xi, F_eta = xi (1 - xi)
            let f_xi = 0.5 * (-ea * xa - ec * xc) - 0.5 * a * (xc - xa);
            let f_eta = 0.5 * (xa * (1.0 - xa) + xc * (1.0 - xc)) - 0.5 * a * (ec - ea);
            let (xm, em) = (0.5 * (xa + xc), 0.5 * (ea + ec));
            fx.push(f_xi - eps * (xc - xa) / h);
            fe.push(f_eta - eps * (xm * (ec - ea) - em * (xc - xa)) / h);
        }
        (
            (0..n).map(|k| -(fx[k + 1] - fx[k]) / h).collect(),
            (0..n).map(|k| -(fe[k + 1] - fe[k]) / h).collect(),
        )
    };
    let axpy = |a: &[f64], c: f64, k: &[f64]| -> Vec<f64> { a.iter().zip(k).map(|(x, y)| x + c * y).collect() };
    let (kx, ke) = rhs(x);
    let mid = XiEtaField {
        xi: axpy(&x.xi, 0.5 * dt, &kx),
        eta: axpy(&x.eta, 0.5 * dt, &ke),
    };
    let (kx, ke) = rhs(&mid);
    XiEtaField {
        xi: axpy(&x.xi, dt, &kx),
        eta: axpy(&x.eta, dt, &ke),
    }
}

/// Modulus of the `k`-th discrete Fourier coefficient of `v - mean`,
/// normalized so that `mean + a sin(2 pi k x)` gives `a`.
pub fn fourier_amplitude(v: &[f64], mean: f64, k: usize) -> f64 {
    let n = v.len();
    let w = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
    let c: Complex64 = v
        .iter()
        .enumerate()
        .map(|(j, &x)| Complex64::from_polar(x - mean, w * j as f64))
        .sum();
    2.0 * c.norm() / n as f64
}

/// Exponential rate fitted by least squares to `ln(values)` over the
/// samples whose ratio to `values[0]` lies in `[lo, hi]`. Only the first
/// contiguous run of such samples is used. `None` with fewer than three.
pub fn window_rate(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let v0 = *values.first()?;
    let start = values.iter().position(|&v| (lo..=hi).contains(&(v / v0)))?;
    let len = values[start..]
        .iter()
        .take_while(|&&v| (lo..=hi).contains(&(v / v0)))
        .count();
    if len < 3 {
        return None;
    }
    let t = &times[start..start + len];
    let y: Vec<f64> = values[start..start + len].iter().map(|v| v.ln()).collect();
    let m = len as f64;
    let tm = t.iter().sum::<f64>() / m;
    let ym = y.iter().sum::<f64>() / m;
    let sxy: f64 = t.iter().zip(&y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let sxx: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Run1dOptions {
    pub t_end: f64,
    pub sample_interval: f64,
    pub dt: Option<f64>,
    pub advection: Advection,
    /// Reference state for the perturbation norm and Lyapunov columns.
    pub equilibrium: Option<EquilibriumPoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Run1dOutput {
    pub last: DensityField1D,
    pub series: DiagnosticsSeries,
    pub steps: u64,
    pub clamped: usize,
    /// Set when a hyperbolic run visited states with complex
    /// characteristic speeds.
    pub entered_elliptic: bool,
}

fn sample_1d(s: &DensityField1D, p: &ModelParams, eq: Option<EquilibriumPoint>) -> DiagnosticsSample {
    let (mass_r, mass_b) = s.masses();
    let x = s.to_xi_eta();
    let cfg = EntropyConfig::with_epsilon(p.epsilon);
    DiagnosticsSample {
        t: s.t,
        mass_r,
        mass_b,
        entropy: Some(entropy_1d(&x)),
        lyapunov: eq.map(|q| lyapunov_relative(&x, 1.0 - q.r - q.b, q.r - q.b, &cfg)),
        pert_l2: eq.map(|q| s.l2_distance_to(q.r, q.b)),
        ..DiagnosticsSample::default()
    }
}

/// Integrates to `options.t_end`, sampling at every multiple of
/// `sample_interval` and at the end.
pub fn run_1d(
    initial: DensityField1D,
    p: &ModelParams,
    mode: PdeMode,
    options: Run1dOptions,
    mut observer: impl FnMut(&DensityField1D),
) -> Result<Run1dOutput> {
    p.validate()?;
    if !(options.sample_interval > 0.0) || !(options.t_end >= 0.0) {
        return Err(Error::invalid("sample_interval", "times must be positive"));
    }
    let eq = options.equilibrium;
    let t0 = initial.t;
    let t_final = t0 + options.t_end;
    let mut state = initial;
    let mut series = DiagnosticsSeries::default();
    series.push(sample_1d(&state, p, eq))?;
    observer(&state);
    let (mut steps, mut clamped, mut entered_elliptic) = (0u64, 0usize, false);
    let mut k = 1u64;
    while state.t < t_final {
        let target = (t0 + k as f64 * options.sample_interval).min(t_final);
        while state.t < target {
            if mode == PdeMode::Hyperbolic && !entered_elliptic {
                entered_elliptic = state
                    .r
                    .iter()
                    .zip(&state.b)
                    .any(|(&r, &b)| !classify_hyperbolic_1d(&EquilibriumPoint { r, b }));
            }
            let limit = options.dt.unwrap_or_else(|| dt_stable_1d(&state, p, mode));
            let remaining = target - state.t;
            let last = remaining <= limit * (1.0 + 1e-9);
            let dt = if last { remaining } else { limit };
            let (next, c) = step_1d_with(&state, p, mode, options.advection, dt)?;
            state = next;
            if last {
                state.t = target;
            }
            steps += 1;
            clamped += c;
        }
        series.push(sample_1d(&state, p, eq))?;
        observer(&state);
        k += 1;
    }
    Ok(Run1dOutput {
        last: state,
        series,
        steps,
        clamped,
        entered_elliptic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Grid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(epsilon: f64) -> ModelParams {
        ModelParams {
            epsilon,
            ..ModelParams::default()
        }
    }

    fn field(n: usize, f: impl Fn(f64) -> (f64, f64)) -> DensityField1D {
        DensityField1D::from_fn(Grid::periodic_1d(n).unwrap(), f).unwrap()
    }

    #[test]
    fn uniform_state_is_fixed() {
        let s = field(20, |_| (0.3, 0.45));
        for mode in [PdeMode::Hyperbolic, PdeMode::Parabolic] {
            let (next, _) = step_1d(&s, &params(0.01), mode, 0.001).unwrap();
            for k in 0..20 {
                assert_abs_diff_eq!(next.r[k], 0.3, epsilon = 1e-15);
                assert_abs_diff_eq!(next.b[k], 0.45, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn stationary_residual_examples() {
        let p = params(0.01);
        let (rr, rb) = stationary_residual(&field(8, |_| (0.3, 0.2)), &p);
        assert_abs_diff_eq!(rr[3], -0.5 * 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(rb[3], 0.5 * 0.2, epsilon = 1e-15);
        let (rr, rb) = stationary_residual(&field(8, |_| (0.0, 0.0)), &p);
        assert!(rr.iter().chain(&rb).all(|&v| v == 0.0));

        // both densities increasing on the middle of the line: for the red
        // residual to vanish eps (...) = (1 - rho) r > 0, which forces the
        // blue residual to be strictly positive
        let s = field(200, |x| (0.2 + 0.1 * (PI * x).sin().powi(2), 0.15 + 0.05 * (PI * x).sin().powi(2)));
        let (rr, rb) = stationary_residual(&s, &p);
        for k in 10..90 {
            assert!(rr[k].abs() > 1e-6 || rb[k].abs() > 1e-6);
            assert!(rb[k] > 0.0);
        }
    }

    #[test]
    fn xi_eta_examples() {
        let g = Grid::periodic_1d(2).unwrap();
        let x = DensityField1D::new(g, vec![0.4, 0.85], vec![0.4, 0.1]).unwrap().to_xi_eta();
        assert_abs_diff_eq!(x.xi[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(x.eta[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.xi[1], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(x.eta[1], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn fourier_amplitude_recovers_sine() {
        let v: Vec<f64> = (0..64).map(|j| 0.3 + 0.02 * (2.0 * PI * 3.0 * (j as f64 + 0.5) / 64.0).sin()).collect();
        assert_abs_diff_eq!(fourier_amplitude(&v, 0.3, 3), 0.02, epsilon = 1e-14);
        assert!(fourier_amplitude(&v, 0.3, 2) < 1e-14);
    }

    #[test]
    fn window_rate_of_exponential() {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|t| 2.0 * (0.7 * t).exp()).collect();
        assert_abs_diff_eq!(window_rate(&t, &v, 1.5, 5.0).unwrap(), 0.7, epsilon = 1e-12);
        assert!(window_rate(&t, &v, 0.2, 0.7).is_none());
    }

    #[test]
    fn xi_eta_solver_matches_density_solver() {
        // equivalence up to O(h): the gap shrinks when the grid is refined
        let p = params(0.02);
        let gap = |n: usize| {
            let s = field(n, |x| (0.3 + 0.05 * (2.0 * PI * x).sin(), 0.25 + 0.03 * (2.0 * PI * x).cos()));
            let mut x = s.to_xi_eta();
            let mut d = s;
            let h = 1.0 / n as f64;
            let steps = (0.2 / (0.2 * h * h / p.epsilon)).ceil() as usize;
            let dt = 0.2 / steps as f64;
            for _ in 0..steps {
                d = step_1d(&d, &p, PdeMode::Parabolic, dt).unwrap().0;
                x = step_xi_eta(&x, &p, dt);
            }
            let y = d.to_xi_eta();
            x.xi.iter().zip(&y.xi).chain(x.eta.iter().zip(&y.eta)).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64
        };
        let (coarse, fine) = (gap(50), gap(200));
        assert!(fine < 0.5 * coarse, "{coarse} -> {fine}");
        assert!(coarse < 0.01);
    }

    fn arb_state(n: usize) -> impl Strategy<Value = DensityField1D> {
        prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), n).prop_map(move |v| {
            let r = v.iter().map(|t| t.0 * t.1).collect();
            let b = v.iter().map(|t| t.0 * (1.0 - t.1)).collect();
            DensityField1D::new(Grid::periodic_1d(n).unwrap(), r, b).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn rhs_conserves_and_mirrors(s in arb_state(17), parabolic in any::<bool>(), muscl in any::<bool>()) {
            let mode = if parabolic { PdeMode::Parabolic } else { PdeMode::Hyperbolic };
            let adv = if muscl { Advection::Muscl } else { Advection::Upwind };
            let p = params(0.01);
            let (kr, kb) = rhs(&s, &p, mode, adv);
            let scale = kr.iter().chain(&kb).map(|v| v.abs()).sum::<f64>().max(1.0);
            prop_assert!(kr.iter().sum::<f64>().abs() <= 1e-12 * scale);
            prop_assert!(kb.iter().sum::<f64>().abs() <= 1e-12 * scale);

            let m = DensityField1D { grid: s.grid, r: reversed(&s.b), b: reversed(&s.r), t: 0.0 };
            let (mr, mb) = rhs(&m, &p, mode, adv);
            prop_assert_eq!(mr, reversed(&kb));
            prop_assert_eq!(mb, reversed(&kr));
        }

        #[test]
        fn xi_eta_round_trip(s in arb_state(12)) {
            let back = DensityField1D::from_xi_eta(s.grid, &s.to_xi_eta()).unwrap();
            for k in 0..12 {
                prop_assert!((back.r[k] - s.r[k]).abs() <= 1e-15);
                prop_assert!((back.b[k] - s.b[k]).abs() <= 1e-15);
            }
        }
    }
}

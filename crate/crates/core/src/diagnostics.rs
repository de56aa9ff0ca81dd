//! Entropy functionals, Lyapunov functionals and pattern observables.
//!
//! Potentials are `V_r(x, y) = -x` and `V_b(x, y) = -y`. Every integral is a
//! midpoint rule over cell centers.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{DensityField2D, Field2, XiEtaField};
use crate::lattice::{Cell, LatticeState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyConfig {
    pub epsilon: f64,
    /// Lower bound applied to arguments of logarithms only.
    pub log_floor: f64,
    /// Young-inequality parameter; the Lyapunov estimate needs
    /// `xi >= 1/2 + 1/(4 delta)`.
    pub delta: f64,
    /// Weight of the gradient term in [`lyapunov_relative`].
    pub alpha_lyap: f64,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            log_floor: 1e-12,
            delta: 2.0,
            alpha_lyap: 1.0,
        }
    }
}

impl EntropyConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.log_floor > 0.0) {
            return Err(Error::invalid("log_floor", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta <= 2.0) {
            return Err(Error::invalid("delta", format!("must lie in (0, 2], got {}", self.delta)));
        }
        Ok(())
    }

    /// Smallest equilibrium vacancy for which the Lyapunov estimate holds.
    pub fn xi_threshold(&self) -> f64 {
        0.5 + 0.25 / self.delta
    }

    #[inline]
    fn ln(&self, z: f64) -> f64 {
        z.max(self.log_floor).ln()
    }

    /// `z (log z - 1)`, zero at `z = 0`.
    #[inline]
    fn phi(&self, z: f64) -> f64 {
        z * (self.ln(z) - 1.0)
    }
}

/// Entropy `E` of a 2D density state.
pub fn entropy_2d(s: &DensityField2D, cfg: &EntropyConfig) -> f64 {
    let n = s.grid.n;
    let eps = cfg.epsilon;
    let mut acc = 0.0;
    for j in 0..n {
        let y = s.grid.center(j);
        for i in 0..n {
            let x = s.grid.center(i);
            let r = s.r.get(i, j);
            let b = s.b.get(i, j);
            let vac = 1.0 - r - b;
            acc += eps * (cfg.phi(r) + cfg.phi(b) + 0.5 * cfg.phi(vac)) - r * x - b * y;
        }
    }
    acc * s.grid.cell_measure()
}

/// Entropy variables `(u, v)` at a single point.
pub fn entropy_variables_at(r: f64, b: f64, x: f64, y: f64, cfg: &EntropyConfig) -> (f64, f64) {
    let eps = cfg.epsilon;
    let vac = cfg.ln(1.0 - r - b);
    (
        eps * cfg.ln(r) - 0.5 * eps * vac - x,
        eps * cfg.ln(b) - 0.5 * eps * vac - y,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyVariables {
    pub u: Field2,
    pub v: Field2,
    /// Cells where `r`, `b` or `1 - rho` fell below the log floor.
    pub below_floor: Vec<(usize, usize)>,
}

pub fn entropy_variables(s: &DensityField2D, cfg: &EntropyConfig) -> EntropyVariables {
    let n = s.grid.n;
    let mut u = Field2::zeros(n);
    let mut v = Field2::zeros(n);
    let mut below_floor = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let r = s.r.get(i, j);
            let b = s.b.get(i, j);
            if r.min(b).min(1.0 - r - b) < cfg.log_floor {
                below_floor.push((i, j));
            }
            let (uu, vv) = entropy_variables_at(r, b, s.grid.center(i), s.grid.center(j), cfg);
            u.set(i, j, uu);
            v.set(i, j, vv);
        }
    }
    EntropyVariables { u, v, below_floor }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthSummary {
    /// Least-squares slope of the series against time.
    pub slope: f64,
    /// Largest increase between consecutive samples; zero if none.
    pub max_step_increase: f64,
}

/// Slope and largest single-step increase of `values` over `times`.
pub fn growth_summary(times: &[f64], values: &[f64]) -> Result<GrowthSummary> {
    if times.len() != values.len() || times.len() < 10 {
        return Err(Error::invalid("series", "need at least 10 paired samples"));
    }
    let n = times.len() as f64;
    let tm = times.iter().sum::<f64>() / n;
    let vm = values.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in times.iter().zip(values) {
        sxy += (t - tm) * (v - vm);
        sxx += (t - tm) * (t - tm);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let max_step_increase = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    Ok(GrowthSummary {
        slope,
        max_step_increase,
    })
}

/// [`growth_summary`] of the entropy column of a series.
pub fn monitor_entropy_growth(series: &DiagnosticsSeries) -> Result<GrowthSummary> {
    let (t, e): (Vec<f64>, Vec<f64>) = series
        .samples()
        .iter()
        .filter_map(|s| s.entropy.map(|e| (s.t, e)))
        .unzip();
    growth_summary(&t, &e)
}

/// Entropy `J` of a `(xi, eta)` state on the unit periodic line.
pub fn entropy_1d(x: &XiEtaField) -> f64 {
    let cfg = EntropyConfig::default();
    let h = 1.0 / x.len() as f64;
    x.xi
        .iter()
        .zip(&x.eta)
        .map(|(&xi, &eta)| 0.5 * (eta * eta - 2.0 * (cfg.phi(xi) + 1.0) + 2.0 * (1.0 - xi).powi(2)))
        .sum::<f64>()
        * h
}

/// Relative Lyapunov functional with respect to the constant state
/// `(xi_inf, eta_inf)` on the unit periodic line. The gradient term uses
/// differences across cell faces.
pub fn lyapunov_relative(x: &XiEtaField, xi_inf: f64, eta_inf: f64, cfg: &EntropyConfig) -> f64 {
    let n = x.len();
    let h = 1.0 / n as f64;
    let grad_w = cfg.alpha_lyap * cfg.epsilon * cfg.epsilon;
    let mut acc = 0.0;
    for k in 0..n {
        let xi = x.xi[k];
        let s = xi / xi_inf;
        let rel = xi_inf * (cfg.phi(s) + 1.0);
        let d = (x.xi[(k + 1) % n] - xi) / h;
        acc += 0.5 * ((x.eta[k] - eta_inf).powi(2) + grad_w * d * d - 2.0 * rel + 2.0 * (xi - xi_inf).powi(2));
    }
    acc * h
}

/// Fraction of periodic 4-neighbor occupied pairs holding the same species;
/// `None` without occupied pairs. Uniform random placement gives about 1/2
/// when both species are equally frequent.
pub fn segregation_index(state: &LatticeState) -> Option<f64> {
    let n = state.n();
    let (mut pairs, mut same) = (0u64, 0u64);
    for j in 0..n {
        for i in 0..n {
            let c = state.get(i, j);
            if c == Cell::Empty {
                continue;
            }
            for d in [state.get((i + 1) % n, j), state.get(i, (j + 1) % n)] {
                if d != Cell::Empty {
                    pairs += 1;
                    same += (d == c) as u64;
                }
            }
        }
    }
    (pairs > 0).then(|| same as f64 / pairs as f64)
}

fn dft_coefficient(field: &Field2, kx: usize, ky: usize) -> Complex64 {
    let n = field.n();
    let w = -2.0 * std::f64::consts::PI / n as f64;
    // twiddle tables keep the phase arguments small and exact modulo n
    let ex: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, w * ((kx * i) % n) as f64)).collect();
    let ey: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, w * ((ky * j) % n) as f64)).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, ey) in ey.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (i, ex) in ex.iter().enumerate() {
            row += ex * field.get(i, j);
        }
        acc += row * ey;
    }
    acc
}

/// Normalized difference `(P- - P+) / (P- + P+)` of Fourier power on the
/// modes `k_x = -k_y` (`P-`) and `k_x = k_y` (`P+`), excluding the mean.
/// Stripes along `x + y = const` give `-1`, stripes along `x - y = const`
/// give `+1`. Returns 0 when both sums are below `1e-14`.
pub fn diagonal_anisotropy(field: &Field2) -> f64 {
    let n = field.n();
    let (mut plus, mut minus) = (0.0, 0.0);
    for k in 1..n {
        plus += dft_coefficient(field, k, k).norm_sqr();
        minus += dft_coefficient(field, k, n - k).norm_sqr();
    }
    if plus < 1e-14 && minus < 1e-14 {
        return 0.0;
    }
    (minus - plus) / (minus + plus)
}

/// Strongest diagonal Fourier mode with `1 <= k_x <= n/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagonalMode {
    pub kx: usize,
    pub ky: usize,
    pub power: f64,
    /// Argument of the Fourier coefficient, in `(-pi, pi]`.
    pub phase: f64,
}

pub fn dominant_diagonal_mode(field: &Field2) -> DiagonalMode {
    let n = field.n();
    let mut best = DiagonalMode {
        kx: 1,
        ky: 1,
        power: -1.0,
        phase: 0.0,
    };
    for k in 1..=n / 2 {
        for ky in [k, n - k] {
            let c = dft_coefficient(field, k, ky);
            if c.norm_sqr() > best.power {
                best = DiagonalMode {
                    kx: k,
                    ky,
                    power: c.norm_sqr(),
                    phase: c.arg(),
                };
            }
        }
    }
    best
}

/// Longest run of consecutive snapshots in which the dominant diagonal mode
/// stays the same, `|anisotropy| >= min_anisotropy` holds, and the phase
/// moves in one direction. Phase steps are wrapped to `(-pi, pi]`.
pub fn longest_phase_drift(snapshots: &[(f64, DiagonalMode)], min_anisotropy: f64) -> usize {
    let (mut best, mut run, mut sign) = (0usize, 0usize, 0.0f64);
    for (k, (aniso, mode)) in snapshots.iter().enumerate() {
        if aniso.abs() < min_anisotropy {
            run = 0;
            continue;
        }
        let step = k.checked_sub(1).map(|p| snapshots[p]).filter(|_| run > 0).and_then(|(_, prev)| {
            let same = prev.kx == mode.kx && prev.ky == mode.ky;
            let d = (mode.phase - prev.phase + PI).rem_euclid(2.0 * PI) - PI;
            (same && d != 0.0).then_some(d.signum())
        });
        match step {
            Some(s) if sign == 0.0 || s == sign => {
                run += 1;
                sign = s;
            }
            // a reversal starts a new run at the previous snapshot
            Some(s) => {
                run = 2;
                sign = s;
            }
            None => {
                run = 1;
                sign = 0.0;
            }
        }
        best = best.max(run);
    }
    best
}

/// One row of a [`DiagnosticsSeries`]; absent observables stay `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSample {
    pub t: f64,
    pub mass_r: f64,
    pub mass_b: f64,
    pub entropy: Option<f64>,
    pub lyapunov: Option<f64>,
    pub segregation: Option<f64>,
    pub anisotropy: Option<f64>,
    pub pert_l2: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    samples: Vec<DiagnosticsSample>,
}

impl DiagnosticsSeries {
    pub const CSV_HEADER: &'static str = "t,M_r,M_b,entropy,lyapunov,segregation,anisotropy,pert_l2";

    /// Appends a sample; times must increase strictly.
    pub fn push(&mut self, sample: DiagnosticsSample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(sample.t > last.t) {
                return Err(Error::invalid(
                    "t",
                    format!("sample time {} does not exceed {}", sample.t, last.t),
                ));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[DiagnosticsSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Values of an optional column, skipping missing entries.
    pub fn column(&self, f: impl Fn(&DiagnosticsSample) -> Option<f64>) -> Vec<f64> {
        self.samples.iter().filter_map(f).collect()
    }

    pub fn to_csv(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.12e}")).unwrap_or_default()
        }
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{},{},{},{},{}\n",
                s.t,
                s.mass_r,
                s.mass_b,
                opt(s.entropy),
                opt(s.lyapunov),
                opt(s.segregation),
                opt(s.anisotropy),
                opt(s.pert_l2)
            ));
        }
        out
    }
}

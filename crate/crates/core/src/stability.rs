//! Closed-form linear algebra of the first-order and regularized systems:
//! flux Jacobians, hyperbolicity, dispersion relations and the unstable
//! region of the one-dimensional counterflow model.
//!
//! Fourier modes are `exp(i k pi x + lambda t)`; wavenumber scans run over
//! integer `k >= 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Tolerance on the discriminant below which eigenvalues count as real.
pub const REAL_EIG_TOL: f64 = 1e-12;

pub type Mat2 = [[f64; 2]; 2];
pub type CMat2 = [[Complex64; 2]; 2];

/// An equilibrium `(r_inf, b_inf)` in the closed density simplex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquilibriumPoint {
    pub r: f64,
    pub b: f64,
}

impl EquilibriumPoint {
    pub fn new(r: f64, b: f64) -> Result<Self> {
        if !(r >= 0.0 && b >= 0.0 && r + b <= 1.0 + 1e-12) {
            return Err(Error::invalid(
                "equilibrium",
                format!("({r}, {b}) is outside the density simplex"),
            ));
        }
        Ok(Self { r, b })
    }

    pub fn rho(&self) -> f64 {
        self.r + self.b
    }

    /// The point with the two species exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            r: self.b,
            b: self.r,
        }
    }
}

/// Jacobians `A`, `B` of the two-dimensional first-order system written as
/// `d_t (r, b) = A d_x (r, b) + B d_y (r, b)`.
pub fn matrices_2d(r: f64, b: f64, p: &ModelParams) -> (Mat2, Mat2) {
    let g = p.gamma1 - p.gamma2;
    let side_r = g * b * (1.0 - 2.0 * r - b);
    let side_b = g * r * (1.0 - r - 2.0 * b);
    let a = [[2.0 * r + b - 1.0, r], [side_r, side_b]];
    let bm = [[side_r, side_b], [b, r + 2.0 * b - 1.0]];
    (a, bm)
}

/// Eigenvalues of a real 2x2 matrix, larger real part first.
pub fn eig2_real(m: &Mat2) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let half = 0.5 * tr;
    let disc = half * half - det;
    if disc >= -REAL_EIG_TOL {
        let s = disc.max(0.0).sqrt();
        [Complex64::new(half + s, 0.0), Complex64::new(half - s, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(half, s), Complex64::new(half, -s)]
    }
}

/// Eigenvalues of a complex 2x2 matrix.
pub fn eig2_complex(m: &CMat2) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    quadratic_roots(-tr, det)
}

/// Roots of `lambda^2 + b lambda + c` without cancellation.
pub fn quadratic_roots(b: Complex64, c: Complex64) -> [Complex64; 2] {
    let sq = (b * b - 4.0 * c).sqrt();
    // pick the sign that avoids subtracting nearly equal numbers
    let q = if (b.conj() * sq).re >= 0.0 {
        -0.5 * (b + sq)
    } else {
        -0.5 * (b - sq)
    };
    if q.norm() == 0.0 {
        return [Complex64::new(0.0, 0.0); 2];
    }
    let x1 = q;
    let x2 = c / q;
    if x1.re >= x2.re {
        [x1, x2]
    } else {
        [x2, x1]
    }
}

/// Flux Jacobian `C` of the one-dimensional counterflow system.
pub fn matrix_c(q: &EquilibriumPoint) -> Mat2 {
    let (r, b) = (q.r, q.b);
    [[2.0 * r + b - 1.0, r], [-b, -2.0 * b - r + 1.0]]
}

/// `(r - b)^2 / 4 + (1 - rho)(1 - 2 rho)`.
pub fn discriminant_c(q: &EquilibriumPoint) -> f64 {
    let d = q.r - q.b;
    let rho = q.rho();
    0.25 * d * d + (1.0 - rho) * (1.0 - 2.0 * rho)
}

/// Characteristic polynomial of `C` evaluated at `lambda`.
pub fn char_poly_c(q: &EquilibriumPoint, lambda: Complex64) -> Complex64 {
    let rho = q.rho();
    lambda * lambda + lambda * (q.b - q.r) - (1.0 - 2.0 * rho) * (1.0 - rho)
}

/// Eigenvalues `(r - b)/2 +- sqrt((r - b)^2/4 + (1 - rho)(1 - 2 rho))`, the
/// `+` root first.
pub fn eig_c_1d(q: &EquilibriumPoint) -> [Complex64; 2] {
    let half = 0.5 * (q.r - q.b);
    let disc = discriminant_c(q);
    if disc >= -REAL_EIG_TOL {
        let s = disc.max(0.0).sqrt();
        [Complex64::new(half + s, 0.0), Complex64::new(half - s, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(half, s), Complex64::new(half, -s)]
    }
}

/// Whether the one-dimensional first-order system has real characteristic
/// speeds at `q`.
pub fn classify_hyperbolic_1d(q: &EquilibriumPoint) -> bool {
    discriminant_c(q) >= -REAL_EIG_TOL
}

/// Largest characteristic speed modulus of `C` at a pointwise state.
pub fn spectral_radius_c(r: f64, b: f64) -> f64 {
    let q = EquilibriumPoint { r, b };
    let [l1, l2] = eig_c_1d(&q);
    l1.norm().max(l2.norm())
}

/// Largest eigenvalue modulus of `A` and `B` at a pointwise state.
pub fn spectral_radius_2d(r: f64, b: f64, p: &ModelParams) -> f64 {
    let (a, bm) = matrices_2d(r, b, p);
    eig2_real(&a)
        .iter()
        .chain(eig2_real(&bm).iter())
        .map(|l| l.norm())
        .fold(0.0, f64::max)
}

/// Whether every combination `cos(t) A + sin(t) B` over `samples` equally
/// spaced directions has real eigenvalues.
pub fn directional_hyperbolic_2d(r: f64, b: f64, p: &ModelParams, samples: usize) -> bool {
    let (a, bm) = matrices_2d(r, b, p);
    (0..samples).all(|s| {
        let theta = 2.0 * PI * s as f64 / samples as f64;
        let (c, sn) = (theta.cos(), theta.sin());
        let m = [
            [c * a[0][0] + sn * bm[0][0], c * a[0][1] + sn * bm[0][1]],
            [c * a[1][0] + sn * bm[1][0], c * a[1][1] + sn * bm[1][1]],
        ];
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        0.25 * tr * tr - det >= -REAL_EIG_TOL
    })
}

/// The Fourier symbol `C_F` of the linearized first-order system.
pub fn matrix_c_fourier(q: &EquilibriumPoint, k: f64) -> CMat2 {
    let ik = Complex64::new(0.0, k * PI);
    let (r, b) = (q.r, q.b);
    [
        [-ik * (1.0 - 2.0 * r - b), ik * r],
        [-ik * b, ik * (1.0 - r - 2.0 * b)],
    ]
}

/// Growth rates of mode `k` of the linearized first-order system.
pub fn dispersion_hyperbolic(q: &EquilibriumPoint, k: f64) -> [Complex64; 2] {
    eig2_complex(&matrix_c_fourier(q, k))
}

/// The Fourier symbol `D_F` of the linearized regularized system.
pub fn matrix_d_fourier(q: &EquilibriumPoint, k: f64, epsilon: f64) -> CMat2 {
    let ik = Complex64::new(0.0, k * PI);
    let diff = epsilon * k * k * PI * PI;
    let (r, b) = (q.r, q.b);
    [
        [
            -ik * (1.0 - 2.0 * r - b) - diff * (1.0 - b),
            -diff * r + ik * r,
        ],
        [
            -diff * b - ik * b,
            ik * (1.0 - r - 2.0 * b) - diff * (1.0 - r),
        ],
    ]
}

/// Coefficients `(c1, c0)` of `p(lambda) = lambda^2 + c1 lambda + c0`, the
/// characteristic polynomial of `D_F`.
pub fn char_poly_d_coeffs(q: &EquilibriumPoint, k: f64, epsilon: f64) -> (Complex64, Complex64) {
    let kp = k * PI;
    let rho = q.rho();
    let d = q.r - q.b;
    let c1 = Complex64::new(epsilon * kp * kp * (2.0 - rho), -kp * d);
    let c0 = Complex64::new(
        kp * kp * (1.0 - 2.0 * rho) * (1.0 - rho) + epsilon * epsilon * kp.powi(4) * (1.0 - rho),
        -2.0 * epsilon * kp.powi(3) * (1.0 - rho) * d,
    );
    (c1, c0)
}

pub fn char_poly_d(q: &EquilibriumPoint, k: f64, epsilon: f64, lambda: Complex64) -> Complex64 {
    let (c1, c0) = char_poly_d_coeffs(q, k, epsilon);
    lambda * lambda + c1 * lambda + c0
}

/// Growth rates of mode `k` of the regularized system, larger real part
/// first.
pub fn dispersion_parabolic(q: &EquilibriumPoint, k: f64, epsilon: f64) -> [Complex64; 2] {
    let (c1, c0) = char_poly_d_coeffs(q, k, epsilon);
    quadratic_roots(c1, c0)
}

/// Largest real growth rate of mode `k`.
pub fn growth_rate(q: &EquilibriumPoint, k: f64, epsilon: f64) -> f64 {
    dispersion_parabolic(q, k, epsilon)[0].re
}

/// Lower and upper bounding curves of the unstable region at abscissa `r`.
pub fn region_d_curves(r: f64) -> (f64, f64) {
    let denom = -9.0 + 8.0 * r;
    assert!(denom != 0.0, "curve denominator vanishes at r = 9/8");
    let center = (-6.0 + 9.0 * r - 4.0 * r * r) / denom;
    let spread = 4.0 * ((2.0 * r - 3.0 * r * r + r.powi(4)) / (denom * denom)).max(0.0).sqrt();
    ((center - spread).min(1.0 - r), (center + spread).min(1.0 - r))
}

/// Membership in the unstable region from the closed-form curves.
pub fn in_region_d_curve(q: &EquilibriumPoint) -> bool {
    let (lo, hi) = region_d_curves(q.r);
    q.b > lo && q.b < hi
}

/// Wavenumber below which modes are unstable, evaluated as the closed-form
/// bound. `None` where the radicand is negative.
pub fn k_crit_formula(q: &EquilibriumPoint, epsilon: f64) -> Option<f64> {
    let rho = q.rho();
    let r = q.r;
    let num = -4.0 + rho * (12.0 - 8.0 * r * r + rho * (-9.0 + 8.0 * r));
    let radicand = num / ((-2.0 + rho) * (-2.0 + rho));
    if radicand < 0.0 || epsilon <= 0.0 {
        return None;
    }
    Some(radicand.sqrt() / (epsilon * PI))
}

/// Outcome of a wavenumber scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub max_growth: f64,
    pub argmax_k: u32,
    /// Smallest scanned `k` at or above which every scanned mode is stable;
    /// `None` if no mode is unstable.
    pub k_crit: Option<u32>,
    pub k_max: u32,
}

/// Maximizes the growth rate over `k = 1..=k_max`, doubling `k_max` until
/// the maximizer lies strictly inside the scanned range.
pub fn scan_growth(q: &EquilibriumPoint, epsilon: f64) -> ScanResult {
    assert!(epsilon > 0.0, "wavenumber scan needs epsilon > 0");
    let estimate = k_crit_formula(q, epsilon).unwrap_or(0.0);
    let mut k_max = (2.0 * estimate)
        .max(2.0 / (epsilon * PI))
        .max(16.0)
        .ceil() as u32;
    loop {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 1;
        let mut last_unstable = None;
        for k in 1..=k_max {
            let g = growth_rate(q, k as f64, epsilon);
            if g > best {
                best = g;
                arg = k;
            }
            if g > 0.0 {
                last_unstable = Some(k);
            }
        }
        let bracketed = arg < k_max && last_unstable.is_none_or(|k| k < k_max);
        if bracketed || k_max > 1 << 20 {
            return ScanResult {
                max_growth: best,
                argmax_k: arg,
                k_crit: last_unstable.map(|k| k + 1),
                k_max,
            };
        }
        k_max *= 2;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RegionMethod {
    Curve,
    Scan,
}

impl std::str::FromStr for RegionMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "curve" => Ok(RegionMethod::Curve),
            "scan" => Ok(RegionMethod::Scan),
            other => Err(format!("unknown region method `{other}` (curve|scan)")),
        }
    }
}

impl std::fmt::Display for RegionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegionMethod::Curve => "curve",
            RegionMethod::Scan => "scan",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub point: EquilibriumPoint,
    pub eig_c: [Complex64; 2],
    pub hyperbolic_1d: bool,
    pub in_region_d: bool,
    pub method: RegionMethod,
    pub max_growth: f64,
    pub argmax_k: u32,
    pub k_crit_formula: Option<f64>,
    pub k_crit_scan: Option<u32>,
    /// Set when the closed-form and scanned thresholds differ by more than
    /// one wavenumber.
    pub k_crit_mismatch: bool,
}

/// Classifies `q` with the chosen membership method. The wavenumber scan is
/// always run for the growth columns.
pub fn region_d_membership(
    q: &EquilibriumPoint,
    method: RegionMethod,
    epsilon: f64,
) -> StabilityReport {
    let scan = scan_growth(q, epsilon);
    let in_region_d = match method {
        RegionMethod::Curve => in_region_d_curve(q),
        RegionMethod::Scan => scan.max_growth > 0.0,
    };
    let k_formula = k_crit_formula(q, epsilon);
    let k_crit_mismatch = match (k_formula, scan.k_crit) {
        (Some(f), Some(s)) => (f - s as f64).abs() > 1.0,
        (None, None) => false,
        // the formula is only meaningful inside the region
        (Some(_), None) | (None, Some(_)) => scan.max_growth > 0.0,
    };
    StabilityReport {
        point: *q,
        eig_c: eig_c_1d(q),
        hyperbolic_1d: classify_hyperbolic_1d(q),
        in_region_d,
        method,
        max_growth: scan.max_growth,
        argmax_k: scan.argmax_k,
        k_crit_formula: k_formula,
        k_crit_scan: scan.k_crit,
        k_crit_mismatch,
    }
}

/// One sample of the simplex raster.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RasterSample {
    pub i: usize,
    pub j: usize,
    pub r: f64,
    pub b: f64,
    pub hyperbolic: bool,
    pub in_d: bool,
    pub max_growth: f64,
    pub argmax_k: u32,
}

/// Uniform raster of the closed simplex: `r = i / (res - 1)`,
/// `b = j / (res - 1)`, keeping `r + b <= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionRaster {
    pub resolution: usize,
    pub epsilon: f64,
    pub method: RegionMethod,
    pub samples: Vec<RasterSample>,
}

pub fn raster_region_map(
    resolution: usize,
    epsilon: f64,
    method: RegionMethod,
) -> Result<RegionRaster> {
    if resolution < 32 {
        return Err(Error::invalid(
            "resolution",
            format!("need at least 32 samples per axis, got {resolution}"),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be positive for the map"));
    }
    let step = 1.0 / (resolution - 1) as f64;
    let mut samples = Vec::new();
    for i in 0..resolution {
        for j in 0..resolution - i {
            let q = EquilibriumPoint {
                r: i as f64 * step,
                b: j as f64 * step,
            };
            let report = region_d_membership(&q, method, epsilon);
            samples.push(RasterSample {
                i,
                j,
                r: q.r,
                b: q.b,
                hyperbolic: report.hyperbolic_1d,
                in_d: report.in_region_d,
                max_growth: report.max_growth,
                argmax_k: report.argmax_k,
            });
        }
    }
    Ok(RegionRaster {
        resolution,
        epsilon,
        method,
        samples,
    })
}

impl RegionRaster {
    pub const CSV_HEADER: &'static str = "r,b,hyperbolic,in_D,max_growth,argmax_k";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 48);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{:.12e},{}\n",
                s.r, s.b, s.hyperbolic as u8, s.in_d as u8, s.max_growth, s.argmax_k
            ));
        }
        out
    }

    /// Sample closest to `(r, b)`.
    pub fn nearest(&self, r: f64, b: f64) -> Option<&RasterSample> {
        self.samples.iter().min_by(|x, y| {
            let dx = (x.r - r).powi(2) + (x.b - b).powi(2);
            let dy = (y.r - r).powi(2) + (y.b - b).powi(2);
            dx.total_cmp(&dy)
        })
    }

    /// Row-major `resolution x resolution` mask (index `j * res + i`) of
    /// samples satisfying `pred`; off-simplex entries are false.
    pub fn mask(&self, pred: impl Fn(&RasterSample) -> bool) -> Vec<bool> {
        let res = self.resolution;
        let mut mask = vec![false; res * res];
        for s in &self.samples {
            mask[s.j * res + s.i] = pred(s);
        }
        mask
    }
}

/// Number of 4-connected components of `true` cells in a square mask.
pub fn connected_components(mask: &[bool], res: usize) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (i, j) = (idx % res, idx / res);
            let mut visit = |ni: usize, nj: usize| {
                let nidx = nj * res + ni;
                if mask[nidx] && !seen[nidx] {
                    seen[nidx] = true;
                    stack.push(nidx);
                }
            };
            if i > 0 {
                visit(i - 1, j);
            }
            if i + 1 < res {
                visit(i + 1, j);
            }
            if j > 0 {
                visit(i, j - 1);
            }
            if j + 1 < res {
                visit(i, j + 1);
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pt(r: f64, b: f64) -> EquilibriumPoint {
        EquilibriumPoint::new(r, b).unwrap()
    }

    /// Equal as multisets, up to a relative tolerance.
    fn same_roots(a: &[Complex64; 2], b: &[Complex64; 2]) -> bool {
        let close = |x: Complex64, y: Complex64| (x - y).norm() <= 1e-9 * (1.0 + y.norm());
        (close(a[0], b[0]) && close(a[1], b[1])) || (close(a[0], b[1]) && close(a[1], b[0]))
    }

    #[test]
    fn vacuum_matrices() {
        let p = ModelParams::default();
        let (a, b) = matrices_2d(0.0, 0.0, &p);
        assert_eq!(a, [[-1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(b, [[0.0, 0.0], [0.0, -1.0]]);
    }

    #[test]
    fn symmetric_side_steps_decouple() {
        let p = ModelParams {
            gamma1: 0.12,
            gamma2: 0.12,
            ..ModelParams::default()
        };
        let (a, b) = matrices_2d(0.3, 0.25, &p);
        assert_eq!(a[1], [0.0, 0.0]);
        assert_eq!(b[0], [0.0, 0.0]);
    }

    #[test]
    fn low_density_is_directionally_hyperbolic() {
        let p = ModelParams {
            gamma1: 0.2,
            gamma2: 0.1,
            ..ModelParams::default()
        };
        let n = 40;
        for i in 0..n {
            for j in 0..n {
                let r = 0.5 * i as f64 / n as f64;
                let b = 0.5 * j as f64 / n as f64;
                if r + b < 0.5 {
                    assert!(directional_hyperbolic_2d(r, b, &p, 64), "({r}, {b})");
                }
            }
        }
    }

    #[test]
    fn eigenvalue_examples() {
        let [l1, l2] = eig_c_1d(&pt(0.0, 0.0));
        assert_eq!((l1.re, l2.re), (1.0, -1.0));

        let [l1, l2] = eig_c_1d(&pt(0.3, 0.3));
        assert_abs_diff_eq!(l1.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l1.im, 0.08f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(l1.im, 0.282843, epsilon = 1e-6);
        assert_abs_diff_eq!(l2.im, -l1.im, epsilon = 0.0);

        let [l1, l2] = eig_c_1d(&pt(0.85, 0.1));
        assert_abs_diff_eq!(l1.re, 0.684233, epsilon = 1e-6);
        assert_abs_diff_eq!(l2.re, 0.065767, epsilon = 1e-6);
        assert_eq!((l1.im, l2.im), (0.0, 0.0));
    }

    #[test]
    fn hyperbolicity_examples() {
        assert!(classify_hyperbolic_1d(&pt(0.1, 0.1)));
        assert_abs_diff_eq!(discriminant_c(&pt(0.1, 0.1)), 0.48, epsilon = 1e-15);
        assert_abs_diff_eq!(eig_c_1d(&pt(0.1, 0.1))[0].re, 0.692820, epsilon = 1e-6);
        assert!(!classify_hyperbolic_1d(&pt(0.3, 0.3)));
        assert_abs_diff_eq!(discriminant_c(&pt(0.3, 0.3)), -0.08, epsilon = 1e-15);
        for i in 0..=100 {
            let r = i as f64 / 100.0;
            assert!(classify_hyperbolic_1d(&pt(r, 0.0)));
            assert_abs_diff_eq!(
                discriminant_c(&pt(r, 0.0)),
                (1.0 - 1.5 * r).powi(2),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn hyperbolic_dispersion() {
        for k in [0.5, 1.0, 3.0, 17.0] {
            let [a, b] = dispersion_hyperbolic(&pt(0.0, 0.0), k);
            assert_abs_diff_eq!(a.re, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(b.re, 0.0, epsilon = 1e-12);
            let mut ims = [a.im, b.im];
            ims.sort_by(f64::total_cmp);
            assert_abs_diff_eq!(ims[0], -k * PI, epsilon = 1e-12);
            assert_abs_diff_eq!(ims[1], k * PI, epsilon = 1e-12);
        }
        // hyperbolic sample: purely imaginary spectrum
        for k in 1..50 {
            for l in dispersion_hyperbolic(&pt(0.85, 0.1), k as f64) {
                assert_abs_diff_eq!(l.re, 0.0, epsilon = 1e-10);
            }
        }
        // elliptic sample: one branch grows proportionally to |k|
        let g1 = dispersion_hyperbolic(&pt(0.3, 0.3), 1.0)[0].re;
        assert!(g1 > 0.0);
        for k in 2..20 {
            let g = dispersion_hyperbolic(&pt(0.3, 0.3), k as f64)[0].re;
            assert_abs_diff_eq!(g / k as f64, g1, epsilon = 1e-10);
        }
    }

    #[test]
    fn parabolic_dispersion_examples() {
        let [a, b] = dispersion_parabolic(&pt(0.3, 0.3), 0.0, 0.005);
        assert_eq!(a.norm(), 0.0);
        assert_eq!(b.norm(), 0.0);
        assert!(growth_rate(&pt(0.3, 0.3), 2.0, 0.005) > 0.0);
        let worst = (1..=200)
            .map(|k| growth_rate(&pt(0.85, 0.1), k as f64, 0.005))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= 0.0, "max growth {worst}");
    }

    #[test]
    fn polynomial_matches_matrix() {
        // two independent routes: printed polynomial vs eigenvalues of D_F
        for &(r, b) in &[(0.3, 0.3), (0.85, 0.1), (0.1, 0.6), (0.0, 0.0), (0.45, 0.05)] {
            for k in [1.0, 2.0, 7.0, 40.0] {
                let q = pt(r, b);
                let a = dispersion_parabolic(&q, k, 0.005);
                let m = eig2_complex(&matrix_d_fourier(&q, k, 0.005));
                assert!(same_roots(&a, &m), "{a:?} vs {m:?}");
            }
        }
    }

    #[test]
    fn region_examples() {
        for method in [RegionMethod::Curve, RegionMethod::Scan] {
            assert!(region_d_membership(&pt(0.3, 0.3), method, 0.005).in_region_d);
            assert!(!region_d_membership(&pt(0.85, 0.1), method, 0.005).in_region_d);
        }
        let (lo, hi) = region_d_curves(0.0);
        assert_abs_diff_eq!(lo, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 2.0 / 3.0, epsilon = 1e-15);
        let k = k_crit_formula(&pt(0.3, 0.3), 0.005).unwrap();
        assert_abs_diff_eq!(k, 28.47, epsilon = 5e-3);
        let report = region_d_membership(&pt(0.3, 0.3), RegionMethod::Scan, 0.005);
        assert!(growth_rate(&pt(0.3, 0.3), 28.0, 0.005) > 0.0);
        assert!(report.k_crit_scan.is_some());
    }

    #[test]
    fn damping_at_large_wavenumbers() {
        let q = pt(0.3, 0.3);
        let scan = scan_growth(&q, 0.005);
        assert!(scan.argmax_k < scan.k_max);
        assert!(growth_rate(&q, 5000.0, 0.005) < -1e3);
    }

    #[test]
    fn raster_excludes_overfull_points() {
        let raster = raster_region_map(32, 0.005, RegionMethod::Curve).unwrap();
        assert!(raster.samples.iter().all(|s| s.r + s.b <= 1.0 + 1e-12));
        assert_eq!(raster.samples.len(), 32 * 33 / 2);
        assert!(raster_region_map(16, 0.005, RegionMethod::Curve).is_err());
        let csv = raster.to_csv();
        assert!(csv.starts_with("r,b,hyperbolic,in_D,max_growth,argmax_k\n"));
    }

    #[test]
    fn flood_fill_counts() {
        let mask = [true, false, true, false, false, false, true, true, true];
        assert_eq!(connected_components(&mask, 3), 3);
    }

    fn simplex_point() -> impl Strategy<Value = EquilibriumPoint> {
        (0.0..1.0f64, 0.0..1.0f64).prop_map(|(u, v)| {
            let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
            EquilibriumPoint { r: u, b: v }
        })
    }

    proptest! {
        #[test]
        fn eig_c_residual_and_conjugacy(q in simplex_point()) {
            let [l1, l2] = eig_c_1d(&q);
            for l in [l1, l2] {
                prop_assert!(char_poly_c(&q, l).norm() <= 1e-12);
            }
            if l1.im != 0.0 {
                prop_assert_eq!(l1, l2.conj());
            }
        }

        #[test]
        fn swap_negates_spectrum(q in simplex_point()) {
            let [a1, a2] = eig_c_1d(&q);
            let [b1, b2] = eig_c_1d(&q.swapped());
            prop_assert!((a1 + b2).norm() <= 1e-12 || (a1 + b1).norm() <= 1e-12);
            prop_assert!((a2 + b1).norm() <= 1e-12 || (a2 + b2).norm() <= 1e-12);
            prop_assert_eq!(classify_hyperbolic_1d(&q), classify_hyperbolic_1d(&q.swapped()));
        }

        #[test]
        fn parabolic_roots_satisfy_polynomial(q in simplex_point(), k in 0.0..200.0f64) {
            let eps = 0.005;
            for l in dispersion_parabolic(&q, k, eps) {
                let (c1, c0) = char_poly_d_coeffs(&q, k, eps);
                let scale = 1.0 + l.norm_sqr() + (c1 * l).norm() + c0.norm();
                prop_assert!(char_poly_d(&q, k, eps, l).norm() <= 1e-10 * scale);
            }
            // real coefficients in (i k) give lambda(-k) = conj(lambda(k))
            let plus = dispersion_parabolic(&q, k, eps).map(|l| l.conj());
            let minus = dispersion_parabolic(&q, -k, eps);
            prop_assert!(same_roots(&plus, &minus));
        }

        #[test]
        fn scan_membership_is_swap_symmetric(q in simplex_point()) {
            let a = growth_rate(&q, 3.0, 0.005);
            let b = growth_rate(&q.swapped(), 3.0, 0.005);
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}

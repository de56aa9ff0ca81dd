//! Cell-centered arrays and the density states built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Dims, Grid};

/// `n x n` array stored row-major with `x` (index `i`) fastest:
/// `data[j * n + i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field2 {
    n: usize,
    data: Vec<f64>,
}

impl Field2 {
    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            n,
            data: vec![value; n * n],
        }
    }

    /// Builds a field from `f(i, j)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "field data must hold n * n values");
        Self { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[j * self.n + i] = value;
    }

    /// Periodic access with signed indices.
    #[inline]
    pub fn wrap(&self, i: isize, j: isize) -> f64 {
        let n = self.n as isize;
        self.get(i.rem_euclid(n) as usize, j.rem_euclid(n) as usize)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Sum in storage order; callers rely on the fixed order for
    /// reproducible diagnostics.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Averages `factor x factor` blocks onto an `n / factor` grid.
    pub fn coarsen(&self, factor: usize) -> Self {
        assert!(factor > 0 && self.n.is_multiple_of(factor), "factor must divide n");
        let m = self.n / factor;
        let scale = 1.0 / (factor * factor) as f64;
        Self::from_fn(m, |ci, cj| {
            let mut acc = 0.0;
            for dj in 0..factor {
                for di in 0..factor {
                    acc += self.get(ci * factor + di, cj * factor + dj);
                }
            }
            acc * scale
        })
    }

    /// Sum of absolute differences.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Red and blue densities on a 2D grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityField2D {
    pub grid: Grid,
    pub r: Field2,
    pub b: Field2,
    pub t: f64,
}

impl DensityField2D {
    pub fn new(grid: Grid, r: Field2, b: Field2) -> Result<Self> {
        grid.validate()?;
        if grid.dims != Dims::Two || r.n() != grid.n || b.n() != grid.n {
            return Err(Error::invalid("grid", "field sizes do not match a 2D grid"));
        }
        Ok(Self { grid, r, b, t: 0.0 })
    }

    /// Samples `f(x, y) -> (r, b)` at cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let n = grid.n;
        let mut r = Field2::zeros(n);
        let mut b = Field2::zeros(n);
        for j in 0..n {
            for i in 0..n {
                let (rv, bv) = f(grid.center(i), grid.center(j));
                r.set(i, j, rv);
                b.set(i, j, bv);
            }
        }
        Self::new(grid, r, b)
    }

    pub fn uniform(grid: Grid, r: f64, b: f64) -> Result<Self> {
        Self::from_fn(grid, |_, _| (r, b))
    }

    pub fn rho(&self) -> Field2 {
        self.r.zip_map(&self.b, |a, b| a + b)
    }

    /// Integrals `(M_r, M_b)` over the domain.
    pub fn masses(&self) -> (f64, f64) {
        let w = self.grid.cell_measure();
        (self.r.sum() * w, self.b.sum() * w)
    }

    /// Transposes both fields and exchanges the species.
    pub fn swap_transposed(&self) -> Self {
        Self {
            grid: self.grid,
            r: self.b.transpose(),
            b: self.r.transpose(),
            t: self.t,
        }
    }

    /// Whether `r, b >= -tol` and `r + b <= 1 + tol` everywhere.
    pub fn in_simplex(&self, tol: f64) -> bool {
        self.r
            .as_slice()
            .iter()
            .zip(self.b.as_slice())
            .all(|(&r, &b)| r >= -tol && b >= -tol && r + b <= 1.0 + tol)
    }

    /// Snapshot with header `x,y,r,b,rho`, one row per cell center.
    pub fn to_csv(&self) -> String {
        let n = self.grid.n;
        let mut out = String::with_capacity(n * n * 64);
        out.push_str("x,y,r,b,rho\n");
        for j in 0..n {
            for i in 0..n {
                let (r, b) = (self.r.get(i, j), self.b.get(i, j));
                out.push_str(&format!(
                    "{},{},{:.12e},{:.12e},{:.12e}\n",
                    self.grid.center(i),
                    self.grid.center(j),
                    r,
                    b,
                    r + b
                ));
            }
        }
        out
    }
}

/// Red and blue densities on a periodic line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityField1D {
    pub grid: Grid,
    pub r: Vec<f64>,
    pub b: Vec<f64>,
    pub t: f64,
}

impl DensityField1D {
    pub fn new(grid: Grid, r: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if grid.dims != Dims::One || r.len() != grid.n || b.len() != grid.n {
            return Err(Error::invalid("grid", "field sizes do not match a 1D grid"));
        }
        Ok(Self { grid, r, b, t: 0.0 })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let (r, b) = (0..grid.n).map(|i| f(grid.center(i))).unzip();
        Self::new(grid, r, b)
    }

    pub fn masses(&self) -> (f64, f64) {
        let h = self.grid.h();
        (
            self.r.iter().sum::<f64>() * h,
            self.b.iter().sum::<f64>() * h,
        )
    }

    /// `(xi, eta) = (1 - rho, r - b)`.
    pub fn to_xi_eta(&self) -> XiEtaField {
        XiEtaField {
            xi: self.r.iter().zip(&self.b).map(|(r, b)| 1.0 - r - b).collect(),
            eta: self.r.iter().zip(&self.b).map(|(r, b)| r - b).collect(),
        }
    }

    /// Inverse of [`Self::to_xi_eta`].
    pub fn from_xi_eta(grid: Grid, x: &XiEtaField) -> Result<Self> {
        if let Some(k) = (0..x.len()).find(|&k| x.eta[k].abs() > 1.0 - x.xi[k] + 1e-12) {
            return Err(Error::invalid(
                "eta",
                format!("|eta| = {} exceeds 1 - xi = {} in cell {k}", x.eta[k].abs(), 1.0 - x.xi[k]),
            ));
        }
        let r = x
            .xi
            .iter()
            .zip(&x.eta)
            .map(|(xi, eta)| 0.5 * (1.0 - xi + eta))
            .collect();
        let b = x
            .xi
            .iter()
            .zip(&x.eta)
            .map(|(xi, eta)| 0.5 * (1.0 - xi - eta))
            .collect();
        Self::new(grid, r, b)
    }

    /// `L2` distance to the constant state `(r_inf, b_inf)`.
    pub fn l2_distance_to(&self, r_inf: f64, b_inf: f64) -> f64 {
        let h = self.grid.h();
        let s: f64 = self
            .r
            .iter()
            .zip(&self.b)
            .map(|(r, b)| (r - r_inf).powi(2) + (b - b_inf).powi(2))
            .sum();
        (s * h).sqrt()
    }

    /// Snapshot with header `x,r,b,rho`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,r,b,rho\n");
        for (k, (r, b)) in self.r.iter().zip(&self.b).enumerate() {
            out.push_str(&format!("{},{:.12e},{:.12e},{:.12e}\n", self.grid.center(k), r, b, r + b));
        }
        out
    }
}

/// Vacancy `xi = 1 - rho` and imbalance `eta = r - b` on a line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiEtaField {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl XiEtaField {
    pub fn uniform(n: usize, xi: f64, eta: f64) -> Self {
        Self {
            xi: vec![xi; n],
            eta: vec![eta; n],
        }
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// `xi` in `[0, 1]` and `|eta| <= 1 - xi`, up to `tol`.
    pub fn is_admissible(&self, tol: f64) -> bool {
        self.xi.len() == self.eta.len()
            && self
                .xi
                .iter()
                .zip(&self.eta)
                .all(|(&xi, &eta)| xi >= -tol && xi <= 1.0 + tol && eta.abs() <= 1.0 - xi + tol)
    }
}

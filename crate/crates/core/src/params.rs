//! Model parameters, grids and boundary descriptors shared by every model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rate and scale parameters of the crossing-flow models.
///
/// `alpha` scales every jump probability, `gamma0` is the base side-step
/// rate, `gamma1` the rate of stepping against the other group's walking
/// direction and `gamma2` the rate of stepping with it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub epsilon: f64,
    pub h: f64,
    pub dt: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            gamma0: 0.2,
            gamma1: 0.15,
            gamma2: 0.1,
            epsilon: 0.05,
            h: 0.1,
            dt: 0.05,
        }
    }
}

impl ModelParams {
    /// Rejects negative or non-finite fields.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha", self.alpha),
            ("gamma0", self.gamma0),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("epsilon", self.epsilon),
            ("h", self.h),
            ("dt", self.dt),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {value}")));
            }
            if value < 0.0 {
                return Err(Error::invalid(
                    name,
                    format!("must be nonnegative, got {value}"),
                ));
            }
        }
        Ok(())
    }

    /// Total side-step weight `2 gamma0 + gamma1 + gamma2`.
    pub fn side_step_weight(&self) -> f64 {
        2.0 * self.gamma0 + self.gamma1 + self.gamma2
    }

    /// `alpha * max(1, 2 gamma0 + gamma1 + gamma2) <= 1`: stay probabilities
    /// of the lattice and compartment models are nonnegative.
    pub fn satisfies_cfl(&self) -> bool {
        self.alpha * self.side_step_weight().max(1.0) <= 1.0
    }

    /// `alpha * max(1 + 2 gamma0, 2 gamma0 + gamma1 + gamma2) <= 1`: the
    /// jump probabilities of an individual sum to at most one for every
    /// neighborhood. A free individual may step forward and to both sides
    /// with total `alpha (1 + 2 gamma0)`, which [`Self::satisfies_cfl`] does
    /// not bound when `gamma0 > 0`.
    pub fn jump_probabilities_bounded(&self) -> bool {
        self.alpha * (1.0 + 2.0 * self.gamma0).max(self.side_step_weight()) <= 1.0
    }

    /// Whether `alpha` equals `dt / h` within a relative tolerance. Only the
    /// compartment/PDE consistency checks tie the three together.
    pub fn alpha_matches_dt_over_h(&self, rel_tol: f64) -> bool {
        if self.h <= 0.0 {
            return false;
        }
        let ratio = self.dt / self.h;
        (ratio - self.alpha).abs() <= rel_tol * self.alpha.abs().max(f64::MIN_POSITIVE)
    }
}

/// Free-function form of [`ModelParams::satisfies_cfl`].
pub fn validate_cfl(p: &ModelParams) -> bool {
    p.satisfies_cfl()
}

/// A violated condition of the entropy-growth estimate.
#[derive(Clone, Debug, PartialEq)]
pub enum RegimeWarning {
    /// `gamma0` outside the open interval (1/8, 1).
    Gamma0OutOfRange { gamma0: f64 },
    /// `|gamma1 - gamma2|` not below `min(2 gamma0 - 1/4, (1 - gamma0)/2) / 33`.
    AsymmetryTooLarge { asymmetry: f64, bound: f64 },
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeWarning::Gamma0OutOfRange { gamma0 } => {
                write!(f, "gamma0 = {gamma0} is outside (1/8, 1)")
            }
            RegimeWarning::AsymmetryTooLarge { asymmetry, bound } => write!(
                f,
                "|gamma1 - gamma2| = {asymmetry} is not below the bound {bound:.6}"
            ),
        }
    }
}

/// Result of [`validate_entropy_regime`]. Warnings never block a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EntropyRegime {
    pub warnings: Vec<RegimeWarning>,
}

impl EntropyRegime {
    pub fn is_ok(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Checks the parameter range in which the entropy grows at most linearly.
pub fn validate_entropy_regime(p: &ModelParams) -> EntropyRegime {
    let mut warnings = Vec::new();
    let g0 = p.gamma0;
    if !(g0 > 0.125 && g0 < 1.0) {
        warnings.push(RegimeWarning::Gamma0OutOfRange { gamma0: g0 });
    }
    let bound = (2.0 * g0 - 0.25).min(0.5 * (1.0 - g0)) / 33.0;
    let asymmetry = (p.gamma1 - p.gamma2).abs();
    if !(asymmetry < bound) {
        warnings.push(RegimeWarning::AsymmetryTooLarge { asymmetry, bound });
    }
    EntropyRegime { warnings }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dims {
    One,
    Two,
}

/// Boundary treatment of a structured grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryDescriptor {
    Periodic,
    /// Entrances at `x = 0` (red) and `y = 0` (blue) with a Dirichlet value,
    /// exits at `x = 1` (red) and `y = 1` (blue) with outflux
    /// `outflux * density`, zero normal flux elsewhere.
    Mixed { inflow: f64, outflux: f64 },
}

impl BoundaryDescriptor {
    pub fn validate(&self) -> Result<()> {
        if let BoundaryDescriptor::Mixed { inflow, outflux } = *self {
            if !(0.0..=1.0).contains(&inflow) {
                return Err(Error::invalid("inflow", format!("must lie in [0, 1], got {inflow}")));
            }
            if !(outflux >= 0.0) || !outflux.is_finite() {
                return Err(Error::invalid(
                    "outflux",
                    format!("must be finite and nonnegative, got {outflux}"),
                ));
            }
        }
        Ok(())
    }
}

/// Uniform structured grid on `[0, length]` or `[0, length]^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: Dims,
    pub n: usize,
    pub length: f64,
    pub bc: BoundaryDescriptor,
}

impl Grid {
    pub fn new(dims: Dims, n: usize, length: f64, bc: BoundaryDescriptor) -> Result<Self> {
        let grid = Self {
            dims,
            n,
            length,
            bc,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn periodic_1d(n: usize) -> Result<Self> {
        Self::new(Dims::One, n, 1.0, BoundaryDescriptor::Periodic)
    }

    pub fn periodic_2d(n: usize) -> Result<Self> {
        Self::new(Dims::Two, n, 1.0, BoundaryDescriptor::Periodic)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n", format!("need at least 2 cells, got {}", self.n)));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::invalid(
                "length",
                format!("must be positive, got {}", self.length),
            ));
        }
        if self.dims == Dims::One && self.bc != BoundaryDescriptor::Periodic {
            return Err(Error::Unsupported(
                "1D grids only support periodic boundaries".into(),
            ));
        }
        self.bc.validate()
    }

    /// Cell size `length / n`.
    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Center of cell `i` along one axis.
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    pub fn cell_count(&self) -> usize {
        match self.dims {
            Dims::One => self.n,
            Dims::Two => self.n * self.n,
        }
    }

    /// Measure of one cell (length or area).
    pub fn cell_measure(&self) -> f64 {
        match self.dims {
            Dims::One => self.h(),
            Dims::Two => self.h() * self.h(),
        }
    }
}

//! Named scenarios for the standard experiments.

use crate::error::{Error, Result};
use crate::lattice::Scheduler;
use crate::params::{BoundaryDescriptor, ModelParams};
use crate::pde2d::{Advection, PdeMode};
use crate::stability::RegionMethod;

use super::config::{ModelKind, Perturbation, Scenario};

const PRESETS: &[(&str, &str)] = &[
    ("ex2d_periodic", "2D regularized system, periodic, r = b = 0.4: diagonal lanes by T = 20"),
    ("ex2d_mixed_a", "2D mixed boundaries, gamma1 = 0.2 > gamma2 = 0.1, T = 100"),
    ("ex2d_mixed_b", "2D mixed boundaries, gamma1 = 0.1 < gamma2 = 0.2, T = 100"),
    ("particle_mixed", "lattice 100x100, rho = 0.2, alpha = 0.6, 500 random-order steps"),
    ("particle_segregate", "lattice 100x100, rho = 0.5, alpha = 0.6, 500 random-order steps"),
    ("particle_waves", "lattice 100x100, rho = 0.2, alpha = 1, gamma0 = 0: traveling diagonal waves"),
    ("ex1d_unstable_sin", "1D regularized system at (0.3, 0.3), sine perturbation 0.02, T = 100"),
    ("ex1d_unstable_cos", "1D regularized system at (0.3, 0.3), cosine perturbation 0.01, T = 100"),
    ("ex1d_stable", "1D regularized system at (0.85, 0.1), sine perturbation 0.01, T = 1000"),
    ("lyapunov_decay", "1D regularized system at (0.15, 0.15) where xi = 0.7: Lyapunov decay"),
    ("stability_map", "raster of hyperbolicity and linear instability over the simplex, eps = 0.005"),
    ("compartment_convergence", "compartment model vs regularized PDE with eps = h/2 on n = 32, 64, 128"),
];

/// Names and one-line descriptions of every preset.
pub fn list_presets() -> &'static [(&'static str, &'static str)] {
    PRESETS
}

fn rates(alpha: f64, gamma0: f64, gamma1: f64, gamma2: f64, epsilon: f64, n: usize) -> ModelParams {
    let h = 1.0 / n as f64;
    ModelParams {
        alpha,
        gamma0,
        gamma1,
        gamma2,
        epsilon,
        h,
        dt: alpha * h,
    }
}

fn ex2d_mixed(name: &str, gamma1: f64, gamma2: f64) -> Scenario {
    Scenario {
        name: name.into(),
        model: ModelKind::Pde2d,
        params: rates(0.5, 0.15, gamma1, gamma2, 0.0025, 64),
        n: 64,
        boundary: BoundaryDescriptor::Mixed {
            inflow: 0.1,
            outflux: 0.8,
        },
        r_inf: 0.1,
        b_inf: 0.1,
        perturbation: Perturbation::HalfWave,
        amplitude: 0.02,
        t_end: 100.0,
        sample_interval: 0.5,
        snapshots_every: 20,
        ..Scenario::default()
    }
}

fn particles(name: &str, alpha: f64, gamma0: f64, rho_total: f64) -> Scenario {
    Scenario {
        name: name.into(),
        model: ModelKind::Lattice,
        params: rates(alpha, gamma0, 0.2, 0.1, 0.005, 100),
        n: 100,
        perturbation: Perturbation::None,
        amplitude: 0.0,
        rho_total,
        red_fraction: 0.5,
        seed: 1,
        steps: 500,
        sample_every: 5,
        snapshots_every: 20,
        scheduler: Scheduler::RandomSequential,
        coarse_factor: 4,
        ..Scenario::default()
    }
}

fn ex1d(name: &str, r_inf: f64, b_inf: f64, perturbation: Perturbation, amplitude: f64, t_end: f64) -> Scenario {
    Scenario {
        name: name.into(),
        model: ModelKind::Pde1d,
        params: rates(0.5, 0.2, 0.15, 0.1, 0.005, 100),
        n: 100,
        r_inf,
        b_inf,
        perturbation,
        amplitude,
        t_end,
        sample_interval: if t_end > 200.0 { 1.0 } else { 0.05 },
        snapshots_every: if t_end > 200.0 { 100 } else { 200 },
        ..Scenario::default()
    }
}

/// The scenario registered under `name`.
pub fn preset(name: &str) -> Result<Scenario> {
    let s = match name {
        "ex2d_periodic" => Scenario {
            name: name.into(),
            model: ModelKind::Pde2d,
            params: rates(0.5, 0.2, 0.15, 0.1, 0.05, 64),
            n: 64,
            r_inf: 0.4,
            b_inf: 0.4,
            perturbation: Perturbation::HalfWave,
            amplitude: 0.02,
            t_end: 20.0,
            sample_interval: 0.1,
            snapshots_every: 50,
            mode: PdeMode::Parabolic,
            advection: Advection::Upwind,
            ..Scenario::default()
        },
        "ex2d_mixed_a" => ex2d_mixed(name, 0.2, 0.1),
        "ex2d_mixed_b" => ex2d_mixed(name, 0.1, 0.2),
        "particle_mixed" => particles(name, 0.6, 0.15, 0.2),
        "particle_segregate" => particles(name, 0.6, 0.15, 0.5),
        "particle_waves" => particles(name, 1.0, 0.0, 0.2),
        "ex1d_unstable_sin" => ex1d(name, 0.3, 0.3, Perturbation::Sin, 0.02, 100.0),
        "ex1d_unstable_cos" => ex1d(name, 0.3, 0.3, Perturbation::Cos, 0.01, 100.0),
        "ex1d_stable" => ex1d(name, 0.85, 0.1, Perturbation::Sin, 0.01, 1000.0),
        "lyapunov_decay" => ex1d(name, 0.15, 0.15, Perturbation::Sin, 0.01, 50.0),
        "stability_map" => Scenario {
            name: name.into(),
            model: ModelKind::StabilityMap,
            params: rates(0.5, 0.2, 0.15, 0.1, 0.005, 64),
            perturbation: Perturbation::None,
            amplitude: 0.0,
            resolution: 256,
            method: RegionMethod::Scan,
            ..Scenario::default()
        },
        "compartment_convergence" => Scenario {
            name: name.into(),
            model: ModelKind::Compartment,
            params: rates(0.5, 0.2, 0.15, 0.1, 1.0 / 128.0, 64),
            n: 64,
            r_inf: 0.2,
            b_inf: 0.2,
            perturbation: Perturbation::FullWave,
            amplitude: 0.05,
            t_end: 0.5,
            steps: 64,
            sample_every: 8,
            refinement_levels: vec![32, 64, 128],
            oracle_refine: 2,
            ..Scenario::default()
        },
        other => return Err(Error::UnknownPreset(other.into())),
    };
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_the_twelve_presets() {
        let names: Vec<&str> = list_presets().iter().map(|p| p.0).collect();
        assert_eq!(
            names,
            [
                "ex2d_periodic",
                "ex2d_mixed_a",
                "ex2d_mixed_b",
                "particle_mixed",
                "particle_segregate",
                "particle_waves",
                "ex1d_unstable_sin",
                "ex1d_unstable_cos",
                "ex1d_stable",
                "lyapunov_decay",
                "stability_map",
                "compartment_convergence",
            ]
        );
    }

    #[test]
    fn every_preset_validates_and_round_trips() {
        for (name, _) in list_presets() {
            let s = preset(name).unwrap();
            assert_eq!(&s.name, name);
            s.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            let back = Scenario::parse(&s.to_config()).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(back, s, "{name}");
            assert_eq!(Scenario::parse(&format!("preset = {name}\n")).unwrap(), s);
        }
    }

    #[test]
    fn published_parameter_values() {
        let w = preset("particle_waves").unwrap();
        assert_eq!((w.params.alpha, w.params.gamma0, w.params.gamma1, w.params.gamma2), (1.0, 0.0, 0.2, 0.1));
        assert_eq!((w.rho_total, w.n, w.steps), (0.2, 100, 500));
        let a = preset("ex2d_mixed_a").unwrap();
        let b = preset("ex2d_mixed_b").unwrap();
        assert_eq!((a.params.gamma1, a.params.gamma2), (0.2, 0.1));
        assert_eq!((b.params.gamma1, b.params.gamma2), (0.1, 0.2));
        assert_eq!((a.params.gamma0, a.params.epsilon), (0.15, 0.0025));
        assert_eq!(a.boundary, BoundaryDescriptor::Mixed { inflow: 0.1, outflux: 0.8 });
        let seg = preset("particle_segregate").unwrap();
        assert_eq!((seg.params.alpha, seg.params.gamma0, seg.rho_total), (0.6, 0.15, 0.5));
        let st = preset("ex1d_stable").unwrap();
        assert_eq!((st.r_inf, st.b_inf, st.params.epsilon, st.t_end), (0.85, 0.1, 0.005, 1000.0));
        let ly = preset("lyapunov_decay").unwrap();
        assert!((1.0 - ly.r_inf - ly.b_inf - 0.7).abs() < 1e-12);
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("ex3d"), Err(Error::UnknownPreset(_))));
    }
}

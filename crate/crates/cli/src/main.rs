use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use crossflow::experiments::{execute, list_presets, preset, ModelKind, Scenario};
use crossflow::stability::RegionMethod;
use crossflow::Error;

/// Simulations of two crossing pedestrian flows.
#[derive(Parser, Debug)]
#[command(author, version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a config file or a preset
    Run {
        /// Path to a config file, or a preset name
        scenario: String,

        /// Override the random seed
        #[arg(long)]
        seed: Option<u64>,

        /// Output directory
        #[arg(long, env = "CROSSFLOW_OUT")]
        out_dir: Option<PathBuf>,

        /// Write every k-th sample as a snapshot (0: first and last only)
        #[arg(long)]
        snapshots_every: Option<u64>,
    },
    /// List the presets
    List,
    /// Rasterize the stability regions over the density simplex
    Map {
        /// Samples per axis
        #[arg(long, default_value_t = 256)]
        resolution: usize,

        #[arg(long, default_value_t = 0.005)]
        epsilon: f64,

        /// Instability test: `curve` or `scan`
        #[arg(long, default_value_t = RegionMethod::Scan)]
        method: RegionMethod,

        #[arg(long, env = "CROSSFLOW_OUT")]
        out_dir: Option<PathBuf>,
    },
    /// Check a config file without running it
    Validate {
        config: PathBuf,
    },
}

fn load(scenario: &str) -> crossflow::Result<Scenario> {
    let path = Path::new(scenario);
    if path.is_file() {
        Scenario::from_file(path)
    } else {
        preset(scenario)
    }
}

fn run(mut s: Scenario, seed: Option<u64>, out_dir: Option<PathBuf>, snapshots_every: Option<u64>) -> crossflow::Result<()> {
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(k) = snapshots_every {
        s.snapshots_every = k;
    }
    let dir = out_dir
        .or_else(|| s.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&s.name));
    log::info!("running {} ({}) into {}", s.name, s.model, dir.display());
    let out = execute(&s, Some(&dir))?;
    let m = &out.manifest;
    println!("{}: {} steps, {} samples, {:.2} s", m.name, m.steps, m.samples, m.wall_time_s);
    if let Some(c) = m.conservation {
        println!(
            "mass drift: red {:.3e}, blue {:.3e} ({})",
            c.max_rel_drift_r,
            c.max_rel_drift_b,
            if c.conserved { "conserved" } else { "NOT conserved" }
        );
    }
    if let (Some((er, eb)), Some(dead)) = (m.exit_flux, m.deadlock) {
        println!("exit flux: red {er:.4}, blue {eb:.4}, deadlock {dead}");
    }
    if let Some((a, b)) = m.segregation {
        println!("segregation: {a:.3} -> {b:.3}");
    }
    if let Some(a) = m.final_anisotropy {
        println!("final diagonal anisotropy: {a:.3}");
    }
    if let Some((a, b)) = m.pert_l2 {
        println!("perturbation L2: {a:.4e} -> {b:.4e}");
    }
    if let Some(c) = &m.convergence {
        println!("convergence errors {:?}, order {:.3}", c.errors, c.order);
    }
    println!("wrote {} files to {}", m.files.len(), dir.display());
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::UnknownPreset(_) | Error::InvalidParameter { .. } | Error::Unsupported(_) => 2,
        Error::SolverAbort { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            seed,
            out_dir,
            snapshots_every,
        } => load(&scenario).and_then(|s| run(s, seed, out_dir, snapshots_every)),
        Command::List => {
            for (name, description) in list_presets() {
                println!("{name:<24} {description}");
            }
            Ok(())
        }
        Command::Map {
            resolution,
            epsilon,
            method,
            out_dir,
        } => preset("stability_map").and_then(|mut s| {
            s.model = ModelKind::StabilityMap;
            s.resolution = resolution;
            s.params.epsilon = epsilon;
            s.method = method;
            run(s, None, out_dir, None)
        }),
        Command::Validate { config } => Scenario::from_file(&config).map(|s| {
            println!("ok: {} ({})", s.name, s.model);
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pinn_fracture::check::{run_suite, SUITES};
use pinn_fracture::config::{HistoryPolicy, RunConfig};
use pinn_fracture::geometry::presets;
use pinn_fracture::quadrature::build_cloud;
use pinn_fracture::solver::analytic::bar_errors;
use pinn_fracture::solver::output::read_fields;
use pinn_fracture::solver::{Solver, SolverError};

/// Phase-field fracture with energy-trained neural networks.
#[derive(Parser)]
#[command(name = "pinnfrac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum History {
    Frozen,
    Live,
}

#[derive(Subcommand)]
enum Command {
    /// Train through every displacement step and write fields.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum)]
        history: Option<History>,
        #[arg(long)]
        no_transfer: bool,
    },
    /// Run a property suite (ad, quadrature, split, bc or all).
    Check {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Relative L2 errors of a fields file against the analytic solution.
    Errors {
        fields: PathBuf,
        #[arg(long, default_value = "bar1d")]
        preset: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the Gauss points and weights of a configuration as CSV.
    ExportCloud {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(RunConfig::from_json(&text)?)
}

fn solve(mut cfg: RunConfig, out: Option<PathBuf>) -> Result<ExitCode> {
    let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
    cfg.output.dir = dir.clone();
    cfg.validate()?;
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.json"), cfg.to_json())?;
    let preset = cfg.preset.clone();
    let l0 = cfg.material.l0;
    let mut solver = Solver::new(cfg)?;
    for _ in 0..solver.problem.cfg.load.n_steps {
        match solver.train_step() {
            Ok(r) => println!(
                "step {:>3}  u = {:.4e}  loss = {:.8e}  iters = {:>5}  load = {:.4} N  ({:.1} s)",
                r.step,
                r.displacement,
                r.final_loss,
                r.iterations(),
                r.load,
                r.seconds
            ),
            Err(e @ SolverError::StepFailed { .. }) => {
                eprintln!("error: {e}");
                return Ok(ExitCode::FAILURE);
            }
            Err(e) => return Err(e.into()),
        }
        solver.write_step(&dir)?;
    }
    let peak = solver.records.iter().map(|r| r.load).fold(f64::NEG_INFINITY, f64::max);
    println!("failure load (peak reaction) = {peak:.4} N");
    if preset == "bar1d" {
        let rows = solver.predict_fields();
        let x: Vec<f64> = rows.iter().map(|r| r.x[0]).collect();
        let u: Vec<f64> = rows.iter().map(|r| r.u[0]).collect();
        let phi: Vec<f64> = rows.iter().map(|r| r.phi).collect();
        let (eu, ep) = bar_errors(&x, &u, &phi, l0);
        println!("relative L2 error: u = {:.3}%  phi = {:.3}%", 100.0 * eu, 100.0 * ep);
    }
    println!("artifacts in {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn check(suite: &str, seed: u64) -> Result<ExitCode> {
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite] };
    let mut failed = 0;
    for name in names {
        for line in run_suite(name, seed)? {
            println!("{line}");
            failed += usize::from(!line.passed);
        }
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn errors(fields: &Path, preset: &str, config: Option<&Path>) -> Result<ExitCode> {
    let cfg = match config {
        Some(p) => load_config(p)?,
        None => RunConfig::preset(preset)?,
    };
    if cfg.preset != "bar1d" {
        bail!("preset `{}` has no analytic solution (only bar1d does)", cfg.preset);
    }
    let text = fs::read_to_string(fields).with_context(|| format!("reading {}", fields.display()))?;
    let (dim, rows) = read_fields(&text).map_err(anyhow::Error::msg)?;
    if dim != 1 {
        bail!("expected a 1D fields file, found {dim} coordinates");
    }
    let x: Vec<f64> = rows.iter().map(|r| r.x[0]).collect();
    let u: Vec<f64> = rows.iter().map(|r| r.u[0]).collect();
    let phi: Vec<f64> = rows.iter().map(|r| r.phi).collect();
    let (eu, ep) = bar_errors(&x, &u, &phi, cfg.material.l0);
    println!("L2_rel u = {eu:.6e}");
    println!("L2_rel phi = {ep:.6e}");
    Ok(ExitCode::SUCCESS)
}

fn export_cloud(cfg: &RunConfig, out: Option<&Path>) -> Result<ExitCode> {
    let domain = presets::by_name(&cfg.preset, cfg.material.l0)?;
    let cloud = build_cloud(&domain.mesh, &domain.patches, cfg.gauss_per_dim)?;
    match out {
        Some(p) => cloud.write_csv(BufWriter::new(File::create(p)?))?,
        None => cloud.write_csv(std::io::stdout().lock())?,
    }
    eprintln!("{} points, {} cells, volume {:.12}", cloud.len(), domain.mesh.len(), cloud.volume());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config, out, seed, steps, threads, history, no_transfer } => load_config(&config).and_then(|mut cfg| {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = steps {
                cfg.load.n_steps = n;
            }
            if let Some(t) = threads {
                cfg.threads = t;
            }
            if let Some(h) = history {
                cfg.history = match h {
                    History::Frozen => HistoryPolicy::Frozen,
                    History::Live => HistoryPolicy::Live,
                };
            }
            if no_transfer {
                cfg.transfer.enabled = false;
            }
            solve(cfg, out)
        }),
        Command::Check { suite, seed } => check(&suite, seed),
        Command::Errors { fields, preset, config } => errors(&fields, &preset, config.as_deref()),
        Command::ExportCloud { config, out } => load_config(&config).and_then(|cfg| export_cloud(&cfg, out.as_deref())),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

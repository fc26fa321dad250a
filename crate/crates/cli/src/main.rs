//! `monfer`: run monitored free-fermion ensembles and the analyses built on
//! them. Curves are written as CSV (`abscissa, mean, stderr, n_samples`)
//! next to a JSON manifest; reports go to stdout as JSON.

mod analyze;
mod config;
mod io;
mod simulate;
mod theory;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use monfer::engine::ModelKind;
use monfer::fock::lockstep;
use monfer::theory::TheoryParams;
use serde::Serialize;

use crate::analyze::ResultDir;
use crate::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "monfer", version, about = "Quantum-jump ensembles of monitored free fermions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    /// Fermion counting: loss and gain jumps.
    Fc,
    /// Occupation measurement: projective density jumps.
    Om,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Fc => ModelKind::FermionCounting,
            Model::Om => ModelKind::OccupationMeasurement,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    /// Crossover scale of C_l per input and its γ scaling.
    Crossover,
    /// Maximum of the effective central charge per input and its γ scaling.
    Maximum,
    /// Residuals of I2 - I3 against the CFT form.
    CftCollapse,
    /// Power-law fit of one curve file.
    PowerLaw,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trajectory ensemble described by a JSON configuration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (default: configuration, then all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Base seed; trajectory i uses seed XOR i.
        #[arg(long)]
        seed: Option<u64>,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long, hide = true)]
        halt_after: Option<usize>,
    },
    /// Tabulate the field-theory predictions on given grids.
    Theory {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 0.5)]
        filling: f64,
        #[arg(long, default_value_t = 1.0)]
        hopping: f64,
        /// 1/2 with particle-hole symmetry, 1 without.
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        /// Momenta for C_q.
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        /// Distances for C_l.
        #[arg(long, value_delimiter = ',')]
        l: Vec<f64>,
        /// Interval sizes for S_ℓ and c_ℓ.
        #[arg(long, value_delimiter = ',')]
        ell: Vec<f64>,
        /// Entropy offset for the renormalized S_ℓ.
        #[arg(long)]
        s0: Option<f64>,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Analyse simulation output directories and print a JSON report.
    Analyze {
        #[arg(value_enum)]
        task: Task,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Lower window edge of the collapse in units of l₀.
        #[arg(long, default_value_t = 8.0)]
        a: f64,
        /// Central charge for the collapse (default: measured maximum).
        #[arg(long)]
        c: Option<f64>,
        /// Upper window edge of the collapse (default: measured crossover).
        #[arg(long)]
        l_c: Option<f64>,
        /// Start of the tangent search for the crossover (default: l₀).
        #[arg(long)]
        x_min: Option<f64>,
        /// Curve file for power-law fits.
        #[arg(long, default_value = "k.csv")]
        file: String,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = f64::INFINITY)]
        hi: f64,
        /// Bootstrap seed for maxima.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Fock-space oracle and both Gaussian engines in lockstep.
    OracleCheck {
        #[arg(long, default_value_t = 6)]
        l: usize,
        #[arg(long, value_enum, default_value = "fc")]
        model: Model,
        #[arg(long, default_value_t = 200)]
        jumps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        hopping: f64,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => io::write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate {
            config,
            workers,
            seed,
            resume,
            output_dir,
            halt_after,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.params.seed = s;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            let m = simulate::simulate(&cfg, &simulate::RunOptions { resume, halt_after })?;
            eprintln!(
                "{} trajectories, {} jumps; wrote {} files to {}",
                m.n_traj,
                m.total_jumps,
                m.files.len() + 1,
                cfg.output_dir.display()
            );
            Ok(true)
        }
        Command::Theory {
            gamma,
            filling,
            hopping,
            beta,
            q,
            l,
            ell,
            s0,
            output_dir,
        } => {
            let p = TheoryParams::new(filling, hopping, gamma)?.with_beta(beta);
            let m = theory::theory(&p, &theory::Grids { q, l, ell, s0 }, &output_dir)?;
            emit(&m.scales, None)?;
            Ok(true)
        }
        Command::Analyze {
            task,
            inputs,
            a,
            c,
            l_c,
            x_min,
            file,
            lo,
            hi,
            seed,
            out,
        } => {
            let dirs = inputs.iter().map(|p| ResultDir::open(p)).collect::<Result<Vec<_>>>()?;
            let single = || -> Result<&ResultDir> {
                match dirs.as_slice() {
                    [d] => Ok(d),
                    _ => anyhow::bail!("this task takes exactly one input directory"),
                }
            };
            match task {
                Task::Crossover => emit(&analyze::crossover(&dirs, x_min)?, out.as_ref())?,
                Task::Maximum => emit(&analyze::maximum(&dirs, seed)?, out.as_ref())?,
                Task::CftCollapse => emit(&analyze::cft_collapse(single()?, a, c, l_c, seed)?, out.as_ref())?,
                Task::PowerLaw => emit(&analyze::power_law(single()?, &file, lo, hi)?, out.as_ref())?,
            }
            Ok(true)
        }
        Command::OracleCheck {
            l,
            model,
            jumps,
            seed,
            gamma,
            hopping,
            tolerance,
        } => {
            let r = lockstep(l, hopping, model.into(), gamma, jumps, seed).context("oracle check")?;
            let passed = r.passed(tolerance);
            #[derive(Serialize)]
            struct Out {
                #[serde(flatten)]
                report: monfer::fock::LockstepReport,
                tolerance: f64,
                passed: bool,
            }
            emit(
                &Out {
                    report: r,
                    tolerance,
                    passed,
                },
                None,
            )?;
            Ok(passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

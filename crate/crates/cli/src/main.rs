use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tailfair::experiment::eval::parse_assignments;
use tailfair::experiment::{
    eval_bounds_command, render_svg, run_sweep, verify_bounds, write_csv, ExperimentConfig, Size,
};
use tailfair::synth::{generate_continuous, SynthParams};
use tailfair::{rng_from_seed, Error};

/// Sweeps, bound checks and bound tables for the noisy-majority learner on
/// long-tailed data.
#[derive(Parser)]
#[command(name = "tailfair", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write one CSV row (or an SVG plot) per grid point.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Check the analytic bounds against simulation; exits 1 on any failure.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Print one bound evaluator, e.g. `bounds thm1 p=0.26 c=10 c1=0.1 c2=0.6896`.
    Bounds { name: String, params: Vec<String> },
    /// Write a continuous synthetic dataset as CSV.
    Gensynth {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides metrics.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides output.path; stdout when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides metrics.trials.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Sweep { common, format } => {
            let cfg = common.load()?;
            if cfg.sweep.is_none() {
                return Err(Error::ConfigValue(
                    "sweep needs sweep.var and sweep.grid".into(),
                ));
            }
            let rows = run_sweep(&cfg)?;
            let mut out = open_output(cfg.output.as_deref())?;
            match format {
                Format::Csv => write_csv(&rows, &mut out)?,
                Format::Svg => {
                    let var = cfg.sweep.as_ref().map_or("value", |s| s.var.as_str());
                    out.write_all(render_svg(&rows, var).as_bytes())?;
                }
            }
            out.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { common } => {
            let cfg = common.load()?;
            let report = verify_bounds(&cfg)?;
            let mut out = open_output(cfg.output.as_deref())?;
            write!(out, "{report}")?;
            out.flush()?;
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Bounds { name, params } => {
            let table = eval_bounds_command(&name, &parse_assignments(&params)?)?;
            print!("{table}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Gensynth { common } => {
            let cfg = common.load()?;
            let c = match cfg.size {
                Size::Ratio(c) => c,
                Size::Count(n) => n as f64 / cfg.m as f64,
            };
            let params = SynthParams {
                sigma: cfg.sigma,
                n_labels: cfg.n_labels,
                seed: cfg.seed,
                ..SynthParams::new(cfg.p, cfg.k, cfg.m, c)
            };
            let data = generate_continuous(&params, &mut rng_from_seed(cfg.seed))?;
            let mut out = open_output(cfg.output.as_deref())?;
            data.write_csv(&mut out)?;
            out.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use qgles::convergence::{self, Operator, DEFAULT_MESHES};
use qgles::io::{self, OUTPUT_DIR_ENV};
use qgles::{munk_scale, BenchmarkCase, ModelKind, PhysicalParams, RunOutput, SimulationConfig};

#[derive(Parser)]
#[command(name = "qgles", version, about = "Barotropic vorticity solver with differential filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a TOML config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config and the environment).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run a double-gyre benchmark case.
    Bench {
        case: CaseArg,
        /// Mesh as NXxNY, e.g. 16x32.
        #[arg(long, default_value = "16x32", value_parser = parse_mesh)]
        mesh: (usize, usize),
        #[arg(long, value_enum, default_value = "bvnl")]
        model: ModelArg,
        /// Final time (default 100).
        #[arg(long)]
        t_end: Option<f64>,
        /// Start of the averaging window (default 20, clamped to t_end / 2 for short runs).
        #[arg(long)]
        avg_start: Option<f64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Manufactured-solution refinement study of an elliptic operator.
    Convergence {
        #[arg(value_enum)]
        operator: OperatorArg,
    },
    /// Print the Munk layer width L * cbrt(Ro / Re).
    Munk {
        #[arg(long)]
        ro: f64,
        #[arg(long)]
        re: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Case1,
    Case2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Qge,
    Bv,
    Bvnl,
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorArg {
    Poisson,
    Filter,
}

fn parse_mesh(s: &str) -> Result<(usize, usize), String> {
    let (nx, ny) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NXxNY, got '{s}'"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| format!("bad mesh dimension '{v}' in '{s}'"))
    };
    Ok((parse(nx)?, parse(ny)?))
}

fn output_dir(flag: Option<PathBuf>, config: &SimulationConfig, fallback: &str) -> PathBuf {
    if let Some(dir) = flag {
        return dir;
    }
    if std::env::var_os(OUTPUT_DIR_ENV).is_some() || config.output_dir.is_some() {
        return io::resolve_output_dir(config);
    }
    PathBuf::from("output").join(fallback)
}

fn summarize(out: &RunOutput, dir: &std::path::Path) {
    let stats = &out.stats;
    println!("steps           {}", out.final_state.step);
    println!("final time      {}", out.final_state.time);
    println!("mean energy     {}", out.record.energy_mean());
    println!("window samples  {}", out.record.sample_count());
    if out.mesh.ny() >= 2 {
        println!("gyre count      {}", qgles::gyre_count(&out.mesh, &out.record.psi_mean()));
    }
    println!(
        "mean iterations transport {:.2}  filter {:.2}  poisson {:.2}",
        stats.transport.mean(),
        stats.filter.mean(),
        stats.poisson.mean()
    );
    println!("output          {}", dir.display());
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, output } => {
            let cfg = io::read_config(&config)?;
            let stem = config
                .file_stem()
                .map_or_else(|| "run".to_string(), |s| s.to_string_lossy().into_owned());
            let dir = output_dir(output, &cfg, &stem);
            let out = io::run_to_dir(cfg, &dir)?;
            summarize(&out, &dir);
        }
        Command::Bench { case, mesh, model, t_end, avg_start, output } => {
            let case = match case {
                CaseArg::Case1 => BenchmarkCase::Case1,
                CaseArg::Case2 => BenchmarkCase::Case2,
            };
            let model = match model {
                ModelArg::Qge => ModelKind::Qge,
                ModelArg::Bv => ModelKind::BvAlpha,
                ModelArg::Bvnl => ModelKind::BvNlAlpha,
            };
            let mut cfg = SimulationConfig::double_gyre(case, model, mesh.0, mesh.1);
            if let Some(t) = t_end {
                if t.is_nan() || t <= cfg.time.t0 {
                    bail!("--t-end must exceed the start time {}", cfg.time.t0);
                }
                cfg.time.t_end = t;
                cfg.time.avg_start = cfg.time.avg_start.min(0.5 * t);
            }
            if let Some(a) = avg_start {
                cfg.time.avg_start = a;
            }
            let name = format!(
                "{}_{}_{}x{}",
                match case {
                    BenchmarkCase::Case1 => "case1",
                    BenchmarkCase::Case2 => "case2",
                },
                model.name(),
                mesh.0,
                mesh.1
            );
            let dir = output_dir(output, &cfg, &name);
            let out = io::run_to_dir(cfg, &dir)?;
            summarize(&out, &dir);
        }
        Command::Convergence { operator } => {
            let operator = match operator {
                OperatorArg::Poisson => Operator::Poisson,
                OperatorArg::Filter => Operator::Filter,
            };
            let study = convergence::study(operator, &DEFAULT_MESHES)?;
            let rates = study.rates();
            println!("{:>8} {:>8} {:>12} {:>24} {:>8}", "nx", "ny", "h", "l2_error", "rate");
            for (k, level) in study.levels.iter().enumerate() {
                let rate = k
                    .checked_sub(1)
                    .map_or_else(|| "-".to_string(), |r| format!("{:.3}", rates[r]));
                println!(
                    "{:>8} {:>8} {:>12.6} {:>24.16e} {:>8}",
                    level.nx, level.ny, level.h, level.l2_error, rate
                );
            }
        }
        Command::Munk { ro, re } => {
            let params = PhysicalParams::new(ro, re);
            params.validate().context("invalid parameters")?;
            println!("{}", munk_scale(&params));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qgles: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

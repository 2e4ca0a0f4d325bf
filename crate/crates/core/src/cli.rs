//! Command-line front end. The `zipshape` binary is a thin wrapper around [`main`].
//!
//! Exit codes: 0 on success, 2 for usage and scenario errors, 3 for failures during
//! a run (for example a CPL singularity).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{scenario_from_table, set_path};
use crate::engine::{
    compute_metrics, read_trace_csv, run_scenario, write_trace_csv, InitialConditions, Metrics, Scenario,
};
use crate::error::{Error, Result};
use crate::plant::{DisturbanceVector, PlantState};
use crate::reference::{solve_equilibrium, static_reference};
use crate::stability::{
    initial_membership, sample_domain, write_domain_csv, DomainPoint, DomainSpec, ErrorState, PointTag,
};
use crate::sweep::{final_v_star, run_sweep, write_sweep_csv, GridAxis};

#[derive(Debug, Parser)]
#[command(
    name = "zipshape",
    version,
    about = "Buck converter with ZIP load: closed-loop simulation and analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario, write its trace and print step-response metrics.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
        /// Also write an SVG plot of vc, i1, mu and the disturbance estimates.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Noise seed; ignored when the scenario has no [noise] section.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        overrides: Overrides,
        /// Metrics window start (s).
        #[arg(long, default_value_t = 0.0)]
        t_from: f64,
    },
    /// Print the operating point for the scenario's reference voltage.
    Equilibrium {
        scenario: PathBuf,
        /// Use this reference instead of the scenario's.
        #[arg(long)]
        v_star: Option<f64>,
    },
    /// Sample the estimated domain of attraction and optional trajectories.
    Domain {
        scenario: PathBuf,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "domain.csv")]
        out: PathBuf,
        /// Trajectory overlay from `i1,vc,i2,xc`; repeatable.
        #[arg(long = "ic", value_name = "I1,VC,I2,XC")]
        ics: Vec<String>,
        /// Keep every n-th trajectory sample.
        #[arg(long, default_value_t = 100)]
        stride: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a parameter grid and write a metrics table.
    Sweep {
        scenario: PathBuf,
        /// Grid axis as `section.key=v1,v2,...`; repeatable.
        #[arg(long = "grid", value_name = "KEY=VALUES", required = true)]
        grid: Vec<String>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        t_from: f64,
        /// Noise seed; ignored when the scenario has no [noise] section.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Recompute metrics from an existing trace CSV.
    Metrics {
        trace: PathBuf,
        #[arg(long)]
        v_star: f64,
        #[arg(long, default_value_t = 0.0)]
        t_from: f64,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
}

/// Parses arguments from the process environment, runs the command and maps errors to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli, &mut std::io::stdout()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_input_error() || matches!(e, Error::Io(_)) {
        2
    } else {
        3
    }
}

fn load_table(path: &Path, ov: &Overrides, seed: Option<u64>) -> Result<(toml::Table, String)> {
    let source = std::fs::read_to_string(path)?;
    let mut table: toml::Table = source
        .parse()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    if let Some(dt) = ov.dt {
        set_path(&mut table, "sim.dt", toml::Value::Float(dt))?;
    }
    if let Some(t_end) = ov.t_end {
        set_path(&mut table, "sim.t_end", toml::Value::Float(t_end))?;
    }
    if let Some(seed) = seed {
        if table.contains_key("noise") {
            let seed = i64::try_from(seed).map_err(|_| Error::Parse("seed too large".into()))?;
            set_path(&mut table, "noise.seed", toml::Value::Integer(seed))?;
        }
    }
    Ok((table, source))
}

fn load(path: &Path, ov: &Overrides, seed: Option<u64>) -> Result<Scenario> {
    let (table, source) = load_table(path, ov, seed)?;
    scenario_from_table(table, Some(&source))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn print_metrics<W: Write>(out: &mut W, m: &Metrics) -> Result<()> {
    writeln!(out, "overshoot_v={:.6}", m.overshoot_v)?;
    writeln!(out, "overshoot_pct={:.4}", m.overshoot_pct)?;
    match m.settling_time_s {
        Some(t) => writeln!(out, "settling_time_s={t:.6}")?,
        None => writeln!(out, "settling_time_s=none")?,
    }
    writeln!(out, "steady_state_error_v={:.6}", m.steady_state_error_v)?;
    writeln!(out, "peak_deviation_v={:.6}", m.peak_deviation_v)?;
    Ok(())
}

fn parse_ic(spec: &str) -> Result<InitialConditions> {
    let vals: Vec<f64> = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("--ic `{spec}`: {e}")))?;
    match vals[..] {
        [i1, vc, i2, xc] => Ok(InitialConditions::at(PlantState::new(i1, vc, i2), xc)),
        _ => Err(Error::Parse(format!("--ic `{spec}` needs four values i1,vc,i2,xc"))),
    }
}

/// Executes one command, writing human-readable output to `out`.
pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            out: csv_path,
            plot,
            seed,
            overrides,
            t_from,
        } => {
            let s = load(&scenario, &overrides, seed)?;
            let trace = run_scenario(&s)?;
            write_trace_csv(create(&csv_path)?, &trace)?;
            if let Some(p) = plot {
                let title = scenario
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                create(&p)?.write_all(crate::plot::render_svg(&trace, &title).as_bytes())?;
            }
            print_metrics(out, &compute_metrics(&trace, final_v_star(&s), t_from)?)
        }
        Command::Equilibrium { scenario, v_star } => {
            let s = load(&scenario, &Overrides::default(), None)?;
            let r = solve_equilibrium(v_star.unwrap_or(s.v_star), &s.nominal, &DisturbanceVector::ZERO)?;
            writeln!(
                out,
                "x1*={:.3} A, x3*={:.3} A, mu*={:.4}",
                r.x1_star, r.x3_star, r.mu_star
            )?;
            Ok(())
        }
        Command::Domain {
            scenario,
            n,
            seed,
            out: csv_path,
            ics,
            stride,
            overrides,
        } => {
            let s = load(&scenario, &overrides, None)?;
            let reference = static_reference(s.v_star, &s.nominal, &DisturbanceVector::ZERO);
            let spec = DomainSpec {
                alpha: s.controller.alpha,
                k: s.controller.k,
                v_star: s.v_star,
                r_load: s.nominal.r_load,
                p_load: s.nominal.p_load,
            };
            let mut points = sample_domain(&s.nominal, &reference, &spec, n, seed)?;
            for ic in &ics {
                let initial = parse_ic(ic)?;
                let m = initial_membership(
                    &ErrorState::from_state(&initial.plant, initial.xc, &reference),
                    &s.nominal,
                    spec.alpha,
                    spec.k,
                    spec.v_star,
                    spec.r_load,
                    spec.p_load,
                )?;
                let mut run = s.clone();
                run.initial = initial;
                let trace = run_scenario(&run)?;
                let last = trace.last().map_or(f64::NAN, |r| r.vc);
                writeln!(
                    out,
                    "ic={ic} lhs={:.4} rhs={:.4} inside={} final_vc={last:.6}",
                    m.lhs, m.rhs, m.inside
                )?;
                points.extend(trace.iter().step_by(stride.max(1)).map(|r| DomainPoint {
                    x1: r.i1,
                    x2: r.vc,
                    x3: r.i2,
                    xc: r.xc,
                    tag: PointTag::Trajectory,
                }));
            }
            write_domain_csv(create(&csv_path)?, &points)?;
            writeln!(out, "wrote {} points to {}", points.len(), csv_path.display())?;
            Ok(())
        }
        Command::Sweep {
            scenario,
            grid,
            out: dir,
            t_from,
            seed,
            overrides,
        } => {
            let axes = grid.iter().map(|g| GridAxis::parse(g)).collect::<Result<Vec<_>>>()?;
            let (table, source) = load_table(&scenario, &overrides, seed)?;
            // Validate the base document up front so a broken file is a parse error.
            scenario_from_table(table.clone(), Some(&source))?;
            let rows = run_sweep(&table, &axes, t_from)?;
            std::fs::create_dir_all(&dir)?;
            let path = dir.join("metrics.csv");
            write_sweep_csv(create(&path)?, &axes, &rows)?;
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            writeln!(
                out,
                "{} points, {failed} failed, table at {}",
                rows.len(),
                path.display()
            )?;
            Ok(())
        }
        Command::Metrics { trace, v_star, t_from } => {
            let records = read_trace_csv(File::open(&trace)?)?;
            print_metrics(out, &compute_metrics(&records, v_star, t_from)?)
        }
    }
}

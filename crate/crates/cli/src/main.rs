//! `nemaflow` command-line front end.
//!
//! Exit codes: 0 success, 1 any error, 3 the run stopped on a singularity
//! flag (vanishing director or non-finite solution).

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use nemaflow::harness::execute;
use nemaflow::inequality::run_inequality_suite;
use nemaflow::io::{read_diagnostics, read_snapshot};
use nemaflow::monitor::gronwall_report;
use nemaflow::norms::{bmo_norm, lp_norm, sobolev_norm};
use nemaflow::{load_config, CubeFamily, Field, Grid};

const EXIT_ERROR: u8 = 1;
const EXIT_SINGULARITY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nemaflow",
    version,
    about = "Nematic liquid crystal flow solver and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a configuration, writing diagnostics and snapshots.
    Run { config: PathBuf },
    /// Print norms of both fields of a snapshot (L² if nothing is requested).
    Norms {
        snapshot: PathBuf,
        #[arg(long)]
        bmo: bool,
        #[arg(long, value_name = "P")]
        lp: Vec<f64>,
        /// Sobolev order and exponent, as `M,P`.
        #[arg(long, value_name = "M,P", value_parser = parse_sobolev)]
        sobolev: Vec<(u32, f64)>,
    },
    /// Estimate the inequality constants on deterministic random corpora.
    CheckInequalities {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 16)]
        n: usize,
    },
    /// Fit the exponential growth bound to a diagnostics table.
    Gronwall {
        diagnostics: PathBuf,
        #[arg(long = "t-star", value_name = "T", default_value_t = 0.0)]
        t_star: f64,
    },
}

fn parse_sobolev(s: &str) -> Result<(u32, f64), String> {
    let (m, p) = s.split_once(',').ok_or("expected M,P")?;
    let m = m.trim().parse().map_err(|e| format!("order {m:?}: {e}"))?;
    let p = p
        .trim()
        .parse()
        .map_err(|e| format!("exponent {p:?}: {e}"))?;
    Ok((m, p))
}

fn run(config: PathBuf) -> anyhow::Result<ExitCode> {
    let cfg = load_config(&config).with_context(|| format!("loading {}", config.display()))?;
    let out = execute(&cfg)?;
    println!("steps = {}", out.steps);
    println!("t = {:.15e}", out.state.t);
    println!("criterion_value = {:.15e}", out.criterion_value());
    let [a, b, c] = out.state.mean_director();
    println!("mean_director = {a:.15e} {b:.15e} {c:.15e}");
    println!("cfl_max = {:.6e}", out.cfl_max);
    match &out.failure {
        None => {
            println!("failure = none");
            Ok(ExitCode::SUCCESS)
        }
        Some(e) => {
            println!("failure = {e}");
            let code = if e.is_singularity() {
                EXIT_SINGULARITY
            } else {
                EXIT_ERROR
            };
            Ok(ExitCode::from(code))
        }
    }
}

fn norms(
    snapshot: PathBuf,
    bmo: bool,
    mut lp: Vec<f64>,
    sobolev: Vec<(u32, f64)>,
) -> anyhow::Result<()> {
    let s = read_snapshot(&snapshot).with_context(|| format!("reading {}", snapshot.display()))?;
    if !bmo && lp.is_empty() && sobolev.is_empty() {
        lp.push(2.0);
    }
    let cubes = CubeFamily::dyadic(*s.u.grid());
    let fields: [(&str, &Field); 2] = [("u", &s.u), ("d", &s.d)];
    for (name, f) in fields {
        for &p in &lp {
            println!("{name} lp {p} {:.15e}", lp_norm(f, p)?);
        }
        for &(m, p) in &sobolev {
            println!("{name} sobolev {m},{p} {:.15e}", sobolev_norm(f, m, p)?);
        }
        if bmo {
            println!("{name} bmo {:.15e}", bmo_norm(f, &cubes)?);
        }
    }
    Ok(())
}

fn check_inequalities(seed: u64, count: usize, dim: usize, n: usize) -> anyhow::Result<()> {
    let grid = Grid::periodic(dim, n)?;
    let rows = run_inequality_suite(grid, seed, count)?;
    println!(
        "{:<18} {:>7} {:>22} {:>22} {:>10} {:>7}",
        "inequality", "samples", "max_ratio", "max_ratio_half", "doubling", "argmax"
    );
    for r in rows {
        println!(
            "{:<18} {:>7} {:>22.15e} {:>22.15e} {:>10.4} {:>7}",
            r.name,
            r.samples,
            r.max_ratio,
            r.max_ratio_half,
            r.doubling_change(),
            r.argmax
        );
    }
    Ok(())
}

fn gronwall(diagnostics: PathBuf, t_star: f64) -> anyhow::Result<()> {
    let records = read_diagnostics(&diagnostics)
        .with_context(|| format!("reading {}", diagnostics.display()))?;
    if records.is_empty() {
        bail!("{} holds no records", diagnostics.display());
    }
    let report = gronwall_report(&records, t_star)?;
    println!("{:>22} {:>22} {:>22}", "t", "L", "A");
    for row in &report.rows {
        println!(
            "{:>22.15e} {:>22.15e} {:>22.15e}",
            row.t, row.energy, row.accumulated
        );
    }
    println!("t_star = {:.15e}", report.t_star);
    println!("c_fit = {:.15e}", report.c_fit);
    println!("c_envelope = {:.15e}", report.c_envelope);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(config),
        Command::Norms {
            snapshot,
            bmo,
            lp,
            sobolev,
        } => norms(snapshot, bmo, lp, sobolev).map(|_| ExitCode::SUCCESS),
        Command::CheckInequalities {
            seed,
            count,
            dim,
            n,
        } => check_inequalities(seed, count, dim, n).map(|_| ExitCode::SUCCESS),
        Command::Gronwall {
            diagnostics,
            t_star,
        } => gronwall(diagnostics, t_star).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

//! `geopid` command line: `run`, `compare`, `audit` and `export-ref`.
//!
//! Exit codes: 0 success, 2 config error, 3 simulation or output error,
//! 4 invariant or ordering check failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Parser, Subcommand};

use crate::config;
use crate::error::{Error, Result};
use crate::harness::{
    audit, metrics, run_scenario, write_csv, CheckOutcome, ControllerKind, Metrics, ScenarioConfig,
};
use crate::trajectory::{helix_reference, write_reference_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "geopid",
    version,
    about = "Geometric PID attitude tracking scenarios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct ScenarioArgs {
    /// Scenario file (flat key = value).
    pub config: PathBuf,
    /// Overrides as key=value, applied in order.
    pub overrides: Vec<String>,
    /// Output directory; replaces output.dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its CSV and metrics.
    Run(ScenarioArgs),
    /// Run geometric PID, geometric PD and undisturbed PID side by side.
    Compare {
        #[command(flatten)]
        args: ScenarioArgs,
        /// Also run the Euler-angle PID baseline.
        #[arg(long)]
        classic: bool,
    },
    /// Run the scenario and check SO(3) drift, Lyapunov decrease and the
    /// disturbance neighborhood.
    Audit(ScenarioArgs),
    /// Write the feedforward helix reference as CSV.
    ExportRef {
        #[command(flatten)]
        args: ScenarioArgs,
        /// Destination file.
        #[arg(long, short)]
        output: PathBuf,
    },
}

enum Failure {
    Config(Error),
    Simulation(Error),
    Invariant(String),
}

impl Failure {
    fn report(self) -> i32 {
        match self {
            Failure::Config(e) => {
                eprintln!("{e}");
                EXIT_CONFIG
            }
            Failure::Simulation(e) => {
                eprintln!("simulation error: {e}");
                EXIT_SIMULATION
            }
            Failure::Invariant(msg) => {
                eprintln!("check failed: {msg}");
                EXIT_INVARIANT
            }
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;
type Cell = fn(&Metrics) -> String;

pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Compare { args, classic } => cmd_compare(&args, classic),
        Command::Audit(args) => cmd_audit(&args),
        Command::ExportRef { args, output } => cmd_export_ref(&args, &output),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => f.report(),
    }
}

fn load(args: &ScenarioArgs) -> std::result::Result<ScenarioConfig, Failure> {
    let mut cfg = config::load(&args.config, &args.overrides).map_err(Failure::Config)?;
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn sim<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| match e.root() {
        Error::Config(_) => Failure::Config(e),
        _ => Failure::Simulation(e),
    })
}

/// Runs `cfg` and writes `<stem>.csv` and `<stem>_metrics.txt`.
fn run_and_write(cfg: &ScenarioConfig) -> Result<Metrics> {
    let run = run_scenario(cfg)?;
    let m = metrics(&run.records)?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let stem = cfg.output_stem();
    let csv = stem.with_extension("csv");
    write_csv(&run.records, &csv)?;
    let txt = with_suffix(&stem, "_metrics.txt");
    fs::write(&txt, m.to_text()).map_err(|e| Error::io(&txt, e))?;
    Ok(m)
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_run(args: &ScenarioArgs) -> CmdResult {
    let cfg = load(args)?;
    let m = sim(run_and_write(&cfg))?;
    println!(
        "wrote {}",
        cfg.output_stem().with_extension("csv").display()
    );
    print!("{}", m.to_text());
    Ok(())
}

fn cmd_compare(args: &ScenarioArgs, classic: bool) -> CmdResult {
    let base = load(args)?;
    let mut variants = vec![
        ScenarioConfig {
            controller: ControllerKind::GeometricPid,
            ..base.clone()
        },
        ScenarioConfig {
            controller: ControllerKind::GeometricPd,
            ..base.clone()
        },
        ScenarioConfig {
            name: format!("{}_nodist", base.name),
            controller: ControllerKind::GeometricPid,
            disturbance: None,
            ..base.clone()
        },
    ];
    if classic {
        variants.push(ScenarioConfig {
            controller: ControllerKind::ClassicPid,
            ..base.clone()
        });
    }
    let results: Vec<Result<Metrics>> = thread::scope(|s| {
        let handles: Vec<_> = variants
            .iter()
            .map(|cfg| s.spawn(move || run_and_write(cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });

    let labels: Vec<String> = variants
        .iter()
        .map(|c| format!("{}_{}", c.name, c.controller.name()))
        .collect();
    let width = labels.iter().map(String::len).max().unwrap_or(0) + 2;
    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:<20} {}",
        "metric",
        labels
            .iter()
            .map(|l| format!("{l:>width$}"))
            .collect::<String>()
    );
    let rows: [(&str, Cell); 7] = [
        ("steady_omega_mean", |m| {
            format!("{:.6e}", m.steady_omega_mean)
        }),
        ("steady_omega_max", |m| {
            format!("{:.6e}", m.steady_omega_max)
        }),
        ("steady_phi_mean", |m| format!("{:.6e}", m.steady_phi_mean)),
        ("steady_phi_max", |m| format!("{:.6e}", m.steady_phi_max)),
        ("effort", |m| format!("{:.6e}", m.effort)),
        ("peak_tau", |m| format!("{:.6e}", m.peak_tau)),
        ("time_to_threshold", |m| {
            m.time_to_threshold
                .map_or("none".into(), |t| format!("{t:.2}"))
        }),
    ];
    for (name, cell) in rows {
        let _ = write!(table, "{name:<20} ");
        for r in &results {
            let v = match r {
                Ok(m) => cell(m),
                Err(_) => "aborted".into(),
            };
            let _ = write!(table, "{v:>width$}");
        }
        table.push('\n');
    }
    for (label, r) in labels.iter().zip(&results) {
        if let Err(e) = r {
            let _ = writeln!(table, "{label}: {e}");
        }
    }

    let mut results = results;
    if let Some(i) = (0..2).find(|&i| results[i].is_err()) {
        print!("{table}");
        return sim(Err(results.swap_remove(i).unwrap_err()));
    }
    let (Ok(pid), Ok(pd)) = (&results[0], &results[1]) else {
        unreachable!()
    };
    let mut failed = Vec::new();
    if base.disturbance.is_some() {
        for (name, ok) in [
            ("effort_PID < effort_PD", pid.effort < pd.effort),
            (
                "ss_omega_PID < ss_omega_PD",
                pid.steady_omega_mean < pd.steady_omega_mean,
            ),
        ] {
            let _ = writeln!(table, "{name}: {}", if ok { "pass" } else { "FAIL" });
            if !ok {
                failed.push(name);
            }
        }
    } else {
        table.push_str("ordering checks: not applicable without disturbance\n");
    }

    print!("{table}");
    fs::create_dir_all(&base.output_dir)
        .map_err(|e| Failure::Simulation(Error::io(&base.output_dir, e)))?;
    let path = base.output_dir.join(format!("{}_compare.txt", base.name));
    fs::write(&path, &table).map_err(|e| Failure::Simulation(Error::io(&path, e)))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(failed.join(", ")))
    }
}

fn cmd_audit(args: &ScenarioArgs) -> CmdResult {
    let cfg = load(args)?;
    let run = sim(run_scenario(&cfg))?;
    let checks = audit(&cfg, &run);
    let mut failed = Vec::new();
    for c in &checks {
        let tag = match c.outcome {
            CheckOutcome::Pass => "pass",
            CheckOutcome::Fail => {
                failed.push(c.name);
                "FAIL"
            }
            CheckOutcome::NotApplicable => "n/a",
        };
        println!("{:<26} {tag:<5} {}", c.name, c.detail);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(failed.join(", ")))
    }
}

fn cmd_export_ref(args: &ScenarioArgs, output: &Path) -> CmdResult {
    let cfg = load(args)?;
    let m = cfg.inertia.mass();
    let rows = sim(helix_reference(
        &cfg.helix,
        cfg.yaw,
        m,
        cfg.gravity,
        cfg.h,
        cfg.steps() + 3,
    ))?;
    sim(write_reference_csv(&rows, output))?;
    println!("wrote {} rows to {}", rows.len(), output.display());
    Ok(())
}

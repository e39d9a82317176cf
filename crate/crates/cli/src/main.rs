use std::path::PathBuf;
use std::process::ExitCode;

use awpi::analysis::{detect_deadlock, last_relock};
use awpi::{load_scenario, predict, simulate, write_run, Error, Format};
use clap::{Parser, Subcommand, ValueEnum};

/// Simulate a PI controller with anti-windup limiter and analyse chattering
/// and deadlock.
#[derive(Parser)]
#[command(name = "awpi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write time series, events and a report.
    Run {
        /// Scenario file, or the name of a bundled scenario.
        scenario: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Print the chattering thresholds and deadlock step bounds of a scenario.
    Predict {
        scenario: PathBuf,
        /// Horizon of the chattering-stop condition, in steps.
        #[arg(long)]
        k_max: Option<usize>,
        /// Input at which to evaluate the deadlock bounds.
        #[arg(long)]
        u_ref: Option<f64>,
    },
    /// Run the bundled reference scenarios and check the known outcomes.
    Verify,
    /// List the bundled scenarios.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    JsonLines,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::JsonLines => Format::JsonLines,
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Stalled { .. } => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run { scenario, out, format } => {
            let config = load_scenario(&scenario)?;
            let log = simulate(&config)?;
            let files = write_run(&config, &log, &out, format.into())?;
            println!(
                "{}: {} accepted steps, {} rejected attempts, {} deadlock episodes",
                config.display_name(),
                log.accepted().count(),
                log.rejected_count(),
                detect_deadlock(&log).len()
            );
            if let Some(r) = last_relock(&log) {
                println!("last relock at t = {:.6} s, u = {:.6}", r.t, r.u);
            }
            for path in [files.timeseries, files.events, files.report] {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Predict { scenario, k_max, u_ref } => {
            let config = load_scenario(&scenario)?;
            let p = predict(&config, k_max, u_ref)?;
            println!("{}: h = {:e} s", config.display_name(), p.h);
            for c in &p.chatter {
                println!(
                    "{} chattering threshold: u = {:.6} (binding k = {} of {})",
                    c.method, c.threshold_u, c.binding_k, c.k_max
                );
            }
            if let Some(d) = &p.deadlock {
                println!("deadlock bounds at u = {}:", d.u_ref);
                println!("  h_min_avoid = {:.6} s (differentiable input)", d.h_min_avoid);
                println!("  h_avoid_discrete = {:.6e} s (per-step increment)", d.h_avoid_discrete);
                println!("  h_max_exit = {:.6e} s = {:.4} ms", d.h_max_exit, d.h_max_exit * 1e3);
            }
            for note in &p.notes {
                println!("note: {note}");
            }
            Ok(0)
        }
        Command::Verify => {
            let checks = awpi::verify::verify_reference()?;
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} of {} checks passed", checks.len() - failed, checks.len());
            Ok(if failed == 0 { 0 } else { 1 })
        }
        Command::List => {
            for (name, _) in awpi::scenario::BUNDLED {
                let desc = awpi::bundled(name).and_then(|c| c.description).unwrap_or_default();
                println!("{name}\n    {desc}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

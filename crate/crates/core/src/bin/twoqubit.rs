use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twoqubit::evolution::Propagator;
use twoqubit::lindblad::JumpChannel;
use twoqubit::scenario::{self, parse_config_with_overrides, Preset, ScenarioConfig};
use twoqubit::system::eigen_system;
use twoqubit::Error;

const EXIT_INPUT: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

/// Open-system dynamics of two strongly coupled qubits.
#[derive(Parser)]
#[command(name = "twoqubit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one scenario and write its trajectory.
    Run(Common),
    /// Run a parameter sweep in parallel.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare the full model against the rate equations.
    Compare(Common),
    /// Check a configuration and its generator without propagating.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Preset (main, one_reservoir, dicke, local, detuning_sweep, custom).
    #[arg(long, short)]
    preset: Option<Preset>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// spectral, rk or expm.
    #[arg(long)]
    propagator: Option<Propagator>,
    /// Override a config key, e.g. `--set params.coupling=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self, extra: &[String]) -> Result<ScenarioConfig, Error> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path)?,
            None => String::new(),
        };
        let mut overrides = self.overrides.clone();
        if let Some(p) = self.propagator {
            overrides.push(format!("propagator={}", p.name()));
        }
        if let Some(dir) = &self.out {
            overrides.push(format!("dir=\"{}\"", dir.display()));
        }
        overrides.extend_from_slice(extra);
        parse_config_with_overrides(&text, self.preset, &overrides)
    }
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT })
}

fn print_json<T: serde::Serialize>(value: &T) {
    match serde_json::to_string_pretty(value) {
        Ok(s) => println!("{s}"),
        Err(e) => log::error!("cannot serialize summary: {e}"),
    }
}

fn run(common: &Common) -> Result<ExitCode, Error> {
    let config = common.resolve(&[])?;
    let out = scenario::run_scenario(&config)?;
    print_json(&out.summary);
    for f in &out.files {
        log::info!("wrote {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(common: &Common, workers: Option<usize>) -> Result<ExitCode, Error> {
    let extra: Vec<String> = workers.map(|w| format!("workers={w}")).into_iter().collect();
    let config = common.resolve(&extra)?;
    let result = scenario::sweep(&config)?;
    println!(
        "{} of {} sweep points completed",
        result.points.len(),
        result.points.len() + result.failures.len()
    );
    for f in &result.failures {
        eprintln!("point {} ({:.6e}): {}", f.index, f.value, f.error);
    }
    if result.points.is_empty() {
        return Ok(ExitCode::from(EXIT_NUMERICAL));
    }
    Ok(if result.is_complete() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PARTIAL)
    })
}

fn compare(common: &Common) -> Result<ExitCode, Error> {
    let config = common.resolve(&[])?;
    let (cmp, _) = scenario::write_comparison(&config)?;
    print_json(&cmp.summary);
    Ok(if cmp.summary.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    })
}

fn validate(common: &Common) -> Result<ExitCode, Error> {
    let config = common.resolve(&[])?;
    let system = scenario::build_system(config.preset, &config.params)?;
    let basis = eigen_system(&config.params)?;
    let residual = system.liouvillian.trace_preservation_residual();
    let max_re = system.liouvillian.spectrum().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    println!("preset            {}", config.preset.name());
    println!("resonant          {}", config.params.is_resonant());
    println!("rotating wave ok  {}", config.params.satisfies_rwa());
    println!("channels          {}", system.channels.iter().filter(|c| c.rate > 0.0).count());
    for JumpChannel {
        label,
        rate,
        transition_frequency,
        ..
    } in &system.channels
    {
        println!("  {label:<12} rate {rate:.6e}  frequency {transition_frequency:+.6e}");
    }
    println!("basis unitarity   {:.3e}", basis.unitarity_error());
    println!("trace residual    {residual:.3e}");
    println!("max Re(spectrum)  {max_re:.3e}");
    println!("grid points       {}", config.grid.times()?.len());
    if residual > 1e-12 || max_re > 1e-10 {
        eprintln!("generator fails trace preservation or stability checks");
        return Ok(ExitCode::from(EXIT_NUMERICAL));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Run(c) => run(c),
        Command::Sweep { common, workers } => sweep(common, *workers),
        Command::Compare(c) => compare(c),
        Command::Validate(c) => validate(c),
    };
    outcome.unwrap_or_else(|e| exit_for(&e))
}

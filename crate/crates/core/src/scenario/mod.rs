//! Named scenarios, their configuration files and on-disk outputs.

pub mod config;
pub mod output;
pub mod sweep;

use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{propagate, Propagator, Trajectory};
use crate::lindblad::OpenSystem;
use crate::observables::{fit_decay, records, LifetimeFit, ObservableRecord, PopulationVector};
use crate::reduced::{analytic_pas, analytic_validity_start, plateau_decay_rate, solve_rates};
use crate::system::{eigen_system, EigenBasis, SystemParams};

pub use config::{
    parse_config, parse_config_with_overrides, GridSpec, InitialState, Preset, ScenarioConfig, SweepParameter,
    SweepSpec, OUT_DIR_ENV,
};
pub use sweep::{sweep, SweepResult};

use output::{
    now, parameter_header, trajectory_csv, trajectory_dat, write_atomic, write_json, Manifest,
};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const PLOT_FILE: &str = "trajectory.dat";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const COMPARE_FILE: &str = "compare.csv";
pub const COMPARE_SUMMARY_FILE: &str = "compare_summary.json";

/// Largest allowed `|p_full − p_rates|` over the grid.
pub const RATES_TOLERANCE: f64 = 1e-6;
/// Allowed relative error of the closed-form decay rate.
pub const RATE_REL_TOLERANCE: f64 = 0.10;
/// Allowed relative error of the closed-form `p_as` past the validity time.
pub const ANALYTIC_REL_TOLERANCE: f64 = 0.02;

/// Generator used by a preset.
pub fn build_system(preset: Preset, params: &SystemParams) -> Result<OpenSystem> {
    if preset.uses_local_channels() {
        OpenSystem::local(params)
    } else {
        OpenSystem::global(params)
    }
}

fn in_scenario<T>(config: &ScenarioConfig, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Scenario {
        scenario: config.preset.name().into(),
        source: Box::new(e),
    })
}

/// In-memory result of one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub trajectory: Trajectory,
    pub basis: EigenBasis,
    pub records: Vec<ObservableRecord>,
}

impl ScenarioRun {
    pub fn column(&self, f: impl Fn(&ObservableRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    pub fn fit_lifetime(&self) -> Result<LifetimeFit> {
        fit_decay(&self.trajectory.times, &self.column(|r| r.p_as))
    }
}

/// Propagates a scenario and evaluates and validates every observable.
pub fn simulate(config: &ScenarioConfig) -> Result<ScenarioRun> {
    in_scenario(config, simulate_inner(config))
}

fn simulate_inner(config: &ScenarioConfig) -> Result<ScenarioRun> {
    let times = config.grid.times()?;
    let system = build_system(config.preset, &config.params)?;
    let basis = eigen_system(&config.params)?;
    let rho0 = config.initial_state.density_matrix();
    let trajectory = propagate(&system, &rho0, &times, config.propagator)?;
    let records = records(&trajectory, &basis)?;
    for r in &records {
        r.validate()?;
    }
    Ok(ScenarioRun {
        trajectory,
        basis,
        records,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub samples: usize,
    pub max_concurrence: f64,
    pub max_p_as: f64,
    pub final_p_gg: f64,
    pub max_trace_err: f64,
    pub min_eig: f64,
    pub lifetime: Option<LifetimeFit>,
}

/// Output files of a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run: ScenarioRun,
    pub summary: RunSummary,
    pub files: Vec<PathBuf>,
}

/// Simulates a scenario and writes the trajectory table, a gnuplot data file
/// and a JSON manifest into `config.output_dir`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput> {
    let started = now();
    let run = simulate(config)?;
    let max = |v: Vec<f64>| v.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let lifetime = match run.fit_lifetime() {
        Ok(fit) => Some(fit),
        Err(e) => {
            log::info!("no lifetime fit: {e}");
            None
        }
    };
    let summary = RunSummary {
        samples: run.records.len(),
        max_concurrence: max(run.column(|r| r.concurrence)),
        max_p_as: max(run.column(|r| r.p_as)),
        final_p_gg: run.records.last().map_or(f64::NAN, |r| r.p_gg),
        max_trace_err: max(run.column(|r| r.trace_err)),
        min_eig: run.column(|r| r.min_eig).into_iter().fold(f64::INFINITY, f64::min),
        lifetime,
    };

    let dir = &config.output_dir;
    let method = run.trajectory.method.name();
    let header = parameter_header(config, method);
    let csv_path = dir.join(TRAJECTORY_FILE);
    let dat_path = dir.join(PLOT_FILE);
    write_atomic(&csv_path, trajectory_csv(&header, &run.records).as_bytes())?;
    write_atomic(&dat_path, trajectory_dat(&header, &run.records).as_bytes())?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let files = vec![csv_path, dat_path, manifest_path.clone()];
    write_json(
        &manifest_path,
        &Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: "run",
            started,
            finished: now(),
            config,
            method_used: method,
            files: files.clone(),
            summary: &summary,
        },
    )?;
    Ok(RunOutput { run, summary, files })
}

/// One row of the full-vs-reduced comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompareRow {
    pub t: f64,
    pub p_as_full: f64,
    pub p_as_rates: f64,
    pub p_as_analytic: f64,
    pub analytic_valid: bool,
    pub residual_rates: f64,
    pub residual_analytic: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub max_residual_rates: f64,
    pub rates_tolerance: f64,
    pub rates_pass: bool,
    pub analytic_validity_start: f64,
    /// Largest `|p_rates − p_analytic| / p_analytic` past the validity time
    /// while `p_analytic` is at least 5% of its plateau.
    pub max_rel_analytic: f64,
    pub analytic_pass: bool,
    pub rate_analytic: f64,
    pub rate_full: Option<f64>,
    pub rate_rates: Option<f64>,
    pub rate_rel_error: Option<f64>,
    pub rate_pass: bool,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub method: Propagator,
    pub rows: Vec<CompareRow>,
    pub summary: CompareSummary,
}

/// Compares the full Lindblad populations with the rate equations and their
/// closed-form solution on the scenario's grid. Requires a resonant,
/// globally dissipated scenario starting in `|ee⟩`.
pub fn compare_full_vs_reduced(config: &ScenarioConfig) -> Result<Comparison> {
    in_scenario(config, compare_inner(config))
}

fn compare_inner(config: &ScenarioConfig) -> Result<Comparison> {
    let params = &config.params;
    if !params.is_resonant() {
        return Err(Error::DetunedParameters {
            detuning: params.detuning(),
        });
    }
    if config.preset.uses_local_channels() {
        return Err(Error::param("preset", "the rate equations describe the global model only"));
    }
    if config.initial_state != InitialState::Ee {
        return Err(Error::param("initial_state", "the comparison starts from |ee>"));
    }
    let run = simulate_inner(config)?;
    let times = &run.trajectory.times;
    let rates = solve_rates(&PopulationVector::EXCITED, times, params)?;
    let start = analytic_validity_start(params);

    let rows: Vec<CompareRow> = run
        .records
        .iter()
        .zip(&rates)
        .map(|(r, q)| {
            let a = analytic_pas(r.t, params)?;
            Ok(CompareRow {
                t: r.t,
                p_as_full: r.p_as,
                p_as_rates: q.p_as,
                p_as_analytic: a.p_as,
                analytic_valid: a.valid,
                residual_rates: (r.p_as - q.p_as).abs(),
                residual_analytic: (r.p_as - a.p_as).abs(),
            })
        })
        .collect::<Result<_>>()?;

    let max_residual_rates = rates
        .iter()
        .zip(&run.records)
        .flat_map(|(q, r)| {
            let full = [r.p_ee, r.p_s, r.p_as, r.p_gg];
            q.to_array().into_iter().zip(full).map(|(a, b)| (a - b).abs())
        })
        .fold(0.0, f64::max);
    let plateau = crate::reduced::quasi_stationary(params)?.p_as;
    let max_rel_analytic = rows
        .iter()
        .filter(|r| r.analytic_valid && r.p_as_analytic >= 0.05 * plateau)
        .map(|r| (r.p_as_rates - r.p_as_analytic).abs() / r.p_as_analytic)
        .fold(0.0, f64::max);

    let rate_analytic = plateau_decay_rate(params);
    let rate_full = run.fit_lifetime().ok().map(|f| f.rate);
    let rates_pas: Vec<f64> = rates.iter().map(|p| p.p_as).collect();
    let rate_rates = fit_decay(times, &rates_pas).ok().map(|f| f.rate);
    let rate_rel_error = rate_full.map(|g| (g - rate_analytic).abs() / rate_analytic);
    let rates_pass = max_residual_rates <= RATES_TOLERANCE;
    let analytic_pass = max_rel_analytic <= ANALYTIC_REL_TOLERANCE;
    let rate_pass = rate_rel_error.is_some_and(|e| e <= RATE_REL_TOLERANCE);
    let summary = CompareSummary {
        max_residual_rates,
        rates_tolerance: RATES_TOLERANCE,
        rates_pass,
        analytic_validity_start: start,
        max_rel_analytic,
        analytic_pass,
        rate_analytic,
        rate_full,
        rate_rates,
        rate_rel_error,
        rate_pass,
        pass: rates_pass && analytic_pass && rate_pass,
    };
    Ok(Comparison {
        method: run.trajectory.method,
        rows,
        summary,
    })
}

/// Runs the comparison and writes `compare.csv` and a JSON summary.
pub fn write_comparison(config: &ScenarioConfig) -> Result<(Comparison, Vec<PathBuf>)> {
    let started = now();
    let cmp = compare_full_vs_reduced(config)?;
    let dir = &config.output_dir;
    let mut text = parameter_header(config, cmp.method.name());
    text.push_str("t,p_as_full,p_as_rates,p_as_analytic,analytic_valid,residual_rates,residual_analytic\n");
    for r in &cmp.rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            output::fmt_f64(r.t),
            output::fmt_f64(r.p_as_full),
            output::fmt_f64(r.p_as_rates),
            output::fmt_f64(r.p_as_analytic),
            u8::from(r.analytic_valid),
            output::fmt_f64(r.residual_rates),
            output::fmt_f64(r.residual_analytic),
        ));
    }
    let csv = dir.join(COMPARE_FILE);
    write_atomic(&csv, text.as_bytes())?;
    let json = dir.join(COMPARE_SUMMARY_FILE);
    let files = vec![csv, json.clone()];
    write_json(
        &json,
        &Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: "compare",
            started,
            finished: now(),
            config,
            method_used: cmp.method.name(),
            files: files.clone(),
            summary: &cmp.summary,
        },
    )?;
    Ok((cmp, files))
}

//! Parameter sweeps run in parallel, one independent simulation per value.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::propagate;
use crate::observables::{concurrence, fit_decay, populations, LifetimeFit};
use crate::system::eigen_system;

use super::build_system;
use super::config::{ScenarioConfig, SweepParameter};
use super::output::{fmt_f64, now, write_atomic, write_json, Manifest};

pub const POINTS_DIR: &str = "sweep_points";
pub const MATRIX_FILE: &str = "sweep_concurrence.csv";
pub const PLOT_FILE: &str = "sweep.dat";
pub const SUMMARY_FILE: &str = "sweep_summary.csv";
pub const MANIFEST_FILE: &str = "sweep_manifest.json";

/// Concurrence and `|−⟩` population of one sweep value.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub value: f64,
    pub concurrence: Vec<f64>,
    pub p_as: Vec<f64>,
    pub lifetime: Option<LifetimeFit>,
    pub method: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepFailure {
    pub index: usize,
    pub value: f64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub times: Vec<f64>,
    /// Successful points in ascending value order.
    pub points: Vec<SweepPoint>,
    pub failures: Vec<SweepFailure>,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

impl SweepResult {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

fn run_point(config: &ScenarioConfig, index: usize, value: f64, times: &[f64]) -> Result<SweepPoint> {
    let params = config.sweep.parameter.apply(&config.params, value);
    params.validate()?;
    let system = build_system(config.preset, &params)?;
    let basis = eigen_system(&params)?;
    let rho0 = config.initial_state.density_matrix();
    let traj = propagate(&system, &rho0, times, config.propagator)?;
    let concurrence = traj.states.iter().map(concurrence).collect::<Result<Vec<_>>>()?;
    let p_as = traj
        .states
        .iter()
        .map(|rho| populations(rho, &basis).map(|p| p.p_as))
        .collect::<Result<Vec<_>>>()?;
    let lifetime = fit_decay(times, &p_as).ok();
    Ok(SweepPoint {
        index,
        value,
        concurrence,
        p_as,
        lifetime,
        method: traj.method.name(),
    })
}

fn point_file(dir: &Path, index: usize) -> PathBuf {
    dir.join(POINTS_DIR).join(format!("point_{index:04}.csv"))
}

fn point_csv(point: &SweepPoint, parameter: SweepParameter, times: &[f64]) -> String {
    let mut s = format!("# {} = {}\n# method = {}\nt,C,p_as\n", parameter.name(), fmt_f64(point.value), point.method);
    for ((t, c), p) in times.iter().zip(&point.concurrence).zip(&point.p_as) {
        let _ = writeln!(s, "{},{},{}", fmt_f64(*t), fmt_f64(*c), fmt_f64(*p));
    }
    s
}

fn merged_outputs(result: &SweepResult) -> (String, String, String) {
    let name = result.parameter.name();
    let mut matrix = format!("# rows: {name}; columns: t; entries: concurrence\n{name}");
    for t in &result.times {
        matrix.push(',');
        matrix.push_str(&fmt_f64(*t));
    }
    matrix.push('\n');
    let mut dat = format!("# {name} t C\n");
    let mut summary = format!("{name},rate,t_ent,r_squared,max_C,final_C,method\n");
    for p in &result.points {
        matrix.push_str(&fmt_f64(p.value));
        for c in &p.concurrence {
            matrix.push(',');
            matrix.push_str(&fmt_f64(*c));
        }
        matrix.push('\n');
        for (t, c) in result.times.iter().zip(&p.concurrence) {
            let _ = writeln!(dat, "{} {} {}", fmt_f64(p.value), fmt_f64(*t), fmt_f64(*c));
        }
        dat.push('\n');
        let max_c = p.concurrence.iter().copied().fold(0.0, f64::max);
        let final_c = p.concurrence.last().copied().unwrap_or(f64::NAN);
        let (rate, t_ent, r2) = p
            .lifetime
            .map_or((String::from("nan"), String::from("nan"), String::from("nan")), |f| {
                (fmt_f64(f.rate), fmt_f64(f.t_ent), fmt_f64(f.r_squared))
            });
        let _ = writeln!(
            summary,
            "{},{rate},{t_ent},{r2},{},{},{}",
            fmt_f64(p.value),
            fmt_f64(max_c),
            fmt_f64(final_c),
            p.method
        );
    }
    (matrix, dat, summary)
}

/// Runs every sweep value on `config.workers` threads (0 picks the number of
/// cores), writing each point atomically as it finishes and merging them
/// afterwards. Failed points are reported in the result and omitted from the
/// merged files.
pub fn sweep(config: &ScenarioConfig) -> Result<SweepResult> {
    let started = now();
    let times = config.grid.times()?;
    let values = config.sweep.values();
    let dir = &config.output_dir;
    fs::create_dir_all(dir.join(POINTS_DIR))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    let outcomes: Vec<std::result::Result<SweepPoint, SweepFailure>> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(index, &value)| {
                let fail = |e: Error| SweepFailure {
                    index,
                    value,
                    error: e.to_string(),
                };
                let point = run_point(config, index, value, &times).map_err(fail)?;
                write_atomic(
                    &point_file(dir, index),
                    point_csv(&point, config.sweep.parameter, &times).as_bytes(),
                )
                .map_err(fail)?;
                log::info!("sweep point {index} ({} = {value:.6e}) done", config.sweep.parameter.name());
                Ok(point)
            })
            .collect()
    });

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(p) => points.push(p),
            Err(f) => {
                log::error!("sweep point {} ({:.6e}) failed: {}", f.index, f.value, f.error);
                failures.push(f);
            }
        }
    }
    let mut result = SweepResult {
        parameter: config.sweep.parameter,
        times,
        points,
        failures,
        files: Vec::new(),
    };
    let (matrix, dat, summary) = merged_outputs(&result);
    let files = vec![
        dir.join(MATRIX_FILE),
        dir.join(PLOT_FILE),
        dir.join(SUMMARY_FILE),
        dir.join(MANIFEST_FILE),
    ];
    write_atomic(&files[0], matrix.as_bytes())?;
    write_atomic(&files[1], dat.as_bytes())?;
    write_atomic(&files[2], summary.as_bytes())?;
    #[derive(Serialize)]
    struct Totals<'a> {
        requested: usize,
        completed: usize,
        failures: &'a [SweepFailure],
    }
    write_json(
        &files[3],
        &Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: "sweep",
            started,
            finished: now(),
            config,
            method_used: config.propagator.name(),
            files: files.clone(),
            summary: Totals {
                requested: values.len(),
                completed: result.points.len(),
                failures: &result.failures,
            },
        },
    )?;
    result.files = files;
    Ok(result)
}

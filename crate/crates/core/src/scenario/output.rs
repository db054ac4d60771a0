//! File writers shared by the scenario runners.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::observables::ObservableRecord;

use super::config::ScenarioConfig;

pub const TRAJECTORY_COLUMNS: [&str; 9] = ["t", "p_ee", "p_s", "p_as", "p_gg", "S", "C", "trace_err", "min_eig"];

/// Formats with 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `# key = value` lines describing the resolved run, without timestamps so
/// identical runs give identical files.
pub fn parameter_header(config: &ScenarioConfig, method: &str) -> String {
    let p = &config.params;
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(s, "# {k} = {v}");
    };
    line("preset", config.preset.name().into());
    line("omega1", fmt_f64(p.omega1));
    line("omega2", fmt_f64(p.omega2));
    line("coupling", fmt_f64(p.coupling));
    line("gamma_dp1", fmt_f64(p.gamma_dp1));
    line("gamma_dp2", fmt_f64(p.gamma_dp2));
    line("gamma_rad", fmt_f64(p.gamma_rad));
    line("temp_dp", fmt_f64(p.temp_dp));
    line("temp_rad", fmt_f64(p.temp_rad));
    line("initial_state", config.initial_state.name().into());
    line("propagator", config.propagator.name().into());
    line("method_used", method.into());
    line(
        "grid",
        format!(
            "{} .. {} ({} per decade)",
            fmt_f64(config.grid.t_min),
            fmt_f64(config.grid.t_max),
            config.grid.points_per_decade
        ),
    );
    s
}

fn record_fields(r: &ObservableRecord) -> [f64; 9] {
    [r.t, r.p_ee, r.p_s, r.p_as, r.p_gg, r.entropy, r.concurrence, r.trace_err, r.min_eig]
}

pub fn trajectory_csv(header: &str, records: &[ObservableRecord]) -> String {
    let mut s = header.to_owned();
    s.push_str(&TRAJECTORY_COLUMNS.join(","));
    s.push('\n');
    for r in records {
        let row: Vec<String> = record_fields(r).iter().map(|&x| fmt_f64(x)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Whitespace-separated columns for gnuplot.
pub fn trajectory_dat(header: &str, records: &[ObservableRecord]) -> String {
    let mut s = header.to_owned();
    let _ = writeln!(s, "# {}", TRAJECTORY_COLUMNS.join(" "));
    for r in records {
        let row: Vec<String> = record_fields(r).iter().map(|&x| fmt_f64(x)).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub started: String,
    pub finished: String,
    pub config: &'a ScenarioConfig,
    pub method_used: &'a str,
    pub files: Vec<PathBuf>,
    pub summary: T,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Reads back the numeric rows of a trajectory CSV.
pub fn read_trajectory_csv(text: &str) -> Vec<[f64; 9]> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .filter_map(|l| {
            let v: Vec<f64> = l.split(',').filter_map(|x| x.parse().ok()).collect();
            <[f64; 9]>::try_from(v).ok()
        })
        .collect()
}

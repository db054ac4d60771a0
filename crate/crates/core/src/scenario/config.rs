//! Scenario configuration files.
//!
//! Grammar (one item per line):
//!
//! ```text
//! file     := { line }
//! line     := blank | comment | section | entry
//! comment  := '#' any*
//! section  := '[' name ']'                 (scenario | params | grid | sweep | output)
//! entry    := key '=' value [comment]
//! value    := number | word | '"' chars '"'
//! ```
//!
//! Entries before the first section header belong to `[scenario]`. Keys are
//! unique across sections, so command-line overrides may be written either
//! as `section.key=value` or as `key=value`.

use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::Propagator;
use crate::system::{antisymmetric_ket, symmetric_ket, DensityMatrix, SystemParams, EE, EG, GE, GG};

/// Environment variable that overrides the default output directory.
pub const OUT_DIR_ENV: &str = "TWOQUBIT_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Main,
    OneReservoir,
    Dicke,
    Local,
    DetuningSweep,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Main,
        Preset::OneReservoir,
        Preset::Dicke,
        Preset::Local,
        Preset::DetuningSweep,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Main => "main",
            Preset::OneReservoir => "one_reservoir",
            Preset::Dicke => "dicke",
            Preset::Local => "local",
            Preset::DetuningSweep => "detuning_sweep",
            Preset::Custom => "custom",
        }
    }

    /// Dephasing rates this preset pins to zero, as `(bath1, bath2)`.
    fn zeroed_dephasing(self) -> (bool, bool) {
        match self {
            Preset::Dicke => (true, true),
            Preset::OneReservoir => (true, false),
            _ => (false, false),
        }
    }

    pub fn uses_local_channels(self) -> bool {
        self == Preset::Local
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Ee,
    Eg,
    Ge,
    Gg,
    S,
    As,
}

impl InitialState {
    pub fn name(self) -> &'static str {
        match self {
            InitialState::Ee => "ee",
            InitialState::Eg => "eg",
            InitialState::Ge => "ge",
            InitialState::Gg => "gg",
            InitialState::S => "s",
            InitialState::As => "as",
        }
    }

    pub fn density_matrix(self) -> DensityMatrix {
        match self {
            InitialState::Ee => DensityMatrix::basis_state(EE),
            InitialState::Eg => DensityMatrix::basis_state(EG),
            InitialState::Ge => DensityMatrix::basis_state(GE),
            InitialState::Gg => DensityMatrix::basis_state(GG),
            InitialState::S => DensityMatrix::pure(&symmetric_ket()),
            InitialState::As => DensityMatrix::pure(&antisymmetric_ket()),
        }
    }
}

impl std::str::FromStr for InitialState {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        [
            InitialState::Ee,
            InitialState::Eg,
            InitialState::Ge,
            InitialState::Gg,
            InitialState::S,
            InitialState::As,
        ]
        .into_iter()
        .find(|x| x.name() == s)
        .ok_or_else(|| format!("unknown initial state `{s}` (expected ee, eg, ge, gg, s or as)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub points_per_decade: usize,
}

impl GridSpec {
    pub fn times(&self) -> Result<Vec<f64>> {
        crate::evolution::log_time_grid(self.t_min, self.t_max, self.points_per_decade)
    }
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// `ω1 − ω2` with `ω2` held fixed.
    Detuning,
    Coupling,
    GammaDp,
    GammaRad,
    TempDp,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Detuning => "detuning",
            SweepParameter::Coupling => "coupling",
            SweepParameter::GammaDp => "gamma_dp",
            SweepParameter::GammaRad => "gamma_rad",
            SweepParameter::TempDp => "temp_dp",
        }
    }

    /// Parameters with this sweep coordinate set to `value`.
    pub fn apply(self, base: &SystemParams, value: f64) -> SystemParams {
        let mut p = *base;
        match self {
            SweepParameter::Detuning => p.omega1 = base.omega2 + value,
            SweepParameter::Coupling => p.coupling = value,
            SweepParameter::GammaDp => {
                p.gamma_dp1 = value;
                p.gamma_dp2 = value;
            }
            SweepParameter::GammaRad => p.gamma_rad = value,
            SweepParameter::TempDp => p.temp_dp = value,
        }
        p
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        [
            SweepParameter::Detuning,
            SweepParameter::Coupling,
            SweepParameter::GammaDp,
            SweepParameter::GammaRad,
            SweepParameter::TempDp,
        ]
        .into_iter()
        .find(|x| x.name() == s)
        .ok_or_else(|| format!("unknown sweep parameter `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        (0..self.steps)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub preset: Preset,
    pub params: SystemParams,
    pub grid: GridSpec,
    pub propagator: Propagator,
    pub initial_state: InitialState,
    pub output_dir: PathBuf,
    pub sweep: SweepSpec,
    pub workers: usize,
}

impl ScenarioConfig {
    /// Defaults of a preset with no overrides.
    pub fn preset(preset: Preset) -> Self {
        parse_config_with_overrides("", Some(preset), &[]).expect("preset defaults are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Scenario,
    Params,
    Grid,
    Sweep,
    Output,
}

impl Section {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "scenario" => Section::Scenario,
            "params" => Section::Params,
            "grid" => Section::Grid,
            "sweep" => Section::Sweep,
            "output" => Section::Output,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Section::Scenario => "scenario",
            Section::Params => "params",
            Section::Grid => "grid",
            Section::Sweep => "sweep",
            Section::Output => "output",
        }
    }
}

const KEYS: &[(&str, Section)] = &[
    ("preset", Section::Scenario),
    ("propagator", Section::Scenario),
    ("initial_state", Section::Scenario),
    ("omega1", Section::Params),
    ("omega2", Section::Params),
    ("coupling", Section::Params),
    ("gamma_dp", Section::Params),
    ("gamma_dp1", Section::Params),
    ("gamma_dp2", Section::Params),
    ("gamma_rad", Section::Params),
    ("temperature", Section::Params),
    ("temp_dp", Section::Params),
    ("temp_rad", Section::Params),
    ("t_min", Section::Grid),
    ("t_max", Section::Grid),
    ("points_per_decade", Section::Grid),
    ("parameter", Section::Sweep),
    ("min", Section::Sweep),
    ("max", Section::Sweep),
    ("steps", Section::Sweep),
    ("workers", Section::Sweep),
    ("dir", Section::Output),
];

/// A single `key = value` with the line it came from (0 for overrides).
#[derive(Debug, Clone)]
struct Entry {
    key: &'static str,
    value: String,
    line: usize,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn lookup_key(section: Section, key: &str, line: usize) -> Result<&'static str> {
    match KEYS.iter().find(|(k, _)| *k == key) {
        Some((k, s)) if *s == section => Ok(k),
        Some((_, s)) => Err(err(line, format!("key `{key}` belongs to section [{}], not [{}]", s.name(), section.name()))),
        None => Err(err(line, format!("unknown key `{key}` in section [{}]", section.name()))),
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(raw: &str, line: usize) -> Result<String> {
    let v = raw.trim();
    if let Some(rest) = v.strip_prefix('"') {
        return rest
            .strip_suffix('"')
            .map(str::to_owned)
            .ok_or_else(|| err(line, "unterminated string"));
    }
    if v.is_empty() {
        return Err(err(line, "missing value"));
    }
    Ok(v.to_owned())
}

fn tokenize(text: &str) -> Result<Vec<Entry>> {
    let mut section = Section::Scenario;
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        if let Some(inner) = body.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .ok_or_else(|| err(line, "malformed section header"))?
                .trim();
            section = Section::parse(name).ok_or_else(|| err(line, format!("unknown section [{name}]")))?;
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{body}`")))?;
        let key = lookup_key(section, key.trim(), line)?;
        if entries.iter().any(|e: &Entry| e.key == key) {
            return Err(err(line, format!("duplicate key `{key}`")));
        }
        entries.push(Entry {
            key,
            value: unquote(value, line)?,
            line,
        });
    }
    Ok(entries)
}

fn parse_override(spec: &str) -> Result<Entry> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| err(0, format!("override `{spec}` must look like key=value")))?;
    let key = key.trim();
    let key = match key.split_once('.') {
        Some((sec, k)) => {
            let section = Section::parse(sec).ok_or_else(|| err(0, format!("unknown section `{sec}` in override")))?;
            lookup_key(section, k, 0)?
        }
        None => KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(k, _)| *k)
            .ok_or_else(|| err(0, format!("unknown key `{key}` in override")))?,
    };
    Ok(Entry {
        key,
        value: unquote(value, 0)?,
        line: 0,
    })
}

fn number(e: &Entry) -> Result<f64> {
    e.value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(e.line, format!("`{}` expects a number, got `{}`", e.key, e.value)))
}

fn count(e: &Entry) -> Result<usize> {
    e.value
        .parse::<usize>()
        .map_err(|_| err(e.line, format!("`{}` expects a non-negative integer, got `{}`", e.key, e.value)))
}

fn word<T: std::str::FromStr<Err = String>>(e: &Entry) -> Result<T> {
    e.value.parse::<T>().map_err(|m| err(e.line, m))
}

/// Parses a config file with the preset's defaults filled in.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_config_with_overrides(text, None, &[])
}

/// Parses a config file, then applies an optional preset override and
/// `key=value` overrides (later wins).
pub fn parse_config_with_overrides(
    text: &str,
    preset_override: Option<Preset>,
    overrides: &[String],
) -> Result<ScenarioConfig> {
    let mut entries = tokenize(text)?;
    for spec in overrides {
        let e = parse_override(spec)?;
        entries.retain(|x| x.key != e.key);
        entries.push(e);
    }
    let get = |key: &str| entries.iter().find(|e| e.key == key);

    let preset = match preset_override {
        Some(p) => p,
        None => get("preset").map(word::<Preset>).transpose()?.unwrap_or(Preset::Main),
    };

    let mut params = SystemParams::default();
    let set = |key: &str, target: &mut f64| -> Result<()> {
        if let Some(e) = get(key) {
            *target = number(e)?;
        }
        Ok(())
    };
    set("omega1", &mut params.omega1)?;
    set("omega2", &mut params.omega2)?;
    set("coupling", &mut params.coupling)?;
    if let Some(e) = get("gamma_dp") {
        let v = number(e)?;
        params.gamma_dp1 = v;
        params.gamma_dp2 = v;
    }
    set("gamma_dp1", &mut params.gamma_dp1)?;
    set("gamma_dp2", &mut params.gamma_dp2)?;
    set("gamma_rad", &mut params.gamma_rad)?;
    if let Some(e) = get("temperature") {
        let v = number(e)?;
        params.temp_dp = v;
        params.temp_rad = v;
    }
    set("temp_dp", &mut params.temp_dp)?;
    set("temp_rad", &mut params.temp_rad)?;

    let (zero1, zero2) = preset.zeroed_dephasing();
    for (zero, key) in [(zero1, "gamma_dp1"), (zero2, "gamma_dp2")] {
        if !zero {
            continue;
        }
        for source in ["gamma_dp", key] {
            if let Some(e) = get(source) {
                if number(e)? != 0.0 {
                    return Err(err(
                        e.line,
                        format!("preset `{}` requires {key} = 0, but `{source}` sets {}", preset.name(), e.value),
                    ));
                }
            }
        }
    }
    if zero1 {
        params.gamma_dp1 = 0.0;
    }
    if zero2 {
        params.gamma_dp2 = 0.0;
    }
    let first_param_line = entries
        .iter()
        .filter(|e| KEYS.iter().any(|(k, s)| *k == e.key && *s == Section::Params))
        .map(|e| e.line)
        .min()
        .unwrap_or(0);
    params.validate().map_err(|e| err(first_param_line, e.to_string()))?;

    let sweep_preset = preset == Preset::DetuningSweep;
    let mut grid = if sweep_preset {
        GridSpec {
            t_min: 1e2,
            t_max: 1e8,
            points_per_decade: 10,
        }
    } else {
        GridSpec {
            t_min: 1.0,
            t_max: 1e10,
            points_per_decade: 10,
        }
    };
    if let Some(e) = get("t_min") {
        grid.t_min = number(e)?;
    }
    if let Some(e) = get("t_max") {
        grid.t_max = number(e)?;
    }
    if let Some(e) = get("points_per_decade") {
        grid.points_per_decade = count(e)?;
    }
    if let Err(e) = grid.times() {
        let line = ["t_min", "t_max", "points_per_decade"]
            .iter()
            .filter_map(|k| get(k).map(|e| e.line))
            .max()
            .unwrap_or(0);
        return Err(err(line, e.to_string()));
    }

    let propagator = get("propagator")
        .map(word::<Propagator>)
        .transpose()?
        .unwrap_or(Propagator::Spectral);
    let initial_state = get("initial_state")
        .map(word::<InitialState>)
        .transpose()?
        .unwrap_or(InitialState::Ee);

    let parameter = get("parameter")
        .map(word::<SweepParameter>)
        .transpose()?
        .unwrap_or(SweepParameter::Detuning);
    let (def_min, def_max) = match parameter {
        SweepParameter::Detuning => (0.0, 0.5 * params.coupling),
        SweepParameter::Coupling => (0.5 * params.coupling, 2.0 * params.coupling),
        SweepParameter::GammaDp => (0.0, 2.0 * params.gamma_dp1.max(params.gamma_dp2)),
        SweepParameter::GammaRad => (0.0, 2.0 * params.gamma_rad),
        SweepParameter::TempDp => (0.5 * params.temp_dp, 2.0 * params.temp_dp),
    };
    let sweep = SweepSpec {
        parameter,
        min: get("min").map(number).transpose()?.unwrap_or(def_min),
        max: get("max").map(number).transpose()?.unwrap_or(def_max),
        steps: get("steps").map(count).transpose()?.unwrap_or(26),
    };
    if sweep.steps == 0 {
        return Err(err(get("steps").map_or(0, |e| e.line), "sweep needs at least one step"));
    }
    if sweep.max < sweep.min {
        return Err(err(get("max").map_or(0, |e| e.line), "sweep max must be >= min"));
    }
    let workers = get("workers").map(count).transpose()?.unwrap_or(0);

    let output_dir = match get("dir") {
        Some(e) => PathBuf::from(&e.value),
        None => std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
    };

    Ok(ScenarioConfig {
        preset,
        params,
        grid,
        propagator,
        initial_state,
        output_dir,
        sweep,
        workers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_main_gets_defaults() {
        let c = parse_config("preset = main\n").unwrap();
        assert_eq!(c.preset, Preset::Main);
        assert_eq!(c.params.coupling, 0.1);
        assert_eq!(c.params.gamma_dp1, 2e-2);
        assert_eq!(c.params.gamma_dp2, 2e-2);
        assert_eq!(c.params.gamma_rad, 2e-4);
        assert_eq!(c.params.temp_dp, 2e-2);
        assert_eq!(c.params.temp_rad, 2e-2);
        assert_eq!(c.propagator, Propagator::Spectral);
        assert_eq!(parse_config("").unwrap().preset, Preset::Main);
    }

    #[test]
    fn full_grammar() {
        let text = r#"
# a comment
preset = custom   # trailing
[params]
omega1 = 100.01
gamma_dp = 1e-2
gamma_dp2 = 3e-2
[grid]
t_min = 10
t_max = 1e6
points_per_decade = 5
[output]
dir = "my out # dir"
"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.preset, Preset::Custom);
        assert_eq!(c.params.omega1, 100.01);
        assert_eq!(c.params.gamma_dp1, 1e-2);
        assert_eq!(c.params.gamma_dp2, 3e-2);
        assert_eq!(c.grid.points_per_decade, 5);
        assert_eq!(c.output_dir, PathBuf::from("my out # dir"));
    }

    fn line_of(e: Error) -> usize {
        match e {
            Error::Config { line, .. } => line,
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let e = parse_config("[params]\n\nfoo = 1\n").unwrap_err();
        assert_eq!(line_of(e), 3);
    }

    #[test]
    fn misplaced_key_reports_line() {
        let e = parse_config("[grid]\ncoupling = 1\n").unwrap_err();
        assert_eq!(line_of(e), 2);
    }

    #[test]
    fn type_mismatch_reports_line() {
        let e = parse_config("[params]\ncoupling = strong\n").unwrap_err();
        assert_eq!(line_of(e), 2);
        let e = parse_config("[grid]\npoints_per_decade = 2.5\n").unwrap_err();
        assert_eq!(line_of(e), 2);
    }

    #[test]
    fn dicke_rejects_dephasing_override() {
        let e = parse_config("preset = dicke\n[params]\ngamma_dp1 = 0.01\n").unwrap_err();
        assert_eq!(line_of(e), 3);
        let ok = parse_config("preset = dicke\n[params]\ngamma_dp = 0\n").unwrap();
        assert_eq!((ok.params.gamma_dp1, ok.params.gamma_dp2), (0.0, 0.0));
        let c = ScenarioConfig::preset(Preset::Dicke);
        assert_eq!((c.params.gamma_dp1, c.params.gamma_dp2), (0.0, 0.0));
    }

    #[test]
    fn one_reservoir_zeroes_first_bath() {
        let c = ScenarioConfig::preset(Preset::OneReservoir);
        assert_eq!((c.params.gamma_dp1, c.params.gamma_dp2), (0.0, 2e-2));
        assert!(parse_config("preset = one_reservoir\n[params]\ngamma_dp = 0.02\n").is_err());
        assert!(parse_config("preset = one_reservoir\n[params]\ngamma_dp2 = 0.05\n").is_ok());
    }

    #[test]
    fn constraint_violation_reports_line() {
        let e = parse_config("[params]\ncoupling = -1\n").unwrap_err();
        assert_eq!(line_of(e), 2);
        let e = parse_config("[grid]\nt_min = 5\nt_max = 1\n").unwrap_err();
        assert_eq!(line_of(e), 3);
    }

    #[test]
    fn default_sweep_has_26_points() {
        let c = ScenarioConfig::preset(Preset::DetuningSweep);
        let v = c.sweep.values();
        assert_eq!(v.len(), 26);
        assert_eq!(v[0], 0.0);
        assert!((v[25] - 0.05).abs() < 1e-15);
        assert_eq!((c.grid.t_min, c.grid.t_max), (1e2, 1e8));
        let p = c.sweep.parameter.apply(&c.params, 0.01);
        assert_eq!(p.omega2, 100.0);
        assert!((p.omega1 - 100.01).abs() < 1e-12);
    }

    #[test]
    fn overrides_win() {
        let c = parse_config_with_overrides(
            "[params]\ncoupling = 0.2\n",
            Some(Preset::Custom),
            &["params.coupling=0.3".into(), "t_max=1e5".into(), "propagator=rk".into()],
        )
        .unwrap();
        assert_eq!(c.preset, Preset::Custom);
        assert_eq!(c.params.coupling, 0.3);
        assert_eq!(c.grid.t_max, 1e5);
        assert_eq!(c.propagator, Propagator::Rk);
        assert!(parse_config_with_overrides("", None, &["grid.coupling=1".into()]).is_err());
        assert!(parse_config_with_overrides("", None, &["nokey".into()]).is_err());
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        assert_eq!(line_of(parse_config("[params]\ncoupling=1\ncoupling=2\n").unwrap_err()), 3);
        assert_eq!(line_of(parse_config("[params\n").unwrap_err()), 1);
        assert_eq!(line_of(parse_config("[nope]\n").unwrap_err()), 1);
        assert_eq!(line_of(parse_config("just words\n").unwrap_err()), 1);
        assert_eq!(line_of(parse_config("[output]\ndir = \"open\n").unwrap_err()), 2);
    }
}

//! Scenario files.
//!
//! A scenario is UTF-8 text with one `key = value` pair per line. Keys are
//! dotted paths; `#` starts a comment; blank lines are ignored. Every key is
//! optional except `experiment`. Unknown and repeated keys are rejected.
//!
//! ```text
//! experiment          = trace | trace_derivative | bloch_sweep | eta_ratio_sweep | full_protection_table
//! tau_seconds         = 1e-10
//! temperature_kelvin  = 0.25
//! beta_omega_c        = 1.9197          # overrides the value derived from T and tau
//! omega_c_tau         = 6.283185307179586
//! control.mode        = bare | dephasing_protect | full_protect
//! control.n           = 5
//! control.m           = 10
//! reservoirs.<id>.class = bit_flip | dissipation | dephasing
//! reservoirs.<id>.eta   = 0.0625
//! reservoirs.<id>.s     = 1
//! initial.theta       = 1.5707963267948966
//! initial.phi         = 0
//! sweep.n_theta       = 25
//! sweep.n_phi         = 50
//! integrator.steps    = 8000
//! integrator.tol      = 1e-4
//! trace.cases         = bare, 2, 3, 5   # dephasing-protected windings
//! derivative.spectra  = 1, 3
//! eta_sweep.ratios    = 0, 0.001, 0.01  # explicit list, or:
//! eta_sweep.points    = 13
//! eta_sweep.min       = 1e-3
//! eta_sweep.max       = 1
//! eta_sweep.spectra   = 1, 3
//! table.eta_added     = 0.2
//! table.spectra       = 1, 3
//! ```

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::bath::{ErrorClass, ReservoirSpec, ThermalParams};
use crate::control::{ControlMode, ModeKind};
use crate::error::{Result, SimError};
use crate::redfield::IntegratorConfig;

pub const DEFAULT_TAU_SECONDS: f64 = 1e-10;
pub const DEFAULT_TEMPERATURE_KELVIN: f64 = 0.25;
pub const DEFAULT_OMEGA_C_TAU: f64 = 2.0 * PI;
pub const DEFAULT_ETA: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Trace,
    TraceDerivative,
    BlochSweep,
    EtaRatioSweep,
    FullProtectionTable,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Trace => "trace",
            Experiment::TraceDerivative => "trace_derivative",
            Experiment::BlochSweep => "bloch_sweep",
            Experiment::EtaRatioSweep => "eta_ratio_sweep",
            Experiment::FullProtectionTable => "full_protection_table",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "trace" => Ok(Experiment::Trace),
            "trace_derivative" => Ok(Experiment::TraceDerivative),
            "bloch_sweep" => Ok(Experiment::BlochSweep),
            "eta_ratio_sweep" => Ok(Experiment::EtaRatioSweep),
            "full_protection_table" => Ok(Experiment::FullProtectionTable),
            other => Err(format!("unknown experiment `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl SweepGrid {
    /// Polar angles including both poles.
    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n_theta)
            .map(|i| PI * i as f64 / (self.n_theta - 1) as f64)
            .collect()
    }

    /// Azimuths on `[0, 2 pi)`.
    pub fn phis(&self) -> Vec<f64> {
        (0..self.n_phi)
            .map(|j| 2.0 * PI * j as f64 / self.n_phi as f64)
            .collect()
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub experiment: Experiment,
    pub tau_seconds: f64,
    pub temperature_kelvin: f64,
    pub beta_omega_c_override: Option<f64>,
    pub omega_c_tau: f64,
    pub reservoirs: Vec<ReservoirSpec>,
    pub control: ControlMode,
    pub initial_theta: f64,
    pub initial_phi: f64,
    pub sweep: SweepGrid,
    /// Explicit step count; `None` picks the per-drive default.
    pub steps: Option<usize>,
    pub tol: f64,
    pub trace_cases: Vec<ControlMode>,
    pub derivative_spectra: Vec<u32>,
    pub eta_ratios: Vec<f64>,
    pub added_spectra: Vec<u32>,
    pub eta_added: f64,
}

impl ScenarioConfig {
    pub fn thermal(&self) -> Result<ThermalParams> {
        match self.beta_omega_c_override {
            Some(bwc) => ThermalParams::new(bwc, self.omega_c_tau),
            None => ThermalParams::from_physical(self.temperature_kelvin, self.tau_seconds, self.omega_c_tau),
        }
    }

    pub fn integrator(&self, mode: &ControlMode) -> Result<IntegratorConfig> {
        let cfg = match self.steps {
            Some(steps) => IntegratorConfig {
                steps,
                convergence_tol: self.tol,
            },
            None => IntegratorConfig {
                convergence_tol: self.tol,
                ..IntegratorConfig::for_mode(mode)
            },
        };
        cfg.validate(mode)?;
        Ok(cfg)
    }

    pub fn dephasing(&self) -> Option<&ReservoirSpec> {
        self.reservoirs.iter().find(|r| r.class == ErrorClass::Dephasing)
    }

    /// Resolved configuration in scenario-file syntax.
    pub fn resolved_entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("experiment".to_string(), self.experiment.name().to_string()),
            ("tau_seconds".into(), format_exact(self.tau_seconds)),
            ("temperature_kelvin".into(), format_exact(self.temperature_kelvin)),
        ];
        if let Some(b) = self.beta_omega_c_override {
            out.push(("beta_omega_c".into(), format_exact(b)));
        }
        out.push(("omega_c_tau".into(), format_exact(self.omega_c_tau)));
        out.push(("control.mode".into(), self.control.name().into()));
        let (n, m) = self.control.windings();
        if n > 0 {
            out.push(("control.n".into(), n.to_string()));
        }
        if m > 0 {
            out.push(("control.m".into(), m.to_string()));
        }
        for (i, r) in self.reservoirs.iter().enumerate() {
            out.push((format!("reservoirs.{}.class", i + 1), r.class.name().into()));
            out.push((format!("reservoirs.{}.eta", i + 1), format_exact(r.eta)));
            out.push((format!("reservoirs.{}.s", i + 1), r.s.to_string()));
        }
        match self.experiment {
            Experiment::Trace | Experiment::TraceDerivative => {
                out.push(("initial.theta".into(), format_exact(self.initial_theta)));
                out.push(("initial.phi".into(), format_exact(self.initial_phi)));
            }
            _ => {
                out.push(("sweep.n_theta".into(), self.sweep.n_theta.to_string()));
                out.push(("sweep.n_phi".into(), self.sweep.n_phi.to_string()));
            }
        }
        if let Some(steps) = self.steps {
            out.push(("integrator.steps".into(), steps.to_string()));
        }
        out.push(("integrator.tol".into(), format_exact(self.tol)));
        let join = |v: Vec<String>| v.join(", ");
        match self.experiment {
            Experiment::Trace => {
                let cases = self.trace_cases.iter().map(case_label).collect();
                out.push(("trace.cases".into(), join(cases)));
            }
            Experiment::TraceDerivative => {
                out.push(("derivative.spectra".into(), join(self.derivative_spectra.iter().map(u32::to_string).collect())));
            }
            Experiment::EtaRatioSweep => {
                out.push(("eta_sweep.ratios".into(), join(self.eta_ratios.iter().map(|r| format_exact(*r)).collect())));
                out.push(("eta_sweep.spectra".into(), join(self.added_spectra.iter().map(u32::to_string).collect())));
            }
            Experiment::FullProtectionTable => {
                out.push(("table.eta_added".into(), format_exact(self.eta_added)));
                out.push(("table.spectra".into(), join(self.added_spectra.iter().map(u32::to_string).collect())));
            }
            Experiment::BlochSweep => {}
        }
        out
    }
}

/// Shortest round-trip form, switching to exponent notation for tiny or huge values.
pub fn format_exact(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// `bare` or the winding number of a dephasing-protected drive.
pub fn case_label(mode: &ControlMode) -> String {
    match mode {
        ControlMode::Bare => "bare".into(),
        ControlMode::DephasingProtect { n } => n.to_string(),
        ControlMode::FullProtect { n, m } => format!("{n}/{m}"),
    }
}

/// Raw `key -> (line, value)` pairs.
fn tokenize(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| SimError::Parse {
            line: line_no,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(SimError::Parse {
                line: line_no,
                message: format!("invalid key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(SimError::Parse {
                line: line_no,
                message: format!("missing value for `{key}`"),
            });
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line_no, value.to_string())) {
            return Err(SimError::Parse {
                line: line_no,
                message: format!("duplicate key `{key}` (first set on line {first})"),
            });
        }
    }
    Ok(map)
}

struct Fields {
    map: BTreeMap<String, (usize, String)>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key).map(|(_, v)| v)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| SimError::validation(key, format!("`{v}`: {e}"))),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    item.parse::<T>()
                        .map_err(|e| SimError::validation(key, format!("`{item}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(SimError::validation(key, format!("must be positive and finite, got {v}")))
    }
}

fn parse_case(item: &str) -> std::result::Result<ControlMode, String> {
    if item == "bare" {
        return Ok(ControlMode::Bare);
    }
    item.parse::<u32>()
        .map(|n| ControlMode::DephasingProtect { n })
        .map_err(|_| format!("expected `bare` or a winding number, found `{item}`"))
}

/// Log-spaced grid with `points` values on `[min, max]`.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![min];
    }
    let (a, b) = (min.ln(), max.ln());
    (0..points)
        .map(|i| {
            if i == 0 {
                min
            } else if i + 1 == points {
                max
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// Parses and validates scenario text, applying defaults.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut f = Fields { map: tokenize(text)? };

    let experiment: Experiment = f
        .parse("experiment")?
        .ok_or_else(|| SimError::validation("experiment", "required key is missing"))?;

    let tau_seconds = positive("tau_seconds", f.parse("tau_seconds")?.unwrap_or(DEFAULT_TAU_SECONDS))?;
    let temperature_kelvin = positive(
        "temperature_kelvin",
        f.parse("temperature_kelvin")?.unwrap_or(DEFAULT_TEMPERATURE_KELVIN),
    )?;
    let beta_omega_c_override = match f.parse::<f64>("beta_omega_c")? {
        Some(v) => Some(positive("beta_omega_c", v)?),
        None => None,
    };
    let omega_c_tau = positive("omega_c_tau", f.parse("omega_c_tau")?.unwrap_or(DEFAULT_OMEGA_C_TAU))?;

    // reservoirs.<id>.<field>, grouped by id in file order of ids
    let mut groups: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let reservoir_keys: Vec<String> = f.map.keys().filter(|k| k.starts_with("reservoirs.")).cloned().collect();
    for key in reservoir_keys {
        let value = f.take(&key).unwrap_or_default();
        let parts: Vec<&str> = key.splitn(3, '.').collect();
        if parts.len() != 3 || !matches!(parts[2], "class" | "eta" | "s") {
            return Err(SimError::validation(key.as_str(), "unknown key"));
        }
        groups.entry(parts[1].to_string()).or_default().insert(parts[2].to_string(), value);
    }
    let mut reservoirs = Vec::new();
    for (id, fields) in &groups {
        let key = |field: &str| format!("reservoirs.{id}.{field}");
        let class: ErrorClass = fields
            .get("class")
            .ok_or_else(|| SimError::validation(key("class"), "required for each reservoir"))?
            .parse()
            .map_err(|e: String| SimError::validation(key("class"), e))?;
        let eta = match fields.get("eta") {
            Some(v) => v.parse::<f64>().map_err(|e| SimError::validation(key("eta"), e.to_string()))?,
            None => DEFAULT_ETA,
        };
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(SimError::validation(key("eta"), "must be finite and >= 0"));
        }
        let s = fields
            .get("s")
            .ok_or_else(|| SimError::validation(key("s"), "required for each reservoir"))?
            .parse::<u32>()
            .map_err(|e| SimError::validation(key("s"), e.to_string()))?;
        if s < 1 {
            return Err(SimError::validation(key("s"), "must be an integer >= 1"));
        }
        if reservoirs.iter().any(|r: &ReservoirSpec| r.class == class) {
            return Err(SimError::validation(key("class"), format!("duplicate reservoir class {class}")));
        }
        reservoirs.push(ReservoirSpec::new(class, eta, s, omega_c_tau)?);
    }
    reservoirs.sort_by_key(|r| r.class);
    let reservoirs_explicit = !reservoirs.is_empty();
    if !reservoirs_explicit {
        let s = match experiment {
            Experiment::Trace | Experiment::TraceDerivative => 1,
            _ => 3,
        };
        reservoirs.push(ReservoirSpec::new(ErrorClass::Dephasing, DEFAULT_ETA, s, omega_c_tau)?);
    }

    let mode_kind: Option<ModeKind> = match f.take("control.mode") {
        None => None,
        Some(v) => Some(v.parse().map_err(|e: String| SimError::validation("control.mode", e))?),
    };
    let n: Option<u32> = f.parse("control.n")?;
    let m: Option<u32> = f.parse("control.m")?;
    let default_kind = match experiment {
        Experiment::EtaRatioSweep => ModeKind::DephasingProtect,
        Experiment::FullProtectionTable => ModeKind::FullProtect,
        _ => ModeKind::Bare,
    };
    let control = match mode_kind.unwrap_or(default_kind) {
        ModeKind::Bare => ControlMode::Bare,
        ModeKind::DephasingProtect => ControlMode::DephasingProtect {
            n: match (n, mode_kind) {
                (Some(n), _) => n,
                (None, None) => 25,
                (None, Some(_)) => return Err(SimError::validation("control.n", "required for dephasing_protect")),
            },
        },
        ModeKind::FullProtect => {
            let defaults = mode_kind.is_none();
            let n = n.or(defaults.then_some(25)).ok_or_else(|| SimError::validation("control.n", "required for full_protect"))?;
            let m = m.or(defaults.then_some(10)).ok_or_else(|| SimError::validation("control.m", "required for full_protect"))?;
            ControlMode::FullProtect { n, m }
        }
    };
    control.validate()?;

    let initial_theta = f.parse("initial.theta")?.unwrap_or(FRAC_PI_2);
    let initial_phi = f.parse("initial.phi")?.unwrap_or(0.0);
    let sweep = SweepGrid {
        n_theta: f.parse("sweep.n_theta")?.unwrap_or(25),
        n_phi: f.parse("sweep.n_phi")?.unwrap_or(50),
    };
    if sweep.n_theta < 2 {
        return Err(SimError::validation("sweep.n_theta", "must be >= 2"));
    }
    if sweep.n_phi < 1 {
        return Err(SimError::validation("sweep.n_phi", "must be >= 1"));
    }

    let steps: Option<usize> = f.parse("integrator.steps")?;
    let tol = positive("integrator.tol", f.parse("integrator.tol")?.unwrap_or(IntegratorConfig::DEFAULT_TOL))?;

    let trace_cases = match f.list::<String>("trace.cases")? {
        Some(items) => items
            .iter()
            .map(|i| parse_case(i).map_err(|e| SimError::validation("trace.cases", e)))
            .collect::<Result<Vec<_>>>()?,
        None if experiment != Experiment::Trace => Vec::new(),
        None if mode_kind.is_some() => vec![control],
        None => {
            let ohmic = reservoirs
                .iter()
                .find(|r| r.class == ErrorClass::Dephasing)
                .map_or(true, |r| r.s == 1);
            let windings: &[u32] = if ohmic { &[2, 3, 5] } else { &[3, 5, 15] };
            std::iter::once(ControlMode::Bare)
                .chain(windings.iter().map(|&n| ControlMode::DephasingProtect { n }))
                .collect()
        }
    };
    for case in &trace_cases {
        case.validate().map_err(|_| SimError::validation("trace.cases", "windings must be >= 1"))?;
    }

    let derivative_spectra = f.list::<u32>("derivative.spectra")?.unwrap_or_else(|| vec![1, 3]);
    let explicit_ratios = f.list::<f64>("eta_sweep.ratios")?;
    let points: Option<usize> = f.parse("eta_sweep.points")?;
    let min: Option<f64> = f.parse("eta_sweep.min")?;
    let max: Option<f64> = f.parse("eta_sweep.max")?;
    let eta_spectra = f.list::<u32>("eta_sweep.spectra")?;
    let eta_added = f.parse("table.eta_added")?.unwrap_or(0.2);
    let table_spectra = f.list::<u32>("table.spectra")?;

    if let Some((key, _)) = f.map.iter().next() {
        return Err(SimError::validation(key.as_str(), "unknown key"));
    }

    let eta_ratios = match explicit_ratios {
        Some(r) => {
            if points.is_some() || min.is_some() || max.is_some() {
                return Err(SimError::validation(
                    "eta_sweep.ratios",
                    "cannot be combined with eta_sweep.points/min/max",
                ));
            }
            if r.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(SimError::validation("eta_sweep.ratios", "ratios must be finite and >= 0"));
            }
            r
        }
        None => {
            let (points, min, max) = (points.unwrap_or(13), min.unwrap_or(1e-3), max.unwrap_or(1.0));
            if points < 1 {
                return Err(SimError::validation("eta_sweep.points", "must be >= 1"));
            }
            if !(min > 0.0 && max >= min) {
                return Err(SimError::validation("eta_sweep.min", "need 0 < min <= max"));
            }
            log_grid(min, max, points)
        }
    };
    let added_spectra = match experiment {
        Experiment::FullProtectionTable => table_spectra.unwrap_or_else(|| vec![1, 3]),
        _ => eta_spectra.unwrap_or_else(|| vec![1, 3]),
    };
    for (key, list) in [("derivative.spectra", &derivative_spectra), ("eta_sweep.spectra", &added_spectra)] {
        if list.is_empty() || list.contains(&0) {
            return Err(SimError::validation(key, "ohmicity exponents must be integers >= 1"));
        }
    }
    if !(eta_added >= 0.0 && f64::is_finite(eta_added)) {
        return Err(SimError::validation("table.eta_added", "must be finite and >= 0"));
    }

    match experiment {
        Experiment::EtaRatioSweep | Experiment::FullProtectionTable => {
            if reservoirs.iter().any(|r| r.class != ErrorClass::Dephasing) {
                return Err(SimError::validation(
                    "reservoirs",
                    "only the dephasing reservoir may be configured; bit-flip and dissipation baths are added by the experiment",
                ));
            }
            if experiment == Experiment::EtaRatioSweep && !matches!(control, ControlMode::DephasingProtect { .. }) {
                return Err(SimError::validation("control.mode", "eta_ratio_sweep requires dephasing_protect"));
            }
            if experiment == Experiment::FullProtectionTable && !matches!(control, ControlMode::FullProtect { .. }) {
                return Err(SimError::validation("control.mode", "full_protection_table requires full_protect"));
            }
        }
        Experiment::TraceDerivative => {
            if reservoirs.len() != 1 || reservoirs[0].class != ErrorClass::Dephasing {
                return Err(SimError::validation("reservoirs", "trace_derivative uses a single dephasing reservoir"));
            }
        }
        Experiment::Trace | Experiment::BlochSweep => {}
    }

    let cfg = ScenarioConfig {
        experiment,
        tau_seconds,
        temperature_kelvin,
        beta_omega_c_override,
        omega_c_tau,
        reservoirs,
        control,
        initial_theta,
        initial_phi,
        sweep,
        steps,
        tol,
        trace_cases,
        derivative_spectra,
        eta_ratios,
        added_spectra,
        eta_added,
    };
    cfg.thermal()?;
    Ok(cfg)
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_trace_gets_defaults() {
        let cfg = parse_scenario("experiment = trace\n").unwrap();
        assert_eq!(cfg.tau_seconds, 1e-10);
        assert_eq!(cfg.temperature_kelvin, 0.25);
        assert_eq!(cfg.omega_c_tau, 2.0 * PI);
        assert_eq!(cfg.reservoirs.len(), 1);
        let r = cfg.reservoirs[0];
        assert_eq!((r.class, r.eta, r.s), (ErrorClass::Dephasing, 1.0 / 16.0, 1));
        assert_eq!(
            cfg.trace_cases,
            vec![
                ControlMode::Bare,
                ControlMode::DephasingProtect { n: 2 },
                ControlMode::DephasingProtect { n: 3 },
                ControlMode::DephasingProtect { n: 5 }
            ]
        );
        assert!((cfg.thermal().unwrap().beta_omega_c - 1.9197).abs() < 1e-4);
    }

    #[test]
    fn super_ohmic_trace_panel() {
        let cfg = parse_scenario("experiment = trace\nreservoirs.1.class = dephasing\nreservoirs.1.s = 3\n").unwrap();
        let labels: Vec<_> = cfg.trace_cases.iter().map(case_label).collect();
        assert_eq!(labels, ["bare", "3", "5", "15"]);
    }

    #[test]
    fn full_protect_requires_m() {
        let err = parse_scenario("experiment = trace\ncontrol.mode = full_protect\ncontrol.n = 25\n").unwrap_err();
        match err {
            SimError::Validation { key, .. } => assert_eq!(key, "control.m"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_scenario("experiment = trace\n\n# note\ncontrol.mode bare\n").unwrap_err();
        assert!(matches!(err, SimError::Parse { line: 4, .. }), "{err}");
        let err = parse_scenario("experiment = trace\nintegrator.tol = 1\nintegrator.tol = 2\n").unwrap_err();
        assert!(matches!(err, SimError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn unknown_keys_and_bad_values_name_the_key() {
        for (text, bad) in [
            ("experiment = trace\nfoo.bar = 1\n", "foo.bar"),
            ("experiment = trace\nreservoirs.1.kind = dephasing\n", "reservoirs.1.kind"),
            ("experiment = trace\nintegrator.steps = lots\n", "integrator.steps"),
            ("experiment = wobble\n", "experiment"),
            ("tau_seconds = 1\n", "experiment"),
            ("experiment = trace\ntemperature_kelvin = -3\n", "temperature_kelvin"),
        ] {
            match parse_scenario(text).unwrap_err() {
                SimError::Validation { key, .. } => assert_eq!(key, bad),
                other => panic!("{text}: {other}"),
            }
        }
    }

    #[test]
    fn duplicate_reservoir_class_rejected() {
        let text = "experiment = bloch_sweep\nreservoirs.a.class = dephasing\nreservoirs.a.s = 1\nreservoirs.b.class = dephasing\nreservoirs.b.s = 3\n";
        let err = parse_scenario(text).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn beta_override_agrees_with_derived_value() {
        let derived = parse_scenario("experiment = trace\n").unwrap().thermal().unwrap();
        let fixed = parse_scenario("experiment = trace\nbeta_omega_c = 1.9197\n").unwrap().thermal().unwrap();
        assert!((derived.beta_omega_c - fixed.beta_omega_c).abs() / fixed.beta_omega_c < 2e-6);
    }

    #[test]
    fn experiment_defaults() {
        let cfg = parse_scenario("experiment = full_protection_table\n").unwrap();
        assert_eq!(cfg.control, ControlMode::FullProtect { n: 25, m: 10 });
        assert_eq!(cfg.reservoirs[0].s, 3);
        assert_eq!(cfg.eta_added, 0.2);

        let cfg = parse_scenario("experiment = eta_ratio_sweep\n").unwrap();
        assert_eq!(cfg.control, ControlMode::DephasingProtect { n: 25 });
        assert_eq!(cfg.eta_ratios.len(), 13);
        assert_eq!(cfg.eta_ratios[0], 1e-3);
        assert_eq!(cfg.eta_ratios[12], 1.0);

        assert!(parse_scenario("experiment = eta_ratio_sweep\ncontrol.mode = bare\n").is_err());
        assert!(parse_scenario("experiment = eta_ratio_sweep\nreservoirs.1.class = bit_flip\nreservoirs.1.s = 1\n").is_err());
    }

    #[test]
    fn integrator_defaults_follow_drive() {
        let cfg = parse_scenario("experiment = trace\n").unwrap();
        assert_eq!(cfg.integrator(&ControlMode::DephasingProtect { n: 100 }).unwrap().steps, 40 * 401);
        let cfg = parse_scenario("experiment = trace\nintegrator.steps = 100\n").unwrap();
        assert!(cfg.integrator(&ControlMode::DephasingProtect { n: 5 }).is_err());
    }

    #[test]
    fn resolved_entries_reparse_to_the_same_config() {
        for text in [
            "experiment = trace\nreservoirs.x.class = dephasing\nreservoirs.x.s = 3\ninitial.theta = 0.3\n",
            "experiment = trace_derivative\nintegrator.steps = 500\n",
            "experiment = bloch_sweep\ncontrol.mode = dephasing_protect\ncontrol.n = 7\nbeta_omega_c = 2.5\n",
            "experiment = eta_ratio_sweep\neta_sweep.ratios = 0, 0.01, 0.3\n",
            "experiment = full_protection_table\ntable.eta_added = 0.15\ntemperature_kelvin = 1e-3\n",
        ] {
            let cfg = parse_scenario(text).unwrap();
            let dumped: String = cfg
                .resolved_entries()
                .iter()
                .map(|(k, v)| format!("{k} = {v}\n"))
                .collect();
            assert_eq!(parse_scenario(&dumped).unwrap(), cfg, "{dumped}");
        }
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 1.0, 4);
        assert_eq!(g.len(), 4);
        assert!((g[1] - 1e-2).abs() < 1e-15 && (g[2] - 1e-1).abs() < 1e-14);
    }
}

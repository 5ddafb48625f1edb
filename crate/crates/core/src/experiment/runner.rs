//! Experiment drivers.

use std::collections::HashMap;
use std::sync::Arc;

use log::info;
use rayon::prelude::*;

use super::config::{case_label, format_exact, Experiment, ScenarioConfig, SweepGrid};
use super::report::{Cell, Report};
use crate::bath::{ErrorClass, ReservoirSpec, ThermalParams};
use crate::control::ControlMode;
use crate::error::Result;
use crate::redfield::{
    combine_unit_tables, fidelity_derivative, unit_table, ConvergenceReport, DecoherenceTable, Dynamics,
    IntegratorConfig, RotationTable, Trajectory,
};
use crate::su2::{density_from_bloch, QubitState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct TableKey {
    mode: ControlMode,
    steps: usize,
    class: ErrorClass,
    s: u32,
    omega_c: u64,
    beta_omega_c: u64,
}

/// Unit-coupling decoherence tables shared between runs.
#[derive(Default)]
pub struct TableCache {
    tables: HashMap<TableKey, Arc<DecoherenceTable>>,
    rotations: HashMap<(ControlMode, usize), Arc<RotationTable>>,
}

impl TableCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn rotations(&mut self, mode: ControlMode, steps: usize) -> Result<Arc<RotationTable>> {
        if let Some(r) = self.rotations.get(&(mode, steps)) {
            return Ok(r.clone());
        }
        let r = Arc::new(RotationTable::build(mode, 2 * steps)?);
        self.rotations.insert((mode, steps), r.clone());
        Ok(r)
    }

    /// Table for `reservoir` at unit coupling.
    pub fn unit(
        &mut self,
        mode: ControlMode,
        steps: usize,
        reservoir: &ReservoirSpec,
        thermal: &ThermalParams,
    ) -> Result<Arc<DecoherenceTable>> {
        let key = TableKey {
            mode,
            steps,
            class: reservoir.class,
            s: reservoir.s,
            omega_c: reservoir.omega_c.to_bits(),
            beta_omega_c: thermal.beta_omega_c.to_bits(),
        };
        if let Some(t) = self.tables.get(&key) {
            return Ok(t.clone());
        }
        info!("building D-table: {mode}, {} s={}, N={steps}", reservoir.class, reservoir.s);
        let rotations = self.rotations(mode, steps)?;
        let table = Arc::new(unit_table(mode, reservoir, thermal, steps, Some(&rotations))?);
        self.tables.insert(key, table.clone());
        Ok(table)
    }

    /// Combined table for a reservoir set.
    pub fn combined(
        &mut self,
        mode: ControlMode,
        steps: usize,
        reservoirs: &[ReservoirSpec],
        thermal: &ThermalParams,
    ) -> Result<DecoherenceTable> {
        let tables = reservoirs
            .iter()
            .map(|r| self.unit(mode, steps, r, thermal))
            .collect::<Result<Vec<_>>>()?;
        let parts: Vec<_> = reservoirs.iter().copied().zip(tables.iter().map(|t| &**t)).collect();
        combine_unit_tables(steps, &parts)
    }

    /// Primary and doubled-grid propagators.
    pub fn dynamics(
        &mut self,
        mode: ControlMode,
        config: IntegratorConfig,
        reservoirs: &[ReservoirSpec],
        thermal: &ThermalParams,
    ) -> Result<Dynamics> {
        config.validate(&mode)?;
        let primary = self.combined(mode, config.steps, reservoirs, thermal)?;
        let refined = self.combined(mode, 2 * config.steps, reservoirs, thermal)?;
        Dynamics::from_tables(config, primary, refined)
    }
}

/// One sub-case of a trace experiment.
#[derive(Debug, Clone)]
pub struct TraceCase {
    pub label: String,
    pub mode: ControlMode,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone)]
pub struct TraceResult {
    pub thermal: ThermalParams,
    pub steps: usize,
    pub cases: Vec<TraceCase>,
}

impl TraceResult {
    pub fn case(&self, label: &str) -> Option<&TraceCase> {
        self.cases.iter().find(|c| c.label == label)
    }
}

#[derive(Debug, Clone)]
pub struct DerivativeResult {
    pub thermal: ThermalParams,
    pub steps: usize,
    pub spectra: Vec<u32>,
    pub times: Vec<f64>,
    /// `dF/dt` per spectrum, on `times`.
    pub derivative: Vec<Vec<f64>>,
    /// `F(t)` per spectrum, on `times`.
    pub fidelity: Vec<Vec<f64>>,
    pub convergence: Vec<ConvergenceReport>,
}

/// Final fidelities over a grid of initial Bloch angles.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// Row-major in `(theta, phi)`.
    pub fidelity: Vec<f64>,
    pub min_fidelity: f64,
    pub argmin: (f64, f64),
    pub max_step_doubling: f64,
    pub converged: bool,
    pub min_eigenvalue: f64,
    pub steps: usize,
}

impl SweepResult {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.fidelity[i * self.phis.len() + j]
    }
}

#[derive(Debug, Clone)]
pub struct EtaSweepResult {
    pub thermal: ThermalParams,
    pub mode: ControlMode,
    pub ratios: Vec<f64>,
    pub spectra: Vec<u32>,
    /// `sweeps[k][i]`: added-bath exponent `spectra[k]`, ratio `ratios[i]`.
    pub sweeps: Vec<Vec<SweepResult>>,
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub added_s: u32,
    pub mode: ControlMode,
    pub sweep: SweepResult,
}

#[derive(Debug, Clone)]
pub struct ProtectionTable {
    pub thermal: ThermalParams,
    pub eta_added: f64,
    pub rows: Vec<TableRow>,
}

impl ProtectionTable {
    pub fn row(&self, added_s: u32, full: bool) -> Option<&TableRow> {
        self.rows
            .iter()
            .find(|r| r.added_s == added_s && matches!(r.mode, ControlMode::FullProtect { .. }) == full)
    }
}

/// Result of any experiment.
#[derive(Debug, Clone)]
pub enum Outcome {
    Trace(TraceResult),
    TraceDerivative(DerivativeResult),
    BlochSweep(SweepResult),
    EtaRatioSweep(EtaSweepResult),
    FullProtectionTable(ProtectionTable),
}

impl Outcome {
    pub fn converged(&self) -> bool {
        match self {
            Outcome::Trace(r) => r.cases.iter().all(|c| c.trajectory.converged()),
            Outcome::TraceDerivative(r) => r.convergence.iter().all(ConvergenceReport::converged),
            Outcome::BlochSweep(r) => r.converged,
            Outcome::EtaRatioSweep(r) => r.sweeps.iter().flatten().all(|s| s.converged),
            Outcome::FullProtectionTable(r) => r.rows.iter().all(|row| row.sweep.converged),
        }
    }
}

fn initial_state(cfg: &ScenarioConfig) -> QubitState {
    density_from_bloch(cfg.initial_theta, cfg.initial_phi)
}

/// Common step count for several drives.
fn shared_steps(cfg: &ScenarioConfig, modes: &[ControlMode]) -> Result<IntegratorConfig> {
    let mut chosen = IntegratorConfig {
        steps: 0,
        convergence_tol: cfg.tol,
    };
    for mode in modes {
        chosen.steps = chosen.steps.max(cfg.integrator(mode)?.steps);
    }
    for mode in modes {
        chosen.validate(mode)?;
    }
    Ok(chosen)
}

/// `F(t)` for every configured case.
pub fn run_trace(cfg: &ScenarioConfig, cache: &mut TableCache) -> Result<TraceResult> {
    let thermal = cfg.thermal()?;
    let rho0 = initial_state(cfg);
    let integrator = shared_steps(cfg, &cfg.trace_cases)?;
    let mut cases = Vec::new();
    for &mode in &cfg.trace_cases {
        let dynamics = cache.dynamics(mode, integrator, &cfg.reservoirs, &thermal)?;
        let trajectory = dynamics.evolve(&rho0)?;
        info!("trace {}: F(tau) = {}", case_label(&mode), trajectory.final_fidelity());
        cases.push(TraceCase {
            label: case_label(&mode),
            mode,
            trajectory,
        });
    }
    Ok(TraceResult {
        thermal,
        steps: integrator.steps,
        cases,
    })
}

/// `dF/dt` of the bare gate for each dephasing exponent.
pub fn run_trace_derivative(cfg: &ScenarioConfig, cache: &mut TableCache) -> Result<DerivativeResult> {
    let thermal = cfg.thermal()?;
    let rho0 = initial_state(cfg);
    let mode = ControlMode::Bare;
    let integrator = cfg.integrator(&mode)?;
    let base = cfg.reservoirs[0];
    let mut out = DerivativeResult {
        thermal,
        steps: integrator.steps,
        spectra: cfg.derivative_spectra.clone(),
        times: Vec::new(),
        derivative: Vec::new(),
        fidelity: Vec::new(),
        convergence: Vec::new(),
    };
    for &s in &cfg.derivative_spectra {
        let reservoir = ReservoirSpec::new(base.class, base.eta, s, base.omega_c)?;
        let dynamics = cache.dynamics(mode, integrator, &[reservoir], &thermal)?;
        let traj = dynamics.evolve(&rho0)?;
        let deriv = fidelity_derivative(&traj, &rho0);
        out.times = deriv.iter().map(|p| p.0).collect();
        out.derivative.push(deriv.iter().map(|p| p.1).collect());
        out.fidelity.push(traj.fidelity.clone());
        out.convergence.extend(traj.convergence);
    }
    Ok(out)
}

/// Runs every node of `grid` against prepared dynamics.
pub fn sweep(dynamics: &Dynamics, grid: &SweepGrid) -> SweepResult {
    let thetas = grid.thetas();
    let phis = grid.phis();
    let nodes: Vec<(f64, f64)> = thetas
        .iter()
        .flat_map(|&th| phis.iter().map(move |&ph| (th, ph)))
        .collect();
    let results: Vec<_> = nodes
        .par_iter()
        .map(|&(th, ph)| {
            let r0 = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
            dynamics.endpoint(r0)
        })
        .collect();
    let mut min_fidelity = f64::INFINITY;
    let mut argmin = (f64::NAN, f64::NAN);
    let mut max_step_doubling: f64 = 0.0;
    let mut converged = true;
    let mut min_eigenvalue = f64::INFINITY;
    let mut fidelity = Vec::with_capacity(results.len());
    for (node, (end, report)) in nodes.iter().zip(&results) {
        fidelity.push(end.fidelity);
        if end.fidelity < min_fidelity {
            min_fidelity = end.fidelity;
            argmin = *node;
        }
        max_step_doubling = max_step_doubling.max(report.difference());
        converged &= report.converged();
        min_eigenvalue = min_eigenvalue.min(end.min_eigenvalue);
    }
    SweepResult {
        thetas,
        phis,
        fidelity,
        min_fidelity,
        argmin,
        max_step_doubling,
        converged,
        min_eigenvalue,
        steps: dynamics.config.steps,
    }
}

/// `F(tau)` over the initial-condition grid.
pub fn run_bloch_sweep(cfg: &ScenarioConfig, cache: &mut TableCache) -> Result<SweepResult> {
    let thermal = cfg.thermal()?;
    let integrator = cfg.integrator(&cfg.control)?;
    let dynamics = cache.dynamics(cfg.control, integrator, &cfg.reservoirs, &thermal)?;
    let result = sweep(&dynamics, &cfg.sweep);
    info!("bloch sweep {}: min F = {}", cfg.control, result.min_fidelity);
    Ok(result)
}

fn added_reservoirs(eta: f64, s: u32, omega_c: f64) -> Result<[ReservoirSpec; 2]> {
    Ok([
        ReservoirSpec::new(ErrorClass::BitFlip, eta, s, omega_c)?,
        ReservoirSpec::new(ErrorClass::Dissipation, eta, s, omega_c)?,
    ])
}

/// Minimum fidelity against the bit-flip/dissipation coupling ratio.
pub fn run_eta_ratio_sweep(cfg: &ScenarioConfig, cache: &mut TableCache) -> Result<EtaSweepResult> {
    let thermal = cfg.thermal()?;
    let mode = cfg.control;
    let integrator = cfg.integrator(&mode)?;
    let dephasing = *cfg.dephasing().expect("validated scenario has a dephasing reservoir");
    let mut sweeps = Vec::new();
    for &s in &cfg.added_spectra {
        let mut row = Vec::new();
        for &ratio in &cfg.eta_ratios {
            let [bit_flip, dissipation] = added_reservoirs(ratio * dephasing.eta, s, dephasing.omega_c)?;
            let reservoirs = [bit_flip, dissipation, dephasing];
            let dynamics = cache.dynamics(mode, integrator, &reservoirs, &thermal)?;
            let result = sweep(&dynamics, &cfg.sweep);
            info!("eta sweep s={s} ratio={ratio}: min F = {}", result.min_fidelity);
            row.push(result);
        }
        sweeps.push(row);
    }
    Ok(EtaSweepResult {
        thermal,
        mode,
        ratios: cfg.eta_ratios.clone(),
        spectra: cfg.added_spectra.clone(),
        sweeps,
    })
}

/// Minimum fidelity with all three baths, dephasing-only versus full protection.
pub fn run_full_protection_table(cfg: &ScenarioConfig, cache: &mut TableCache) -> Result<ProtectionTable> {
    let thermal = cfg.thermal()?;
    let (n, m) = cfg.control.windings();
    let modes = [ControlMode::DephasingProtect { n }, cfg.control];
    let dephasing = *cfg.dephasing().expect("validated scenario has a dephasing reservoir");
    let mut rows = Vec::new();
    for &s in &cfg.added_spectra {
        let [bit_flip, dissipation] = added_reservoirs(cfg.eta_added, s, dephasing.omega_c)?;
        let reservoirs = [bit_flip, dissipation, dephasing];
        for mode in modes {
            let integrator = cfg.integrator(&mode)?;
            let dynamics = cache.dynamics(mode, integrator, &reservoirs, &thermal)?;
            let result = sweep(&dynamics, &cfg.sweep);
            info!("table s={s} {mode} (m={m}): min F = {}", result.min_fidelity);
            rows.push(TableRow {
                added_s: s,
                mode,
                sweep: result,
            });
        }
    }
    Ok(ProtectionTable {
        thermal,
        eta_added: cfg.eta_added,
        rows,
    })
}

/// Runs the configured experiment.
pub fn run(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut cache = TableCache::new();
    Ok(match cfg.experiment {
        Experiment::Trace => Outcome::Trace(run_trace(cfg, &mut cache)?),
        Experiment::TraceDerivative => Outcome::TraceDerivative(run_trace_derivative(cfg, &mut cache)?),
        Experiment::BlochSweep => Outcome::BlochSweep(run_bloch_sweep(cfg, &mut cache)?),
        Experiment::EtaRatioSweep => Outcome::EtaRatioSweep(run_eta_ratio_sweep(cfg, &mut cache)?),
        Experiment::FullProtectionTable => Outcome::FullProtectionTable(run_full_protection_table(cfg, &mut cache)?),
    })
}

fn sweep_metadata(meta: &mut Vec<(String, String)>, prefix: &str, s: &SweepResult) {
    meta.push((format!("{prefix}min_fidelity"), super::report::format_sig(s.min_fidelity)));
    meta.push((format!("{prefix}argmin_theta"), super::report::format_sig(s.argmin.0)));
    meta.push((format!("{prefix}argmin_phi"), super::report::format_sig(s.argmin.1)));
    meta.push((format!("{prefix}step_doubling_max"), format!("{:e}", s.max_step_doubling)));
    if !prefix.is_empty() {
        meta.push((format!("{prefix}converged"), s.converged.to_string()));
    }
}

/// Tabular form of an outcome, with its metadata block.
pub fn to_report(cfg: &ScenarioConfig, outcome: &Outcome) -> Report {
    let mut meta = cfg.resolved_entries();
    let thermal = match outcome {
        Outcome::Trace(r) => r.thermal,
        Outcome::TraceDerivative(r) => r.thermal,
        Outcome::EtaRatioSweep(r) => r.thermal,
        Outcome::FullProtectionTable(r) => r.thermal,
        Outcome::BlochSweep(_) => cfg.thermal().expect("validated scenario"),
    };
    meta.push(("derived.beta_omega_c".into(), format_exact(thermal.beta_omega_c)));
    let num = Cell::Num;
    let (columns, rows): (Vec<String>, Vec<Vec<Cell>>) = match outcome {
        Outcome::Trace(r) => {
            meta.push(("grid.steps".into(), r.steps.to_string()));
            meta.push(("grid.refined_steps".into(), (2 * r.steps).to_string()));
            for c in &r.cases {
                let conv = c.trajectory.convergence.expect("trace runs check convergence");
                meta.push((format!("case.{}.final_fidelity", c.label), super::report::format_sig(conv.fidelity)));
                meta.push((format!("case.{}.step_doubling", c.label), format!("{:e}", conv.difference())));
                meta.push((format!("case.{}.converged", c.label), conv.converged().to_string()));
                meta.push((format!("case.{}.min_eigenvalue", c.label), format!("{:e}", c.trajectory.min_eigenvalue)));
            }
            let mut columns = vec!["t_over_tau".to_string()];
            columns.extend(r.cases.iter().map(|c| format!("F_{}", c.label)));
            let times = &r.cases[0].trajectory.times;
            let rows = (0..times.len())
                .map(|i| {
                    std::iter::once(num(times[i]))
                        .chain(r.cases.iter().map(|c| num(c.trajectory.fidelity[i])))
                        .collect()
                })
                .collect();
            (columns, rows)
        }
        Outcome::TraceDerivative(r) => {
            meta.push(("grid.steps".into(), r.steps.to_string()));
            meta.push(("grid.refined_steps".into(), (2 * r.steps).to_string()));
            for (s, conv) in r.spectra.iter().zip(&r.convergence) {
                meta.push((format!("case.s{s}.final_fidelity"), super::report::format_sig(conv.fidelity)));
                meta.push((format!("case.s{s}.step_doubling"), format!("{:e}", conv.difference())));
                meta.push((format!("case.s{s}.converged"), conv.converged().to_string()));
            }
            let mut columns = vec!["t_over_tau".to_string()];
            columns.extend(r.spectra.iter().map(|s| format!("dFdt_s{s}")));
            let rows = (0..r.times.len())
                .map(|i| {
                    std::iter::once(num(r.times[i]))
                        .chain(r.derivative.iter().map(|d| num(d[i])))
                        .collect()
                })
                .collect();
            (columns, rows)
        }
        Outcome::BlochSweep(s) => {
            meta.push(("grid.steps".into(), s.steps.to_string()));
            meta.push(("grid.refined_steps".into(), (2 * s.steps).to_string()));
            meta.push(("grid.nodes".into(), s.fidelity.len().to_string()));
            sweep_metadata(&mut meta, "", s);
            let columns = vec!["theta".into(), "phi".into(), "fidelity".into()];
            let mut rows = Vec::with_capacity(s.fidelity.len());
            for (i, th) in s.thetas.iter().enumerate() {
                for (j, ph) in s.phis.iter().enumerate() {
                    rows.push(vec![num(*th), num(*ph), num(s.at(i, j))]);
                }
            }
            (columns, rows)
        }
        Outcome::EtaRatioSweep(r) => {
            let steps = r.sweeps.first().and_then(|row| row.first()).map_or(0, |s| s.steps);
            meta.push(("grid.steps".into(), steps.to_string()));
            meta.push(("grid.refined_steps".into(), (2 * steps).to_string()));
            meta.push(("grid.nodes".into(), (cfg.sweep.n_theta * cfg.sweep.n_phi).to_string()));
            for (s, row) in r.spectra.iter().zip(&r.sweeps) {
                let worst = row.iter().map(|x| x.max_step_doubling).fold(0.0, f64::max);
                meta.push((format!("added_s{s}.step_doubling_max"), format!("{worst:e}")));
                meta.push((format!("added_s{s}.converged"), row.iter().all(|x| x.converged).to_string()));
            }
            let mut columns = vec!["eta_ratio".to_string()];
            columns.extend(r.spectra.iter().map(|s| format!("min_F_s{s}")));
            let rows = r
                .ratios
                .iter()
                .enumerate()
                .map(|(i, ratio)| {
                    std::iter::once(num(*ratio))
                        .chain(r.sweeps.iter().map(|row| num(row[i].min_fidelity)))
                        .collect()
                })
                .collect();
            (columns, rows)
        }
        Outcome::FullProtectionTable(t) => {
            meta.push(("grid.nodes".into(), (cfg.sweep.n_theta * cfg.sweep.n_phi).to_string()));
            let columns = [
                "added_s",
                "field",
                "steps",
                "min_fidelity",
                "argmin_theta",
                "argmin_phi",
                "step_doubling",
                "converged",
            ]
            .map(String::from)
            .to_vec();
            let rows = t
                .rows
                .iter()
                .map(|row| {
                    vec![
                        Cell::Text(row.added_s.to_string()),
                        Cell::Text(row.mode.to_string()),
                        Cell::Text(row.sweep.steps.to_string()),
                        num(row.sweep.min_fidelity),
                        num(row.sweep.argmin.0),
                        num(row.sweep.argmin.1),
                        Cell::Text(format!("{:e}", row.sweep.max_step_doubling)),
                        Cell::Text(row.sweep.converged.to_string()),
                    ]
                })
                .collect();
            (columns, rows)
        }
    };
    meta.push(("converged".into(), outcome.converged().to_string()));
    Report {
        experiment: cfg.experiment,
        metadata: meta,
        columns,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::parse_scenario;

    #[test]
    fn zero_coupling_sweep_is_flat() {
        let cfg = parse_scenario(
            "experiment = bloch_sweep\nreservoirs.1.class = dephasing\nreservoirs.1.eta = 0\nreservoirs.1.s = 3\n\
             sweep.n_theta = 5\nsweep.n_phi = 4\nintegrator.steps = 60\n",
        )
        .unwrap();
        let r = run_bloch_sweep(&cfg, &mut TableCache::new()).unwrap();
        assert_eq!(r.fidelity.len(), 20);
        for f in &r.fidelity {
            assert!((f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_min_matches_stored_values() {
        let cfg = parse_scenario(
            "experiment = bloch_sweep\nsweep.n_theta = 5\nsweep.n_phi = 6\nintegrator.steps = 100\n",
        )
        .unwrap();
        let r = run_bloch_sweep(&cfg, &mut TableCache::new()).unwrap();
        let min = r.fidelity.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(min, r.min_fidelity);
        let k = r.fidelity.iter().position(|&f| f == min).unwrap();
        assert_eq!(r.argmin, (r.thetas[k / 6], r.phis[k % 6]));
    }

    #[test]
    fn cache_reuses_tables() {
        let cfg = parse_scenario("experiment = bloch_sweep\n").unwrap();
        let th = cfg.thermal().unwrap();
        let mut cache = TableCache::new();
        let a = cache.unit(ControlMode::Bare, 80, &cfg.reservoirs[0], &th).unwrap();
        let b = cache.unit(ControlMode::Bare, 80, &cfg.reservoirs[0].with_eta(0.3), &th).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}

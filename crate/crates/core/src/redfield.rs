//! Time-local second-order master equation in the interaction picture.
//!
//! The generator is
//!
//! ```text
//! d rho / dt = sum_ab D_ab(t) [s_a, rho s_b] + conj(D_ab(t)) [s_b rho, s_a]
//! D_ab(t)    = sum_mn R_ma(t) int_0^t R_nb(t') C_mn(t - t') dt'
//! ```
//!
//! `D` is tabulated once per drive and bath on the integration grid and on its
//! midpoints (the "fine" grid of spacing `h/2`), which makes the memory
//! integrals an `O(N^2)` precomputation shared by every trajectory. Since `D`
//! is linear in the reservoir couplings, tables are built per reservoir at unit
//! coupling and combined with the actual couplings.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::bath::{self, ErrorClass, KernelGrid, KernelTable, ReservoirSpec, ThermalParams};
use crate::control::{self, ControlMode, ControlParams};
use crate::error::{Result, SimError};
use crate::su2::{self, pauli, Mat2, QubitState, RotationMatrix3, C64};

/// Trace or Hermiticity drift that aborts an integration.
pub const INVARIANT_BREACH: f64 = 1e-7;

/// Physical content of one simulation, in units where the gate time is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub control: ControlMode,
    pub reservoirs: Vec<ReservoirSpec>,
    pub thermal: ThermalParams,
}

impl Scenario {
    pub fn new(control: ControlMode, reservoirs: Vec<ReservoirSpec>, thermal: ThermalParams) -> Result<Self> {
        control.validate()?;
        bath::check_distinct_classes(&reservoirs)?;
        Ok(Scenario {
            control,
            reservoirs,
            thermal,
        })
    }

    pub fn params(&self) -> ControlParams {
        ControlParams {
            tau: 1.0,
            mode: self.control,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub steps: usize,
    pub convergence_tol: f64,
}

impl IntegratorConfig {
    pub const DEFAULT_STEPS: usize = 8000;
    pub const DEFAULT_TOL: f64 = 1e-4;

    /// Fewest steps giving 40 per period of the fastest drive oscillation.
    pub fn min_steps(mode: &ControlMode) -> usize {
        let (n, m) = mode.windings();
        40 * (4 * n.max(m) as usize + 1)
    }

    pub fn for_mode(mode: &ControlMode) -> Self {
        IntegratorConfig {
            steps: Self::DEFAULT_STEPS.max(Self::min_steps(mode)),
            convergence_tol: Self::DEFAULT_TOL,
        }
    }

    pub fn validate(&self, mode: &ControlMode) -> Result<()> {
        let min = Self::min_steps(mode);
        if self.steps < min {
            return Err(SimError::validation(
                "integrator.steps",
                format!("{} steps under-resolve {mode}; need at least {min}", self.steps),
            ));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(SimError::validation("integrator.tol", "must be > 0"));
        }
        Ok(())
    }

    pub fn refined(&self) -> Self {
        IntegratorConfig {
            steps: 2 * self.steps,
            ..*self
        }
    }
}

/// Rotation matrices of the total drive sampled at `i * spacing`.
#[derive(Debug, Clone)]
pub struct RotationTable {
    spacing: f64,
    values: Vec<RotationMatrix3>,
}

impl RotationTable {
    pub fn build(mode: ControlMode, intervals: usize) -> Result<Self> {
        let p = ControlParams::unit(mode)?;
        let spacing = 1.0 / intervals as f64;
        let values = (0..=intervals)
            .into_par_iter()
            .map(|i| {
                let t = (i as f64 * spacing).min(1.0);
                control::total_unitary(t, &p).map(|u| su2::rotation_from_unitary(&u))
            })
            .collect::<Result<_>>()?;
        Ok(RotationTable { spacing, values })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[RotationMatrix3] {
        &self.values
    }
}

/// The 3x3 complex coefficient matrix of the master equation at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceTensor(pub Matrix3<C64>);

impl DecoherenceTensor {
    pub fn zero() -> Self {
        DecoherenceTensor(Matrix3::zeros())
    }
}

/// Composite Simpson weights on `0..=j` with unit spacing; an odd panel
/// count closes with the 3/8 rule and a single panel uses the trapezoid.
fn simpson_weights(j: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(j + 1, 0.0);
    match j {
        0 => {}
        1 => {
            out[0] = 0.5;
            out[1] = 0.5;
        }
        _ => {
            let even_end = if j % 2 == 0 { j } else { j - 3 };
            if even_end > 0 {
                for (k, w) in out.iter_mut().enumerate().take(even_end + 1) {
                    *w = if k == 0 || k == even_end {
                        1.0 / 3.0
                    } else if k % 2 == 1 {
                        4.0 / 3.0
                    } else {
                        2.0 / 3.0
                    };
                }
            }
            if j % 2 == 1 {
                for (offset, w) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                    out[even_end + offset] += 3.0 / 8.0 * w;
                }
            }
        }
    }
}

/// One non-zero entry `C_mn(d)` of the correlation matrix, tabulated on lags.
struct CorrelationEntry {
    mu: usize,
    nu: usize,
    values: Vec<C64>,
}

fn correlation_entries(kernels: &KernelTable) -> Vec<CorrelationEntry> {
    let points = kernels.grid().points;
    let mut entries = Vec::new();
    for mu in 0..3 {
        for nu in 0..3 {
            let coupled: Vec<_> = kernels
                .reservoirs()
                .iter()
                .filter_map(|r| {
                    let l = r.spec.lambda();
                    let a = l[mu] * l[nu].conj();
                    (a.norm() > 0.0).then_some((a, r))
                })
                .collect();
            if coupled.is_empty() {
                continue;
            }
            let values = (0..points)
                .map(|d| {
                    coupled
                        .iter()
                        .map(|(a, r)| a * r.i1[d] + a.conj() * r.i2[d])
                        .sum()
                })
                .collect();
            entries.push(CorrelationEntry { mu, nu, values });
        }
    }
    entries
}

/// `D(t)` on the fine grid `t_i = i h / 2`, `i = 0..=2N`.
#[derive(Debug, Clone)]
pub struct DecoherenceTable {
    steps: usize,
    values: Vec<Matrix3<C64>>,
}

impl DecoherenceTable {
    /// Memory-convolution quadrature over all reservoirs in `kernels`.
    ///
    /// `rotations` and `kernels` must share the fine grid spacing.
    pub fn build(rotations: &RotationTable, kernels: &KernelTable) -> Result<Self> {
        let fine = rotations.values.len() - 1;
        if fine % 2 != 0 {
            return Err(SimError::Usage("rotation table must have an even number of intervals".into()));
        }
        let spacing = rotations.spacing;
        let kgrid = kernels.grid();
        if (kgrid.spacing - spacing).abs() > 1e-12 * spacing || kgrid.points < fine + 1 {
            return Err(SimError::Usage(
                "kernel table does not cover the rotation grid at the same spacing".into(),
            ));
        }
        let entries = correlation_entries(kernels);
        // column-major copies of R so the inner sums run over contiguous memory
        let columns: Vec<Vec<f64>> = (0..9)
            .map(|idx| rotations.values.iter().map(|r| r.get(idx / 3, idx % 3)).collect())
            .collect();

        let values = (0..=fine)
            .into_par_iter()
            .map_init(Vec::new, |weights, j| {
                if j == 0 || entries.is_empty() {
                    return Matrix3::zeros();
                }
                simpson_weights(j, weights);
                let mut inner = Matrix3::<C64>::zeros();
                for e in &entries {
                    let lagged = &e.values[..=j];
                    for beta in 0..3 {
                        let col = &columns[e.nu * 3 + beta][..=j];
                        let mut acc = C64::new(0.0, 0.0);
                        for k in 0..=j {
                            acc += lagged[j - k] * (weights[k] * col[k]);
                        }
                        inner[(e.mu, beta)] += acc * spacing;
                    }
                }
                let r = rotations.values[j].matrix();
                let mut d = Matrix3::<C64>::zeros();
                for alpha in 0..3 {
                    for beta in 0..3 {
                        let mut v = C64::new(0.0, 0.0);
                        for mu in 0..3 {
                            v += inner[(mu, beta)] * r[(mu, alpha)];
                        }
                        d[(alpha, beta)] = v;
                    }
                }
                d
            })
            .collect();
        Ok(DecoherenceTable {
            steps: fine / 2,
            values,
        })
    }

    pub fn zeros(steps: usize) -> Self {
        DecoherenceTable {
            steps,
            values: vec![Matrix3::zeros(); 2 * steps + 1],
        }
    }

    /// `sum_i w_i D_i`, accumulated in slice order.
    pub fn combine(parts: &[(f64, &DecoherenceTable)]) -> Result<Self> {
        let steps = parts
            .first()
            .map(|(_, t)| t.steps)
            .ok_or_else(|| SimError::Usage("nothing to combine".into()))?;
        if parts.iter().any(|(_, t)| t.steps != steps) {
            return Err(SimError::Usage("cannot combine tables on different grids".into()));
        }
        let mut out = DecoherenceTable::zeros(steps);
        for (w, t) in parts {
            for (acc, v) in out.values.iter_mut().zip(&t.values) {
                *acc += v * C64::from(*w);
            }
        }
        Ok(out)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn fine_spacing(&self) -> f64 {
        0.5 / self.steps as f64
    }

    /// Value at fine index `i` (grid point `i/2`).
    pub fn fine(&self, i: usize) -> DecoherenceTensor {
        DecoherenceTensor(self.values[i])
    }

    /// Tabulated value at time `t`; errors unless `t` is a fine-grid node.
    pub fn at(&self, t: f64) -> Result<DecoherenceTensor> {
        let u = t / self.fine_spacing();
        let i = u.round();
        if (u - i).abs() > 1e-9 || i < 0.0 || i as usize >= self.values.len() {
            return Err(SimError::Usage(format!("t = {t} is not a node of the decoherence table")));
        }
        Ok(self.fine(i as usize))
    }
}

/// Pointwise `D(t)` by composite Simpson on the sub-grid `k * spacing`.
///
/// `t` must be a multiple of `spacing`; the kernel is looked up (and
/// interpolated off its nodes) in `kernels`.
pub fn decoherence_tensor<F>(t: f64, rotation: F, kernels: &KernelTable, spacing: f64) -> Result<DecoherenceTensor>
where
    F: Fn(f64) -> Result<RotationMatrix3>,
{
    let u = t / spacing;
    let j = u.round();
    if (u - j).abs() > 1e-9 || j < 0.0 {
        return Err(SimError::Usage(format!(
            "t = {t} is off the quadrature grid of spacing {spacing}"
        )));
    }
    let j = j as usize;
    if j == 0 {
        return Ok(DecoherenceTensor::zero());
    }
    let mut weights = Vec::new();
    simpson_weights(j, &mut weights);
    let mut inner = Matrix3::<C64>::zeros();
    for (k, w) in weights.iter().enumerate() {
        let tk = k as f64 * spacing;
        let c = kernels.correlation((j - k) as f64 * spacing)?;
        let r = rotation(tk)?;
        // inner[mu][beta] += C[mu][nu] R[nu][beta]
        inner += c * r.matrix().map(C64::from) * C64::from(w * spacing);
    }
    let r = rotation(t)?;
    Ok(DecoherenceTensor(r.matrix().map(C64::from).transpose() * inner))
}

/// Right-hand side of the master equation.
pub fn master_rhs(rho: &Mat2, d: &DecoherenceTensor) -> Mat2 {
    let s = pauli();
    // X_b = sum_a D_ab s_a, K = sum_b s_b X_b
    let mut out = Mat2::zeros();
    let mut k = Mat2::zeros();
    for beta in 0..3 {
        let x = s[0] * d.0[(0, beta)] + s[1] * d.0[(1, beta)] + s[2] * d.0[(2, beta)];
        out += x * rho * s[beta] + s[beta] * rho * x.adjoint();
        k += s[beta] * x;
    }
    out - rho * k - k.adjoint() * rho
}

/// Affine Bloch-vector form `dr/dt = A r + b` of the generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochGenerator {
    pub a: Matrix3<f64>,
    pub b: Vector3<f64>,
}

impl BlochGenerator {
    pub fn from_tensor(d: &DecoherenceTensor) -> Self {
        let bloch_rate = |m: Mat2| {
            let [x, y, z] = su2::pauli_components(&master_rhs(&m, d));
            Vector3::new(2.0 * x, 2.0 * y, 2.0 * z)
        };
        let half = C64::from(0.5);
        let b = bloch_rate(Mat2::identity() * half);
        let mut a = Matrix3::zeros();
        for (l, s) in pauli().iter().enumerate() {
            a.set_column(l, &bloch_rate(s * half));
        }
        BlochGenerator { a, b }
    }

    #[inline]
    pub fn rate(&self, r: &Vector3<f64>) -> Vector3<f64> {
        self.a * r + self.b
    }
}

/// Drive/bath tables on one integration grid.
#[derive(Debug, Clone)]
pub struct Propagator {
    table: DecoherenceTable,
    bloch: Vec<BlochGenerator>,
}

/// Final fidelity of one Bloch-vector trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochEndpoint {
    pub fidelity: f64,
    pub final_bloch: [f64; 3],
    pub min_eigenvalue: f64,
}

impl Propagator {
    pub fn new(table: DecoherenceTable) -> Self {
        let bloch = (0..table.values.len())
            .into_par_iter()
            .map(|i| BlochGenerator::from_tensor(&table.fine(i)))
            .collect();
        Propagator { table, bloch }
    }

    pub fn steps(&self) -> usize {
        self.table.steps
    }

    pub fn table(&self) -> &DecoherenceTable {
        &self.table
    }

    fn step(&self) -> f64 {
        1.0 / self.table.steps as f64
    }

    /// RK4 on the density matrix, recording every grid point.
    pub fn evolve(&self, rho0: &QubitState) -> Result<Trajectory> {
        let n = self.table.steps;
        let h = self.step();
        let c = |v: f64| C64::from(v);
        let target = *rho0.matrix();
        let mut rho = target;
        let mut times = Vec::with_capacity(n + 1);
        let mut states = Vec::with_capacity(n + 1);
        let mut fidelity = Vec::with_capacity(n + 1);
        let mut generators = Vec::with_capacity(n + 1);
        let mut min_eigenvalue = f64::INFINITY;
        let mut max_trace_error: f64 = 0.0;
        let mut max_hermiticity_error: f64 = 0.0;
        for i in 0..=n {
            let t = i as f64 * h;
            let state = QubitState::from_matrix_unchecked(rho);
            let trace_error = (rho.trace() - C64::from(1.0)).norm();
            let herm = state.hermiticity_defect();
            if trace_error > INVARIANT_BREACH || herm > INVARIANT_BREACH {
                return Err(SimError::Integration {
                    t,
                    message: format!("trace drift {trace_error:e}, hermiticity defect {herm:e}"),
                });
            }
            max_trace_error = max_trace_error.max(trace_error);
            max_hermiticity_error = max_hermiticity_error.max(herm);
            min_eigenvalue = min_eigenvalue.min(state.eigenvalues()[0]);
            times.push(t);
            fidelity.push((rho * target).trace().re);
            states.push(state);
            generators.push(self.table.fine(2 * i));
            if i == n {
                break;
            }
            let (d0, d1, d2) = (self.table.fine(2 * i), self.table.fine(2 * i + 1), self.table.fine(2 * i + 2));
            let k1 = master_rhs(&rho, &d0);
            let k2 = master_rhs(&(rho + k1 * c(h / 2.0)), &d1);
            let k3 = master_rhs(&(rho + k2 * c(h / 2.0)), &d1);
            let k4 = master_rhs(&(rho + k3 * c(h)), &d2);
            rho += (k1 + (k2 + k3) * c(2.0) + k4) * c(h / 6.0);
        }
        Ok(Trajectory {
            times,
            states,
            fidelity,
            generators,
            min_eigenvalue,
            max_trace_error,
            max_hermiticity_error,
            convergence: None,
        })
    }

    /// RK4 on the Bloch vector, returning only the final fidelity.
    pub fn endpoint(&self, r0: [f64; 3]) -> BlochEndpoint {
        let n = self.table.steps;
        let h = self.step();
        let start = Vector3::from(r0);
        let mut r = start;
        let mut min_eigenvalue = 0.5 * (1.0 - r.norm());
        for i in 0..n {
            let (g0, g1, g2) = (&self.bloch[2 * i], &self.bloch[2 * i + 1], &self.bloch[2 * i + 2]);
            let k1 = g0.rate(&r);
            let k2 = g1.rate(&(r + k1 * (h / 2.0)));
            let k3 = g1.rate(&(r + k2 * (h / 2.0)));
            let k4 = g2.rate(&(r + k3 * h));
            r += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
            min_eigenvalue = min_eigenvalue.min(0.5 * (1.0 - r.norm()));
        }
        BlochEndpoint {
            fidelity: 0.5 * (1.0 + r.dot(&start)),
            final_bloch: [r.x, r.y, r.z],
            min_eigenvalue,
        }
    }
}

/// Step-doubling comparison of the final fidelity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub steps: usize,
    pub fidelity: f64,
    pub refined_fidelity: f64,
    pub tolerance: f64,
}

impl ConvergenceReport {
    pub fn difference(&self) -> f64 {
        (self.fidelity - self.refined_fidelity).abs()
    }

    pub fn converged(&self) -> bool {
        self.difference() < self.tolerance
    }
}

/// Interaction-picture density matrices on the integration grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QubitState>,
    pub fidelity: Vec<f64>,
    /// `D(t)` at each grid time.
    pub generators: Vec<DecoherenceTensor>,
    pub min_eigenvalue: f64,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub convergence: Option<ConvergenceReport>,
}

impl Trajectory {
    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().expect("trajectory has at least one point")
    }

    /// False only when a step-doubling check ran and failed.
    pub fn converged(&self) -> bool {
        self.convergence.map_or(true, |c| c.converged())
    }
}

/// `F(t) = Tr[rho(t) rho0]` along a trajectory.
pub fn fidelity_trace(traj: &Trajectory, rho0: &QubitState) -> Vec<(f64, f64)> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, rho)| (*t, su2::overlap(rho, rho0)))
        .collect()
}

/// `dF/dt = Re Tr[L(rho(t)) rho0]`, from the generator.
pub fn fidelity_derivative(traj: &Trajectory, rho0: &QubitState) -> Vec<(f64, f64)> {
    traj.times
        .iter()
        .zip(traj.states.iter().zip(&traj.generators))
        .map(|(t, (rho, d))| (*t, (master_rhs(rho.matrix(), d) * rho0.matrix()).trace().re))
        .collect()
}

/// Decoherence table of a single reservoir at unit coupling.
pub fn unit_table(
    mode: ControlMode,
    reservoir: &ReservoirSpec,
    thermal: &ThermalParams,
    steps: usize,
    rotations: Option<&RotationTable>,
) -> Result<DecoherenceTable> {
    let fine = 2 * steps;
    let owned;
    let rotations = match rotations {
        Some(r) => r,
        None => {
            owned = RotationTable::build(mode, fine)?;
            &owned
        }
    };
    let unit = reservoir.with_eta(1.0);
    let grid = KernelGrid::covering(rotations.spacing(), 1.0)?;
    grid.check_resolution(std::slice::from_ref(&unit), &mode, 1.0)?;
    let kernels = bath::build_kernel_table(&[unit], thermal, &grid)?;
    DecoherenceTable::build(rotations, &kernels)
}

/// `sum_i eta_i D_i` over reservoirs in [`ErrorClass::ALL`] order.
pub fn combine_unit_tables(steps: usize, parts: &[(ReservoirSpec, &DecoherenceTable)]) -> Result<DecoherenceTable> {
    let mut ordered: Vec<(f64, &DecoherenceTable)> = Vec::new();
    for class in ErrorClass::ALL {
        for (r, t) in parts.iter().filter(|(r, _)| r.class == class) {
            ordered.push((r.eta, *t));
        }
    }
    if ordered.is_empty() {
        return Ok(DecoherenceTable::zeros(steps));
    }
    DecoherenceTable::combine(&ordered)
}

/// Decoherence table of a whole scenario on `steps` integration steps.
pub fn scenario_table(scenario: &Scenario, steps: usize) -> Result<DecoherenceTable> {
    let rotations = RotationTable::build(scenario.control, 2 * steps)?;
    let tables = scenario
        .reservoirs
        .iter()
        .map(|r| unit_table(scenario.control, r, &scenario.thermal, steps, Some(&rotations)))
        .collect::<Result<Vec<_>>>()?;
    let parts: Vec<_> = scenario.reservoirs.iter().copied().zip(tables.iter()).collect();
    combine_unit_tables(steps, &parts)
}

/// A scenario prepared on its integration grid and on the doubled grid.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub config: IntegratorConfig,
    primary: Propagator,
    refined: Propagator,
}

impl Dynamics {
    pub fn prepare(scenario: &Scenario, config: IntegratorConfig) -> Result<Self> {
        config.validate(&scenario.control)?;
        let primary = scenario_table(scenario, config.steps)?;
        let refined = scenario_table(scenario, 2 * config.steps)?;
        Self::from_tables(config, primary, refined)
    }

    pub fn from_tables(config: IntegratorConfig, primary: DecoherenceTable, refined: DecoherenceTable) -> Result<Self> {
        if primary.steps != config.steps || refined.steps != 2 * config.steps {
            return Err(SimError::Usage("tables do not match the integrator grid".into()));
        }
        Ok(Dynamics {
            config,
            primary: Propagator::new(primary),
            refined: Propagator::new(refined),
        })
    }

    pub fn primary(&self) -> &Propagator {
        &self.primary
    }

    pub fn refined(&self) -> &Propagator {
        &self.refined
    }

    /// Full trajectory with a step-doubling check of `F(tau)`.
    pub fn evolve(&self, rho0: &QubitState) -> Result<Trajectory> {
        let mut traj = self.primary.evolve(rho0)?;
        let refined = self.refined.evolve(rho0)?;
        traj.convergence = Some(ConvergenceReport {
            steps: self.config.steps,
            fidelity: traj.final_fidelity(),
            refined_fidelity: refined.final_fidelity(),
            tolerance: self.config.convergence_tol,
        });
        Ok(traj)
    }

    /// Final fidelity on both grids for a Bloch-vector initial state.
    pub fn endpoint(&self, r0: [f64; 3]) -> (BlochEndpoint, ConvergenceReport) {
        let coarse = self.primary.endpoint(r0);
        let fine = self.refined.endpoint(r0);
        let report = ConvergenceReport {
            steps: self.config.steps,
            fidelity: coarse.fidelity,
            refined_fidelity: fine.fidelity,
            tolerance: self.config.convergence_tol,
        };
        (coarse, report)
    }
}

/// Prepares `scenario` and integrates from `rho0`.
pub fn evolve(rho0: &QubitState, scenario: &Scenario, config: IntegratorConfig) -> Result<Trajectory> {
    Dynamics::prepare(scenario, config)?.evolve(rho0)
}

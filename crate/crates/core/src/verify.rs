//! Oracle and invariant suites.
//!
//! Each suite returns a [`Check`] per property with the worst observed error,
//! so the CLI and the acceptance harness can report them uniformly.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use crate::bath::{
    bath_autocorrelations, spectral_density, thermal_occupation, ErrorClass, ReservoirSpec, ThermalParams,
};
use crate::control::{control_field, decoupler_unitary, ControlMode, ControlParams, ControlPath};
use crate::error::Result;
use crate::redfield::{evolve, IntegratorConfig, RotationTable, Scenario};
use crate::su2::{
    density_from_bloch, field_from_path_numeric, max_abs, pauli, Mat2, C64,
};

/// Outcome of one verified property.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub limit: f64,
    pub elapsed: Duration,
}

impl Check {
    fn new(name: impl Into<String>, worst: f64, limit: f64, started: Instant) -> Self {
        Check {
            name: name.into(),
            passed: worst <= limit,
            worst,
            limit,
            elapsed: started.elapsed(),
        }
    }
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let pair = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).norm())
}

/// Adaptive Gauss-Kronrod quadrature of a complex integrand.
///
/// Subdivision stops once the error estimate reaches `abs_tol` or the
/// round-off floor of the panel, whichever is larger.
pub fn integrate<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, abs_tol: f64) -> C64 {
    fn recurse<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> C64 {
        let (value, err) = gk15(f, a, b);
        if err <= tol.max(64.0 * f64::EPSILON * value.norm()) || depth >= 30 {
            return value;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    recurse(f, a, b, abs_tol, 0)
}

/// `(I1, I2)` by direct quadrature of the spectral integrals.
pub fn kernel_by_quadrature(delta: f64, r: &ReservoirSpec, th: &ThermalParams) -> (C64, C64) {
    let beta = th.beta();
    let upper = 150.0 * r.omega_c;
    let panels = 600;
    let width = upper / panels as f64;
    let scale = r.eta * r.omega_c * r.omega_c;
    let tol = 1e-13 * scale / panels as f64;
    let weight = |w: f64| {
        let j = spectral_density(w, r).unwrap_or(0.0);
        (j, thermal_occupation(w, beta).unwrap_or(0.0))
    };
    let i1_integrand = |w: f64| {
        let (j, n) = weight(w);
        C64::from_polar(j * n, -w * delta)
    };
    let i2_integrand = |w: f64| {
        let (j, n) = weight(w);
        C64::from_polar(j * (n + 1.0), w * delta)
    };
    let mut i1 = C64::new(0.0, 0.0);
    let mut i2 = C64::new(0.0, 0.0);
    for k in 0..panels {
        let (a, b) = (k as f64 * width, (k + 1) as f64 * width);
        i1 += integrate(&i1_integrand, a, b, tol);
        i2 += integrate(&i2_integrand, a, b, tol);
    }
    (i1, i2)
}

/// Closed-form kernels against quadrature at ten `(delta, s)` probes.
pub fn kernel_oracle(thermal: &ThermalParams) -> Result<Check> {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for s in [1u32, 3] {
        let r = ReservoirSpec::new(ErrorClass::Dephasing, 1.0 / 16.0, s, thermal.omega_c)?;
        for delta in [0.0, 0.03, 0.1, 0.4, 1.0] {
            let (c1, c2) = bath_autocorrelations(delta, &r, thermal)?;
            let (q1, q2) = kernel_by_quadrature(delta, &r, thermal);
            worst = worst.max((c1 - q1).norm() / q1.norm()).max((c2 - q2).norm() / q2.norm());
        }
    }
    Ok(Check::new("kernel closed form vs quadrature (relative)", worst, 1e-8, started))
}

/// Points on `(0, 1)` from the golden-ratio sequence.
pub fn probe_times(count: usize) -> Vec<f64> {
    let g = 0.618_033_988_749_894_9;
    (1..=count).map(|k| (0.5 + k as f64 * g).fract()).collect()
}

/// Closed-form control field against `i dU/dt U^dagger` by finite differences.
pub fn field_synthesis() -> Result<Check> {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for mode in [
        ControlMode::Bare,
        ControlMode::DephasingProtect { n: 5 },
        ControlMode::FullProtect { n: 25, m: 10 },
    ] {
        let p = ControlParams::unit(mode)?;
        let path = ControlPath::numeric(p);
        for t in probe_times(200) {
            let closed = control_field(t, &p)?;
            let numeric = field_from_path_numeric(&path, t)?;
            worst = worst.max((closed.0 - numeric.0).norm() / closed.norm());
        }
    }
    Ok(Check::new("control field vs finite-difference synthesis (relative)", worst, 1e-6, started))
}

/// Largest `|R^T R - I|` over the rotation tables of all three drives.
pub fn rotation_orthogonality(intervals: usize) -> Result<Check> {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for mode in [
        ControlMode::Bare,
        ControlMode::DephasingProtect { n: 25 },
        ControlMode::FullProtect { n: 25, m: 10 },
    ] {
        let table = RotationTable::build(mode, intervals)?;
        for r in table.values() {
            let (orth, det) = r.orthogonality_defect();
            worst = worst.max(orth).max(det);
        }
    }
    Ok(Check::new("rotation orthogonality", worst, 1e-12, started))
}

/// `int_0^tau Uc^dagger sigma Uc dt` for each protected error operator.
///
/// The integrands are trigonometric polynomials, so the trapezoid rule over a
/// full period is exact once the sample count exceeds the highest harmonic.
pub fn decoupling_integral(samples: usize) -> Result<Check> {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let sigma = pauli();
    let cases: [(ControlMode, &[usize]); 3] = [
        (ControlMode::DephasingProtect { n: 5 }, &[2]),
        (ControlMode::DephasingProtect { n: 25 }, &[2]),
        (ControlMode::FullProtect { n: 25, m: 10 }, &[0, 1, 2]),
    ];
    for (mode, ops) in cases {
        let p = ControlParams::unit(mode)?;
        for &k in ops {
            let mut acc = Mat2::zeros();
            for i in 0..samples {
                let uc = *decoupler_unitary(i as f64 / samples as f64, &p)?.matrix();
                acc += uc.adjoint() * sigma[k] * uc;
            }
            worst = worst.max(max_abs(&acc) / samples as f64);
        }
    }
    Ok(Check::new("decoupling condition integral", worst, 1e-10, started))
}

/// Trace and Hermiticity drift, and the zero-coupling identity.
pub fn dynamical_invariants() -> Result<Vec<Check>> {
    let thermal = ThermalParams::from_physical(0.25, 1e-10, 2.0 * PI)?;
    let rho0 = density_from_bloch(1.1, 0.4);
    let mut trace: f64 = 0.0;
    let mut herm: f64 = 0.0;
    let started = Instant::now();
    for (mode, s) in [(ControlMode::Bare, 1), (ControlMode::DephasingProtect { n: 5 }, 3)] {
        let reservoirs = vec![
            ReservoirSpec::new(ErrorClass::BitFlip, 0.05, s, 2.0 * PI)?,
            ReservoirSpec::new(ErrorClass::Dissipation, 0.05, s, 2.0 * PI)?,
            ReservoirSpec::new(ErrorClass::Dephasing, 1.0 / 16.0, s, 2.0 * PI)?,
        ];
        let scenario = Scenario::new(mode, reservoirs, thermal)?;
        let cfg = IntegratorConfig {
            steps: IntegratorConfig::min_steps(&mode).max(400),
            convergence_tol: 1.0,
        };
        let traj = evolve(&rho0, &scenario, cfg)?;
        trace = trace.max(traj.max_trace_error);
        herm = herm.max(traj.max_hermiticity_error);
    }
    let mut checks = vec![
        Check::new("trace preservation", trace, 1e-9, started),
        Check::new("hermiticity preservation", herm, 1e-9, started),
    ];

    let started = Instant::now();
    let mut flat: f64 = 0.0;
    for mode in [ControlMode::Bare, ControlMode::FullProtect { n: 5, m: 2 }] {
        let reservoirs = ErrorClass::ALL
            .iter()
            .map(|&c| ReservoirSpec::new(c, 0.0, 1, 2.0 * PI))
            .collect::<Result<Vec<_>>>()?;
        let scenario = Scenario::new(mode, reservoirs, thermal)?;
        let cfg = IntegratorConfig {
            steps: IntegratorConfig::min_steps(&mode),
            convergence_tol: 1.0,
        };
        let traj = evolve(&rho0, &scenario, cfg)?;
        for f in &traj.fidelity {
            flat = flat.max((f - 1.0).abs());
        }
    }
    checks.push(Check::new("zero coupling keeps F = 1", flat, 1e-12, started));
    Ok(checks)
}

/// Every suite, in a fixed order.
pub fn run_all() -> Result<Vec<Check>> {
    let thermal = ThermalParams::from_physical(0.25, 1e-10, 2.0 * PI)?;
    let mut checks = vec![
        kernel_oracle(&thermal)?,
        field_synthesis()?,
        rotation_orthogonality(4000)?,
        decoupling_integral(1024)?,
    ];
    checks.extend(dynamical_invariants()?);
    Ok(checks)
}

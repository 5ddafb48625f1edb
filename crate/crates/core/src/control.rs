//! Drive programs for the Hadamard gate.
//!
//! The gate unitary `U0(t) = I cos(pi t / 2 tau) - i H sin(pi t / 2 tau)` with
//! `H = (sigma_x + sigma_z)/sqrt 2` is composed with a periodic decoupling
//! unitary `Uc(t)` that equals the identity at `t = tau`:
//!
//! * bare: `Uc = I`
//! * dephasing protection: `Uc = exp(-i 2 n pi t/tau sigma_x)`
//! * full protection: `Uc = exp(-i 2 n pi t/tau sigma_x) exp(-i 2 m pi t/tau sigma_z)`
//!
//! Times are handled as the dimensionless fraction `x = t / tau`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SimError};
use crate::su2::{self, axis_angle, FieldVector, Mat2, QubitUnitary, UnitaryPath, C64};

const HADAMARD_AXIS: [f64; 3] = [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
const X_AXIS: [f64; 3] = [1.0, 0.0, 0.0];
const Z_AXIS: [f64; 3] = [0.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlMode {
    Bare,
    DephasingProtect { n: u32 },
    FullProtect { n: u32, m: u32 },
}

impl ControlMode {
    pub fn name(&self) -> &'static str {
        match self {
            ControlMode::Bare => "bare",
            ControlMode::DephasingProtect { .. } => "dephasing_protect",
            ControlMode::FullProtect { .. } => "full_protect",
        }
    }

    /// Winding numbers `(n, m)`, zero where a decoupler is absent.
    pub fn windings(&self) -> (u32, u32) {
        match *self {
            ControlMode::Bare => (0, 0),
            ControlMode::DephasingProtect { n } => (n, 0),
            ControlMode::FullProtect { n, m } => (n, m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ControlMode::Bare => Ok(()),
            ControlMode::DephasingProtect { n } if n >= 1 => Ok(()),
            ControlMode::DephasingProtect { .. } => {
                Err(SimError::validation("control.n", "must be >= 1"))
            }
            ControlMode::FullProtect { n, .. } if n < 1 => {
                Err(SimError::validation("control.n", "must be >= 1"))
            }
            ControlMode::FullProtect { m, .. } if m < 1 => {
                Err(SimError::validation("control.m", "must be >= 1"))
            }
            ControlMode::FullProtect { n, m } if n == m => {
                Err(SimError::validation("control.m", "must differ from control.n"))
            }
            ControlMode::FullProtect { .. } => Ok(()),
        }
    }
}

impl fmt::Display for ControlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlMode::Bare => write!(f, "bare"),
            ControlMode::DephasingProtect { n } => write!(f, "dephasing_protect(n={n})"),
            ControlMode::FullProtect { n, m } => write!(f, "full_protect(n={n},m={m})"),
        }
    }
}

/// Mode name as it appears in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Bare,
    DephasingProtect,
    FullProtect,
}

impl FromStr for ModeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bare" => Ok(ModeKind::Bare),
            "dephasing_protect" => Ok(ModeKind::DephasingProtect),
            "full_protect" => Ok(ModeKind::FullProtect),
            other => Err(format!(
                "unknown mode `{other}` (expected bare, dephasing_protect or full_protect)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlParams {
    pub tau: f64,
    pub mode: ControlMode,
}

impl ControlParams {
    pub fn new(tau: f64, mode: ControlMode) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(SimError::validation("tau", "must be positive and finite"));
        }
        mode.validate()?;
        Ok(ControlParams { tau, mode })
    }

    /// Gate duration of one time unit.
    pub fn unit(mode: ControlMode) -> Result<Self> {
        Self::new(1.0, mode)
    }

    fn fraction(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.tau;
        if !(t >= -slack && t <= self.tau + slack) {
            return Err(SimError::Range { t, tau: self.tau });
        }
        Ok((t / self.tau).clamp(0.0, 1.0))
    }
}

fn gate_at(x: f64) -> QubitUnitary {
    axis_angle(PI * x / 2.0, &HADAMARD_AXIS)
}

fn decoupler_at(x: f64, mode: ControlMode) -> QubitUnitary {
    match mode {
        ControlMode::Bare => QubitUnitary::identity(),
        ControlMode::DephasingProtect { n } => axis_angle(2.0 * n as f64 * PI * x, &X_AXIS),
        ControlMode::FullProtect { n, m } => {
            axis_angle(2.0 * n as f64 * PI * x, &X_AXIS)
                * axis_angle(2.0 * m as f64 * PI * x, &Z_AXIS)
        }
    }
}

fn total_at(x: f64, mode: ControlMode) -> QubitUnitary {
    decoupler_at(x, mode) * gate_at(x)
}

/// `d/dx exp(-i w x sigma_u) = -i w (sigma . u) exp(-i w x sigma_u)`.
fn axis_angle_rate(w: f64, x: f64, u: &[f64; 3]) -> (Mat2, Mat2) {
    let v = *axis_angle(w * x, u).matrix();
    let dv = su2::sigma_dot(u) * v * C64::new(0.0, -w);
    (v, dv)
}

/// Product-rule `dU/dx` of the total unitary.
fn total_rate(x: f64, mode: ControlMode) -> Mat2 {
    let (g, dg) = axis_angle_rate(PI / 2.0, x, &HADAMARD_AXIS);
    match mode {
        ControlMode::Bare => dg,
        ControlMode::DephasingProtect { n } => {
            let (c, dc) = axis_angle_rate(2.0 * n as f64 * PI, x, &X_AXIS);
            dc * g + c * dg
        }
        ControlMode::FullProtect { n, m } => {
            let (cx, dcx) = axis_angle_rate(2.0 * n as f64 * PI, x, &X_AXIS);
            let (cz, dcz) = axis_angle_rate(2.0 * m as f64 * PI, x, &Z_AXIS);
            dcx * cz * g + cx * dcz * g + cx * cz * dg
        }
    }
}

/// Gate-producing unitary `U0(t)`.
pub fn gate_unitary(t: f64, p: &ControlParams) -> Result<QubitUnitary> {
    Ok(gate_at(p.fraction(t)?))
}

/// Periodic decoupling unitary `Uc(t)`; the identity at `t = tau` in every mode.
pub fn decoupler_unitary(t: f64, p: &ControlParams) -> Result<QubitUnitary> {
    Ok(decoupler_at(p.fraction(t)?, p.mode))
}

/// `U(t) = Uc(t) U0(t)`.
pub fn total_unitary(t: f64, p: &ControlParams) -> Result<QubitUnitary> {
    Ok(total_at(p.fraction(t)?, p.mode))
}

/// Closed-form control field of each drive mode.
pub fn control_field(t: f64, p: &ControlParams) -> Result<FieldVector> {
    let x = p.fraction(t)?;
    let unit = PI / p.tau;
    let k = 1.0 / (2.0 * SQRT_2);
    let field = match p.mode {
        ControlMode::Bare => {
            let a = unit / 2.0 * FRAC_1_SQRT_2;
            FieldVector::new(a, 0.0, a)
        }
        ControlMode::DephasingProtect { n } => {
            let n = n as f64;
            let (s, c) = (4.0 * n * PI * x).sin_cos();
            FieldVector::new(unit * (2.0 * n + k), -unit * k * s, unit * k * c)
        }
        ControlMode::FullProtect { n, m } => {
            let (n, m) = (n as f64, m as f64);
            let (sn, cn) = (4.0 * n * PI * x).sin_cos();
            let (sm, cm) = (4.0 * m * PI * x).sin_cos();
            FieldVector::new(
                unit * (2.0 * n + k * cm),
                -unit * (2.0 * m + k) * sn + unit * k * cn * sm,
                unit * (2.0 * m + k) * cn + unit * k * sn * sm,
            )
        }
    };
    Ok(field)
}

/// The ideal Hadamard `(sigma_x + sigma_z)/sqrt 2`.
pub fn hadamard() -> Mat2 {
    su2::sigma_dot(&HADAMARD_AXIS)
}

/// Distance from `U(tau)` to the Hadamard, minimized over a global phase.
pub fn gate_error(p: &ControlParams) -> f64 {
    let u = *total_at(1.0, p.mode).matrix();
    let h = hadamard();
    let overlap = (h.adjoint() * u).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    (u - h * phase).norm()
}

/// True iff `U(tau)` equals the Hadamard up to global phase within 1e-10.
pub fn verify_gate(p: &ControlParams) -> bool {
    gate_error(p) <= 1e-10
}

/// The total drive as a [`UnitaryPath`] with a product-rule derivative.
#[derive(Debug, Clone, Copy)]
pub struct ControlPath {
    params: ControlParams,
    analytic: bool,
}

impl ControlPath {
    pub fn new(params: ControlParams) -> Self {
        ControlPath {
            params,
            analytic: true,
        }
    }

    /// A path that reports no analytic derivative, forcing finite differences.
    pub fn numeric(params: ControlParams) -> Self {
        ControlPath {
            params,
            analytic: false,
        }
    }
}

impl UnitaryPath for ControlPath {
    fn duration(&self) -> f64 {
        self.params.tau
    }

    fn unitary(&self, t: f64) -> Result<QubitUnitary> {
        total_unitary(t, &self.params)
    }

    fn derivative(&self, t: f64) -> Option<Result<Mat2>> {
        if !self.analytic {
            return None;
        }
        let p = &self.params;
        Some(p.fraction(t).map(|x| total_rate(x, p.mode) / C64::from(p.tau)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{
        field_from_path, field_from_path_numeric, identity, max_abs, sigma_x, sigma_z,
    };

    fn unit(mode: ControlMode) -> ControlParams {
        ControlParams::unit(mode).unwrap()
    }

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        max_abs(&(a - b)) <= tol
    }

    fn minus_i_hadamard() -> Mat2 {
        hadamard() * C64::new(0.0, -1.0)
    }

    #[test]
    fn params_validation() {
        assert!(ControlParams::unit(ControlMode::DephasingProtect { n: 0 }).is_err());
        assert!(ControlParams::unit(ControlMode::FullProtect { n: 3, m: 3 }).is_err());
        assert!(ControlParams::unit(ControlMode::FullProtect { n: 3, m: 0 }).is_err());
        assert!(ControlParams::new(-1.0, ControlMode::Bare).is_err());
    }

    #[test]
    fn gate_unitary_examples() {
        let p = unit(ControlMode::Bare);
        assert!(close(gate_unitary(0.0, &p).unwrap().matrix(), &identity(), 1e-15));
        assert!(close(gate_unitary(1.0, &p).unwrap().matrix(), &minus_i_hadamard(), 1e-15));
        let half = (PI / 4.0).cos();
        let expected = identity() * C64::from(half) - hadamard() * C64::new(0.0, half);
        assert!(close(gate_unitary(0.5, &p).unwrap().matrix(), &expected, 1e-15));
    }

    #[test]
    fn range_errors() {
        let p = ControlParams::new(2.0, ControlMode::Bare).unwrap();
        assert!(matches!(gate_unitary(2.5, &p), Err(SimError::Range { .. })));
        assert!(matches!(control_field(-0.1, &p), Err(SimError::Range { .. })));
        assert!(total_unitary(2.0, &p).is_ok());
    }

    #[test]
    fn decoupler_examples() {
        let p = unit(ControlMode::DephasingProtect { n: 5 });
        assert!(close(decoupler_unitary(1.0, &p).unwrap().matrix(), &identity(), 1e-13));
        let quarter = decoupler_unitary(1.0 / 20.0, &p).unwrap();
        assert!(close(quarter.matrix(), &(sigma_x() * C64::new(0.0, -1.0)), 1e-14));

        let p = unit(ControlMode::FullProtect { n: 25, m: 10 });
        assert!(close(decoupler_unitary(1.0, &p).unwrap().matrix(), &identity(), 1e-12));
    }

    #[test]
    fn total_unitary_endpoints() {
        for mode in [
            ControlMode::Bare,
            ControlMode::DephasingProtect { n: 3 },
            ControlMode::FullProtect { n: 25, m: 10 },
        ] {
            let p = unit(mode);
            assert!(close(total_unitary(0.0, &p).unwrap().matrix(), &identity(), 1e-15));
            assert!(close(total_unitary(1.0, &p).unwrap().matrix(), &minus_i_hadamard(), 1e-12));
        }
    }

    #[test]
    fn total_unitary_matches_axis_angle_decomposition() {
        // cos(alpha) and u sin(alpha) written out for the dephasing-protected drive
        let (n, x) = (2.0, 0.37);
        let (sa, ca) = (2.0 * n * PI * x).sin_cos();
        let (sb, cb) = (PI * x / 2.0).sin_cos();
        let cos_alpha = -sa * sb / SQRT_2 + ca * cb;
        let usin = [
            ca * sb / SQRT_2 + sa * cb,
            -sa * sb / SQRT_2,
            ca * sb / SQRT_2,
        ];
        let expected = identity() * C64::from(cos_alpha) - su2::sigma_dot(&usin) * C64::new(0.0, 1.0);
        let p = unit(ControlMode::DephasingProtect { n: 2 });
        assert!(close(total_unitary(x, &p).unwrap().matrix(), &expected, 1e-14));
    }

    #[test]
    fn field_examples() {
        let k = 1.0 / (2.0 * SQRT_2);
        let p = unit(ControlMode::DephasingProtect { n: 5 });
        for x in [0.0, 0.13, 0.5, 0.99] {
            let f = control_field(x, &p).unwrap();
            assert!((f.x() - PI * (10.0 + k)).abs() < 1e-12);
        }
        let f = control_field(0.0, &p).unwrap();
        assert!(f.y().abs() < 1e-15 && (f.z() - PI * k).abs() < 1e-12);

        let p = unit(ControlMode::FullProtect { n: 25, m: 10 });
        let f = control_field(0.0, &p).unwrap();
        assert!((f.x() - PI * (50.0 + k)).abs() < 1e-12);
        assert!(f.y().abs() < 1e-15);
        assert!((f.z() - PI * (20.0 + k)).abs() < 1e-12);

        let p = ControlParams::new(2.0, ControlMode::Bare).unwrap();
        let f = control_field(1.0, &p).unwrap();
        assert!((f.x() - PI / 4.0 / SQRT_2).abs() < 1e-15);
        assert_eq!(f.x(), f.z());
    }

    #[test]
    fn closed_form_field_matches_path_derivative() {
        let x = 0.3;
        for mode in [
            ControlMode::Bare,
            ControlMode::DephasingProtect { n: 2 },
            ControlMode::FullProtect { n: 25, m: 10 },
        ] {
            let p = unit(mode);
            let closed = control_field(x, &p).unwrap();
            let numeric = field_from_path_numeric(&ControlPath::new(p), x).unwrap();
            let analytic = field_from_path(&ControlPath::new(p), x).unwrap();
            let scale = closed.norm();
            assert!((closed.0 - numeric.0).norm() <= 1e-6 * scale, "{mode}: {closed:?} {numeric:?}");
            assert!((closed.0 - analytic.0).norm() <= 1e-12 * scale, "{mode}");
        }
    }

    #[test]
    fn decoupling_condition_vanishes_over_one_period() {
        // Simpson over one period of the dephasing decoupler
        let n = 4u32;
        let p = unit(ControlMode::DephasingProtect { n });
        let period = 1.0 / n as f64;
        let panels = 2048;
        let h = period / panels as f64;
        let mut acc = Mat2::zeros();
        for i in 0..=panels {
            let w = if i == 0 || i == panels { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let uc = *decoupler_unitary(i as f64 * h, &p).unwrap().matrix();
            acc += uc.adjoint() * sigma_z() * uc * C64::from(w * h / 3.0);
        }
        assert!(max_abs(&acc) < 1e-10, "{acc}");
    }

    #[test]
    fn gate_closure() {
        assert!(verify_gate(&unit(ControlMode::DephasingProtect { n: 15 })));
        assert!(verify_gate(&unit(ControlMode::FullProtect { n: 25, m: 10 })));
        assert!(verify_gate(&unit(ControlMode::Bare)));
    }
}

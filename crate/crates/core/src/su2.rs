//! SU(2)/SO(3) algebra for a single qubit.
//!
//! Unitaries are written in axis-angle form `I cos(alpha) - i (sigma . u) sin(alpha)`,
//! conjugation by a unitary is represented as the adjoint rotation matrix
//! `R[mu][nu] = 1/2 Re Tr[sigma_nu U^dagger sigma_mu U]`, and a driving field is
//! recovered from a unitary path as the Pauli components of `i (dU/dt) U^dagger`.

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Result, SimError};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn identity() -> Mat2 {
    Mat2::identity()
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// `[sigma_x, sigma_y, sigma_z]`.
pub fn pauli() -> [Mat2; 3] {
    [sigma_x(), sigma_y(), sigma_z()]
}

/// `sum_k v_k sigma_k` for a real 3-vector.
pub fn sigma_dot(v: &[f64; 3]) -> Mat2 {
    let (x, y, z) = (v[0], v[1], v[2]);
    Mat2::new(
        C64::new(z, 0.0),
        C64::new(x, -y),
        C64::new(x, y),
        C64::new(-z, 0.0),
    )
}

/// Real parts of the Pauli components `1/2 Tr[sigma_k m]`.
pub fn pauli_components(m: &Mat2) -> [f64; 3] {
    // Tr[sx m] = m01 + m10, Tr[sy m] = i(m01 - m10), Tr[sz m] = m00 - m11
    let x = 0.5 * (m[(0, 1)] + m[(1, 0)]).re;
    let y = 0.5 * (I * (m[(0, 1)] - m[(1, 0)])).re;
    let z = 0.5 * (m[(0, 0)] - m[(1, 1)]).re;
    [x, y, z]
}

/// Largest entrywise modulus.
pub fn max_abs(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermiticity_defect(m: &Mat2) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// A 2x2 unitary, the carrier of driven qubit evolution operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitUnitary(Mat2);

impl QubitUnitary {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn identity() -> Self {
        QubitUnitary(Mat2::identity())
    }

    /// Wraps a matrix after checking `U U^dagger = I` and `|det U| = 1`.
    pub fn new(m: Mat2) -> Result<Self> {
        let defect = max_abs(&(m * m.adjoint() - Mat2::identity()));
        let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
        // looser than TOLERANCE: products of many unitaries accumulate round-off
        if defect > 1e-10 || (det - 1.0).abs() > 1e-10 {
            return Err(SimError::Domain(format!(
                "matrix is not unitary (|UU^dagger - I| = {defect:e}, |det| = {det})"
            )));
        }
        Ok(QubitUnitary(m))
    }

    #[cfg(test)]
    pub(crate) fn new_unchecked(m: Mat2) -> Self {
        QubitUnitary(m)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        QubitUnitary(self.0.adjoint())
    }

    pub fn compose(&self, rhs: &QubitUnitary) -> Self {
        QubitUnitary(self.0 * rhs.0)
    }
}

impl std::ops::Mul for QubitUnitary {
    type Output = QubitUnitary;

    fn mul(self, rhs: QubitUnitary) -> QubitUnitary {
        self.compose(&rhs)
    }
}

/// `I cos(alpha) - i (sigma . u) sin(alpha)`.
pub fn unitary_from_axis_angle(alpha: f64, u: [f64; 3]) -> Result<QubitUnitary> {
    let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(SimError::Domain(format!(
            "rotation axis must be a unit vector, got norm {norm}"
        )));
    }
    Ok(axis_angle(alpha, &u))
}

pub(crate) fn axis_angle(alpha: f64, u: &[f64; 3]) -> QubitUnitary {
    let (s, c) = alpha.sin_cos();
    let m = Mat2::identity() * C64::new(c, 0.0) - sigma_dot(u) * C64::new(0.0, s);
    QubitUnitary(m)
}

/// Proper rotation in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix3(Matrix3<f64>);

impl RotationMatrix3 {
    pub fn identity() -> Self {
        RotationMatrix3(Matrix3::identity())
    }

    /// Wraps a matrix after checking orthogonality and unit determinant.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let r = RotationMatrix3(m);
        let (orth, det) = r.orthogonality_defect();
        if orth > 1e-10 || det > 1e-10 {
            return Err(SimError::Domain(format!(
                "matrix is not a proper rotation (|R^T R - I| = {orth:e}, |det - 1| = {det:e})"
            )));
        }
        Ok(r)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    /// `(max |R^T R - I|, |det R - 1|)`.
    pub fn orthogonality_defect(&self) -> (f64, f64) {
        let gram = self.0.transpose() * self.0 - Matrix3::identity();
        let orth = gram.iter().map(|v| v.abs()).fold(0.0, f64::max);
        (orth, (self.0.determinant() - 1.0).abs())
    }

    pub fn compose(&self, rhs: &RotationMatrix3) -> Self {
        RotationMatrix3(self.0 * rhs.0)
    }
}

/// Adjoint representation: `U^dagger sigma_mu U = sum_nu R[mu][nu] sigma_nu`.
pub fn rotation_from_unitary(u: &QubitUnitary) -> RotationMatrix3 {
    let um = u.matrix();
    let ud = um.adjoint();
    let mut r = Matrix3::zeros();
    for (mu, s) in pauli().iter().enumerate() {
        let lambda = ud * s * um;
        let comps = pauli_components(&lambda);
        for nu in 0..3 {
            r[(mu, nu)] = comps[nu];
        }
    }
    RotationMatrix3(r)
}

/// Driving field `Omega` with `H = Omega . sigma`, angular frequency units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector(pub Vector3<f64>);

impl FieldVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        FieldVector(Vector3::new(x, y, z))
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// A differentiable time-parameterized unitary on `[0, duration]`.
pub trait UnitaryPath {
    fn duration(&self) -> f64;

    fn unitary(&self, t: f64) -> Result<QubitUnitary>;

    /// Analytic `dU/dt`, when the path knows it.
    fn derivative(&self, _t: f64) -> Option<Result<Mat2>> {
        None
    }
}

/// Central-difference `dU/dt` with step `1e-6 * duration`, switching to
/// second-order one-sided stencils at the ends of the domain.
pub fn finite_difference_derivative<P: UnitaryPath + ?Sized>(path: &P, t: f64) -> Result<Mat2> {
    let span = path.duration();
    let h = 1e-6 * span;
    let u = |s: f64| path.unitary(s).map(|v| *v.matrix());
    let d = if t - h < 0.0 {
        (u(t + h)? * C64::from(4.0) - u(t)? * C64::from(3.0) - u(t + 2.0 * h)?) / C64::from(2.0 * h)
    } else if t + h > span {
        (u(t)? * C64::from(3.0) - u(t - h)? * C64::from(4.0) + u(t - 2.0 * h)?) / C64::from(2.0 * h)
    } else {
        (u(t + h)? - u(t - h)?) / C64::from(2.0 * h)
    };
    Ok(d)
}

/// `Omega(t)` such that `Omega . sigma = i (dU/dt) U^dagger`.
pub fn field_from_path<P: UnitaryPath + ?Sized>(path: &P, t: f64) -> Result<FieldVector> {
    let derivative = match path.derivative(t) {
        Some(d) => d?,
        None => finite_difference_derivative(path, t)?,
    };
    field_from_derivative(&path.unitary(t)?, &derivative)
}

/// Same as [`field_from_path`] but always differentiates numerically.
pub fn field_from_path_numeric<P: UnitaryPath + ?Sized>(path: &P, t: f64) -> Result<FieldVector> {
    let derivative = finite_difference_derivative(path, t)?;
    field_from_derivative(&path.unitary(t)?, &derivative)
}

fn field_from_derivative(u: &QubitUnitary, du: &Mat2) -> Result<FieldVector> {
    let h = du * u.matrix().adjoint() * I;
    let scale = max_abs(&h).max(1.0);
    let herm = hermiticity_defect(&h);
    let trace = h.trace().norm();
    if herm > 1e-8 * scale || trace > 1e-8 * scale {
        return Err(SimError::Consistency(format!(
            "i dU/dt U^dagger is not traceless Hermitian (hermiticity defect {herm:e}, trace {trace:e})"
        )));
    }
    let [x, y, z] = pauli_components(&h);
    Ok(FieldVector::new(x, y, z))
}

/// A single-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState(Mat2);

impl QubitState {
    pub const TOLERANCE: f64 = 1e-12;

    /// `1/2 (I + r . sigma)`; requires `|r| <= 1`.
    pub fn from_bloch_vector(r: [f64; 3]) -> Result<Self> {
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if len > 1.0 + 1e-12 || !len.is_finite() {
            return Err(SimError::Domain(format!(
                "Bloch vector length {len} exceeds 1"
            )));
        }
        Ok(Self::from_bloch_unchecked(r))
    }

    pub(crate) fn from_matrix_unchecked(m: Mat2) -> Self {
        QubitState(m)
    }

    pub(crate) fn from_bloch_unchecked(r: [f64; 3]) -> Self {
        QubitState((Mat2::identity() + sigma_dot(&r)) * C64::from(0.5))
    }

    /// Wraps a matrix after checking Hermiticity and unit trace.
    pub fn new(m: Mat2) -> Result<Self> {
        let herm = hermiticity_defect(&m);
        let tr = (m.trace() - ONE).norm();
        if herm > 1e-9 || tr > 1e-9 {
            return Err(SimError::Domain(format!(
                "not a density matrix (hermiticity defect {herm:e}, trace error {tr:e})"
            )));
        }
        Ok(QubitState(m))
    }

    pub fn maximally_mixed() -> Self {
        QubitState(Mat2::identity() * C64::from(0.5))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn bloch(&self) -> [f64; 3] {
        let [x, y, z] = pauli_components(&self.0);
        [2.0 * x, 2.0 * y, 2.0 * z]
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.0)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let r = self.bloch();
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let half_trace = 0.5 * self.0.trace().re;
        [half_trace - 0.5 * len, half_trace + 0.5 * len]
    }
}

/// Pure state on the Bloch sphere at polar angle `theta` and azimuth `phi`.
pub fn density_from_bloch(theta: f64, phi: f64) -> QubitState {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    QubitState::from_bloch_unchecked([st * cp, st * sp, ct])
}

/// `Re Tr[a b]`.
pub fn overlap(a: &QubitState, b: &QubitState) -> f64 {
    (a.matrix() * b.matrix()).trace().re
}

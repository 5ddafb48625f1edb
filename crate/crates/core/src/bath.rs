//! Thermal boson reservoirs and their correlation kernels.
//!
//! Each reservoir has the spectral density `J(w) = eta w^s / wc^(s-1) exp(-w/wc)`.
//! Its two autocorrelations are
//!
//! ```text
//! I1(d) = int J(w) n(w) exp(-i w d) dw
//! I2(d) = int J(w) (n(w) + 1) exp(+i w d) dw = conj(I1(d)) + conj(V(d))
//! V(d)  = int J(w) exp(-i w d) dw = eta wc^2 s! / (1 + i wc d)^(s+1)
//! ```
//!
//! with `I1` summed over Bose-factor images
//! `eta wc^2 sum_k s! / (1 + i wc d + beta wc (k+1))^(s+1)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::control::ControlMode;
use crate::error::{Result, SimError};
use crate::su2::C64;

/// `hbar / k_B` in kelvin seconds, from the exact SI values of `hbar` and `k_B`.
pub const HBAR_OVER_KB: f64 = 1.054_571_817e-34 / 1.380_649e-23;

/// Relative accuracy demanded of the thermal image sum.
pub const THERMAL_SUM_TOLERANCE: f64 = 1e-12;

/// Hard cap on explicitly summed thermal images.
pub const THERMAL_SUM_MAX_TERMS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorClass {
    BitFlip,
    Dissipation,
    Dephasing,
}

impl ErrorClass {
    pub const ALL: [ErrorClass; 3] = [ErrorClass::BitFlip, ErrorClass::Dissipation, ErrorClass::Dephasing];

    pub fn name(&self) -> &'static str {
        match self {
            ErrorClass::BitFlip => "bit_flip",
            ErrorClass::Dissipation => "dissipation",
            ErrorClass::Dephasing => "dephasing",
        }
    }

    /// Error vector coupling the reservoir to the Pauli components.
    pub fn lambda(&self) -> [C64; 3] {
        let zero = C64::new(0.0, 0.0);
        match self {
            ErrorClass::BitFlip => [C64::new(1.0, 0.0), zero, zero],
            ErrorClass::Dissipation => [C64::new(0.5, 0.0), C64::new(0.0, 0.5), zero],
            ErrorClass::Dephasing => [zero, zero, C64::new(1.0, 0.0)],
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bit_flip" => Ok(ErrorClass::BitFlip),
            "dissipation" => Ok(ErrorClass::Dissipation),
            "dephasing" => Ok(ErrorClass::Dephasing),
            other => Err(format!(
                "unknown error class `{other}` (expected bit_flip, dissipation or dephasing)"
            )),
        }
    }
}

/// One independent reservoir.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirSpec {
    pub class: ErrorClass,
    pub eta: f64,
    pub s: u32,
    pub omega_c: f64,
}

impl ReservoirSpec {
    pub fn new(class: ErrorClass, eta: f64, s: u32, omega_c: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(SimError::validation("eta", format!("must be finite and >= 0, got {eta}")));
        }
        if s < 1 {
            return Err(SimError::validation("s", "ohmicity exponent must be an integer >= 1"));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(SimError::validation("omega_c", "cutoff must be positive"));
        }
        Ok(ReservoirSpec { class, eta, s, omega_c })
    }

    pub fn lambda(&self) -> [C64; 3] {
        self.class.lambda()
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        ReservoirSpec { eta, ..*self }
    }
}

fn factorial(s: u32) -> f64 {
    (1..=s).map(f64::from).product()
}

/// Inverse temperature of the (common) bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    /// `beta * omega_c` for the reference cutoff.
    pub beta_omega_c: f64,
    /// Reference cutoff in inverse time units.
    pub omega_c: f64,
    pub temperature_kelvin: Option<f64>,
    pub tau_seconds: Option<f64>,
}

impl ThermalParams {
    /// `beta_omega_c` may be `+inf` for a zero-temperature bath.
    pub fn new(beta_omega_c: f64, omega_c: f64) -> Result<Self> {
        if !(beta_omega_c > 0.0) || beta_omega_c.is_nan() {
            return Err(SimError::validation("beta_omega_c", "must be > 0"));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(SimError::validation("omega_c", "cutoff must be positive"));
        }
        Ok(ThermalParams {
            beta_omega_c,
            omega_c,
            temperature_kelvin: None,
            tau_seconds: None,
        })
    }

    /// `beta omega_c = hbar omega_c / (k_B T)` with `omega_c = omega_c_tau / tau`.
    pub fn from_physical(temperature_kelvin: f64, tau_seconds: f64, omega_c_tau: f64) -> Result<Self> {
        if !(temperature_kelvin > 0.0 && temperature_kelvin.is_finite()) {
            return Err(SimError::validation("temperature_kelvin", "must be > 0"));
        }
        if !(tau_seconds > 0.0 && tau_seconds.is_finite()) {
            return Err(SimError::validation("tau_seconds", "must be > 0"));
        }
        let omega_c_si = omega_c_tau / tau_seconds;
        let mut th = ThermalParams::new(HBAR_OVER_KB * omega_c_si / temperature_kelvin, omega_c_tau)?;
        th.temperature_kelvin = Some(temperature_kelvin);
        th.tau_seconds = Some(tau_seconds);
        Ok(th)
    }

    /// Inverse temperature in the time units of `omega_c`.
    pub fn beta(&self) -> f64 {
        self.beta_omega_c / self.omega_c
    }
}

/// `J(w) = eta w^s / wc^(s-1) exp(-w/wc)`.
pub fn spectral_density(omega: f64, r: &ReservoirSpec) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(SimError::Domain(format!("frequency must be >= 0, got {omega}")));
    }
    let x = omega / r.omega_c;
    Ok(r.eta * r.omega_c * x.powi(r.s as i32) * (-x).exp())
}

/// Bose occupation `1 / (exp(beta w) - 1)`.
pub fn thermal_occupation(omega: f64, beta: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(SimError::Domain(format!("frequency must be > 0, got {omega}")));
    }
    if !(beta > 0.0) {
        return Err(SimError::Domain(format!("inverse temperature must be > 0, got {beta}")));
    }
    Ok(1.0 / (beta * omega).exp_m1())
}

/// Zero-temperature kernel `int J(w) exp(-i w d) dw`.
pub fn kernel_vacuum(delta: f64, r: &ReservoirSpec) -> C64 {
    let z = C64::new(1.0, r.omega_c * delta);
    let inv = z.inv();
    let mut p = inv;
    for _ in 0..r.s {
        p *= inv;
    }
    p * (r.eta * r.omega_c * r.omega_c * factorial(r.s))
}

/// Thermal kernel `int J(w) n(w) exp(-i w d) dw`.
pub fn kernel_thermal(delta: f64, r: &ReservoirSpec, th: &ThermalParams) -> Result<C64> {
    let b = th.beta() * r.omega_c;
    let sum = thermal_image_sum(C64::new(1.0, r.omega_c * delta), b, r.s)?;
    Ok(sum * (r.eta * r.omega_c * r.omega_c * factorial(r.s)))
}

/// `sum_{k>=0} (a + b (k+1))^-(s+1)` for `Re a > 0`, `b > 0`.
///
/// Terms are added explicitly until the Euler-Maclaurin estimate of the
/// remainder (integral, half endpoint and first Bernoulli term) is certified
/// by the `f'''` remainder bound to the target relative accuracy.
fn thermal_image_sum(a: C64, b: f64, s: u32) -> Result<C64> {
    image_sum_capped(a, b, s, THERMAL_SUM_MAX_TERMS)
}

fn image_sum_capped(a: C64, b: f64, s: u32, max_terms: usize) -> Result<C64> {
    if b.is_infinite() {
        return Ok(C64::new(0.0, 0.0));
    }
    let p = s as i32 + 1;
    let sf = s as f64;
    // 2 zeta(3) / (2 pi)^3
    let remainder_const = 2.0 * 1.202_056_903_159_594_3 / (2.0 * PI).powi(3);
    let remainder_scale = remainder_const * (sf + 1.0) * (sf + 2.0) * b * b;

    let mut partial = C64::new(0.0, 0.0);
    let mut last_bound = f64::INFINITY;
    for k in 0..=max_terms {
        let z = a + b * (k as f64 + 1.0);
        let inv = z.inv();
        let f = inv.powi(p);
        let tail = inv.powi(p - 1) / (sf * b) + f * 0.5 + f * inv * ((sf + 1.0) * b / 12.0);
        let bound = remainder_scale / z.re.powi(p + 2);
        let total = partial + tail;
        last_bound = bound / total.norm();
        if bound <= THERMAL_SUM_TOLERANCE * total.norm() {
            return Ok(total);
        }
        partial += f;
    }
    Err(SimError::Convergence {
        terms: max_terms,
        achieved: last_bound,
    })
}

/// `(I1(d), I2(d))` for one reservoir.
pub fn bath_autocorrelations(delta: f64, r: &ReservoirSpec, th: &ThermalParams) -> Result<(C64, C64)> {
    let i1 = kernel_thermal(delta, r, th)?;
    let i2 = i1.conj() + kernel_vacuum(delta, r).conj();
    Ok((i1, i2))
}

/// Contribution `lambda_mu conj(lambda_nu) I1 + conj(lambda_mu) lambda_nu I2`.
pub(crate) fn correlation_contribution(lambda: &[C64; 3], i1: C64, i2: C64) -> Matrix3<C64> {
    Matrix3::from_fn(|mu, nu| lambda[mu] * lambda[nu].conj() * i1 + lambda[mu].conj() * lambda[nu] * i2)
}

pub(crate) fn check_distinct_classes(reservoirs: &[ReservoirSpec]) -> Result<()> {
    for (i, a) in reservoirs.iter().enumerate() {
        if reservoirs[..i].iter().any(|b| b.class == a.class) {
            return Err(SimError::Config(format!(
                "more than one reservoir of class {}",
                a.class
            )));
        }
    }
    Ok(())
}

/// Bath correlation matrix `C[mu][nu](d)` summed over independent reservoirs.
pub fn correlation_matrix(delta: f64, reservoirs: &[ReservoirSpec], th: &ThermalParams) -> Result<Matrix3<C64>> {
    check_distinct_classes(reservoirs)?;
    let mut c = Matrix3::zeros();
    for r in reservoirs {
        let (i1, i2) = bath_autocorrelations(delta, r, th)?;
        c += correlation_contribution(&r.lambda(), i1, i2);
    }
    Ok(c)
}

/// Uniform grid of lags `d_i = i * spacing`, `i = 0..points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelGrid {
    pub spacing: f64,
    pub points: usize,
}

impl KernelGrid {
    /// Smallest grid with the given spacing that covers `[0, span]`.
    pub fn covering(spacing: f64, span: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(SimError::validation("spacing", "must be positive"));
        }
        let points = (span / spacing - 1e-9).ceil().max(0.0) as usize + 1;
        Ok(KernelGrid { spacing, points })
    }

    /// Coarsest spacing that resolves both the kernel decay and the fastest
    /// rotation of the drive with 40 points per period.
    pub fn max_spacing(reservoirs: &[ReservoirSpec], mode: &ControlMode, tau: f64) -> f64 {
        let (n, m) = mode.windings();
        let drive = tau / (40.0 * f64::from(4 * n + 4 * m + 1));
        reservoirs
            .iter()
            .map(|r| 2.0 * PI / (40.0 * r.omega_c * r.s as f64))
            .fold(drive, f64::min)
    }

    pub fn check_resolution(&self, reservoirs: &[ReservoirSpec], mode: &ControlMode, tau: f64) -> Result<()> {
        let limit = Self::max_spacing(reservoirs, mode, tau);
        if self.spacing > limit * (1.0 + 1e-12) {
            return Err(SimError::validation(
                "integrator.steps",
                format!(
                    "kernel grid spacing {} exceeds the resolution limit {limit}",
                    self.spacing
                ),
            ));
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.spacing * (self.points.saturating_sub(1)) as f64
    }
}

/// Tabulated `I1` and `I2` of one reservoir.
#[derive(Debug, Clone)]
pub struct ReservoirKernels {
    pub spec: ReservoirSpec,
    pub i1: Vec<C64>,
    pub i2: Vec<C64>,
}

/// Write-once table of reservoir autocorrelations on a uniform lag grid.
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: KernelGrid,
    reservoirs: Vec<ReservoirKernels>,
}

/// Tabulates `I1` and `I2` for every reservoir on `grid`.
pub fn build_kernel_table(reservoirs: &[ReservoirSpec], th: &ThermalParams, grid: &KernelGrid) -> Result<KernelTable> {
    check_distinct_classes(reservoirs)?;
    let tables = reservoirs
        .iter()
        .map(|r| {
            let pairs: Vec<(C64, C64)> = (0..grid.points)
                .into_par_iter()
                .map(|i| bath_autocorrelations(i as f64 * grid.spacing, r, th))
                .collect::<Result<_>>()?;
            let (i1, i2) = pairs.into_iter().unzip();
            Ok(ReservoirKernels { spec: *r, i1, i2 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelTable {
        grid: *grid,
        reservoirs: tables,
    })
}

impl KernelTable {
    pub fn grid(&self) -> &KernelGrid {
        &self.grid
    }

    pub fn reservoirs(&self) -> &[ReservoirKernels] {
        &self.reservoirs
    }

    /// Correlation matrix at lag node `i`.
    pub fn correlation_at_node(&self, i: usize) -> Matrix3<C64> {
        let mut c = Matrix3::zeros();
        for r in &self.reservoirs {
            c += correlation_contribution(&r.spec.lambda(), r.i1[i], r.i2[i]);
        }
        c
    }

    /// Four-point Lagrange interpolation of `(I1, I2)` of reservoir `index`.
    pub fn interpolate(&self, index: usize, delta: f64) -> Result<(C64, C64)> {
        let r = self
            .reservoirs
            .get(index)
            .ok_or_else(|| SimError::Usage(format!("no reservoir at index {index}")))?;
        let n = self.grid.points;
        let u = delta / self.grid.spacing;
        if !(u >= -1e-9 && u <= (n - 1) as f64 + 1e-9) {
            return Err(SimError::Usage(format!(
                "lag {delta} outside tabulated range [0, {}]",
                self.grid.span()
            )));
        }
        if n < 4 {
            return Err(SimError::Usage("kernel table needs at least 4 nodes".into()));
        }
        let base = (u.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let x = u - base as f64;
        let mut w = [1.0f64; 4];
        for (j, wj) in w.iter_mut().enumerate() {
            for k in 0..4 {
                if k != j {
                    *wj *= (x - k as f64) / (j as f64 - k as f64);
                }
            }
        }
        let mut i1 = C64::new(0.0, 0.0);
        let mut i2 = C64::new(0.0, 0.0);
        for j in 0..4 {
            i1 += r.i1[base + j] * w[j];
            i2 += r.i2[base + j] * w[j];
        }
        Ok((i1, i2))
    }

    /// Interpolated correlation matrix at an arbitrary lag in the table range.
    pub fn correlation(&self, delta: f64) -> Result<Matrix3<C64>> {
        let mut c = Matrix3::zeros();
        for (index, r) in self.reservoirs.iter().enumerate() {
            let (i1, i2) = self.interpolate(index, delta)?;
            c += correlation_contribution(&r.spec.lambda(), i1, i2);
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WC: f64 = 2.0 * PI;

    fn dephasing(s: u32) -> ReservoirSpec {
        ReservoirSpec::new(ErrorClass::Dephasing, 1.0 / 16.0, s, WC).unwrap()
    }

    fn reference_thermal() -> ThermalParams {
        ThermalParams::from_physical(0.25, 1e-10, WC).unwrap()
    }

    #[test]
    fn derived_beta_omega_c() {
        let th = reference_thermal();
        assert!((th.beta_omega_c - 1.919_697_228).abs() < 1e-8, "{}", th.beta_omega_c);
    }

    #[test]
    fn spectral_density_examples() {
        let r = dephasing(1);
        assert_eq!(spectral_density(0.0, &r).unwrap(), 0.0);
        let v = spectral_density(WC, &r).unwrap();
        assert!((v - WC / 16.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(spectral_density(-1.0, &r).is_err());
    }

    #[test]
    fn spectral_density_peaks_at_s_omega_c() {
        for s in 1..=4 {
            let r = dephasing(s);
            let (argmax, _) = (1..40_000)
                .map(|i| i as f64 * 1e-3 * WC)
                .map(|w| (w, spectral_density(w, &r).unwrap()))
                .fold((0.0, f64::MIN), |acc, p| if p.1 > acc.1 { p } else { acc });
            assert!((argmax - s as f64 * WC).abs() <= 1e-3 * WC);
        }
    }

    #[test]
    fn occupation_examples() {
        assert!((thermal_occupation(2f64.ln(), 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(thermal_occupation(50.0, 1.0).unwrap() < 2e-22);
        let v = thermal_occupation(1.0, 1.0).unwrap();
        assert!((v - 1.0 / (1f64.exp() - 1.0)).abs() < 1e-15);
        assert!((v - 0.581_976_706_869).abs() < 1e-11);
        assert!(thermal_occupation(0.0, 1.0).is_err());
    }

    #[test]
    fn vacuum_kernel_at_zero_lag() {
        let v = kernel_vacuum(0.0, &dephasing(1));
        assert!((v - C64::from(WC * WC / 16.0)).norm() < 1e-13);
        let v = kernel_vacuum(0.0, &dephasing(3));
        assert!((v - C64::from(6.0 * WC * WC / 16.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_temperature_thermal_kernel_vanishes() {
        let th = ThermalParams::new(1e9, WC).unwrap();
        let r = dephasing(1);
        for d in [0.0, 0.3, 1.0] {
            let v = kernel_thermal(d, &r, &th).unwrap();
            assert!(v.norm() < 1e-12 * r.eta * WC * WC);
        }
        let th = ThermalParams::new(f64::INFINITY, WC).unwrap();
        assert_eq!(kernel_thermal(0.2, &r, &th).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn thermal_kernel_is_real_positive_at_zero_lag() {
        let v = kernel_thermal(0.0, &dephasing(3), &ThermalParams::new(1.9197, WC).unwrap()).unwrap();
        assert!(v.re > 0.0 && v.im.abs() < 1e-15 * v.re);
    }

    #[test]
    fn image_sum_matches_brute_force_for_fast_decay() {
        // s = 3 terms fall like k^-4; 10^5 explicit terms leave a tail < 1e-15
        let (a, b) = (C64::new(1.0, 0.7), 1.9);
        let brute: C64 = (0..100_000).map(|k| (a + b * (k as f64 + 1.0)).powi(-4)).sum();
        let fast = thermal_image_sum(a, b, 3).unwrap();
        assert!((brute - fast).norm() < THERMAL_SUM_TOLERANCE * brute.norm());
    }

    #[test]
    fn image_sum_reports_non_convergence() {
        let err = image_sum_capped(C64::new(1.0, 0.0), 1.92, 1, 3).unwrap_err();
        match err {
            SimError::Convergence { terms, achieved } => {
                assert_eq!(terms, 3);
                assert!(achieved > THERMAL_SUM_TOLERANCE);
            }
            other => panic!("{other}"),
        }
        // the certified remainder makes even very hot baths cheap
        assert!(thermal_image_sum(C64::new(1.0, 0.0), 1e-6, 1).is_ok());
    }

    #[test]
    fn autocorrelations_at_zero_lag() {
        let th = reference_thermal();
        for s in [1, 3] {
            let r = dephasing(s);
            let (i1, i2) = bath_autocorrelations(0.0, &r, &th).unwrap();
            let diff = i2 - i1;
            assert!((diff - kernel_vacuum(0.0, &r)).norm() < 1e-12 * diff.norm());
            assert!(i1.im.abs() < 1e-14 && i2.im.abs() < 1e-14);
            assert!(i2.re > i1.re && i1.re > 0.0);
        }
        let cold = ThermalParams::new(f64::INFINITY, WC).unwrap();
        let (i1, i2) = bath_autocorrelations(0.4, &dephasing(1), &cold).unwrap();
        assert_eq!(i1, C64::new(0.0, 0.0));
        assert_eq!(i2, kernel_vacuum(0.4, &dephasing(1)).conj());
    }

    #[test]
    fn correlation_matrix_structure() {
        let th = reference_thermal();
        let d = 0.23;
        let deph = dephasing(1);
        let (i1, i2) = bath_autocorrelations(d, &deph, &th).unwrap();
        let c = correlation_matrix(d, &[deph], &th).unwrap();
        for mu in 0..3 {
            for nu in 0..3 {
                let expected = if (mu, nu) == (2, 2) { i1 + i2 } else { C64::new(0.0, 0.0) };
                assert!((c[(mu, nu)] - expected).norm() < 1e-15);
            }
        }

        let flip = ReservoirSpec::new(ErrorClass::BitFlip, 0.2, 3, WC).unwrap();
        let (i1, i2) = bath_autocorrelations(d, &flip, &th).unwrap();
        let c = correlation_matrix(d, &[flip], &th).unwrap();
        assert!((c[(0, 0)] - (i1 + i2)).norm() < 1e-15);
        assert_eq!(c.iter().filter(|z| z.norm() > 0.0).count(), 1);

        let diss = ReservoirSpec::new(ErrorClass::Dissipation, 0.2, 1, WC).unwrap();
        let (i1, i2) = bath_autocorrelations(d, &diss, &th).unwrap();
        let c = correlation_matrix(d, &[diss], &th).unwrap();
        let quarter = (i1 + i2) / 4.0;
        let off = C64::new(0.0, 0.25) * (i2 - i1);
        assert!((c[(0, 0)] - quarter).norm() < 1e-15);
        assert!((c[(1, 1)] - quarter).norm() < 1e-15);
        assert!((c[(0, 1)] - off).norm() < 1e-15);
        assert!((c[(1, 0)] + off).norm() < 1e-15);
        assert!(c[(2, 2)].norm() == 0.0 && c[(0, 2)].norm() == 0.0);
    }

    #[test]
    fn duplicate_classes_rejected() {
        let th = reference_thermal();
        let r = dephasing(1);
        assert!(matches!(correlation_matrix(0.0, &[r, r], &th), Err(SimError::Config(_))));
    }

    #[test]
    fn table_nodes_equal_pointwise_values() {
        let th = reference_thermal();
        let r = [dephasing(3)];
        let grid = KernelGrid::covering(1.0 / 400.0, 1.0).unwrap();
        let table = build_kernel_table(&r, &th, &grid).unwrap();
        for i in [0, 1, 17, 400] {
            let (i1, i2) = bath_autocorrelations(i as f64 * grid.spacing, &r[0], &th).unwrap();
            assert_eq!(table.reservoirs()[0].i1[i], i1);
            assert_eq!(table.reservoirs()[0].i2[i], i2);
            assert_eq!(table.interpolate(0, i as f64 * grid.spacing).unwrap(), (i1, i2));
        }
        assert!(table.interpolate(0, 1.5).is_err());
    }

    #[test]
    fn empty_table_gives_zero_correlation() {
        let grid = KernelGrid::covering(0.01, 1.0).unwrap();
        let table = build_kernel_table(&[], &reference_thermal(), &grid).unwrap();
        assert_eq!(table.correlation(0.37).unwrap(), Matrix3::zeros());
    }

    #[test]
    fn resolution_limit() {
        let r = [dephasing(3)];
        let mode = ControlMode::FullProtect { n: 25, m: 10 };
        let limit = KernelGrid::max_spacing(&r, &mode, 1.0);
        assert!((limit - 1.0 / 5640.0).abs() < 1e-15);
        assert!(KernelGrid::covering(1.0 / 5000.0, 1.0).unwrap().check_resolution(&r, &mode, 1.0).is_err());
        assert!(KernelGrid::covering(1.0 / 16000.0, 1.0).unwrap().check_resolution(&r, &mode, 1.0).is_ok());
        let bare = KernelGrid::max_spacing(&r, &ControlMode::Bare, 1.0);
        assert!((bare - 1.0 / 120.0).abs() < 1e-15);
    }
}

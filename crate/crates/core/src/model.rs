//! Physical parameters, derived rates and the operators shared by every engine.
//!
//! Units: ħ = 1. The three-state basis is ordered as
//! `|0⟩` (wells empty, particle in the reservoir), `|1⟩` (left well) and
//! `|2⟩` (right well).

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Matrix3c = Matrix3<C64>;
pub type Matrix2c = Matrix2<C64>;

pub const EMPTY: usize = 0;
pub const LEFT: usize = 1;
pub const RIGHT: usize = 2;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-10;

/// Relative parity of the two well states, the sign of Ω₁/Ω₂.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s < 0.0 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

/// Well levels, real well-reservoir couplings and the reservoir density of states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellParams {
    pub e1: f64,
    pub e2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub rho_dos: f64,
}

impl WellParams {
    pub fn new(e1: f64, e2: f64, omega1: f64, omega2: f64, rho_dos: f64) -> Result<Self> {
        let p = WellParams {
            e1,
            e2,
            omega1,
            omega2,
            rho_dos,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from target widths with ρ = 1/(2π), so that Γᵢ = Ωᵢ².
    ///
    /// The levels are placed symmetrically, E₁ = ε/2 and E₂ = −ε/2, and the
    /// sign of Ω₂ carries the parity.
    pub fn from_rates(gamma1: f64, gamma2: f64, eps: f64, parity: Parity) -> Result<Self> {
        if !(gamma1.is_finite() && gamma2.is_finite() && eps.is_finite()) {
            return Err(Error::NonFinite("rates"));
        }
        if gamma1 < 0.0 || gamma2 < 0.0 {
            return Err(Error::InvalidParams(format!(
                "level widths must be non-negative (gamma1 = {gamma1}, gamma2 = {gamma2})"
            )));
        }
        Self::new(
            0.5 * eps,
            -0.5 * eps,
            gamma1.sqrt(),
            parity.sign() * gamma2.sqrt(),
            1.0 / (2.0 * PI),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.e1, self.e2, self.omega1, self.omega2, self.rho_dos];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("all fields must be finite".into()));
        }
        if self.rho_dos <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "density of states must be positive, got {}",
                self.rho_dos
            )));
        }
        if self.omega1 == 0.0 && self.omega2 == 0.0 {
            return Err(Error::InvalidParams(
                "omega1 and omega2 are both zero".into(),
            ));
        }
        Ok(())
    }

    /// Level displacement ε = E₁ − E₂.
    pub fn eps(&self) -> f64 {
        self.e1 - self.e2
    }

    pub fn gamma1(&self) -> f64 {
        2.0 * PI * self.rho_dos * self.omega1 * self.omega1
    }

    pub fn gamma2(&self) -> f64 {
        2.0 * PI * self.rho_dos * self.omega2 * self.omega2
    }

    /// 2πρΩ₁Ω₂, the cross coefficient of the master equations (times two).
    pub fn cross_rate(&self) -> f64 {
        2.0 * PI * self.rho_dos * self.omega1 * self.omega2
    }

    pub fn parity(&self) -> Parity {
        if self.omega2 == 0.0 || self.omega1 == 0.0 {
            Parity::Even
        } else {
            Parity::from_sign(self.omega1 * self.omega2)
        }
    }

    /// Same parameters with every coupling multiplied by `s`.
    pub fn scaled_couplings(&self, s: f64) -> Self {
        WellParams {
            omega1: self.omega1 * s,
            omega2: self.omega2 * s,
            ..*self
        }
    }
}

/// Rates derived from [`WellParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pub gamma1: f64,
    pub gamma2: f64,
    pub eps: f64,
    /// Ω₂/Ω₁; infinite when Ω₁ = 0.
    pub chi: f64,
    pub eta: Parity,
    /// √(Γ² − ε²), principal branch; present only when Γ₁ = Γ₂.
    pub omega_rabi: Option<C64>,
}

impl RateSet {
    /// η·√(Γ₁Γ₂).
    pub fn cross(&self) -> f64 {
        self.eta.sign() * (self.gamma1 * self.gamma2).sqrt()
    }

    pub fn is_symmetric(&self) -> bool {
        symmetric(self.gamma1, self.gamma2)
    }
}

fn symmetric(g1: f64, g2: f64) -> bool {
    (g1 - g2).abs() <= 1e-12 * g1.max(g2)
}

pub fn derive_rates(p: &WellParams) -> Result<RateSet> {
    p.validate()?;
    let gamma1 = p.gamma1();
    let gamma2 = p.gamma2();
    let eps = p.eps();
    let chi = if p.omega1 == 0.0 {
        f64::INFINITY.copysign(p.omega2)
    } else {
        p.omega2 / p.omega1
    };
    let omega_rabi = symmetric(gamma1, gamma2)
        .then(|| C64::new(gamma1 * gamma1 - eps * eps, 0.0).sqrt());
    Ok(RateSet {
        gamma1,
        gamma2,
        eps,
        chi,
        eta: p.parity(),
        omega_rabi,
    })
}

/// Collapse operator `a` together with the rate it is applied with.
///
/// The dissipator is `rate · D[a]`. Normally `a = a₁ + χa₂` with rate Γ₁; when
/// Ω₁ = 0 the reversed form `a = a₂ + (1/χ)a₁` with rate Γ₂ is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpOperator {
    pub matrix: Matrix3c,
    pub rate: f64,
    pub reversed: bool,
}

impl JumpOperator {
    /// `√rate · a`, the Lindblad operator in the usual normalization.
    pub fn scaled(&self) -> Matrix3c {
        self.matrix * C64::from(self.rate.sqrt())
    }

    /// `rate · a†a`.
    pub fn rate_number(&self) -> Matrix3c {
        self.matrix.adjoint() * self.matrix * C64::from(self.rate)
    }
}

pub fn build_jump_operator(p: &WellParams) -> Result<JumpOperator> {
    if p.omega1 == 0.0 && p.omega2 == 0.0 {
        return Err(Error::DegenerateCoupling);
    }
    p.validate()?;
    let mut a = Matrix3c::zeros();
    if p.omega1 != 0.0 {
        a[(EMPTY, LEFT)] = C64::from(1.0);
        a[(EMPTY, RIGHT)] = C64::from(p.omega2 / p.omega1);
        Ok(JumpOperator {
            matrix: a,
            rate: p.gamma1(),
            reversed: false,
        })
    } else {
        a[(EMPTY, RIGHT)] = C64::from(1.0);
        Ok(JumpOperator {
            matrix: a,
            rate: p.gamma2(),
            reversed: true,
        })
    }
}

/// H_S = E₁|1⟩⟨1| + E₂|2⟩⟨2|.
pub fn system_hamiltonian(p: &WellParams) -> Matrix3c {
    Matrix3c::from_diagonal(&Vector3::new(
        C64::from(0.0),
        C64::from(p.e1),
        C64::from(p.e2),
    ))
}

/// Normalized dark-state amplitudes (Ω₂, −Ω₁)/√(Ω₁² + Ω₂²) on (|1⟩, |2⟩).
pub fn dark_amplitudes(p: &WellParams) -> [f64; 2] {
    let n = p.omega1.hypot(p.omega2);
    [p.omega2 / n, -p.omega1 / n]
}

/// Normalized bright-state amplitudes (Ω₁, Ω₂)/√(Ω₁² + Ω₂²).
pub fn bright_amplitudes(p: &WellParams) -> [f64; 2] {
    let n = p.omega1.hypot(p.omega2);
    [p.omega1 / n, p.omega2 / n]
}

/// 3×3 density matrix over (|0⟩, |1⟩, |2⟩).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedDensityMatrix(Matrix3c);

impl ReducedDensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(m: Matrix3c) -> Result<Self> {
        check_density(&m, HERMITIAN_TOL, TRACE_TOL, POSITIVITY_TOL)?;
        Ok(ReducedDensityMatrix(m))
    }

    pub fn basis(k: usize) -> Self {
        let mut m = Matrix3c::zeros();
        m[(k, k)] = C64::from(1.0);
        ReducedDensityMatrix(m)
    }

    pub fn empty() -> Self {
        Self::basis(EMPTY)
    }

    pub fn left() -> Self {
        Self::basis(LEFT)
    }

    pub fn right() -> Self {
        Self::basis(RIGHT)
    }

    /// |ψ⟩⟨ψ| for a state vector, normalized first.
    pub fn pure(psi: &Vector3<C64>) -> Result<Self> {
        let n = psi.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidState("zero or non-finite state vector".into()));
        }
        let v = psi.unscale(n);
        Ok(ReducedDensityMatrix(v * v.adjoint()))
    }

    /// The bound state |1′⟩ embedded in the three-state space.
    pub fn dark(p: &WellParams) -> Self {
        let [d1, d2] = dark_amplitudes(p);
        let v = Vector3::new(C64::from(0.0), C64::from(d1), C64::from(d2));
        ReducedDensityMatrix(v * v.adjoint())
    }

    pub fn matrix(&self) -> &Matrix3c {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// P₀ = σ₁₁ + σ₂₂.
    pub fn wells_population(&self) -> f64 {
        self.0[(LEFT, LEFT)].re + self.0[(RIGHT, RIGHT)].re
    }

    pub fn wells_block(&self) -> Matrix2c {
        self.0.fixed_view::<2, 2>(1, 1).into_owned()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue3(&self.0)
    }
}

pub(crate) fn min_hermitian_eigenvalue3(m: &Matrix3c) -> f64 {
    let h = (m + m.adjoint()) * C64::from(0.5);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

pub(crate) fn check_density<R, C, S>(
    m: &nalgebra::Matrix<C64, R, C, S>,
    herm_tol: f64,
    trace_tol: f64,
    pos_tol: f64,
) -> Result<()>
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::Storage<C64, R, C>,
{
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidState("density matrix must be square".into()));
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidState("non-finite entry".into()));
    }
    for i in 0..n {
        for j in 0..n {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > herm_tol {
                return Err(Error::InvalidState(format!(
                    "not Hermitian at ({i}, {j})"
                )));
            }
        }
    }
    let tr: C64 = (0..n).map(|i| m[(i, i)]).sum();
    if (tr.re - 1.0).abs() > trace_tol {
        return Err(Error::InvalidState(format!("trace {} != 1", tr.re)));
    }
    let h = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let min = h
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min < -pos_tol {
        return Err(Error::InvalidState(format!(
            "negative eigenvalue {min:e}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_normalization_gives_gamma_equal_omega_squared() {
        let p = WellParams::new(0.0, 0.0, 1.0, 0.5, 1.0 / (2.0 * PI)).unwrap();
        let r = derive_rates(&p).unwrap();
        assert_relative_eq!(r.gamma1, 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.gamma2, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn width_formula() {
        let p = WellParams::new(0.0, 0.0, 0.3, 0.3, 0.5).unwrap();
        let r = derive_rates(&p).unwrap();
        assert_relative_eq!(r.gamma1, 0.282_743_338_823_081_4, epsilon = 1e-15);
    }

    #[test]
    fn odd_parity_sign_bookkeeping() {
        let p = WellParams::new(0.0, 0.0, 1.0, -1.0, 1.0).unwrap();
        let r = derive_rates(&p).unwrap();
        assert_eq!(r.chi, -1.0);
        assert_eq!(r.eta, Parity::Odd);
        assert_eq!(r.gamma1, r.gamma2);
        assert!(r.is_symmetric());
    }

    #[test]
    fn rabi_frequency_branches() {
        let p = WellParams::from_rates(1.0, 1.0, 0.5, Parity::Even).unwrap();
        let w = derive_rates(&p).unwrap().omega_rabi.unwrap();
        assert_relative_eq!(w.re, 0.75f64.sqrt(), epsilon = 1e-12);
        assert_eq!(w.im, 0.0);

        let p = WellParams::from_rates(1.0, 1.0, 2.0, Parity::Even).unwrap();
        let w = derive_rates(&p).unwrap().omega_rabi.unwrap();
        assert!(w.re.abs() < 1e-15);
        assert_relative_eq!(w.im, 3f64.sqrt(), epsilon = 1e-12);

        let p = WellParams::from_rates(1.0, 4.0, 0.5, Parity::Even).unwrap();
        assert!(derive_rates(&p).unwrap().omega_rabi.is_none());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(WellParams::new(0.0, 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(WellParams::new(0.0, 0.0, 1.0, 1.0, -1.0).is_err());
        assert!(WellParams::new(0.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(WellParams::new(f64::NAN, 0.0, 1.0, 1.0, 1.0).is_err());
        let bad = WellParams {
            e1: 0.0,
            e2: 0.0,
            omega1: 0.0,
            omega2: 0.0,
            rho_dos: 1.0,
        };
        assert_eq!(build_jump_operator(&bad), Err(Error::DegenerateCoupling));
    }

    #[test]
    fn jump_operator_entries() {
        let p = WellParams::from_rates(1.0, 1.0, 0.0, Parity::Even).unwrap();
        let a = build_jump_operator(&p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == 0 && j > 0 { 1.0 } else { 0.0 };
                assert_relative_eq!(a.matrix[(i, j)].re, expected, epsilon = 1e-15);
                assert_eq!(a.matrix[(i, j)].im, 0.0);
            }
        }

        let p = WellParams::from_rates(1.0, 0.0, 0.0, Parity::Even).unwrap();
        let a = build_jump_operator(&p).unwrap();
        assert_eq!(a.matrix[(EMPTY, LEFT)], C64::from(1.0));
        assert_eq!(a.matrix[(EMPTY, RIGHT)], C64::from(0.0));

        let p = WellParams::from_rates(1.0, 1.0, 0.0, Parity::Odd).unwrap();
        let a = build_jump_operator(&p).unwrap();
        assert_eq!(a.matrix[(EMPTY, RIGHT)], C64::from(-1.0));
    }

    #[test]
    fn reversed_parametrization_when_left_decoupled() {
        let p = WellParams::from_rates(0.0, 2.0, 0.0, Parity::Even).unwrap();
        let a = build_jump_operator(&p).unwrap();
        assert!(a.reversed);
        assert_relative_eq!(a.rate, 2.0, epsilon = 1e-14);
        assert_eq!(a.matrix[(EMPTY, RIGHT)], C64::from(1.0));
        assert_eq!(a.matrix[(EMPTY, LEFT)], C64::from(0.0));
        let r = derive_rates(&p).unwrap();
        assert!(r.chi.is_infinite());
    }

    #[test]
    fn system_hamiltonian_is_diagonal_and_dark_to_empty() {
        let p = WellParams::new(0.25, -0.25, 1.0, 1.0, 1.0).unwrap();
        let h = system_hamiltonian(&p);
        assert_eq!(h[(1, 1)].re, 0.25);
        assert_eq!(h[(2, 2)].re, -0.25);
        assert_eq!(p.eps(), 0.5);
        let p0 = ReducedDensityMatrix::empty();
        let comm = h * p0.matrix() - p0.matrix() * h;
        assert_eq!(comm.norm(), 0.0);

        let p = WellParams::new(0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(system_hamiltonian(&p).norm(), 0.0);
    }

    #[test]
    fn density_validation() {
        assert!(ReducedDensityMatrix::new(*ReducedDensityMatrix::left().matrix()).is_ok());
        let mut m = Matrix3c::zeros();
        m[(1, 1)] = C64::from(0.5);
        assert!(ReducedDensityMatrix::new(m).is_err());
        m[(2, 2)] = C64::from(0.5);
        m[(1, 2)] = C64::new(0.0, 0.1);
        assert!(ReducedDensityMatrix::new(m).is_err());
        m[(2, 1)] = C64::new(0.0, -0.1);
        assert!(ReducedDensityMatrix::new(m).is_ok());
        m[(1, 1)] = C64::from(1.5);
        m[(2, 2)] = C64::from(-0.5);
        assert!(ReducedDensityMatrix::new(m).is_err());
    }

    #[test]
    fn dark_state_is_annihilated_by_jump_operator() {
        let p = WellParams::new(0.3, 0.3, 0.7, -1.9, 0.4).unwrap();
        let a = build_jump_operator(&p).unwrap();
        let d = ReducedDensityMatrix::dark(&p);
        let out = a.matrix * d.matrix() * a.matrix.adjoint();
        assert!(out.norm() < 1e-15);
        assert_relative_eq!(d.trace(), 1.0, epsilon = 1e-15);
    }
}

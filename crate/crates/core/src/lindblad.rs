//! Unconditional evolution of the three-state reduced density matrix.
//!
//! Two routes are provided: the 9×9 Liouvillian exponentiated exactly on a
//! time grid, and the explicit master equations integrated adaptively. They
//! share no code beyond the model types.

use nalgebra::SMatrix;

use crate::analytic::OccupationPair;
use crate::error::{Error, Result};
use crate::model::{
    build_jump_operator, derive_rates, system_hamiltonian, JumpOperator, Matrix3c,
    ReducedDensityMatrix, WellParams, C64, EMPTY, LEFT, RIGHT,
};
use crate::ode::{self, Tolerance};
use crate::trajectory::ConditionalState;

pub type Superoperator = SMatrix<C64, 9, 9>;

/// Survival below this makes the conditional state undefined.
pub const SURVIVAL_FLOOR: f64 = 1e-12;

#[inline]
fn vec_index(i: usize, j: usize) -> usize {
    // column-major, matching nalgebra storage
    i + 3 * j
}

/// The generator σ ↦ −i[H_S, σ] + rate·(aσa† − ½{a†a, σ}).
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    hamiltonian: Matrix3c,
    jump: JumpOperator,
    matrix: Superoperator,
}

impl Liouvillian {
    /// Direct evaluation of the generator on a matrix.
    pub fn apply(&self, sigma: &Matrix3c) -> Matrix3c {
        let i = C64::new(0.0, 1.0);
        let a = &self.jump.matrix;
        let ad = a.adjoint();
        let ada = ad * a;
        let rate = C64::from(self.jump.rate);
        let comm = self.hamiltonian * sigma - sigma * self.hamiltonian;
        comm * (-i)
            + (a * sigma * ad - (ada * sigma + sigma * ada) * C64::from(0.5)) * rate
    }

    /// Matrix of the generator acting on column-stacked density matrices.
    pub fn superoperator(&self) -> &Superoperator {
        &self.matrix
    }

    pub fn jump(&self) -> &JumpOperator {
        &self.jump
    }

    /// exp(𝓛t) on vectorized matrices.
    pub fn propagator(&self, t: f64) -> Superoperator {
        (self.matrix * C64::from(t)).exp()
    }

    pub fn propagate(&self, sigma: &Matrix3c, t: f64) -> Matrix3c {
        apply_super(&self.propagator(t), sigma)
    }
}

fn apply_super(s: &Superoperator, sigma: &Matrix3c) -> Matrix3c {
    let v = nalgebra::SVector::<C64, 9>::from_column_slice(sigma.as_slice());
    let out = s * v;
    Matrix3c::from_column_slice(out.as_slice())
}

pub fn build_liouvillian(p: &WellParams) -> Result<Liouvillian> {
    let jump = build_jump_operator(p)?;
    let hamiltonian = system_hamiltonian(p);
    let mut l = Liouvillian {
        hamiltonian,
        jump,
        matrix: Superoperator::zeros(),
    };
    let mut matrix = Superoperator::zeros();
    for j in 0..3 {
        for i in 0..3 {
            let mut e = Matrix3c::zeros();
            e[(i, j)] = C64::from(1.0);
            let col = l.apply(&e);
            for jj in 0..3 {
                for ii in 0..3 {
                    matrix[(vec_index(ii, jj), vec_index(i, j))] = col[(ii, jj)];
                }
            }
        }
    }
    l.matrix = matrix;
    Ok(l)
}

/// dσ/dt written out term by term from the two-well master equations.
///
/// The wells block follows
/// σ̇₁₁ = −Γ₁σ₁₁ − c(σ₁₂+σ₂₁), σ̇₂₂ = −Γ₂σ₂₂ − c(σ₁₂+σ₂₁),
/// σ̇₁₂ = −iεσ₁₂ − c(σ₁₁+σ₂₂) − ½(Γ₁+Γ₂)σ₁₂ with c = η√(Γ₁Γ₂)/2, and
/// σ̇₀₀ = −(σ̇₁₁+σ̇₂₂). The coherences between the empty state and the wells,
/// absent for any state reached from a wells-only initial condition, decay
/// with the same amplitude rates and rotate with the absolute level energies,
/// which is why the full parameter set is taken rather than only the rates.
pub fn master_rhs_explicit(sigma: &ReducedDensityMatrix, p: &WellParams) -> Result<Matrix3c> {
    let r = derive_rates(p)?;
    Ok(master_rhs_raw(sigma.matrix(), p.e1, p.e2, r.gamma1, r.gamma2, r.cross()))
}

fn master_rhs_raw(s: &Matrix3c, e1: f64, e2: f64, g1: f64, g2: f64, cross: f64) -> Matrix3c {
    let i = C64::new(0.0, 1.0);
    let c = 0.5 * cross;
    let s11 = s[(LEFT, LEFT)];
    let s22 = s[(RIGHT, RIGHT)];
    let s12 = s[(LEFT, RIGHT)];
    let s21 = s[(RIGHT, LEFT)];
    let s01 = s[(EMPTY, LEFT)];
    let s02 = s[(EMPTY, RIGHT)];

    let d11 = -g1 * s11 - c * (s12 + s21);
    let d22 = -g2 * s22 - c * (s12 + s21);
    let d12 = i * (e2 - e1) * s12 - c * (s11 + s22) - 0.5 * (g1 + g2) * s12;
    let d01 = i * e1 * s01 - 0.5 * g1 * s01 - c * s02;
    let d02 = i * e2 * s02 - 0.5 * g2 * s02 - c * s01;

    let mut d = Matrix3c::zeros();
    d[(LEFT, LEFT)] = d11;
    d[(RIGHT, RIGHT)] = d22;
    d[(LEFT, RIGHT)] = d12;
    d[(RIGHT, LEFT)] = d12.conj();
    d[(EMPTY, EMPTY)] = -(d11 + d22);
    d[(EMPTY, LEFT)] = d01;
    d[(LEFT, EMPTY)] = d01.conj();
    d[(EMPTY, RIGHT)] = d02;
    d[(RIGHT, EMPTY)] = d02.conj();
    d
}

/// Density matrices on a time grid together with the parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub states: Vec<ReducedDensityMatrix>,
    pub meta: WellParams,
}

impl TimeSeries {
    pub fn occupations(&self) -> Vec<OccupationPair> {
        self.states
            .iter()
            .map(|s| OccupationPair::new(s.get(LEFT, LEFT).re, s.get(RIGHT, RIGHT).re))
            .collect()
    }
}

/// Conditional (wells-normalized) states on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSeries {
    pub times: Vec<f64>,
    pub states: Vec<ConditionalState>,
    /// P₀(t) used for the normalization.
    pub survival: Vec<f64>,
}

pub(crate) fn validate_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidGrid("empty time grid".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::InvalidGrid(format!("grid must start at 0, got {}", times[0])));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("non-finite time".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Uniform grid `0, dt, 2dt, …` up to and including `t_max` (within rounding).
pub fn uniform_grid(t_max: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps)
        .map(|k| t_max * k as f64 / n_steps as f64)
        .collect()
}

fn finish_state(m: Matrix3c, t: f64) -> Result<ReducedDensityMatrix> {
    let h = (m + m.adjoint()) * C64::from(0.5);
    ReducedDensityMatrix::new(h).map_err(|e| Error::StepFailure {
        t,
        reason: e.to_string(),
    })
}

/// Evolves σ₀ with the exact propagator exp(𝓛t) at every grid time.
pub fn evolve_unconditional(
    p: &WellParams,
    sigma0: &ReducedDensityMatrix,
    times: &[f64],
) -> Result<TimeSeries> {
    validate_grid(times)?;
    let l = build_liouvillian(p)?;
    let states = times
        .iter()
        .map(|&t| finish_state(l.propagate(sigma0.matrix(), t), t))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries {
        times: times.to_vec(),
        states,
        meta: *p,
    })
}

/// Same evolution through the explicit master equations and an adaptive
/// Dormand–Prince integrator.
pub fn evolve_unconditional_adaptive(
    p: &WellParams,
    sigma0: &ReducedDensityMatrix,
    times: &[f64],
    tol: Tolerance,
) -> Result<TimeSeries> {
    validate_grid(times)?;
    let r = derive_rates(p)?;
    let (e1, e2, g1, g2, cross) = (p.e1, p.e2, r.gamma1, r.gamma2, r.cross());
    let y0: Vec<f64> = sigma0
        .matrix()
        .iter()
        .flat_map(|z| [z.re, z.im])
        .collect();
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let s = Matrix3c::from_iterator(y.chunks_exact(2).map(|c| C64::new(c[0], c[1])));
        let d = master_rhs_raw(&s, e1, e2, g1, g2, cross);
        for (k, z) in d.iter().enumerate() {
            dy[2 * k] = z.re;
            dy[2 * k + 1] = z.im;
        }
    };
    let raw = ode::integrate(rhs, &y0, times, tol)?;
    let states = raw
        .into_iter()
        .zip(times)
        .map(|(y, &t)| {
            let m = Matrix3c::from_iterator(y.chunks_exact(2).map(|c| C64::new(c[0], c[1])));
            finish_state(m, t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries {
        times: times.to_vec(),
        states,
        meta: *p,
    })
}

/// Divides the wells block by its trace P₀(t) at every time.
pub fn conditional_from_unconditional(series: &TimeSeries) -> Result<ConditionalSeries> {
    let mut states = Vec::with_capacity(series.states.len());
    let mut survival = Vec::with_capacity(series.states.len());
    for (s, &t) in series.states.iter().zip(&series.times) {
        let p0 = s.wells_population();
        if p0.is_nan() || p0 <= SURVIVAL_FLOOR {
            return Err(Error::VanishingSurvival { t, p0 });
        }
        let block = s.wells_block() / C64::from(p0);
        states.push(ConditionalState::from_unchecked(
            (block + block.adjoint()) * C64::from(0.5),
        ));
        survival.push(p0);
    }
    Ok(ConditionalSeries {
        times: series.times.clone(),
        states,
        survival,
    })
}

/// Long-time conditional occupations from the unconditional evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyConditional {
    pub occupations: OccupationPair,
    /// t_ss = 60 / max(Γ₁, Γ₂).
    pub t_ss: f64,
    /// Largest occupation change between 0.9·t_ss and t_ss.
    pub change: f64,
    /// P₀(t_ss).
    pub survival: f64,
}

pub const STEADY_HORIZON: f64 = 60.0;
pub const STEADY_CHANGE_TOL: f64 = 1e-8;

/// Steady conditional occupations for a particle starting in the left well,
/// evaluated at t_ss = 60/max(Γ₁, Γ₂) and checked for convergence over the
/// last tenth of that window.
pub fn steady_conditional_numeric(p: &WellParams) -> Result<SteadyConditional> {
    let r = derive_rates(p)?;
    let t_ss = STEADY_HORIZON / r.gamma1.max(r.gamma2);
    let series = evolve_unconditional(p, &ReducedDensityMatrix::left(), &[0.0, 0.9 * t_ss, t_ss])?;
    let cond = conditional_from_unconditional(&series)?;
    let a = &cond.states[1];
    let b = &cond.states[2];
    let change = (a.p11() - b.p11()).abs().max((a.p22() - b.p22()).abs());
    if change > STEADY_CHANGE_TOL {
        return Err(Error::StepFailure {
            t: t_ss,
            reason: format!("steady state not converged, change {change:e}"),
        });
    }
    Ok(SteadyConditional {
        occupations: OccupationPair::new(b.p11(), b.p22()),
        t_ss,
        change,
        survival: cond.survival[2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Parity;
    use approx::assert_relative_eq;

    fn sym(eps: f64) -> WellParams {
        WellParams::from_rates(1.0, 1.0, eps, Parity::Even).unwrap()
    }

    #[test]
    fn maximally_mixed_wells_decay_rate() {
        let l = build_liouvillian(&sym(0.0)).unwrap();
        let mut s = Matrix3c::zeros();
        s[(1, 1)] = C64::from(0.5);
        s[(2, 2)] = C64::from(0.5);
        let d = l.apply(&s);
        assert_relative_eq!(d[(1, 1)].re + d[(2, 2)].re, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn empty_state_is_stationary() {
        let p = WellParams::new(0.3, -0.1, 0.8, -0.4, 0.7).unwrap();
        let l = build_liouvillian(&p).unwrap();
        assert!(l.apply(ReducedDensityMatrix::empty().matrix()).norm() < 1e-15);
        let d = master_rhs_explicit(&ReducedDensityMatrix::empty(), &p).unwrap();
        assert_eq!(d.norm(), 0.0);
    }

    #[test]
    fn dark_state_is_fixed_point() {
        for &(o1, o2) in &[(1.0, 1.0), (1.0, -1.0), (0.3, 2.0), (1.5, -0.2)] {
            let p = WellParams::new(0.4, 0.4, o1, o2, 0.9).unwrap();
            let l = build_liouvillian(&p).unwrap();
            let d = l.apply(ReducedDensityMatrix::dark(&p).matrix());
            assert!(d.norm() < 1e-12, "residual {}", d.norm());
        }
    }

    #[test]
    fn explicit_rhs_left_well() {
        for parity in [Parity::Even, Parity::Odd] {
            let p = WellParams::from_rates(1.0, 1.0, 0.0, parity).unwrap();
            let d = master_rhs_explicit(&ReducedDensityMatrix::left(), &p).unwrap();
            assert_relative_eq!(d[(1, 1)].re, -1.0, epsilon = 1e-15);
            assert_eq!(d[(2, 2)].re, 0.0);
            assert_relative_eq!(d[(1, 2)].re, -parity.sign() * 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn superoperator_matches_direct_action() {
        let p = WellParams::new(0.2, -0.3, 0.9, -0.5, 0.4).unwrap();
        let l = build_liouvillian(&p).unwrap();
        let mut s = Matrix3c::zeros();
        s[(0, 0)] = C64::from(0.2);
        s[(1, 1)] = C64::from(0.5);
        s[(2, 2)] = C64::from(0.3);
        s[(1, 2)] = C64::new(0.1, 0.05);
        s[(2, 1)] = C64::new(0.1, -0.05);
        s[(0, 1)] = C64::new(0.02, 0.03);
        s[(1, 0)] = C64::new(0.02, -0.03);
        let direct = l.apply(&s);
        let via = apply_super(l.superoperator(), &s);
        assert!((direct - via).norm() < 1e-15);
    }

    #[test]
    fn unit_time_values() {
        let s = evolve_unconditional(&sym(0.0), &ReducedDensityMatrix::left(), &[0.0, 1.0]).unwrap();
        let last = &s.states[1];
        assert_relative_eq!(last.get(1, 1).re, 0.467_773_541_394_874_8, epsilon = 1e-13);
        assert_relative_eq!(last.get(2, 2).re, 0.099_894_100_223_432_44, epsilon = 1e-13);
        assert_relative_eq!(last.get(0, 0).re, 0.432_332_358_381_692_9, epsilon = 1e-13);
    }

    #[test]
    fn stationary_inputs_give_constant_series() {
        let times = uniform_grid(5.0, 10);
        let p = sym(0.0);
        for s0 in [ReducedDensityMatrix::empty(), ReducedDensityMatrix::dark(&p)] {
            let s = evolve_unconditional(&p, &s0, &times).unwrap();
            for st in &s.states {
                assert!((st.matrix() - s0.matrix()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn conditional_normalization() {
        let s = evolve_unconditional(&sym(0.0), &ReducedDensityMatrix::left(), &[0.0, 1.0]).unwrap();
        let c = conditional_from_unconditional(&s).unwrap();
        assert_eq!(c.states[0].p11(), 1.0);
        assert_relative_eq!(c.states[1].p11(), 0.824_027_136_831_942_3, epsilon = 1e-12);
        assert_relative_eq!(c.states[1].p22(), 0.175_972_863_168_057_8, epsilon = 1e-12);

        let s = evolve_unconditional(&sym(0.5), &ReducedDensityMatrix::left(), &[0.0, 40.0]).unwrap();
        let c = conditional_from_unconditional(&s).unwrap();
        assert!((c.states[1].p11() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn vanishing_survival_reports_first_time() {
        let p = WellParams::from_rates(1.0, 0.0, 0.0, Parity::Even).unwrap();
        let times = [0.0, 10.0, 40.0, 50.0];
        let s = evolve_unconditional(&p, &ReducedDensityMatrix::left(), &times).unwrap();
        match conditional_from_unconditional(&s) {
            Err(Error::VanishingSurvival { t, .. }) => assert_eq!(t, 40.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_validation() {
        let p = sym(0.0);
        let s0 = ReducedDensityMatrix::left();
        assert!(evolve_unconditional(&p, &s0, &[]).is_err());
        assert!(evolve_unconditional(&p, &s0, &[0.5, 1.0]).is_err());
        assert!(evolve_unconditional(&p, &s0, &[0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn adaptive_route_agrees_with_propagator() {
        let p = WellParams::new(0.25, -0.25, 1.0, -0.6, 0.3).unwrap();
        let times = uniform_grid(6.0, 30);
        let tol = Tolerance { atol: 1e-12, rtol: 1e-12, ..Default::default() };
        let a = evolve_unconditional(&p, &ReducedDensityMatrix::left(), &times).unwrap();
        let b = evolve_unconditional_adaptive(&p, &ReducedDensityMatrix::left(), &times, tol).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!((x.matrix() - y.matrix()).camax() < 1e-10);
        }
    }

    #[test]
    fn steady_state_for_chi_two() {
        let p = WellParams::from_rates(1.0, 4.0, 0.0, Parity::Even).unwrap();
        let s = steady_conditional_numeric(&p).unwrap();
        assert_relative_eq!(s.occupations.p1, 0.8, epsilon = 1e-10);
        assert_relative_eq!(s.occupations.p2, 0.2, epsilon = 1e-10);
        assert_relative_eq!(s.t_ss, 15.0, epsilon = 1e-15);
    }
}

//! Measurement-conditioned dynamics under continuous monitoring of the reservoir.
//!
//! A null record (no detection on `[0, t]`) propagates the wells state with the
//! non-Hermitian effective Hamiltonian H_eff = H_S − (i/2)Γ₁a†a and then
//! renormalizes. A detection empties the wells for good: `a` maps both wells
//! to `|0⟩` and `|0⟩` is dark to everything, so a trajectory jumps at most once.
//!
//! # Random streams
//!
//! Trajectory `k` of an ensemble seeded with `master_seed` draws from a
//! ChaCha8 generator keyed with the 32-byte seed whose first eight bytes are
//! `master_seed` in little-endian order (remaining bytes zero), with stream
//! number `k` and word position 0. Each uniform variate is
//! `((x >> 11) + 0.5) · 2⁻⁵³` for the next 64-bit output `x`, which lies in
//! the open interval (0, 1). For a mixed initial state the first variate
//! selects the eigencomponent and the second is the jump threshold; a pure
//! state uses only the threshold. The ensemble therefore depends only on
//! `(master_seed, k)` and never on thread scheduling.

use nalgebra::Vector2;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lindblad::validate_grid;
use crate::model::{
    build_jump_operator, check_density, dark_amplitudes, system_hamiltonian, Matrix2c,
    WellParams, C64, EMPTY, LEFT, RIGHT,
};
use crate::ode::{self, Tolerance};

/// Null-record probability below which the conditional state is undefined.
pub const NORM_FLOOR: f64 = 1e-300;

const PURITY_TOL: f64 = 1e-10;
const JUMP_TIME_RTOL: f64 = 1e-9;

/// Normalized 2×2 density matrix on the wells subspace (|1⟩, |2⟩).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalState(Matrix2c);

impl ConditionalState {
    pub fn new(m: Matrix2c) -> Result<Self> {
        check_density(&m, 1e-12, 1e-10, 1e-10)?;
        Ok(ConditionalState(m))
    }

    pub(crate) fn from_unchecked(m: Matrix2c) -> Self {
        ConditionalState(m)
    }

    /// |ψ⟩⟨ψ| for wells amplitudes (normalized here).
    pub fn pure(amplitudes: Vector2<C64>) -> Result<Self> {
        let n = amplitudes.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidState("zero or non-finite amplitudes".into()));
        }
        let v = amplitudes.unscale(n);
        Ok(ConditionalState(v * v.adjoint()))
    }

    pub fn left() -> Self {
        Self::pure(Vector2::new(C64::from(1.0), C64::from(0.0))).unwrap()
    }

    pub fn right() -> Self {
        Self::pure(Vector2::new(C64::from(0.0), C64::from(1.0))).unwrap()
    }

    /// The bound state (Ω₂|1⟩ − Ω₁|2⟩)/√(Ω₁² + Ω₂²).
    pub fn dark(p: &WellParams) -> Self {
        let [d1, d2] = dark_amplitudes(p);
        Self::pure(Vector2::new(C64::from(d1), C64::from(d2))).unwrap()
    }

    pub fn matrix(&self) -> &Matrix2c {
        &self.0
    }

    pub fn p11(&self) -> f64 {
        self.0[(0, 0)].re
    }

    pub fn p22(&self) -> f64 {
        self.0[(1, 1)].re
    }

    /// ρ₁₂.
    pub fn coherence(&self) -> C64 {
        self.0[(0, 1)]
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// Eigen-decomposition into (weight, normalized amplitudes), weights > 0 only.
    pub fn components(&self) -> Vec<(f64, Vector2<C64>)> {
        let e = self.0.symmetric_eigen();
        (0..2)
            .filter(|&k| e.eigenvalues[k] > PURITY_TOL)
            .map(|k| (e.eigenvalues[k], e.eigenvectors.column(k).into_owned()))
            .collect()
    }

    fn dominant_amplitudes(&self) -> Vector2<C64> {
        let e = self.0.symmetric_eigen();
        let k = if e.eigenvalues[0] >= e.eigenvalues[1] { 0 } else { 1 };
        e.eigenvectors.column(k).into_owned()
    }
}

/// H_eff = H_S − (i/2)·rate·a†a restricted to the wells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveHamiltonian(Matrix2c);

impl EffectiveHamiltonian {
    pub fn matrix(&self) -> &Matrix2c {
        &self.0
    }

    /// U_eff(t) = exp(−iH_eff t).
    pub fn propagator(&self, t: f64) -> Matrix2c {
        (self.0 * C64::new(0.0, -t)).exp()
    }

    /// Eigenvalues of i(H_eff − H_eff†)/2, i.e. minus half the decay rates.
    pub fn loss_spectrum(&self) -> [f64; 2] {
        let g = (self.0 - self.0.adjoint()) * C64::new(0.0, -0.5);
        let ev = g.symmetric_eigenvalues();
        [ev[0], ev[1]]
    }
}

pub fn effective_hamiltonian(p: &WellParams) -> Result<EffectiveHamiltonian> {
    let jump = build_jump_operator(p)?;
    let h = system_hamiltonian(p);
    let full = h - jump.rate_number() * C64::new(0.0, 0.5);
    Ok(EffectiveHamiltonian(full.fixed_view::<2, 2>(1, 1).into_owned()))
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::NonFinite("time"));
    }
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

/// Conditional state after a null record on `[0, t]`, and that record's probability.
pub fn null_result_evolve(
    p: &WellParams,
    rho0: &ConditionalState,
    t: f64,
) -> Result<(ConditionalState, f64)> {
    check_time(t)?;
    let heff = effective_hamiltonian(p)?;
    null_result_step(&heff, rho0, t)
}

fn null_result_step(
    heff: &EffectiveHamiltonian,
    rho0: &ConditionalState,
    t: f64,
) -> Result<(ConditionalState, f64)> {
    let u = heff.propagator(t);
    let m = u * rho0.matrix() * u.adjoint();
    let norm = m.trace().re;
    if norm.is_nan() || norm <= NORM_FLOOR {
        return Err(Error::VanishingNorm { t, norm });
    }
    let m = m / C64::from(norm);
    Ok((
        ConditionalState::from_unchecked((m + m.adjoint()) * C64::from(0.5)),
        norm,
    ))
}

/// Null-record states and probabilities on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NullResultSeries {
    pub times: Vec<f64>,
    pub states: Vec<ConditionalState>,
    pub null_probability: Vec<f64>,
}

pub fn null_result_series(
    p: &WellParams,
    rho0: &ConditionalState,
    times: &[f64],
) -> Result<NullResultSeries> {
    validate_grid(times)?;
    let heff = effective_hamiltonian(p)?;
    let mut states = Vec::with_capacity(times.len());
    let mut null_probability = Vec::with_capacity(times.len());
    for &t in times {
        let (s, n) = null_result_step(&heff, rho0, t)?;
        states.push(s);
        null_probability.push(n);
    }
    Ok(NullResultSeries {
        times: times.to_vec(),
        states,
        null_probability,
    })
}

/// Integrates the nonlinear null-result equation
/// ρ̇ = −i[H_S, ρ] + Γ₁(Tr[a†aρ]ρ − ½{a†a, ρ}) directly.
pub fn null_result_integrate(
    p: &WellParams,
    rho0: &ConditionalState,
    times: &[f64],
    tol: Tolerance,
) -> Result<Vec<ConditionalState>> {
    validate_grid(times)?;
    let heff = effective_hamiltonian(p)?;
    let h = *heff.matrix();
    let i = C64::new(0.0, 1.0);
    let unpack = |y: &[f64]| Matrix2c::from_iterator(y.chunks_exact(2).map(|c| C64::new(c[0], c[1])));
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let r = unpack(y);
        // −i(H_eff ρ − ρ H_eff†) + ⟨rate·a†a⟩ρ, with rate·a†a = i(H_eff − H_eff†)
        let d_lin = (h * r - r * h.adjoint()) * (-i);
        let loss = ((h - h.adjoint()) * i * r).trace();
        let d = d_lin + r * loss;
        for (k, z) in d.iter().enumerate() {
            dy[2 * k] = z.re;
            dy[2 * k + 1] = z.im;
        }
    };
    let y0: Vec<f64> = rho0.matrix().iter().flat_map(|z| [z.re, z.im]).collect();
    let raw = ode::integrate(rhs, &y0, times, tol)?;
    Ok(raw
        .into_iter()
        .map(|y| {
            let m = unpack(&y);
            ConditionalState::from_unchecked((m + m.adjoint()) * C64::from(0.5))
        })
        .collect())
}

/// One unraveling of the monitored dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub stream: u64,
    /// Detection time, if the detector clicked within the grid window.
    pub jump_time: Option<f64>,
    pub times: Vec<f64>,
    /// (σ₀₀, σ₁₁, σ₂₂) along the trajectory, indexed by `EMPTY`, `LEFT`, `RIGHT`.
    pub occupations: Vec<[f64; 3]>,
}

/// Generator for trajectory `stream` of an ensemble seeded with `master_seed`.
pub fn trajectory_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng.set_word_pos(0);
    rng
}

/// Uniform variate in the open interval (0, 1).
pub fn open_uniform(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Deterministic no-jump branch for a pure initial state.
#[derive(Debug, Clone)]
struct NullPath {
    heff: EffectiveHamiltonian,
    psi0: Vector2<C64>,
    times: Vec<f64>,
    norms: Vec<f64>,
    pops: Vec<[f64; 2]>,
}

impl NullPath {
    fn new(heff: EffectiveHamiltonian, psi0: Vector2<C64>, times: &[f64]) -> Self {
        let mut norms = Vec::with_capacity(times.len());
        let mut pops = Vec::with_capacity(times.len());
        for &t in times {
            let psi = heff.propagator(t) * psi0;
            let a = psi[0].norm_sqr();
            let b = psi[1].norm_sqr();
            let n = a + b;
            norms.push(n);
            pops.push(if n > 0.0 { [a / n, b / n] } else { [0.0, 0.0] });
        }
        NullPath {
            heff,
            psi0,
            times: times.to_vec(),
            norms,
            pops,
        }
    }

    fn norm_at(&self, t: f64) -> f64 {
        (self.heff.propagator(t) * self.psi0).norm_squared()
    }

    /// First time the squared norm drops below `u`, bisected inside the grid step.
    fn jump_time(&self, u: f64) -> Option<(usize, f64)> {
        let k = self.norms.iter().position(|&n| n < u)?;
        if k == 0 {
            return Some((0, 0.0));
        }
        let (mut lo, mut hi) = (self.times[k - 1], self.times[k]);
        while hi - lo > JUMP_TIME_RTOL * hi {
            let mid = 0.5 * (lo + hi);
            if self.norm_at(mid) < u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some((k, 0.5 * (lo + hi)))
    }

    fn occupation(&self, k: usize, jumped_at: Option<usize>) -> [f64; 3] {
        match jumped_at {
            Some(j) if k >= j => [1.0, 0.0, 0.0],
            _ => {
                let [a, b] = self.pops[k];
                let mut o = [0.0; 3];
                o[EMPTY] = 0.0;
                o[LEFT] = a;
                o[RIGHT] = b;
                o
            }
        }
    }
}

fn ensure_pure(rho0: &ConditionalState) -> Result<Vector2<C64>> {
    let purity = rho0.purity();
    if (purity - 1.0).abs() > PURITY_TOL {
        return Err(Error::NotPure { purity });
    }
    Ok(rho0.dominant_amplitudes())
}

/// Samples one trajectory from a pure wells state with the waiting-time method.
pub fn sample_trajectory(
    p: &WellParams,
    rho0: &ConditionalState,
    times: &[f64],
    seed: u64,
) -> Result<TrajectoryRecord> {
    sample_trajectory_stream(p, rho0, times, seed, 0)
}

/// As [`sample_trajectory`] but on an explicit stream of `seed`.
pub fn sample_trajectory_stream(
    p: &WellParams,
    rho0: &ConditionalState,
    times: &[f64],
    seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    validate_grid(times)?;
    let psi0 = ensure_pure(rho0)?;
    let path = NullPath::new(effective_hamiltonian(p)?, psi0, times);
    let mut rng = trajectory_rng(seed, stream);
    let u = open_uniform(&mut rng);
    Ok(record_from_path(&path, u, seed, stream))
}

fn record_from_path(path: &NullPath, u: f64, seed: u64, stream: u64) -> TrajectoryRecord {
    let jump = path.jump_time(u);
    let jumped_at = jump.map(|(k, _)| k);
    TrajectoryRecord {
        seed,
        stream,
        jump_time: jump.map(|(_, t)| t),
        times: path.times.clone(),
        occupations: (0..path.times.len())
            .map(|k| path.occupation(k, jumped_at))
            .collect(),
    }
}

/// Ensemble statistics of the three-state occupations.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSeries {
    pub times: Vec<f64>,
    pub mean: Vec<[f64; 3]>,
    pub std_err: Vec<[f64; 3]>,
    /// Fraction of trajectories without a detection up to each time.
    pub no_jump_fraction: Vec<f64>,
    pub n_traj: usize,
    pub master_seed: u64,
}

/// Averages `n_traj` trajectories; mixed initial states are sampled through
/// their eigencomponents.
///
/// Trajectories are sampled in parallel but accumulated in index order, so
/// the result is bit-identical for any thread count.
pub fn ensemble_average(
    p: &WellParams,
    rho0: &ConditionalState,
    times: &[f64],
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleSeries> {
    validate_grid(times)?;
    if n_traj == 0 {
        return Err(Error::InvalidParams("ensemble needs at least one trajectory".into()));
    }
    let heff = effective_hamiltonian(p)?;
    let components = rho0.components();
    let pure = (rho0.purity() - 1.0).abs() <= PURITY_TOL;
    let paths: Vec<(f64, NullPath)> = if pure {
        vec![(1.0, NullPath::new(heff, rho0.dominant_amplitudes(), times))]
    } else {
        components
            .into_iter()
            .map(|(w, v)| (w, NullPath::new(heff, v, times)))
            .collect()
    };
    let total_weight: f64 = paths.iter().map(|(w, _)| w).sum();

    // (component, index of first grid point at or after the jump)
    let outcomes: Vec<(usize, Option<usize>)> = (0..n_traj as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = trajectory_rng(master_seed, k);
            let c = if paths.len() == 1 {
                0
            } else {
                let v = open_uniform(&mut rng) * total_weight;
                let mut acc = 0.0;
                let mut pick = paths.len() - 1;
                for (i, (w, _)) in paths.iter().enumerate() {
                    acc += w;
                    if v < acc {
                        pick = i;
                        break;
                    }
                }
                pick
            };
            let u = open_uniform(&mut rng);
            (c, paths[c].1.jump_time(u).map(|(idx, _)| idx))
        })
        .collect();

    let n = times.len();
    let mut mean = vec![[0.0; 3]; n];
    let mut m2 = vec![[0.0; 3]; n];
    let mut survivors = vec![0usize; n];
    for (count, &(c, jumped_at)) in outcomes.iter().enumerate() {
        let path = &paths[c].1;
        let weight = 1.0 / (count + 1) as f64;
        for k in 0..n {
            let o = path.occupation(k, jumped_at);
            if jumped_at.is_none_or(|j| k < j) {
                survivors[k] += 1;
            }
            for s in 0..3 {
                let delta = o[s] - mean[k][s];
                mean[k][s] += delta * weight;
                m2[k][s] += delta * (o[s] - mean[k][s]);
            }
        }
    }
    let std_err = m2
        .iter()
        .map(|row| {
            let mut e = [0.0; 3];
            if n_traj > 1 {
                for s in 0..3 {
                    e[s] = (row[s] / (n_traj - 1) as f64 / n_traj as f64).sqrt();
                }
            }
            e
        })
        .collect();
    Ok(EnsembleSeries {
        times: times.to_vec(),
        mean,
        std_err,
        no_jump_fraction: survivors
            .into_iter()
            .map(|s| s as f64 / n_traj as f64)
            .collect(),
        n_traj,
        master_seed,
    })
}

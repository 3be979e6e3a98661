//! Exact Schrödinger dynamics of two wells coupled to a discretized flat band.
//!
//! The reservoir has `N` levels spread uniformly over `[−W/2, W/2]` (cell
//! midpoints), so ρ = N/W and every level couples to the wells with the same
//! Ω₁, Ω₂. The full (N+2)-dimensional Hamiltonian is never stored; the
//! spectrum comes from the hub-and-spoke structure in [`crate::spectrum`].
//!
//! Basis order inside this module: 0 is |1⟩, 1 is |2⟩, `2 + r` is reservoir
//! level `r`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::analytic::{survival_probability, TimePoint};
use crate::error::{Error, Result};
use crate::lindblad::validate_grid;
use crate::model::{derive_rates, Matrix2c, WellParams, C64};
use crate::spectrum::{Spectrum, Spoke};

/// Fraction of the revival time 2π/δ a simulation may cover.
pub const RECURRENCE_FRACTION: f64 = 0.2;
/// Largest dt·W accepted by the short-time fit on a band model.
pub const SHORT_TIME_LIMIT: f64 = 0.2;
/// Losses below this are treated as no loss at all.
pub const LOSS_FLOOR: f64 = 1e-14;

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BandModel {
    n_levels: usize,
    bandwidth: f64,
    e1: f64,
    e2: f64,
    omega1: f64,
    omega2: f64,
    levels: Vec<f64>,
}

/// Builds the flat-band model whose couplings reproduce the widths of `p`.
pub fn build_band_model(p: &WellParams, n_levels: usize, bandwidth: f64) -> Result<BandModel> {
    if n_levels < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 reservoir levels, got {n_levels}")));
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::InvalidGrid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let rates = derive_rates(p)?;
    let rho = n_levels as f64 / bandwidth;
    let coupling = |gamma: f64, sign: f64| (gamma / (2.0 * PI * rho)).sqrt() * sign;
    let sign1 = if p.omega1 < 0.0 { -1.0 } else { 1.0 };
    let sign2 = if p.omega2 < 0.0 { -1.0 } else { 1.0 };
    let delta = bandwidth / n_levels as f64;
    let levels = (0..n_levels)
        .map(|r| -0.5 * bandwidth + (r as f64 + 0.5) * delta)
        .collect();
    Ok(BandModel {
        n_levels,
        bandwidth,
        e1: p.e1,
        e2: p.e2,
        omega1: coupling(rates.gamma1, sign1),
        omega2: coupling(rates.gamma2, sign2),
        levels,
    })
}

impl BandModel {
    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.n_levels + 2
    }

    pub fn e1(&self) -> f64 {
        self.e1
    }

    pub fn e2(&self) -> f64 {
        self.e2
    }

    /// Coupling of |1⟩ to every reservoir level.
    pub fn omega1_r(&self) -> f64 {
        self.omega1
    }

    /// Coupling of |2⟩ to every reservoir level.
    pub fn omega2_r(&self) -> f64 {
        self.omega2
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Level spacing δ = W/N.
    pub fn spacing(&self) -> f64 {
        self.bandwidth / self.n_levels as f64
    }

    /// ρ = N/W.
    pub fn density(&self) -> f64 {
        self.n_levels as f64 / self.bandwidth
    }

    pub fn gamma1(&self) -> f64 {
        2.0 * PI * self.density() * self.omega1 * self.omega1
    }

    pub fn gamma2(&self) -> f64 {
        2.0 * PI * self.density() * self.omega2 * self.omega2
    }

    /// Longest admissible horizon, 0.2 · 2π/δ.
    pub fn recurrence_limit(&self) -> f64 {
        RECURRENCE_FRACTION * 2.0 * PI / self.spacing()
    }

    pub fn check_horizon(&self, t_max: f64) -> Result<()> {
        let limit = self.recurrence_limit();
        if t_max < limit {
            Ok(())
        } else {
            Err(Error::RecurrenceGuard { t_max, limit })
        }
    }

    /// Frobenius norm of the Hamiltonian.
    pub fn norm(&self) -> f64 {
        let diag: f64 = self.levels.iter().map(|e| e * e).sum::<f64>() + self.e1 * self.e1 + self.e2 * self.e2;
        let off = 2.0 * self.n_levels as f64 * (self.omega1 * self.omega1 + self.omega2 * self.omega2);
        (diag + off).sqrt()
    }

    /// Dense Hamiltonian; only sensible for small `N`.
    pub fn hamiltonian(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        h[(0, 0)] = self.e1;
        h[(1, 1)] = self.e2;
        for (r, &e) in self.levels.iter().enumerate() {
            h[(r + 2, r + 2)] = e;
            h[(r + 2, 0)] = self.omega1;
            h[(0, r + 2)] = self.omega1;
            h[(r + 2, 1)] = self.omega2;
            h[(1, r + 2)] = self.omega2;
        }
        h
    }

    /// H|ψ⟩ without forming H.
    pub fn apply(&self, psi: &WaveFunction) -> WaveFunction {
        let sum: C64 = psi.br.iter().sum();
        WaveFunction {
            b1: psi.b1 * self.e1 + sum * self.omega1,
            b2: psi.b2 * self.e2 + sum * self.omega2,
            br: psi
                .br
                .iter()
                .zip(&self.levels)
                .map(|(&c, &e)| c * e + psi.b1 * self.omega1 + psi.b2 * self.omega2)
                .collect(),
        }
    }

    fn coupling_norm(&self) -> f64 {
        self.omega1.hypot(self.omega2)
    }

    /// Dark and bright well combinations, (d₁, d₂) and (b₁, b₂).
    fn dressed(&self) -> ([f64; 2], [f64; 2]) {
        let w = self.coupling_norm();
        (
            [self.omega2 / w, -self.omega1 / w],
            [self.omega1 / w, self.omega2 / w],
        )
    }

    /// Exact eigen-decomposition of the Hamiltonian.
    pub fn spectrum(&self) -> Result<BandSpectrum> {
        let w = self.coupling_norm();
        if w == 0.0 {
            return Err(Error::DegenerateCoupling);
        }
        let (d, b) = self.dressed();
        let w2 = w * w;
        let o1 = self.omega1 * self.omega1;
        let o2 = self.omega2 * self.omega2;
        let h_bb = (o1 * self.e1 + o2 * self.e2) / w2;
        let h_dd = (o2 * self.e1 + o1 * self.e2) / w2;
        let h_db = self.omega1 * self.omega2 * (self.e1 - self.e2) / w2;
        let mut spokes = Vec::with_capacity(self.n_levels + 1);
        spokes.push(Spoke {
            pole: h_dd,
            coupling: h_db,
            basis: vec![(0, d[0]), (1, d[1])],
        });
        for (r, &e) in self.levels.iter().enumerate() {
            spokes.push(Spoke {
                pole: e,
                coupling: w,
                basis: vec![(r + 2, 1.0)],
            });
        }
        let inner = Spectrum::new(self.dim(), h_bb, vec![(0, b[0]), (1, b[1])], spokes)?;
        let wells = inner.components_on(&[0, 1]).into_iter().map(|v| [v[0], v[1]]).collect();
        Ok(BandSpectrum {
            inner,
            wells,
            limit: self.recurrence_limit(),
            n_levels: self.n_levels,
        })
    }
}

/// Amplitudes on the two wells and on every reservoir level.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub b1: C64,
    pub b2: C64,
    pub br: Vec<C64>,
}

impl WaveFunction {
    /// State confined to the wells.
    pub fn wells(b1: C64, b2: C64, n_levels: usize) -> Self {
        WaveFunction {
            b1,
            b2,
            br: vec![C64::new(0.0, 0.0); n_levels],
        }
    }

    pub fn left(n_levels: usize) -> Self {
        Self::wells(C64::new(1.0, 0.0), C64::new(0.0, 0.0), n_levels)
    }

    pub fn right(n_levels: usize) -> Self {
        Self::wells(C64::new(0.0, 0.0), C64::new(1.0, 0.0), n_levels)
    }

    /// |1′⟩ of the given model.
    pub fn dark(m: &BandModel) -> Self {
        let (d, _) = m.dressed();
        Self::wells(C64::new(d[0], 0.0), C64::new(d[1], 0.0), m.n_levels)
    }

    /// |2′⟩ of the given model.
    pub fn bright(m: &BandModel) -> Self {
        let (_, b) = m.dressed();
        Self::wells(C64::new(b[0], 0.0), C64::new(b[1], 0.0), m.n_levels)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.b1.norm_sqr() + self.b2.norm_sqr() + self.br.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn reservoir_population(&self) -> f64 {
        self.br.iter().map(|c| c.norm_sqr()).sum()
    }

    fn to_vec(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.br.len() + 2);
        v.push(self.b1);
        v.push(self.b2);
        v.extend_from_slice(&self.br);
        v
    }

    fn from_vec(v: Vec<C64>) -> Self {
        WaveFunction {
            b1: v[0],
            b2: v[1],
            br: v[2..].to_vec(),
        }
    }

    fn check(&self, m: &BandModel) -> Result<()> {
        if self.br.len() != m.n_levels {
            return Err(Error::InvalidState(format!(
                "wavefunction has {} reservoir amplitudes, model has {} levels",
                self.br.len(),
                m.n_levels
            )));
        }
        let n = self.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {n} is not 1")));
        }
        Ok(())
    }
}

/// (σ₁₁, σ₂₂, reservoir population).
pub fn occupations_from_wavefunction(psi: &WaveFunction) -> (f64, f64, f64) {
    (psi.b1.norm_sqr(), psi.b2.norm_sqr(), psi.reservoir_population())
}

/// Eigen-decomposition of a [`BandModel`].
#[derive(Debug, Clone)]
pub struct BandSpectrum {
    inner: Spectrum,
    wells: Vec<[f64; 2]>,
    limit: f64,
    n_levels: usize,
}

impl BandSpectrum {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues()
    }

    fn guard(&self, t_max: f64) -> Result<()> {
        if t_max < self.limit {
            Ok(())
        } else {
            Err(Error::RecurrenceGuard {
                t_max,
                limit: self.limit,
            })
        }
    }

    fn coefficients(&self, psi: &WaveFunction) -> Vec<C64> {
        self.inner.overlaps(&psi.to_vec())
    }

    fn phased(&self, coeffs: &[C64], t: f64) -> Vec<C64> {
        self.inner
            .eigenvalues()
            .iter()
            .zip(coeffs)
            .map(|(&l, &c)| c * C64::from_polar(1.0, -l * t))
            .collect()
    }

    /// Full state at every time of `grid`.
    pub fn evolve(&self, psi0: &WaveFunction, grid: &[f64]) -> Result<Vec<WaveFunction>> {
        validate_grid(grid)?;
        self.guard(*grid.last().unwrap())?;
        if psi0.br.len() != self.n_levels {
            return Err(Error::InvalidState("reservoir size mismatch".into()));
        }
        let coeffs = self.coefficients(psi0);
        let out: Vec<WaveFunction> = grid
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    psi0.clone()
                } else {
                    WaveFunction::from_vec(self.inner.synthesize(&self.phased(&coeffs, t)))
                }
            })
            .collect();
        for (psi, &t) in out.iter().zip(grid) {
            let n = psi.norm_sqr();
            if (n - 1.0).abs() > NORM_TOL {
                return Err(Error::Diagonalization(format!("norm drifted to {n} at t = {t}")));
            }
        }
        Ok(out)
    }

    /// Well amplitudes (b₁, b₂) at every time of `grid`; O(N) per time.
    pub fn wells_amplitudes(&self, psi0: &WaveFunction, grid: &[f64]) -> Result<Vec<[C64; 2]>> {
        validate_grid(grid)?;
        self.guard(*grid.last().unwrap())?;
        if psi0.br.len() != self.n_levels {
            return Err(Error::InvalidState("reservoir size mismatch".into()));
        }
        let coeffs = self.coefficients(psi0);
        let values = self.inner.eigenvalues();
        Ok(grid
            .par_iter()
            .map(|&t| {
                if t == 0.0 {
                    return [psi0.b1, psi0.b2];
                }
                let mut b = [C64::new(0.0, 0.0); 2];
                for ((&l, &c), w) in values.iter().zip(&coeffs).zip(&self.wells) {
                    let a = c * C64::from_polar(1.0, -l * t);
                    b[0] += a * w[0];
                    b[1] += a * w[1];
                }
                b
            })
            .collect())
    }

    /// P e^{−iH dt} P restricted to the wells.
    pub fn wells_propagator(&self, dt: f64) -> Matrix2c {
        let mut k = Matrix2c::zeros();
        for (&l, w) in self.inner.eigenvalues().iter().zip(&self.wells) {
            let ph = C64::from_polar(1.0, -l * dt);
            for i in 0..2 {
                for j in 0..2 {
                    k[(i, j)] += ph * (w[i] * w[j]);
                }
            }
        }
        k
    }
}

/// Exact evolution by spectral decomposition.
pub fn schrodinger_evolve(m: &BandModel, psi0: &WaveFunction, grid: &[f64]) -> Result<Vec<WaveFunction>> {
    psi0.check(m)?;
    validate_grid(grid)?;
    m.check_horizon(*grid.last().unwrap())?;
    m.spectrum()?.evolve(psi0, grid)
}

/// Strang splitting between the diagonal part and the coupling.
///
/// The coupling only rotates the pair (bright, uniform reservoir) by the
/// angle Ω√N·τ, so every step is exactly unitary.
pub fn split_step_evolve(
    m: &BandModel,
    psi0: &WaveFunction,
    grid: &[f64],
    max_step: f64,
) -> Result<Vec<WaveFunction>> {
    psi0.check(m)?;
    validate_grid(grid)?;
    m.check_horizon(*grid.last().unwrap())?;
    if !(max_step.is_finite() && max_step > 0.0) {
        return Err(Error::InvalidGrid(format!("step must be positive, got {max_step}")));
    }
    let (_, bright) = m.dressed();
    let w = m.coupling_norm();
    let root_n = (m.n_levels as f64).sqrt();
    let mut energies = vec![m.e1, m.e2];
    energies.extend_from_slice(&m.levels);

    let mut psi = psi0.to_vec();
    let mut out = vec![psi0.clone()];
    let mut t = 0.0;
    for &target in &grid[1..] {
        let span = target - t;
        let steps = (span / max_step).ceil().max(1.0) as usize;
        let tau = span / steps as f64;
        let half: Vec<C64> = energies.iter().map(|&e| C64::from_polar(1.0, -0.5 * e * tau)).collect();
        let (s, c) = (w * root_n * tau).sin_cos();
        for _ in 0..steps {
            psi.iter_mut().zip(&half).for_each(|(z, p)| *z *= p);
            let x = psi[0] * bright[0] + psi[1] * bright[1];
            let y = psi[2..].iter().sum::<C64>() / root_n;
            let i = C64::new(0.0, 1.0);
            let dx = x * (c - 1.0) - i * s * y;
            let dy = y * (c - 1.0) - i * s * x;
            psi[0] += dx * bright[0];
            psi[1] += dx * bright[1];
            let dr = dy / root_n;
            psi[2..].iter_mut().for_each(|z| *z += dr);
            psi.iter_mut().zip(&half).for_each(|(z, p)| *z *= p);
        }
        t = target;
        out.push(WaveFunction::from_vec(psi.clone()));
    }
    Ok(out)
}

/// Dark/bright split of the wells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedBasis {
    /// |1′⟩ = (Ω₂|1⟩ − Ω₁|2⟩)/√(Ω₁² + Ω₂²)
    pub dark: [f64; 2],
    /// |2′⟩ = (Ω₁|1⟩ + Ω₂|2⟩)/√(Ω₁² + Ω₂²)
    pub bright: [f64; 2],
    pub alpha1: C64,
    pub alpha2: C64,
}

impl DressedBasis {
    /// Same basis with the overlaps of `psi` on |1′⟩ and |2′⟩.
    pub fn with_initial(self, psi: &WaveFunction) -> Self {
        DressedBasis {
            alpha1: psi.b1 * self.dark[0] + psi.b2 * self.dark[1],
            alpha2: psi.b1 * self.bright[0] + psi.b2 * self.bright[1],
            ..self
        }
    }
}

/// Dark and bright states, with overlaps taken for an electron starting in
/// |1⟩, and the residual ‖(H − E₁)|1′⟩‖.
pub fn bound_state(m: &BandModel) -> (DressedBasis, f64) {
    let (dark, bright) = m.dressed();
    let basis = DressedBasis {
        dark,
        bright,
        alpha1: C64::new(0.0, 0.0),
        alpha2: C64::new(0.0, 0.0),
    }
    .with_initial(&WaveFunction::left(m.n_levels));
    let d = WaveFunction::dark(m);
    let hd = m.apply(&d);
    let res = (hd.b1 - d.b1 * m.e1).norm_sqr()
        + (hd.b2 - d.b2 * m.e1).norm_sqr()
        + hd.br.iter().map(|c| c.norm_sqr()).sum::<f64>();
    (basis, res.sqrt())
}

/// Outcome of repeated evolve-and-project steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ZenoResult {
    pub dt: f64,
    pub n: usize,
    /// Probability of finding the particle in the wells at each projection,
    /// given it was there after the previous one.
    pub survival_series: Vec<f64>,
    /// Product of `survival_series`: probability of n null results.
    pub record_probability: f64,
    /// Normalized well amplitudes after each projection (index 0 is ψ0).
    pub states: Vec<[C64; 2]>,
    pub final_wells_state: [C64; 2],
    /// Fitted C in a bright amplitude shrinking by 1 − C·dt² per step.
    pub c_estimate: f64,
    /// Σ_r (Ω₁ᵣ² + Ω₂ᵣ²)/2 for comparison with `c_estimate`.
    pub c_prediction: f64,
}

impl ZenoResult {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|k| k as f64 * self.dt).collect()
    }

    pub fn final_occupations(&self) -> (f64, f64) {
        (self.final_wells_state[0].norm_sqr(), self.final_wells_state[1].norm_sqr())
    }
}

fn wells_only(m: &BandModel, psi0: &WaveFunction) -> Result<[C64; 2]> {
    psi0.check(m)?;
    let outside = psi0.reservoir_population();
    if outside > NORM_TOL {
        return Err(Error::InvalidState(format!(
            "initial state has reservoir population {outside}"
        )));
    }
    Ok([psi0.b1, psi0.b2])
}

pub fn zeno_project_sequence(m: &BandModel, psi0: &WaveFunction, dt: f64, n: usize) -> Result<ZenoResult> {
    let spectrum = m.spectrum()?;
    zeno_with_spectrum(m, &spectrum, psi0, dt, n)
}

/// As [`zeno_project_sequence`] with a spectrum computed once by the caller.
pub fn zeno_with_spectrum(
    m: &BandModel,
    spectrum: &BandSpectrum,
    psi0: &WaveFunction,
    dt: f64,
    n: usize,
) -> Result<ZenoResult> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidGrid(format!("projection interval must be positive, got {dt}")));
    }
    if n == 0 {
        return Err(Error::InvalidGrid("need at least one projection".into()));
    }
    let start = wells_only(m, psi0)?;
    m.check_horizon(n as f64 * dt)?;
    let k = spectrum.wells_propagator(dt);
    let (_, bright) = m.dressed();
    let bright_amp = |s: &[C64; 2]| s[0] * bright[0] + s[1] * bright[1];

    let mut state = start;
    let mut states = vec![start];
    let mut survival_series = Vec::with_capacity(n);
    let mut log_norm = 0.0;
    let mut log_bright = vec![bright_amp(&state).norm().ln()];
    for step in 0..n {
        let next = [
            k[(0, 0)] * state[0] + k[(0, 1)] * state[1],
            k[(1, 0)] * state[0] + k[(1, 1)] * state[1],
        ];
        let p = next[0].norm_sqr() + next[1].norm_sqr();
        if p.is_nan() || p <= 0.0 {
            return Err(Error::VanishingNorm {
                t: (step + 1) as f64 * dt,
                norm: p,
            });
        }
        let s = p.sqrt();
        state = [next[0] / s, next[1] / s];
        survival_series.push(p.min(1.0));
        log_norm += s.ln();
        log_bright.push(bright_amp(&state).norm().ln() + log_norm);
        states.push(state);
    }

    let direct = (1.0 - (bright[0] * (k[(0, 0)] * bright[0] + k[(0, 1)] * bright[1])
        + bright[1] * (k[(1, 0)] * bright[0] + k[(1, 1)] * bright[1]))
        .norm())
        / (dt * dt);
    let c_estimate = if log_bright.iter().all(|v| v.is_finite()) && n >= 1 {
        let xs: Vec<f64> = (0..=n).map(|i| i as f64).collect();
        let slope = ls_slope(&xs, &log_bright);
        -slope.exp_m1() / (dt * dt)
    } else {
        direct
    };
    let w = m.coupling_norm();
    Ok(ZenoResult {
        dt,
        n,
        record_probability: survival_series.iter().product(),
        survival_series,
        final_wells_state: state,
        states,
        c_estimate,
        c_prediction: 0.5 * m.n_levels as f64 * w * w,
    })
}

/// Where the no-detection probability P₀(dt) comes from.
#[derive(Debug, Clone)]
pub enum LossSource<'a> {
    /// Closed-form wide-band survival from |1⟩.
    Analytic { gamma: f64, eps: f64 },
    /// Band model started from `psi0` (inside the wells).
    Band {
        model: &'a BandModel,
        psi0: WaveFunction,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub dts: Vec<f64>,
    /// 1 − P₀(dt) at each dt.
    pub losses: Vec<f64>,
}

/// `n` points from `a` to `b`, evenly spaced in log.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    let mut v: Vec<f64> = (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect();
    v[0] = a;
    v[n - 1] = b;
    v
}

/// 1 − P₀(dt) for each dt.
pub fn survival_losses(source: &LossSource<'_>, dts: &[f64]) -> Result<Vec<f64>> {
    if dts.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::InvalidGrid("intervals must be positive".into()));
    }
    match source {
        LossSource::Analytic { gamma, eps } => dts
            .iter()
            .map(|&dt| survival_probability(*gamma, *eps, TimePoint::At(dt)).map(|p| 1.0 - p))
            .collect(),
        LossSource::Band { model, psi0 } => {
            let start = wells_only(model, psi0)?;
            if let Some(&worst) = dts.iter().max_by(|a, b| a.total_cmp(b)) {
                model.check_horizon(worst)?;
            }
            let spectrum = model.spectrum()?;
            Ok(dts
                .iter()
                .map(|&dt| {
                    let k = spectrum.wells_propagator(dt);
                    let a = k[(0, 0)] * start[0] + k[(0, 1)] * start[1];
                    let b = k[(1, 0)] * start[0] + k[(1, 1)] * start[1];
                    1.0 - a.norm_sqr() - b.norm_sqr()
                })
                .collect())
        }
    }
}

/// Least-squares slope of log(1 − P₀) against log(dt).
pub fn short_time_exponent(source: &LossSource<'_>, dts: &[f64]) -> Result<ScalingFit> {
    if dts.len() < 8 {
        return Err(Error::InvalidGrid(format!("need at least 8 intervals, got {}", dts.len())));
    }
    if dts.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::InvalidGrid("intervals must be increasing".into()));
    }
    if let LossSource::Band { model, .. } = source {
        let product = dts[dts.len() - 1] * model.bandwidth();
        if product > SHORT_TIME_LIMIT {
            return Err(Error::ShortTimeWindow { product });
        }
    }
    let losses = survival_losses(source, dts)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = dts
        .iter()
        .zip(&losses)
        .filter(|(_, &l)| l >= LOSS_FLOOR)
        .map(|(d, l)| (d.ln(), l.ln()))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "only {} of {} losses exceed {LOSS_FLOOR:e}",
            xs.len(),
            dts.len()
        )));
    }
    Ok(ScalingFit {
        exponent: ls_slope(&xs, &ys),
        dts: dts.to_vec(),
        losses,
    })
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

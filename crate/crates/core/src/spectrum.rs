//! Exact eigen-decomposition of a "star" Hamiltonian: one hub state coupled
//! to a set of mutually uncoupled spoke states.
//!
//! The flat-band tunneling Hamiltonian has this shape once the wells are
//! rotated into bright and dark combinations: the bright state is the hub,
//! every reservoir level is a spoke with coupling √(Ω₁² + Ω₂²), and the dark
//! state is one more spoke whose coupling is Ω₁Ω₂(E₁ − E₂)/(Ω₁² + Ω₂²).
//!
//! With spoke poles pⱼ and couplings sⱼ, the eigenvalues that involve the hub
//! are the roots of the secular function
//!
//! f(λ) = λ − h − Σⱼ sⱼ²/(λ − pⱼ),
//!
//! which increases monotonically between consecutive poles, so there is
//! exactly one root per gap plus one below and one above all poles. Each root
//! is stored as an offset from its nearest pole so that λ − pⱼ is always
//! formed without cancellation. Spokes with zero coupling and groups of
//! coincident poles are deflated before the secular solve.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Sparse real vector in the original basis.
pub(crate) type Sparse = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub(crate) struct Spoke {
    pub pole: f64,
    pub coupling: f64,
    pub basis: Sparse,
}

#[derive(Debug, Clone)]
enum ModeKind {
    /// Hub coefficient of the normalized eigenvector; spoke j carries
    /// `hub · sⱼ / (λ − pⱼ)`.
    Secular { anchor: usize, offset: f64, hub: f64 },
    /// Explicit eigenvector (deflated spoke combination or isolated hub).
    Explicit(Sparse),
}

#[derive(Debug, Clone)]
struct Mode {
    value: f64,
    kind: ModeKind,
}

/// All eigenpairs of a star Hamiltonian in compact form.
#[derive(Debug, Clone)]
pub struct Spectrum {
    dim: usize,
    hub_basis: Sparse,
    /// Active spokes, sorted by pole, all with non-zero coupling.
    spokes: Vec<Spoke>,
    modes: Vec<Mode>,
}

const MAX_ITER: usize = 200;

impl Spectrum {
    pub(crate) fn new(
        dim: usize,
        hub_energy: f64,
        hub_basis: Sparse,
        spokes: Vec<Spoke>,
    ) -> Result<Self> {
        let scale = spokes
            .iter()
            .map(|s| s.pole.abs().max(s.coupling.abs()))
            .fold(hub_energy.abs(), f64::max)
            .max(f64::MIN_POSITIVE);
        let zero_coupling = 1e-15 * scale;
        let merge_tol = 1e-13 * scale;

        let mut modes = Vec::with_capacity(dim);
        let mut live: Vec<Spoke> = Vec::with_capacity(spokes.len());
        for s in spokes {
            if !(s.pole.is_finite() && s.coupling.is_finite()) {
                return Err(Error::Diagonalization("non-finite matrix element".into()));
            }
            if s.coupling.abs() <= zero_coupling {
                modes.push(Mode {
                    value: s.pole,
                    kind: ModeKind::Explicit(s.basis),
                });
            } else {
                live.push(s);
            }
        }
        live.sort_by(|a, b| a.pole.total_cmp(&b.pole));

        // merge coincident poles, deflating the orthogonal combinations
        let mut active: Vec<Spoke> = Vec::with_capacity(live.len());
        let mut i = 0;
        while i < live.len() {
            let mut j = i + 1;
            while j < live.len() && live[j].pole - live[i].pole <= merge_tol {
                j += 1;
            }
            if j - i == 1 {
                active.push(live[i].clone());
            } else {
                let group = &live[i..j];
                let (merged, deflated) = merge_group(group);
                active.push(merged);
                modes.extend(deflated);
            }
            i = j;
        }

        if active.is_empty() {
            modes.push(Mode {
                value: hub_energy,
                kind: ModeKind::Explicit(hub_basis.clone()),
            });
        } else {
            let poles: Vec<f64> = active.iter().map(|s| s.pole).collect();
            let weights: Vec<f64> = active.iter().map(|s| s.coupling * s.coupling).collect();
            let m = poles.len();
            let total: f64 = weights.iter().sum();
            let secular: Vec<Mode> = (0..=m)
                .into_par_iter()
                .map(|gap| solve_gap(&poles, &weights, hub_energy, total, gap))
                .collect::<Result<Vec<_>>>()?;
            modes.extend(secular);
        }
        if modes.len() != dim {
            return Err(Error::Diagonalization(format!(
                "found {} eigenpairs for dimension {dim}",
                modes.len()
            )));
        }
        Ok(Spectrum {
            dim,
            hub_basis,
            spokes: active,
            modes,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.value).collect()
    }

    #[inline]
    fn gap_to(&self, kind_anchor: usize, offset: f64, j: usize) -> f64 {
        (self.spokes[kind_anchor].pole - self.spokes[j].pole) + offset
    }

    #[cfg(test)]
    /// Component of eigenvector `k` on original basis index `idx`.
    pub(crate) fn component(&self, k: usize, idx: usize) -> f64 {
        match &self.modes[k].kind {
            ModeKind::Explicit(v) => v.iter().filter(|(i, _)| *i == idx).map(|(_, x)| x).sum(),
            ModeKind::Secular { anchor, offset, hub } => {
                let mut c: f64 = self
                    .hub_basis
                    .iter()
                    .filter(|(i, _)| *i == idx)
                    .map(|(_, x)| hub * x)
                    .sum();
                for (j, s) in self.spokes.iter().enumerate() {
                    for &(i, x) in &s.basis {
                        if i == idx {
                            c += hub * s.coupling / self.gap_to(*anchor, *offset, j) * x;
                        }
                    }
                }
                c
            }
        }
    }

    /// Components of every eigenvector on a few original basis indices.
    pub(crate) fn components_on(&self, idx: &[usize]) -> Vec<Vec<f64>> {
        // spokes touching the requested indices
        let touching: Vec<(usize, Vec<(usize, f64)>)> = self
            .spokes
            .iter()
            .enumerate()
            .filter_map(|(j, s)| {
                let hits: Vec<(usize, f64)> = idx
                    .iter()
                    .enumerate()
                    .filter_map(|(slot, &want)| {
                        let x: f64 = s.basis.iter().filter(|(i, _)| *i == want).map(|(_, x)| x).sum();
                        (x != 0.0).then_some((slot, x))
                    })
                    .collect();
                (!hits.is_empty()).then_some((j, hits))
            })
            .collect();
        let hub_proj: Vec<f64> = idx
            .iter()
            .map(|&want| self.hub_basis.iter().filter(|(i, _)| *i == want).map(|(_, x)| x).sum())
            .collect();
        self.modes
            .par_iter()
            .map(|m| match &m.kind {
                ModeKind::Explicit(v) => idx
                    .iter()
                    .map(|&want| v.iter().filter(|(i, _)| *i == want).map(|(_, x)| x).sum())
                    .collect(),
                ModeKind::Secular { anchor, offset, hub } => {
                    let mut out: Vec<f64> = hub_proj.iter().map(|h| hub * h).collect();
                    for (j, hits) in &touching {
                        let f = hub * self.spokes[*j].coupling / self.gap_to(*anchor, *offset, *j);
                        for &(slot, x) in hits {
                            out[slot] += f * x;
                        }
                    }
                    out
                }
            })
            .collect()
    }

    /// ⟨k|ψ⟩ for every eigenvector `k`.
    pub(crate) fn overlaps(&self, psi: &[C64]) -> Vec<C64> {
        let proj = |basis: &Sparse| -> C64 { basis.iter().map(|&(i, x)| psi[i] * x).sum() };
        let hub_proj = proj(&self.hub_basis);
        let spoke_proj: Vec<(usize, C64)> = self
            .spokes
            .iter()
            .enumerate()
            .map(|(j, s)| (j, proj(&s.basis)))
            .filter(|(_, z)| *z != C64::new(0.0, 0.0))
            .collect();
        self.modes
            .par_iter()
            .map(|m| match &m.kind {
                ModeKind::Explicit(v) => proj(v),
                ModeKind::Secular { anchor, offset, hub } => {
                    let mut acc = hub_proj;
                    for &(j, z) in &spoke_proj {
                        acc += z * (self.spokes[j].coupling / self.gap_to(*anchor, *offset, j));
                    }
                    acc * *hub
                }
            })
            .collect()
    }

    /// Σₖ aₖ|k⟩ in the original basis.
    pub(crate) fn synthesize(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        let mut hub_amp = C64::new(0.0, 0.0);
        for (m, &a) in self.modes.iter().zip(coeffs) {
            match &m.kind {
                ModeKind::Explicit(v) => {
                    for &(i, x) in v {
                        out[i] += a * x;
                    }
                }
                ModeKind::Secular { hub, .. } => hub_amp += a * *hub,
            }
        }
        for &(i, x) in &self.hub_basis {
            out[i] += hub_amp * x;
        }
        let secular: Vec<(usize, f64, C64)> = self
            .modes
            .iter()
            .zip(coeffs)
            .filter_map(|(m, &a)| match m.kind {
                ModeKind::Secular { anchor, offset, hub } => Some((anchor, offset, a * hub)),
                ModeKind::Explicit(_) => None,
            })
            .collect();
        let spoke_amps: Vec<C64> = (0..self.spokes.len())
            .into_par_iter()
            .map(|j| {
                let s = self.spokes[j].coupling;
                secular
                    .iter()
                    .map(|&(anchor, offset, a)| a * (s / self.gap_to(anchor, offset, j)))
                    .sum()
            })
            .collect();
        for (s, amp) in self.spokes.iter().zip(spoke_amps) {
            for &(i, x) in &s.basis {
                out[i] += amp * x;
            }
        }
        out
    }
}

fn merge_group(group: &[Spoke]) -> (Spoke, Vec<Mode>) {
    let m = group.len();
    let pole = group.iter().map(|s| s.pole).sum::<f64>() / m as f64;
    let norm = group.iter().map(|s| s.coupling * s.coupling).sum::<f64>().sqrt();
    let unit: Vec<f64> = group.iter().map(|s| s.coupling / norm).collect();
    let combine = |w: &[f64]| -> Sparse {
        let mut v: Sparse = Vec::new();
        for (s, &c) in group.iter().zip(w) {
            for &(i, x) in &s.basis {
                v.push((i, c * x));
            }
        }
        v
    };
    let merged = Spoke {
        pole,
        coupling: norm,
        basis: combine(&unit),
    };
    // orthonormal complement of `unit` by Gram–Schmidt on the canonical vectors
    let mut basis: Vec<Vec<f64>> = vec![unit];
    let mut deflated = Vec::with_capacity(m - 1);
    for e in 0..m {
        if basis.len() == m {
            break;
        }
        let mut v = vec![0.0; m];
        v[e] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= d * y;
                }
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            deflated.push(Mode {
                value: pole,
                kind: ModeKind::Explicit(combine(&v)),
            });
            basis.push(v);
        }
    }
    (merged, deflated)
}

/// Secular function relative to pole `anchor`: returns (f, f').
#[inline]
fn secular(poles: &[f64], weights: &[f64], hub: f64, anchor: usize, mu: f64) -> (f64, f64) {
    let pa = poles[anchor];
    let mut f = pa - hub + mu;
    let mut df = 1.0;
    for (&p, &w) in poles.iter().zip(weights) {
        let d = (pa - p) + mu;
        let inv = 1.0 / d;
        f -= w * inv;
        df += w * inv * inv;
    }
    (f, df)
}

/// Root in gap `gap`: 0 is below every pole, `m` above every pole.
fn solve_gap(poles: &[f64], weights: &[f64], hub: f64, total: f64, gap: usize) -> Result<Mode> {
    let m = poles.len();
    let (anchor, mut lo, mut hi) = if gap == 0 {
        let d = (poles[0] - hub).abs() + total + 1.0;
        (0, -d, 0.0)
    } else if gap == m {
        let d = (poles[m - 1] - hub).abs() + total + 1.0;
        (m - 1, 0.0, d)
    } else {
        let width = poles[gap] - poles[gap - 1];
        let (f_mid, _) = secular(poles, weights, hub, gap - 1, 0.5 * width);
        if f_mid >= 0.0 {
            (gap - 1, 0.0, 0.5 * width)
        } else {
            (gap, -0.5 * width, 0.0)
        }
    };
    // f(lo) < 0 < f(hi); the endpoint at the anchor pole is open
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let (f, df) = secular(poles, weights, hub, anchor, mu);
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        // rational model A − W/μ fitted to (f, f') at μ
        let w = df * mu * mu;
        let a = f + w / mu;
        let mut next = if a != 0.0 { w / a } else { f64::NAN };
        if !(next > lo && next < hi) || !next.is_finite() {
            next = mu - f / df;
        }
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * mu.abs().max(f64::MIN_POSITIVE) {
            mu = next;
            break;
        }
        if (next - mu).abs() <= 2.0 * f64::EPSILON * mu.abs() {
            mu = next;
            break;
        }
        mu = next;
    }
    if !mu.is_finite() || mu == 0.0 {
        return Err(Error::Diagonalization(format!("secular root {gap} did not converge")));
    }
    let mut norm2 = 1.0;
    for (&p, &w) in poles.iter().zip(weights) {
        let d = (poles[anchor] - p) + mu;
        norm2 += w / (d * d);
    }
    Ok(Mode {
        value: poles[anchor] + mu,
        kind: ModeKind::Secular {
            anchor,
            offset: mu,
            hub: 1.0 / norm2.sqrt(),
        },
    })
}

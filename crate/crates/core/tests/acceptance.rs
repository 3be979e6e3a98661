//! One check per acceptance criterion. Each prints a single PASS/FAIL line.

use std::time::{Duration, Instant};

use contransfer::analytic::{conditional_occupations, steady_conditional, unconditional_occupations};
use contransfer::bandlimited::{
    bound_state, build_band_model, log_spaced, short_time_exponent, zeno_with_spectrum, LossSource,
};
use contransfer::lindblad::{
    conditional_from_unconditional, evolve_unconditional, steady_conditional_numeric, uniform_grid,
};
use contransfer::trajectory::{ensemble_average, null_result_series};
use contransfer::{ConditionalState, Parity, ReducedDensityMatrix, WaveFunction, WellParams};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id} [{verdict}] {name}: {detail}");
    assert!(pass, "criterion {id} failed: {detail}");
}

fn symmetric(eps: f64) -> WellParams {
    WellParams::from_rates(1.0, 1.0, eps, Parity::Even).unwrap()
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[test]
fn criterion_1_analytic_lindblad_agreement() {
    let start = Instant::now();
    let grid = uniform_grid(10.0, 1000);
    let mut worst = 0.0f64;
    for eps in [0.0, 0.5] {
        let series = evolve_unconditional(&symmetric(eps), &ReducedDensityMatrix::left(), &grid).unwrap();
        for (o, &t) in series.occupations().iter().zip(&grid) {
            let a = unconditional_occupations(1.0, eps, t).unwrap();
            worst = worst.max((o.p1 - a.p1).abs()).max((o.p2 - a.p2).abs());
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        "analytic vs Lindblad",
        worst <= 1e-8 && elapsed < Duration::from_secs(1),
        format!("max deviation {worst:.3e} (<= 1e-8), {:.3} s (< 1 s)", secs(elapsed)),
    );
}

#[test]
fn criterion_2_unconditional_asymptote() {
    let a = evolve_unconditional(&symmetric(0.0), &ReducedDensityMatrix::left(), &[0.0, 40.0]).unwrap();
    let b = evolve_unconditional(&symmetric(0.5), &ReducedDensityMatrix::left(), &[0.0, 60.0]).unwrap();
    let oa = a.occupations()[1];
    let ob = b.occupations()[1];
    let pass = (oa.p1 - 0.25).abs() <= 1e-6
        && (oa.p2 - 0.25).abs() <= 1e-6
        && ob.p1 <= 1e-3
        && ob.p2 <= 1e-3;
    report(
        2,
        "unconditional asymptote",
        pass,
        format!(
            "eps=0, t=40: ({:.9}, {:.9}) vs 0.25 +- 1e-6; eps=0.5, t=60: ({:.3e}, {:.3e}) <= 1e-3",
            oa.p1, oa.p2, ob.p1, ob.p2
        ),
    );
}

#[test]
fn criterion_3_conditional_asymptote() {
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for eps in [0.0, 0.5] {
        let series = evolve_unconditional(&symmetric(eps), &ReducedDensityMatrix::left(), &[0.0, 40.0]).unwrap();
        let c = conditional_from_unconditional(&series).unwrap();
        let s = &c.states[1];
        worst = worst.max((s.p11() - 0.5).abs()).max((s.p22() - 0.5).abs());
        detail.push(format!("eps={eps}: ({:.9}, {:.9})", s.p11(), s.p22()));
    }
    report(
        3,
        "conditional asymptote",
        worst <= 1e-6,
        format!("{}; max |rho - 1/2| = {worst:.3e} (<= 1e-6)", detail.join(", ")),
    );
}

#[test]
fn criterion_4_null_result_identity() {
    let start = Instant::now();
    let grid = uniform_grid(10.0, 199);
    let mut worst = 0.0f64;
    let mut worst_norm = 0.0f64;
    for g2 in [0.25, 1.0, 4.0] {
        for eps in [0.0, 0.5] {
            for parity in [Parity::Even, Parity::Odd] {
                let p = WellParams::from_rates(1.0, g2, eps, parity).unwrap();
                let lind = evolve_unconditional(&p, &ReducedDensityMatrix::left(), &grid).unwrap();
                let cond = conditional_from_unconditional(&lind).unwrap();
                let null = null_result_series(&p, &ConditionalState::left(), &grid).unwrap();
                for (k, (a, b)) in null.states.iter().zip(&cond.states).enumerate() {
                    let d = (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    worst = worst.max(d);
                    worst_norm = worst_norm.max((null.null_probability[k] - cond.survival[k]).abs());
                }
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        4,
        "null-result evolution equals normalized Lindblad wells block",
        worst <= 1e-9 && worst_norm <= 1e-9 && elapsed < Duration::from_secs(5),
        format!(
            "max state deviation {worst:.3e}, max record-probability deviation {worst_norm:.3e} (<= 1e-9), {:.3} s (< 5 s)",
            secs(elapsed)
        ),
    );
}

#[test]
fn criterion_5_trajectory_unraveling() {
    const M: usize = 20_000;
    const SEED: u64 = 20_240_611;
    let start = Instant::now();
    let p = symmetric(0.0);
    let grid = uniform_grid(20.0, 40);
    let ens = ensemble_average(&p, &ConditionalState::left(), &grid, M, SEED).unwrap();
    let elapsed = start.elapsed();
    let lind = evolve_unconditional(&p, &ReducedDensityMatrix::left(), &grid).unwrap();
    let mut worst_z = 0.0f64;
    let mut within = true;
    for (k, s) in lind.states.iter().enumerate() {
        for i in 0..3 {
            let exact = s.get(i, i).re;
            let dev = (ens.mean[k][i] - exact).abs();
            let se = ens.std_err[k][i];
            if dev > 4.0 * se + 1e-12 {
                within = false;
            }
            if se > 0.0 {
                worst_z = worst_z.max(dev / se);
            }
        }
    }
    let frac = *ens.no_jump_fraction.last().unwrap();
    let band = 3.0 * (0.25 / M as f64).sqrt();
    let rerun = ensemble_average(&p, &ConditionalState::left(), &grid, M, SEED).unwrap();
    let identical = rerun == ens;
    report(
        5,
        "trajectory ensemble reproduces Lindblad",
        within && (frac - 0.5).abs() <= band && identical && elapsed < Duration::from_secs(30),
        format!(
            "max |dev|/SE = {worst_z:.2} (<= 4), no-jump fraction at t=20 {frac:.5} (0.5 +- {band:.5}), rerun identical: {identical}, {:.2} s (< 30 s)",
            secs(elapsed)
        ),
    );
}

fn band_deviation(n: usize, w: f64, grid: &[f64]) -> f64 {
    let p = symmetric(0.0);
    let m = build_band_model(&p, n, w).unwrap();
    let spectrum = m.spectrum().unwrap();
    let amps = spectrum.wells_amplitudes(&WaveFunction::left(n), grid).unwrap();
    let lind = evolve_unconditional(&p, &ReducedDensityMatrix::left(), grid).unwrap();
    amps.iter()
        .zip(lind.occupations())
        .map(|(b, o)| (b[0].norm_sqr() - o.p1).abs().max((b[1].norm_sqr() - o.p2).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn criterion_6_band_model_convergence() {
    let start = Instant::now();
    let grid = uniform_grid(8.0, 800);
    let coarse = band_deviation(4000, 40.0, &grid);
    let fine = band_deviation(8000, 80.0, &grid);
    let mut worst_res = 0.0f64;
    for parity in [Parity::Even, Parity::Odd] {
        for (g2, n, w) in [(1.0, 4000, 40.0), (0.3, 8000, 80.0), (2.0, 500, 10.0)] {
            let p = WellParams::from_rates(1.0, g2, 0.0, parity).unwrap();
            let m = build_band_model(&p, n, w).unwrap();
            worst_res = worst_res.max(bound_state(&m).1 / m.norm());
        }
    }
    let elapsed = start.elapsed();
    report(
        6,
        "band model converges to the wide-band Lindblad solution",
        coarse <= 0.02 && fine < coarse && worst_res <= 1e-12 && elapsed < Duration::from_secs(60),
        format!(
            "max deviation N=4000,W=40: {coarse:.5} (<= 0.02); N=8000,W=80: {fine:.5} (< previous); dark residual/|H| {worst_res:.2e} (<= 1e-12); {:.2} s (< 60 s)",
            secs(elapsed)
        ),
    );
}

#[test]
fn criterion_7_short_time_scaling() {
    let dts = log_spaced(1e-3, 1e-2, 10);
    let analytic = short_time_exponent(&LossSource::Analytic { gamma: 1.0, eps: 0.0 }, &dts).unwrap();
    let m = build_band_model(&symmetric(0.0), 2000, 20.0).unwrap();
    let band = short_time_exponent(
        &LossSource::Band {
            model: &m,
            psi0: WaveFunction::left(2000),
        },
        &dts,
    )
    .unwrap();
    report(
        7,
        "short-time loss exponent",
        (analytic.exponent - 1.0).abs() <= 0.02 && (band.exponent - 2.0).abs() <= 0.10,
        format!(
            "analytic {:.4} (1 +- 0.02), band W=20 {:.4} (2 +- 0.10)",
            analytic.exponent, band.exponent
        ),
    );
}

#[test]
fn criterion_8_zeno_locking() {
    let n_levels = 2000;
    let m = build_band_model(&symmetric(0.0), n_levels, 20.0).unwrap();
    let spectrum = m.spectrum().unwrap();
    let psi0 = WaveFunction::left(n_levels);
    let total: f64 = 2.0;
    let mut finals = Vec::new();
    let mut predicted = 0.0;
    for dt in [1e-1, 3e-2, 1e-2, 3e-3, 1e-3] {
        let n = (total / dt).round() as usize;
        let z = zeno_with_spectrum(&m, &spectrum, &psi0, total / n as f64, n).unwrap();
        finals.push(z.final_occupations().0);
        // dark part kept, bright part shrunk by exp(−C·t·dt)
        let b = (-z.c_estimate * total * z.dt).exp();
        predicted = 0.25 * (1.0 + b).powi(2) / (0.5 * (1.0 + b * b));
    }
    let monotone = finals.windows(2).all(|w| w[1] >= w[0]);
    let last = *finals.last().unwrap();

    let wide = zeno_with_spectrum(&m, &spectrum, &psi0, 0.5, 4).unwrap();
    let mut worst = 0.0f64;
    for (s, t) in wide.states.iter().zip(wide.times()) {
        let c = conditional_occupations(1.0, 0.0, t).unwrap();
        worst = worst.max((s[0].norm_sqr() - c.p1).abs()).max((s[1].norm_sqr() - c.p2).abs());
    }
    report(
        8,
        "Zeno locking for short projection intervals, none for long ones",
        monotone && last >= 0.99 && worst <= 0.05,
        format!(
            "final |1> occupation {:?} (nondecreasing: {monotone}), {last:.5} at dt=1e-3 (>= 0.99, fitted-C prediction {predicted:.5}); dt*W=10 max deviation from conditional {worst:.4} (<= 0.05)",
            finals.iter().map(|x| format!("{x:.5}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_9_steady_state_sweep() {
    let chis = [-4.0, -2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0, 4.0];
    let mut worst = 0.0f64;
    let mut worst_even = 0.0f64;
    let mut at_one = 0.0f64;
    let mut biased = true;
    for &chi in &chis {
        let p = WellParams::from_rates(1.0, chi * chi, 0.0, Parity::from_sign(chi)).unwrap();
        let num = steady_conditional_numeric(&p).unwrap().occupations;
        let closed = steady_conditional(chi).unwrap();
        worst = worst.max((num.p1 - closed.p1).abs()).max((num.p2 - closed.p2).abs());
        let q = WellParams::from_rates(1.0, chi * chi, 0.0, Parity::from_sign(-chi)).unwrap();
        let mirror = steady_conditional_numeric(&q).unwrap().occupations;
        worst_even = worst_even.max((num.p1 - mirror.p1).abs()).max((num.p2 - mirror.p2).abs());
        if chi.abs() == 1.0 {
            at_one = at_one.max((num.p1 - 0.5).abs()).max((num.p2 - 0.5).abs());
        }
        if chi.abs() < 1.0 && num.p2 <= num.p1 {
            biased = false;
        }
    }
    report(
        9,
        "steady conditional occupations vs closed form",
        worst <= 1e-6 && worst_even <= 1e-6 && at_one <= 1e-6 && biased,
        format!(
            "max deviation {worst:.2e}, parity asymmetry {worst_even:.2e}, |chi|=1 offset {at_one:.2e} (all <= 1e-6), right-well bias for |chi|<1: {biased}"
        ),
    );
}

//! Dispatch from a [`RunConfig`] to the engines.

use std::path::PathBuf;

use contransfer::analytic::steady_conditional;
use contransfer::bandlimited::{build_band_model, log_spaced, short_time_exponent, zeno_project_sequence, LossSource};
use contransfer::lindblad::{evolve_unconditional, steady_conditional_numeric, uniform_grid};
use contransfer::trajectory::{ensemble_average, null_result_series};
use contransfer::{ConditionalState, Parity, ReducedDensityMatrix, WaveFunction, WellParams, EMPTY, LEFT, RIGHT};

use crate::config::{RunConfig, Scenario};
use crate::output::{emit_csv, manifest_path};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Columns, rows and a few summary lines for the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub rows: usize,
}

fn params(cfg: &RunConfig, gamma2: f64) -> Result<WellParams, CliError> {
    Ok(WellParams::from_rates(cfg.gamma1, gamma2, cfg.eps, Parity::from_sign(cfg.eta))?)
}

fn grid(cfg: &RunConfig) -> Vec<f64> {
    let (n, _) = cfg.output_steps().expect("t_max is required for time series");
    uniform_grid(cfg.t_max.unwrap(), n)
}

fn need<T: Copy>(v: Option<T>) -> T {
    v.expect("required keys are checked when the config is resolved")
}

pub fn compute(cfg: &RunConfig) -> Result<Table, CliError> {
    let mut notes = Vec::new();
    let (header, rows): (Vec<&'static str>, Vec<Vec<f64>>) = match cfg.scenario {
        Scenario::Unconditional => {
            let p = params(cfg, need(cfg.gamma2))?;
            let series = evolve_unconditional(&p, &ReducedDensityMatrix::left(), &grid(cfg))?;
            let rows = series
                .times
                .iter()
                .zip(&series.states)
                .map(|(&t, s)| {
                    let c = s.get(LEFT, RIGHT);
                    vec![t, s.get(EMPTY, EMPTY).re, s.get(LEFT, LEFT).re, s.get(RIGHT, RIGHT).re, c.re, c.im]
                })
                .collect();
            (vec!["t", "sigma00", "sigma11", "sigma22", "re_sigma12", "im_sigma12"], rows)
        }
        Scenario::NullResult => {
            let p = params(cfg, need(cfg.gamma2))?;
            let series = null_result_series(&p, &ConditionalState::left(), &grid(cfg))?;
            let rows = series
                .times
                .iter()
                .zip(&series.states)
                .zip(&series.null_probability)
                .map(|((&t, s), &p0)| {
                    let c = s.coherence();
                    vec![t, s.p11(), s.p22(), c.re, c.im, p0]
                })
                .collect();
            (vec!["t", "rho11", "rho22", "re_rho12", "im_rho12", "null_record_prob"], rows)
        }
        Scenario::Trajectories => {
            let p = params(cfg, need(cfg.gamma2))?;
            let ens = ensemble_average(&p, &ConditionalState::left(), &grid(cfg), need(cfg.n_traj), cfg.master_seed)?;
            let rows = (0..ens.times.len())
                .map(|k| {
                    let (m, e) = (ens.mean[k], ens.std_err[k]);
                    vec![ens.times[k], m[0], m[1], m[2], e[0], e[1], e[2], ens.no_jump_fraction[k]]
                })
                .collect();
            (
                vec![
                    "t",
                    "mean_sigma00",
                    "mean_sigma11",
                    "mean_sigma22",
                    "se_sigma00",
                    "se_sigma11",
                    "se_sigma22",
                    "no_jump_fraction",
                ],
                rows,
            )
        }
        Scenario::Band => {
            let p = params(cfg, need(cfg.gamma2))?;
            let n = need(cfg.n_levels);
            let m = build_band_model(&p, n, need(cfg.bandwidth))?;
            let times = grid(cfg);
            m.check_horizon(*times.last().unwrap())?;
            let amps = m.spectrum()?.wells_amplitudes(&WaveFunction::left(n), &times)?;
            let lind = evolve_unconditional(&p, &ReducedDensityMatrix::left(), &times)?;
            notes.push(format!("recurrence_limit = {}", m.recurrence_limit()));
            let rows = times
                .iter()
                .zip(&amps)
                .zip(lind.occupations())
                .map(|((&t, b), o)| {
                    let (p1, p2) = (b[0].norm_sqr(), b[1].norm_sqr());
                    vec![t, p1, p2, 1.0 - p1 - p2, o.p1, o.p2]
                })
                .collect();
            (vec!["t", "b1_sq", "b2_sq", "reservoir", "lindblad_sigma11", "lindblad_sigma22"], rows)
        }
        Scenario::Zeno => {
            let p = params(cfg, need(cfg.gamma2))?;
            let n = need(cfg.n_levels);
            let m = build_band_model(&p, n, need(cfg.bandwidth))?;
            let z = zeno_project_sequence(&m, &WaveFunction::left(n), need(cfg.dt_proj), need(cfg.n_proj))?;
            notes.push(format!("c_estimate = {}", z.c_estimate));
            notes.push(format!("c_prediction = {}", z.c_prediction));
            let mut record = 1.0;
            let rows = z
                .states
                .iter()
                .zip(z.times())
                .enumerate()
                .map(|(k, (s, t))| {
                    let survival = if k == 0 { 1.0 } else { z.survival_series[k - 1] };
                    record *= survival;
                    vec![k as f64, t, s[0].norm_sqr(), s[1].norm_sqr(), survival, record]
                })
                .collect();
            (vec!["step", "t", "p1", "p2", "survival", "record_prob"], rows)
        }
        Scenario::ChiSweep => {
            let chis = cfg.chi_grid.clone().unwrap_or_default();
            let mut rows = Vec::with_capacity(chis.len());
            for chi in chis {
                let closed = steady_conditional(chi)?;
                let (r1, r2) = if chi == 0.0 {
                    (f64::NAN, f64::NAN)
                } else {
                    let p = WellParams::from_rates(cfg.gamma1, chi * chi * cfg.gamma1, cfg.eps, Parity::from_sign(chi))?;
                    let o = steady_conditional_numeric(&p)?.occupations;
                    (o.p1, o.p2)
                };
                rows.push(vec![chi, r1, r2, closed.p1, closed.p2]);
            }
            (vec!["chi", "rho11_ss", "rho22_ss", "rho11_closed_form", "rho22_closed_form"], rows)
        }
        Scenario::Scaling => {
            let p = params(cfg, need(cfg.gamma2))?;
            let n = need(cfg.n_levels);
            let m = build_band_model(&p, n, need(cfg.bandwidth))?;
            let dt_max = cfg.dt_proj.unwrap_or(1e-2 / cfg.gamma1);
            let dts = log_spaced(dt_max / 10.0, dt_max, cfg.n_proj.unwrap_or(10));
            let analytic = short_time_exponent(
                &LossSource::Analytic {
                    gamma: cfg.gamma1,
                    eps: cfg.eps,
                },
                &dts,
            )?;
            let band = short_time_exponent(
                &LossSource::Band {
                    model: &m,
                    psi0: WaveFunction::left(n),
                },
                &dts,
            )?;
            let rows = dts
                .iter()
                .zip(analytic.losses.iter().zip(&band.losses))
                .map(|(&dt, (&la, &lb))| vec![dt, la, lb, analytic.exponent, band.exponent])
                .collect();
            (vec!["dt", "loss_analytic", "loss_band", "fit_exponent_analytic", "fit_exponent_band"], rows)
        }
    };
    Ok(Table { header, rows, notes })
}

pub fn manifest_text(cfg: &RunConfig, table: &Table) -> String {
    let mut text = format!("# contransfer {VERSION}\n# rows = {}\n", table.rows.len());
    for note in &table.notes {
        text.push_str(&format!("# {note}\n"));
    }
    text.push_str(&cfg.to_config_text());
    text
}

/// Runs the scenario and writes the CSV and its manifest.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let table = compute(cfg)?;
    let csv_path = PathBuf::from(&cfg.out_path);
    let manifest = manifest_path(&csv_path);
    emit_csv(&table.header, &table.rows, &csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    std::fs::write(&manifest, manifest_text(cfg, &table)).map_err(|e| CliError::io(&manifest, e))?;
    Ok(RunOutput {
        csv_path,
        manifest_path: manifest,
        rows: table.rows.len(),
    })
}

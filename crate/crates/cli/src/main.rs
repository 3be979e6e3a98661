use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use contransfer_cli::{run_scenario, CliError, RawConfig};

/// Runs one scenario and writes `<out>` plus `<out>.manifest`.
#[derive(Debug, Parser)]
#[command(name = "contransfer", version)]
struct Args {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dt_out: Option<String>,
    #[arg(long)]
    n_levels: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    bandwidth: Option<String>,
    #[arg(long)]
    n_traj: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dt_proj: Option<String>,
    #[arg(long)]
    n_proj: Option<String>,
    /// Comma-separated χ values.
    #[arg(long, allow_hyphen_values = true)]
    chi_grid: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl Args {
    fn overrides(&self) -> Vec<(&'static str, &String)> {
        let pairs = [
            ("scenario", &self.scenario),
            ("gamma1", &self.gamma1),
            ("gamma2", &self.gamma2),
            ("eps", &self.eps),
            ("eta", &self.eta),
            ("t_max", &self.t_max),
            ("dt_out", &self.dt_out),
            ("n_levels", &self.n_levels),
            ("bandwidth", &self.bandwidth),
            ("n_traj", &self.n_traj),
            ("master_seed", &self.seed),
            ("dt_proj", &self.dt_proj),
            ("n_proj", &self.n_proj),
            ("chi_grid", &self.chi_grid),
            ("out_path", &self.out),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k, v))).collect()
    }
}

fn run(args: &Args) -> Result<(), CliError> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    for (key, value) in args.overrides() {
        raw.set(key, value.as_str())?;
    }
    let cfg = raw.resolve()?;
    let out = run_scenario(&cfg)?;
    println!(
        "{}: wrote {} rows to {} (manifest {})",
        cfg.scenario,
        out.rows,
        out.csv_path.display(),
        out.manifest_path.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("contransfer: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

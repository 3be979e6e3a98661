//! `key = value` run configuration with flag overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("unknown option `{0}`")]
    UnknownOverride(String),

    #[error("scenario `{scenario}` requires `{key}`")]
    MissingKey { scenario: String, key: &'static str },

    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Unconditional,
    NullResult,
    Trajectories,
    Band,
    Zeno,
    ChiSweep,
    Scaling,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Unconditional,
        Scenario::NullResult,
        Scenario::Trajectories,
        Scenario::Band,
        Scenario::Zeno,
        Scenario::ChiSweep,
        Scenario::Scaling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Unconditional => "unconditional",
            Scenario::NullResult => "null-result",
            Scenario::Trajectories => "trajectories",
            Scenario::Band => "band",
            Scenario::Zeno => "zeno",
            Scenario::ChiSweep => "chi-sweep",
            Scenario::Scaling => "scaling",
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            Scenario::Unconditional | Scenario::NullResult => &["gamma1", "gamma2", "t_max"],
            Scenario::Trajectories => &["gamma1", "gamma2", "t_max", "n_traj"],
            Scenario::Band => &["gamma1", "gamma2", "t_max", "n_levels", "bandwidth"],
            Scenario::Zeno => &["gamma1", "gamma2", "n_levels", "bandwidth", "dt_proj", "n_proj"],
            Scenario::ChiSweep => &["gamma1", "chi_grid"],
            Scenario::Scaling => &["gamma1", "gamma2", "n_levels", "bandwidth"],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.as_str()).collect();
                format!("unknown scenario `{s}` (expected one of {})", names.join(", "))
            })
    }
}

pub const KEYS: [&str; 15] = [
    "scenario",
    "gamma1",
    "gamma2",
    "eps",
    "eta",
    "t_max",
    "dt_out",
    "n_levels",
    "bandwidth",
    "n_traj",
    "master_seed",
    "dt_proj",
    "n_proj",
    "chi_grid",
    "out_path",
];

/// Validated parameters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub gamma1: f64,
    pub gamma2: Option<f64>,
    pub eps: f64,
    pub eta: f64,
    pub t_max: Option<f64>,
    pub dt_out: Option<f64>,
    pub n_levels: Option<usize>,
    pub bandwidth: Option<f64>,
    pub n_traj: Option<usize>,
    pub master_seed: u64,
    pub dt_proj: Option<f64>,
    pub n_proj: Option<usize>,
    pub chi_grid: Option<Vec<f64>>,
    pub out_path: String,
}

/// Raw key/value pairs; the line number is `None` for command-line values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Option<usize>)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (idx, full) in text.lines().enumerate() {
            let line = idx + 1;
            let content = full.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("`{key}` has no value"),
                });
            }
            if raw.entries.get(key).is_some_and(|(_, l)| l.is_some()) {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("`{key}` given twice"),
                });
            }
            raw.entries.insert(key.to_string(), (value.to_string(), Some(line)));
        }
        Ok(raw)
    }

    /// Command-line value; replaces whatever the file said.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownOverride(key.to_string()));
        }
        self.entries.insert(key.to_string(), (value.into(), None));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<(&str, Option<usize>)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn value<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|_| bad(key, v, what, line)),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.value::<f64>(key, "a real number")? {
            Some(x) if !x.is_finite() => {
                let (v, line) = self.get(key).unwrap();
                Err(bad(key, v, "a finite number", line))
            }
            other => Ok(other),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let gamma1 = self.real("gamma1")?;
        let gamma2 = self.real("gamma2")?;
        let eps = self.real("eps")?;
        let eta = self.real("eta")?;
        let t_max = self.real("t_max")?;
        let dt_out = self.real("dt_out")?;
        let n_levels = self.value("n_levels", "a non-negative integer")?;
        let bandwidth = self.real("bandwidth")?;
        let n_traj = self.value("n_traj", "a non-negative integer")?;
        let master_seed = self.value("master_seed", "an unsigned 64-bit integer")?;
        let dt_proj = self.real("dt_proj")?;
        let n_proj = self.value("n_proj", "a non-negative integer")?;
        let chi_grid = match self.get("chi_grid") {
            None => None,
            Some((v, line)) => Some(
                v.split(',')
                    .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                    .collect::<Option<Vec<f64>>>()
                    .ok_or_else(|| bad("chi_grid", v, "a comma-separated list of numbers", line))?,
            ),
        };

        let scenario: Scenario = match self.get("scenario") {
            None => return Err(ConfigError::Invalid("`scenario` is required".into())),
            Some((v, line)) => v.parse().map_err(|message| match line {
                Some(line) => ConfigError::Parse { line, message },
                None => ConfigError::Invalid(message),
            })?,
        };
        for &key in scenario.required() {
            if self.get(key).is_none() {
                return Err(ConfigError::MissingKey {
                    scenario: scenario.to_string(),
                    key,
                });
            }
        }
        let cfg = RunConfig {
            scenario,
            gamma1: gamma1.unwrap_or(1.0),
            gamma2,
            eps: eps.unwrap_or(0.0),
            eta: eta.unwrap_or(1.0),
            t_max,
            dt_out,
            n_levels,
            bandwidth,
            n_traj,
            master_seed: master_seed.unwrap_or(0),
            dt_proj,
            n_proj,
            chi_grid,
            out_path: self
                .get("out_path")
                .map(|(v, _)| v.to_string())
                .unwrap_or_else(|| format!("{scenario}.csv")),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn bad(key: &str, value: &str, what: &str, line: Option<usize>) -> ConfigError {
    let message = format!("`{key}` must be {what}, got `{value}`");
    match line {
        Some(line) => ConfigError::Parse { line, message },
        None => ConfigError::Invalid(message),
    }
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    RawConfig::parse(text)?.resolve()
}

impl RunConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.gamma1 <= 0.0 {
            return invalid(format!("gamma1 must be positive, got {}", self.gamma1));
        }
        if let Some(g2) = self.gamma2 {
            if g2 < 0.0 {
                return invalid(format!("gamma2 must be non-negative, got {g2}"));
            }
        }
        if self.eta != 1.0 && self.eta != -1.0 {
            return invalid(format!("eta must be 1 or -1, got {}", self.eta));
        }
        if let Some(t) = self.t_max {
            if t <= 0.0 {
                return invalid(format!("t_max must be positive, got {t}"));
            }
        }
        if let Some(dt) = self.dt_out {
            if dt <= 0.0 {
                return invalid(format!("dt_out must be positive, got {dt}"));
            }
            if let Some(t) = self.t_max {
                if dt > t {
                    return invalid(format!("dt_out {dt} exceeds t_max {t}"));
                }
            }
        }
        if let Some(w) = self.bandwidth {
            if w <= 0.0 {
                return invalid(format!("bandwidth must be positive, got {w}"));
            }
        }
        if self.n_levels.is_some_and(|n| n < 2) {
            return invalid("n_levels must be at least 2".into());
        }
        if self.n_traj == Some(0) {
            return invalid("n_traj must be at least 1".into());
        }
        if let Some(dt) = self.dt_proj {
            if dt <= 0.0 {
                return invalid(format!("dt_proj must be positive, got {dt}"));
            }
        }
        if self.n_proj == Some(0) {
            return invalid("n_proj must be at least 1".into());
        }
        if self.scenario == Scenario::Scaling && self.n_proj.is_some_and(|n| n < 8) {
            return invalid("scaling needs n_proj >= 8 intervals".into());
        }
        if self.chi_grid.as_ref().is_some_and(|g| g.is_empty()) {
            return invalid("chi_grid is empty".into());
        }
        if self.out_path.is_empty() {
            return invalid("out_path is empty".into());
        }
        Ok(())
    }

    /// Number of output intervals and the interval actually used.
    pub fn output_steps(&self) -> Option<(usize, f64)> {
        let t = self.t_max?;
        let dt = self.dt_out.unwrap_or(t / 100.0);
        let n = ((t / dt).round() as usize).max(1);
        Some((n, t / n as f64))
    }

    /// Every effective parameter in config syntax.
    pub fn to_config_text(&self) -> String {
        let mut lines = vec![format!("scenario = {}", self.scenario)];
        lines.push(format!("gamma1 = {}", self.gamma1));
        if let Some(g) = self.gamma2 {
            lines.push(format!("gamma2 = {g}"));
        }
        lines.push(format!("eps = {}", self.eps));
        lines.push(format!("eta = {}", self.eta));
        if let Some(t) = self.t_max {
            lines.push(format!("t_max = {t}"));
        }
        if let Some((_, dt)) = self.output_steps() {
            lines.push(format!("dt_out = {dt}"));
        }
        if let Some(n) = self.n_levels {
            lines.push(format!("n_levels = {n}"));
        }
        if let Some(w) = self.bandwidth {
            lines.push(format!("bandwidth = {w}"));
        }
        if let Some(n) = self.n_traj {
            lines.push(format!("n_traj = {n}"));
        }
        lines.push(format!("master_seed = {}", self.master_seed));
        if let Some(dt) = self.dt_proj {
            lines.push(format!("dt_proj = {dt}"));
        }
        if let Some(n) = self.n_proj {
            lines.push(format!("n_proj = {n}"));
        }
        if let Some(g) = &self.chi_grid {
            let s: Vec<String> = g.iter().map(|x| x.to_string()).collect();
            lines.push(format!("chi_grid = {}", s.join(",")));
        }
        lines.push(format!("out_path = {}", self.out_path));
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}

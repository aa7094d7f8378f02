//! Run configuration: defaults, flat key-value files and command-line overrides.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use casimir_core::config::{DEFAULT_GAMMA, DEFAULT_L0};
use casimir_core::SystemConfig;
use clap::{Args, ValueEnum};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    GeneralIntegral,
    Resonant,
    IdealVacuum,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitialState {
    Vacuum,
    Thermal,
    Cat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    K,
    P,
    Tau,
    #[value(name = "T", alias = "temperature", alias = "t")]
    Temperature,
}

impl Axis {
    pub fn column(self) -> &'static str {
        match self {
            Axis::K => "k",
            Axis::P => "p",
            Axis::Tau => "tau",
            Axis::Temperature => "temperature",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

fn enum_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

/// Every tunable setting, unset when neither a file nor a flag supplied it.
#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    /// Flat key = value file; flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Rest length of the cavity.
    #[arg(long, global = true)]
    pub q0: Option<f64>,
    /// Reservoir length.
    #[arg(long = "L0", global = true)]
    pub l0: Option<f64>,
    /// Mirror transmission parameter; `inf` for a perfect mirror.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Second mirror parameter used by the entropy and decoherence figures.
    #[arg(long, global = true)]
    pub gamma_alt: Option<f64>,
    /// Relative oscillation amplitude.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Detuning: mirror frequency in units of omega_1.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Cavity mode.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Dimensionless time eps * omega_1 * t.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Physical time; overrides --tau.
    #[arg(long, global = true)]
    pub t: Option<f64>,
    /// Temperature (k_B = 1).
    #[arg(long, global = true)]
    pub temp: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    /// Initial state of mode k.
    #[arg(long, global = true, value_enum)]
    pub state: Option<InitialState>,
    /// |alpha_0|^2 of the cat state.
    #[arg(long, global = true)]
    pub alpha2: Option<f64>,
    /// Cavity-mode cutoff; sized from p when unset.
    #[arg(long, global = true)]
    pub kc: Option<usize>,
    /// Reservoir-mode cutoff; sized from p when unset.
    #[arg(long, global = true)]
    pub kr: Option<usize>,
    /// Scan start.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub from: Option<f64>,
    /// Scan end (inclusive).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub to: Option<f64>,
    /// Number of scan points.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Explicit scan values, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Option<Vec<f64>>,
    /// Fock cutoff of the oracle cavity modes.
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// Number of cavity modes in the oracle.
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    /// Reservoir modes added to the oracle around the resonance.
    #[arg(long, global = true)]
    pub band: Option<usize>,
    /// Output times of the oracle trajectory table.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Tabulated trajectory with columns t,q,qdot.
    #[arg(long, global = true, value_name = "FILE")]
    pub trajectory: Option<PathBuf>,
    /// Worker threads for scans; 0 uses every core.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory; tables go to stdout when unset.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Output formats, comma separated.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    pub emit: Option<Vec<Format>>,
}

fn parse<T: FromStr>(key: &str, value: &str, line: usize) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("line {line}: cannot parse {key} = {value:?}")))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str, line: usize) -> CliResult<T> {
    T::from_str(value, true).map_err(|_| CliError::Config(format!("line {line}: unknown {key} = {value:?}")))
}

impl Params {
    /// Parse an INI-style file. Section headers are ignored; `#` and `;` start comments.
    pub fn from_file(path: &Path) -> CliResult<Params> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Params::from_text(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_text(text: &str) -> CliResult<Params> {
        let mut p = Params::default();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {n}: expected key = value, got {raw:?}")))?;
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            let value = value.trim();
            match key.as_str() {
                "q0" => p.q0 = Some(parse(&key, value, n)?),
                "l0" => p.l0 = Some(parse(&key, value, n)?),
                "gamma" => p.gamma = Some(parse(&key, value, n)?),
                "gamma_alt" => p.gamma_alt = Some(parse(&key, value, n)?),
                "eps" => p.eps = Some(parse(&key, value, n)?),
                "p" => p.p = Some(parse(&key, value, n)?),
                "k" => p.k = Some(parse(&key, value, n)?),
                "tau" => p.tau = Some(parse(&key, value, n)?),
                "t" => p.t = Some(parse(&key, value, n)?),
                "temp" | "temperature" => p.temp = Some(parse(&key, value, n)?),
                "method" => p.method = Some(parse_enum(&key, value, n)?),
                "state" => p.state = Some(parse_enum(&key, value, n)?),
                "alpha2" => p.alpha2 = Some(parse(&key, value, n)?),
                "kc" => p.kc = Some(parse(&key, value, n)?),
                "kr" => p.kr = Some(parse(&key, value, n)?),
                "from" => p.from = Some(parse(&key, value, n)?),
                "to" => p.to = Some(parse(&key, value, n)?),
                "steps" => p.steps = Some(parse(&key, value, n)?),
                "values" => {
                    p.values = Some(value.split(',').map(|v| parse(&key, v.trim(), n)).collect::<CliResult<_>>()?)
                }
                "nmax" => p.nmax = Some(parse(&key, value, n)?),
                "modes" => p.modes = Some(parse(&key, value, n)?),
                "band" => p.band = Some(parse(&key, value, n)?),
                "samples" => p.samples = Some(parse(&key, value, n)?),
                "trajectory" => p.trajectory = Some(PathBuf::from(value)),
                "jobs" => p.jobs = Some(parse(&key, value, n)?),
                "out" => p.out = Some(PathBuf::from(value)),
                "emit" => {
                    p.emit = Some(value.split(',').map(|v| parse_enum(&key, v.trim(), n)).collect::<CliResult<_>>()?)
                }
                _ => return Err(CliError::Config(format!("line {n}: unknown key {key:?}"))),
            }
        }
        Ok(p)
    }

    /// Entries of `other` win.
    pub fn overlay(self, other: Params) -> Params {
        Params {
            config: other.config.or(self.config),
            q0: other.q0.or(self.q0),
            l0: other.l0.or(self.l0),
            gamma: other.gamma.or(self.gamma),
            gamma_alt: other.gamma_alt.or(self.gamma_alt),
            eps: other.eps.or(self.eps),
            p: other.p.or(self.p),
            k: other.k.or(self.k),
            tau: other.tau.or(self.tau),
            t: other.t.or(self.t),
            temp: other.temp.or(self.temp),
            method: other.method.or(self.method),
            state: other.state.or(self.state),
            alpha2: other.alpha2.or(self.alpha2),
            kc: other.kc.or(self.kc),
            kr: other.kr.or(self.kr),
            from: other.from.or(self.from),
            to: other.to.or(self.to),
            steps: other.steps.or(self.steps),
            values: other.values.or(self.values),
            nmax: other.nmax.or(self.nmax),
            modes: other.modes.or(self.modes),
            band: other.band.or(self.band),
            samples: other.samples.or(self.samples),
            trajectory: other.trajectory.or(self.trajectory),
            jobs: other.jobs.or(self.jobs),
            out: other.out.or(self.out),
            emit: other.emit.or(self.emit),
        }
    }
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub q0: f64,
    pub l0: f64,
    pub gamma: f64,
    pub gamma_alt: f64,
    pub temperature: f64,
    pub kc: Option<usize>,
    pub kr: Option<usize>,
    pub eps: f64,
    pub p: f64,
    pub k: usize,
    pub tau: f64,
    pub t: Option<f64>,
    pub method: Option<Method>,
    pub state: InitialState,
    pub alpha2: f64,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: usize,
    pub values: Option<Vec<f64>>,
    pub nmax: usize,
    pub modes: usize,
    pub band: usize,
    pub samples: usize,
    pub trajectory: Option<PathBuf>,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub emit: Vec<Format>,
}

impl RunConfig {
    pub fn resolve(flags: Params) -> CliResult<RunConfig> {
        let merged = match &flags.config {
            Some(path) => Params::from_file(path)?.overlay(flags),
            None => flags,
        };
        let rc = RunConfig {
            q0: merged.q0.unwrap_or(1.0),
            l0: merged.l0.unwrap_or(DEFAULT_L0),
            gamma: merged.gamma.unwrap_or(DEFAULT_GAMMA),
            gamma_alt: merged.gamma_alt.unwrap_or(f64::INFINITY),
            temperature: merged.temp.unwrap_or(0.0),
            kc: merged.kc,
            kr: merged.kr,
            eps: merged.eps.unwrap_or(1e-2),
            p: merged.p.unwrap_or(2.0),
            k: merged.k.unwrap_or(1),
            tau: merged.tau.unwrap_or(0.1),
            t: merged.t,
            method: merged.method,
            state: merged.state.unwrap_or(InitialState::Vacuum),
            alpha2: merged.alpha2.unwrap_or(2.0),
            from: merged.from,
            to: merged.to,
            steps: merged.steps.unwrap_or(21),
            values: merged.values,
            nmax: merged.nmax.unwrap_or(4),
            modes: merged.modes.unwrap_or(3),
            band: merged.band.unwrap_or(0),
            samples: merged.samples.unwrap_or(11),
            trajectory: merged.trajectory,
            jobs: merged.jobs.unwrap_or(0),
            out: merged.out,
            emit: merged.emit.unwrap_or_else(|| vec![Format::Csv]),
        };
        rc.check()?;
        Ok(rc)
    }

    fn check(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !(self.gamma_alt > 0.0) {
            return bad("gamma_alt must be positive");
        }
        if !(0.0..1.0).contains(&self.eps) {
            return bad("eps must lie in [0, 1)");
        }
        if !(self.p >= 0.0 && self.p.is_finite()) {
            return bad("p must be finite and >= 0");
        }
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad("tau must be finite and >= 0");
        }
        if self.t.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
            return bad("t must be finite and >= 0");
        }
        if !(self.alpha2 >= 0.0 && self.alpha2.is_finite()) {
            return bad("alpha2 must be finite and >= 0");
        }
        if self.steps == 0 || self.samples < 2 || self.nmax == 0 || self.modes == 0 {
            return bad("steps, nmax and modes must be positive and samples at least 2");
        }
        if self.values.as_ref().is_some_and(|v| v.is_empty()) {
            return bad("values must not be empty");
        }
        if self.emit.is_empty() {
            return bad("emit must name at least one format");
        }
        self.system_for(self.p)?;
        Ok(())
    }

    /// Physical configuration with cutoffs sized for detuning `p` unless fixed.
    pub fn system_for(&self, p: f64) -> CliResult<SystemConfig> {
        let sized = SystemConfig {
            q0: self.q0,
            l0: self.l0,
            gamma: self.gamma,
            temperature: self.temperature,
            k_c: 1,
            k_r: 1,
        }
        .with_cutoffs_for(p);
        let cfg = SystemConfig { k_c: self.kc.unwrap_or(sized.k_c), k_r: self.kr.unwrap_or(sized.k_r), ..sized };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// One-line record of every setting that can change the numbers.
    pub fn describe(&self, command: &str) -> String {
        let opt = |v: Option<usize>| v.map_or("auto".to_string(), |n| n.to_string());
        let mut s = format!(
            "casimir {command}: q0={} L0={} gamma={} gamma_alt={} temp={} kc={} kr={} eps={} p={} k={} tau={} alpha2={} state={}",
            self.q0,
            self.l0,
            self.gamma,
            self.gamma_alt,
            self.temperature,
            opt(self.kc),
            opt(self.kr),
            self.eps,
            self.p,
            self.k,
            self.tau,
            self.alpha2,
            enum_name(&self.state),
        );
        if let Some(t) = self.t {
            let _ = write!(s, " t={t}");
        }
        if let Some(m) = self.method {
            let _ = write!(s, " method={}", enum_name(&m));
        }
        s
    }

    pub fn describe_oracle(&self) -> String {
        format!(" nmax={} modes={} band={} samples={}", self.nmax, self.modes, self.band, self.samples)
    }

    /// Scan points: explicit values, or `steps` evenly spaced from `from` to `to`.
    pub fn scan_values(&self, axis: Axis) -> CliResult<Vec<f64>> {
        if let Some(v) = &self.values {
            return Ok(v.clone());
        }
        let (from, to) = match (self.from, self.to) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(CliError::Config(format!("scan over {} needs --values or both --from and --to", axis.column()))),
        };
        if axis == Axis::K {
            let (a, b) = (from.round() as i64, to.round() as i64);
            if a < 1 || b < a {
                return Err(CliError::Config("k range must satisfy 1 <= from <= to".into()));
            }
            return Ok((a..=b).map(|k| k as f64).collect());
        }
        if self.steps == 1 {
            return Ok(vec![from]);
        }
        let n = self.steps - 1;
        Ok((0..=n).map(|i| from + (to - from) * i as f64 / n as f64).collect())
    }
}

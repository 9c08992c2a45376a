//! Run configuration: a flat TOML file merged with command-line overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use dicke::entanglement::Subsystem;
use dicke::exactdiag::linspace;
use dicke::{CouplingMode, ModelParams, Temperature};
use serde::Deserialize;

use crate::error::{CliError, Result};

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "DICKE_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Critical,
    Spectrum,
    ComparePoles,
    Exactdiag,
    Entropy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Critical => "critical",
            Command::Spectrum => "spectrum",
            Command::ComparePoles => "compare-poles",
            Command::Exactdiag => "exactdiag",
            Command::Entropy => "entropy",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "critical" => Command::Critical,
            "spectrum" => Command::Spectrum,
            "compare-poles" => Command::ComparePoles,
            "exactdiag" => Command::Exactdiag,
            "entropy" => Command::Entropy,
            _ => return Err(CliError::Usage(format!("unknown command {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Usage(format!("format must be csv or json, got {s:?}"))),
        }
    }
}

/// Parameter a sweep axis drives. `G` sets both couplings through the
/// coupling mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKey {
    Omega0,
    Omega,
    G1,
    G2,
    G,
    Lambda,
    Beta,
    NAtoms,
}

impl FromStr for SweepKey {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "omega0" => SweepKey::Omega0,
            "Omega" => SweepKey::Omega,
            "g1" => SweepKey::G1,
            "g2" => SweepKey::G2,
            "g" => SweepKey::G,
            "lambda" => SweepKey::Lambda,
            "beta" => SweepKey::Beta,
            "n_atoms" | "n-atoms" => SweepKey::NAtoms,
            _ => return Err(CliError::Usage(format!("cannot sweep {s:?}"))),
        })
    }
}

/// `lo:hi:n`, `n ≥ 1` evenly spaced values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.steps)
    }
}

impl FromStr for Range {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::Usage(format!("range must be lo:hi:n, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let steps: usize = n.trim().parse().map_err(|_| bad())?;
        if steps == 0 || !lo.is_finite() || !hi.is_finite() {
            return Err(bad());
        }
        if steps > 1 && lo == hi {
            return Err(CliError::Usage(format!("range {s:?} is empty")));
        }
        Ok(Range { lo, hi, steps })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub key: SweepKey,
    pub range: Range,
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let (key, range) = s
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("sweep must be key=lo:hi:n, got {s:?}")))?;
        Ok(Axis { key: key.trim().parse()?, range: range.parse()? })
    }
}

/// Values read from a config file. Every field is optional; unknown keys
/// are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub omega0: Option<f64>,
    #[serde(rename = "Omega")]
    pub omega: Option<f64>,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub lambda: Option<f64>,
    pub n_atoms: Option<usize>,
    pub beta: Option<f64>,
    pub mode: Option<String>,
    pub sweep: Option<SweepList>,
    pub n_max: Option<usize>,
    pub tail_tol: Option<f64>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub bipartition: Option<String>,
    pub frequencies: Option<String>,
    pub lambdas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SweepList {
    One(String),
    Many(Vec<String>),
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))
    }
}

/// Command-line values; `Some` wins over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub omega0: Option<f64>,
    pub omega: Option<f64>,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub lambda: Option<f64>,
    pub n_atoms: Option<usize>,
    pub beta: Option<f64>,
    pub mode: Option<String>,
    pub sweep: Vec<String>,
    pub n_max: Option<usize>,
    pub tail_tol: Option<f64>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub bipartition: Option<String>,
    pub frequencies: Option<String>,
    pub lambdas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub command: Command,
    /// Temperature is `Zero` when no `beta` was given.
    pub base: ModelParams,
    pub mode: CouplingMode,
    pub axes: Vec<Axis>,
    /// Fixed Fock cutoff; `None` picks one by doubling until converged.
    pub n_max: Option<usize>,
    pub tail_tol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub bipartition: Subsystem,
    pub frequencies: Range,
    pub lambdas: Vec<f64>,
}

/// One grid point, in row-major order over the axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub params: ModelParams,
    /// Coordinate along the first axis, for derivatives along a 1D sweep.
    pub coordinate: f64,
}

fn parse_bipartition(s: &str) -> Result<Subsystem> {
    match s {
        "atoms" => Ok(Subsystem::First),
        "field" => Ok(Subsystem::Second),
        _ => Err(CliError::Usage(format!("bipartition must be atoms or field, got {s:?}"))),
    }
}

impl SweepConfig {
    /// Merges file values, the worker-count environment override and flags
    /// (in increasing priority).
    pub fn resolve(command: Command, file: FileConfig, flags: Overrides, env_workers: Option<String>) -> Result<Self> {
        if let Some(c) = &file.command {
            if c.parse::<Command>()? != command {
                return Err(CliError::Usage(format!(
                    "config is for command {c:?} but {:?} was requested",
                    command.name()
                )));
            }
        }
        let defaults = ModelParams::default();
        let pick = |flag: Option<f64>, file: Option<f64>, default: f64| flag.or(file).unwrap_or(default);
        let beta = flags.beta.or(file.beta);
        let base = ModelParams {
            omega0: pick(flags.omega0, file.omega0, defaults.omega0),
            omega: pick(flags.omega, file.omega, defaults.omega),
            g1: pick(flags.g1, file.g1, defaults.g1),
            g2: pick(flags.g2, file.g2, defaults.g2),
            lambda: pick(flags.lambda, file.lambda, defaults.lambda),
            n_atoms: flags.n_atoms.or(file.n_atoms).unwrap_or(defaults.n_atoms),
            temperature: beta.map_or(Temperature::Zero, Temperature::Beta),
        };
        let mode = match flags.mode.or(file.mode) {
            Some(m) => m.parse().map_err(|e: dicke::Error| CliError::Usage(e.to_string()))?,
            None => CouplingMode::Balanced,
        };
        let sweeps: Vec<String> = if !flags.sweep.is_empty() {
            flags.sweep
        } else {
            match file.sweep {
                Some(SweepList::One(s)) => vec![s],
                Some(SweepList::Many(v)) => v,
                None => Vec::new(),
            }
        };
        let axes = sweeps.iter().map(|s| s.parse()).collect::<Result<Vec<Axis>>>()?;
        if axes.len() > 2 {
            return Err(CliError::Usage("at most two sweep axes are supported".into()));
        }
        if axes.len() == 2 && axes[0].key == axes[1].key {
            return Err(CliError::Usage("the two sweep axes must differ".into()));
        }
        let env_workers = match env_workers {
            Some(s) => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got {s:?}")))?,
            ),
            None => None,
        };
        let workers = flags
            .workers
            .or(env_workers)
            .or(file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if workers == 0 {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        let tail_tol = flags.tail_tol.or(file.tail_tol).unwrap_or(1e-8);
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(CliError::Usage("tail_tol must lie in (0, 1)".into()));
        }
        if flags.n_max.or(file.n_max) == Some(0) {
            return Err(CliError::Usage("n_max must be at least 1".into()));
        }
        let frequencies = match flags.frequencies.or(file.frequencies) {
            Some(s) => s.parse()?,
            None => Range { lo: 0.0, hi: 10.0, steps: 1001 },
        };
        let cfg = SweepConfig {
            command,
            base,
            mode,
            axes,
            n_max: flags.n_max.or(file.n_max),
            tail_tol,
            format: flags.format.or(file.format).as_deref().unwrap_or("csv").parse()?,
            out: flags.out.or(file.out),
            workers,
            bipartition: parse_bipartition(flags.bipartition.or(file.bipartition).as_deref().unwrap_or("atoms"))?,
            frequencies,
            lambdas: flags.lambdas.or(file.lambdas).unwrap_or_else(|| vec![-1.0, 0.0, 1.0, 10.0]),
        };
        // Reject bad parameters anywhere on the grid before any work starts.
        for point in cfg.grid()? {
            point.params.validate().map_err(|e| CliError::Usage(format!("grid point {}: {e}", point.index)))?;
        }
        Ok(cfg)
    }

    /// Grid points in row-major order (last axis fastest).
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let axes: Vec<(SweepKey, Vec<f64>)> = self.axes.iter().map(|a| (a.key, a.range.values())).collect();
        let shape: Vec<usize> = axes.iter().map(|(_, v)| v.len()).collect();
        let total: usize = shape.iter().product();
        let mut out = Vec::with_capacity(total);
        for index in 0..total {
            let mut p = self.base;
            let mut rest = index;
            let mut coords = vec![0.0; axes.len()];
            for (k, (key, values)) in axes.iter().enumerate().rev() {
                let v = values[rest % shape[k]];
                rest /= shape[k];
                coords[k] = v;
                apply(&mut p, *key, v, self.mode)?;
            }
            out.push(GridPoint { index, params: p, coordinate: coords.first().copied().unwrap_or(0.0) });
        }
        Ok(out)
    }
}

fn apply(p: &mut ModelParams, key: SweepKey, v: f64, mode: CouplingMode) -> Result<()> {
    match key {
        SweepKey::Omega0 => p.omega0 = v,
        SweepKey::Omega => p.omega = v,
        SweepKey::G1 => p.g1 = v,
        SweepKey::G2 => p.g2 = v,
        SweepKey::G => (p.g1, p.g2) = mode.couplings(v),
        SweepKey::Lambda => p.lambda = v,
        SweepKey::Beta => p.temperature = Temperature::Beta(v),
        SweepKey::NAtoms => {
            if v < 1.0 || v.fract() != 0.0 {
                return Err(CliError::Usage(format!("n_atoms sweep hits non-integer value {v}")));
            }
            p.n_atoms = v as usize;
        }
    }
    Ok(())
}

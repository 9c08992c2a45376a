//! Per-command grid evaluation. Every grid point is computed independently
//! on the worker pool and gathered in grid order.

use dicke::entanglement::{self, BipartiteState, Subsystem};
use dicke::exactdiag::{self, CutoffPolicy, SizeLimits};
use dicke::meanfield::{self, CriticalBeta, CriticalMode};
use dicke::{Error, ModelParams, Temperature};
use rayon::prelude::*;

use crate::config::{Command, GridPoint, SweepConfig};
use crate::error::{CliError, Result};
use crate::record::{Record, Value};

/// Relative tolerance between the numeric and closed-form results.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    NoTransition,
    Pole,
    TruncationCapped,
    Inconsistent,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NoTransition => "no-transition",
            Status::Pole => "pole",
            Status::TruncationCapped => "truncation-capped",
            Status::Inconsistent => "inconsistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<Record>,
    /// 0, 3 (some record inconsistent) or 4 (some record hit a cap).
    pub exit_code: u8,
}

fn inputs(command: Command, point: &GridPoint) -> Record {
    let p = &point.params;
    let mut r = Record::new();
    r.push("command", Value::Text(command.name().into()))
        .push("index", Value::Int(point.index as i64))
        .float("omega0", p.omega0)
        .float("Omega", p.omega)
        .float("g1", p.g1)
        .float("g2", p.g2)
        .float("lambda", p.lambda)
        .push("n_atoms", Value::Int(p.n_atoms as i64))
        .float("beta", p.temperature.beta().unwrap_or(f64::INFINITY));
    r
}

fn beta_value(b: CriticalBeta) -> f64 {
    match b {
        CriticalBeta::Finite(x) => x,
        CriticalBeta::ZeroTemperature => f64::INFINITY,
        CriticalBeta::NoTransition => f64::NAN,
    }
}

fn finish(r: &mut Record, status: Status) -> Status {
    r.push("status", Value::Text(status.label().into()));
    status
}

/// Maps recoverable library errors to a record status; anything else is fatal.
fn status_of(e: &Error) -> Option<Status> {
    match e {
        Error::Pole { .. } => Some(Status::Pole),
        Error::DimensionCap { .. } | Error::TruncationCap { .. } => Some(Status::TruncationCapped),
        _ => None,
    }
}

fn critical(point: &GridPoint) -> Result<(Record, Status)> {
    let p = &point.params;
    let mut r = inputs(Command::Critical, point);
    let closed = meanfield::critical_beta_closed(p, CriticalMode::General);
    let numeric = meanfield::critical_beta_numeric(p);
    let (numeric_beta, agree) = match &numeric {
        Ok(n) => {
            let agree = match (closed.beta_c, n.beta_c) {
                (CriticalBeta::Finite(c), CriticalBeta::Finite(x)) => (x - c).abs() <= CONSISTENCY_TOL * c,
                (a, b) => a == b,
            };
            (beta_value(n.beta_c), agree)
        }
        Err(_) => (f64::NAN, false),
    };
    let phase = match (closed.beta_c, p.temperature) {
        (CriticalBeta::Finite(_), Temperature::Zero) => "super-radiant",
        (CriticalBeta::Finite(bc), Temperature::Beta(b)) if b >= bc => "super-radiant",
        _ => "fluorescent",
    };
    let status = if !agree {
        Status::Inconsistent
    } else if closed.beta_c == CriticalBeta::NoTransition {
        Status::NoTransition
    } else {
        Status::Ok
    };
    let closed_beta = beta_value(closed.beta_c);
    let rel = match closed.beta_c {
        CriticalBeta::Finite(c) => (numeric_beta - c).abs() / c,
        _ => f64::NAN,
    };
    r.float("beta_c_closed", closed_beta)
        .float("beta_c_numeric", numeric_beta)
        .float("relative_difference", rel)
        .push("transition", Value::Text(closed.beta_c.label().into()))
        .push("phase", Value::Text(phase.into()));
    let status = finish(&mut r, status);
    Ok((r, status))
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(";")
}

fn spectrum(point: &GridPoint) -> Result<(Record, Status)> {
    let p = &point.params;
    let mut r = inputs(Command::Spectrum, point);
    let cp = meanfield::critical_beta_closed(p, CriticalMode::General);
    let critical_t = meanfield::critical_temperature(&cp);
    // Without an explicit β the spectrum is taken at the critical point.
    let temperature = match (p.temperature, critical_t) {
        (Temperature::Beta(b), _) => Some(Temperature::Beta(b)),
        (Temperature::Zero, t) => t,
    };
    let e2_closed = critical_t.and_then(|_| meanfield::gapped_mode_energy(p)).unwrap_or(f64::NAN);
    let nan_fields = |r: &mut Record, eval: f64, exploratory: bool| {
        r.float("beta_eval", eval)
            .push("exploratory", Value::Bool(exploratory))
            .push("n_roots", Value::Int(0))
            .push("roots", Value::Text(String::new()))
            .float("e1", f64::NAN)
            .float("e2_numeric", f64::NAN)
            .float("e2_closed", e2_closed)
            .float("max_residual", f64::NAN);
    };
    let Some(temperature) = temperature else {
        nan_fields(&mut r, f64::NAN, false);
        let s = finish(&mut r, Status::NoTransition);
        return Ok((r, s));
    };
    let beta_eval = temperature.beta().unwrap_or(f64::INFINITY);
    let result = match meanfield::spectrum_roots(&p.with_temperature(temperature), temperature) {
        Ok(res) => res,
        Err(e) => {
            let s = status_of(&e).ok_or(CliError::Model(e))?;
            nan_fields(&mut r, beta_eval, true);
            let s = finish(&mut r, s);
            return Ok((r, s));
        }
    };
    let energies: Vec<f64> = result.roots.iter().map(|x| x.energy).collect();
    let e1 = energies.first().copied().unwrap_or(f64::NAN);
    let e2 = energies.iter().copied().rfind(|&e| e > 0.0).unwrap_or(f64::NAN);
    let max_residual = result.roots.iter().map(|x| x.residual.abs()).fold(f64::NAN, f64::max);
    // The closed form only applies at the critical temperature and away from
    // the poles of the spectrum equation.
    let comparable = !result.exploratory
        && e2_closed.is_finite()
        && e2_closed > 1e-6
        && (e2_closed - p.omega0).abs() > 1e-6
        && (e2_closed - p.omega).abs() > 1e-6;
    let status = if comparable && (e2.is_nan() || (e2 - e2_closed).abs() > CONSISTENCY_TOL * e2_closed.max(1.0)) {
        Status::Inconsistent
    } else if critical_t.is_none() {
        Status::NoTransition
    } else {
        Status::Ok
    };
    r.float("beta_eval", beta_eval)
        .push("exploratory", Value::Bool(result.exploratory))
        .push("n_roots", Value::Int(energies.len() as i64))
        .push("roots", Value::Text(join(energies.iter().copied())))
        .float("e1", e1)
        .float("e2_numeric", e2)
        .float("e2_closed", e2_closed)
        .float("max_residual", max_residual);
    let s = finish(&mut r, status);
    Ok((r, s))
}

fn compare_poles(point: &GridPoint, cfg: &SweepConfig) -> Result<(Record, Status)> {
    let mut r = inputs(Command::ComparePoles, point);
    let grid = cfg.frequencies.values();
    r.push("frequency_points", Value::Int(grid.len() as i64))
        .push("lambdas", Value::Text(join(cfg.lambdas.iter().copied())));
    match meanfield::compare_poles(&point.params, &grid, &cfg.lambdas) {
        Ok(rep) => {
            r.float("max_discrepancy", rep.max_discrepancy)
                .push("zero_crossings_full", Value::Int(rep.zero_crossings_full.len() as i64))
                .push("zero_crossings_dipole", Value::Int(rep.zero_crossings_dipole.len() as i64))
                .push("lambda_invariant", Value::Bool(rep.lambda_invariant))
                .float("beta_c", beta_value(rep.beta_c))
                .float("prefactor_divergence_beta", rep.prefactor_divergence_beta.unwrap_or(f64::NAN))
                .float("i0_divergence_beta", rep.i0_divergence_beta.unwrap_or(f64::NAN))
                .push("passed", Value::Bool(rep.passed));
            let s = finish(&mut r, if rep.passed { Status::Ok } else { Status::Inconsistent });
            Ok((r, s))
        }
        Err(e) => {
            let s = status_of(&e).ok_or(CliError::Model(e))?;
            r.float("max_discrepancy", f64::NAN)
                .push("zero_crossings_full", Value::Int(0))
                .push("zero_crossings_dipole", Value::Int(0))
                .push("lambda_invariant", Value::Bool(false))
                .float("beta_c", f64::NAN)
                .float("prefactor_divergence_beta", f64::NAN)
                .float("i0_divergence_beta", f64::NAN)
                .push("passed", Value::Bool(false));
            let s = finish(&mut r, s);
            Ok((r, s))
        }
    }
}

fn policy(cfg: &SweepConfig) -> CutoffPolicy {
    CutoffPolicy { initial: cfg.n_max, tail_tol: cfg.tail_tol, ..CutoffPolicy::default() }
}

/// One cutoff for the whole grid, converged at the point with the largest
/// expected photon number, so energies along a sweep stay smooth.
fn grid_cutoff(cfg: &SweepConfig, grid: &[GridPoint]) -> std::result::Result<usize, Error> {
    if let Some(n) = cfg.n_max {
        return Ok(n);
    }
    let hardest = grid
        .iter()
        .max_by(|a, b| {
            exactdiag::initial_cutoff(&a.params)
                .cmp(&exactdiag::initial_cutoff(&b.params))
                .then(b.index.cmp(&a.index))
        })
        .expect("grid is never empty");
    let p = &hardest.params;
    exactdiag::converged_cutoff(p, p.lambda != 0.0, &policy(cfg)).map(|(n, _)| n)
}

struct GroundSummary {
    n_max: usize,
    dimension: usize,
    level: exactdiag::GroundLevel,
}

fn ground(p: &ModelParams, n_max: usize) -> std::result::Result<GroundSummary, Error> {
    let h = exactdiag::build_hamiltonian_with(p, n_max, p.lambda != 0.0, SizeLimits::default())?;
    let level = exactdiag::ground_state_with(&h, SizeLimits::default())?;
    Ok(GroundSummary { n_max, dimension: h.dimension(), level })
}

fn exactdiag_point(point: &GridPoint, n_max: std::result::Result<usize, Error>, tail_tol: f64) -> Result<(Record, Status)> {
    let p = &point.params;
    let mut r = inputs(Command::Exactdiag, point);
    let computed = n_max.and_then(|n| {
        let g = ground(p, n)?;
        let thermal = match p.temperature {
            Temperature::Beta(_) => {
                let h = exactdiag::build_hamiltonian_with(p, n, p.lambda != 0.0, SizeLimits::default())?;
                Some(exactdiag::thermal_observables(&h, p.temperature)?)
            }
            Temperature::Zero => None,
        };
        Ok((g, thermal))
    });
    let (g, thermal) = match computed {
        Ok(x) => x,
        Err(e) => {
            let s = status_of(&e).ok_or(CliError::Model(e))?;
            for k in ["n_max", "dimension"] {
                r.push(k, Value::Int(0));
            }
            for k in ["ground_energy", "energy_per_atom", "order_parameter", "jz_per_atom", "parity"] {
                r.float(k, f64::NAN);
            }
            r.push("degenerate", Value::Bool(false));
            for k in ["cutoff_tail", "thermal_free_energy", "thermal_order_parameter", "susceptibility"] {
                r.float(k, f64::NAN);
            }
            let s = finish(&mut r, s);
            return Ok((r, s));
        }
    };
    let s = g.level.primary();
    let n = p.n_atoms as f64;
    let tail = g.level.states.iter().map(|x| x.cutoff_tail()).fold(0.0, f64::max);
    r.push("n_max", Value::Int(g.n_max as i64))
        .push("dimension", Value::Int(g.dimension as i64))
        .float("ground_energy", s.energy)
        .float("energy_per_atom", s.energy / n)
        .float("order_parameter", s.mean_photons() / n)
        .float("jz_per_atom", s.mean_jz() / n)
        .float("parity", s.parity())
        .push("degenerate", Value::Bool(g.level.degenerate))
        .float("cutoff_tail", tail)
        .float("thermal_free_energy", thermal.map_or(f64::NAN, |t| t.free_energy_per_atom))
        .float("thermal_order_parameter", thermal.map_or(f64::NAN, |t| t.order_parameter))
        .float("susceptibility", f64::NAN);
    let st = finish(&mut r, if tail > tail_tol { Status::TruncationCapped } else { Status::Ok });
    Ok((r, st))
}

fn entropy_point(
    point: &GridPoint,
    n_max: std::result::Result<usize, Error>,
    tail_tol: f64,
    side: Subsystem,
) -> Result<(Record, Status)> {
    let p = &point.params;
    let mut r = inputs(Command::Entropy, point);
    r.push("bipartition", Value::Text(if side == Subsystem::First { "atoms" } else { "field" }.into()));
    let computed = n_max.and_then(|n| {
        let g = ground(p, n)?;
        let state = BipartiteState::from_dicke(g.level.primary())?;
        let entropy = entanglement::von_neumann_entropy(&entanglement::reduce(&state, side))?;
        let report = entanglement::schmidt_decompose(&state);
        Ok((g, entropy, report.schmidt_number))
    });
    match computed {
        Ok((g, entropy, schmidt)) => {
            let tail = g.level.primary().cutoff_tail();
            let bound = ((g.n_max + 1).min(p.n_atoms + 1) as f64).ln();
            r.push("n_max", Value::Int(g.n_max as i64))
                .float("ground_energy", g.level.energy())
                .float("entropy", entropy)
                .push("schmidt_number", Value::Int(schmidt as i64))
                .float("entropy_bound", bound)
                .float("cutoff_tail", tail);
            let s = finish(&mut r, if tail > tail_tol { Status::TruncationCapped } else { Status::Ok });
            Ok((r, s))
        }
        Err(e) => {
            let s = status_of(&e).ok_or(CliError::Model(e))?;
            r.push("n_max", Value::Int(0));
            for k in ["ground_energy", "entropy"] {
                r.float(k, f64::NAN);
            }
            r.push("schmidt_number", Value::Int(0));
            for k in ["entropy_bound", "cutoff_tail"] {
                r.float(k, f64::NAN);
            }
            let s = finish(&mut r, s);
            Ok((r, s))
        }
    }
}

/// `−d²E₀/dx²` along a single sweep axis.
fn fill_susceptibility(records: &mut [Record], grid: &[GridPoint]) {
    let x: Vec<f64> = grid.iter().map(|g| g.coordinate).collect();
    let e: Vec<f64> = records
        .iter()
        .map(|r| match r.get("ground_energy") {
            Some(Value::Float(v)) => *v,
            _ => f64::NAN,
        })
        .collect();
    for (r, chi) in records.iter_mut().zip(exactdiag::susceptibility(&x, &e)) {
        r.set("susceptibility", Value::Float(chi));
    }
}

/// Evaluates every grid point on a pool of `cfg.workers` threads.
pub fn run(cfg: &SweepConfig) -> Result<RunOutput> {
    let grid = cfg.grid()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let results: Vec<Result<(Record, Status)>> = pool.install(|| match cfg.command {
        Command::Critical => grid.par_iter().map(critical).collect(),
        Command::Spectrum => grid.par_iter().map(spectrum).collect(),
        Command::ComparePoles => grid.par_iter().map(|g| compare_poles(g, cfg)).collect(),
        Command::Exactdiag | Command::Entropy => {
            let n_max = grid_cutoff(cfg, &grid);
            grid.par_iter()
                .map(|g| {
                    let n = n_max.clone();
                    if cfg.command == Command::Exactdiag {
                        exactdiag_point(g, n, cfg.tail_tol)
                    } else {
                        entropy_point(g, n, cfg.tail_tol, cfg.bipartition)
                    }
                })
                .collect()
        }
    });
    let mut records = Vec::with_capacity(results.len());
    let mut worst = Status::Ok;
    for res in results {
        let (r, s) = res?;
        worst = worst.max(s);
        records.push(r);
    }
    if cfg.command == Command::Exactdiag && cfg.axes.len() == 1 {
        fill_susceptibility(&mut records, &grid);
    }
    let exit_code = match worst {
        Status::Inconsistent => 3,
        Status::TruncationCapped => 4,
        _ => 0,
    };
    Ok(RunOutput { records, exit_code })
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dicke_cli::commands;
use dicke_cli::config::{Command, FileConfig, Format, Overrides, SweepConfig, WORKERS_ENV};
use dicke_cli::plot::{self, PlotOptions};
use dicke_cli::record::{self, read_table};
use dicke_cli::{CliError, Result};

#[derive(Parser)]
#[command(name = "dicke", version, about = "Phase boundary, spectrum and finite-N sweeps for the Dicke model")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Critical inverse temperature, closed form and numeric, with the phase label.
    #[command(allow_negative_numbers = true)]
    Critical(RunArgs),
    /// Collective-excitation energies (at the critical point unless --beta is given).
    #[command(allow_negative_numbers = true)]
    Spectrum(RunArgs),
    /// Pole structure of the partition function with and without dipole coupling.
    #[command(allow_negative_numbers = true)]
    ComparePoles(RunArgs),
    /// Finite-N ground state (and thermal averages when --beta is given).
    #[command(allow_negative_numbers = true)]
    Exactdiag(RunArgs),
    /// Ground-state atoms/field entanglement entropy.
    #[command(allow_negative_numbers = true)]
    Entropy(RunArgs),
    /// Gnuplot data and SVG from record files of one command.
    Plotdata(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json (JSON lines).
    #[arg(long)]
    format: Option<String>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    omega0: Option<f64>,
    #[arg(long = "Omega")]
    omega: Option<f64>,
    #[arg(long)]
    g1: Option<f64>,
    #[arg(long)]
    g2: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long = "n-atoms")]
    n_atoms: Option<usize>,
    /// Inverse temperature; zero temperature when omitted.
    #[arg(long)]
    beta: Option<f64>,
    /// Sweep axis key=lo:hi:n (repeat for a second axis).
    #[arg(long)]
    sweep: Vec<String>,
    /// How a `g` sweep sets the couplings: rotating, counter-rotating or balanced.
    #[arg(long)]
    mode: Option<String>,
    /// Fixed Fock cutoff (default: doubled until the top level is empty).
    #[arg(long = "n-max")]
    n_max: Option<usize>,
    #[arg(long = "tail-tol")]
    tail_tol: Option<f64>,
    /// atoms or field.
    #[arg(long)]
    bipartition: Option<String>,
    /// Real frequency grid lo:hi:n for compare-poles.
    #[arg(long)]
    frequencies: Option<String>,
    /// Dipole strengths for compare-poles, comma separated.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
}

#[derive(Args)]
struct PlotArgs {
    /// Record files (CSV or JSON lines) from one command.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output prefix; writes PREFIX.dat and PREFIX.svg.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    /// Column to plot (default depends on the command).
    #[arg(long)]
    value: Option<String>,
}

impl RunArgs {
    fn split(self) -> (Option<PathBuf>, Overrides) {
        let o = Overrides {
            omega0: self.omega0,
            omega: self.omega,
            g1: self.g1,
            g2: self.g2,
            lambda: self.lambda,
            n_atoms: self.n_atoms,
            beta: self.beta,
            mode: self.mode,
            sweep: self.sweep,
            n_max: self.n_max,
            tail_tol: self.tail_tol,
            format: self.format,
            out: self.out,
            workers: self.workers,
            bipartition: self.bipartition,
            frequencies: self.frequencies,
            lambdas: self.lambdas,
        };
        (self.config, o)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Write { path: path.into(), source })
}

fn run_command(command: Command, args: RunArgs) -> Result<u8> {
    let (config, overrides) = args.split();
    let file = match config {
        Some(p) => FileConfig::load(&p)?,
        None => FileConfig::default(),
    };
    let cfg = SweepConfig::resolve(command, file, overrides, std::env::var(WORKERS_ENV).ok())?;
    let out = commands::run(&cfg)?;
    let target = cfg.out.clone().unwrap_or_else(|| PathBuf::from("-"));
    let write_err = |source: io::Error| CliError::Write { path: target.clone(), source };
    let sink: Box<dyn Write> = match &cfg.out {
        Some(p) => Box::new(File::create(p).map_err(write_err)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match cfg.format {
        Format::Csv => record::write_csv(&mut sink, &out.records)?,
        Format::Json => record::write_json_lines(&mut sink, &out.records).map_err(write_err)?,
    }
    sink.flush().map_err(write_err)?;
    Ok(out.exit_code)
}

fn run_plot(args: PlotArgs) -> Result<u8> {
    let tables = args.inputs.iter().map(|p| read_table(p)).collect::<Result<Vec<_>>>()?;
    let opts = PlotOptions { x: args.x, y: args.y, value: args.value };
    let files = plot::render(&tables, &opts)?;
    let base = args.out.to_string_lossy().into_owned();
    write_file(Path::new(&format!("{base}.dat")), &files.data)?;
    write_file(Path::new(&format!("{base}.svg")), &files.svg)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Critical(a) => run_command(Command::Critical, a),
        Cmd::Spectrum(a) => run_command(Command::Spectrum, a),
        Cmd::ComparePoles(a) => run_command(Command::ComparePoles, a),
        Cmd::Exactdiag(a) => run_command(Command::Exactdiag, a),
        Cmd::Entropy(a) => run_command(Command::Entropy, a),
        Cmd::Plotdata(a) => run_plot(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dicke: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

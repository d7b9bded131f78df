use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qhomog::experiment::{
    self, exclusive_coupling, parse_mode, parse_probes, ExperimentSpec, SpecBuilder, StateDescriptor,
};
use qhomog::protocol::Mode;
use qhomog::Error;

#[derive(Parser)]
#[command(name = "qhomog", version, about = "Quantum homogenization simulator and circuit exporter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the collision protocol and write the trajectory as CSV.
    Simulate(SpecArgs),
    /// Write the CNOT decomposition of SWAP^alpha as OpenQASM 2.0.
    Decompose(DecomposeArgs),
    /// Write the full (N+1)-qubit homogenization circuit as OpenQASM 2.0.
    HomogenizeQasm(SpecArgs),
    /// Write the correctability report of the encoding as JSON.
    Analyze(SpecArgs),
}

#[derive(Args)]
struct SpecArgs {
    /// Spec file with `key = value` lines; flags override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    rounds: Option<usize>,
    /// 0, 1, +, -, i, -i or bloch:x,y,z
    #[arg(long, allow_hyphen_values = true)]
    initial: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    reservoir: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    /// reduced or full
    #[arg(long)]
    mode: Option<String>,
    /// Append a measurement of wire 0 to emitted circuits.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    measure: Option<bool>,
    /// Semicolon-separated probe states for `analyze`.
    #[arg(long, allow_hyphen_values = true)]
    probes: Option<String>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SpecArgs {
    fn resolve(&self) -> qhomog::Result<ExperimentSpec> {
        let file = match &self.spec {
            Some(path) => SpecBuilder::parse(&fs::read_to_string(path)?)?,
            None => SpecBuilder::default(),
        };
        let flags = SpecBuilder {
            initial: self.initial.as_deref().map(str::parse::<StateDescriptor>).transpose()?,
            reservoir: self.reservoir.as_deref().map(str::parse::<StateDescriptor>).transpose()?,
            coupling: exclusive_coupling(self.eta, self.alpha)?,
            rounds: self.rounds,
            mode: self.mode.as_deref().map(parse_mode).transpose()?,
            delta: self.delta,
            measure: self.measure,
            probes: self.probes.as_deref().map(parse_probes).transpose()?,
            out: self.out.clone(),
        };
        file.merge(flags).build()
    }
}

fn emit(out: Option<&Path>, text: &str) -> qhomog::Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> qhomog::Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let spec = args.resolve()?;
            emit(spec.out.as_deref(), &experiment::cmd_simulate(&spec)?)
        }
        Command::Decompose(args) => emit(args.out.as_deref(), &experiment::cmd_decompose(args.alpha)?),
        Command::HomogenizeQasm(args) => {
            let spec = args.resolve()?;
            emit(spec.out.as_deref(), &experiment::cmd_homogenize_qasm(&spec)?)
        }
        Command::Analyze(args) => {
            let spec = args.resolve()?;
            if spec.mode == Mode::FullState {
                eprintln!("note: analyze always uses the full dilation; mode is ignored");
            }
            emit(spec.out.as_deref(), &experiment::cmd_analyze(&spec)?)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

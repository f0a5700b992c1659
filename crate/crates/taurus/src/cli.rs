//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use taurus_core::compiler::PassConfig;
use taurus_core::fft::FftMode;
use taurus_core::perf::{MachineConfig, SweepKind, SyncMode};

use crate::commands;
use crate::error::{Error, Result};
use crate::files::write_atomic;
use crate::presets::load_machine;

#[derive(Debug, Parser)]
#[command(
    name = "taurus",
    version,
    about = "Multi-bit TFHE compiler, functional model and accelerator simulator"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for keys, generated inputs and encryption.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Parameter preset name or TOML file.
    #[arg(long, global = true)]
    pub params: Option<String>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower a program, run the dedup passes and schedule it.
    Compile(CompileArgs),
    /// Encrypt, evaluate and decrypt a program; compare with the plaintext interpreter.
    RunFunc(RunFuncArgs),
    /// Simulate a program on the accelerator and on the XPU baseline.
    RunPerf(RunPerfArgs),
    /// Simulate a compiled schedule (output of `compile --emit schedule`).
    Simulate(SimulateArgs),
    /// Simulate a program across values of one machine knob.
    Sweep(SweepArgs),
    /// Operation counts before and after the dedup passes, as CSV.
    DedupReport(DedupArgs),
    /// Generate and store a key set.
    Keygen(KeygenArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PassFlags {
    #[arg(long)]
    pub no_ks_dedup: bool,
    #[arg(long)]
    pub no_acc_dedup: bool,
}

impl PassFlags {
    pub fn config(&self) -> PassConfig {
        PassConfig {
            ks_dedup: !self.no_ks_dedup,
            acc_dedup: !self.no_acc_dedup,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MachineFlags {
    /// Machine file of `key = value` lines.
    #[arg(long)]
    pub machine: Option<PathBuf>,
    /// Machine override, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub round_robin: Option<usize>,
    #[arg(long, value_enum)]
    pub sync: Option<Sync>,
}

impl MachineFlags {
    pub fn load(&self) -> Result<MachineConfig> {
        let mut m = load_machine(self.machine.as_deref(), &self.overrides)?;
        if let Some(c) = self.clusters {
            m.clusters = c;
        }
        if let Some(r) = self.round_robin {
            m.round_robin = r;
        }
        if let Some(s) = self.sync {
            m.sync = s.into();
        }
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Sync {
    Full,
    Grouped,
}

impl From<Sync> for SyncMode {
    fn from(s: Sync) -> Self {
        match s {
            Sync::Full => SyncMode::Full,
            Sync::Grouped => SyncMode::Grouped,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Schedule,
    Stats,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Fft {
    Reference,
    Fixed48,
}

impl From<Fft> for FftMode {
    fn from(f: Fft) -> Self {
        match f {
            Fft::Reference => FftMode::Reference,
            Fft::Fixed48 => FftMode::Fixed48,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Clusters,
    Rr,
    Accbuf,
}

impl From<Kind> for SweepKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Clusters => SweepKind::Clusters,
            Kind::Rr => SweepKind::RoundRobin,
            Kind::Accbuf => SweepKind::AccBuffer,
        }
    }
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    pub program: PathBuf,
    #[command(flatten)]
    pub passes: PassFlags,
    #[command(flatten)]
    pub machine: MachineFlags,
    #[arg(long, value_enum, default_value = "schedule")]
    pub emit: Emit,
}

#[derive(Debug, Args)]
pub struct RunFuncArgs {
    pub program: PathBuf,
    /// Cleartext inputs as JSON, `{"x": [1, 2]}`; random if omitted.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    /// Key file from `keygen`; generated from the seed if omitted.
    #[arg(long)]
    pub keys: Option<PathBuf>,
    #[command(flatten)]
    pub passes: PassFlags,
    #[arg(long, value_enum, default_value = "reference")]
    pub fft: Fft,
}

#[derive(Debug, Args)]
pub struct RunPerfArgs {
    pub program: PathBuf,
    #[command(flatten)]
    pub passes: PassFlags,
    #[command(flatten)]
    pub machine: MachineFlags,
    /// Skip the XPU baseline.
    #[arg(long)]
    pub no_xpu: bool,
    /// Also write the bandwidth trace as CSV.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Compiled program with its schedule.
    pub compiled: PathBuf,
    /// Machine file; clusters, round robin and sync come from the schedule.
    #[arg(long)]
    pub machine: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Simulate the XPU baseline instead.
    #[arg(long)]
    pub xpu: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub program: PathBuf,
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// `start:end:step`, inclusive; accumulator buffer values are KiB.
    #[arg(long)]
    pub range: String,
    #[command(flatten)]
    pub passes: PassFlags,
    #[command(flatten)]
    pub machine: MachineFlags,
}

#[derive(Debug, Args)]
pub struct DedupArgs {
    pub program: PathBuf,
    #[command(flatten)]
    pub passes: PassFlags,
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    #[arg(long, value_enum, default_value = "reference")]
    pub fft: Fft,
}

/// A file a command produces, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// What a command produced. `ok` is false when a check failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub summary: String,
    pub artifacts: Vec<Artifact>,
    pub ok: bool,
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    match &cli.command {
        Command::Compile(a) => commands::compile(c, a),
        Command::RunFunc(a) => commands::run_func(c, a),
        Command::RunPerf(a) => commands::run_perf(c, a),
        Command::Simulate(a) => commands::simulate(c, a),
        Command::Sweep(a) => commands::sweep(c, a),
        Command::DedupReport(a) => commands::dedup_report(c, a),
        Command::Keygen(a) => commands::keygen(c, a),
    }
}

/// Runs the command and writes its artifacts. Exit codes: 0 success, 1 a
/// check failed, 2 an error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli).and_then(|o| write_outcome(&cli.common.out, &o).map(|()| o)) {
        Ok(o) => {
            print!("{}", o.summary);
            i32::from(!o.ok)
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn write_outcome(dir: &std::path::Path, o: &Outcome) -> Result<()> {
    for a in &o.artifacts {
        if a.name.contains(['/', '\\']) {
            return Err(Error::Usage(format!("bad artifact name {}", a.name)));
        }
        write_atomic(&dir.join(&a.name), &a.bytes)?;
    }
    Ok(())
}

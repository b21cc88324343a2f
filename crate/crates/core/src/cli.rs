//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for configuration or usage errors, 2 for
//! numeric or I/O failures.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{PaSelector, PrecoderSelector, ScenarioConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    run_pattern_experiment, run_secrecy_vs_angle, run_secrecy_vs_ibo, run_sndr_vs_ibo, RunArtifact,
};

#[derive(Debug, Parser)]
#[command(
    name = "distortion-pls",
    version,
    about = "Secrecy of multi-antenna transmitters with nonlinear amplifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Signal and distortion directivity over angle.
    Pattern(RunArgs),
    /// Secrecy rate at 5% and 10% outage, and its mean, versus back-off.
    SecrecyIbo(RunArgs),
    /// Secrecy rate versus eavesdropper angle.
    SecrecyAngle(RunArgs),
    /// SNDR and SNR of the user and the strongest eavesdropper versus back-off.
    SndrIbo(RunArgs),
    /// Parse and check a configuration file without running anything.
    ValidateConfig(ConfigArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Precoders to evaluate (comma separated).
    #[arg(long, value_delimiter = ',')]
    precoder: Vec<PrecoderSelector>,
    /// Amplifier models to evaluate (comma separated).
    #[arg(long, value_delimiter = ',')]
    pa: Vec<PaSelector>,
    /// Input back-off values in dB (comma separated).
    #[arg(long = "ibo-db", value_delimiter = ',', allow_hyphen_values = true)]
    ibo_db: Vec<f64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Monte-Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

impl ConfigArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        match &self.config {
            Some(path) => ScenarioConfig::load(path),
            None => Ok(ScenarioConfig::default()),
        }
    }
}

impl RunArgs {
    fn scenario(&self) -> Result<ScenarioConfig> {
        let mut cfg = self.config.load()?;
        if !self.precoder.is_empty() {
            cfg.precoder.kinds = Some(self.precoder.clone());
        }
        if !self.pa.is_empty() {
            cfg.pa.models = Some(self.pa.clone());
        }
        if !self.ibo_db.is_empty() {
            cfg.sweep.ibo_db = Some(self.ibo_db.clone());
        }
        if let Some(seed) = self.seed {
            cfg.monte_carlo.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (args, run): (&RunArgs, fn(&ScenarioConfig) -> Result<RunArtifact>) = match &cli.command {
        Command::Pattern(a) => (a, run_pattern_experiment),
        Command::SecrecyIbo(a) => (a, run_secrecy_vs_ibo),
        Command::SecrecyAngle(a) => (a, run_secrecy_vs_angle),
        Command::SndrIbo(a) => (a, run_sndr_vs_ibo),
        Command::ValidateConfig(a) => {
            a.load()?.validate()?;
            println!("configuration ok");
            return Ok(());
        }
    };
    let OutputFormat::Csv = args.format;
    let artifact = run(&args.scenario()?)?;
    for path in artifact.write_to(&args.out_dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Domain(_) => 1,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 1,
        Error::Numeric(_) | Error::Io { .. } => 2,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

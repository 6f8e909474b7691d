use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use ris_pls::experiment::{run, ExperimentSpec, Mode};
use ris_pls::{Error, Scenario};

#[derive(Parser, Debug)]
#[command(name = "ris-pls", version, about = "Simulate and configure 1-bit RIS for physical-layer secrecy")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Scenario JSON; overrides the spec's scenario path.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Experiment spec JSON.
    #[arg(long, global = true)]
    spec: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Run a single seed instead of the spec's list.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Optimize against noisy power measurements.
    #[arg(long, global = true)]
    noisy_measurements: bool,

    /// Print the default spec and scenario as JSON and exit.
    #[arg(long, global = true)]
    print_schema: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Compare all methods over the placement pairs.
    Compare,
    /// Optimize every sector pair and write the codebook.
    CodebookGen,
    /// Select a configuration from a stored codebook.
    CodebookQuery,
    /// Scan the power pattern of a configuration.
    PatternScan,
    /// Narrowband vs wideband gap under a dispersive element model.
    FreqSelectivity,
}

impl Command {
    fn mode(self) -> Mode {
        match self {
            Command::Compare => Mode::Compare,
            Command::CodebookGen => Mode::CodebookGen,
            Command::CodebookQuery => Mode::CodebookQuery,
            Command::PatternScan => Mode::PatternScan,
            Command::FreqSelectivity => Mode::FrequencySelectivity,
        }
    }
}

enum Failure {
    Spec(Error),
    Scenario(Error),
    Run(Error),
    Other(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Spec(_) => 2,
            Failure::Scenario(_) => 3,
            Failure::Run(Error::DimensionMismatch(_) | Error::IndexOutOfRange { .. }) => 4,
            Failure::Run(_) | Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Spec(e) => format!("spec: {e}"),
            Failure::Scenario(e) => format!("scenario: {e}"),
            Failure::Run(e) => e.to_string(),
            Failure::Other(m) => m.clone(),
        }
    }
}

fn schema(mode: Option<Mode>) -> Result<String, Failure> {
    let spec = ExperimentSpec {
        mode,
        ..ExperimentSpec::default()
    };
    let doc = serde_json::json!({
        "spec": serde_json::to_value(&spec).map_err(|e| Failure::Other(e.to_string()))?,
        "scenario": serde_json::from_str::<serde_json::Value>(&Scenario::default().to_json_pretty().map_err(Failure::Run)?)
            .map_err(|e| Failure::Other(e.to_string()))?,
    });
    serde_json::to_string_pretty(&doc).map_err(|e| Failure::Other(e.to_string()))
}

fn execute(cli: &Cli, command: Command) -> Result<(), Failure> {
    let mode = command.mode();
    let mut spec = match &cli.spec {
        Some(path) => ExperimentSpec::load(path).map_err(Failure::Spec)?,
        None => ExperimentSpec::default(),
    };
    if let Some(m) = spec.mode {
        if m != mode {
            return Err(Failure::Spec(Error::Parse(format!("spec mode {m:?} does not match the subcommand"))));
        }
    }
    if let Some(seed) = cli.seed {
        spec.seeds = vec![seed];
    }
    if cli.noisy_measurements {
        spec.noisy_measurements = true;
    }
    spec.validate().map_err(Failure::Spec)?;
    spec.out_dir = Some(cli.out.clone().or(spec.out_dir.take()).unwrap_or_else(|| PathBuf::from(".")));

    let scenario = match cli.scenario.as_ref().or(spec.scenario.as_ref()) {
        Some(path) => Scenario::load(path).map_err(Failure::Scenario)?,
        None => Scenario::default(),
    };

    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Other(format!("thread pool: {e}")))?;
    }

    let output = run(mode, &scenario, &spec).map_err(Failure::Run)?;
    print!("{}", output.summary);
    for f in &output.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = if cli.print_schema {
        schema(cli.command.map(Command::mode)).map(|s| println!("{s}"))
    } else if let Some(command) = cli.command {
        execute(&cli, command)
    } else {
        Cli::command().print_help().ok();
        return ExitCode::from(2);
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

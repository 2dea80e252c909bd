use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qspec_cli::config::{ExperimentConfig, Format, SamplingMode};
use qspec_cli::{compare, init_threads, output, simulate, CliError, Overrides};
use qspec_core::spectrum::validate_sampling;
use qspec_core::trajectory::plan_samples;

#[derive(Parser)]
#[command(name = "qspec", version, about = "Noise spectroscopy with repetitive weak measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correlation, spectrum and peaks for one configuration.
    Simulate(RunArgs),
    /// Resource comparison of the weak method against correlation spectroscopy.
    Compare(RunArgs),
    /// Hoeffding sample count for accuracy delta and failure probability epsilon.
    Plan {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Checks the sampling window of a configuration.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail instead of warning when transition frequencies alias.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, value_enum)]
    sampling: Option<SamplingArg>,
    /// Number of correlation points.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    Exact,
    MonteCarlo,
    Binomial,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            format: self.format.map(|f| match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            }),
            sampling: self.sampling.map(|s| match s {
                SamplingArg::Exact => SamplingMode::Exact,
                SamplingArg::MonteCarlo => SamplingMode::MonteCarlo,
                SamplingArg::Binomial => SamplingMode::Binomial,
            }),
            n: self.n,
        }
        .apply(&mut cfg)?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.load()?;
            let out = simulate(&cfg, args.strict)?;
            for f in output::write_simulation(&cfg, &out)? {
                println!("{}", f.display());
            }
        }
        Command::Compare(args) => {
            let cfg = args.load()?;
            let rows = compare(&cfg)?;
            for f in output::write_comparison(&cfg, &rows)? {
                println!("{}", f.display());
            }
        }
        Command::Plan { delta, epsilon, format } => {
            let plan = plan_samples(delta, epsilon)?;
            match format {
                FormatArg::Csv => println!("delta,epsilon,n_samples\n{},{},{}", plan.delta, plan.epsilon, plan.n_samples),
                FormatArg::Json => println!("{}", serde_json::to_string(&plan).map_err(|e| CliError::Io(e.to_string()))?),
            }
        }
        Command::Validate { config, strict } => {
            let cfg = ExperimentConfig::load(&config)?;
            let tau = cfg.timing().tau;
            let diag = match cfg.bath.build()? {
                qspec_cli::config::Bath::Finite(b) => validate_sampling(&b, tau)?,
                qspec_cli::config::Bath::SpinBoson(sb) => {
                    qspec_core::spectrum::validate_frequencies(&sb.spec.frequencies(), tau)
                }
            };
            println!("nyquist = {}", diag.nyquist);
            println!("max_frequency = {}", diag.max_frequency);
            println!("two_b_norm = {}", diag.two_b_norm);
            for a in &diag.aliased {
                println!("aliased {} -> {}", a.omega, a.folded);
            }
            println!("{}", if diag.passed() { "pass" } else { "fail" });
            if strict && !diag.passed() {
                return Err(CliError::Aliasing(format!("{} aliased frequencies", diag.aliased.len())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qspec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cqed::units::{convert_units, Unit, DEFAULT_REFERENCE_WAVELENGTH_NM};
use cqed_cli::{parse_config, presets, run_to_dir, CliError, Experiment};

#[derive(Parser)]
#[command(name = "cqed", version, about = "Driven quantum dot / photonic cavity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write CSV tables plus a JSON manifest.
    Run {
        /// TOML experiment file.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Bundled experiment file instead of --config.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, value_enum)]
        experiment: Experiment,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `ensemble.master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long, env = "CQED_THREADS")]
        threads: Option<usize>,
    },
    /// Convert a value between rad/ps, GHz, ueV, nm and Q.
    Convert {
        #[arg(long, allow_hyphen_values = true)]
        value: f64,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Reference wavelength for nm and Q, in nm.
        #[arg(long, default_value_t = DEFAULT_REFERENCE_WAVELENGTH_NM)]
        reference: f64,
    },
    /// List the bundled presets, or print one.
    Presets { name: Option<String> },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            preset,
            experiment,
            out,
            seed,
            threads,
        } => {
            if let Some(n) = threads {
                if n == 0 {
                    return Err(CliError::Usage("--threads must be positive".into()));
                }
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Usage(e.to_string()))?;
            }
            let mut cfg = match (config, preset) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    parse_config(&text)?
                }
                (None, Some(name)) => presets::load(&name)?,
                (None, None) => return Err(CliError::Usage("need --config or --preset".into())),
            };
            if let Some(s) = seed {
                cfg.ensemble.master_seed = s;
            }
            let manifest = run_to_dir(&cfg, experiment, &out)?;
            println!("{}", serde_json::to_string_pretty(&manifest).expect("manifest serializes"));
            Ok(())
        }
        Command::Convert { value, from, to, reference } => {
            let f: Unit = from.parse()?;
            let t: Unit = to.parse()?;
            println!("{}", convert_units(value, f, t, reference)?);
            Ok(())
        }
        Command::Presets { name: None } => {
            for n in presets::NAMES {
                println!("{n}");
            }
            Ok(())
        }
        Command::Presets { name: Some(n) } => {
            let text = presets::text(&n).ok_or_else(|| CliError::Usage(format!("unknown preset `{n}`")))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

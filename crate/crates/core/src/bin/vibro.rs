use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use vibroimpact::scenario::{run, ScenarioConfig, ScenarioKind};
use vibroimpact::{Error, Result};

#[derive(Parser)]
#[command(name = "vibro", version, about = "Run collision simulation scenarios")]
struct Cli {
    /// Only print errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List {
        /// One JSON object per line.
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario from a TOML config file or by name.
    Run {
        /// Config file, or a scenario name to run with its defaults.
        config: String,
        /// Output directory (default: `output.dir`, else `out/<scenario>`).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Multiply the sample rate by this factor.
        #[arg(long)]
        oversample: Option<f64>,
        /// Override a config value, e.g. `params.duration=0.5`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn list(as_json: bool) {
    for kind in ScenarioKind::ALL {
        if as_json {
            println!("{}", json!({ "name": kind.name(), "description": kind.description() }));
        } else {
            println!("{:<28} {}", kind.name(), kind.description());
        }
    }
}

fn run_command(
    source: &str,
    out_dir: Option<PathBuf>,
    oversample: Option<f64>,
    overrides: &[String],
    quiet: bool,
) -> Result<()> {
    let mut config = ScenarioConfig::load(source, overrides)?;
    if let Some(factor) = oversample {
        if !(factor >= 1.0 && factor.is_finite()) {
            return Err(Error::Config(format!(
                "--oversample must be a finite factor >= 1, got {factor}"
            )));
        }
        config.oversample = factor;
    }
    let dir = out_dir
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(config.scenario.name()));
    log::info!("running {} into {}", config.scenario, dir.display());
    let summary = run(&config, &dir)?;
    if !quiet {
        println!(
            "{}: wrote {} ({:.2} s)",
            config.scenario,
            summary.out_dir.join("manifest.json").display(),
            summary.manifest["wall_time_s"].as_f64().unwrap_or(0.0)
        );
        if let Some(results) = summary.manifest["results"].as_object() {
            for (key, value) in results {
                if value.is_number() || value.is_boolean() {
                    println!("  {key} = {value}");
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.quiet {
            log::LevelFilter::Error
        } else {
            log::LevelFilter::Info
        })
        .parse_default_env()
        .format_timestamp(None)
        .init();
    let outcome = match cli.command {
        Command::List { json } => {
            list(json);
            Ok(())
        }
        Command::Run {
            config,
            out_dir,
            oversample,
            overrides,
        } => run_command(&config, out_dir, oversample, &overrides, cli.quiet),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

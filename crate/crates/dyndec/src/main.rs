use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dyndec::scenarios::{
    apply_overrides, build_preset, list_presets, parse_config, run, run_preset, verify,
    PresetOverrides,
};

/// Exact simulator for spin-1/2 chains under bang-bang pulse control.
#[derive(Parser)]
#[command(name = "dyndec", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config file.
    Run {
        /// Path to the config file.
        config: PathBuf,
        /// Output directory for CSVs and the manifest.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a named preset scenario.
    Preset {
        /// Preset name (see `dyndec list`).
        name: String,
        /// Rescale the pulse intervals so the first one equals this value
        /// (in units of 1/J), preserving interval ratios.
        #[arg(long)]
        tau: Option<f64>,
        /// Override the chain length.
        #[arg(long)]
        l: Option<usize>,
        /// Override the total evolution time (in units of 1/J).
        #[arg(long)]
        total_time: Option<f64>,
        /// Output directory for CSVs and the manifest.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List the available presets.
    List,
    /// Check the sign tables and average-Hamiltonian identities.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> dyndec::error::Result<ExitCode> {
    match cli.command {
        Command::Run { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            for scenario in parse_config(&text)? {
                let output = run(&scenario, &out)?;
                for f in output.files {
                    println!("wrote {}", f.display());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset {
            name,
            tau,
            l,
            total_time,
            out,
        } => {
            let mut preset = build_preset(&name)?;
            let overrides = PresetOverrides {
                tau,
                l,
                total_time,
                sampling: None,
            };
            apply_overrides(&mut preset, &overrides)?;
            for output in run_preset(&preset, &out)? {
                for f in output.files {
                    println!("wrote {}", f.display());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::List => {
            for preset in list_presets() {
                println!("{}", preset.name);
                println!("    {}", preset.description);
                if preset.configs.len() > 1 {
                    println!("    ({} runs)", preset.configs.len());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify => {
            if verify() {
                println!("all checks passed");
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use adec_core::codec::{self, EncodedBlock};
use adec_core::harness::{self, svg, sweep, ExperimentConfig, HarnessError, Level, VerifyOptions};

#[derive(Parser)]
#[command(name = "adec", version, about = "Sigma-delta quantization with adapted decimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured grid and emit one CSV row per run.
    Sweep {
        config: PathBuf,
        /// Write the CSV here instead of the configured output (or stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write a log-log plot of mean error against rho.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run the verification suite and print a JSON report.
    Verify {
        #[arg(long, value_enum, default_value = "full")]
        level: LevelArg,
        /// Negate the block difference operator in the twist check.
        #[arg(long, hide = true)]
        flip_dbar: bool,
        /// Print every check with its case count and worst margin.
        #[arg(long)]
        detailed: bool,
    },
    /// Encode the first signal at the first grid point.
    Encode {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Decode a block and print its header and values as JSON.
    Decode { file: PathBuf },
    /// Print reconstructions of the first signal for every grid point.
    Reconstruct { config: PathBuf },
    /// Fit decay slopes from a sweep CSV.
    Fit {
        csv: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

enum Failure {
    Verify,
    Input(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<codec::CodecError> for Failure {
    fn from(e: codec::CodecError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn write_svg(path: &Path, fits: &[harness::DecayFit]) -> Result<(), Failure> {
    std::fs::write(path, svg::decay_plot(fits)).map_err(|e| io(path, e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep {
            config,
            output,
            svg,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if output.is_some() {
                cfg.output = output;
            }
            let records = harness::run_sweep(&cfg)?;
            if cfg.output.is_none() {
                let stdout = std::io::stdout();
                harness::write_csv(&records, stdout.lock())?;
            }
            if let Some(path) = svg {
                write_svg(&path, &harness::fit_decay(&records))?;
            }
            let skipped = records.iter().filter(|r| !r.is_ok()).count();
            eprintln!("{} rows, {} not ok", records.len(), skipped);
            Ok(())
        }
        Command::Verify {
            level,
            flip_dbar,
            detailed,
        } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let report = harness::verify(VerifyOptions { level, flip_dbar });
            if detailed {
                print_json(&report)?;
            } else {
                print_json(&report.summary())?;
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Verify)
            }
        }
        Command::Encode { config, output } => {
            let cfg = ExperimentConfig::load(&config)?;
            let block = sweep::encode_first(&cfg)?;
            let mut file = std::fs::File::create(&output).map_err(|e| io(&output, e))?;
            file.write_all(&block.to_bytes()).map_err(|e| io(&output, e))?;
            eprintln!(
                "wrote {} payload bits ({} bytes total)",
                block.header.payload_bits(),
                codec::HEADER_LEN + block.payload.len()
            );
            Ok(())
        }
        Command::Decode { file } => {
            let bytes = std::fs::read(&file).map_err(|e| io(&file, e))?;
            let decoded = codec::decode(&EncodedBlock::from_bytes(&bytes)?)?;
            let h = decoded.header;
            print_json(&serde_json::json!({
                "m": h.m,
                "rho": h.rho,
                "r": h.r,
                "L": h.half_len,
                "delta": h.delta,
                "width": h.width,
                "numerators_re": decoded.numerators_re.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
                "numerators_im": decoded.numerators_im.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
                "values": decoded.values,
            }))
        }
        Command::Reconstruct { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            print_json(&sweep::reconstruct_all(&cfg)?)
        }
        Command::Fit { csv, svg } => {
            let records = sweep::read_csv_file(&csv)?;
            let fits = harness::fit_decay(&records);
            if let Some(path) = svg {
                write_svg(&path, &fits)?;
            }
            print_json(&fits)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

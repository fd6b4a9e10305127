use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use snakesense::pipeline::{self, GaitArgs, ReconstructArgs, SimulateInput};
use snakesense::sysid::CalibrationFitConfig;
use snakesense::viscoelastic::{ForceLinearParams, ParamModel};
use snakesense::Error;

const EXIT_INPUT: u8 = 2;
const EXIT_MODEL: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "snakesense",
    version,
    about = "Piezo-resistive contact-force sensing toolkit"
)]
struct Cli {
    /// Pipeline config JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate calibration sessions, or the resistance of one force trace.
    Simulate {
        /// Probe kind (large_flat, small_flat, sharp_edge, multi_point or all); repeatable.
        #[arg(long = "probe")]
        probes: Vec<String>,
        /// Force CSV (`time_s,value`) to forward-simulate instead of the protocol.
        #[arg(long)]
        force_trace: Option<PathBuf>,
        /// Active area for --force-trace, m².
        #[arg(long, default_value_t = 1.4e-3)]
        area: f64,
        /// Parameter JSON for --force-trace; defaults to the force-linear truth.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Fit the sensor model to a simulated or recorded dataset.
    Fit {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = CalibrationFitConfig::default().smoothing_window)]
        smoothing_window: usize,
        #[arg(long, default_value_t = CalibrationFitConfig::default().settle_time)]
        settle_time: f64,
    },
    /// Recover force from a resistance trace with a fitted calibration.
    Reconstruct {
        #[arg(long)]
        resistance: PathBuf,
        /// Calibration report from `fit`, or a bare calibration JSON.
        #[arg(long)]
        calibration: PathBuf,
        /// Reference force CSV for error metrics.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        area: Option<f64>,
        #[arg(long)]
        fp_tol: Option<f64>,
        #[arg(long)]
        fp_max_iter: Option<usize>,
    },
    /// Conforming keyframe, command stream and body trajectory over an obstacle.
    Gait {
        #[arg(long)]
        obstacle: Option<PathBuf>,
        #[arg(long)]
        robot: Option<PathBuf>,
        /// rad/s
        #[arg(long, default_value_t = snakesense::gait::DEFAULT_SPEED)]
        speed: f64,
        /// Hz
        #[arg(long, default_value_t = snakesense::gait::DEFAULT_RATE)]
        rate: f64,
        /// s; defaults to the full propagation.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value_t = 50)]
        fk_every: usize,
    },
    /// Sampling frequency against sensor count for one and two DAQs.
    Scanbench {
        /// Comma-separated sensor counts; `--sweep` alone gives an empty table.
        #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = [1usize, 36, 100, 300, 512, 1024])]
        sweep: Vec<usize>,
    },
}

enum Failure {
    Error(Error),
    Degenerate(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let settings = pipeline::load_settings(cli.config.as_deref(), cli.seed, cli.out.as_deref())?;
    match cli.command {
        Command::Simulate {
            probes,
            force_trace,
            area,
            params,
        } => {
            let input = match force_trace {
                Some(path) => {
                    let params: ParamModel = match params {
                        Some(p) => snakesense::fsio::read_json(&p)?,
                        None => ForceLinearParams::default().into(),
                    };
                    SimulateInput::ForceTrace { path, area, params }
                }
                None => SimulateInput::Protocol {
                    probes: pipeline::probes_from_names(&probes)?,
                },
            };
            let written = pipeline::cmd_simulate(&settings, &input)?;
            println!("wrote {} item(s) under {}", written.len(), settings.out.display());
        }
        Command::Fit {
            dataset,
            smoothing_window,
            settle_time,
        } => {
            let cfg = CalibrationFitConfig {
                smoothing_window,
                settle_time,
            };
            let outcome = pipeline::cmd_fit(&settings, &dataset, &cfg)?;
            for p in &outcome.report.probes {
                let steady = p
                    .fits
                    .steady_conductance
                    .map_or_else(|| "failed".to_owned(), |f| format!("R2={:.4}", f.r_squared));
                let lines = p
                    .fits
                    .parameter_lines
                    .map_or_else(|| "failed".to_owned(), |l| format!("min R2={:.4}", l.min_r_squared()));
                println!(
                    "{}: steady conductance {steady}, parameter lines {lines}",
                    p.fits.probe.kind.name()
                );
            }
            println!("report: {}", outcome.report_path.display());
            if outcome.report.degenerate {
                let failed: Vec<String> = outcome
                    .report
                    .probes
                    .iter()
                    .filter(|p| p.fits.is_degenerate())
                    .map(|p| {
                        let reason = p
                            .fits
                            .steady_failure
                            .as_ref()
                            .or(p.fits.parameter_failure.as_ref())
                            .map_or("no sessions", |f| f.kind.as_str());
                        format!("{} ({reason})", p.fits.probe.kind.name())
                    })
                    .collect();
                return Err(Failure::Degenerate(format!("degenerate fit: {}", failed.join(", "))));
            }
        }
        Command::Reconstruct {
            resistance,
            calibration,
            reference,
            area,
            fp_tol,
            fp_max_iter,
        } => {
            let args = ReconstructArgs {
                resistance,
                calibration,
                reference,
                area,
                fp_tol,
                fp_max_iter,
            };
            let d = pipeline::cmd_reconstruct(&settings, &args)?;
            println!(
                "{} samples, {} open circuit, {} clamped, {} not converged",
                d.summary.samples, d.summary.no_contact, d.summary.out_of_range, d.summary.not_converged
            );
            if let Some(m) = d.metrics {
                println!(
                    "rms {:.6} N, max {:.6} N, relative rms {:.6}",
                    m.rms, m.max_abs, m.relative_rms
                );
            }
        }
        Command::Gait {
            obstacle,
            robot,
            speed,
            rate,
            duration,
            fk_every,
        } => {
            let args = GaitArgs {
                obstacle,
                robot,
                speed,
                rate,
                duration,
                fk_every,
            };
            let r = pipeline::cmd_gait(&settings, &args)?;
            println!(
                "{} ticks over {:.2} s, min clearance {:.3e} m",
                r.ticks, r.duration, r.min
            );
        }
        Command::Scanbench { sweep } => {
            for row in pipeline::cmd_scanbench(&settings, &sweep)? {
                println!(
                    "{:>6} sensors: {:8.3} Hz (1 DAQ), {:8.3} Hz (2 DAQ)",
                    row.n_sensors, row.freq_1daq_hz, row.freq_2daq_hz
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Degenerate(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DEGENERATE)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_MODEL })
        }
    }
}

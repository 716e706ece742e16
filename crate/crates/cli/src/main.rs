use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dehesa_cli::batch::{read_report, run_batch, BatchConfig, BatchError};
use dehesa_cli::export;
use dehesa_cli::server::{self, ServeConfig, Workspace};
use dehesa_core::segmentation::{Connectivity, Escalation, DEFAULT_SHRUB_THRESHOLD_PX};
use dehesa_core::{GkbParams, SegmentationConfig, StockingTable};

#[derive(Parser, Debug)]
#[command(
    author,
    version,
    about = "Covered wooded area estimation for dehesa orthophotos"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Segment every orthophoto in a directory and write a report.
    Segment {
        #[arg(long)]
        input: PathBuf,
        /// Directory of `{id}.png` label masks (0 soil, 1 tree, 2 shrub).
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = EscalationArg::Auto)]
        escalation: EscalationArg,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Print a finished run's report as a table or CSV.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Serve the review API over a workspace directory.
    Serve {
        #[arg(long)]
        workspace: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Built review UI assets to serve at `/`.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = EscalationArg::Manual)]
        escalation: EscalationArg,
        #[command(flatten)]
        params: ParamArgs,
    },
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// Number of clusters.
    #[arg(long = "c", default_value_t = 2)]
    clusters: usize,
    /// Covariance blend toward the identity, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_SHRUB_THRESHOLD_PX)]
    shrub_threshold_px: u64,
    /// Shrub threshold as ground area; overrides --shrub-threshold-px.
    #[arg(long)]
    shrub_threshold_m2: Option<f64>,
    #[arg(long, value_parser = ["4", "8"], default_value = "8")]
    connectivity: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pixel size in meters for images without a world file.
    #[arg(long)]
    assume_pixel_size: Option<f64>,
    /// JSON stocking table: `[[max_sac | null, load], ...]`.
    #[arg(long)]
    stocking_table: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EscalationArg {
    Auto,
    Manual,
}

impl ParamArgs {
    fn segmentation(&self, escalation: EscalationArg) -> SegmentationConfig {
        let connectivity = if self.connectivity == "4" {
            Connectivity::Four
        } else {
            Connectivity::Eight
        };
        SegmentationConfig {
            gkb: GkbParams::new(self.clusters)
                .with_gamma(self.gamma)
                .with_seed(self.seed),
            shrub_threshold_px: self.shrub_threshold_px,
            shrub_threshold_m2: self.shrub_threshold_m2,
            connectivity,
            escalation: match escalation {
                EscalationArg::Auto => Escalation::Auto,
                EscalationArg::Manual => Escalation::Manual,
            },
        }
    }

    fn stocking(&self) -> anyhow::Result<StockingTable> {
        match &self.stocking_table {
            Some(path) => Ok(StockingTable::from_path(path)?),
            None => Ok(StockingTable::default()),
        }
    }
}

fn usage_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Segment {
            input,
            ground_truth,
            out,
            escalation,
            params,
        } => {
            let segmentation = params.segmentation(escalation);
            if let Err(e) = segmentation.validate() {
                return usage_error(e);
            }
            let stocking = match params.stocking() {
                Ok(t) => t,
                Err(e) => return usage_error(e),
            };
            let config = BatchConfig {
                segmentation,
                ground_truth_dir: ground_truth,
                assume_pixel_size: params.assume_pixel_size,
                stocking,
                workers: None,
            };
            match run_batch(&input, &config, &out) {
                Ok(report) => {
                    println!("{}", out.join(dehesa_cli::batch::REPORT_FILE).display());
                    if report.failures.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e @ BatchError::EmptyInput(_)) => usage_error(e),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Report { run, csv } => {
            let report = match read_report(&run) {
                Ok(r) => r,
                Err(e) => return usage_error(e),
            };
            let stdout = io::stdout().lock();
            let written = if csv {
                export::write_csv(&report, stdout).map_err(anyhow::Error::from)
            } else {
                export::write_table(&report, stdout).map_err(anyhow::Error::from)
            };
            match written.and_then(|_| Ok(io::stdout().flush()?)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Serve {
            workspace,
            port,
            host,
            ui_dir,
            escalation,
            params,
        } => {
            let segmentation = params.segmentation(escalation);
            if let Err(e) = segmentation.validate() {
                return usage_error(e);
            }
            if !workspace.is_dir() {
                return usage_error(format!("{} is not a directory", workspace.display()));
            }
            let stocking = match params.stocking() {
                Ok(t) => t,
                Err(e) => return usage_error(e),
            };
            let config = ServeConfig {
                segmentation,
                assume_pixel_size: params.assume_pixel_size,
                stocking,
                workers: None,
            };
            let ws = match Workspace::open(&workspace, config) {
                Ok(ws) => ws,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
            match runtime.block_on(server::serve(ws, &host, port, ui_dir.as_deref())) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}

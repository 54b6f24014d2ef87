use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use lumaflow_core::flow::{load_model, sample, save_model, train_with_report, LossKind, TrainConfig};
use lumaflow_core::image::linear_to_srgb;
use lumaflow_core::io::{read_png, write_png, BitDepth};
use lumaflow_core::pipeline::{build_dataset, ingest, Dataset, DatasetParams, DEFAULT_TAU};
use lumaflow_core::retinex::{alpha_blend, retinex_interpolate, InterpMethod, DEFAULT_STRENGTHS};
use lumaflow_core::service::{serve, ServiceState};
use lumaflow_core::weights::MaskParams;
use lumaflow_core::{BilateralParams, Error};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "lumaflow",
    version,
    about = "Continuous-strength low-light enhancement toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest `<id>_low.png`/`<id>_normal.png` pairs and build a strength dataset.
    Build {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_STRENGTHS.to_vec())]
        strengths: Vec<f64>,
        #[arg(long, default_value_t = InterpMethod::Retinex)]
        method: InterpMethod,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
    },
    /// Recompute the cached weight maps of a dataset.
    Weights {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 3.0)]
        d: f64,
        #[arg(long, default_value_t = 0.8)]
        alpha: f64,
        #[arg(long, default_value_t = 0.2)]
        wmin: f64,
        #[arg(long, default_value_t = 2)]
        dilate: usize,
    },
    /// Train the flow model on a dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "wfm")]
        loss: LossKind,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
        lr: f64,
        #[arg(long, default_value_t = TrainConfig::default().batch_size)]
        batch: usize,
    },
    /// Enhance one image with a trained model.
    Enhance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        strength: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Interpolate between a low-light image and its reference.
    Interp {
        #[arg(long)]
        i0: PathBuf,
        #[arg(long)]
        i1: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = InterpMethod::Retinex)]
        method: InterpMethod,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API over a built dataset.
    Serve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        host: IpAddr,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Directory with the UI bundle served under `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Io { .. }) => EXIT_IO,
        Some(Error::Config(_) | Error::Range { .. }) => EXIT_USAGE,
        Some(_) => EXIT_DATA,
        None => EXIT_IO,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Build {
            pairs,
            out,
            strengths,
            method,
            tau,
        } => {
            if !(tau.is_finite() && tau >= 0.0) {
                return Err(Error::Range {
                    name: "tau",
                    value: tau,
                }
                .into());
            }
            let params = DatasetParams {
                bilateral: BilateralParams::default(),
                mask: MaskParams::default(),
                tau,
                strengths,
                method,
            };
            let report = ingest(&pairs, tau, &params.mask)?;
            let accepted = report.records.iter().filter(|r| r.accepted).count();
            info!(
                "{} pairs found, {accepted} accepted, {} incomplete skipped",
                report.records.len(),
                report.skipped.len()
            );
            for r in report.records.iter().filter(|r| !r.accepted) {
                info!(
                    "rejected {}: {}",
                    r.pair_id,
                    r.reason.as_deref().unwrap_or("edge consistency above threshold")
                );
            }
            build_dataset(&report.records, &params, &out)?;
            info!("dataset written to {}", out.display());
        }
        Command::Weights {
            dataset,
            d,
            alpha,
            wmin,
            dilate,
        } => {
            let mut ds = Dataset::open(&dataset)?;
            let mask = MaskParams {
                d,
                alpha,
                w_min: wmin,
                dilate_radius: dilate,
                ..ds.manifest.parameters.mask
            };
            ds.regenerate_weights(mask)?;
            info!("weight maps regenerated in {}", dataset.display());
        }
        Command::Train {
            dataset,
            loss,
            steps,
            seed,
            out,
            lr,
            batch,
        } => {
            let ds = Dataset::open(&dataset)?;
            let examples = ds.training_examples()?;
            let mut strengths = ds.manifest.parameters.strengths.clone();
            strengths.push(1.0);
            let cfg = TrainConfig {
                learning_rate: lr,
                steps,
                batch_size: batch,
                seed,
                loss,
                strengths,
                ..TrainConfig::default()
            };
            info!("training on {} pairs ({loss:?}, {steps} steps)", examples.len());
            let (net, report) = train_with_report(&examples, &cfg)?;
            if let Some(last) = report.adapter_losses.last() {
                info!("final adapter loss {last:.6}");
            }
            save_model(&out, &net)?;
            info!("model written to {}", out.display());
        }
        Command::Enhance {
            model,
            input,
            strength,
            steps,
            seed,
            out,
        } => {
            let net = load_model(&model)?;
            let img = read_png(&input)?;
            let result = linear_to_srgb(&sample(&net, &img, strength, steps, seed)?)?;
            write_png(&out, &result, BitDepth::Eight)?;
        }
        Command::Interp { i0, i1, s, method, out } => {
            let a = read_png(&i0)?;
            let b = read_png(&i1)?;
            let result = match method {
                InterpMethod::Retinex => retinex_interpolate(&a, &b, s, &BilateralParams::default())?,
                InterpMethod::Alpha => alpha_blend(&a, &b, s)?,
            };
            write_png(&out, &result, BitDepth::Eight)?;
        }
        Command::Serve {
            dataset,
            port,
            host,
            model,
            static_dir,
        } => {
            let ds = Dataset::open(&dataset)?;
            let model = model.map(load_model).transpose()?;
            let state = ServiceState {
                dataset: ds,
                model,
                static_dir,
            };
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .context("starting async runtime")?;
            runtime.block_on(serve(state, SocketAddr::new(host, port)))?;
        }
    }
    Ok(())
}

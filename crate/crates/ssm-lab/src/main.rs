//! `ssm-lab`: experiment CLI for the secure spatial modulation laboratory.
//!
//! Each subcommand reads its defaults, optionally a TOML config file, and
//! individual flag overrides; it writes a CSV artifact plus a JSON
//! metadata sidecar. Identical configurations produce byte-identical
//! CSVs at any thread count. Gating checks (the complexity table) exit
//! nonzero on mismatch.

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::time::Instant;

use ssm_lab::config::{
    load_toml, BerSweepConfig, ComplexityConfig, DnnEvalConfig, DnnTrainConfig, PaCompareConfig,
    SrSweepConfig, TasCompareConfig,
};
use ssm_lab::output::write_artifact;
use ssm_lab::runners;

#[derive(Parser)]
#[command(name = "ssm-lab", version, about = "Secure spatial modulation experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bit error rate versus SNR for the three detectors on common draws.
    BerSweep(BerArgs),
    /// Secrecy rate versus SNR for one antenna-selection strategy.
    SrSnrSweep(SrSweepArgs),
    /// Secrecy-rate comparison of antenna-selection strategies.
    TasCompare(TasCompareArgs),
    /// Secrecy-rate comparison of power-allocation strategies.
    PaCompare(PaCompareArgs),
    /// Measured vs published complex-multiplication counts (gating).
    ComplexityTable(ComplexityArgs),
    /// Generate labeled data and train the learned power allocator.
    DnnTrain(DnnTrainArgs),
    /// Score a trained allocator on a held-out dataset.
    DnnEval(DnnEvalArgs),
    /// Dump constellation points and Gray labels.
    ConstellationDump(ConstellationArgs),
}

macro_rules! apply {
    ($cfg:expr, $args:expr, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })+
    };
}

fn base_config<T: Default + serde::de::DeserializeOwned>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        Some(p) => load_toml(p),
        None => Ok(T::default()),
    }
}

#[derive(Args)]
struct BerArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    modulation: Option<String>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    snr_db: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "ber.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SrSweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_a: Option<usize>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    n_b: Option<usize>,
    #[arg(long)]
    n_e: Option<usize>,
    #[arg(long)]
    modulation: Option<String>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long, value_delimiter = ',')]
    snr_db: Option<Vec<f64>>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    noise_samples: Option<usize>,
    #[arg(long)]
    subset_cap: Option<u128>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "sr_sweep.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct TasCompareArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_a: Option<usize>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    n_b: Option<usize>,
    #[arg(long)]
    n_e: Option<usize>,
    #[arg(long)]
    modulation: Option<String>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    snr_db: Option<Vec<f64>>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    noise_samples: Option<usize>,
    #[arg(long)]
    subset_cap: Option<u128>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "tas_compare.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct PaCompareArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_a: Option<usize>,
    #[arg(long)]
    n_b: Option<usize>,
    #[arg(long)]
    n_e: Option<usize>,
    #[arg(long)]
    modulation: Option<String>,
    #[arg(long)]
    power: Option<f64>,
    /// Strategy specs, e.g. fixed:0.1,grid,gradient,max-p-sinr-ansnr,dnn:model.json
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    snr_db: Option<Vec<f64>>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    noise_samples: Option<usize>,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "pa_compare.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n_t: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    n_r: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "complexity.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct DnnTrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    test_samples: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    label_noise_samples: Option<usize>,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Labeled training data; generated here when absent, reused otherwise.
    #[arg(long, default_value = "dnn_train.jsonl")]
    train_data: PathBuf,
    #[arg(long, default_value = "dnn_test.jsonl")]
    test_data: PathBuf,
    #[arg(long, default_value = "pa_model.json")]
    model_out: PathBuf,
    /// Per-epoch loss log (CSV).
    #[arg(long, default_value = "training_log.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct DnnEvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "qpsk")]
    modulation: String,
    #[arg(long)]
    noise_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "dnn_eval.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ConstellationArgs {
    #[arg(long, default_value = "qam16")]
    modulation: String,
    #[arg(long, default_value = "constellation.csv")]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::BerSweep(args) => {
            let started = Instant::now();
            let mut cfg: BerSweepConfig = base_config(&args.config)?;
            apply!(cfg, args, n_t, n_r, modulation, power, beta, snr_db, trials, seed);
            let run = runners::run_ber_sweep(&cfg)?;
            write_artifact(&args.out, &run.csv, &cfg, cfg.seed, started)?;
            println!("wrote {} ({} rows)", args.out.display(), run.points.len());
        }
        Command::SrSnrSweep(args) => {
            let started = Instant::now();
            let mut cfg: SrSweepConfig = base_config(&args.config)?;
            apply!(cfg, args, n_a, n_t, n_b, n_e, modulation, power, beta, strategy);
            apply!(cfg, args, snr_db, channels, noise_samples, subset_cap, seed);
            let run = runners::run_sr_snr_sweep(&cfg)?;
            write_artifact(&args.out, &run.csv, &cfg, cfg.seed, started)?;
            println!("wrote {} ({} rows)", args.out.display(), run.series.len());
        }
        Command::TasCompare(args) => {
            let started = Instant::now();
            let mut cfg: TasCompareConfig = base_config(&args.config)?;
            apply!(cfg, args, n_a, n_t, n_b, n_e, modulation, power, beta, strategies);
            apply!(cfg, args, snr_db, channels, noise_samples, subset_cap, seed);
            let run = runners::run_tas_compare(&cfg)?;
            write_artifact(&args.out, &run.csv, &cfg, cfg.seed, started)?;
            println!("wrote {} ({} rows)", args.out.display(), run.series.len());
        }
        Command::PaCompare(args) => {
            let started = Instant::now();
            let mut cfg: PaCompareConfig = base_config(&args.config)?;
            apply!(cfg, args, n_a, n_b, n_e, modulation, power, strategies);
            apply!(cfg, args, snr_db, channels, noise_samples, grid_step, seed);
            let run = runners::run_pa_compare(&cfg)?;
            write_artifact(&args.out, &run.csv, &cfg, cfg.seed, started)?;
            println!("wrote {} ({} rows)", args.out.display(), run.series.len());
        }
        Command::ComplexityTable(args) => {
            let started = Instant::now();
            let mut cfg: ComplexityConfig = base_config(&args.config)?;
            apply!(cfg, args, n_t, n_r, m, seed);
            let run = runners::run_complexity_table(&cfg)?;
            write_artifact(&args.out, &run.csv, &cfg, cfg.seed, started)?;
            println!("wrote {} ({} rows)", args.out.display(), run.rows.len());
            if !run.all_match {
                bail!("complexity mismatch: measured counts deviate from the formulas");
            }
        }
        Command::DnnTrain(args) => {
            let started = Instant::now();
            let mut cfg: DnnTrainConfig = base_config(&args.config)?;
            apply!(cfg, args, samples, test_samples, epochs, batch_size, learning_rate);
            apply!(cfg, args, label_noise_samples, grid_step, seed);
            let run = runners::run_dnn_train(&cfg, &args.train_data, &args.test_data)?;
            run.model.save_json(&args.model_out)?;
            write_artifact(&args.out, &run.log_csv, &cfg, cfg.seed, started)?;
            println!(
                "trained {} epochs; best val mse {:.3e} at epoch {}; model -> {}",
                run.log.epochs.len(),
                run.log.best_val_mse,
                run.log.best_epoch,
                args.model_out.display()
            );
        }
        Command::DnnEval(args) => {
            let started = Instant::now();
            let mut cfg: DnnEvalConfig = base_config(&args.config)?;
            apply!(cfg, args, noise_samples, seed);
            let model = ssm_core::dnn::PaModel::load_json(&args.model)?;
            let test_set = ssm_core::dnn::data::PaDataset::load_jsonl(&args.data)?;
            let (report, csv) = runners::run_dnn_eval(&model, &test_set, &args.modulation, &cfg)?;
            write_artifact(&args.out, &csv, &cfg, cfg.seed, started)?;
            println!(
                "evaluated {} samples: sr ratio {:.4} (midpoint baseline {:.4})",
                report.n, report.sr_ratio, report.sr_ratio_midpoint
            );
        }
        Command::ConstellationDump(args) => {
            let started = Instant::now();
            let csv = runners::run_constellation_dump(&args.modulation)?;
            write_artifact(&args.out, &csv, &args.modulation, 0, started)?;
            println!("wrote {}", args.out.display());
        }
    }
    Ok(())
}

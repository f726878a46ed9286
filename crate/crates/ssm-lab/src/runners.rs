//! Experiment runners. Each takes a config, fans trials out over the rayon
//! pool with one deterministic random stream per trial, and returns both
//! the CSV artifact and the raw per-draw numbers for further analysis.
//!
//! Stream layout: `root(seed).child(snr_index).child(trial)` addresses a
//! trial; within it, fixed child tags separate channel generation, bit
//! draws, receiver noise and Monte Carlo scoring. Aggregations are either
//! exact integer sums or ordered reductions, so results are identical at
//! any worker count.

use anyhow::{bail, ensure, Context, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::path::Path;

use ssm_core::channel::{gen_scenario, select};
use ssm_core::constellation::Constellation;
use ssm_core::detector;
use ssm_core::dnn::data::{generate_dataset, DatasetConfig, PaDataset};
use ssm_core::dnn::train::{evaluate, train, EvalReport, TrainConfig, TrainingLog};
use ssm_core::dnn::{DnnPaStrategy, ModelConfig, PaModel};
use ssm_core::linalg::{sample_cn, ComplexMatrix, RngStream};
use ssm_core::pa::{classical_from_spec, PaContext, PaStrategy};
use ssm_core::secrecy::secrecy_rate;
use ssm_core::sm_link::{bits_per_symbol, map_bits, PaSplit};
use ssm_core::tas::{self, TasContext};

use crate::config::{
    parse_modulation, BerSweepConfig, ComplexityConfig, DnnEvalConfig, DnnTrainConfig,
    PaCompareConfig, SrSweepConfig, TasCompareConfig,
};
use crate::output::{fmt_f64, fmt_sci};

// Child-stream tags within one trial.
const TAG_CHANNEL: u64 = 0;
const TAG_EVAL: u64 = 1;
const TAG_BITS: u64 = 2;
const TAG_NOISE: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub detector: String,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerSweepRun {
    pub points: Vec<BerPoint>,
    pub csv: String,
}

impl BerSweepRun {
    pub fn ber(&self, snr_db: f64, detector: &str) -> Option<&BerPoint> {
        self.points
            .iter()
            .find(|p| p.snr_db == snr_db && p.detector == detector)
    }
}

/// Bit error rate of the three detectors on identical (channel, bits,
/// noise) draws per trial. The effective channel seen by the detectors is
/// `sqrt(beta P) H`; artificial noise is exactly nulled at the receiver,
/// so it never appears in `y`.
pub fn run_ber_sweep(cfg: &BerSweepConfig) -> Result<BerSweepRun> {
    let c = parse_modulation(&cfg.modulation)?;
    ensure!(cfg.n_t.is_power_of_two(), "N_t must be a power of two");
    ensure!((0.0..=1.0).contains(&cfg.beta), "beta must lie in [0, 1]");
    let bits = bits_per_symbol(cfg.n_t, c.size());
    let detectors = detector::all();
    let base = RngStream::root(cfg.seed);

    let mut points = Vec::new();
    for (si, &snr_db) in cfg.snr_db.iter().enumerate() {
        let sigma2 = cfg.power / 10f64.powf(snr_db / 10.0);
        let amp = (cfg.beta * cfg.power).sqrt();
        let snr_stream = base.child(si as u64);
        let errors: Vec<u64> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<Vec<u64>> {
                let trial = snr_stream.child(t as u64);
                let mut ch_rng = trial.child(TAG_CHANNEL).rng();
                let h = ComplexMatrix::from_vec(
                    cfg.n_r,
                    cfg.n_t,
                    sample_cn(&mut ch_rng, cfg.n_r * cfg.n_t, 1.0),
                );
                let h_eff = h.scale(amp);
                let word = rand::Rng::gen_range(
                    &mut trial.child(TAG_BITS).rng(),
                    0..(1u32 << bits),
                );
                let sym = map_bits(word, cfg.n_t, &c)?;
                let noise = sample_cn(&mut trial.child(TAG_NOISE).rng(), cfg.n_r, sigma2);
                let y: Vec<Complex64> = (0..cfg.n_r)
                    .map(|i| h_eff[(i, sym.antenna)] * sym.point + noise[i])
                    .collect();
                detectors
                    .iter()
                    .map(|d| {
                        let r = d.detect(&y, &h_eff, &c)?;
                        Ok(u64::from((r.bits ^ word).count_ones()))
                    })
                    .collect()
            })
            .try_reduce(
                || vec![0u64; detectors.len()],
                |mut acc, row| {
                    for (a, r) in acc.iter_mut().zip(row) {
                        *a += r;
                    }
                    Ok(acc)
                },
            )?;
        if cfg.trials == 0 {
            continue; // header-only output
        }
        let total_bits = cfg.trials as u64 * bits as u64;
        for (d, &bit_errors) in detectors.iter().zip(&errors) {
            let ber = bit_errors as f64 / total_bits as f64;
            let ci95 = 1.96 * (ber * (1.0 - ber) / total_bits as f64).sqrt();
            points.push(BerPoint {
                snr_db,
                detector: d.name().to_string(),
                trials: cfg.trials as u64,
                bit_errors,
                ber,
                ci95,
            });
        }
    }

    let mut csv = String::from("snr_db,detector,trials,bit_errors,ber,ci95\n");
    for p in &points {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.snr_db,
            p.detector,
            p.trials,
            p.bit_errors,
            fmt_sci(p.ber),
            fmt_sci(p.ci95)
        ));
    }
    Ok(BerSweepRun { points, csv })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrSeries {
    pub snr_db: f64,
    pub strategy: String,
    /// Per-channel-draw secrecy rates, draw order preserved.
    pub values: Vec<f64>,
}

impl SrSeries {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }

    pub fn stderr(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let var =
            self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrCompareRun {
    pub series: Vec<SrSeries>,
    pub csv: String,
}

impl SrCompareRun {
    pub fn series(&self, snr_db: f64, strategy: &str) -> Option<&SrSeries> {
        self.series
            .iter()
            .find(|s| s.snr_db == snr_db && s.strategy == strategy)
    }
}

fn sr_csv(series: &[SrSeries]) -> String {
    let mut csv = String::from("snr_db,strategy,sr_mean,sr_stderr,n_channels\n");
    for s in series {
        // Zero requested channels: nothing to aggregate, header-only file.
        if s.values.is_empty() {
            continue;
        }
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            s.snr_db,
            s.strategy,
            fmt_f64(s.mean()),
            fmt_f64(s.stderr()),
            s.values.len()
        ));
    }
    csv
}

struct TasSweepParams<'a> {
    n_a: usize,
    n_t: usize,
    n_b: usize,
    n_e: usize,
    constellation: &'a Constellation,
    power: f64,
    beta: f64,
    snr_db: &'a [f64],
    channels: usize,
    noise_samples: usize,
    subset_cap: u128,
    seed: u64,
}

/// Shared core of the selection sweeps: for every (SNR, draw) the channel
/// comes from a draw-indexed stream (the same fading across SNR points)
/// and every strategy is scored on the same evaluation stream.
fn run_tas_sweep(strategies: &[String], p: &TasSweepParams) -> Result<Vec<SrSeries>> {
    let strats: Vec<Box<dyn tas::TasStrategy>> = strategies
        .iter()
        .map(|name| tas::by_name(name).map_err(Into::into))
        .collect::<Result<_>>()?;
    let pa = PaSplit::new(p.beta, p.power)?;
    let base = RngStream::root(p.seed);

    let mut series: Vec<SrSeries> = Vec::new();
    for &snr_db in p.snr_db {
        let per_draw: Vec<Vec<f64>> = (0..p.channels)
            .into_par_iter()
            .map(|d| -> Result<Vec<f64>> {
                let draw = base.child(d as u64);
                let scenario = gen_scenario(
                    &mut draw.child(TAG_CHANNEL).rng(),
                    p.n_a,
                    p.n_b,
                    p.n_e,
                    snr_db,
                    p.power,
                );
                let eval_stream = draw.child(TAG_EVAL);
                let ctx = TasContext {
                    n_t: p.n_t,
                    pa,
                    constellation: p.constellation,
                    noise_samples: p.noise_samples,
                    rng_stream: eval_stream,
                    subset_cap: p.subset_cap,
                };
                strats
                    .iter()
                    .map(|strategy| {
                        let sel = strategy.select(&scenario, &ctx)?;
                        let ss = select(&scenario, &sel.selection)?;
                        let est = secrecy_rate(
                            &ss,
                            &pa,
                            p.constellation,
                            p.noise_samples,
                            eval_stream,
                        )?;
                        Ok(est.sr)
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (k, strategy) in strategies.iter().enumerate() {
            series.push(SrSeries {
                snr_db,
                strategy: strategy.clone(),
                values: per_draw.iter().map(|row| row[k]).collect(),
            });
        }
    }
    Ok(series)
}

/// Secrecy rate versus SNR for a single selection strategy.
pub fn run_sr_snr_sweep(cfg: &SrSweepConfig) -> Result<SrCompareRun> {
    let c = parse_modulation(&cfg.modulation)?;
    let series = run_tas_sweep(
        std::slice::from_ref(&cfg.strategy),
        &TasSweepParams {
            n_a: cfg.n_a,
            n_t: cfg.n_t,
            n_b: cfg.n_b,
            n_e: cfg.n_e,
            constellation: &c,
            power: cfg.power,
            beta: cfg.beta,
            snr_db: &cfg.snr_db,
            channels: cfg.channels,
            noise_samples: cfg.noise_samples,
            subset_cap: cfg.subset_cap,
            seed: cfg.seed,
        },
    )?;
    let csv = sr_csv(&series);
    Ok(SrCompareRun { series, csv })
}

/// Secrecy-rate comparison of selection strategies under common random
/// numbers.
pub fn run_tas_compare(cfg: &TasCompareConfig) -> Result<SrCompareRun> {
    let c = parse_modulation(&cfg.modulation)?;
    let series = run_tas_sweep(
        &cfg.strategies,
        &TasSweepParams {
            n_a: cfg.n_a,
            n_t: cfg.n_t,
            n_b: cfg.n_b,
            n_e: cfg.n_e,
            constellation: &c,
            power: cfg.power,
            beta: cfg.beta,
            snr_db: &cfg.snr_db,
            channels: cfg.channels,
            noise_samples: cfg.noise_samples,
            subset_cap: cfg.subset_cap,
            seed: cfg.seed,
        },
    )?;
    let csv = sr_csv(&series);
    Ok(SrCompareRun { series, csv })
}

/// Builds a power-allocation strategy from its spec string, including the
/// learned allocator (`dnn:<model.json>`).
pub fn pa_strategy_from_spec(spec: &str) -> Result<Box<dyn PaStrategy>> {
    if let Some(path) = spec.strip_prefix("dnn:") {
        return Ok(Box::new(DnnPaStrategy::load(Path::new(path))?));
    }
    Ok(classical_from_spec(spec)?)
}

/// Secrecy-rate comparison of power-allocation strategies on the full
/// array (the setting requires `N_a` transmit antennas all active).
pub fn run_pa_compare(cfg: &PaCompareConfig) -> Result<SrCompareRun> {
    let c = parse_modulation(&cfg.modulation)?;
    ensure!(
        cfg.n_a.is_power_of_two(),
        "allocation comparison uses the full array; N_a must be a power of two"
    );
    let strats: Vec<Box<dyn PaStrategy>> = cfg
        .strategies
        .iter()
        .map(|s| pa_strategy_from_spec(s))
        .collect::<Result<_>>()?;
    let names: Vec<String> = strats.iter().map(|s| s.name()).collect();
    let selection: Vec<usize> = (0..cfg.n_a).collect();
    let base = RngStream::root(cfg.seed);

    let mut series: Vec<SrSeries> = Vec::new();
    for &snr_db in &cfg.snr_db {
        let per_draw: Vec<Vec<f64>> = (0..cfg.channels)
            .into_par_iter()
            .map(|d| -> Result<Vec<f64>> {
                let draw = base.child(d as u64);
                let scenario = gen_scenario(
                    &mut draw.child(TAG_CHANNEL).rng(),
                    cfg.n_a,
                    cfg.n_b,
                    cfg.n_e,
                    snr_db,
                    cfg.power,
                );
                let ss = select(&scenario, &selection)?;
                let mut ctx = PaContext::new(&c, cfg.noise_samples, draw.child(TAG_EVAL));
                ctx.grid_step = cfg.grid_step;
                strats
                    .iter()
                    .map(|s| Ok(s.allocate(&ss, &ctx)?.sr_at_beta))
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (k, name) in names.iter().enumerate() {
            series.push(SrSeries {
                snr_db,
                strategy: name.clone(),
                values: per_draw.iter().map(|row| row[k]).collect(),
            });
        }
    }
    let csv = sr_csv(&series);
    Ok(SrCompareRun { series, csv })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRow {
    pub n_t: usize,
    pub n_r: usize,
    pub m: usize,
    pub detector: String,
    pub cm_measured: u64,
    pub cm_formula: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRun {
    pub rows: Vec<ComplexityRow>,
    pub all_match: bool,
    pub csv: String,
}

/// Executes each detector once per configuration and tabulates measured
/// complex-multiplication counts against the published formulas.
pub fn run_complexity_table(cfg: &ComplexityConfig) -> Result<ComplexityRun> {
    let detectors = detector::all();
    let base = RngStream::root(cfg.seed);
    let mut rows = Vec::new();
    let mut all_match = true;
    for (i, &n_t) in cfg.n_t.iter().enumerate() {
        for (j, &n_r) in cfg.n_r.iter().enumerate() {
            for (k, &m) in cfg.m.iter().enumerate() {
                let c = Constellation::build(ssm_core::ConstellationKind::SquareQam, m)?;
                let stream = base.child((i * 100 + j * 10 + k) as u64);
                let mut rng = stream.rng();
                let h = ComplexMatrix::from_vec(n_r, n_t, sample_cn(&mut rng, n_r * n_t, 1.0));
                let y = sample_cn(&mut rng, n_r, 1.0);
                for d in &detectors {
                    let measured = d.detect(&y, &h, &c)?.cm_count;
                    let formula = d.cm_formula(n_t, n_r, m);
                    all_match &= measured == formula;
                    rows.push(ComplexityRow {
                        n_t,
                        n_r,
                        m,
                        detector: d.name().to_string(),
                        cm_measured: measured,
                        cm_formula: formula,
                    });
                }
            }
        }
    }
    let mut csv = String::from("n_t,n_r,m,detector,cm_measured,cm_formula\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n_t, r.n_r, r.m, r.detector, r.cm_measured, r.cm_formula
        ));
    }
    Ok(ComplexityRun { rows, all_match, csv })
}

/// Constellation dump: one row per point with its Gray label.
pub fn run_constellation_dump(modulation: &str) -> Result<String> {
    let c = parse_modulation(modulation)?;
    let width = c.bits_per_symbol() as usize;
    let mut csv = String::from("index,bits,re,im\n");
    for (idx, p) in c.points().iter().enumerate() {
        csv.push_str(&format!(
            "{},{:0width$b},{},{}\n",
            idx,
            idx,
            fmt_f64(p.re),
            fmt_f64(p.im),
        ));
    }
    Ok(csv)
}

pub struct DnnTrainRun {
    pub model: PaModel,
    pub log: TrainingLog,
    pub train_set: PaDataset,
    pub test_set: PaDataset,
    pub log_csv: String,
}

/// Generates (or loads) the labeled datasets, trains the allocator, and
/// renders the per-epoch loss log. Dataset files are reused when present
/// so repeated runs skip the labeling cost.
pub fn run_dnn_train(
    cfg: &DnnTrainConfig,
    train_path: &Path,
    test_path: &Path,
) -> Result<DnnTrainRun> {
    let c = parse_modulation(&cfg.modulation)?;
    ensure!(cfg.n_a.is_power_of_two(), "training uses the full array; N_a must be a power of two");

    let dataset_cfg = |n_samples: usize, seed: u64| DatasetConfig {
        n_samples,
        n_a: cfg.n_a,
        n_b: cfg.n_b,
        n_e: cfg.n_e,
        snr_db_range: cfg.snr_db_range,
        power: cfg.power,
        grid_step: cfg.grid_step,
        noise_samples: cfg.label_noise_samples,
        seed,
    };
    let train_set = if train_path.exists() {
        PaDataset::load_jsonl(train_path)?
    } else {
        let ds = generate_dataset(&dataset_cfg(cfg.samples, cfg.seed), &c)?;
        ds.save_jsonl(train_path)?;
        ds
    };
    let test_set = if test_path.exists() {
        PaDataset::load_jsonl(test_path)?
    } else {
        // Disjoint stream: test draws never overlap the training draws.
        let ds = generate_dataset(&dataset_cfg(cfg.test_samples, cfg.seed ^ 0x5EED_C0DE), &c)?;
        ds.save_jsonl(test_path)?;
        ds
    };

    let model_cfg = ModelConfig {
        n_b: cfg.n_b,
        n_t: cfg.n_a,
        conv1_filters: cfg.conv1_filters,
        conv2_filters: cfg.conv2_filters,
        kernel: cfg.kernel,
        hidden: cfg.hidden,
        ..ModelConfig::default()
    };
    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        val_fraction: cfg.val_fraction,
        seed: cfg.seed,
        ..TrainConfig::default()
    };
    let (model, log) = train(&train_set, &model_cfg, &train_cfg)?;

    let mut log_csv = String::from("epoch,train_mse,val_mse\n");
    for e in &log.epochs {
        log_csv.push_str(&format!("{},{},{}\n", e.epoch, fmt_sci(e.train_mse), fmt_sci(e.val_mse)));
    }
    Ok(DnnTrainRun { model, log, train_set, test_set, log_csv })
}

/// Scores a trained model on a held-out dataset; also renders the report
/// as a two-column CSV.
pub fn run_dnn_eval(
    model: &PaModel,
    test_set: &PaDataset,
    modulation: &str,
    cfg: &DnnEvalConfig,
) -> Result<(EvalReport, String)> {
    let c = parse_modulation(modulation)?;
    if test_set.is_empty() {
        bail!("evaluation dataset is empty");
    }
    let report = evaluate(
        model,
        &test_set.samples,
        &c,
        cfg.noise_samples,
        RngStream::root(cfg.seed),
    )
    .context("evaluating model")?;
    let mut csv = String::from("metric,value\n");
    csv.push_str(&format!("n,{}\n", report.n));
    csv.push_str(&format!("beta_mse,{}\n", fmt_sci(report.beta_mse)));
    csv.push_str(&format!("sr_predicted,{}\n", fmt_f64(report.sr_predicted)));
    csv.push_str(&format!("sr_labels,{}\n", fmt_f64(report.sr_labels)));
    csv.push_str(&format!("sr_midpoint,{}\n", fmt_f64(report.sr_midpoint)));
    csv.push_str(&format!("sr_ratio,{}\n", fmt_f64(report.sr_ratio)));
    csv.push_str(&format!("sr_ratio_midpoint,{}\n", fmt_f64(report.sr_ratio_midpoint)));
    Ok((report, csv))
}

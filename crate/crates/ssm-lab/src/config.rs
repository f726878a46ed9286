//! Experiment configurations: serde structs with pinned defaults,
//! loadable from TOML and overridable flag by flag from the CLI.
//!
//! Every runner echoes its full configuration into the output metadata
//! sidecar, and equal configurations produce byte-identical CSVs.

use anyhow::{bail, Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::path::Path;

use ssm_core::constellation::{Constellation, ConstellationKind};

/// Reads a TOML config file into the given experiment config type.
pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Resolves a modulation name (`qam4|qam16|qam64|qam256|bpsk|qpsk|psk8|...`).
pub fn parse_modulation(name: &str) -> Result<Constellation> {
    let (kind, m) = match name.to_ascii_lowercase().as_str() {
        "bpsk" | "psk2" => (ConstellationKind::Psk, 2),
        "qpsk" | "psk4" => (ConstellationKind::Psk, 4),
        "psk8" => (ConstellationKind::Psk, 8),
        "psk16" => (ConstellationKind::Psk, 16),
        other => {
            if let Some(m) = other.strip_prefix("qam") {
                (ConstellationKind::SquareQam, m.parse::<usize>()?)
            } else {
                bail!("unknown modulation '{name}'");
            }
        }
    };
    Ok(Constellation::build(kind, m)?)
}

fn snr_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut v = start;
    while v <= stop + 1e-9 {
        out.push(v);
        v += step;
    }
    out
}

/// Bit-error-rate sweep over SNR for all three detectors on identical draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerSweepConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub modulation: String,
    /// Total transmit power in watts.
    pub power: f64,
    /// Fraction of power on the confidential message. Artificial noise is
    /// exactly nulled at the receiver, so values below 1 only scale down
    /// the useful signal.
    pub beta: f64,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for BerSweepConfig {
    fn default() -> Self {
        Self {
            n_t: 4,
            n_r: 4,
            modulation: "qam16".into(),
            power: 4.0,
            beta: 1.0,
            snr_db: snr_grid(0.0, 20.0, 2.0),
            trials: 50_000,
            seed: 1,
        }
    }
}

/// Secrecy rate versus SNR for one selection strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SrSweepConfig {
    pub n_a: usize,
    pub n_t: usize,
    pub n_b: usize,
    pub n_e: usize,
    pub modulation: String,
    pub power: f64,
    pub beta: f64,
    pub strategy: String,
    pub snr_db: Vec<f64>,
    pub channels: usize,
    pub noise_samples: usize,
    pub subset_cap: u128,
    pub seed: u64,
}

impl Default for SrSweepConfig {
    fn default() -> Self {
        Self {
            n_a: 6,
            n_t: 4,
            n_b: 2,
            n_e: 2,
            modulation: "qpsk".into(),
            power: 4.0,
            beta: 1.0,
            strategy: "max-slnr".into(),
            snr_db: snr_grid(-5.0, 30.0, 5.0),
            channels: 200,
            noise_samples: 500,
            subset_cap: ssm_core::tas::DEFAULT_SUBSET_CAP,
            seed: 1,
        }
    }
}

/// Secrecy-rate comparison of several selection strategies under common
/// random numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TasCompareConfig {
    pub n_a: usize,
    pub n_t: usize,
    pub n_b: usize,
    pub n_e: usize,
    pub modulation: String,
    pub power: f64,
    pub beta: f64,
    pub strategies: Vec<String>,
    pub snr_db: Vec<f64>,
    pub channels: usize,
    pub noise_samples: usize,
    pub subset_cap: u128,
    pub seed: u64,
}

impl Default for TasCompareConfig {
    fn default() -> Self {
        Self {
            n_a: 6,
            n_t: 4,
            n_b: 2,
            n_e: 2,
            modulation: "qpsk".into(),
            power: 4.0,
            beta: 1.0,
            strategies: vec![
                "exhaustive-sr".into(),
                "max-slnr".into(),
                "edas".into(),
                "random".into(),
            ],
            snr_db: snr_grid(-5.0, 30.0, 5.0),
            channels: 200,
            noise_samples: 500,
            subset_cap: ssm_core::tas::DEFAULT_SUBSET_CAP,
            seed: 1,
        }
    }
}

/// Secrecy-rate comparison of power-allocation strategies on the full array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaCompareConfig {
    pub n_a: usize,
    pub n_b: usize,
    pub n_e: usize,
    pub modulation: String,
    pub power: f64,
    /// Strategy specs: `fixed:<beta>`, `grid`, `gradient`,
    /// `max-p-sinr-ansnr`, or `dnn:<model.json>`.
    pub strategies: Vec<String>,
    pub snr_db: Vec<f64>,
    pub channels: usize,
    pub noise_samples: usize,
    pub grid_step: f64,
    pub seed: u64,
}

impl Default for PaCompareConfig {
    fn default() -> Self {
        Self {
            n_a: 4,
            n_b: 2,
            n_e: 2,
            modulation: "qpsk".into(),
            power: 4.0,
            strategies: vec![
                "fixed:0.1".into(),
                "fixed:0.3".into(),
                "fixed:0.5".into(),
                "grid".into(),
                "gradient".into(),
                "max-p-sinr-ansnr".into(),
            ],
            snr_db: vec![0.0, 5.0, 10.0, 15.0],
            channels: 200,
            noise_samples: 500,
            grid_step: ssm_core::pa::DEFAULT_GRID_STEP,
            seed: 1,
        }
    }
}

/// Measured versus published complex-multiplication counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComplexityConfig {
    pub n_t: Vec<usize>,
    pub n_r: Vec<usize>,
    pub m: Vec<usize>,
    pub seed: u64,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        Self { n_t: vec![2, 4, 8], n_r: vec![2, 4], m: vec![4, 16, 64, 256], seed: 1 }
    }
}

/// Dataset generation plus training for the learned allocator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DnnTrainConfig {
    pub n_a: usize,
    pub n_b: usize,
    pub n_e: usize,
    pub modulation: String,
    pub power: f64,
    /// Training-file size; the trainer holds out `val_fraction` of it.
    pub samples: usize,
    pub test_samples: usize,
    pub snr_db_range: (f64, f64),
    pub grid_step: f64,
    /// Noise draws per candidate when labeling.
    pub label_noise_samples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub val_fraction: f64,
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub kernel: usize,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for DnnTrainConfig {
    fn default() -> Self {
        Self {
            n_a: 4,
            n_b: 2,
            n_e: 2,
            modulation: "qpsk".into(),
            power: 4.0,
            samples: 9_000,
            test_samples: 1_000,
            snr_db_range: (0.0, 20.0),
            grid_step: 0.05,
            label_noise_samples: 128,
            epochs: 80,
            batch_size: 32,
            learning_rate: 1e-3,
            val_fraction: 1.0 / 9.0,
            conv1_filters: 8,
            conv2_filters: 16,
            kernel: 2,
            hidden: 32,
            seed: 7,
        }
    }
}

/// Secrecy-rate scoring of a trained model on a held-out dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DnnEvalConfig {
    pub noise_samples: usize,
    pub seed: u64,
}

impl Default for DnnEvalConfig {
    fn default() -> Self {
        Self { noise_samples: 400, seed: 11 }
    }
}

//! Labeled datasets for the learned allocator: channel realizations paired
//! with grid-search allocation factors, stored as JSON lines (one sample
//! per line, complex entries as `[re, im]` pairs).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::channel::{gen_scenario, select, Scenario};
use crate::constellation::Constellation;
use crate::linalg::RngStream;
use crate::pa::{GridSearchPa, PaContext, PaStrategy};
use crate::{Error, Result};

/// One labeled draw: the scenario and its grid-search optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaSample {
    pub scenario: Scenario,
    pub beta_star: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PaDataset {
    pub samples: Vec<PaSample>,
}

impl PaDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for sample in &self.samples {
            serde_json::to_writer(&mut out, sample)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut samples = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            samples.push(serde_json::from_str(&line)?);
        }
        Ok(Self { samples })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n_samples: usize,
    /// Transmit array size; must be a power of two so the full array is
    /// selected (the learned allocator's input planes are `N_b x N_t`).
    pub n_a: usize,
    pub n_b: usize,
    pub n_e: usize,
    pub snr_db_range: (f64, f64),
    pub power: f64,
    /// Grid pitch for the labeling search.
    pub grid_step: f64,
    /// Noise draws per candidate in the labeling search.
    pub noise_samples: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            n_a: 4,
            n_b: 2,
            n_e: 2,
            snr_db_range: (0.0, 20.0),
            power: 4.0,
            grid_step: 0.05,
            noise_samples: 128,
            seed: 1,
        }
    }
}

/// Draws i.i.d. scenarios with SNR uniform over the configured range and
/// labels each with the grid-search optimum. Sample `i` uses child streams
/// of `seed`'s stream `i`, so regeneration is byte-identical at any worker
/// count.
pub fn generate_dataset(cfg: &DatasetConfig, c: &Constellation) -> Result<PaDataset> {
    if !cfg.n_a.is_power_of_two() {
        return Err(Error::InvalidSelection(format!(
            "dataset array size {} must be a power of two",
            cfg.n_a
        )));
    }
    let selection: Vec<usize> = (0..cfg.n_a).collect();
    let samples: Vec<PaSample> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| -> Result<PaSample> {
            let stream = RngStream::root(cfg.seed).child(i as u64);
            let snr_db = stream
                .child(0)
                .rng()
                .gen_range(cfg.snr_db_range.0..=cfg.snr_db_range.1);
            let scenario = gen_scenario(
                &mut stream.child(1).rng(),
                cfg.n_a,
                cfg.n_b,
                cfg.n_e,
                snr_db,
                cfg.power,
            );
            let ss = select(&scenario, &selection)?;
            let mut ctx = PaContext::new(c, cfg.noise_samples, stream.child(2));
            ctx.grid_step = cfg.grid_step;
            let label = GridSearchPa.allocate(&ss, &ctx)?;
            Ok(PaSample { scenario, beta_star: label.beta })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PaDataset { samples })
}

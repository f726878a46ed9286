//! Adam training and secrecy-rate evaluation for the learned allocator.
//!
//! Training is deliberately single-threaded with a fixed batch reduction
//! order: given the same dataset, configuration and seed it produces
//! bit-identical weights. The returned model carries the weights of the
//! epoch with the best validation loss.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::channel::select;
use crate::constellation::Constellation;
use crate::linalg::RngStream;
use crate::secrecy::secrecy_rate;
use crate::sm_link::PaSplit;
use crate::{Error, Result};

use super::data::{PaDataset, PaSample};
use super::layers::Tensor3;
use super::{planes_from_channels, ModelConfig, PaModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 80,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
}

/// Standard Adam with bias correction.
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(n_params: usize, cfg: &TrainConfig) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            lr: cfg.learning_rate,
            b1: cfg.beta1,
            b2: cfg.beta2,
            eps: cfg.epsilon,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.b1.powi(self.t as i32);
        let bc2 = 1.0 - self.b2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.b1 * self.m[i] + (1.0 - self.b1) * grads[i];
            self.v[i] = self.b2 * self.v[i] + (1.0 - self.b2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

struct Prepared {
    planes: Tensor3,
    sigma2: f64,
    label: f64,
}

fn prepare(samples: &[PaSample]) -> Result<Vec<Prepared>> {
    samples
        .iter()
        .map(|s| {
            Ok(Prepared {
                planes: planes_from_channels(&s.scenario.h_b, &s.scenario.h_e)?,
                sigma2: s.scenario.sigma2,
                label: s.beta_star,
            })
        })
        .collect()
}

fn mse_over(model: &PaModel, set: &[&Prepared]) -> Result<f64> {
    let mut sum = 0.0;
    for p in set {
        let beta = model.forward(&p.planes, p.sigma2)?;
        sum += (beta - p.label).powi(2);
    }
    Ok(sum / set.len().max(1) as f64)
}

/// Trains on a 90/10 train/validation split (seeded shuffle) and returns
/// the best-validation model with the per-epoch loss log.
pub fn train(
    dataset: &PaDataset,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<(PaModel, TrainingLog)> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::EmptyDataset(format!("{n} samples, need at least 2")));
    }
    let prepared = prepare(&dataset.samples)?;

    let stream = RngStream::root(cfg.seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut stream.child(0).rng());
    let val_n = ((n as f64 * cfg.val_fraction).round() as usize).clamp(1, n - 1);
    let (val_idx, train_idx) = indices.split_at(val_n);
    let val_set: Vec<&Prepared> = val_idx.iter().map(|&i| &prepared[i]).collect();

    let mut model = PaModel::init(*model_cfg, stream.child(1));
    let mut params = model.params_flat();
    let mut adam = Adam::new(params.len(), cfg);
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, Vec<f64>, usize)> = None;

    let mut order: Vec<usize> = train_idx.to_vec();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut stream.child(2 + epoch as u64).rng());
        let mut train_sq_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = vec![0.0; params.len()];
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let p = &prepared[i];
                let cache = model.forward_cached(&p.planes, p.sigma2)?;
                let err = cache.beta - p.label;
                train_sq_sum += err * err;
                let sample_grads = model.backward(&cache, 2.0 * err * scale);
                for (g, sg) in grads.iter_mut().zip(sample_grads) {
                    *g += sg;
                }
            }
            adam.step(&mut params, &grads);
            model.set_params_flat(&params);
        }
        let train_mse = train_sq_sum / order.len() as f64;
        let val_mse = mse_over(&model, &val_set)?;
        log.epochs.push(EpochStats { epoch, train_mse, val_mse });
        let improved = best.as_ref().map(|(b, _, _)| val_mse < *b).unwrap_or(true);
        if improved {
            best = Some((val_mse, params.clone(), epoch));
        }
    }

    let (best_val, best_params, best_epoch) = best.expect("at least one epoch");
    model.set_params_flat(&best_params);
    log.best_epoch = best_epoch;
    log.best_val_mse = best_val;
    Ok((model, log))
}

/// Secrecy-rate scorecard for a trained model on held-out samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    /// Mean squared error between predictions and grid-search labels.
    pub beta_mse: f64,
    /// Ergodic secrecy rate at the predicted factors.
    pub sr_predicted: f64,
    /// Ergodic secrecy rate at the stored labels.
    pub sr_labels: f64,
    /// Ergodic secrecy rate at the constant bracket midpoint.
    pub sr_midpoint: f64,
    /// `sr_predicted / sr_labels`.
    pub sr_ratio: f64,
    /// `sr_midpoint / sr_labels`.
    pub sr_ratio_midpoint: f64,
}

/// Scores predictions against labels under common random numbers: for each
/// sample the three allocation factors (predicted, label, midpoint) are
/// evaluated on the same noise stream.
pub fn evaluate(
    model: &PaModel,
    samples: &[PaSample],
    c: &Constellation,
    noise_samples: usize,
    rng_stream: RngStream,
) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset("evaluation set is empty".into()));
    }
    let midpoint = (model.cfg.beta_min + model.cfg.beta_max) / 2.0;
    let rows: Vec<(f64, f64, f64, f64)> = samples
        .par_iter()
        .enumerate()
        .map(|(i, sample)| -> Result<(f64, f64, f64, f64)> {
            let selection: Vec<usize> = (0..sample.scenario.n_a()).collect();
            let ss = select(&sample.scenario, &selection)?;
            let predicted = model.predict(&ss.hb_s, &ss.he_s, ss.sigma2)?;
            let stream = rng_stream.child(i as u64);
            let sr_at = |beta: f64| -> Result<f64> {
                let pa = PaSplit::new(beta, ss.power)?;
                Ok(secrecy_rate(&ss, &pa, c, noise_samples, stream)?.sr)
            };
            Ok((
                (predicted - sample.beta_star).powi(2),
                sr_at(predicted)?,
                sr_at(sample.beta_star)?,
                sr_at(midpoint)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = rows.len() as f64;
    let beta_mse = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let sr_predicted = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let sr_labels = rows.iter().map(|r| r.2).sum::<f64>() / n;
    let sr_midpoint = rows.iter().map(|r| r.3).sum::<f64>() / n;
    Ok(EvalReport {
        n: rows.len(),
        beta_mse,
        sr_predicted,
        sr_labels,
        sr_midpoint,
        sr_ratio: sr_predicted / sr_labels,
        sr_ratio_midpoint: sr_midpoint / sr_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gen_scenario;
    use crate::constellation::ConstellationKind;
    use crate::dnn::data::DatasetConfig;

    fn qpsk() -> Constellation {
        Constellation::build(ConstellationKind::Psk, 4).unwrap()
    }

    fn synthetic_dataset(n: usize, label: impl Fn(usize) -> f64) -> PaDataset {
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let stream = RngStream::root(900).child(i as u64);
            let snr_db = (i % 20) as f64;
            let scenario = gen_scenario(&mut stream.rng(), 4, 2, 2, snr_db, 4.0);
            samples.push(PaSample { scenario, beta_star: label(i) });
        }
        PaDataset { samples }
    }

    #[test]
    fn constant_labels_learned_quickly() {
        let dataset = synthetic_dataset(2000, |_| 0.3);
        let cfg = TrainConfig { epochs: 50, batch_size: 16, ..TrainConfig::default() };
        let (_, log) = train(&dataset, &ModelConfig::default(), &cfg).unwrap();
        assert!(
            log.best_val_mse < 1e-4,
            "constant label not learned: val mse {}",
            log.best_val_mse
        );
    }

    #[test]
    fn shuffled_labels_stall_at_label_variance() {
        // Labels carry no signal; validation MSE should hover around the
        // label variance rather than collapse.
        let labels: Vec<f64> = (0..300).map(|i| 0.1 + 0.8 * ((i * 7919) % 100) as f64 / 100.0).collect();
        let mean = labels.iter().sum::<f64>() / labels.len() as f64;
        let var = labels.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / labels.len() as f64;
        let dataset = synthetic_dataset(300, |i| labels[i]);
        let cfg = TrainConfig { epochs: 30, ..TrainConfig::default() };
        let (_, log) = train(&dataset, &ModelConfig::default(), &cfg).unwrap();
        assert!(
            log.best_val_mse > 0.4 * var && log.best_val_mse < 2.5 * var,
            "val mse {} vs label variance {var}",
            log.best_val_mse
        );
    }

    #[test]
    fn training_is_deterministic() {
        let dataset = synthetic_dataset(60, |i| 0.2 + 0.01 * (i % 10) as f64);
        let cfg = TrainConfig { epochs: 5, ..TrainConfig::default() };
        let (m1, log1) = train(&dataset, &ModelConfig::default(), &cfg).unwrap();
        let (m2, log2) = train(&dataset, &ModelConfig::default(), &cfg).unwrap();
        assert_eq!(m1.params_flat(), m2.params_flat());
        assert_eq!(log1, log2);
    }

    #[test]
    fn empty_dataset_rejected() {
        let dataset = PaDataset::default();
        assert!(matches!(
            train(&dataset, &ModelConfig::default(), &TrainConfig::default()),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn perfect_predictions_score_ratio_one() {
        // A model that predicts the constant label everywhere: SR ratio 1.
        let cfg = DatasetConfig {
            n_samples: 20,
            noise_samples: 60,
            ..DatasetConfig::default()
        };
        let mut dataset = crate::dnn::data::generate_dataset(&cfg, &qpsk()).unwrap();
        for s in dataset.samples.iter_mut() {
            s.beta_star = 0.5; // bracket midpoint
        }
        let model = PaModel::zeros(ModelConfig::default()); // predicts 0.5
        let report = evaluate(&model, &dataset.samples, &qpsk(), 60, RngStream::root(31)).unwrap();
        assert!((report.sr_ratio - 1.0).abs() < 1e-12);
        assert!(report.beta_mse < 1e-20);
    }
}

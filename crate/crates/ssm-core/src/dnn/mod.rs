//! Learned power allocation: a small convolutional network that maps a
//! channel realization and noise variance to an allocation factor.
//!
//! The network has two inputs. Input 1 is a four-plane tensor holding the
//! real and imaginary parts of the desired and eavesdropper channels
//! (each `N_b x N_t`); input 2 is the scalar noise variance, concatenated
//! with the flattened convolutional features. The stack is
//!
//! ```text
//! conv(f1, 2x2, same) -> ReLU -> max-pool -> conv(f2, 2x2, same) -> ReLU
//!   -> flatten -> [features, sigma2] -> dense(hidden) -> ReLU -> dense(1)
//!   -> sigmoid scaled to the allocation bracket
//! ```
//!
//! so the prediction always lands inside the bracket by construction.
//! Filter counts, kernel size and the hidden width are configuration
//! parameters; the defaults (8 and 16 filters, 2x2 kernels, 32 hidden
//! units) are the smallest stack that is non-degenerate on 2x4 planes.
//!
//! Training data pairs channel draws with grid-search labels
//! ([`data::generate_dataset`]); [`train::train`] fits the weights with
//! Adam and [`train::evaluate`] scores the model by the secrecy rate its
//! predictions achieve against those labels. Models persist as versioned
//! JSON with row-major weight arrays.

pub mod data;
pub mod layers;
pub mod train;

use serde::{Deserialize, Serialize};

use crate::channel::SelectedScenario;
use crate::linalg::{ComplexMatrix, RngStream};
use crate::pa::{PaContext, PaResult, PaStrategy};
use crate::sm_link::PaSplit;
use crate::{Error, Result};

use layers::{relu_backward, relu_in_place, sigmoid, Conv2d, Dense, MaxPool, Tensor3};

/// Network geometry and output bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_b: usize,
    pub n_t: usize,
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub kernel: usize,
    pub hidden: usize,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_b: 2,
            n_t: 4,
            conv1_filters: 8,
            conv2_filters: 16,
            kernel: 2,
            hidden: 32,
            beta_min: crate::pa::DEFAULT_BRACKET.0,
            beta_max: crate::pa::DEFAULT_BRACKET.1,
        }
    }
}

impl ModelConfig {
    fn pool(&self) -> MaxPool {
        MaxPool::for_plane(self.n_b, self.n_t)
    }

    fn flat_len(&self) -> usize {
        let (ph, pw) = self.pool().out_dims(self.n_b, self.n_t);
        self.conv2_filters * ph * pw
    }
}

/// The trained allocator: weights plus the geometry they were built for.
#[derive(Debug, Clone, PartialEq)]
pub struct PaModel {
    pub cfg: ModelConfig,
    conv1: Conv2d,
    conv2: Conv2d,
    dense1: Dense,
    dense2: Dense,
}

/// Intermediate activations kept for backpropagation.
pub struct ForwardCache {
    input: Tensor3,
    act1: Tensor3,
    pooled: Tensor3,
    argmax: Vec<usize>,
    act2: Tensor3,
    features: Vec<f64>,
    hidden: Vec<f64>,
    squashed: f64,
    pub beta: f64,
}

impl PaModel {
    /// All-zero weights; the forward pass then outputs the bracket midpoint.
    pub fn zeros(cfg: ModelConfig) -> Self {
        let k = cfg.kernel;
        Self {
            conv1: Conv2d::zeros(4, cfg.conv1_filters, k, k),
            conv2: Conv2d::zeros(cfg.conv1_filters, cfg.conv2_filters, k, k),
            dense1: Dense::zeros(cfg.flat_len() + 1, cfg.hidden),
            dense2: Dense::zeros(cfg.hidden, 1),
            cfg,
        }
    }

    /// He-initialized weights drawn from the given stream.
    pub fn init(cfg: ModelConfig, rng_stream: RngStream) -> Self {
        let mut model = Self::zeros(cfg);
        let mut rng = rng_stream.rng();
        let mut fill = |w: &mut [f64], fan_in: usize| {
            let std = (2.0 / fan_in as f64).sqrt();
            let normal = rand_distr::Normal::new(0.0, std).unwrap();
            for v in w {
                *v = rand_distr::Distribution::sample(&normal, &mut rng);
            }
        };
        let k2 = cfg.kernel * cfg.kernel;
        fill(&mut model.conv1.weights, 4 * k2);
        fill(&mut model.conv2.weights, cfg.conv1_filters * k2);
        fill(&mut model.dense1.weights, cfg.flat_len() + 1);
        fill(&mut model.dense2.weights, cfg.hidden);
        model
    }

    /// Predicted allocation factor for one channel tensor and noise variance.
    pub fn forward(&self, planes: &Tensor3, sigma2: f64) -> Result<f64> {
        Ok(self.forward_cached(planes, sigma2)?.beta)
    }

    pub fn forward_cached(&self, planes: &Tensor3, sigma2: f64) -> Result<ForwardCache> {
        if planes.c != 4 || planes.h != self.cfg.n_b || planes.w != self.cfg.n_t {
            return Err(Error::ModelMismatch(format!(
                "input planes {}x{}x{} do not match model {}x{}x{}",
                planes.c, planes.h, planes.w, 4, self.cfg.n_b, self.cfg.n_t
            )));
        }
        let mut act1 = self.conv1.forward(planes);
        relu_in_place(&mut act1.data);
        let (pooled, argmax) = self.cfg.pool().forward(&act1);
        let mut act2 = self.conv2.forward(&pooled);
        relu_in_place(&mut act2.data);
        let mut features = act2.data.clone();
        features.push(sigma2);
        let mut hidden = self.dense1.forward(&features);
        relu_in_place(&mut hidden);
        let z = self.dense2.forward(&hidden)[0];
        let squashed = sigmoid(z);
        let beta = self.cfg.beta_min + (self.cfg.beta_max - self.cfg.beta_min) * squashed;
        Ok(ForwardCache { input: planes.clone(), act1, pooled, argmax, act2, features, hidden, squashed, beta })
    }

    /// Gradient of a scalar loss with respect to every parameter, given
    /// `d loss / d beta` for the cached sample. Layout matches
    /// [`PaModel::params_flat`].
    pub fn backward(&self, cache: &ForwardCache, d_beta: f64) -> Vec<f64> {
        let s = cache.squashed;
        let dz = d_beta * (self.cfg.beta_max - self.cfg.beta_min) * s * (1.0 - s);

        let (mut d_hidden, g_w2, g_b2) = self.dense2.backward(&cache.hidden, &[dz]);
        relu_backward(&cache.hidden, &mut d_hidden);
        let (d_features, g_w1, g_b1) = self.dense1.backward(&cache.features, &d_hidden);

        let mut d_act2 = Tensor3::zeros(cache.act2.c, cache.act2.h, cache.act2.w);
        d_act2.data.copy_from_slice(&d_features[..cache.act2.len()]);
        relu_backward(&cache.act2.data, &mut d_act2.data);
        let (d_pooled, g_cw2, g_cb2) = self.conv2.backward(&cache.pooled, &d_act2);

        let mut d_act1 = self.cfg.pool().backward(
            &d_pooled,
            &cache.argmax,
            (cache.act1.c, cache.act1.h, cache.act1.w),
        );
        relu_backward(&cache.act1.data, &mut d_act1.data);
        let (_, g_cw1, g_cb1) = self.conv1.backward(&cache.input, &d_act1);

        let mut grads = Vec::with_capacity(self.param_count());
        grads.extend(g_cw1);
        grads.extend(g_cb1);
        grads.extend(g_cw2);
        grads.extend(g_cb2);
        grads.extend(g_w1);
        grads.extend(g_b1);
        grads.extend(g_w2);
        grads.extend(g_b2);
        grads
    }

    pub fn param_count(&self) -> usize {
        self.conv1.weights.len()
            + self.conv1.bias.len()
            + self.conv2.weights.len()
            + self.conv2.bias.len()
            + self.dense1.weights.len()
            + self.dense1.bias.len()
            + self.dense2.weights.len()
            + self.dense2.bias.len()
    }

    /// Flat parameter vector: conv1 (weights, bias), conv2, dense1, dense2.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend(&self.conv1.weights);
        out.extend(&self.conv1.bias);
        out.extend(&self.conv2.weights);
        out.extend(&self.conv2.bias);
        out.extend(&self.dense1.weights);
        out.extend(&self.dense1.bias);
        out.extend(&self.dense2.weights);
        out.extend(&self.dense2.bias);
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count(), "parameter count mismatch");
        let mut cursor = 0;
        for slice in [
            &mut self.conv1.weights,
            &mut self.conv1.bias,
            &mut self.conv2.weights,
            &mut self.conv2.bias,
            &mut self.dense1.weights,
            &mut self.dense1.bias,
            &mut self.dense2.weights,
            &mut self.dense2.bias,
        ] {
            let len = slice.len();
            slice.copy_from_slice(&params[cursor..cursor + len]);
            cursor += len;
        }
    }

    /// Prediction straight from selected channel matrices.
    pub fn predict(&self, h_b: &ComplexMatrix, h_e: &ComplexMatrix, sigma2: f64) -> Result<f64> {
        let planes = planes_from_channels(h_b, h_e)?;
        self.forward(&planes, sigma2)
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let file = ModelFile {
            version: MODEL_FILE_VERSION,
            config: self.cfg,
            conv1_w: self.conv1.weights.clone(),
            conv1_b: self.conv1.bias.clone(),
            conv2_w: self.conv2.weights.clone(),
            conv2_b: self.conv2.bias.clone(),
            dense1_w: self.dense1.weights.clone(),
            dense1_b: self.dense1.bias.clone(),
            dense2_w: self.dense2.weights.clone(),
            dense2_b: self.dense2.bias.clone(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::ModelMismatch(format!(
                "model file version {} (expected {MODEL_FILE_VERSION})",
                file.version
            )));
        }
        let mut model = Self::zeros(file.config);
        let expected = [
            (model.conv1.weights.len(), file.conv1_w.len(), "conv1 weights"),
            (model.conv1.bias.len(), file.conv1_b.len(), "conv1 bias"),
            (model.conv2.weights.len(), file.conv2_w.len(), "conv2 weights"),
            (model.conv2.bias.len(), file.conv2_b.len(), "conv2 bias"),
            (model.dense1.weights.len(), file.dense1_w.len(), "dense1 weights"),
            (model.dense1.bias.len(), file.dense1_b.len(), "dense1 bias"),
            (model.dense2.weights.len(), file.dense2_w.len(), "dense2 weights"),
            (model.dense2.bias.len(), file.dense2_b.len(), "dense2 bias"),
        ];
        for (want, got, what) in expected {
            if want != got {
                return Err(Error::ModelMismatch(format!("{what}: {got} values, expected {want}")));
            }
        }
        model.conv1.weights = file.conv1_w;
        model.conv1.bias = file.conv1_b;
        model.conv2.weights = file.conv2_w;
        model.conv2.bias = file.conv2_b;
        model.dense1.weights = file.dense1_w;
        model.dense1.bias = file.dense1_b;
        model.dense2.weights = file.dense2_w;
        model.dense2.bias = file.dense2_b;
        Ok(model)
    }
}

const MODEL_FILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    config: ModelConfig,
    conv1_w: Vec<f64>,
    conv1_b: Vec<f64>,
    conv2_w: Vec<f64>,
    conv2_b: Vec<f64>,
    dense1_w: Vec<f64>,
    dense1_b: Vec<f64>,
    dense2_w: Vec<f64>,
    dense2_b: Vec<f64>,
}

/// Stacks [Re H_b, Im H_b, Re H_e, Im H_e] into the network's input tensor.
pub fn planes_from_channels(h_b: &ComplexMatrix, h_e: &ComplexMatrix) -> Result<Tensor3> {
    if h_b.rows() != h_e.rows() || h_b.cols() != h_e.cols() {
        return Err(Error::ModelMismatch(format!(
            "channel planes need matching shapes, got {}x{} and {}x{}",
            h_b.rows(),
            h_b.cols(),
            h_e.rows(),
            h_e.cols()
        )));
    }
    let (h, w) = (h_b.rows(), h_b.cols());
    let mut planes = Tensor3::zeros(4, h, w);
    for y in 0..h {
        for x in 0..w {
            *planes.at_mut(0, y, x) = h_b[(y, x)].re;
            *planes.at_mut(1, y, x) = h_b[(y, x)].im;
            *planes.at_mut(2, y, x) = h_e[(y, x)].re;
            *planes.at_mut(3, y, x) = h_e[(y, x)].im;
        }
    }
    Ok(planes)
}

/// The learned allocator behind the common power-allocation trait.
pub struct DnnPaStrategy {
    pub model: PaModel,
}

impl DnnPaStrategy {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        Ok(Self { model: PaModel::load_json(path)? })
    }
}

impl PaStrategy for DnnPaStrategy {
    fn name(&self) -> String {
        "dnn".to_string()
    }

    fn allocate(&self, ss: &SelectedScenario, ctx: &PaContext) -> Result<PaResult> {
        let beta = self.model.predict(&ss.hb_s, &ss.he_s, ss.sigma2)?;
        let pa = PaSplit::new(beta, ss.power)?;
        let sr = crate::secrecy::secrecy_rate(ss, &pa, ctx.constellation, ctx.noise_samples, ctx.rng_stream)?;
        Ok(PaResult {
            beta,
            sr_at_beta: sr.sr,
            strategy: self.name(),
            evaluations: 1,
            converged: true,
        })
    }
}

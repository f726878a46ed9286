//! Minimal real-valued layers with hand-written backpropagation.
//!
//! Shapes are tiny (channel planes of a handful of antennas), so
//! everything is a flat `Vec<f64>` with explicit index arithmetic. Each
//! layer exposes `forward` and a `backward` that returns the gradient with
//! respect to its input alongside the parameter gradients; the analytic
//! gradients are validated against central finite differences in the
//! module tests of [`crate::dnn`].

/// Channels-first 3-D tensor, `[c][h][w]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self { c, h, w, data: vec![0.0; c * h * w] }
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.h + y) * self.w + x]
    }

    #[inline]
    pub fn at_mut(&mut self, c: usize, y: usize, x: usize) -> &mut f64 {
        &mut self.data[(c * self.h + y) * self.w + x]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// 2-D convolution, stride 1, zero-padded on the bottom/right so the
/// output keeps the input's height and width ("same" padding for the
/// even kernels used here).
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_c: usize,
    pub out_c: usize,
    pub kh: usize,
    pub kw: usize,
    /// `[out_c][in_c][kh][kw]` row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv2d {
    pub fn zeros(in_c: usize, out_c: usize, kh: usize, kw: usize) -> Self {
        Self { in_c, out_c, kh, kw, weights: vec![0.0; out_c * in_c * kh * kw], bias: vec![0.0; out_c] }
    }

    #[inline]
    fn w_idx(&self, f: usize, c: usize, dy: usize, dx: usize) -> usize {
        ((f * self.in_c + c) * self.kh + dy) * self.kw + dx
    }

    pub fn forward(&self, input: &Tensor3) -> Tensor3 {
        assert_eq!(input.c, self.in_c, "conv input channel mismatch");
        let (h, w) = (input.h, input.w);
        let mut out = Tensor3::zeros(self.out_c, h, w);
        for f in 0..self.out_c {
            for y in 0..h {
                for x in 0..w {
                    let mut acc = self.bias[f];
                    for c in 0..self.in_c {
                        for dy in 0..self.kh.min(h - y) {
                            for dx in 0..self.kw.min(w - x) {
                                acc += self.weights[self.w_idx(f, c, dy, dx)]
                                    * input.at(c, y + dy, x + dx);
                            }
                        }
                    }
                    *out.at_mut(f, y, x) = acc;
                }
            }
        }
        out
    }

    /// Returns (grad_input, grad_weights, grad_bias).
    pub fn backward(&self, input: &Tensor3, grad_out: &Tensor3) -> (Tensor3, Vec<f64>, Vec<f64>) {
        let (h, w) = (input.h, input.w);
        let mut grad_in = Tensor3::zeros(input.c, h, w);
        let mut grad_w = vec![0.0; self.weights.len()];
        let mut grad_b = vec![0.0; self.bias.len()];
        for f in 0..self.out_c {
            for y in 0..h {
                for x in 0..w {
                    let g = grad_out.at(f, y, x);
                    if g == 0.0 {
                        continue;
                    }
                    grad_b[f] += g;
                    for c in 0..self.in_c {
                        for dy in 0..self.kh.min(h - y) {
                            for dx in 0..self.kw.min(w - x) {
                                grad_w[self.w_idx(f, c, dy, dx)] += g * input.at(c, y + dy, x + dx);
                                *grad_in.at_mut(c, y + dy, x + dx) +=
                                    g * self.weights[self.w_idx(f, c, dy, dx)];
                            }
                        }
                    }
                }
            }
        }
        (grad_in, grad_w, grad_b)
    }
}

/// Non-overlapping max pooling. Window ties route the gradient to the
/// first maximum in scan order (dy-major, then dx).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool {
    pub ph: usize,
    pub pw: usize,
}

impl MaxPool {
    /// Pool geometry for a plane: 2x2 where both dimensions allow, else
    /// 1x2 (and fully degenerate planes pass through).
    pub fn for_plane(h: usize, w: usize) -> Self {
        Self { ph: if h >= 2 { 2 } else { 1 }, pw: if w >= 2 { 2 } else { 1 } }
    }

    pub fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        (h / self.ph, w / self.pw)
    }

    /// Returns the pooled tensor and, per output element, the flat input
    /// index of the selected maximum.
    pub fn forward(&self, input: &Tensor3) -> (Tensor3, Vec<usize>) {
        let (oh, ow) = self.out_dims(input.h, input.w);
        let mut out = Tensor3::zeros(input.c, oh, ow);
        let mut argmax = vec![0usize; input.c * oh * ow];
        for c in 0..input.c {
            for y in 0..oh {
                for x in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for dy in 0..self.ph {
                        for dx in 0..self.pw {
                            let (iy, ix) = (y * self.ph + dy, x * self.pw + dx);
                            let v = input.at(c, iy, ix);
                            if v > best {
                                best = v;
                                best_idx = (c * input.h + iy) * input.w + ix;
                            }
                        }
                    }
                    *out.at_mut(c, y, x) = best;
                    argmax[(c * oh + y) * ow + x] = best_idx;
                }
            }
        }
        (out, argmax)
    }

    pub fn backward(&self, grad_out: &Tensor3, argmax: &[usize], in_dims: (usize, usize, usize)) -> Tensor3 {
        let mut grad_in = Tensor3::zeros(in_dims.0, in_dims.1, in_dims.2);
        for (slot, &src) in argmax.iter().enumerate() {
            grad_in.data[src] += grad_out.data[slot];
        }
        grad_in
    }
}

/// Fully-connected layer, weights `[out][in]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, weights: vec![0.0; out_dim * in_dim], bias: vec![0.0; out_dim] }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.in_dim, "dense input mismatch");
        (0..self.out_dim)
            .map(|o| {
                self.bias[o]
                    + self.weights[o * self.in_dim..(o + 1) * self.in_dim]
                        .iter()
                        .zip(x)
                        .map(|(w, xi)| w * xi)
                        .sum::<f64>()
            })
            .collect()
    }

    /// Returns (grad_input, grad_weights, grad_bias).
    pub fn backward(&self, x: &[f64], grad_out: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut grad_x = vec![0.0; self.in_dim];
        let mut grad_w = vec![0.0; self.weights.len()];
        for o in 0..self.out_dim {
            let g = grad_out[o];
            for i in 0..self.in_dim {
                grad_w[o * self.in_dim + i] = g * x[i];
                grad_x[i] += g * self.weights[o * self.in_dim + i];
            }
        }
        (grad_x, grad_w, grad_out.to_vec())
    }
}

pub fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Masks `grad` by the ReLU subgradient, read off the post-activation
/// values (positive means the unit was active).
pub fn relu_backward(activated: &[f64], grad: &mut [f64]) {
    for (g, a) in grad.iter_mut().zip(activated) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

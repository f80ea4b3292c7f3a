//! Fully connected ReLU networks with hand-written reverse-mode gradients.
//!
//! Parameters of a network live in one flat vector, layer by layer: the
//! weight matrix (row-major, `fan_in × fan_out`) followed by the bias. That
//! layout makes optimizer steps, target averaging and checkpointing plain
//! slice operations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RsmaError};

/// Dense row-major matrix, one row per batch sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(RsmaError::ShapeMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Matrix { rows: self.rows, cols, data }
    }
}

/// `c = alpha · op(a) · op(b) + beta · c`, with `op` an optional transpose.
/// `a` is a `rows × cols` buffer; shapes are given after transposition.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_cols: usize,
    a_trans: bool,
    b: &[f64],
    b_cols: usize,
    b_trans: bool,
    c: &mut [f64],
    beta: f64,
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if a_trans { (1, a_cols as isize) } else { (a_cols as isize, 1) };
    let (rsb, csb) = if b_trans { (1, b_cols as isize) } else { (b_cols as isize, 1) };
    // SAFETY: the assertion above guarantees every index reached through the
    // given strides lies inside the three slices, and `c` does not alias them.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Activations saved by a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input of every layer; index 0 is the network input.
    inputs: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

impl Mlp {
    /// PyTorch-style initialization: weights and biases uniform in `±1/√fan_in`.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0));
        let mut params = Vec::with_capacity(Self::param_count(sizes));
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] + w[1] {
                params.push(rng.random_range(-bound..=bound));
            }
        }
        Self { sizes: sizes.to_vec(), params }
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let expected = Self::param_count(sizes);
        if params.len() != expected {
            return Err(RsmaError::ShapeMismatch { expected, got: params.len() });
        }
        Ok(Self { sizes: sizes.to_vec(), params })
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Zeroes the output layer, so the network initially outputs exactly 0.
    pub fn zero_output_layer(&mut self) {
        let n = self.sizes.len();
        let len = self.sizes[n - 2] * self.sizes[n - 1] + self.sizes[n - 1];
        let total = self.params.len();
        self.params[total - len..].fill(0.0);
    }

    fn layer_offsets(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.sizes.windows(2).map(move |w| {
            let o = offset;
            offset += w[0] * w[1] + w[1];
            (o, w[0], w[1])
        })
    }

    pub fn forward(&self, x: &Matrix) -> (Matrix, MlpCache) {
        assert_eq!(x.cols, self.input_dim());
        let layers = self.sizes.len() - 1;
        let mut inputs = Vec::with_capacity(layers);
        let mut h = x.clone();
        for (l, (off, fan_in, fan_out)) in self.layer_offsets().enumerate() {
            let mut out = Matrix::zeros(h.rows, fan_out);
            let bias = &self.params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
            for r in 0..h.rows {
                out.row_mut(r).copy_from_slice(bias);
            }
            gemm(
                h.rows,
                fan_in,
                fan_out,
                &h.data,
                fan_in,
                false,
                &self.params[off..],
                fan_out,
                false,
                &mut out.data,
                1.0,
            );
            if l + 1 < layers {
                out.data.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            inputs.push(h);
            h = out;
        }
        (h, MlpCache { inputs })
    }

    pub fn predict(&self, x: &Matrix) -> Matrix {
        self.forward(x).0
    }

    /// Back-propagates `d_out = ∂L/∂output`. Parameter gradients are added
    /// into `grad` when provided; the input gradient is returned when asked for.
    pub fn backward(
        &self,
        cache: &MlpCache,
        d_out: &Matrix,
        mut grad: Option<&mut [f64]>,
        want_input: bool,
    ) -> Option<Matrix> {
        if let Some(g) = grad.as_deref() {
            assert_eq!(g.len(), self.params.len());
        }
        let layers: Vec<_> = self.layer_offsets().collect();
        let mut delta = d_out.clone();
        for (l, &(off, fan_in, fan_out)) in layers.iter().enumerate().rev() {
            let input = &cache.inputs[l];
            let batch = input.rows;
            if let Some(g) = grad.as_deref_mut() {
                // dW += inputᵀ · delta, db += column sums of delta
                gemm(
                    fan_in,
                    batch,
                    fan_out,
                    &input.data,
                    fan_in,
                    true,
                    &delta.data,
                    fan_out,
                    false,
                    &mut g[off..off + fan_in * fan_out],
                    1.0,
                );
                let gb = &mut g[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
                for r in 0..batch {
                    for (b, d) in gb.iter_mut().zip(delta.row(r)) {
                        *b += d;
                    }
                }
            }
            if l == 0 && !want_input {
                return None;
            }
            // d_input = delta · Wᵀ
            let mut d_in = Matrix::zeros(batch, fan_in);
            gemm(
                batch,
                fan_out,
                fan_in,
                &delta.data,
                fan_out,
                false,
                &self.params[off..],
                fan_out,
                true,
                &mut d_in.data,
                0.0,
            );
            if l > 0 {
                // ReLU: the layer input is the previous layer's activation.
                for (d, a) in d_in.data.iter_mut().zip(&input.data) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            delta = d_in;
        }
        Some(delta)
    }
}

/// Adaptive moment estimation over a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Polyak averaging `θ̄ ← τ θ + (1 − τ) θ̄`.
pub fn soft_update(theta: &[f64], theta_bar: &mut [f64], tau: f64) -> Result<()> {
    if theta.len() != theta_bar.len() {
        return Err(RsmaError::ShapeMismatch { expected: theta_bar.len(), got: theta.len() });
    }
    if tau == 1.0 {
        theta_bar.copy_from_slice(theta);
        return Ok(());
    }
    for (tb, t) in theta_bar.iter_mut().zip(theta) {
        *tb += tau * (t - *tb);
    }
    Ok(())
}

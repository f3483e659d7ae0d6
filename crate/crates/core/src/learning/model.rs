//! Convolutional actor-critic network with a hand-written backward pass.
//!
//! planes (6x11x11) -> conv3x3(8) -> conv3x3(16) -> conv3x3(16), ReLU after
//! each, same padding; flatten ++ feature vector (17) -> fc(128) ReLU;
//! ++ action mask (6) -> fc(64) ReLU; then a softmax policy head (6) and a
//! linear value head (1).
//!
//! Activations are stored channel-last (`[sample][cell][channel]`) so every
//! layer is a single matrix product over the whole batch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::NUM_ACTIONS;
use crate::error::{Error, Result};
use crate::observation::{ActionMask, FeatureVector, PlaneStack, FEATURE_LEN, NUM_PLANES, PLANE_LEN};

use std::sync::LazyLock;

const SIDE: usize = 11;
const KERNEL: usize = 3;
pub const CONV_CHANNELS: [usize; 3] = [8, 16, 16];
pub const HIDDEN: [usize; 2] = [128, 64];
const CONV_OUT: usize = PLANE_LEN * CONV_CHANNELS[2];
const FC1_IN: usize = CONV_OUT + FEATURE_LEN;
const FC2_IN: usize = HIDDEN[0] + NUM_ACTIONS;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Parameter manifest: every tensor's name, shape and offset in the flat
/// parameter vector. Weights are `[inputs][outputs]`.
pub static LAYOUT: LazyLock<Vec<TensorSpec>> = LazyLock::new(|| {
    let c_in = [NUM_PLANES, CONV_CHANNELS[0], CONV_CHANNELS[1]];
    let shapes: Vec<(&'static str, Vec<usize>)> = vec![
        ("conv1.weight", vec![c_in[0] * KERNEL * KERNEL, CONV_CHANNELS[0]]),
        ("conv1.bias", vec![CONV_CHANNELS[0]]),
        ("conv2.weight", vec![c_in[1] * KERNEL * KERNEL, CONV_CHANNELS[1]]),
        ("conv2.bias", vec![CONV_CHANNELS[1]]),
        ("conv3.weight", vec![c_in[2] * KERNEL * KERNEL, CONV_CHANNELS[2]]),
        ("conv3.bias", vec![CONV_CHANNELS[2]]),
        ("fc1.weight", vec![FC1_IN, HIDDEN[0]]),
        ("fc1.bias", vec![HIDDEN[0]]),
        ("fc2.weight", vec![FC2_IN, HIDDEN[1]]),
        ("fc2.bias", vec![HIDDEN[1]]),
        ("policy.weight", vec![HIDDEN[1], NUM_ACTIONS]),
        ("policy.bias", vec![NUM_ACTIONS]),
        ("value.weight", vec![HIDDEN[1], 1]),
        ("value.bias", vec![1]),
    ];
    let mut offset = 0;
    shapes
        .into_iter()
        .map(|(name, shape)| {
            let spec = TensorSpec { name, shape, offset };
            offset += spec.len();
            spec
        })
        .collect()
});

#[derive(Clone, Copy)]
enum T {
    Conv1W,
    Conv1B,
    Conv2W,
    Conv2B,
    Conv3W,
    Conv3B,
    Fc1W,
    Fc1B,
    Fc2W,
    Fc2B,
    PiW,
    PiB,
    VW,
    VB,
}

fn range(t: T) -> std::ops::Range<usize> {
    LAYOUT[t as usize].range()
}

pub fn num_params() -> usize {
    LAYOUT.last().map_or(0, |t| t.offset + t.len())
}

/// One encoded observation: planes, feature vector, suggestion mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedObs {
    pub planes: PlaneStack,
    pub features: FeatureVector,
    pub mask: ActionMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: Vec<f64>,
}

/// `C = A * B (+ C)` on row-major slices, with optional transposes.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_t: bool,
    b: &[f64],
    b_t: bool,
    c: &mut [f64],
    accumulate: bool,
) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    if m <= 4 && !a_t && !b_t {
        // packing B costs more than the product itself for a handful of rows
        for i in 0..m {
            let row = &mut c[i * n..(i + 1) * n];
            if !accumulate {
                row.fill(0.0);
            }
            for (kk, &x) in a[i * k..(i + 1) * k].iter().enumerate() {
                if x != 0.0 {
                    for (cv, bv) in row.iter_mut().zip(&b[kk * n..(kk + 1) * n]) {
                        *cv += x * bv;
                    }
                }
            }
        }
        return;
    }
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the length assertions above bound every index the kernel touches
    // for the given dimensions and strides.
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

/// Unfold channel-last activations `[batch][cell][c]` into 3x3 patches
/// `[batch*cell][c*9]` with zero padding.
fn im2col(x: &[f64], batch: usize, c: usize) -> Vec<f64> {
    let width = c * KERNEL * KERNEL;
    let mut cols = vec![0.0; batch * PLANE_LEN * width];
    for b in 0..batch {
        for r in 0..SIDE {
            for col in 0..SIDE {
                let row_out = (b * PLANE_LEN + r * SIDE + col) * width;
                for ky in 0..KERNEL {
                    let rr = r as isize + ky as isize - 1;
                    if !(0..SIDE as isize).contains(&rr) {
                        continue;
                    }
                    for kx in 0..KERNEL {
                        let cc = col as isize + kx as isize - 1;
                        if !(0..SIDE as isize).contains(&cc) {
                            continue;
                        }
                        let src = (b * PLANE_LEN + rr as usize * SIDE + cc as usize) * c;
                        for ch in 0..c {
                            cols[row_out + ch * KERNEL * KERNEL + ky * KERNEL + kx] = x[src + ch];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`].
fn col2im(cols: &[f64], batch: usize, c: usize) -> Vec<f64> {
    let width = c * KERNEL * KERNEL;
    let mut x = vec![0.0; batch * PLANE_LEN * c];
    for b in 0..batch {
        for r in 0..SIDE {
            for col in 0..SIDE {
                let row_in = (b * PLANE_LEN + r * SIDE + col) * width;
                for ky in 0..KERNEL {
                    let rr = r as isize + ky as isize - 1;
                    if !(0..SIDE as isize).contains(&rr) {
                        continue;
                    }
                    for kx in 0..KERNEL {
                        let cc = col as isize + kx as isize - 1;
                        if !(0..SIDE as isize).contains(&cc) {
                            continue;
                        }
                        let dst = (b * PLANE_LEN + rr as usize * SIDE + cc as usize) * c;
                        for ch in 0..c {
                            x[dst + ch] += cols[row_in + ch * KERNEL * KERNEL + ky * KERNEL + kx];
                        }
                    }
                }
            }
        }
    }
    x
}

fn add_bias_relu(out: &mut [f64], bias: &[f64], relu: bool) {
    for row in out.chunks_mut(bias.len()) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
            if relu && *v < 0.0 {
                *v = 0.0;
            }
        }
    }
}

fn relu_backward(grad: &mut [f64], activation: &[f64]) {
    for (g, a) in grad.iter_mut().zip(activation) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
}

fn bias_grad(grad_out: &[f64], width: usize, into: &mut [f64]) {
    for row in grad_out.chunks(width) {
        for (d, g) in into.iter_mut().zip(row) {
            *d += g;
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Everything the backward pass needs from a forward pass.
pub struct ForwardCache {
    batch: usize,
    cols: [Vec<f64>; 3],
    conv_out: [Vec<f64>; 3],
    fc1_in: Vec<f64>,
    h1: Vec<f64>,
    fc2_in: Vec<f64>,
    h2: Vec<f64>,
    /// `[batch][NUM_ACTIONS]`
    pub logits: Vec<f64>,
    /// `[batch]`
    pub values: Vec<f64>,
}

impl ForwardCache {
    pub fn probs(&self, i: usize) -> Vec<f64> {
        softmax(&self.logits[i * NUM_ACTIONS..(i + 1) * NUM_ACTIONS])
    }
}

impl Model {
    /// He-style uniform initialisation; the policy head starts near uniform.
    pub fn init(seed: u64) -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; num_params()];
        for spec in LAYOUT.iter().filter(|s| s.shape.len() == 2) {
            let fan_in = spec.shape[0] as f64;
            let mut bound = (6.0 / fan_in).sqrt();
            if spec.name == "policy.weight" {
                bound *= 0.01;
            } else if spec.name == "value.weight" {
                bound *= 0.1;
            }
            for p in &mut params[spec.range()] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Model { params }
    }

    pub fn from_params(params: Vec<f64>) -> Result<Model> {
        if params.len() != num_params() {
            return Err(Error::Contract(format!(
                "expected {} parameters, got {}",
                num_params(),
                params.len()
            )));
        }
        Ok(Model { params })
    }

    fn p(&self, t: T) -> &[f64] {
        &self.params[range(t)]
    }

    pub fn forward_batch(&self, obs: &[&EncodedObs]) -> ForwardCache {
        let batch = obs.len();
        // planes are channel-first; convert to channel-last
        let mut x = vec![0.0; batch * PLANE_LEN * NUM_PLANES];
        for (b, o) in obs.iter().enumerate() {
            let planes = o.planes.as_slice();
            for ch in 0..NUM_PLANES {
                for cell in 0..PLANE_LEN {
                    x[(b * PLANE_LEN + cell) * NUM_PLANES + ch] = planes[ch * PLANE_LEN + cell];
                }
            }
        }

        let convs = [(T::Conv1W, T::Conv1B), (T::Conv2W, T::Conv2B), (T::Conv3W, T::Conv3B)];
        let mut c_in = NUM_PLANES;
        let mut cols: [Vec<f64>; 3] = Default::default();
        let mut conv_out: [Vec<f64>; 3] = Default::default();
        for (l, (w, bias)) in convs.into_iter().enumerate() {
            let c_out = CONV_CHANNELS[l];
            let col = im2col(&x, batch, c_in);
            let mut out = vec![0.0; batch * PLANE_LEN * c_out];
            gemm(batch * PLANE_LEN, c_in * 9, c_out, &col, false, self.p(w), false, &mut out, false);
            add_bias_relu(&mut out, self.p(bias), true);
            cols[l] = col;
            x = out.clone();
            conv_out[l] = out;
            c_in = c_out;
        }

        let mut fc1_in = vec![0.0; batch * FC1_IN];
        for (b, o) in obs.iter().enumerate() {
            let row = &mut fc1_in[b * FC1_IN..(b + 1) * FC1_IN];
            row[..CONV_OUT].copy_from_slice(&x[b * CONV_OUT..(b + 1) * CONV_OUT]);
            row[CONV_OUT..].copy_from_slice(&o.features.0);
        }
        let mut h1 = vec![0.0; batch * HIDDEN[0]];
        gemm(batch, FC1_IN, HIDDEN[0], &fc1_in, false, self.p(T::Fc1W), false, &mut h1, false);
        add_bias_relu(&mut h1, self.p(T::Fc1B), true);

        let mut fc2_in = vec![0.0; batch * FC2_IN];
        for (b, o) in obs.iter().enumerate() {
            let row = &mut fc2_in[b * FC2_IN..(b + 1) * FC2_IN];
            row[..HIDDEN[0]].copy_from_slice(&h1[b * HIDDEN[0]..(b + 1) * HIDDEN[0]]);
            row[HIDDEN[0]..].copy_from_slice(&o.mask.as_f64());
        }
        let mut h2 = vec![0.0; batch * HIDDEN[1]];
        gemm(batch, FC2_IN, HIDDEN[1], &fc2_in, false, self.p(T::Fc2W), false, &mut h2, false);
        add_bias_relu(&mut h2, self.p(T::Fc2B), true);

        let mut logits = vec![0.0; batch * NUM_ACTIONS];
        gemm(batch, HIDDEN[1], NUM_ACTIONS, &h2, false, self.p(T::PiW), false, &mut logits, false);
        add_bias_relu(&mut logits, self.p(T::PiB), false);
        let mut values = vec![0.0; batch];
        gemm(batch, HIDDEN[1], 1, &h2, false, self.p(T::VW), false, &mut values, false);
        add_bias_relu(&mut values, self.p(T::VB), false);

        ForwardCache { batch, cols, conv_out, fc1_in, h1, fc2_in, h2, logits, values }
    }

    /// Action probabilities and state value for a single observation. The
    /// mask is an input feature only; it never zeroes a probability.
    pub fn forward(&self, obs: &EncodedObs) -> ([f64; NUM_ACTIONS], f64) {
        let cache = self.forward_batch(&[obs]);
        let p = cache.probs(0);
        (std::array::from_fn(|i| p[i]), cache.values[0])
    }

    /// Parameter gradient given the loss gradient w.r.t. the logits
    /// (`[batch][NUM_ACTIONS]`) and the values (`[batch]`).
    pub fn backward(&self, cache: &ForwardCache, d_logits: &[f64], d_values: &[f64]) -> Vec<f64> {
        let batch = cache.batch;
        assert_eq!(d_logits.len(), batch * NUM_ACTIONS);
        assert_eq!(d_values.len(), batch);
        let mut grad = vec![0.0; self.params.len()];

        // heads
        let mut d_h2 = vec![0.0; batch * HIDDEN[1]];
        gemm(batch, NUM_ACTIONS, HIDDEN[1], d_logits, false, self.p(T::PiW), true, &mut d_h2, false);
        gemm(batch, 1, HIDDEN[1], d_values, false, self.p(T::VW), true, &mut d_h2, true);
        gemm(HIDDEN[1], batch, NUM_ACTIONS, &cache.h2, true, d_logits, false, &mut grad[range(T::PiW)], false);
        bias_grad(d_logits, NUM_ACTIONS, &mut grad[range(T::PiB)]);
        gemm(HIDDEN[1], batch, 1, &cache.h2, true, d_values, false, &mut grad[range(T::VW)], false);
        bias_grad(d_values, 1, &mut grad[range(T::VB)]);

        // fc2
        relu_backward(&mut d_h2, &cache.h2);
        gemm(FC2_IN, batch, HIDDEN[1], &cache.fc2_in, true, &d_h2, false, &mut grad[range(T::Fc2W)], false);
        bias_grad(&d_h2, HIDDEN[1], &mut grad[range(T::Fc2B)]);
        let mut d_fc2_in = vec![0.0; batch * FC2_IN];
        gemm(batch, HIDDEN[1], FC2_IN, &d_h2, false, self.p(T::Fc2W), true, &mut d_fc2_in, false);
        let mut d_h1: Vec<f64> = d_fc2_in
            .chunks(FC2_IN)
            .flat_map(|row| row[..HIDDEN[0]].iter().copied())
            .collect();

        // fc1
        relu_backward(&mut d_h1, &cache.h1);
        gemm(FC1_IN, batch, HIDDEN[0], &cache.fc1_in, true, &d_h1, false, &mut grad[range(T::Fc1W)], false);
        bias_grad(&d_h1, HIDDEN[0], &mut grad[range(T::Fc1B)]);
        let mut d_fc1_in = vec![0.0; batch * FC1_IN];
        gemm(batch, HIDDEN[0], FC1_IN, &d_h1, false, self.p(T::Fc1W), true, &mut d_fc1_in, false);
        let mut d_x: Vec<f64> = d_fc1_in
            .chunks(FC1_IN)
            .flat_map(|row| row[..CONV_OUT].iter().copied())
            .collect();

        // convs, last to first
        let convs = [(T::Conv1W, T::Conv1B), (T::Conv2W, T::Conv2B), (T::Conv3W, T::Conv3B)];
        let c_ins = [NUM_PLANES, CONV_CHANNELS[0], CONV_CHANNELS[1]];
        for l in (0..3).rev() {
            let (w, b) = convs[l];
            let (c_in, c_out) = (c_ins[l], CONV_CHANNELS[l]);
            let rows = batch * PLANE_LEN;
            relu_backward(&mut d_x, &cache.conv_out[l]);
            gemm(c_in * 9, rows, c_out, &cache.cols[l], true, &d_x, false, &mut grad[range(w)], false);
            bias_grad(&d_x, c_out, &mut grad[range(b)]);
            if l > 0 {
                let mut d_cols = vec![0.0; rows * c_in * 9];
                gemm(rows, c_out, c_in * 9, &d_x, false, self.p(w), true, &mut d_cols, false);
                d_x = col2im(&d_cols, batch, c_in);
            }
        }
        grad
    }

    /// Parameter-norm sanity value, handy in logs.
    pub fn l2_norm(&self) -> f64 {
        self.params.iter().map(|p| p * p).sum::<f64>().sqrt()
    }
}

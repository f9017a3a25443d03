//! Fully connected tanh networks over a flat parameter slice.
//!
//! Each layer stores its weights row-major as `in × out` followed by `out`
//! biases, so the forward pass and the weight gradient are both contiguous
//! axpy loops over the output dimension.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Layer widths `[input, hidden.., output]`. Hidden layers use tanh, the
/// output layer is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    sizes: Vec<usize>,
}

/// Activations saved by [`MlpShape::forward`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct MlpCache {
    /// `acts[0]` is the input; `acts[l]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
    batch: usize,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl MlpShape {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Self {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        Self { sizes }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.sizes.windows(2).map(move |w| {
            let start = offset;
            offset += w[0] * w[1] + w[1];
            (start, w[0], w[1])
        })
    }

    /// Orthogonal weights scaled by `hidden_gain` (hidden layers) and
    /// `output_gain` (last layer); zero biases.
    pub fn init_orthogonal<R: Rng + ?Sized>(
        &self,
        params: &mut [f64],
        rng: &mut R,
        hidden_gain: f64,
        output_gain: f64,
    ) {
        let last = self.num_layers() - 1;
        for (l, (offset, fan_in, fan_out)) in self.layers().enumerate() {
            let gain = if l == last { output_gain } else { hidden_gain };
            let w = orthogonal(fan_in, fan_out, rng);
            for (dst, src) in params[offset..offset + fan_in * fan_out].iter_mut().zip(&w) {
                *dst = gain * src;
            }
            params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out].fill(0.0);
        }
    }

    /// Batched forward pass; `input` is `batch × input_dim` row-major.
    pub fn forward<'c>(
        &self,
        params: &[f64],
        input: &[f64],
        batch: usize,
        cache: &'c mut MlpCache,
    ) -> &'c [f64] {
        debug_assert_eq!(params.len(), self.num_params());
        debug_assert_eq!(input.len(), batch * self.input_dim());
        let n_layers = self.num_layers();
        cache.acts.resize_with(n_layers + 1, Vec::new);
        cache.batch = batch;
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(input);

        for (l, (offset, fan_in, fan_out)) in self.layers().enumerate() {
            let (w, rest) = params[offset..].split_at(fan_in * fan_out);
            let bias = &rest[..fan_out];
            let (before, after) = cache.acts.split_at_mut(l + 1);
            let x = &before[l];
            let y = &mut after[0];
            y.clear();
            y.resize(batch * fan_out, 0.0);
            for b in 0..batch {
                let row = &mut y[b * fan_out..(b + 1) * fan_out];
                row.copy_from_slice(bias);
                for (i, &xi) in x[b * fan_in..(b + 1) * fan_in].iter().enumerate() {
                    let wi = &w[i * fan_out..(i + 1) * fan_out];
                    for (yj, &wij) in row.iter_mut().zip(wi) {
                        *yj += xi * wij;
                    }
                }
                if l + 1 < n_layers {
                    row.iter_mut().for_each(|v| *v = v.tanh());
                }
            }
        }
        cache.output()
    }

    /// Accumulate `∂L/∂params` into `grads` given `∂L/∂output`
    /// (`batch × output_dim`) for the batch last passed to `forward`.
    pub fn backward(&self, params: &[f64], cache: &mut MlpCache, grad_output: &[f64], grads: &mut [f64]) {
        let batch = cache.batch;
        debug_assert_eq!(grad_output.len(), batch * self.output_dim());
        let layers: Vec<_> = self.layers().collect();
        let mut delta = std::mem::take(&mut cache.delta);
        let mut delta_prev = std::mem::take(&mut cache.delta_prev);
        delta.clear();
        delta.extend_from_slice(grad_output);

        for (l, &(offset, fan_in, fan_out)) in layers.iter().enumerate().rev() {
            let x = &cache.acts[l];
            let (gw, grest) = grads[offset..].split_at_mut(fan_in * fan_out);
            let gb = &mut grest[..fan_out];
            for b in 0..batch {
                let d = &delta[b * fan_out..(b + 1) * fan_out];
                for (g, &dj) in gb.iter_mut().zip(d) {
                    *g += dj;
                }
                for (i, &xi) in x[b * fan_in..(b + 1) * fan_in].iter().enumerate() {
                    let row = &mut gw[i * fan_out..(i + 1) * fan_out];
                    for (g, &dj) in row.iter_mut().zip(d) {
                        *g += xi * dj;
                    }
                }
            }
            if l == 0 {
                break;
            }
            // Propagate through the weights, then through tanh of layer l-1.
            let w = &params[offset..offset + fan_in * fan_out];
            delta_prev.clear();
            delta_prev.resize(batch * fan_in, 0.0);
            for b in 0..batch {
                let d = &delta[b * fan_out..(b + 1) * fan_out];
                let a = &x[b * fan_in..(b + 1) * fan_in];
                for i in 0..fan_in {
                    let wi = &w[i * fan_out..(i + 1) * fan_out];
                    let s = dot(wi, d);
                    delta_prev[b * fan_in + i] = s * (1.0 - a[i] * a[i]);
                }
            }
            std::mem::swap(&mut delta, &mut delta_prev);
        }
        cache.delta = delta;
        cache.delta_prev = delta_prev;
    }

    /// Largest singular-value bound of the network: product over layers of
    /// the Frobenius norms (tanh is 1-Lipschitz).
    pub fn lipschitz_bound(&self, params: &[f64]) -> f64 {
        self.layers()
            .map(|(offset, fan_in, fan_out)| {
                params[offset..offset + fan_in * fan_out]
                    .iter()
                    .map(|w| w * w)
                    .sum::<f64>()
                    .sqrt()
            })
            .product()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators so the reduction vectorises.
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// `rows × cols` matrix (row-major) whose rows or columns, whichever are
/// fewer, are orthonormal.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    let (tall, short) = (rows.max(cols), rows.min(cols));
    // Columns of a tall × short Gaussian matrix, orthonormalised by
    // modified Gram-Schmidt.
    let mut q: Vec<Vec<f64>> = (0..short)
        .map(|_| (0..tall).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    for j in 0..short {
        for k in 0..j {
            let (head, tail) = q.split_at_mut(j);
            let proj = dot(&head[k], &tail[0]);
            for (v, &u) in tail[0].iter_mut().zip(&head[k]) {
                *v -= proj * u;
            }
        }
        let norm = dot(&q[j], &q[j]).sqrt();
        q[j].iter_mut().for_each(|v| *v /= norm);
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = if rows >= cols { q[c][r] } else { q[r][c] };
        }
    }
    out
}

//! Dense multilayer perceptrons with hand-written reverse mode and Adam.
//!
//! Batches are row-major `batch x features` slices. Hidden layers use
//! `tanh`; the output layer is linear.

use serde::{Deserialize, Serialize};

use crate::numerics::RngStream;

/// Parameters of an MLP stored in one flat vector. Layer `l` holds its
/// `out x in` weights (row-major) followed by its `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Activations recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    pub batch: usize,
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    pub acts: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("tape holds at least the input")
    }
}

fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: the strides describe in-bounds views of `a` (m x k), `b`
    // (k x n) and `c` (m x n, row-major), as checked by the callers' shapes.
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
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Mlp {
    /// Uniform `+-1/sqrt(fan_in)` initialisation; the output layer is shrunk
    /// by `output_scale` so initial outputs stay near zero.
    pub fn new(sizes: &[usize], output_scale: f64, rng: &mut RngStream) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let mut params = Vec::new();
        let layers = sizes.len() - 1;
        for l in 0..layers {
            let (inp, out) = (sizes[l], sizes[l + 1]);
            let bound = 1.0 / (inp as f64).sqrt();
            let s = if l + 1 == layers { output_scale } else { 1.0 };
            params.extend((0..out * inp).map(|_| s * rng.uniform_in(-bound, bound)));
            params.extend((0..out).map(|_| s * rng.uniform_in(-bound, bound)));
        }
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    fn offset(&self, layer: usize) -> usize {
        (0..layer).map(|l| self.sizes[l + 1] * (self.sizes[l] + 1)).sum()
    }

    pub fn forward(&self, input: &[f64], batch: usize) -> Tape {
        assert_eq!(input.len(), batch * self.input_dim(), "input shape");
        let mut acts = vec![input.to_vec()];
        for l in 0..self.layers() {
            let (inp, out) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.offset(l);
            let w = &self.params[off..off + out * inp];
            let b = &self.params[off + out * inp..off + out * (inp + 1)];
            let mut y = vec![0.0; batch * out];
            gemm(batch, inp, out, &acts[l], (inp as isize, 1), w, (1, inp as isize), &mut y);
            let hidden = l + 1 < self.layers();
            for row in y.chunks_mut(out) {
                for (v, bias) in row.iter_mut().zip(b) {
                    *v += bias;
                    if hidden {
                        *v = v.tanh();
                    }
                }
            }
            acts.push(y);
        }
        Tape { batch, acts }
    }

    /// Gradients of a scalar loss with respect to the parameters and the
    /// input, given its gradient `grad_out` at the output.
    pub fn backward(&self, tape: &Tape, grad_out: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let batch = tape.batch;
        let mut grads = vec![0.0; self.params.len()];
        let mut delta = grad_out.to_vec();
        for l in (0..self.layers()).rev() {
            let (inp, out) = (self.sizes[l], self.sizes[l + 1]);
            if l + 1 < self.layers() {
                for (d, y) in delta.iter_mut().zip(&tape.acts[l + 1]) {
                    *d *= 1.0 - y * y;
                }
            }
            let off = self.offset(l);
            let x = &tape.acts[l];
            {
                let (gw, gb) = grads[off..off + out * (inp + 1)].split_at_mut(out * inp);
                gemm(out, batch, inp, &delta, (1, out as isize), x, (inp as isize, 1), gw);
                for row in delta.chunks(out) {
                    for (g, d) in gb.iter_mut().zip(row) {
                        *g += d;
                    }
                }
            }
            let w = &self.params[off..off + out * inp];
            let mut dx = vec![0.0; batch * inp];
            gemm(batch, out, inp, &delta, (out as isize, 1), w, (inp as isize, 1), &mut dx);
            delta = dx;
        }
        (grads, delta)
    }

    /// `self <- tau * other + (1 - tau) * self`.
    pub fn soft_update(&mut self, other: &Mlp, tau: f64) {
        for (t, s) in self.params.iter_mut().zip(&other.params) {
            *t = tau * s + (1.0 - tau) * *t;
        }
    }
}

/// First-order adaptive-moment optimiser.
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
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// One descent step on `params` along `grads`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

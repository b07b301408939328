//! Fully-connected network with tanh hidden layers and a linear output.
//!
//! Weights are stored row-major as `(out_dim, in_dim)` so a forward pass walks
//! each output row contiguously. Shape mismatches are programmer errors and
//! panic; fallible conditions (bad specs, non-finite gradients, I/O) surface
//! as `Result`s.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Gain applied to orthogonal initialization of hidden layers.
pub const HIDDEN_INIT_GAIN: f64 = std::f64::consts::SQRT_2;
/// Gain applied to the output layer; small so initial policies are near-zero.
pub const OUTPUT_INIT_GAIN: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("network spec needs at least an input and an output layer, got {0} sizes")]
    TooFewLayers(usize),
    #[error("layer {index} has zero width")]
    ZeroWidthLayer { index: usize },
    #[error("non-finite gradient rejected (block {block}, element {index})")]
    NonFiniteGradient { block: usize, index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed in terms of the *activated* output `a`.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Linear => 1.0,
        }
    }
}

/// Architecture description: layer widths from input to output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpSpec {
    /// Standard spec: tanh hidden layers, linear output.
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self, NnError> {
        if layer_sizes.len() < 2 {
            return Err(NnError::TooFewLayers(layer_sizes.len()));
        }
        if let Some(index) = layer_sizes.iter().position(|&n| n == 0) {
            return Err(NnError::ZeroWidthLayer { index });
        }
        Ok(MlpSpec {
            layer_sizes,
            hidden_activation: Activation::Tanh,
            output_activation: Activation::Linear,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Number of weight layers (one less than the number of size entries).
    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn activation_for_layer(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }
}

/// One dense layer: `weights` is `(out_dim, in_dim)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// All parameters of an MLP, paired with the spec that shapes them.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub spec: MlpSpec,
    pub layers: Vec<Layer>,
}

/// Per-layer gradient buffers with the same shapes as [`MlpParams`].
///
/// `backward_into` *accumulates*, so callers zero these between minibatches.
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub layers: Vec<Layer>,
}

impl MlpGradients {
    pub fn zeros_like(params: &MlpParams) -> Self {
        let layers = params
            .layers
            .iter()
            .map(|l| Layer {
                weights: vec![0.0; l.weights.len()],
                biases: vec![0.0; l.biases.len()],
            })
            .collect();
        MlpGradients { layers }
    }

    pub fn zero(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.biases.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    /// Contiguous parameter blocks in a fixed order (w0, b0, w1, b1, ...),
    /// matching [`MlpParams::param_blocks_mut`].
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            out.push(l.weights.as_slice());
            out.push(l.biases.as_slice());
        }
        out
    }
}

/// Reusable forward-pass storage so hot loops do not allocate.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    /// `activations[0]` is the input; `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_next: Vec<f64>,
}

impl Scratch {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("forward_trace before output")
    }
}

impl MlpParams {
    /// Orthogonally-initialized network: gain sqrt(2) on hidden layers, 0.01 on
    /// the output layer, zero biases. Deterministic in `seed`.
    pub fn init(spec: &MlpSpec, seed: u64) -> MlpParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(spec.num_layers());
        for l in 0..spec.num_layers() {
            let (in_dim, out_dim) = (spec.layer_sizes[l], spec.layer_sizes[l + 1]);
            let gain = if l + 1 == spec.num_layers() {
                OUTPUT_INIT_GAIN
            } else {
                HIDDEN_INIT_GAIN
            };
            layers.push(Layer {
                weights: orthogonal_matrix(out_dim, in_dim, gain, &mut rng),
                biases: vec![0.0; out_dim],
            });
        }
        MlpParams {
            spec: spec.clone(),
            layers,
        }
    }

    /// Pure forward pass. Panics if `input` does not match the spec.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut scratch = Scratch::default();
        self.forward_trace(input, &mut scratch);
        scratch.output().to_vec()
    }

    /// Forward pass that keeps every layer's activations for a later backward
    /// pass. The output lives in `scratch.output()`.
    pub fn forward_trace(&self, input: &[f64], scratch: &mut Scratch) {
        assert_eq!(
            input.len(),
            self.spec.input_dim(),
            "input dimension {} does not match network input {}",
            input.len(),
            self.spec.input_dim()
        );
        scratch.activations.resize(self.spec.num_layers() + 1, Vec::new());
        scratch.activations[0].clear();
        scratch.activations[0].extend_from_slice(input);
        for (l, layer) in self.layers.iter().enumerate() {
            let in_dim = self.spec.layer_sizes[l];
            let out_dim = self.spec.layer_sizes[l + 1];
            let act = self.spec.activation_for_layer(l);
            let (prev_slot, out_slot) = split_two(&mut scratch.activations, l, l + 1);
            let prev = prev_slot.as_slice();
            out_slot.clear();
            out_slot.reserve(out_dim);
            for row in 0..out_dim {
                let w = &layer.weights[row * in_dim..(row + 1) * in_dim];
                let mut z = layer.biases[row];
                for (wi, xi) in w.iter().zip(prev) {
                    z += wi * xi;
                }
                out_slot.push(act.apply(z));
            }
        }
    }

    /// Gradient of `output . output_gradient` with respect to every parameter,
    /// recomputing the forward pass internally. Convenience wrapper around
    /// [`MlpParams::backward_into`].
    pub fn backward(&self, input: &[f64], output_gradient: &[f64]) -> MlpGradients {
        let mut scratch = Scratch::default();
        self.forward_trace(input, &mut scratch);
        let mut grads = MlpGradients::zeros_like(self);
        self.backward_into(&mut scratch, output_gradient, &mut grads);
        grads
    }

    /// Backprop through activations recorded by [`MlpParams::forward_trace`],
    /// *accumulating* into `grads`. `scratch` must hold the trace of the same
    /// input the gradient refers to.
    pub fn backward_into(
        &self,
        scratch: &mut Scratch,
        output_gradient: &[f64],
        grads: &mut MlpGradients,
    ) {
        assert_eq!(
            output_gradient.len(),
            self.spec.output_dim(),
            "output gradient dimension {} does not match network output {}",
            output_gradient.len(),
            self.spec.output_dim()
        );
        assert_eq!(
            scratch.activations.len(),
            self.spec.num_layers() + 1,
            "backward_into requires a forward_trace first"
        );
        scratch.delta.clear();
        scratch.delta.extend_from_slice(output_gradient);
        for l in (0..self.spec.num_layers()).rev() {
            let in_dim = self.spec.layer_sizes[l];
            let out_dim = self.spec.layer_sizes[l + 1];
            let prev = scratch.activations[l].as_slice();
            let layer = &self.layers[l];
            let glayer = &mut grads.layers[l];
            // d(out . g)/dW[row] = delta[row] * prev, d/db[row] = delta[row].
            for row in 0..out_dim {
                let d = scratch.delta[row];
                glayer.biases[row] += d;
                let gw = &mut glayer.weights[row * in_dim..(row + 1) * in_dim];
                for (gwi, xi) in gw.iter_mut().zip(prev) {
                    *gwi += d * xi;
                }
            }
            if l == 0 {
                break;
            }
            // delta_prev = (W^T delta) ⊙ act'(a_prev), accumulated row-wise so
            // the weight reads stay contiguous.
            let act = self.spec.activation_for_layer(l - 1);
            scratch.delta_next.clear();
            scratch.delta_next.resize(in_dim, 0.0);
            for row in 0..out_dim {
                let d = scratch.delta[row];
                let w = &layer.weights[row * in_dim..(row + 1) * in_dim];
                for (acc, wi) in scratch.delta_next.iter_mut().zip(w) {
                    *acc += d * wi;
                }
            }
            for (acc, a) in scratch.delta_next.iter_mut().zip(prev) {
                *acc *= act.derivative_from_output(*a);
            }
            std::mem::swap(&mut scratch.delta, &mut scratch.delta_next);
        }
    }

    /// Mutable parameter blocks in a fixed order (w0, b0, w1, b1, ...) for the
    /// optimizer. Matches [`MlpGradients::blocks`].
    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.weights.as_mut_slice());
            out.push(l.biases.as_mut_slice());
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }
}

/// Borrow two distinct indices of a `Vec` mutably.
fn split_two(v: &mut [Vec<f64>], a: usize, b: usize) -> (&mut Vec<f64>, &mut Vec<f64>) {
    assert!(a < b);
    let (lo, hi) = v.split_at_mut(b);
    (&mut lo[a], &mut hi[0])
}

/// Row-major `(rows, cols)` matrix with orthonormal rows (if `rows <= cols`)
/// or orthonormal columns (otherwise), scaled by `gain`. Uses twice-applied
/// modified Gram-Schmidt on a Gaussian draw, with the customary sign fix so
/// the distribution is symmetric.
fn orthogonal_matrix(rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (n, k, rows_are_vectors) = if rows <= cols {
        (cols, rows, true)
    } else {
        (rows, cols, false)
    };
    // k Gaussian vectors of dimension n.
    let mut vs: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    for i in 0..k {
        let original = vs[i].clone();
        for _pass in 0..2 {
            for j in 0..i {
                let dot: f64 = vs[j].iter().zip(&vs[i]).map(|(a, b)| a * b).sum();
                for idx in 0..n {
                    vs[i][idx] -= dot * vs[j][idx];
                }
            }
        }
        let norm: f64 = vs[i].iter().map(|x| x * x).sum::<f64>().sqrt();
        debug_assert!(norm > 1e-12, "degenerate Gram-Schmidt draw");
        let sign_dot: f64 = vs[i].iter().zip(&original).map(|(a, b)| a * b).sum();
        let scale = if sign_dot < 0.0 { -1.0 / norm } else { 1.0 / norm };
        vs[i].iter_mut().for_each(|x| *x *= scale);
    }
    let mut w = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let q = if rows_are_vectors { vs[r][c] } else { vs[c][r] };
            w[r * cols + c] = gain * q;
        }
    }
    w
}

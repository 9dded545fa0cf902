//! The trainable signed-distance field: an MLP over Fourier-encoded
//! coordinates with hand-written reverse-mode gradients.

mod adamw;
mod checkpoint;
mod encoding;

pub use adamw::{AdamW, OptimizerState};
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use encoding::{encode, encode_into, encoded_len};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ScalarField, Vec3};
use crate::rng::{self, tag};

/// Initial bias of the scalar head: a positive constant keeps the initial
/// zero level set empty.
pub const HEAD_BIAS_INIT: f64 = 0.1;
/// Scale applied to the head's fan-in bound at initialisation.
const HEAD_WEIGHT_SCALE: f64 = 0.01;
/// Rows per block for batched evaluation.
const EVAL_CHUNK: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    /// `ln(1 + e^x)`.
    Softplus,
}

impl Activation {
    fn apply(&self, x: f64) -> f64 {
        match self {
            Self::Tanh => x.tanh(),
            Self::Softplus => {
                if x > 30.0 {
                    x
                } else {
                    x.exp().ln_1p()
                }
            }
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative_from_output(&self, a: f64) -> f64 {
        match self {
            Self::Tanh => 1.0 - a * a,
            Self::Softplus => -(-a).exp_m1(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Tanh => "tanh",
            Self::Softplus => "softplus",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tanh" => Ok(Self::Tanh),
            "softplus" => Ok(Self::Softplus),
            other => Err(Error::config("activation", format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub encoding_levels: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            encoding_levels: 6,
            hidden: vec![128; 4],
            activation: Activation::Tanh,
        }
    }
}

/// Affine layer `y = W x + b` with `W` stored `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(out: usize, inp: usize) -> Self {
        Self {
            weight: Array2::zeros((out, inp)),
            bias: Array1::zeros(out),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.outputs(), self.inputs())
    }

    /// Weights (row-major) then biases.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.weight.iter().chain(self.bias.iter())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weight.iter_mut().chain(self.bias.iter_mut())
    }
}

/// Parameter gradient, one [`Dense`] per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Dense>,
}

impl Gradient {
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Dense::values)
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    pub fn get(&self, index: usize) -> f64 {
        *self.values().nth(index).expect("parameter index in range")
    }
}

/// MLP signed-distance field over Fourier features.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralSdf {
    encoding_levels: usize,
    activation: Activation,
    layers: Vec<Dense>,
}

/// Activations kept from the forward pass for backprop.
struct Trace {
    /// `activations[0]` is the encoded input, the last entry the scalar output.
    activations: Vec<Array2<f64>>,
}

impl NeuralSdf {
    /// Fan-in uniform initialisation from the `(seed, INIT)` substream.
    pub fn new(arch: &Architecture, seed: u64) -> Self {
        let mut rng = rng::substream(seed, &[tag::INIT]);
        let mut sizes = vec![encoded_len(arch.encoding_levels)];
        sizes.extend(&arch.hidden);
        sizes.push(1);
        let n_layers = sizes.len() - 1;
        let layers = (0..n_layers)
            .map(|l| {
                let (inp, out) = (sizes[l], sizes[l + 1]);
                let head = l + 1 == n_layers;
                let mut bound = (3.0 / inp as f64).sqrt();
                if head {
                    bound *= HEAD_WEIGHT_SCALE;
                }
                let weight = Array2::from_shape_fn((out, inp), |_| {
                    bound * (2.0 * rng.random::<f64>() - 1.0)
                });
                let bias = if head {
                    Array1::from_elem(out, HEAD_BIAS_INIT)
                } else {
                    Array1::zeros(out)
                };
                Dense { weight, bias }
            })
            .collect();
        Self {
            encoding_levels: arch.encoding_levels,
            activation: arch.activation,
            layers,
        }
    }

    /// Builds a field from explicit layers, checking the shape chain.
    pub fn from_layers(encoding_levels: usize, activation: Activation, layers: Vec<Dense>) -> Result<Self> {
        let mut width = encoded_len(encoding_levels);
        if layers.is_empty() {
            return Err(Error::ShapeMismatch("a field needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.inputs() != width || l.bias.len() != l.outputs() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i} is {}x{} with {} biases, expected {width} inputs",
                    l.outputs(),
                    l.inputs(),
                    l.bias.len()
                )));
            }
            width = l.outputs();
        }
        if width != 1 {
            return Err(Error::ShapeMismatch(format!("output width {width}, expected 1")));
        }
        Ok(Self {
            encoding_levels,
            activation,
            layers,
        })
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            encoding_levels: self.encoding_levels,
            hidden: self.layers[..self.layers.len() - 1].iter().map(Dense::outputs).collect(),
            activation: self.activation,
        }
    }

    pub fn encoding_levels(&self) -> usize {
        self.encoding_levels
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Dense::values)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(Dense::values_mut)
    }

    pub fn param(&self, index: usize) -> f64 {
        *self.params().nth(index).expect("parameter index in range")
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        *self.params_mut().nth(index).expect("parameter index in range") = value;
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }

    fn encode_batch(&self, qs: &[Vec3]) -> Array2<f64> {
        let width = encoded_len(self.encoding_levels);
        let mut x = Array2::zeros((qs.len(), width));
        for (mut row, q) in x.rows_mut().into_iter().zip(qs) {
            encode_into(q, self.encoding_levels, row.as_slice_mut().expect("standard layout"));
        }
        x
    }

    fn affine(input: &ArrayView2<f64>, layer: &Dense) -> Array2<f64> {
        let mut z = input.dot(&layer.weight.t());
        z += &layer.bias;
        z
    }

    fn run(&self, qs: &[Vec3], keep: bool) -> (Array1<f64>, Option<Trace>) {
        let mut a = self.encode_batch(qs);
        let mut activations = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Self::affine(&a.view(), layer);
            if l != last {
                let act = self.activation;
                z.mapv_inplace(|v| act.apply(v));
            }
            if keep {
                activations.push(std::mem::replace(&mut a, z));
            } else {
                a = z;
            }
        }
        let out = a.index_axis(Axis(1), 0).to_owned();
        let trace = keep.then(|| {
            activations.push(a);
            Trace { activations }
        });
        (out, trace)
    }

    /// Field values at a batch of points.
    pub fn forward_batch(&self, qs: &[Vec3]) -> Vec<f64> {
        self.run(qs, false).0.to_vec()
    }

    pub fn forward(&self, q: &Vec3) -> f64 {
        self.forward_batch(std::slice::from_ref(q))[0]
    }

    /// Mean squared error over the batch and its exact parameter gradient.
    pub fn loss_and_gradient(&self, qs: &[Vec3], targets: &[f64]) -> Result<(f64, Gradient)> {
        if qs.is_empty() || qs.len() != targets.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} queries and {} targets",
                qs.len(),
                targets.len()
            )));
        }
        let (out, trace) = self.run(qs, true);
        let trace = trace.expect("trace requested");
        let b = qs.len() as f64;
        let residual = &out - &Array1::from_vec(targets.to_vec());
        let loss = residual.iter().map(|r| r * r).sum::<f64>() / b;

        // dL/dy for the scalar head, as a column
        let mut delta = (residual * (2.0 / b)).insert_axis(Axis(1));
        let mut grads: Vec<Dense> = self.layers.iter().map(Dense::zeros_like).collect();
        for l in (0..self.layers.len()).rev() {
            let input = &trace.activations[l];
            grads[l].weight = delta.t().dot(input);
            grads[l].bias = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].weight);
                let act = self.activation;
                back.zip_mut_with(input, |d, &a| *d *= act.derivative_from_output(a));
                delta = back;
            }
        }
        let grad = Gradient { layers: grads };
        if !loss.is_finite() || !grad.is_finite() {
            return Err(Error::TrainingDiverged { epoch: 0, step: 0 });
        }
        Ok((loss, grad))
    }

    /// MSE only, used by finite-difference checks and evaluation.
    pub fn loss(&self, qs: &[Vec3], targets: &[f64]) -> f64 {
        let out = self.forward_batch(qs);
        out.iter().zip(targets).map(|(y, t)| (y - t).powi(2)).sum::<f64>() / qs.len() as f64
    }
}

impl ScalarField for NeuralSdf {
    fn eval(&self, q: &Vec3) -> f64 {
        self.forward(q)
    }

    fn eval_many(&self, qs: &[Vec3]) -> Vec<f64> {
        qs.par_chunks(EVAL_CHUNK)
            .map(|chunk| self.forward_batch(chunk))
            .collect::<Vec<_>>()
            .concat()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Architecture {
        Architecture {
            encoding_levels: 2,
            hidden: vec![8, 6],
            activation: Activation::Tanh,
        }
    }

    fn random_batch(n: usize, seed: u64) -> (Vec<Vec3>, Vec<f64>) {
        let mut r = rng::substream(seed, &[99]);
        let qs: Vec<Vec3> = (0..n)
            .map(|_| Vec3::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
            .collect();
        let ts = qs.iter().map(|q| q.norm() - 0.3).collect();
        (qs, ts)
    }

    #[test]
    fn shapes() {
        let f = NeuralSdf::new(&Architecture::default(), 0);
        assert_eq!(f.layers()[0].inputs(), 39);
        assert_eq!(f.layers().last().unwrap().outputs(), 1);
        assert_eq!(f.architecture(), Architecture::default());
        assert_eq!(f.param_count(), 39 * 128 + 128 + 3 * (128 * 128 + 128) + 129);
    }

    #[test]
    fn zero_head_gives_zero_output() {
        let mut f = NeuralSdf::new(&small(), 3);
        let head = f.layers_mut().last_mut().unwrap();
        head.weight.fill(0.0);
        head.bias.fill(0.0);
        let (qs, _) = random_batch(20, 1);
        assert!(f.forward_batch(&qs).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_is_deterministic_and_surface_free() {
        let a = NeuralSdf::new(&Architecture::default(), 5);
        let b = NeuralSdf::new(&Architecture::default(), 5);
        assert_eq!(a, b);
        let (qs, _) = random_batch(200, 2);
        let va = a.eval_many(&qs);
        assert_eq!(va, b.eval_many(&qs));
        assert!(va.iter().all(|&v| v > 0.0));
        assert_ne!(a, NeuralSdf::new(&Architecture::default(), 6));
    }

    #[test]
    fn batched_and_single_agree() {
        let f = NeuralSdf::new(&small(), 1);
        let (qs, _) = random_batch(5000, 3);
        let many = f.eval_many(&qs);
        for (q, v) in qs.iter().zip(&many).step_by(97) {
            assert!((f.forward(q) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_gradient_at_exact_fit() {
        let f = NeuralSdf::new(&small(), 2);
        let (qs, _) = random_batch(32, 4);
        let targets = f.forward_batch(&qs);
        let (loss, g) = f.loss_and_gradient(&qs, &targets).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.values().all(|&v| v == 0.0));
    }

    #[test]
    fn head_gradient_scales_with_residual() {
        let f = NeuralSdf::new(&small(), 2);
        let (qs, _) = random_batch(16, 5);
        let pred = f.forward_batch(&qs);
        let t1: Vec<f64> = pred.iter().map(|p| p - 0.1).collect();
        let t2: Vec<f64> = pred.iter().map(|p| p - 0.2).collect();
        let (_, g1) = f.loss_and_gradient(&qs, &t1).unwrap();
        let (_, g2) = f.loss_and_gradient(&qs, &t2).unwrap();
        for (a, b) in g1.values().zip(g2.values()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        for act in [Activation::Tanh, Activation::Softplus] {
            let arch = Architecture { activation: act, ..small() };
            let mut f = NeuralSdf::new(&arch, 7);
            // lift the head so hidden-layer gradients are not vanishingly small
            f.layers_mut().last_mut().unwrap().weight.mapv_inplace(|w| w * 100.0);
            let (qs, ts) = random_batch(24, 8);
            let (_, g) = f.loss_and_gradient(&qs, &ts).unwrap();
            let h = 1e-5;
            for i in 0..f.param_count() {
                let orig = f.param(i);
                f.set_param(i, orig + h);
                let up = f.loss(&qs, &ts);
                f.set_param(i, orig - h);
                let down = f.loss(&qs, &ts);
                f.set_param(i, orig);
                let fd = (up - down) / (2.0 * h);
                let an = g.get(i);
                let scale = an.abs().max(fd.abs()).max(1e-6);
                assert!((fd - an).abs() / scale < 1e-4, "{act} param {i}: fd {fd} vs {an}");
            }
        }
    }

    #[test]
    fn rejects_mismatched_batches() {
        let f = NeuralSdf::new(&small(), 0);
        assert!(f.loss_and_gradient(&[], &[]).is_err());
        assert!(f.loss_and_gradient(&[Vec3::zeros()], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn from_layers_checks_chain() {
        let f = NeuralSdf::new(&small(), 0);
        let mut layers = f.layers().to_vec();
        assert!(NeuralSdf::from_layers(2, Activation::Tanh, layers.clone()).is_ok());
        layers.pop();
        assert!(NeuralSdf::from_layers(2, Activation::Tanh, layers).is_err());
        assert!(NeuralSdf::from_layers(3, Activation::Tanh, f.layers().to_vec()).is_err());
    }
}

//! Fully connected tanh networks, exact Dirichlet transforms and layer
//! freezing.

mod batch;
mod checkpoint;
mod transform;

pub use batch::{input_block, tangent_backward, tangent_forward, TangentActivations};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use transform::{DirichletSample, OutputTransform, TransformCoefficients};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{LayerSlice, ParamVector};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid architecture {0:?}")]
    Architecture(Vec<usize>),
    #[error("architecture {sizes:?} does not fit a {dim}-dimensional problem")]
    Dimension { sizes: Vec<usize>, dim: usize },
    #[error("freeze mask must leave at least one of {0} layers trainable")]
    AllFrozen(usize),
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub layer_sizes: Vec<usize>,
}

impl MlpArchitecture {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self, NetworkError> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(NetworkError::Architecture(layer_sizes));
        }
        Ok(MlpArchitecture { layer_sizes })
    }

    /// Inputs `d`, outputs `d + 1` (displacements then phase field).
    pub fn check_dim(&self, dim: usize) -> Result<(), NetworkError> {
        if self.inputs() != dim || self.outputs() != dim + 1 {
            return Err(NetworkError::Dimension { sizes: self.layer_sizes.clone(), dim });
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn outputs(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn layout(&self) -> Vec<LayerSlice> {
        let mut offset = 0;
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let s = LayerSlice { offset, n_in: w[0], n_out: w[1] };
                offset += s.len();
                s
            })
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layout().iter().map(LayerSlice::len).sum()
    }
}

/// Network weights with their architecture and originating seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub arch: MlpArchitecture,
    pub seed: u64,
    pub theta: ParamVector,
}

impl MlpParams {
    pub fn zeros(arch: MlpArchitecture) -> Self {
        let theta = ParamVector::with_layout(vec![0.0; arch.n_params()], arch.layout());
        MlpParams { arch, seed: 0, theta }
    }

    pub fn from_values(arch: MlpArchitecture, values: Vec<f64>) -> Result<Self, NetworkError> {
        if values.len() != arch.n_params() {
            return Err(NetworkError::Length { expected: arch.n_params(), got: values.len() });
        }
        let theta = ParamVector::with_layout(values, arch.layout());
        Ok(MlpParams { arch, seed: 0, theta })
    }

    pub fn values(&self) -> &[f64] {
        self.theta.values()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        forward_with(&self.arch, self.theta.values(), x)
    }
}

/// Glorot-normal weights, `std = sqrt(2 / (fan_in + fan_out))`, zero biases.
pub fn init_xavier(arch: &MlpArchitecture, seed: u64) -> MlpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = MlpParams::zeros(arch.clone());
    p.seed = seed;
    for s in arch.layout() {
        let std = (2.0 / (s.n_in + s.n_out) as f64).sqrt();
        let normal = Normal::new(0.0, std).unwrap();
        for w in &mut p.theta.values_mut()[s.weight_range()] {
            *w = normal.sample(&mut rng);
        }
    }
    p
}

/// Raw network outputs at `x`; tanh on hidden layers, affine output.
pub fn forward_with<T: Scalar>(arch: &MlpArchitecture, theta: &[T], x: &[T]) -> Vec<T> {
    let layout = arch.layout();
    let last = layout.len() - 1;
    let mut a: Vec<T> = x.to_vec();
    for (l, s) in layout.iter().enumerate() {
        let w = &theta[s.weight_range()];
        let b = &theta[s.bias_range()];
        let mut z: Vec<T> = (0..s.n_out)
            .map(|o| {
                let row = &w[o * s.n_in..(o + 1) * s.n_in];
                row.iter().zip(&a).fold(b[o], |acc, (&wi, &ai)| acc + wi * ai)
            })
            .collect();
        if l < last {
            z.iter_mut().for_each(|v| *v = v.tanh());
        }
        a = z;
    }
    a
}

/// Which layers the optimizer may change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreezeMask {
    trainable: Vec<bool>,
}

impl FreezeMask {
    pub fn new(trainable: Vec<bool>) -> Result<Self, NetworkError> {
        if !trainable.iter().any(|&t| t) {
            return Err(NetworkError::AllFrozen(trainable.len()));
        }
        Ok(FreezeMask { trainable })
    }

    pub fn all(n_layers: usize) -> Self {
        FreezeMask { trainable: vec![true; n_layers] }
    }

    pub fn last_only(n_layers: usize) -> Self {
        let mut t = vec![false; n_layers];
        t[n_layers - 1] = true;
        FreezeMask { trainable: t }
    }

    pub fn is_trainable(&self, layer: usize) -> bool {
        self.trainable[layer]
    }

    pub fn first_trainable(&self) -> usize {
        self.trainable.iter().position(|&t| t).unwrap()
    }

    pub fn trainable(&self) -> &[bool] {
        &self.trainable
    }
}

/// Trainable entries gathered into a compact vector.
pub fn trainable_view(params: &MlpParams, mask: &FreezeMask) -> ParamVector {
    let mut values = Vec::new();
    let mut layers = Vec::new();
    for (l, s) in params.arch.layout().iter().enumerate() {
        if mask.is_trainable(l) {
            layers.push(LayerSlice { offset: values.len(), ..*s });
            values.extend_from_slice(&params.values()[s.range()]);
        }
    }
    ParamVector::with_layout(values, layers)
}

/// Write a trainable view back; frozen entries are not touched.
pub fn scatter_view(params: &mut MlpParams, mask: &FreezeMask, view: &[f64]) -> Result<(), NetworkError> {
    let layout = params.arch.layout();
    let expected: usize = layout.iter().enumerate().filter(|(l, _)| mask.is_trainable(*l)).map(|(_, s)| s.len()).sum();
    if view.len() != expected {
        return Err(NetworkError::Length { expected, got: view.len() });
    }
    let mut at = 0;
    for (l, s) in layout.iter().enumerate() {
        if mask.is_trainable(l) {
            params.theta.values_mut()[s.range()].copy_from_slice(&view[at..at + s.len()]);
            at += s.len();
        }
    }
    Ok(())
}

/// Map a compact gradient into full-length form (zeros at frozen entries).
pub fn expand_view(arch: &MlpArchitecture, mask: &FreezeMask, view: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; arch.n_params()];
    let mut at = 0;
    for (l, s) in arch.layout().iter().enumerate() {
        if mask.is_trainable(l) {
            out[s.range()].copy_from_slice(&view[at..at + s.len()]);
            at += s.len();
        }
    }
    out
}

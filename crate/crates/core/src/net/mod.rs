//! Sine-activated fully connected networks with exact input jets.

mod adam;
mod io;
mod jet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{AdamConfig, AdamState};
pub use io::{read_binary, read_text, write_binary, write_text};
pub use jet::{
    loss_and_gradient, value_jet, value_jets, JetSensitivity, Representation, ResidualModel, ValueJet,
    DEFAULT_CHUNK,
};

use crate::{Error, Result};

/// Layer widths of a scalar-output sine MLP whose input is `(t, x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkArch {
    /// Spatial dimension `d`; the network input has `d + 1` entries.
    pub state_dim: usize,
    pub hidden: Vec<usize>,
}

/// Offsets of one affine layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerLayout {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major `fan_out × fan_in` weights start here.
    pub weights: usize,
    /// `fan_out` biases start here.
    pub bias: usize,
}

impl NetworkArch {
    pub fn new(state_dim: usize, hidden: Vec<usize>) -> Result<Self> {
        let arch = NetworkArch { state_dim, hidden };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0 {
            return Err(Error::Config("network state dimension must be >= 1".into()));
        }
        if self.hidden.is_empty() || self.hidden.iter().any(|w| *w == 0) {
            return Err(Error::Config("network needs at least one hidden layer of nonzero width".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.state_dim + 1
    }

    pub fn layers(&self) -> Vec<LayerLayout> {
        let mut out = Vec::with_capacity(self.hidden.len() + 1);
        let mut fan_in = self.input_dim();
        let mut off = 0;
        for &fan_out in self.hidden.iter().chain(std::iter::once(&1)) {
            out.push(LayerLayout { fan_in, fan_out, weights: off, bias: off + fan_in * fan_out });
            off += fan_in * fan_out + fan_out;
            fan_in = fan_out;
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.layers().last().map(|l| l.bias + l.fan_out).unwrap_or(0)
    }
}

/// Architecture plus flat parameter vector `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub arch: NetworkArch,
    pub params: Vec<f64>,
}

impl NetworkState {
    pub fn zeros(arch: NetworkArch) -> Self {
        let n = arch.num_params();
        NetworkState { arch, params: vec![0.0; n] }
    }

    pub fn from_params(arch: NetworkArch, params: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.num_params() {
            return Err(Error::Dimension { expected: arch.num_params(), got: params.len() });
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network parameters".into()));
        }
        Ok(NetworkState { arch, params })
    }

    /// Glorot-uniform weights `U(-l, l)`, `l = sqrt(6 / (fan_in + fan_out))`;
    /// all biases zero.
    pub fn xavier(arch: NetworkArch, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = Self::zeros(arch);
        for layer in state.arch.layers() {
            let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            for w in &mut state.params[layer.weights..layer.bias] {
                *w = rng.random_range(-limit..limit);
            }
        }
        state
    }

    /// Raw network output `N(t, x; θ)`.
    pub fn forward(&self, t: f64, x: &[f64]) -> f64 {
        let mut h: Vec<f64> = std::iter::once(t).chain(x.iter().cloned()).collect();
        let layers = self.arch.layers();
        let last = layers.len() - 1;
        for (l, layer) in layers.iter().enumerate() {
            let w = &self.params[layer.weights..layer.bias];
            let b = &self.params[layer.bias..layer.bias + layer.fan_out];
            let z: Vec<f64> = (0..layer.fan_out)
                .map(|i| b[i] + w[i * layer.fan_in..(i + 1) * layer.fan_in].iter().zip(&h).map(|(a, c)| a * c).sum::<f64>())
                .collect();
            h = if l == last { z } else { z.into_iter().map(f64::sin).collect() };
        }
        h[0]
    }

    /// `g(x) + (T - t) N(t, x; θ)`.
    pub fn ansatz_value(&self, t: f64, x: &[f64], g: f64, horizon: f64) -> f64 {
        g + (horizon - t) * self.forward(t, x)
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }
}

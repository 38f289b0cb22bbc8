use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::ModelConfig;
use crate::error::{Error, Result};
use crate::numerics::{Parameter, Tensor2D};

pub const INIT_STD: f32 = 0.02;

/// Tensors per transformer block, in storage order.
pub const LAYER_TENSORS: [&str; 10] = [
    "ln1_gain", "ln1_bias", "w_q", "w_k", "w_v", "w_o", "ln2_gain", "ln2_bias", "w_ff_in",
    "w_ff_out",
];

/// Borrowed view of one transformer block.
pub struct LayerView<'a> {
    pub ln1_gain: &'a Parameter,
    pub ln1_bias: &'a Parameter,
    pub w_q: &'a Parameter,
    pub w_k: &'a Parameter,
    pub w_v: &'a Parameter,
    pub w_o: &'a Parameter,
    pub ln2_gain: &'a Parameter,
    pub ln2_bias: &'a Parameter,
    pub w_ff_in: &'a Parameter,
    pub w_ff_out: &'a Parameter,
}

/// All model parameters in the fixed storage order:
///
/// 1. token embedding `vocab_size × d_model` (also the tied LM head)
/// 2. position embedding `max_seq × d_model`
/// 3. for each layer, the tensors named in [`LAYER_TENSORS`]
/// 4. final norm gain and bias, `1 × d_model` each
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerWeights {
    config: ModelConfig,
    params: Vec<Parameter>,
}

/// Shapes of every tensor, in storage order.
pub fn tensor_shapes(c: &ModelConfig) -> Vec<(String, (usize, usize))> {
    let d = c.d_model;
    let mut shapes = vec![
        ("token_embedding".to_string(), (c.vocab_size, d)),
        ("position_embedding".to_string(), (c.max_seq, d)),
    ];
    for l in 0..c.n_layers {
        for name in LAYER_TENSORS {
            let shape = match name {
                "ln1_gain" | "ln1_bias" | "ln2_gain" | "ln2_bias" => (1, d),
                "w_q" | "w_k" | "w_v" | "w_o" => (d, d),
                "w_ff_in" => (d, c.d_ff),
                _ => (c.d_ff, d),
            };
            shapes.push((format!("layers.{l}.{name}"), shape));
        }
    }
    shapes.push(("final_norm_gain".to_string(), (1, d)));
    shapes.push(("final_norm_bias".to_string(), (1, d)));
    shapes
}

impl TransformerWeights {
    /// Gaussian `N(0, 0.02²)` matrices, unit gains, zero biases.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0f32, INIT_STD).expect("valid std");
        let params = tensor_shapes(&config)
            .into_iter()
            .map(|(name, (r, c))| {
                let t = if name.ends_with("_gain") {
                    Tensor2D::filled(r, c, 1.0)
                } else if name.ends_with("_bias") {
                    Tensor2D::zeros(r, c)
                } else {
                    let data = (0..r * c).map(|_| normal.sample(&mut rng)).collect();
                    Tensor2D::from_vec(r, c, data).expect("shape")
                };
                Parameter::new(t)
            })
            .collect();
        Ok(Self { config, params })
    }

    /// Rebuilds weights from tensors in storage order, checking every shape.
    pub fn from_tensors(config: ModelConfig, tensors: Vec<Tensor2D>) -> Result<Self> {
        config.validate()?;
        let shapes = tensor_shapes(&config);
        if shapes.len() != tensors.len() {
            return Err(Error::Contract(format!(
                "expected {} tensors, got {}",
                shapes.len(),
                tensors.len()
            )));
        }
        for ((name, shape), t) in shapes.iter().zip(&tensors) {
            if *shape != t.shape() {
                return Err(Error::Contract(format!(
                    "tensor {name} has shape {:?}, expected {shape:?}",
                    t.shape()
                )));
            }
        }
        Ok(Self {
            config,
            params: tensors.into_iter().map(Parameter::new).collect(),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Parameter] {
        &mut self.params
    }

    pub fn token_embedding(&self) -> &Parameter {
        &self.params[0]
    }

    pub fn position_embedding(&self) -> &Parameter {
        &self.params[1]
    }

    pub fn layer(&self, l: usize) -> LayerView<'_> {
        let base = 2 + l * LAYER_TENSORS.len();
        let p = &self.params[base..base + LAYER_TENSORS.len()];
        LayerView {
            ln1_gain: &p[0],
            ln1_bias: &p[1],
            w_q: &p[2],
            w_k: &p[3],
            w_v: &p[4],
            w_o: &p[5],
            ln2_gain: &p[6],
            ln2_bias: &p[7],
            w_ff_in: &p[8],
            w_ff_out: &p[9],
        }
    }

    pub fn final_norm(&self) -> (&Parameter, &Parameter) {
        let n = self.params.len();
        (&self.params[n - 2], &self.params[n - 1])
    }

    /// Sets the freeze flag on every model parameter.
    pub fn set_frozen(&mut self, frozen: bool) {
        for p in &mut self.params {
            p.frozen = frozen;
        }
    }

    pub fn is_frozen(&self) -> bool {
        self.params.iter().all(|p| p.frozen)
    }

    pub fn zero_grad(&mut self) {
        self.params.iter_mut().for_each(Parameter::zero_grad);
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().map(Parameter::numel).sum()
    }

    /// Little-endian `f32` payload in storage order.
    pub fn payload_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.num_parameters() * 4);
        for p in &self.params {
            out.extend(p.value.to_le_bytes());
        }
        out
    }
}

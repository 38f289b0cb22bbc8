use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::SoftPrompt;
use crate::error::{Error, Result};
use crate::model::INIT_STD;
use crate::numerics::{Gradients, Parameter, Tape, Tensor2D, Var};

const NORM_EPS: f32 = 1e-5;

/// Residual bottleneck network applied to every prompt row:
/// `e + LayerNorm(ReLU(e · W_down) · W_up)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparameterizer {
    pub down: Parameter,
    pub up: Parameter,
    pub norm_gain: Parameter,
    pub norm_bias: Parameter,
}

impl Reparameterizer {
    /// `W_down ~ N(0, 0.02²)`, `W_up = 0`, unit gain, zero bias: starts as the identity.
    pub fn new(d: usize, bottleneck: usize, seed: u64) -> Result<Self> {
        if d == 0 || bottleneck == 0 {
            return Err(Error::Config(format!(
                "reparameterizer needs positive sizes, got d={d}, m={bottleneck}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0f32, INIT_STD).expect("valid std");
        let down = (0..d * bottleneck).map(|_| normal.sample(&mut rng)).collect();
        Ok(Self {
            down: Parameter::new(Tensor2D::from_vec(d, bottleneck, down)?),
            up: Parameter::new(Tensor2D::zeros(bottleneck, d)),
            norm_gain: Parameter::new(Tensor2D::filled(1, d, 1.0)),
            norm_bias: Parameter::new(Tensor2D::zeros(1, d)),
        })
    }

    pub fn from_parts(down: Tensor2D, up: Tensor2D, gain: Tensor2D, bias: Tensor2D) -> Result<Self> {
        let (d, m) = down.shape();
        if up.shape() != (m, d) || gain.shape() != (1, d) || bias.shape() != (1, d) {
            return Err(Error::Dimension {
                op: "reparameterizer",
                lhs: down.shape(),
                rhs: up.shape(),
            });
        }
        Ok(Self {
            down: Parameter::new(down),
            up: Parameter::new(up),
            norm_gain: Parameter::new(gain),
            norm_bias: Parameter::new(bias),
        })
    }

    pub fn dim(&self) -> usize {
        self.down.value.rows()
    }

    pub fn bottleneck(&self) -> usize {
        self.down.value.cols()
    }

    pub fn params(&self) -> [&Parameter; 4] {
        [&self.down, &self.up, &self.norm_gain, &self.norm_bias]
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 4] {
        [
            &mut self.down,
            &mut self.up,
            &mut self.norm_gain,
            &mut self.norm_bias,
        ]
    }

    /// Records the network on `tape`; returns the output and the four parameter handles.
    pub fn apply<'a>(&'a self, tape: &mut Tape<'a>, prompt: Var) -> Result<(Var, [Var; 4])> {
        let cols = tape.value(prompt).cols();
        if cols != self.dim() {
            return Err(Error::Dimension {
                op: "reparameterize",
                lhs: tape.value(prompt).shape(),
                rhs: self.down.shape(),
            });
        }
        let vars = [
            tape.param(&self.down),
            tape.param(&self.up),
            tape.param(&self.norm_gain),
            tape.param(&self.norm_bias),
        ];
        let hidden = tape.matmul(prompt, vars[0])?;
        let hidden = tape.relu(hidden);
        let up = tape.matmul(hidden, vars[1])?;
        let normed = tape.layer_norm(up, vars[2], vars[3], NORM_EPS)?;
        let out = tape.add(prompt, normed)?;
        Ok((out, vars))
    }
}

/// Maps a prompt through `r` without recording gradients.
pub fn reparameterize(r: &Reparameterizer, prompt: &Tensor2D) -> Result<Tensor2D> {
    let mut tape = Tape::new();
    let p = tape.constant_ref(prompt);
    let (out, _) = r.apply(&mut tape, p)?;
    Ok(tape.value(out).clone())
}

/// A soft prompt plus its optional reparameterizer: everything trainable in
/// the frozen-model setting.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainablePrompt {
    pub prompt: SoftPrompt,
    pub reparam: Option<Reparameterizer>,
}

/// Tape handles produced by [`TrainablePrompt::record`].
pub struct PromptVars {
    pub raw: Var,
    pub effective: Var,
    reparam: Option<[Var; 4]>,
}

impl TrainablePrompt {
    pub fn new(prompt: SoftPrompt, reparam: Option<Reparameterizer>) -> Result<Self> {
        if let Some(r) = &reparam {
            if r.dim() != prompt.dim() {
                return Err(Error::Dimension {
                    op: "trainable prompt",
                    lhs: prompt.embeddings.shape(),
                    rhs: r.down.shape(),
                });
            }
        }
        Ok(Self { prompt, reparam })
    }

    pub fn len(&self) -> usize {
        self.prompt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prompt.is_empty()
    }

    pub fn record<'a>(&'a self, tape: &mut Tape<'a>) -> Result<PromptVars> {
        let raw = tape.param(&self.prompt.embeddings);
        let (effective, reparam) = match &self.reparam {
            Some(r) => {
                let (out, vars) = r.apply(tape, raw)?;
                (out, Some(vars))
            }
            None => (raw, None),
        };
        Ok(PromptVars {
            raw,
            effective,
            reparam,
        })
    }

    pub fn accumulate_grads(&mut self, grads: &Gradients, vars: &PromptVars) {
        grads.write_into(vars.raw, &mut self.prompt.embeddings);
        if let (Some(r), Some(rv)) = (&mut self.reparam, &vars.reparam) {
            for (p, &v) in r.params_mut().into_iter().zip(rv) {
                grads.write_into(v, p);
            }
        }
    }

    /// The prompt the model actually sees; with a reparameterizer this is its output.
    pub fn effective(&self) -> Result<Tensor2D> {
        match &self.reparam {
            Some(r) => reparameterize(r, &self.prompt.embeddings.value),
            None => Ok(self.prompt.embeddings.value.clone()),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = vec![&mut self.prompt.embeddings];
        if let Some(r) = &mut self.reparam {
            out.extend(r.params_mut());
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.prompt.embeddings.numel()
            + self
                .reparam
                .as_ref()
                .map_or(0, |r| r.params().iter().map(|p| p.numel()).sum())
    }
}

use super::{PromptPosition, TransformerWeights};
use crate::error::{Error, Result};
use crate::numerics::{Gradients, Parameter, Tape, Tensor2D, Var};

pub(crate) const LN_EPS: f32 = 1e-5;

/// Tape handles for every model parameter, parallel to
/// [`TransformerWeights::params`].
pub struct ModelVars {
    vars: Vec<Var>,
}

impl ModelVars {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

impl TransformerWeights {
    /// Adds each parameter's gradient from `grads`; frozen parameters are left alone.
    pub fn accumulate_grads(&mut self, grads: &Gradients, vars: &ModelVars) {
        for (p, &v) in self.params_mut().iter_mut().zip(&vars.vars) {
            grads.write_into(v, p);
        }
    }
}

/// How parameters enter the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tracking {
    /// Respect each parameter's `frozen` flag.
    Params,
    /// Everything is a constant; no backward rules are recorded for weights.
    Inference,
}

fn register<'a>(tape: &mut Tape<'a>, p: &'a Parameter, tracking: Tracking) -> Var {
    match tracking {
        Tracking::Params => tape.param(p),
        Tracking::Inference => tape.constant_ref(&p.value),
    }
}

/// Output of [`forward_hidden`]: final normalized hidden states (one row per
/// position) plus the handles needed to pull gradients back out.
pub struct Forward {
    pub hidden: Var,
    pub vars: ModelVars,
    /// Row of `hidden` whose next-token logits are the classification read-out.
    pub readout_row: usize,
}

/// Checks sequence limits and token ids before any work is done.
pub fn check_input(w: &TransformerWeights, tokens: &[usize], prompt_rows: usize) -> Result<()> {
    let c = w.config();
    let total = tokens.len() + prompt_rows;
    if total == 0 {
        return Err(Error::Contract("empty input sequence".into()));
    }
    if total > c.max_seq {
        return Err(Error::Capacity(format!(
            "sequence of {} tokens + {} prompt rows exceeds max_seq {}",
            tokens.len(),
            prompt_rows,
            c.max_seq
        )));
    }
    if let Some(&bad) = tokens.iter().find(|&&t| t >= c.vocab_size) {
        return Err(Error::Index {
            what: "token id",
            index: bad,
            limit: c.vocab_size,
        });
    }
    Ok(())
}

/// Runs the decoder stack over `tokens` with an optional soft prompt already on the tape.
pub fn forward_hidden<'a>(
    tape: &mut Tape<'a>,
    w: &'a TransformerWeights,
    tokens: &[usize],
    prompt: Option<Var>,
    position: PromptPosition,
    tracking: Tracking,
) -> Result<Forward> {
    let c = *w.config();
    let prompt_rows = prompt.map_or(0, |p| tape.value(p).rows());
    if let Some(p) = prompt {
        let cols = tape.value(p).cols();
        if cols != c.d_model {
            return Err(Error::Dimension {
                op: "soft prompt",
                lhs: (prompt_rows, cols),
                rhs: (prompt_rows, c.d_model),
            });
        }
    }
    check_input(w, tokens, prompt_rows)?;

    let vars: Vec<Var> = w
        .params()
        .iter()
        .map(|p| register(tape, p, tracking))
        .collect();
    let (tok_emb, pos_emb) = (vars[0], vars[1]);
    let total = tokens.len() + prompt_rows;

    let mut x = if tokens.is_empty() {
        prompt.expect("checked nonempty")
    } else {
        let text = tape.gather_rows(tok_emb, tokens)?;
        match (prompt, position) {
            (None, _) => text,
            (Some(p), PromptPosition::Append) => tape.concat_rows(&[text, p])?,
            (Some(p), PromptPosition::Prepend) => tape.concat_rows(&[p, text])?,
        }
    };
    let positions: Vec<usize> = (0..total).collect();
    let pos = tape.gather_rows(pos_emb, &positions)?;
    x = tape.add(x, pos)?;

    let dh = c.head_dim();
    let inv_sqrt = 1.0 / (dh as f32).sqrt();
    for l in 0..c.n_layers {
        let base = 2 + l * super::weights::LAYER_TENSORS.len();
        let lv = &vars[base..base + super::weights::LAYER_TENSORS.len()];
        let (ln1_g, ln1_b, wq, wk, wv, wo, ln2_g, ln2_b, ff_in, ff_out) = (
            lv[0], lv[1], lv[2], lv[3], lv[4], lv[5], lv[6], lv[7], lv[8], lv[9],
        );

        let h = tape.layer_norm(x, ln1_g, ln1_b, LN_EPS)?;
        let q = tape.matmul(h, wq)?;
        let k = tape.matmul(h, wk)?;
        let v = tape.matmul(h, wv)?;
        let mut heads = Vec::with_capacity(c.n_heads);
        for head in 0..c.n_heads {
            let qh = tape.slice_cols(q, head * dh, dh)?;
            let kh = tape.slice_cols(k, head * dh, dh)?;
            let vh = tape.slice_cols(v, head * dh, dh)?;
            let scores = tape.matmul_nt(qh, kh)?;
            let scores = tape.scale(scores, inv_sqrt);
            let attn = tape.causal_softmax(scores)?;
            heads.push(tape.matmul(attn, vh)?);
        }
        let merged = if heads.len() == 1 {
            heads[0]
        } else {
            tape.concat_cols(&heads)?
        };
        let attn_out = tape.matmul(merged, wo)?;
        x = tape.add(x, attn_out)?;

        let h = tape.layer_norm(x, ln2_g, ln2_b, LN_EPS)?;
        let up = tape.matmul(h, ff_in)?;
        let act = tape.gelu(up);
        let down = tape.matmul(act, ff_out)?;
        x = tape.add(x, down)?;
    }
    let n = vars.len();
    let hidden = tape.layer_norm(x, vars[n - 2], vars[n - 1], LN_EPS)?;
    Ok(Forward {
        hidden,
        vars: ModelVars { vars },
        readout_row: total - 1,
    })
}

/// Next-token logits (`1 × vocab_size`) at the read-out position, on the tape.
pub fn readout_logits(tape: &mut Tape<'_>, f: &Forward) -> Result<Var> {
    let last = tape.slice_rows(f.hidden, f.readout_row, 1)?;
    tape.matmul_nt(last, f.vars.vars[0])
}

/// Next-token logits at the final position of `tokens` followed by `prompt`.
pub fn forward_logits(
    w: &TransformerWeights,
    tokens: &[usize],
    prompt: Option<&Tensor2D>,
) -> Result<Vec<f32>> {
    forward_logits_at(w, tokens, prompt, PromptPosition::Append)
}

pub fn forward_logits_at(
    w: &TransformerWeights,
    tokens: &[usize],
    prompt: Option<&Tensor2D>,
    position: PromptPosition,
) -> Result<Vec<f32>> {
    let mut tape = Tape::new();
    let p = prompt.map(|t| tape.constant_ref(t));
    let f = forward_hidden(&mut tape, w, tokens, p, position, Tracking::Inference)?;
    let logits = readout_logits(&mut tape, &f)?;
    Ok(tape.value(logits).data().to_vec())
}

/// Final normalized hidden states, one row per position.
pub fn hidden_states(
    w: &TransformerWeights,
    tokens: &[usize],
    prompt: Option<&Tensor2D>,
) -> Result<Tensor2D> {
    let mut tape = Tape::new();
    let p = prompt.map(|t| tape.constant_ref(t));
    let f = forward_hidden(&mut tape, w, tokens, p, PromptPosition::Append, Tracking::Inference)?;
    Ok(tape.value(f.hidden).clone())
}

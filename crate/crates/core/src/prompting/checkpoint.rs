//! Prompt checkpoint: the model container with magic `SPTPRMT1`.
//!
//! Body: `n` u32, `d` u32, reparameterized flag u8, bottleneck `m` u32 (only
//! when the flag is 1), then the `n × d` prompt, then `W_down`, `W_up`,
//! norm gain and norm bias when reparameterized. All tensors little-endian f32.

use std::path::Path;

use super::{PromptInit, Reparameterizer, SoftPrompt, TrainablePrompt};
use crate::error::{CheckpointError, Error, Result};
use crate::model::checkpoint::{push_u32, read_file, seal, unseal, write_file, BodyReader};

pub const PROMPT_MAGIC: &[u8; 8] = b"SPTPRMT1";

pub fn prompt_to_bytes(p: &TrainablePrompt) -> Vec<u8> {
    let (n, d) = p.prompt.embeddings.shape();
    let mut body = Vec::new();
    push_u32(&mut body, n);
    push_u32(&mut body, d);
    match &p.reparam {
        Some(r) => {
            body.push(1);
            push_u32(&mut body, r.bottleneck());
        }
        None => body.push(0),
    }
    body.extend(p.prompt.embeddings.value.to_le_bytes());
    if let Some(r) = &p.reparam {
        for param in r.params() {
            body.extend(param.value.to_le_bytes());
        }
    }
    seal(PROMPT_MAGIC, &body)
}

pub fn prompt_from_bytes(bytes: &[u8]) -> std::result::Result<TrainablePrompt, CheckpointError> {
    let body = unseal(PROMPT_MAGIC, bytes)?;
    let mut r = BodyReader::new(body);
    let n = r.u32()?;
    let d = r.u32()?;
    let flag = r.u8()?;
    let m = match flag {
        0 => None,
        1 => Some(r.u32()?),
        other => {
            return Err(CheckpointError::Malformed(format!(
                "reparameterization flag {other} is neither 0 nor 1"
            )))
        }
    };
    let embeddings = r.tensor(n, d)?;
    let reparam = match m {
        Some(m) => {
            let down = r.tensor(d, m)?;
            let up = r.tensor(m, d)?;
            let gain = r.tensor(1, d)?;
            let bias = r.tensor(1, d)?;
            Some(
                Reparameterizer::from_parts(down, up, gain, bias)
                    .map_err(|e| CheckpointError::Malformed(e.to_string()))?,
            )
        }
        None => None,
    };
    r.finish()?;
    // The init strategy is not stored; it only matters before training.
    TrainablePrompt::new(SoftPrompt::from_tensor(embeddings, PromptInit::default()), reparam)
        .map_err(|e| CheckpointError::Malformed(e.to_string()))
}

pub fn save_prompt(p: &TrainablePrompt, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &prompt_to_bytes(p))
}

pub fn load_prompt(path: impl AsRef<Path>) -> Result<TrainablePrompt> {
    let path = path.as_ref();
    prompt_from_bytes(&read_file(path)?).map_err(|source| Error::Checkpoint {
        path: path.to_path_buf(),
        source,
    })
}

//! Binary checkpoint container.
//!
//! ```text
//! magic      8 bytes   "SPTCKPT1" (model) or "SPTPRMT1" (prompt)
//! version    u16 LE
//! body       header fields (u32 LE) followed by f32 LE tensors
//! crc        u32 LE    CRC-32 (IEEE) of `body`
//! ```
//!
//! The model body is `n_layers, d_model, n_heads, d_ff, vocab_size, max_seq`
//! as u32 followed by every tensor in [`TransformerWeights`] storage order.

use std::path::Path;

use super::{ModelConfig, TransformerWeights};
use crate::error::{CheckpointError, Error, Result};
use crate::numerics::Tensor2D;

pub const MODEL_MAGIC: &[u8; 8] = b"SPTCKPT1";
pub const FORMAT_VERSION: u16 = 1;

pub(crate) fn seal(magic: &[u8; 8], body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 2 + body.len() + 4);
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(body);
    out.extend_from_slice(&crc32fast::hash(body).to_le_bytes());
    out
}

/// Validates magic, version, and CRC; returns the body.
pub(crate) fn unseal<'b>(
    magic: &[u8; 8],
    bytes: &'b [u8],
) -> std::result::Result<&'b [u8], CheckpointError> {
    if bytes.len() < 8 || &bytes[..8] != magic {
        let found = &bytes[..bytes.len().min(8)];
        return Err(CheckpointError::BadMagic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(found).into_owned(),
        });
    }
    if bytes.len() < 14 {
        return Err(CheckpointError::Malformed("shorter than header + CRC".into()));
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != FORMAT_VERSION {
        return Err(CheckpointError::BadVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let (body, crc) = bytes[10..].split_at(bytes.len() - 14);
    let stored = u32::from_le_bytes(crc.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(CheckpointError::CrcMismatch { stored, computed });
    }
    Ok(body)
}

/// Sequential little-endian reader over a checkpoint body.
pub(crate) struct BodyReader<'b> {
    bytes: &'b [u8],
    pos: usize,
}

impl<'b> BodyReader<'b> {
    pub(crate) fn new(bytes: &'b [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> std::result::Result<&'b [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(CheckpointError::Malformed(format!(
                "needed {n} bytes at offset {}, body has {}",
                self.pos,
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> std::result::Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> std::result::Result<usize, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    pub(crate) fn tensor(
        &mut self,
        rows: usize,
        cols: usize,
    ) -> std::result::Result<Tensor2D, CheckpointError> {
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| CheckpointError::Malformed("tensor size overflows".into()))?;
        let raw = self.take(n)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(Tensor2D::from_vec(rows, cols, data).expect("length checked"))
    }

    pub(crate) fn finish(&self) -> std::result::Result<(), CheckpointError> {
        if self.pos != self.bytes.len() {
            return Err(CheckpointError::Malformed(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub(crate) fn push_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn model_to_bytes(w: &TransformerWeights) -> Vec<u8> {
    let c = w.config();
    let mut body = Vec::with_capacity(24 + w.num_parameters() * 4);
    for v in [c.n_layers, c.d_model, c.n_heads, c.d_ff, c.vocab_size, c.max_seq] {
        push_u32(&mut body, v);
    }
    body.extend(w.payload_bytes());
    seal(MODEL_MAGIC, &body)
}

pub fn model_from_bytes(bytes: &[u8]) -> std::result::Result<TransformerWeights, CheckpointError> {
    let body = unseal(MODEL_MAGIC, bytes)?;
    let mut r = BodyReader::new(body);
    let config = ModelConfig {
        n_layers: r.u32()?,
        d_model: r.u32()?,
        n_heads: r.u32()?,
        d_ff: r.u32()?,
        vocab_size: r.u32()?,
        max_seq: r.u32()?,
    };
    config
        .validate()
        .map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    let tensors = super::weights::tensor_shapes(&config)
        .into_iter()
        .map(|(_, (rows, cols))| r.tensor(rows, cols))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    r.finish()?;
    TransformerWeights::from_tensors(config, tensors)
        .map_err(|e| CheckpointError::Malformed(e.to_string()))
}

pub fn save_checkpoint(w: &TransformerWeights, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &model_to_bytes(w))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<TransformerWeights> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    model_from_bytes(&bytes).map_err(|source| Error::Checkpoint {
        path: path.to_path_buf(),
        source,
    })
}

/// CRC-32 identifying a file's contents.
///
/// For a checkpoint image the trailing stored CRC is excluded: a CRC-32 taken
/// over data followed by its own CRC is the same constant for every input, so
/// hashing the full image would not tell two checkpoints apart. Other files
/// are hashed whole.
pub fn file_crc(bytes: &[u8]) -> u32 {
    let sealed = bytes.len() >= 14
        && (bytes.starts_with(MODEL_MAGIC) || bytes.starts_with(crate::prompting::checkpoint::PROMPT_MAGIC));
    crc32fast::hash(if sealed { &bytes[..bytes.len() - 4] } else { bytes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TransformerWeights {
        let c = ModelConfig {
            n_layers: 1,
            d_model: 8,
            n_heads: 2,
            d_ff: 16,
            vocab_size: 11,
            max_seq: 6,
        };
        TransformerWeights::init(c, 3).unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let w = tiny();
        let bytes = model_to_bytes(&w);
        let back = model_from_bytes(&bytes).unwrap();
        assert_eq!(model_to_bytes(&back), bytes);
        assert_eq!(back.payload_bytes(), w.payload_bytes());
    }

    #[test]
    fn file_crc_tells_checkpoints_apart() {
        let a = model_to_bytes(&tiny());
        let mut w = tiny();
        w.params_mut()[0].value.data_mut()[0] += 1.0;
        let b = model_to_bytes(&w);
        assert_ne!(file_crc(&a), file_crc(&b));
        assert_eq!(file_crc(&a), file_crc(&model_to_bytes(&tiny())));
        // The whole-image CRC is the same residue for both.
        assert_eq!(crc32fast::hash(&a), crc32fast::hash(&b));
    }

    #[test]
    fn corruption_is_reported_by_kind() {
        let bytes = model_to_bytes(&tiny());

        let mut flipped = bytes.clone();
        flipped[40] ^= 0x01;
        assert!(matches!(
            model_from_bytes(&flipped),
            Err(CheckpointError::CrcMismatch { .. })
        ));

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(model_from_bytes(&magic), Err(CheckpointError::BadMagic { .. })));

        let mut version = bytes.clone();
        version[8] = 9;
        assert!(matches!(
            model_from_bytes(&version),
            Err(CheckpointError::BadVersion { found: 9, .. })
        ));

        assert!(model_from_bytes(&bytes[..bytes.len() - 7]).is_err());
    }

    #[test]
    fn header_layout_is_stable() {
        let bytes = model_to_bytes(&tiny());
        assert_eq!(&bytes[..8], b"SPTCKPT1");
        assert_eq!(&bytes[8..10], &[1, 0]);
        assert_eq!(&bytes[10..14], &1u32.to_le_bytes());
        assert_eq!(&bytes[14..18], &8u32.to_le_bytes());
        let n = tiny().num_parameters();
        assert_eq!(bytes.len(), 8 + 2 + 24 + 4 * n + 4);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn any_weights_round_trip(seed in 0u64..1000, layers in 1usize..3, heads in 1usize..3, vocab in 3usize..20) {
            let c = ModelConfig { n_layers: layers, d_model: 4 * heads, n_heads: heads, d_ff: 8, vocab_size: vocab, max_seq: 5 };
            let w = TransformerWeights::init(c, seed).unwrap();
            let bytes = model_to_bytes(&w);
            let back = model_from_bytes(&bytes).unwrap();
            proptest::prop_assert_eq!(back.config(), w.config());
            proptest::prop_assert_eq!(model_to_bytes(&back), bytes);
        }
    }
}

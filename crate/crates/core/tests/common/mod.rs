//! Test oracles written independently of the library kernels: a straight-line
//! f64 transformer, plain statistics, and small fixtures.
#![allow(dead_code)]

use spt_core::model::{ModelConfig, TransformerWeights};

pub type Mat = Vec<Vec<f64>>;

pub fn to_mat(data: &[f32], rows: usize, cols: usize) -> Mat {
    (0..rows)
        .map(|r| data[r * cols..(r + 1) * cols].iter().map(|&x| x as f64).collect())
        .collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for p in 0..k {
            for j in 0..m {
                out[i][j] += a[i][p] * b[p][j];
            }
        }
    }
    out
}

fn layer_norm(x: &Mat, gain: &[f64], bias: &[f64]) -> Mat {
    x.iter()
        .map(|row| {
            let n = row.len() as f64;
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let inv = 1.0 / (var + 1e-5).sqrt();
            row.iter()
                .enumerate()
                .map(|(c, v)| (v - mean) * inv * gain[c] + bias[c])
                .collect()
        })
        .collect()
}

fn gelu(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * x * (1.0 + (c * (x + 0.044715 * x.powi(3))).tanh())
}

/// Reference decoder: same parameterization as the library, evaluated in f64
/// with explicit loops.
#[derive(Clone)]
pub struct RefModel {
    pub config: ModelConfig,
    /// Tensors in storage order.
    pub tensors: Vec<Mat>,
}

impl RefModel {
    pub fn from_weights(w: &TransformerWeights) -> Self {
        let tensors = w
            .params()
            .iter()
            .map(|p| to_mat(p.value.data(), p.value.rows(), p.value.cols()))
            .collect();
        Self {
            config: *w.config(),
            tensors,
        }
    }

    fn layer(&self, l: usize, i: usize) -> &Mat {
        &self.tensors[2 + l * 10 + i]
    }

    /// Final normalized hidden states. `prompt` rows are placed after the
    /// text unless `prepend`.
    pub fn hidden(&self, tokens: &[usize], prompt: Option<&Mat>, prepend: bool) -> Mat {
        let c = self.config;
        let emb = &self.tensors[0];
        let text: Mat = tokens.iter().map(|&t| emb[t].clone()).collect();
        let mut x: Mat = match (prompt, prepend) {
            (None, _) => text,
            (Some(p), false) => text.into_iter().chain(p.iter().cloned()).collect(),
            (Some(p), true) => p.iter().cloned().chain(text).collect(),
        };
        for (i, row) in x.iter_mut().enumerate() {
            for (v, pe) in row.iter_mut().zip(&self.tensors[1][i]) {
                *v += pe;
            }
        }
        let t = x.len();
        let dh = c.d_model / c.n_heads;
        for l in 0..c.n_layers {
            let h = layer_norm(&x, &self.layer(l, 0)[0], &self.layer(l, 1)[0]);
            let q = matmul(&h, self.layer(l, 2));
            let k = matmul(&h, self.layer(l, 3));
            let v = matmul(&h, self.layer(l, 4));
            let mut merged = vec![vec![0.0; c.d_model]; t];
            for head in 0..c.n_heads {
                let off = head * dh;
                for i in 0..t {
                    let scores: Vec<f64> = (0..=i)
                        .map(|j| {
                            (0..dh).map(|d| q[i][off + d] * k[j][off + d]).sum::<f64>()
                                / (dh as f64).sqrt()
                        })
                        .collect();
                    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
                    for (j, s) in scores.iter().enumerate() {
                        let a = (s - m).exp() / z;
                        for d in 0..dh {
                            merged[i][off + d] += a * v[j][off + d];
                        }
                    }
                }
            }
            let attn = matmul(&merged, self.layer(l, 5));
            for (xr, ar) in x.iter_mut().zip(&attn) {
                for (a, b) in xr.iter_mut().zip(ar) {
                    *a += b;
                }
            }
            let h = layer_norm(&x, &self.layer(l, 6)[0], &self.layer(l, 7)[0]);
            let up: Mat = matmul(&h, self.layer(l, 8))
                .into_iter()
                .map(|r| r.into_iter().map(gelu).collect())
                .collect();
            let down = matmul(&up, self.layer(l, 9));
            for (xr, dr) in x.iter_mut().zip(&down) {
                for (a, b) in xr.iter_mut().zip(dr) {
                    *a += b;
                }
            }
        }
        let n = self.tensors.len();
        layer_norm(&x, &self.tensors[n - 2][0], &self.tensors[n - 1][0])
    }

    /// Next-token logits at the last position (tied LM head).
    pub fn logits(&self, tokens: &[usize], prompt: Option<&Mat>, prepend: bool) -> Vec<f64> {
        let h = self.hidden(tokens, prompt, prepend);
        let last = h.last().unwrap();
        self.tensors[0]
            .iter()
            .map(|e| e.iter().zip(last).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Cross-entropy over the logits restricted to `tokens`, gold class `gold`.
pub fn restricted_ce(logits: &[f64], tokens: &[usize], gold: usize) -> f64 {
    let sel: Vec<f64> = tokens.iter().map(|&t| logits[t]).collect();
    let m = sel.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + sel.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
    lse - sel[gold]
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)` in f64.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let s = norm(a).max(norm(b));
    if s == 0.0 {
        0.0
    } else {
        diff / s
    }
}

/// Brute-force Pearson: covariance over the product of standard deviations,
/// computed from raw sums.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let cov = x.iter().zip(y).map(|(a, b)| (a - sx / n) * (b - sy / n)).sum::<f64>() / (n - 1.0);
    let vx = x.iter().map(|a| (a - sx / n).powi(2)).sum::<f64>() / (n - 1.0);
    let vy = y.iter().map(|b| (b - sy / n).powi(2)).sum::<f64>() / (n - 1.0);
    cov / (vx.sqrt() * vy.sqrt())
}

pub fn smoke_spec_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/smoke_spec.json")
}

/// A 2-layer, d = 32, vocab = 128 model.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        n_layers: 2,
        d_model: 32,
        n_heads: 4,
        d_ff: 64,
        vocab_size: 128,
        max_seq: 32,
    }
}

pub mod fixture {
    use std::sync::OnceLock;

    use spt_core::corpus::{generate_synthetic, Corpus, SyntheticSpec, Tokenizer};
    use spt_core::linguistics::LanguageProfile;
    use spt_core::model::{ModelConfig, TransformerWeights};
    use spt_core::training::{pretrain_lm, PretrainConfig, PretrainReport};

    pub struct Smoke {
        pub corpus: Corpus,
        pub profiles: Vec<LanguageProfile>,
        pub tokenizer: Tokenizer,
        pub weights: TransformerWeights,
        pub report: PretrainReport,
    }

    /// Smoke corpus plus a smoke-sized model pretrained for three epochs, built once per test binary.
    pub fn smoke() -> &'static Smoke {
        static CELL: OnceLock<Smoke> = OnceLock::new();
        CELL.get_or_init(|| {
            let spec = SyntheticSpec::load(super::smoke_spec_path()).unwrap();
            let (corpus, profiles) = generate_synthetic(&spec, 0).unwrap();
            let tokenizer = Tokenizer::build(&corpus, 512).unwrap();
            let mut weights = TransformerWeights::init(ModelConfig::smoke(), 0).unwrap();
            let config = PretrainConfig { epochs: 3, ..Default::default() };
            let report = pretrain_lm(&mut weights, &corpus, &tokenizer, &config).unwrap();
            Smoke { corpus, profiles, tokenizer, weights, report }
        })
    }
}

mod common;

use common::{tiny_config, RefModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spt_core::model::{
    count_parameters, forward_logits_at, hidden_states, model_parameters, ModelConfig,
    PromptPosition, TransformerWeights,
};
use spt_core::numerics::Tensor2D;
use spt_core::Error;

/// Weights with O(1) entries so every block contributes visibly.
fn lively_weights(seed: u64) -> TransformerWeights {
    let mut w = TransformerWeights::init(tiny_config(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 99);
    for p in w.params_mut() {
        let is_gain = p.value.rows() == 1;
        for v in p.value.data_mut() {
            let noise: f32 = rng.random_range(-0.3..0.3);
            *v = if is_gain { 1.0 + noise } else { noise };
        }
    }
    w
}

fn random_prompt(rows: usize, d: usize, seed: u64) -> Tensor2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * d).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    Tensor2D::from_vec(rows, d, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn logits_match_f64_reference(
        seed in 0u64..1000,
        tokens in prop::collection::vec(0usize..128, 1..12),
        prompt_rows in 0usize..5,
        prepend in any::<bool>(),
    ) {
        let w = lively_weights(seed);
        let oracle = RefModel::from_weights(&w);
        let prompt = (prompt_rows > 0).then(|| random_prompt(prompt_rows, 32, seed + 1));
        let position = if prepend { PromptPosition::Prepend } else { PromptPosition::Append };
        let got = forward_logits_at(&w, &tokens, prompt.as_ref(), position).unwrap();
        let pm = prompt.as_ref().map(|p| common::to_mat(p.data(), p.rows(), p.cols()));
        let want = oracle.logits(&tokens, pm.as_ref(), prepend);
        for (g, x) in got.iter().zip(&want) {
            prop_assert!((*g as f64 - x).abs() < 1e-4, "{g} vs {x}");
        }
    }

    #[test]
    fn causal_masking_hides_the_future(
        seed in 0u64..1000,
        tokens in prop::collection::vec(0usize..128, 2..12),
        replacement in 0usize..128,
    ) {
        let w = lively_weights(seed);
        let mut changed = tokens.clone();
        *changed.last_mut().unwrap() = replacement;
        let a = hidden_states(&w, &tokens, None).unwrap();
        let b = hidden_states(&w, &changed, None).unwrap();
        for r in 0..tokens.len() - 1 {
            prop_assert_eq!(a.row(r), b.row(r));
        }
    }
}

#[test]
fn initialization_and_forward_are_deterministic() {
    let a = TransformerWeights::init(tiny_config(), 5).unwrap();
    let b = TransformerWeights::init(tiny_config(), 5).unwrap();
    let c = TransformerWeights::init(tiny_config(), 6).unwrap();
    assert_eq!(a.payload_bytes(), b.payload_bytes());
    assert_ne!(a.payload_bytes(), c.payload_bytes());
    let t = [3, 1, 4, 1, 5];
    assert_eq!(
        forward_logits_at(&a, &t, None, PromptPosition::Append).unwrap(),
        forward_logits_at(&b, &t, None, PromptPosition::Append).unwrap()
    );
}

#[test]
fn input_errors() {
    let w = TransformerWeights::init(tiny_config(), 0).unwrap();
    let long = vec![1; 33];
    assert!(matches!(forward_logits_at(&w, &long, None, PromptPosition::Append), Err(Error::Capacity(_))));
    let prompt = random_prompt(4, 32, 0);
    assert!(matches!(
        forward_logits_at(&w, &[1; 29], Some(&prompt), PromptPosition::Append),
        Err(Error::Capacity(_))
    ));
    assert!(matches!(forward_logits_at(&w, &[128], None, PromptPosition::Append), Err(Error::Index { .. })));
    assert!(matches!(forward_logits_at(&w, &[], None, PromptPosition::Append), Err(Error::Contract(_))));
    let wrong = random_prompt(2, 16, 0);
    assert!(matches!(
        forward_logits_at(&w, &[1], Some(&wrong), PromptPosition::Append),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn parameter_counts_match_tensor_sizes() {
    let c = tiny_config();
    let w = TransformerWeights::init(c, 0).unwrap();
    assert_eq!(model_parameters(&c), w.num_parameters() as u64);
    // Prompt only, prompt plus reparameterizer, and everything.
    assert_eq!(count_parameters(&c, false, 10, None), 320);
    assert_eq!(count_parameters(&c, false, 10, Some(8)), 320 + 2 * 32 * 8 + 2 * 32);
    assert_eq!(count_parameters(&c, true, 10, None), 320 + w.num_parameters() as u64);
    let smoke = ModelConfig::smoke();
    // 512·64 + 64·64 + 2·(4·64² + 2·64·256 + 4·64) + 2·64
    assert_eq!(model_parameters(&smoke), 32768 + 4096 + 2 * (16384 + 32768 + 256) + 128);
}

mod common;

use common::{rel_err, restricted_ce, tiny_config, RefModel};
use spt_core::model::{forward_hidden, readout_logits, PromptPosition, Tracking, TransformerWeights};
use spt_core::numerics::{Tape, Tensor2D};
use spt_core::prompting::{init_prompt, PromptInit, TrainablePrompt, Verbalizer};

/// Every model tensor's gradient, checked on its own against f64 central
/// differences of the reference model, so small-gradient tensors are not
/// masked by large ones.
#[test]
fn each_weight_tensor_matches_reference_differences() {
    let c = tiny_config();
    let labels = vec![20, 21, 22, 23, 24, 25, 26];
    let tokens = [5, 17, 9, 3, 40, 41];
    let gold = 3;
    for position in [PromptPosition::Append, PromptPosition::Prepend] {
        let mut weights = TransformerWeights::init(c, 7).unwrap();
        weights.set_frozen(false);
        let prompt = TrainablePrompt::new(init_prompt(&weights, 4, PromptInit::VocabSample, 8).unwrap(), None).unwrap();
        let verbalizer = Verbalizer::new(labels.clone(), c.vocab_size).unwrap();
        let mut tape = Tape::new();
        let pv = prompt.record(&mut tape).unwrap();
        let f = forward_hidden(&mut tape, &weights, &tokens, Some(pv.effective), position, Tracking::Params).unwrap();
        let logits = readout_logits(&mut tape, &f).unwrap();
        let loss = verbalizer.loss_on_tape(&mut tape, logits, gold).unwrap();
        let grads = tape.backward(loss).unwrap();

        let p = &prompt.prompt.embeddings.value;
        let pm = common::to_mat(p.data(), p.rows(), p.cols());
        let prepend = position == PromptPosition::Prepend;
        let oracle = RefModel::from_weights(&weights);
        let loss_of = |m: &RefModel| restricted_ce(&m.logits(&tokens, Some(&pm), prepend), &labels, gold);
        let h = 1e-6;
        for (i, param) in weights.params().iter().enumerate() {
            let analytic: &Tensor2D = grads.get(f.vars.vars()[i]).unwrap();
            // Position rows past the sequence get no gradient; skip them.
            let rows = if i == 1 { tokens.len() + 4 } else { param.value.rows() };
            let mut a = Vec::new();
            let mut n = Vec::new();
            let mut probe = oracle.clone();
            for r in 0..rows {
                for col in 0..param.value.cols() {
                    let x = probe.tensors[i][r][col];
                    probe.tensors[i][r][col] = x + h;
                    let up = loss_of(&probe);
                    probe.tensors[i][r][col] = x - h;
                    let down = loss_of(&probe);
                    probe.tensors[i][r][col] = x;
                    n.push((up - down) / (2.0 * h));
                    a.push(analytic.get(r, col) as f64);
                }
            }
            let e = rel_err(&a, &n);
            assert!(e < 1e-3, "{position:?} tensor {i}: relative error {e:.3e}");
        }
    }
}

//! Compares reverse-mode gradients of the prompt-tuning loss with central
//! finite differences, for the soft prompt and for every model weight of a
//! small transformer.
//!
//! Differences are taken in f32, so tensors with very small gradients (the
//! attention query and key maps at initialization) show larger relative
//! error; the gradient norm column makes that visible.
//!
//! cargo run --release --example gradient_check

use spt_core::model::{forward_hidden, readout_logits, ModelConfig, PromptPosition, Tracking, TransformerWeights};
use spt_core::numerics::{finite_diff_grad, relative_error, Tape, Tensor2D};
use spt_core::prompting::{init_prompt, PromptInit, TrainablePrompt, Verbalizer};

fn main() -> spt_core::Result<()> {
    let config = ModelConfig { n_layers: 2, d_model: 32, n_heads: 4, d_ff: 64, vocab_size: 128, max_seq: 32 };
    let mut weights = TransformerWeights::init(config, 7)?;
    weights.set_frozen(false);
    let prompt = TrainablePrompt::new(init_prompt(&weights, 4, PromptInit::VocabSample, 8)?, None)?;
    let verbalizer = Verbalizer::new(vec![20, 21, 22, 23, 24, 25, 26], config.vocab_size)?;
    let tokens = [5, 17, 9, 3, 40, 41];
    let gold = 3;

    let loss_with = |w: &TransformerWeights, p: &Tensor2D| -> f32 {
        let mut tape = Tape::new();
        let pv = tape.constant_ref(p);
        let f = forward_hidden(&mut tape, w, &tokens, Some(pv), PromptPosition::Append, Tracking::Inference).unwrap();
        let logits = readout_logits(&mut tape, &f).unwrap();
        let loss = verbalizer.loss_on_tape(&mut tape, logits, gold).unwrap();
        tape.value(loss).get(0, 0)
    };

    let mut tape = Tape::new();
    let pv = prompt.record(&mut tape)?;
    let f = forward_hidden(&mut tape, &weights, &tokens, Some(pv.effective), PromptPosition::Append, Tracking::Params)?;
    let logits = readout_logits(&mut tape, &f)?;
    let loss = verbalizer.loss_on_tape(&mut tape, logits, gold)?;
    println!("loss {:.5}", tape.value(loss).get(0, 0));
    let grads = tape.backward(loss)?;

    let h = 1e-2;
    let prompt_value = &prompt.prompt.embeddings.value;
    let numeric = finite_diff_grad(&prompt.prompt.embeddings, h, |p| loss_with(&weights, p));
    let analytic = grads.get(pv.raw).expect("prompt gradient");
    let norm = |t: &Tensor2D| t.data().iter().map(|x| x * x).sum::<f32>().sqrt();
    println!("{:<12} {:>8} {:>12} {:>12}", "tensor", "entries", "grad norm", "rel. error");
    println!(
        "{:<12} {:>8} {:>12.2e} {:>12.2e}",
        "prompt",
        prompt_value.len(),
        norm(analytic),
        relative_error(analytic.data(), numeric.data())
    );

    for (i, p) in weights.params().iter().enumerate() {
        let numeric = finite_diff_grad(p, h, |t| {
            let mut probe = weights.clone();
            probe.params_mut()[i].value = t.clone();
            loss_with(&probe, prompt_value)
        });
        let analytic = grads.get(f.vars.vars()[i]).expect("weight gradient");
        println!(
            "{:<12} {:>8} {:>12.2e} {:>12.2e}",
            format!("weight {i}"),
            p.numel(),
            norm(analytic),
            relative_error(analytic.data(), numeric.data())
        );
    }
    Ok(())
}

//! Finite-difference check of an LSTM step feeding a softmax classifier.
use codeswitch::nn::{grad_check_params, Embedding, Linear, LstmCell, Params};
use codeswitch::rng::substream;

fn main() -> codeswitch::Result<()> {
    let mut rng = substream(9, "gradient-check");
    let mut params = Params::new();
    let emb = Embedding::new(&mut params, "emb", 6, 4, &mut rng);
    let cell = LstmCell::new(&mut params, "cell", 4, 5, &mut rng);
    let out = Linear::new(&mut params, "out", 5, 6, &mut rng);
    let (inputs, targets) = ([[0, 3], [2, 5], [1, 1]], [3, 5]);
    let err = grad_check_params(
        &params,
        |g, p| {
            let mut state = cell.zero_state(g, 2);
            for ids in &inputs {
                let x = emb.lookup(g, p, ids)?;
                state = cell.step(g, p, x, state)?;
            }
            let logits = out.forward(g, p, state.h)?;
            g.cross_entropy(logits, &targets, None)
        },
        1e-5,
    )?;
    println!("max relative error {err:.3e} over {} parameter tensors", params.len());
    Ok(())
}

//! Toy pipeline end to end: pretraining, adversarial training with cycle
//! losses, generation, CMI comparison and the LM augmentation test.
//! Takes about two minutes; pass a seed as the first argument.
use codeswitch::pipeline::{run_toy, PipelineConfig};

fn main() -> codeswitch::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let outcome = run_toy(&PipelineConfig { seed, ..PipelineConfig::default() })?;
    let s = &outcome.summary;
    println!("reconstruction accuracy  pretrained {:.4}  cyclegan {:.4}", s.cycle_accuracy_pretrained, s.cycle_accuracy_cyclegan);
    println!("CMI distance to CS       mono {:.3}  s2s {:.3}  cyclegan {:.3}", s.distance_mono, s.distance_s2s, s.distance_cyclegan);
    println!("discriminator accuracy   {:.3}", s.discriminator_accuracy_tail);
    print!("{}", s.ab.to_table());
    for (src, out) in outcome.mono_train.iter().zip(outcome.generated_cyclegan.iter()).take(5) {
        println!("{src}\n  -> {out}");
    }
    Ok(())
}

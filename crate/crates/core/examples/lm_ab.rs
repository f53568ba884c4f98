//! Baseline LM against one trained on extra text, scored on the same dev set.
use codeswitch::corpus::Corpus;
use codeswitch::lm::{augmentation_experiment, LmConfig};
use codeswitch::synth::{generate_toy, ToySpec};

fn main() -> codeswitch::Result<()> {
    let toy = generate_toy(&ToySpec { corpus_size: 400, cs_size: 500, seed: 3, ..ToySpec::default() })?;
    let base = Corpus::new("base", toy.cs.sentences[..200].to_vec());
    let extra = Corpus::new("extra", toy.cs.sentences[200..400].to_vec());
    let dev = Corpus::new("dev", toy.cs.sentences[400..].to_vec());
    let config = LmConfig::default();
    let report = augmentation_experiment(&base, &[("+cs", &extra), ("+mono", &toy.mono)], &dev, None, &config)?;
    print!("{}", report.to_table());
    Ok(())
}

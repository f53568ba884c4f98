use std::time::Instant;

use serde::Serialize;

use super::commands::{cmi_text, cyclegan_config, decode_mode, epoch_csv, lm_config, policy, pretrain_config};
use super::{Manifest, PipelineConfig, Run};
use crate::cmi::{histogram, histogram_distance};
use crate::corpus::{Corpus, Sentence};
use crate::cyclegan::{self, cycle_accuracy, CycleGanModel, TrainLog};
use crate::error::{Error, Result};
use crate::lm::{augmentation_experiment, AbReport};
use crate::seq2seq::TrainReport;
use crate::synth::{generate_toy, make_pairs, pairs_to_text, ToyData, ToySpec};

/// Everything a toy run produces, in memory.
pub struct ToyOutcome {
    pub data: ToyData,
    pub mono_train: Corpus,
    pub mono_heldout: Corpus,
    pub cs_base: Corpus,
    pub cs_train: Corpus,
    pub cs_dev: Corpus,
    pub cs_eval: Corpus,
    pub pairs: Vec<(Sentence, Sentence)>,
    pub pretrain_g: TrainReport,
    pub pretrain_f: TrainReport,
    pub pretrained: CycleGanModel,
    pub model: CycleGanModel,
    pub log: TrainLog,
    pub generated_s2s: Corpus,
    pub generated_cyclegan: Corpus,
    pub summary: ToySummary,
    /// Wall-clock seconds per stage; not part of any written output.
    pub timings: Vec<(&'static str, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToySummary {
    pub seed: u64,
    /// Token-level `F(G(x))` accuracy on held-out monolingual text.
    pub cycle_accuracy_pretrained: f64,
    pub cycle_accuracy_cyclegan: f64,
    /// Total variation distance of each CMI histogram to the
    /// code-switched corpus.
    pub distance_mono: f64,
    pub distance_s2s: f64,
    pub distance_cyclegan: f64,
    pub discriminator_accuracy_tail: f64,
    pub ab: AbReport,
}

fn split(corpus: &Corpus, name: &str, range: std::ops::Range<usize>) -> Result<Corpus> {
    let sentences = corpus.sentences.get(range.clone()).ok_or_else(|| {
        Error::Config(format!("toy split {name} {range:?} exceeds the {} generated sentences", corpus.len()))
    })?;
    Ok(Corpus::new(name, sentences.to_vec()))
}

/// Toy pipeline: synthetic languages, lexicon pairs, generator
/// pretraining, CycleGAN training, generation with both the pretrained
/// (seq2seq) and the CycleGAN generator, CMI comparison and the LM A/B
/// experiment.
pub fn run_toy(config: &PipelineConfig) -> Result<ToyOutcome> {
    config.validate()?;
    let t = &config.toy;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, f64)>| {
        timings.push((name, clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };

    let data = generate_toy(&ToySpec {
        vocab_a_size: t.vocab_size,
        vocab_b_size: t.vocab_size,
        sentence_len: t.sentence_len,
        corpus_size: t.mono_train + t.mono_heldout,
        cs_size: t.cs_train + t.cs_dev + t.cs_eval,
        branching: t.branching,
        cs_rate: t.cs_rate,
        seed: config.stage_seed("toy"),
    })?;
    if t.cs_base > t.cs_train {
        return Err(Error::Config("toy.cs_base must not exceed toy.cs_train".into()));
    }
    let mono_train = split(&data.mono, "mono_train", 0..t.mono_train)?;
    let mono_heldout = split(&data.mono, "mono_heldout", t.mono_train..t.mono_train + t.mono_heldout)?;
    let cs_base = split(&data.cs, "cs_base", 0..t.cs_base)?;
    let cs_train = split(&data.cs, "cs_train", 0..t.cs_train)?;
    let cs_dev = split(&data.cs, "cs_dev", t.cs_train..t.cs_train + t.cs_dev)?;
    let cs_eval = split(&data.cs, "cs_eval", t.cs_train + t.cs_dev..t.cs_train + t.cs_dev + t.cs_eval)?;
    let paired = split(&mono_train, "paired", 0..t.pair_sentences)?;
    let pairs = make_pairs(&paired, &data.lexicon, &policy(config))?;
    lap("data", &mut timings);

    let (pretrained, pretrain_g, pretrain_f) = cyclegan::pretrain(
        &pairs,
        &cyclegan::reverse_pairs(&pairs),
        &[&data.mono, &data.cs],
        &pretrain_config(config),
    )?;
    lap("pretrain", &mut timings);

    let mut model = pretrained.clone();
    let log = cyclegan::train(&mut model, &mono_train, &cs_train, &cyclegan_config(config))?;
    lap("cyclegan", &mut timings);

    let mode = decode_mode(config);
    let generated_s2s = cyclegan::generate(&pretrained, &mono_train, mode)?;
    let generated_cyclegan = cyclegan::generate(&model, &mono_train, mode)?;
    let acc_pre = cycle_accuracy(&pretrained, &mono_heldout)?;
    let acc_cyc = cycle_accuracy(&model, &mono_heldout)?;
    let target = histogram(&data.cs);
    let dist = |c: &Corpus| histogram_distance(&histogram(c), &target);
    lap("generate", &mut timings);

    let ab = augmentation_experiment(
        &cs_base,
        &[("+s2s", &generated_s2s), ("+cyclegan", &generated_cyclegan)],
        &cs_dev,
        Some(&cs_eval),
        &lm_config(config),
    )?;
    lap("lm", &mut timings);

    let summary = ToySummary {
        seed: config.seed,
        cycle_accuracy_pretrained: acc_pre,
        cycle_accuracy_cyclegan: acc_cyc,
        distance_mono: dist(&mono_train),
        distance_s2s: dist(&generated_s2s),
        distance_cyclegan: dist(&generated_cyclegan),
        discriminator_accuracy_tail: log.tail_disc_accuracy(0.1),
        ab,
    };
    Ok(ToyOutcome {
        data,
        mono_train,
        mono_heldout,
        cs_base,
        cs_train,
        cs_dev,
        cs_eval,
        pairs,
        pretrain_g,
        pretrain_f,
        pretrained,
        model,
        log,
        generated_s2s,
        generated_cyclegan,
        summary,
        timings,
    })
}

/// Runs [`run_toy`] and writes its data, models, logs and reports.
pub fn toy_experiment(config: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::start("toy-experiment", config)?;
    let o = run_toy(config)?;
    for (name, c) in [
        ("toy_mono.txt", &o.data.mono),
        ("toy_cs.txt", &o.data.cs),
        ("generated_s2s.txt", &o.generated_s2s),
        ("generated_cyclegan.txt", &o.generated_cyclegan),
        ("mono_train.txt", &o.mono_train),
        ("mono_heldout.txt", &o.mono_heldout),
        ("cs_base.txt", &o.cs_base),
        ("cs_train.txt", &o.cs_train),
        ("cs_dev.txt", &o.cs_dev),
        ("cs_eval.txt", &o.cs_eval),
    ] {
        run.write(name, c.to_text())?;
    }
    o.data.lexicon.save(run.output("toy_lexicon.tsv"))?;
    run.write("pairs.tsv", pairs_to_text(&o.pairs))?;
    run.write(
        "pretrain_losses.csv",
        epoch_csv(&[("G", &o.pretrain_g.epoch_losses), ("F", &o.pretrain_f.epoch_losses)]),
    )?;
    run.write("cyclegan_losses.csv", o.log.to_csv())?;
    o.pretrained.checkpoint().save(run.output("pretrained.ckpt.json"))?;
    o.model.checkpoint().save(run.output("cyclegan.ckpt.json"))?;

    let mut report = String::new();
    let mut json = serde_json::Map::new();
    for (name, c) in [
        ("mono", &o.mono_train),
        ("cs", &o.data.cs),
        ("s2s", &o.generated_s2s),
        ("cyclegan", &o.generated_cyclegan),
    ] {
        let (_, table, j) = cmi_text(c, Some(&o.data.cs));
        report.push_str(&format!("== {name}\n{table}\n"));
        json.insert(name.to_owned(), j);
    }
    run.write("cmi_report.txt", report)?;
    run.write_json("cmi_report.json", &json)?;
    run.write("ab_report.txt", o.summary.ab.to_table())?;
    run.write("ab_report.csv", o.summary.ab.to_csv())?;
    run.write_json("summary.json", &o.summary)?;
    for (stage, secs) in &o.timings {
        log::info!("{stage}: {secs:.1}s");
    }
    run.finish()
}

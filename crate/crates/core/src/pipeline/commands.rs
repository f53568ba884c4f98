use std::fmt::Write as _;

use super::{require, Manifest, PipelineConfig, Run};
use crate::cmi::{cmi, group, histogram, histogram_distance};
use crate::corpus::{load_corpus, Corpus, LanguageTag, TranslationLexicon};
use crate::cyclegan::{self, lambda_sweep, CycleGanModel, PretrainConfig, SweepConfig};
use crate::error::{Error, Result};
use crate::lm::{self, augmentation_experiment, perplexity, LanguageModel};
use crate::nn::Checkpoint;
use crate::seq2seq::{self, DecodeMode, Seq2SeqModel, TrainConfig};
use crate::synth::{load_pairs, make_pairs, pairs_to_text, SubstitutionPolicy};

fn load_input(run: &mut Run, path: &Option<std::path::PathBuf>, what: &str) -> Result<Corpus> {
    let path = require(path, what)?;
    run.input(path)?;
    load_corpus(path)
}

fn tag_letter(tag: LanguageTag) -> char {
    match tag {
        LanguageTag::LangA => 'A',
        LanguageTag::LangB => 'B',
        LanguageTag::NonVerbal => 'N',
    }
}

/// `paths.input` → `tokenized.txt` (normalized tokens) and `tags.txt`
/// (`surface/A|B|N` per token).
pub fn tokenize(config: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::start("tokenize", config)?;
    let corpus = load_input(&mut run, &config.paths.input, "input")?;
    let mut tags = String::new();
    for s in &corpus {
        let line: Vec<String> = s.tokens.iter().map(|t| format!("{}/{}", t.surface(), tag_letter(t.tag()))).collect();
        tags.push_str(&line.join(" "));
        tags.push('\n');
    }
    run.write("tokenized.txt", corpus.to_text())?;
    run.write("tags.txt", tags)?;
    run.finish()
}

/// Per-sentence scores and the group histogram of `corpus`, optionally
/// with its distance to a reference corpus.
pub fn cmi_text(corpus: &Corpus, reference: Option<&Corpus>) -> (String, String, serde_json::Value) {
    let mut rows = String::from("cmi\tgroup\tsentence\n");
    for s in corpus {
        let g = group(s).map(|g| g.to_string()).unwrap_or_else(|| "EMPTY".into());
        let _ = writeln!(rows, "{:.2}\t{}\t{}", cmi(s).value, g, s);
    }
    let h = histogram(corpus);
    let mut table = h.to_table("%");
    let _ = writeln!(table, "sentences {}", h.sentences);
    let mut json = serde_json::json!({ "histogram": h.to_json() });
    if let Some(r) = reference {
        let d = histogram_distance(&h, &histogram(r));
        let _ = writeln!(table, "distance to reference {d:.4}");
        json["distance_to_reference"] = serde_json::json!(d);
    }
    (rows, table, json)
}

/// `paths.input` (and optional reference `paths.cs`) → `cmi_report.txt`,
/// `cmi_report.json`, `cmi_sentences.tsv`.
pub fn cmi_report(config: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::start("cmi-report", config)?;
    let corpus = load_input(&mut run, &config.paths.input, "input")?;
    let reference = match config.paths.cs {
        Some(_) => Some(load_input(&mut run, &config.paths.cs, "cs")?),
        None => None,
    };
    let (rows, table, json) = cmi_text(&corpus, reference.as_ref());
    run.write("cmi_sentences.tsv", rows)?;
    run.write("cmi_report.txt", table)?;
    run.write_json("cmi_report.json", &json)?;
    run.finish()
}

pub(crate) fn policy(config: &PipelineConfig) -> SubstitutionPolicy {
    SubstitutionPolicy {
        rate: config.synth.rate,
        max_phrase_len: config.synth.max_phrase_len,
        seed: config.stage_seed("synth"),
    }
}

/// `paths.input` + `paths.lexicon` → `pairs.tsv`.
pub fn synth_pairs(config: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::start("synth-pairs", config)?;
    let lex_path = require(&config.paths.lexicon, "lexicon")?;
    let corpus = load_input(&mut run, &config.paths.input, "input")?;
    run.input(lex_path)?;
    let lexicon = TranslationLexicon::load(lex_path)?;
    let pairs = make_pairs(&corpus, &lexicon, &policy(config))?;
    run.write("pairs.tsv", pairs_to_text(&pairs))?;
    run.finish()
}

fn load_pair_file(run: &mut Run, config: &PipelineConfig) -> Result<Vec<(crate::corpus::Sentence, crate::corpus::Sentence)>> {
    let path = require(&config.paths.pairs, "pairs")?;
    run.input(path)?;
    let pairs = load_pairs(path)?;
    if pairs.is_empty() {
        return Err(Error::Data(format!("{}: no pairs", path.display())));
    }
    Ok(pairs)
}

pub(crate) fn epoch_csv(columns: &[(&str, &[f64])]) -> String {
    let mut out = String::from("epoch");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let n = columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    for i in 0..n {
        out.push_str(&(i + 1).to_string());
        for (_, v) in columns {
            out.push(',');
            if let Some(x) = v.get(i) {
                out.push_str(&x.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// `paths.pairs` → `s2s.ckpt.json`, `s2s_losses.csv`.
pub fn train_s2s(config: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::start("train-s2s", config)?;
    let pairs = load_pair_file(&mut run, config)?;
    let sides: Vec<Corpus> = [true, false]
        .iter()
        .map(|&first| Corpus::new("side", pairs.iter().map(|(a, b)| if first { a.clone() } else { b.clone() }).collect()))
        .collect();
    let vocab = crate::corpus::build_vocab(&[&sides[0], &sides[1]], 1)?;
    let mut model = Seq2SeqModel::new(vocab, config.seq2seq, config.stage_seed("init:s2s"))?;
    let train = TrainConfig {
        seed: config.stage_seed("batch-order:s2s"),
        ..config.pretrain
    };
    let report = seq2seq::train(&mut model, &pairs, &train)?;
    log::info!("final epoch loss {:?}", report.epoch_losses.last());
    model.checkpoint().save(run.output("s2s.ckpt.json"))?;
    run.write("s2s_losses.csv", epoch_csv(&[("loss", &report.epoch_losses)]))?;
    run.finish()
}

pub(crate) fn pretrain_config(config: &PipelineConfig) -> PretrainConfig {
    PretrainConfig {
        seq2seq: config.seq2seq,
        discriminator: config.discriminator,
        train: TrainConfig {
            seed: config.stage_seed("pretrain"),
            ..config.pretrain
        },
        lambdas: config.lambdas,
        settings: config.generator,
        seed: config.stage_seed("init"),
    }
}

pub(crate) fn cyclegan_config(config: &PipelineConfig) -> cyclegan::CycleGanTrainConfig {
    cyclegan::CycleGanTrainConfig {
        seed: config.stage_seed("cyclegan"),
        ..config.cyclegan.clone()
    }
}

pub(crate) fn decode_mode(config: &PipelineConfig) -> DecodeMode {
    match config.decode {
        DecodeMode::Greedy => DecodeMode::Greedy,
        DecodeMode::Sample { temperature, .. } => DecodeMode::Sample {
            temperature,
            seed: config.stage_seed("generate"),
        },
    }
}

fn load_cyclegan(run: &mut Run, config: &PipelineConfig) -> Result<CycleGanModel> {
    let path = require(&config.paths.model, "model")?;
    run.input(path)?;
    let mut model = CycleGanModel::from_checkpoint(&Checkpoint::load(path)?)?;
    model.lambdas = config.lambdas;
    model.settings = config.generator;
    Ok(model)
}

/// `paths.mono` (X) + `paths.cs` (Y) and either `paths.pairs` (pretrain
/// first) or `paths.model` (a CycleGAN checkpoint to continue from) →
/// `pretrained.ckpt.json` and `pretrain_losses.csv` when pretraining,
/// `cyclegan.ckpt.json`, `cyclegan_losses.csv`.
pub fn train_cyclegan(config: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::start("train-cyclegan", config)?;
    let mono = load_input(&mut run, &config.paths.mono, "mono")?;
    let cs = load_input(&mut run, &config.paths.cs, "cs")?;
    let mut model = if config.paths.model.is_some() {
        load_cyclegan(&mut run, config)?
    } else {
        let pairs = load_pair_file(&mut run, config)?;
        let (model, rg, rf) =
            cyclegan::pretrain(&pairs, &cyclegan::reverse_pairs(&pairs), &[&mono, &cs], &pretrain_config(config))?;
        model.checkpoint().save(run.output("pretrained.ckpt.json"))?;
        run.write("pretrain_losses.csv", epoch_csv(&[("G", &rg.epoch_losses), ("F", &rf.epoch_losses)]))?;
        model
    };
    let mut cfg = cyclegan_config(config);
    if cfg.checkpoint_every.is_some() && cfg.checkpoint_dir.is_none() {
        cfg.checkpoint_dir = Some(config.out_dir().join("checkpoints"));
    }
    let log = cyclegan::train(&mut model, &mono, &cs, &cfg)?;
    model.checkpoint().save(run.output("cyclegan.ckpt.json"))?;
    run.write("cyclegan_losses.csv", log.to_csv())?;
    run.finish()
}

/// `paths.model` (seq2seq or CycleGAN checkpoint) + `paths.input` →
/// `generated.txt`.
pub fn generate(config: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::start("generate", config)?;
    let model_path = require(&config.paths.model, "model")?;
    let corpus = load_input(&mut run, &config.paths.input, "input")?;
    run.input(model_path)?;
    let ck = Checkpoint::load(model_path)?;
    let mode = decode_mode(config);
    let out = match ck.kind.as_str() {
        "seq2seq" => Seq2SeqModel::from_checkpoint(&ck)?.translate(&corpus, mode, 64, "generated")?,
        "cyclegan" => cyclegan::generate(&CycleGanModel::from_checkpoint(&ck)?, &corpus, mode)?,
        other => {
            return Err(Error::Data(format!(
                "{}: cannot generate from a {other:?} checkpoint",
                model_path.display()
            )))
        }
    };
    run.write("generated.txt", out.to_text())?;
    run.finish()
}

pub(crate) fn lm_config(config: &PipelineConfig) -> lm::LmConfig {
    lm::LmConfig {
        seed: config.stage_seed("lm"),
        ..config.lm
    }
}

/// `paths.input` (and optional `paths.dev`) → `lm.ckpt.json`,
/// `lm_losses.csv`, and `ppl.json` when a dev set is given.
pub fn train_lm(config: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::start("train-lm", config)?;
    let corpus = load_input(&mut run, &config.paths.input, "input")?;
    let dev = match config.paths.dev {
        Some(_) => Some(load_input(&mut run, &config.paths.dev, "dev")?),
        None => None,
    };
    let mut corpora = vec![&corpus];
    corpora.extend(dev.as_ref());
    let vocab = lm::lm_vocab(&corpora, config.lm.unit)?;
    let (model, report) = lm::train_lm(&corpus, Some(vocab), &lm_config(config))?;
    model.checkpoint().save(run.output("lm.ckpt.json"))?;
    run.write("lm_losses.csv", epoch_csv(&[("loss", &report.epoch_losses)]))?;
    if let Some(dev) = dev {
        run.write_json("ppl.json", &perplexity(&model, &dev)?)?;
    }
    run.finish()
}

/// `paths.model` (LM checkpoint) + `paths.input` → `ppl.json`, `ppl.txt`.
pub fn eval_ppl(config: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::start("eval-ppl", config)?;
    let model_path = require(&config.paths.model, "model")?;
    let corpus = load_input(&mut run, &config.paths.input, "input")?;
    run.input(model_path)?;
    let model = LanguageModel::from_checkpoint(&Checkpoint::load(model_path)?)?;
    let report = perplexity(&model, &corpus)?;
    run.write(
        "ppl.txt",
        format!("corpus {}\ntokens {}\nmean_nll {:.6}\nppl {:.4}\n", report.corpus, report.tokens, report.mean_nll, report.ppl),
    )?;
    run.write_json("ppl.json", &report)?;
    run.finish()
}

/// `paths.base`, `paths.dev`, optional `paths.eval`, and `paths.generated`
/// (name → file) → `ab_report.txt`, `ab_report.csv`, `ab_report.json`.
pub fn ab_experiment(config: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::start("ab-experiment", config)?;
    let base = load_input(&mut run, &config.paths.base, "base")?;
    let dev = load_input(&mut run, &config.paths.dev, "dev")?;
    let eval = match config.paths.eval {
        Some(_) => Some(load_input(&mut run, &config.paths.eval, "eval")?),
        None => None,
    };
    let mut generated = Vec::new();
    for (name, path) in &config.paths.generated {
        generated.push((name.as_str(), load_input(&mut run, &Some(path.clone()), name)?));
    }
    let arms: Vec<(&str, &Corpus)> = generated.iter().map(|(n, c)| (*n, c)).collect();
    let report = augmentation_experiment(&base, &arms, &dev, eval.as_ref(), &lm_config(config))?;
    run.write("ab_report.txt", report.to_table())?;
    run.write("ab_report.csv", report.to_csv())?;
    run.write_json("ab_report.json", &report)?;
    run.finish()
}

/// `paths.model` (pretrained CycleGAN checkpoint), `paths.mono`,
/// `paths.cs`, `paths.base`, `paths.dev`, optional `paths.source`
/// (defaults to `mono`) → `sweep_table.txt`, `sweep_table.csv`.
pub fn sweep_lambda(config: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::start("sweep-lambda", config)?;
    let model = load_cyclegan(&mut run, config)?;
    let mono = load_input(&mut run, &config.paths.mono, "mono")?;
    let cs = load_input(&mut run, &config.paths.cs, "cs")?;
    let base = load_input(&mut run, &config.paths.base, "base")?;
    let dev = load_input(&mut run, &config.paths.dev, "dev")?;
    let source = match config.paths.source {
        Some(_) => load_input(&mut run, &config.paths.source, "source")?,
        None => mono.clone(),
    };
    let sweep = SweepConfig {
        lambda1: config.sweep.lambda1.clone(),
        lambda2: config.sweep.lambda2.clone(),
        train: cyclegan_config(config),
        lm: lm_config(config),
        decode: decode_mode(config),
        jobs: config.jobs,
    };
    let table = lambda_sweep(&model, &mono, &cs, &source, &base, &dev, &sweep)?;
    run.write("sweep_table.txt", table.to_table())?;
    run.write("sweep_table.csv", table.to_csv())?;
    run.finish()
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use codeswitch::pipeline::{self, PipelineConfig};
use codeswitch::seq2seq::DecodeMode;
use codeswitch::Result;

/// Code-switching text generation toolkit.
///
/// Exit status: 0 success, 1 usage or configuration error, 2 data error,
/// 3 numeric failure.
#[derive(Parser)]
#[command(name = "cstool", version)]
struct Cli {
    /// JSON configuration file or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed of every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the lambda sweep.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize and tag a corpus.
    Tokenize(Overrides),
    /// CMI histogram of a corpus.
    CmiReport(Overrides),
    /// Lexicon-substituted training pairs.
    SynthPairs(Overrides),
    /// Train a seq2seq generator on pairs.
    TrainS2s(Overrides),
    /// Pretrain and train a CycleGAN.
    TrainCyclegan(Overrides),
    /// Run a trained generator over a corpus.
    Generate(Overrides),
    /// Train a language model.
    TrainLm(Overrides),
    /// Perplexity of a trained language model.
    EvalPpl(Overrides),
    /// Baseline vs. augmented language models.
    AbExperiment(Overrides),
    /// Grid over the two cycle-loss weights.
    SweepLambda(Overrides),
    /// The whole pipeline on synthetic languages.
    ToyExperiment(Overrides),
}

/// Per-command settings; each wins over the configuration file.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    mono: Option<PathBuf>,
    #[arg(long)]
    cs: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    base: Option<PathBuf>,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    eval: Option<PathBuf>,
    #[arg(long)]
    source: Option<PathBuf>,
    /// Generated corpus for the A/B experiment, as NAME=PATH; repeatable.
    #[arg(long, value_parser = parse_named)]
    generated: Vec<(String, PathBuf)>,
    /// Substitution rate.
    #[arg(long)]
    rate: Option<f64>,
    /// Pretraining, seq2seq or LM epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// CycleGAN generator steps.
    #[arg(long)]
    steps: Option<usize>,
    /// One value, or a comma-separated grid for sweep-lambda.
    #[arg(long, value_delimiter = ',')]
    lambda1: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    lambda2: Vec<f64>,
    /// Sample instead of greedy decoding, at this temperature.
    #[arg(long)]
    sample: Option<f64>,
}

fn parse_named(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or("expected NAME=PATH")?;
    Ok((name.to_owned(), PathBuf::from(path)))
}

fn apply(cli: &Cli, o: &Overrides, sweep: bool, mut c: PipelineConfig) -> PipelineConfig {
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if cli.out.is_some() {
        c.out = cli.out.clone();
    }
    if let Some(j) = cli.jobs {
        c.jobs = j;
    }
    let p = &mut c.paths;
    for (slot, value) in [
        (&mut p.input, &o.input),
        (&mut p.lexicon, &o.lexicon),
        (&mut p.pairs, &o.pairs),
        (&mut p.mono, &o.mono),
        (&mut p.cs, &o.cs),
        (&mut p.model, &o.model),
        (&mut p.base, &o.base),
        (&mut p.dev, &o.dev),
        (&mut p.eval, &o.eval),
        (&mut p.source, &o.source),
    ] {
        if value.is_some() {
            slot.clone_from(value);
        }
    }
    p.generated.extend(o.generated.iter().cloned());
    if let Some(r) = o.rate {
        c.synth.rate = r;
    }
    if let Some(e) = o.epochs {
        c.pretrain.epochs = e;
        c.lm.epochs = e;
    }
    if let Some(s) = o.steps {
        c.cyclegan.steps = s;
    }
    if sweep {
        if !o.lambda1.is_empty() {
            c.sweep.lambda1.clone_from(&o.lambda1);
        }
        if !o.lambda2.is_empty() {
            c.sweep.lambda2.clone_from(&o.lambda2);
        }
    } else {
        if let Some(&l) = o.lambda1.last() {
            c.lambdas.lambda1 = l;
        }
        if let Some(&l) = o.lambda2.last() {
            c.lambdas.lambda2 = l;
        }
    }
    if let Some(temperature) = o.sample {
        c.decode = DecodeMode::Sample { temperature, seed: 0 };
    }
    c
}

fn run(cli: &Cli) -> Result<()> {
    let base = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    use Command::*;
    let (o, f): (&Overrides, fn(&PipelineConfig) -> Result<pipeline::Manifest>) = match &cli.command {
        Tokenize(o) => (o, pipeline::tokenize),
        CmiReport(o) => (o, pipeline::cmi_report),
        SynthPairs(o) => (o, pipeline::synth_pairs),
        TrainS2s(o) => (o, pipeline::train_s2s),
        TrainCyclegan(o) => (o, pipeline::train_cyclegan),
        Generate(o) => (o, pipeline::generate),
        TrainLm(o) => (o, pipeline::train_lm),
        EvalPpl(o) => (o, pipeline::eval_ppl),
        AbExperiment(o) => (o, pipeline::ab_experiment),
        SweepLambda(o) => (o, pipeline::sweep_lambda),
        ToyExperiment(o) => (o, pipeline::toy_experiment),
    };
    let config = apply(cli, o, matches!(cli.command, SweepLambda(_)), base);
    let manifest = f(&config)?;
    log::info!("wrote {} files to {}", manifest.outputs.len(), config.out_dir().display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

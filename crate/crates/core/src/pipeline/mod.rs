//! Reproducible end-to-end runs behind the `cstool` commands.
//!
//! A run is described by one [`PipelineConfig`] (a JSON file, overridden
//! field by field from the command line) and a root seed. Every stage takes
//! its seed from a named substream of the root seed. Every command writes
//! its outputs under one directory with fixed file names, next to a
//! `manifest.json` that records the effective configuration, the seed, the
//! tool version and a hash of every input file. A manifest can be passed
//! back as `--config` to repeat a run.

mod commands;
mod toy;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cyclegan::{CycleGanTrainConfig, DiscriminatorConfig, GeneratorSettings, Lambdas};
use crate::error::{Error, Result};
use crate::lm::LmConfig;
use crate::seq2seq::{DecodeMode, Seq2SeqConfig, TrainConfig};

pub use commands::{
    ab_experiment, cmi_report, eval_ppl, generate, sweep_lambda, synth_pairs, tokenize, train_cyclegan, train_lm,
    train_s2s,
};
pub use toy::{run_toy, toy_experiment, ToyOutcome};

pub const MANIFEST: &str = "manifest.json";

/// Input files. Which ones a command needs is listed in its documentation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub input: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    /// Monolingual (X) training text.
    pub mono: Option<PathBuf>,
    /// Code-switched (Y) training text.
    pub cs: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub base: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub eval: Option<PathBuf>,
    /// Text to run the generator over.
    pub source: Option<PathBuf>,
    /// Named generated corpora for the augmentation experiment.
    pub generated: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub rate: f64,
    pub max_phrase_len: usize,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            rate: 0.25,
            max_phrase_len: 1,
        }
    }
}

/// Sizes of the synthetic language pair and its splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToySettings {
    pub vocab_size: usize,
    pub sentence_len: (usize, usize),
    pub branching: usize,
    pub cs_rate: (f64, f64),
    /// Monolingual training sentences (the unpaired X side).
    pub mono_train: usize,
    /// Leading training sentences turned into lexicon-substituted pairs for
    /// pretraining.
    pub pair_sentences: usize,
    /// Held-out monolingual sentences for reconstruction accuracy.
    pub mono_heldout: usize,
    /// Code-switched sentences used as the LM base set.
    pub cs_base: usize,
    /// Code-switched sentences seen by `D_Y` (includes the base set).
    pub cs_train: usize,
    pub cs_dev: usize,
    pub cs_eval: usize,
}

impl Default for ToySettings {
    fn default() -> Self {
        ToySettings {
            vocab_size: 60,
            sentence_len: (4, 8),
            branching: 3,
            cs_rate: (0.15, 0.35),
            mono_train: 3000,
            pair_sentences: 500,
            mono_heldout: 200,
            cs_base: 200,
            cs_train: 800,
            cs_dev: 100,
            cs_eval: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            lambda1: crate::cyclegan::DEFAULT_LAMBDA1_GRID.to_vec(),
            lambda2: crate::cyclegan::DEFAULT_LAMBDA2_GRID.to_vec(),
        }
    }
}

/// Everything a command needs besides its inputs. The `seed` fields of
/// the nested training configurations are ignored: each stage gets a seed
/// derived from the root `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Output directory; not recorded in manifests.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub paths: Paths,
    pub synth: SynthSettings,
    pub seq2seq: Seq2SeqConfig,
    pub pretrain: TrainConfig,
    pub discriminator: DiscriminatorConfig,
    pub generator: GeneratorSettings,
    pub lambdas: Lambdas,
    pub cyclegan: CycleGanTrainConfig,
    pub lm: LmConfig,
    pub decode: DecodeMode,
    pub toy: ToySettings,
    pub sweep: SweepGrid,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out: None,
            jobs: 1,
            paths: Paths::default(),
            synth: SynthSettings::default(),
            seq2seq: Seq2SeqConfig {
                embed: 32,
                hidden: 32,
                layers: 1,
            },
            pretrain: TrainConfig::default(),
            discriminator: DiscriminatorConfig { embed: 16, hidden: 16 },
            generator: GeneratorSettings::default(),
            lambdas: Lambdas::default(),
            cyclegan: CycleGanTrainConfig::default(),
            lm: LmConfig::default(),
            decode: DecodeMode::Greedy,
            toy: ToySettings::default(),
            sweep: SweepGrid::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads a configuration file, or the configuration stored in a
    /// manifest.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if value.get("command").is_some() {
            if let Some(config) = value.get_mut("config") {
                value = config.take();
            }
        }
        serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn stage_seed(&self, stage: &str) -> u64 {
        crate::rng::derive_seed(self.seed, stage)
    }

    pub fn validate(&self) -> Result<()> {
        self.lambdas.validate()?;
        if !(0.0..=1.0).contains(&self.synth.rate) {
            return Err(Error::Config(format!("synth.rate must lie in [0, 1], got {}", self.synth.rate)));
        }
        if self.generator.temperature <= 0.0 {
            return Err(Error::Config("generator.temperature must be positive".into()));
        }
        Ok(())
    }
}

/// Returns the path or a data error naming the missing setting.
pub(crate) fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    let path = path
        .as_deref()
        .ok_or_else(|| Error::Config(format!("no {what} given (set paths.{what} or pass --{what})")))?;
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, format!("{what} file not found")),
        ));
    }
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub bytes: u64,
    /// FNV-1a of the file contents, hex.
    pub fnv1a: String,
}

impl InputRecord {
    pub fn of(path: &Path) -> Result<Self> {
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(InputRecord {
            path: path.to_path_buf(),
            bytes: data.len() as u64,
            fnv1a: format!("{:016x}", crate::rng::fnv1a(&data)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub checkpoint_format: String,
    pub checkpoint_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
}

/// Collects the files a command writes and finishes with its manifest.
pub(crate) struct Run<'a> {
    command: &'static str,
    config: &'a PipelineConfig,
    dir: PathBuf,
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
}

impl<'a> Run<'a> {
    pub fn start(command: &'static str, config: &'a PipelineConfig) -> Result<Self> {
        config.validate()?;
        let dir = config.out_dir();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        log::info!("{command}: writing to {}", dir.display());
        Ok(Run {
            command,
            config,
            dir,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputRecord::of(path)?);
        Ok(())
    }

    /// Full path for output `name`, recorded in the manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_owned());
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.output(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(mut self) -> Result<Manifest> {
        self.outputs.sort();
        let manifest = Manifest {
            tool: "cstool".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            checkpoint_format: crate::nn::CHECKPOINT_FORMAT.into(),
            checkpoint_version: crate::nn::CHECKPOINT_VERSION,
            command: self.command.into(),
            seed: self.config.seed,
            config: self.config.clone(),
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let path = self.dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let cfg = PipelineConfig {
            seed: 9,
            ..PipelineConfig::default()
        };
        fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(PipelineConfig::load(&path).unwrap(), cfg);

        fs::write(&path, r#"{"seed": 3, "lambdas": {"lambda1": 0.1, "lambda2": 0.2}}"#).unwrap();
        let partial = PipelineConfig::load(&path).unwrap();
        assert_eq!(partial.seed, 3);
        assert_eq!(partial.lambdas.lambda2, 0.2);
        assert_eq!(partial.lm, LmConfig::default());

        fs::write(&path, r#"{"sed": 3}"#).unwrap();
        assert!(matches!(PipelineConfig::load(&path), Err(Error::Config(_))));
    }

    #[test]
    fn manifest_reloads_as_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            seed: 4,
            out: Some(dir.path().to_path_buf()),
            ..PipelineConfig::default()
        };
        let mut run = Run::start("noop", &cfg).unwrap();
        run.write("a.txt", "x").unwrap();
        let m = run.finish().unwrap();
        assert_eq!(m.outputs, vec!["a.txt".to_string()]);
        let back = PipelineConfig::load(dir.path().join(MANIFEST)).unwrap();
        assert_eq!(back, PipelineConfig { out: None, ..cfg });
    }

    #[test]
    fn missing_inputs_name_the_path() {
        let err = require(&Some(PathBuf::from("/nonexistent/lex.tsv")), "lexicon").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/lex.tsv"));
        assert_eq!(require(&None, "lexicon").unwrap_err().exit_code(), 1);
    }
}

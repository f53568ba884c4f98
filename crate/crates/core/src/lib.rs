//! Artificial code-switching (CS) text generation.
//!
//! The toolkit turns monolingual text into code-switched text in two ways:
//! a supervised encoder-decoder trained on lexicon-substituted pairs
//! ([`seq2seq`]), and a cycle-consistent adversarial model built from two
//! such generators and two recurrent discriminators ([`cyclegan`]).
//! Generated text is evaluated with the Code-Mixing Index ([`cmi`]) and by
//! the perplexity of recurrent language models trained with and without it
//! ([`lm`]).
//!
//! Everything numeric runs on a small reverse-mode differentiation core in
//! [`nn`], in 64-bit floats, on the CPU.

pub mod cmi;
pub mod corpus;
pub mod cyclegan;
pub mod error;
pub mod lm;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod seq2seq;
pub mod synth;

pub use error::{Error, Result};

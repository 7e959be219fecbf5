//! Generation of *so...that* hyperboles from literal prompts.
//!
//! A prompt such as "the party is lit" is parsed into subject and headword,
//! commonsense models propose clause subjects (B) and predicates (C), the
//! candidates are assembled into sentences, scored by a sentence-level
//! classifier (`p_g`) and a feature-level classifier (`p_s`), and ranked.

pub mod adapter;
pub mod candidate_generator;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod kb_data;
pub mod knowledge_engine;
pub mod paraphrase;
pub mod pipeline;
pub mod prompt_parser;
pub mod rankers;
pub mod text;

pub use error::{Error, Result};
pub use exec::Execution;
pub use pipeline::{run_pipeline, Pipeline, PipelineConfig, PipelineRecord};

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use serde_json::Value;

use hypogen::candidate_generator::{GecMode, Template};
use hypogen::error::{Error, Result};
use hypogen::evaluation::{self, Embedder, HashedEmbedder, LanguageModel, TableEmbedder, UniformLm};
use hypogen::exec::Execution;
use hypogen::kb_data::{self, KnowledgeTriple, SplitSet};
use hypogen::knowledge_engine::{UnigramModel, DEFAULT_OOV_PROB};
use hypogen::pipeline::{self, Pipeline, PipelineConfig};
use hypogen::prompt_parser;
use hypogen::rankers::{self, GenericConfig, Model, RankMode, SpecificConfig, SpecificExample};

#[derive(Parser)]
#[command(name = "hypogen", version, about = "Generate and rank so...that hyperboles")]
struct Cli {
    /// Run batch work on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the knowledge triples, unigram table and classifier splits.
    Ingest {
        #[arg(long)]
        conceptnet: PathBuf,
        #[arg(long)]
        similes: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the partition of a so...that sentence, or the parse of a prompt.
    Parse {
        #[arg(long)]
        sentence: String,
    },
    /// Train a classifier.
    TrainClf {
        kind: ClfKind,
        /// Directory written by `ingest`, or one holding train/dev/test JSONL.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pipeline config providing backends (specific, when featurizing).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Generic model used for p_g when featurizing.
        #[arg(long)]
        generic_model: Option<PathBuf>,
    },
    /// Generate ranked hyperboles for one or more prompts (JSON lines).
    Generate {
        #[arg(long, required = true)]
        prompt: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        beam_width: Option<usize>,
        #[arg(long, value_enum)]
        template: Option<Template>,
        #[arg(long, value_enum)]
        gec: Option<GecMode>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        rank_by: Option<RankMode>,
        #[arg(long)]
        paraphrase: bool,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score sentences (generic model) or feature rows (specific model).
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Automatic metrics and annotation agreement.
    Evaluate {
        /// JSON lines with a `sentence` or `text` field.
        #[arg(long)]
        candidates: PathBuf,
        /// One reference per line, aligned with the candidates.
        #[arg(long)]
        references: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// `token v1 v2 ...` embedding file; hashed embeddings when absent.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Unigram table used as the language model; uniform when absent.
        #[arg(long)]
        lm: Option<PathBuf>,
        /// JSON lines, each an array of binary labels for one item.
        #[arg(long)]
        binary_labels: Option<PathBuf>,
        /// JSON lines, each an array of ratings for one item.
        #[arg(long)]
        ratings: Option<PathBuf>,
    },
    /// Write shuffled, system-blind annotation sheets.
    ExportHumanEval {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ClfKind {
    Generic,
    Specific,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match run(cli.command, exec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command, exec: Execution) -> Result<()> {
    match command {
        Command::Ingest { conceptnet, similes, corpus, out, seed } => {
            ingest(&conceptnet, similes.as_deref(), corpus.as_deref(), &out, seed).map_err(|e| e.in_stage("kb_data"))
        }
        Command::Parse { sentence } => parse(&sentence).map_err(|e| e.in_stage("prompt_parser")),
        Command::TrainClf { kind, data, out, seed, config, generic_model } => match kind {
            ClfKind::Generic => train_generic(&data, &out, seed),
            ClfKind::Specific => train_specific(&data, &out, seed, config.as_deref(), generic_model.as_deref(), exec),
        }
        .map_err(|e| e.in_stage("rankers")),
        Command::Generate { prompt, config, beam_width, template, gec, top_k, seed, rank_by, paraphrase, out } => {
            let mut cfg = match &config {
                Some(p) => PipelineConfig::from_file(p),
                None => Ok(PipelineConfig::default()),
            }
            .and_then(|mut c| c.apply_env(pipeline::env_overrides()).map(|_| c))
            .map_err(|e| e.in_stage("cli"))?;
            cfg.beam_width = beam_width.unwrap_or(cfg.beam_width);
            cfg.template = template.unwrap_or(cfg.template);
            cfg.gec = gec.unwrap_or(cfg.gec);
            cfg.top_k = top_k.unwrap_or(cfg.top_k);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.rank_by = rank_by.or(cfg.rank_by);
            cfg.paraphrase |= paraphrase;
            if exec == Execution::Sequential {
                cfg.execution = exec;
            }
            generate(cfg, &prompt, out.as_deref())
        }
        Command::Score { model, input, out } => score(&model, &input, out.as_deref(), exec).map_err(|e| e.in_stage("rankers")),
        Command::Evaluate { candidates, references, report, embeddings, lm, binary_labels, ratings } => evaluate(
            &candidates,
            &references,
            &report,
            embeddings.as_deref(),
            lm.as_deref(),
            binary_labels.as_deref(),
            ratings.as_deref(),
            exec,
        )
        .map_err(|e| e.in_stage("evaluation")),
        Command::ExportHumanEval { input, out, seed } => export(&input, &out, seed).map_err(|e| e.in_stage("evaluation")),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })
}

/// Writes JSON lines to a file or to standard output.
fn emit_jsonl<T: Serialize>(out: Option<&Path>, records: &[T]) -> Result<()> {
    match out {
        Some(path) => kb_data::write_jsonl(path, records),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            for r in records {
                serde_json::to_writer(&mut lock, r)?;
                writeln!(lock).map_err(|e| Error::Io { path: "<stdout>".into(), source: e })?;
            }
            Ok(())
        }
    }
}

fn ingest(conceptnet: &Path, similes: Option<&Path>, corpus: Option<&Path>, out: &Path, seed: u64) -> Result<()> {
    create_dir(out)?;
    let base = kb_data::ingest_conceptnet_triples(conceptnet)?;
    info!(
        "{} triples kept, {} with other relations, {} malformed",
        base.triples.len(),
        base.dropped_relation,
        base.malformed
    );
    let (simile_triples, rejected) = match similes {
        Some(p) => kb_data::ingest_similes(p)?,
        None => (Vec::new(), 0),
    };
    let augmented = kb_data::augment_training_set(&base.triples, &simile_triples);
    kb_data::write_triples(&out.join("triples.tsv"), &augmented.triples)?;
    let unigrams = UnigramModel::from_phrases(
        augmented.triples.iter().flat_map(|t: &KnowledgeTriple| [t.head.as_str(), t.tail.as_str()]),
        DEFAULT_OOV_PROB,
    )?;
    unigrams.write_tsv(&out.join("unigrams.tsv"))?;

    let mut report = serde_json::json!({
        "triples": augmented.triples.len(),
        "from_base": augmented.from_base,
        "from_similes": augmented.from_similes,
        "duplicates_removed": augmented.duplicates_removed,
        "dropped_relation": base.dropped_relation,
        "malformed": base.malformed,
        "similes_rejected": rejected,
    });
    if let Some(corpus) = corpus {
        let records = kb_data::read_corpus(corpus)?;
        let pools = kb_data::split_balanced(&records, seed)?;
        for (name, set) in [("generic", &pools.generic), ("specific", &pools.specific)] {
            write_splits(&out.join(name), set)?;
            let (h, l) = SplitSet::label_counts(&set.train);
            report[name] = serde_json::json!({
                "train": set.train.len(), "dev": set.dev.len(), "test": set.test.len(),
                "train_hyperbole": h, "train_literal": l,
            });
        }
    }
    write_json(&out.join("ingest_report.json"), &report)
}

fn write_splits(dir: &Path, set: &SplitSet) -> Result<()> {
    create_dir(dir)?;
    kb_data::write_jsonl(&dir.join("train.jsonl"), &set.train)?;
    kb_data::write_jsonl(&dir.join("dev.jsonl"), &set.dev)?;
    kb_data::write_jsonl(&dir.join("test.jsonl"), &set.test)
}

/// Reads `train/dev/test.jsonl` from `dir/<pool>` when present, else from `dir`.
fn read_splits(dir: &Path, pool: &str) -> Result<SplitSet> {
    let base = if dir.join(pool).is_dir() { dir.join(pool) } else { dir.to_path_buf() };
    let read = |name: &str| {
        let path = base.join(name);
        if path.exists() {
            kb_data::read_corpus(&path)
        } else {
            Ok(Vec::new())
        }
    };
    Ok(SplitSet {
        train: read("train.jsonl")?,
        dev: read("dev.jsonl")?,
        test: read("test.jsonl")?,
    })
}

fn parse(sentence: &str) -> Result<()> {
    let value = if prompt_parser::is_so_that(sentence) {
        serde_json::to_value(prompt_parser::partition_so_that(sentence)?)?
    } else {
        serde_json::to_value(prompt_parser::parse_prompt(sentence)?)?
    };
    println!("{}", serde_json::to_string(&value)?);
    Ok(())
}

fn train_generic(data: &Path, out: &Path, seed: u64) -> Result<()> {
    let splits = read_splits(data, "generic")?;
    let config = GenericConfig { seed, ..GenericConfig::default() };
    let (clf, report) = rankers::train_generic(&splits, &config)?;
    let test = if splits.test.is_empty() {
        None
    } else {
        Some(rankers::evaluate_generic(&clf, &splits.test)?)
    };
    rankers::save_model(out, &Model::Generic(clf), &config)?;
    write_json(&out.join("report.json"), &serde_json::json!({ "train": report, "test": test }))
}

fn train_specific(
    data: &Path,
    out: &Path,
    seed: u64,
    config: Option<&Path>,
    generic_model: Option<&Path>,
    exec: Execution,
) -> Result<()> {
    let features = data.join("features.jsonl");
    let examples: Vec<SpecificExample> = if features.exists() {
        kb_data::read_jsonl(&features)?
    } else {
        let config = config.ok_or_else(|| {
            Error::Argument(format!(
                "{} has no features.jsonl; pass --config with backends to featurize sentences",
                data.display()
            ))
        })?;
        let mut pipeline_config = PipelineConfig::from_file(config)?;
        pipeline_config.paths.generic_model = generic_model.map(Path::to_path_buf).or(pipeline_config.paths.generic_model);
        pipeline_config.paths.specific_model = None;
        pipeline_config.rank_by = Some(RankMode::PG);
        pipeline_config.paraphrase = false;
        let pipeline = Pipeline::load(pipeline_config)?;
        let splits = read_splits(data, "specific")?;
        let records: Vec<_> = splits.train.iter().chain(&splits.dev).chain(&splits.test).cloned().collect();
        pipeline::featurize_specific(&records, &pipeline.generic, &pipeline.backends, exec)?
    };
    let config = SpecificConfig { seed, ..SpecificConfig::default() };
    let (clf, report) = rankers::train_specific(&examples, &config)?;
    rankers::save_model(out, &Model::Specific(clf), &config)?;
    write_json(&out.join("report.json"), &report)
}

fn generate(config: PipelineConfig, prompts: &[String], out: Option<&Path>) -> Result<()> {
    let pipeline = Pipeline::load(config).map_err(|e| e.in_stage("cli"))?;
    let mut records = Vec::new();
    for prompt in prompts {
        records.extend(pipeline.run(prompt)?);
    }
    emit_jsonl(out, &records).map_err(|e| e.in_stage("cli"))
}

fn text_field(value: &Value) -> Result<String> {
    value
        .get("sentence")
        .or_else(|| value.get("text"))
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| Error::Argument(format!("record has no sentence or text field: {value}")))
}

fn score(model: &Path, input: &Path, out: Option<&Path>, exec: Execution) -> Result<()> {
    let records: Vec<Value> = kb_data::read_jsonl(input)?;
    let (_, model) = rankers::load_model(model)?;
    let scored: Vec<Value> = match model {
        Model::Generic(clf) => {
            let sentences = records.iter().map(text_field).collect::<Result<Vec<_>>>()?;
            let probs = rankers::score_generic_batch(&clf, &sentences, exec)?;
            sentences
                .into_iter()
                .zip(probs)
                .map(|(sentence, p_g)| serde_json::json!({ "sentence": sentence, "p_g": p_g }))
                .collect()
        }
        Model::Specific(clf) => records
            .iter()
            .map(|r| {
                let features: Vec<f64> = serde_json::from_value(r.get("features").cloned().unwrap_or(Value::Null))
                    .map_err(|_| Error::Argument(format!("record has no numeric features array: {r}")))?;
                let p_s = rankers::score_specific(&clf, &features)?;
                Ok(serde_json::json!({ "features": features, "p_s": p_s }))
            })
            .collect::<Result<_>>()?,
    };
    emit_jsonl(out, &scored)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.into(), source: e })?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    candidates: &Path,
    references: &Path,
    report: &Path,
    embeddings: Option<&Path>,
    lm: Option<&Path>,
    binary_labels: Option<&Path>,
    ratings: Option<&Path>,
    exec: Execution,
) -> Result<()> {
    let candidates = kb_data::read_jsonl::<Value>(candidates)?
        .iter()
        .map(text_field)
        .collect::<Result<Vec<_>>>()?;
    let references = read_lines(references)?;
    let embedder: Box<dyn Embedder> = match embeddings {
        Some(p) => Box::new(TableEmbedder::from_text_file(p)?),
        None => Box::new(HashedEmbedder::default()),
    };
    let lm: Box<dyn LanguageModel> = match lm {
        Some(p) => Box::new(UnigramModel::from_tsv(p)?),
        None => Box::new(UniformLm { vocab_size: 30_000 }),
    };
    let metrics = evaluation::evaluate_outputs(&candidates, &references, embedder.as_ref(), lm.as_ref(), exec)?;
    let mut value = serde_json::to_value(&metrics)?;
    if let Some(p) = binary_labels {
        value["wawa"] = evaluation::wawa_agreement(&kb_data::read_jsonl::<Vec<bool>>(p)?)?.into();
    }
    if let Some(p) = ratings {
        value["spearman"] = evaluation::spearman_iaa(&kb_data::read_jsonl::<Vec<f64>>(p)?)?.into();
    }
    write_json(report, &value)
}

fn export(input: &Path, out: &Path, seed: u64) -> Result<()> {
    let sentences = kb_data::read_jsonl::<Value>(input)?
        .iter()
        .map(text_field)
        .collect::<Result<Vec<_>>>()?;
    let key = evaluation::export_human_eval(&sentences, out, seed)?;
    write_json(&out.with_extension("key.json"), &key)
}

//! End-to-end configuration and the generate-and-rank pipeline.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::adapter::JsonProcess;
use crate::candidate_generator::{self, GecMode, GenerationConfig, ScoredHyperbole, Template};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::kb_data::{KeywordConfig, LabeledSentence, Relation};
use crate::knowledge_engine::{self, Backends, Direction, KnowledgeBackend, ProcessBackend, TableBackend, UnigramModel};
use crate::paraphrase::{self, ParaphraseRequest};
use crate::prompt_parser::{self, PatternPartition};
use crate::rankers::{self, GenericClassifier, Model, RankMode, SpecificClassifier, SpecificExample};

/// Where a knowledge backend comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    /// A [`TableBackend`] JSON file.
    Table { path: PathBuf },
    /// An external process speaking the JSON-lines protocol.
    Process {
        program: String,
        #[serde(default)]
        args: Vec<String>,
    },
}

impl BackendSpec {
    fn load(&self, base: &Path) -> Result<Arc<dyn KnowledgeBackend>> {
        Ok(match self {
            BackendSpec::Table { path } => Arc::new(TableBackend::from_json_file(&base.join(path))?),
            BackendSpec::Process { program, args } => Arc::new(ProcessBackend {
                process: JsonProcess::new(program.clone(), args.clone()),
            }),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendsConfig {
    pub forward: Option<BackendSpec>,
    /// Defaults to the forward backend.
    pub reverse: Option<BackendSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Unigram table for rescoring; without it no rescoring happens.
    pub unigrams: Option<PathBuf>,
    pub generic_model: Option<PathBuf>,
    pub specific_model: Option<PathBuf>,
    /// One keyword per line; replaces the generic model's stored list.
    pub keywords: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptersConfig {
    pub grammar: Option<JsonProcess>,
    pub paraphrase: Option<JsonProcess>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub beam_width: usize,
    pub top_k: usize,
    pub template: Template,
    pub gec: GecMode,
    /// Defaults to `p_s` when a specific model is configured, `p_g` otherwise.
    pub rank_by: Option<RankMode>,
    pub rescore_reverse: bool,
    pub rescore_forward: bool,
    pub rescore_oversample: usize,
    pub execution: Execution,
    /// Append paraphrases of the ranked sentences.
    pub paraphrase: bool,
    pub paraphrase_outputs: usize,
    pub syntax_control: Option<String>,
    pub max_concurrency: usize,
    pub paths: PathsConfig,
    pub backends: BackendsConfig,
    pub adapters: AdaptersConfig,
    /// Directory relative paths are resolved against. Not read from files.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let gen = GenerationConfig::default();
        PipelineConfig {
            seed: gen.seed,
            beam_width: gen.beam_width,
            top_k: 10,
            template: Template::default(),
            gec: GecMode::default(),
            rank_by: None,
            rescore_reverse: gen.rescore_reverse,
            rescore_forward: gen.rescore_forward,
            rescore_oversample: gen.rescore_oversample,
            execution: gen.execution,
            paraphrase: false,
            paraphrase_outputs: 1,
            syntax_control: None,
            max_concurrency: 4,
            paths: PathsConfig::default(),
            backends: BackendsConfig::default(),
            adapters: AdaptersConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

pub const ENV_PREFIX: &str = "HYPOGEN_";

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{ENV_PREFIX}{key}: cannot parse {value:?}")))
}

fn parse_enum<T: for<'de> Deserialize<'de>>(key: &str, value: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(value.trim().to_lowercase()))
        .map_err(|_| Error::Config(format!("{ENV_PREFIX}{key}: unknown value {value:?}")))
}

impl PipelineConfig {
    /// Reads a TOML file; relative paths inside resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: PipelineConfig =
            toml::from_str(&content).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    /// Applies `HYPOGEN_*` variables, e.g. `HYPOGEN_SEED=7` or `HYPOGEN_RANK_BY=p_g`.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<()> {
        for (name, value) in vars {
            let Some(key) = name.strip_prefix(ENV_PREFIX) else { continue };
            match key {
                "SEED" => self.seed = parse_value(key, &value)?,
                "BEAM_WIDTH" => self.beam_width = parse_value(key, &value)?,
                "TOP_K" => self.top_k = parse_value(key, &value)?,
                "RESCORE_REVERSE" => self.rescore_reverse = parse_value(key, &value)?,
                "RESCORE_FORWARD" => self.rescore_forward = parse_value(key, &value)?,
                "RESCORE_OVERSAMPLE" => self.rescore_oversample = parse_value(key, &value)?,
                "MAX_CONCURRENCY" => self.max_concurrency = parse_value(key, &value)?,
                "PARAPHRASE" => self.paraphrase = parse_value(key, &value)?,
                "TEMPLATE" => self.template = parse_enum(key, &value)?,
                "GEC" => self.gec = parse_enum(key, &value)?,
                "RANK_BY" => self.rank_by = Some(parse_enum(key, &value)?),
                "EXECUTION" => self.execution = parse_enum(key, &value)?,
                "UNIGRAMS" => self.paths.unigrams = Some(value.into()),
                "GENERIC_MODEL" => self.paths.generic_model = Some(value.into()),
                "SPECIFIC_MODEL" => self.paths.specific_model = Some(value.into()),
                "KEYWORDS" => self.paths.keywords = Some(value.into()),
                _ => {}
            }
        }
        Ok(())
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            beam_width: self.beam_width,
            seed: self.seed,
            rescore_reverse: self.rescore_reverse,
            rescore_forward: self.rescore_forward,
            rescore_oversample: self.rescore_oversample,
            execution: self.execution,
        }
    }

    pub fn effective_rank_mode(&self) -> RankMode {
        self.rank_by.unwrap_or(if self.paths.specific_model.is_some() {
            RankMode::PS
        } else {
            RankMode::PG
        })
    }

    /// Checks bounds and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 {
            return Err(Error::Config("beam_width must be at least 1".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if self.paraphrase && self.paraphrase_outputs == 0 {
            return Err(Error::Config("paraphrase_outputs must be at least 1".into()));
        }
        let mut paths: Vec<(&str, &PathBuf)> = Vec::new();
        let p = &self.paths;
        for (name, path) in [
            ("paths.unigrams", &p.unigrams),
            ("paths.generic_model", &p.generic_model),
            ("paths.specific_model", &p.specific_model),
            ("paths.keywords", &p.keywords),
        ] {
            if let Some(path) = path {
                paths.push((name, path));
            }
        }
        for (name, spec) in [("backends.forward", &self.backends.forward), ("backends.reverse", &self.backends.reverse)] {
            if let Some(BackendSpec::Table { path }) = spec {
                paths.push((name, path));
            }
        }
        for (name, path) in paths {
            let full = self.resolve(path);
            if !full.exists() {
                return Err(Error::Config(format!("{name}: {} does not exist", full.display())));
            }
        }
        if self.backends.forward.is_none() {
            return Err(Error::Config("backends.forward is not configured".into()));
        }
        if self.effective_rank_mode() == RankMode::PS && self.paths.specific_model.is_none() {
            return Err(Error::Config("rank_by = p_s needs paths.specific_model".into()));
        }
        if self.paraphrase && self.adapters.paraphrase.is_none() {
            return Err(Error::Config("paraphrase requested but adapters.paraphrase is not configured".into()));
        }
        Ok(())
    }
}

/// Marks a pipeline record that paraphrases a ranked sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseInfo {
    /// Rank of the sentence that was paraphrased.
    pub source_rank: usize,
    pub still_patterned: bool,
}

/// One output line of `generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRecord {
    #[serde(flatten)]
    pub hyperbole: ScoredHyperbole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paraphrase: Option<ParaphraseInfo>,
}

fn load_generic(dir: &Path) -> Result<GenericClassifier> {
    match rankers::load_model(dir)?.1 {
        Model::Generic(m) => Ok(m),
        Model::Specific(_) => Err(Error::Config(format!("{}: expected a generic model", dir.display()))),
    }
}

fn load_specific(dir: &Path) -> Result<SpecificClassifier> {
    match rankers::load_model(dir)?.1 {
        Model::Specific(m) => Ok(m),
        Model::Generic(_) => Err(Error::Config(format!("{}: expected a specific model", dir.display()))),
    }
}

/// A validated configuration with its backends and models loaded.
pub struct Pipeline {
    pub config: PipelineConfig,
    pub backends: Backends,
    pub unigrams: Option<UnigramModel>,
    pub generic: GenericClassifier,
    pub specific: Option<SpecificClassifier>,
}

impl Pipeline {
    pub fn load(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let base = config.base_dir.clone();
        let forward = config
            .backends
            .forward
            .as_ref()
            .expect("validated")
            .load(&base)?;
        let reverse = match &config.backends.reverse {
            Some(spec) => spec.load(&base)?,
            None => forward.clone(),
        };
        let unigrams = match &config.paths.unigrams {
            Some(p) => Some(UnigramModel::from_tsv(&config.resolve(p))?),
            None => {
                if config.rescore_reverse || config.rescore_forward {
                    warn!("no unigram table configured; beams are not rescored");
                }
                None
            }
        };
        let mut generic = match &config.paths.generic_model {
            Some(p) => load_generic(&config.resolve(p))?,
            None => {
                warn!("no generic model configured; every sentence gets p_g = 0.5");
                GenericClassifier::untrained()
            }
        };
        if let Some(p) = &config.paths.keywords {
            generic.keywords = KeywordConfig::from_file(&config.resolve(p))?;
        }
        let specific = match &config.paths.specific_model {
            Some(p) => Some(load_specific(&config.resolve(p))?),
            None => None,
        };
        Ok(Pipeline {
            backends: Backends::new(forward, reverse),
            unigrams,
            generic,
            specific,
            config,
        })
    }

    /// Parses, generates, assembles, corrects, scores, ranks and truncates.
    /// Any failure is reported with the stage it happened in and nothing is
    /// returned.
    pub fn run(&self, prompt_text: &str) -> Result<Vec<PipelineRecord>> {
        let config = &self.config;
        let prompt = prompt_parser::parse_prompt(prompt_text).map_err(|e| e.in_stage("prompt_parser"))?;
        info!("prompt subject {:?}, headword {:?}", prompt.subject, prompt.headword);

        let candidates = candidate_generator::gen_hyperbole(&prompt, &self.backends, self.unigrams.as_ref(), &config.generation())
            .map_err(|e| e.in_stage("candidate_generator"))?;
        info!("{} clause candidates", candidates.len());
        let gec_adapter = config.adapters.grammar.as_ref();
        let sentences: Vec<String> = exec::map(&candidates, config.execution, |c| {
            let raw = candidate_generator::assemble_sentence(&prompt, c, config.template);
            candidate_generator::correct_grammar(&raw, config.gec, gec_adapter)
        });

        let scored = self
            .score(&prompt.text, &sentences, candidates)
            .map_err(|e| e.in_stage("rankers"))?;
        let mut ranked = rankers::rank_candidates(scored, config.effective_rank_mode()).map_err(|e| e.in_stage("rankers"))?;
        ranked.truncate(config.top_k);

        let mut records: Vec<PipelineRecord> = ranked
            .iter()
            .cloned()
            .map(|hyperbole| PipelineRecord { hyperbole, paraphrase: None })
            .collect();
        if config.paraphrase {
            records.extend(self.paraphrase(&ranked).map_err(|e| e.in_stage("paraphrase"))?);
        }
        Ok(records)
    }

    fn score(&self, prompt: &str, sentences: &[String], candidates: Vec<candidate_generator::ClauseCandidate>) -> Result<Vec<ScoredHyperbole>> {
        let p_g = rankers::score_generic_batch(&self.generic, sentences, self.config.execution)?;
        candidates
            .into_iter()
            .zip(sentences)
            .zip(p_g)
            .map(|((candidate, sentence), p_g)| {
                let p_s = match &self.specific {
                    Some(clf) => Some(rankers::score_specific(clf, &candidate.features(p_g))?),
                    None => None,
                };
                Ok(ScoredHyperbole {
                    prompt: prompt.to_owned(),
                    sentence: sentence.clone(),
                    candidate,
                    p_g,
                    p_s,
                    rank: 0,
                })
            })
            .collect()
    }

    fn paraphrase(&self, ranked: &[ScoredHyperbole]) -> Result<Vec<PipelineRecord>> {
        let config = &self.config;
        let adapter = config.adapters.paraphrase.as_ref().expect("validated");
        let requests: Vec<ParaphraseRequest> = ranked
            .iter()
            .map(|s| ParaphraseRequest {
                sentence: s.sentence.clone(),
                syntax_control: config.syntax_control.clone(),
                n_outputs: config.paraphrase_outputs,
                seed: config.seed,
            })
            .collect();
        let results = paraphrase::paraphrase_batch(&requests, adapter, config.max_concurrency, config.execution);
        let mut records = Vec::new();
        for (source, result) in ranked.iter().zip(results) {
            for p in result? {
                let p_g = rankers::score_generic(&self.generic, &p.text)?;
                let p_s = match &self.specific {
                    Some(clf) => Some(rankers::score_specific(clf, &source.candidate.features(p_g))?),
                    None => None,
                };
                records.push(PipelineRecord {
                    hyperbole: ScoredHyperbole {
                        sentence: p.text,
                        p_g,
                        p_s,
                        ..source.clone()
                    },
                    paraphrase: Some(ParaphraseInfo {
                        source_rank: source.rank,
                        still_patterned: p.still_patterned,
                    }),
                });
            }
        }
        Ok(records)
    }
}

/// Loads the pipeline and runs it on one prompt.
pub fn run_pipeline(config: PipelineConfig, prompt: &str) -> Result<Vec<PipelineRecord>> {
    Pipeline::load(config)?.run(prompt)
}

/// The three likelihood features of an existing `so...that` sentence.
///
/// `l_ab` is the lower of the reverse `RelatedTo` (from the subject) and
/// reverse `HasProperty` (from the headword) likelihoods of B; `l_ac` and
/// `l_bc` take the minimum over the causal and characteristic relations.
pub fn clause_likelihoods(partition: &PatternPartition, backends: &Backends) -> Result<[f64; 3]> {
    let b = partition.clause_subject.as_str();
    let c = partition.clause_predicate.trim_end_matches(['.', '!', '?']);
    let prompt = &partition.prompt;
    let reverse = backends.for_direction(Direction::Reverse);
    let forward = backends.for_direction(Direction::Forward);
    let l_ab = knowledge_engine::token_likelihood(&prompt.subject, Relation::RelatedTo, b, Direction::Reverse, reverse)?
        .min(knowledge_engine::token_likelihood(&prompt.headword, Relation::HasProperty, b, Direction::Reverse, reverse)?);
    let min_over = |head: &str, relations: &[Relation]| -> Result<f64> {
        relations.iter().try_fold(f64::INFINITY, |best, r| {
            Ok(best.min(knowledge_engine::token_likelihood(head, *r, c, Direction::Forward, forward)?))
        })
    };
    Ok([l_ab, min_over(&prompt.text, &Relation::CAUSAL)?, min_over(b, &Relation::CHARACTERISTIC)?])
}

/// Turns labeled `so...that` sentences into specific-classifier examples.
/// Sentences that do not partition are skipped with a warning.
pub fn featurize_specific(
    records: &[LabeledSentence],
    generic: &GenericClassifier,
    backends: &Backends,
    exec: Execution,
) -> Result<Vec<SpecificExample>> {
    let rows = exec::map(records, exec, |r| -> Result<Option<SpecificExample>> {
        let partition = match prompt_parser::partition_so_that(&r.text) {
            Ok(p) => p,
            Err(e) => {
                warn!("skipping {:?}: {e}", r.text);
                return Ok(None);
            }
        };
        let p_g = rankers::score_generic(generic, &r.text)?;
        let [l_ab, l_ac, l_bc] = clause_likelihoods(&partition, backends)?;
        Ok(Some(SpecificExample {
            features: vec![p_g, l_ab, l_ac, l_bc],
            label: r.label.is_hyperbole(),
        }))
    });
    let mut out = Vec::new();
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}

/// Environment variables with the pipeline prefix, sorted by name.
pub fn env_overrides() -> BTreeMap<String, String> {
    std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect()
}

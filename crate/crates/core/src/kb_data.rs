//! Knowledge triples, labeled hyperbole corpora and the datasets built from them.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompt_parser;
use crate::text;

/// The ten commonsense relations the generator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    RelatedTo,
    HasProperty,
    CauseDesire,
    Causes,
    HasSubevent,
    NotCapableOf,
    DefinedAs,
    CapableOf,
    IsA,
    UsedFor,
}

impl Relation {
    pub const ALL: [Relation; 10] = [
        Relation::RelatedTo,
        Relation::HasProperty,
        Relation::CauseDesire,
        Relation::Causes,
        Relation::HasSubevent,
        Relation::NotCapableOf,
        Relation::DefinedAs,
        Relation::CapableOf,
        Relation::IsA,
        Relation::UsedFor,
    ];

    /// Relations that produce a consequence of the prompt.
    pub const CAUSAL: [Relation; 3] = [Relation::CauseDesire, Relation::Causes, Relation::HasSubevent];

    /// Relations that produce a predicate of a clause subject.
    pub const CHARACTERISTIC: [Relation; 5] = [
        Relation::NotCapableOf,
        Relation::DefinedAs,
        Relation::CapableOf,
        Relation::IsA,
        Relation::UsedFor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::RelatedTo => "RelatedTo",
            Relation::HasProperty => "HasProperty",
            Relation::CauseDesire => "CauseDesire",
            Relation::Causes => "Causes",
            Relation::HasSubevent => "HasSubevent",
            Relation::NotCapableOf => "NotCapableOf",
            Relation::DefinedAs => "DefinedAs",
            Relation::CapableOf => "CapableOf",
            Relation::IsA => "IsA",
            Relation::UsedFor => "UsedFor",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = Error;

    /// Accepts the bare token or the ConceptNet URI form (`/r/RelatedTo`).
    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim().trim_start_matches("/r/");
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == token)
            .ok_or_else(|| Error::Argument(format!("unknown relation {token:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleSource {
    Conceptnet,
    Simile,
}

/// A `<head, relation, tail>` assertion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KnowledgeTriple {
    pub head: String,
    pub relation: Relation,
    pub tail: String,
    pub source: TripleSource,
}

impl KnowledgeTriple {
    pub fn new(head: &str, relation: Relation, tail: &str, source: TripleSource) -> Result<Self> {
        let head = text::collapse_whitespace(head);
        let tail = text::collapse_whitespace(tail);
        if head.is_empty() || tail.is_empty() {
            return Err(Error::Argument("triple head and tail must be non-empty".into()));
        }
        Ok(KnowledgeTriple {
            head,
            relation,
            tail,
            source,
        })
    }

    /// Identity used for duplicate detection: normalized text, source ignored.
    pub fn key(&self) -> (String, Relation, String) {
        (
            text::normalize(&self.head),
            self.relation,
            text::normalize(&self.tail),
        )
    }

    pub fn to_tsv_line(&self) -> String {
        format!("{}\t{}\t{}", self.head, self.relation, self.tail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub triples: Vec<KnowledgeTriple>,
    /// Lines whose relation is outside the ten supported tokens.
    pub dropped_relation: usize,
    /// Lines without three non-empty tab-separated fields.
    pub malformed: usize,
}

/// Reads a `head<TAB>relation<TAB>tail` file.
pub fn ingest_conceptnet_triples(path: &Path) -> Result<IngestReport> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut report = IngestReport::default();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            warn!("{}:{}: malformed triple line", path.display(), lineno + 1);
            report.malformed += 1;
            continue;
        }
        match fields[1].parse::<Relation>() {
            Ok(relation) => report.triples.push(KnowledgeTriple::new(
                fields[0],
                relation,
                fields[2],
                TripleSource::Conceptnet,
            )?),
            Err(_) => report.dropped_relation += 1,
        }
    }
    Ok(report)
}

pub fn write_triples(path: &Path, triples: &[KnowledgeTriple]) -> Result<()> {
    let mut out = String::new();
    for t in triples {
        out.push_str(&t.to_tsv_line());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Maps `as <property> as <entity>` to `<entity, HasProperty, property>`.
pub fn simile_to_triplet(simile: &str) -> Result<KnowledgeTriple> {
    let tokens = text::tokenize(simile);
    let not_simile = || Error::Pattern(format!("not an `as <property> as <entity>` simile: {simile:?}"));
    if tokens.len() < 4 || tokens[0] != "as" {
        return Err(not_simile());
    }
    let second_as = tokens[2..]
        .iter()
        .position(|t| t == "as")
        .map(|p| p + 2)
        .ok_or_else(not_simile)?;
    let property = tokens[1..second_as].join(" ");
    let mut entity = &tokens[second_as + 1..];
    while let Some(first) = entity.first() {
        if ARTICLES.contains(&first.as_str()) {
            entity = &entity[1..];
        } else {
            break;
        }
    }
    if property.is_empty() || entity.is_empty() {
        return Err(not_simile());
    }
    KnowledgeTriple::new(&entity.join(" "), Relation::HasProperty, &property, TripleSource::Simile)
}

/// Reads one simile per line; lines that are not similes are counted and skipped.
pub fn ingest_similes(path: &Path) -> Result<(Vec<KnowledgeTriple>, usize)> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut triples = Vec::new();
    let mut rejected = 0;
    for line in content.lines().filter(|l| !l.trim().is_empty()) {
        match simile_to_triplet(line) {
            Ok(t) => triples.push(t),
            Err(_) => rejected += 1,
        }
    }
    if rejected > 0 {
        warn!("{}: skipped {rejected} non-simile lines", path.display());
    }
    Ok((triples, rejected))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AugmentReport {
    pub triples: Vec<KnowledgeTriple>,
    pub from_base: usize,
    pub from_similes: usize,
    pub duplicates_removed: usize,
}

/// Concatenates base and simile triples, keeping the first copy of each
/// normalized `(head, relation, tail)`.
pub fn augment_training_set(base: &[KnowledgeTriple], similes: &[KnowledgeTriple]) -> AugmentReport {
    let mut seen = HashSet::new();
    let mut triples = Vec::with_capacity(base.len() + similes.len());
    let mut counts = [0usize; 2];
    for (i, group) in [base, similes].into_iter().enumerate() {
        for t in group {
            if seen.insert(t.key()) {
                triples.push(t.clone());
                counts[i] += 1;
            }
        }
    }
    AugmentReport {
        duplicates_removed: base.len() + similes.len() - triples.len(),
        triples,
        from_base: counts[0],
        from_similes: counts[1],
    }
}

/// Trigger keywords removed before classifier training.
///
/// Entries containing `...` are discontinuous patterns; only the
/// `so...that` / `so...even` forms are understood, and they are removed only
/// in the pattern position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordConfig {
    pub keywords: Vec<String>,
}

impl Default for KeywordConfig {
    fn default() -> Self {
        KeywordConfig {
            keywords: ["I swear", "literally", "so...that", "so...even"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

impl KeywordConfig {
    /// One keyword per line; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let keywords: Vec<String> = content
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        if keywords.is_empty() {
            return Err(Error::Config(format!("{}: empty keyword list", path.display())));
        }
        Ok(KeywordConfig { keywords })
    }

    fn phrases(&self) -> Vec<Vec<String>> {
        self.keywords
            .iter()
            .filter(|k| !k.contains("..."))
            .map(|k| text::tokenize(k))
            .filter(|k| !k.is_empty())
            .collect()
    }

    fn strips_pattern(&self) -> bool {
        self.keywords.iter().any(|k| k.contains("..."))
    }
}

/// Removes configured trigger keywords and collapses whitespace.
pub fn strip_keywords(sentence: &str, config: &KeywordConfig) -> String {
    let phrases = config.phrases();
    let mut current = text::collapse_whitespace(sentence);
    loop {
        let next = strip_once(&current, &phrases, config.strips_pattern());
        if next == current {
            return current;
        }
        current = next;
    }
}

fn strip_once(sentence: &str, phrases: &[Vec<String>], pattern: bool) -> String {
    let raw: Vec<&str> = sentence.split_whitespace().collect();
    let keys: Vec<String> = raw.iter().map(|w| text::trim_punct(w).to_lowercase()).collect();
    let mut drop = vec![false; raw.len()];
    let mut i = 0;
    while i < raw.len() {
        let hit = phrases.iter().find(|p| {
            i + p.len() <= keys.len() && keys[i..i + p.len()].iter().zip(p.iter()).all(|(a, b)| a == b)
        });
        match hit {
            Some(p) => {
                drop[i..i + p.len()].iter_mut().for_each(|d| *d = true);
                i += p.len();
            }
            None => i += 1,
        }
    }
    if pattern {
        if let Some(anchor) = prompt_parser::locate_pattern(&keys) {
            drop[anchor.so_index] = true;
            for idx in anchor.connective_indices {
                drop[idx] = true;
            }
        }
    }
    raw.iter()
        .zip(drop)
        .filter(|(_, d)| !d)
        .map(|(w, _)| *w)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Hyperbole,
    Literal,
}

impl Label {
    pub fn is_hyperbole(self) -> bool {
        self == Label::Hyperbole
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusName {
    HypoRed,
    HypoSo,
    HypoEn,
}

/// One corpus record. `split` may be absent on input, in which case
/// [`split_balanced`] assigns one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub text: String,
    pub label: Label,
    #[serde(default)]
    pub trigger_keyword: Option<String>,
    pub corpus: CorpusName,
    #[serde(default)]
    pub split: Option<Split>,
}

impl LabeledSentence {
    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(Error::Argument("labeled sentence text is empty".into()));
        }
        if self.corpus == CorpusName::HypoSo && !prompt_parser::is_so_that(&self.text) {
            return Err(Error::Argument(format!(
                "HYPO-so record lacks the so...that pattern: {:?}",
                self.text
            )));
        }
        Ok(())
    }
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Reads and validates a corpus file.
pub fn read_corpus(path: &Path) -> Result<Vec<LabeledSentence>> {
    let records: Vec<LabeledSentence> = read_jsonl(path)?;
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSet {
    pub train: Vec<LabeledSentence>,
    pub dev: Vec<LabeledSentence>,
    pub test: Vec<LabeledSentence>,
}

impl SplitSet {
    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label_counts(records: &[LabeledSentence]) -> (usize, usize) {
        let hyp = records.iter().filter(|r| r.label.is_hyperbole()).count();
        (hyp, records.len() - hyp)
    }

    pub fn is_train_balanced(&self) -> bool {
        let (h, l) = Self::label_counts(&self.train);
        h == l
    }

    pub fn texts(&self) -> HashSet<String> {
        self.train
            .iter()
            .chain(&self.dev)
            .chain(&self.test)
            .map(|r| text::normalize(&r.text))
            .collect()
    }
}

/// Datasets for the two classifiers. The generic pool never shares a sentence
/// with the specific (so...that) pool.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierPools {
    pub generic: SplitSet,
    pub specific: SplitSet,
}

/// Train/dev/test fractions used when a record carries no split.
const DEFAULT_FRACTIONS: (f64, f64) = (0.8, 0.1);

/// Builds disjoint, deduplicated pools with balanced training splits.
///
/// HYPO-so records form the specific pool; everything else the generic one.
/// Records keep their `split` when present; the rest are shuffled under `seed`
/// and assigned 80/10/10. A sentence present in more than one split is kept in
/// the later one (test over dev over train).
pub fn split_balanced(corpus: &[LabeledSentence], seed: u64) -> Result<ClassifierPools> {
    let (h, l) = SplitSet::label_counts(corpus);
    if h == 0 || l == 0 {
        return Err(Error::Config(
            "corpus must contain both hyperbole and literal sentences".into(),
        ));
    }
    let (so, rest): (Vec<_>, Vec<_>) = corpus
        .iter()
        .cloned()
        .partition(|r| r.corpus == CorpusName::HypoSo);
    let specific = build_pool(so, seed, "specific", &HashSet::new());
    let generic = build_pool(rest, seed.wrapping_add(1), "generic", &specific.texts());
    Ok(ClassifierPools { generic, specific })
}

fn build_pool(
    records: Vec<LabeledSentence>,
    seed: u64,
    name: &str,
    exclude: &HashSet<String>,
) -> SplitSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Last split wins for duplicated texts.
    let mut by_text: BTreeMap<String, (usize, LabeledSentence)> = BTreeMap::new();
    let mut unassigned = Vec::new();
    for (order, r) in records.into_iter().enumerate() {
        let key = text::normalize(&r.text);
        if exclude.contains(&key) {
            continue;
        }
        match r.split {
            Some(split) => {
                let keep = by_text
                    .get(&key)
                    .is_none_or(|(_, prev)| prev.split.is_none_or(|s| s <= split));
                if keep {
                    by_text.insert(key, (order, r));
                }
            }
            None => unassigned.push((order, key, r)),
        }
    }
    unassigned.retain(|(_, key, _)| !by_text.contains_key(key));
    let mut seen = HashSet::new();
    unassigned.retain(|(_, key, _)| seen.insert(key.clone()));
    unassigned.shuffle(&mut rng);
    let n = unassigned.len();
    let n_train = (n as f64 * DEFAULT_FRACTIONS.0).round() as usize;
    let n_dev = (n as f64 * DEFAULT_FRACTIONS.1).round() as usize;
    for (i, (order, key, mut r)) in unassigned.into_iter().enumerate() {
        r.split = Some(if i < n_train {
            Split::Train
        } else if i < n_train + n_dev {
            Split::Dev
        } else {
            Split::Test
        });
        by_text.insert(key, (order, r));
    }

    let mut ordered: Vec<(usize, LabeledSentence)> = by_text.into_values().collect();
    ordered.sort_by_key(|(order, _)| *order);
    let mut set = SplitSet::default();
    for (_, r) in ordered {
        match r.split {
            Some(Split::Train) => set.train.push(r),
            Some(Split::Dev) => set.dev.push(r),
            _ => set.test.push(r),
        }
    }
    let (h, l) = SplitSet::label_counts(&set.train);
    if (h == 0) != (l == 0) {
        warn!("{name} pool has a single-label training split; it will be empty after balancing");
    }
    downsample(&mut set.train, &mut rng);
    set
}

fn downsample(train: &mut Vec<LabeledSentence>, rng: &mut ChaCha8Rng) {
    let (h, l) = SplitSet::label_counts(train);
    let keep = h.min(l);
    let majority = if h > l { Label::Hyperbole } else { Label::Literal };
    let mut majority_idx: Vec<usize> = train
        .iter()
        .enumerate()
        .filter(|(_, r)| r.label == majority)
        .map(|(i, _)| i)
        .collect();
    majority_idx.shuffle(rng);
    let dropped: HashSet<usize> = majority_idx.into_iter().skip(keep).collect();
    let mut i = 0;
    train.retain(|_| {
        let kept = !dropped.contains(&i);
        i += 1;
        kept
    });
}

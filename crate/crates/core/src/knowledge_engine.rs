//! Forward and reverse commonsense inference behind a pluggable backend,
//! mutual-information beam rescoring and conditional token likelihoods.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adapter::JsonProcess;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::kb_data::Relation;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `(E1, R) -> E2`
    Forward,
    /// `(E2, R) -> E1`
    Reverse,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        })
    }
}

/// One decoded beam. `beam_logprob` is the sum of log token probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceBeam {
    pub tokens: Vec<String>,
    pub token_probs: Vec<f64>,
    pub beam_logprob: f64,
}

impl InferenceBeam {
    pub fn new(tokens: Vec<String>, token_probs: Vec<f64>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Argument("beam has no tokens".into()));
        }
        if tokens.len() != token_probs.len() {
            return Err(Error::Argument(format!(
                "beam has {} tokens but {} probabilities",
                tokens.len(),
                token_probs.len()
            )));
        }
        if let Some(p) = token_probs.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return Err(Error::Argument(format!("token probability {p} outside (0, 1]")));
        }
        let beam_logprob = token_probs.iter().map(|p| p.ln()).sum();
        Ok(InferenceBeam {
            tokens,
            token_probs,
            beam_logprob,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn phrase(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Unigram probabilities used as the rescoring denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnigramModel {
    probs: HashMap<String, f64>,
    oov_prob: f64,
}

pub const DEFAULT_OOV_PROB: f64 = 1e-7;

impl UnigramModel {
    pub fn new(probs: HashMap<String, f64>, oov_prob: f64) -> Result<Self> {
        if !(oov_prob > 0.0 && oov_prob <= 1.0) {
            return Err(Error::Argument(format!("OOV probability {oov_prob} outside (0, 1]")));
        }
        if let Some((t, p)) = probs.iter().find(|(_, p)| !(**p > 0.0 && **p <= 1.0)) {
            return Err(Error::Argument(format!("unigram {t:?} has probability {p}")));
        }
        Ok(UnigramModel { probs, oov_prob })
    }

    /// Relative token frequencies over a set of phrases.
    pub fn from_phrases<'a>(phrases: impl IntoIterator<Item = &'a str>, oov_prob: f64) -> Result<Self> {
        let mut counts: HashMap<String, u64> = HashMap::new();
        let mut total = 0u64;
        for phrase in phrases {
            for tok in text::tokenize(phrase) {
                *counts.entry(tok).or_default() += 1;
                total += 1;
            }
        }
        let probs = counts
            .into_iter()
            .map(|(t, c)| (t, c as f64 / total as f64))
            .collect();
        Self::new(probs, oov_prob)
    }

    pub fn prob(&self, token: &str) -> f64 {
        self.probs
            .get(token)
            .or_else(|| self.probs.get(&token.to_lowercase()))
            .copied()
            .unwrap_or(self.oov_prob)
    }

    pub fn oov_prob(&self) -> f64 {
        self.oov_prob
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Every probability multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.probs.iter().map(|(t, p)| (t.clone(), p * factor)).collect(),
            self.oov_prob * factor,
        )
    }

    /// `token<TAB>probability` lines. A `<oov>` line sets the OOV probability.
    pub fn from_tsv(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut probs = HashMap::new();
        let mut oov = DEFAULT_OOV_PROB;
        for (i, line) in content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let (tok, p) = line.split_once('\t').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected token<TAB>probability", path.display(), i + 1))
            })?;
            let p: f64 = p.trim().parse().map_err(|_| {
                Error::Config(format!("{}:{}: bad probability {p:?}", path.display(), i + 1))
            })?;
            if tok == "<oov>" {
                oov = p;
            } else {
                probs.insert(tok.to_owned(), p);
            }
        }
        Self::new(probs, oov)
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let sorted: BTreeMap<_, _> = self.probs.iter().collect();
        let mut out = format!("<oov>\t{:e}\n", self.oov_prob);
        for (t, p) in sorted {
            out.push_str(&format!("{t}\t{p:e}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Request sent to an inference backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub head: String,
    pub relation: Relation,
    pub direction: Direction,
    pub beam_width: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawBeam {
    pub tokens: Vec<String>,
    pub token_probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub beams: Vec<RawBeam>,
}

/// A commonsense inference model.
///
/// Implementations must be deterministic for a fixed request (including its
/// seed) and safe to call from several threads at once.
pub trait KnowledgeBackend: Send + Sync {
    fn generate(&self, request: &BackendRequest) -> Result<Vec<RawBeam>>;

    /// Conditional probability of each tail token given the head, the
    /// relation and the preceding tail tokens.
    fn score_tail(&self, head: &str, relation: Relation, direction: Direction, tail: &[String]) -> Result<Vec<f64>>;
}

impl<B: KnowledgeBackend + ?Sized> KnowledgeBackend for Arc<B> {
    fn generate(&self, request: &BackendRequest) -> Result<Vec<RawBeam>> {
        (**self).generate(request)
    }

    fn score_tail(&self, head: &str, relation: Relation, direction: Direction, tail: &[String]) -> Result<Vec<f64>> {
        (**self).score_tail(head, relation, direction, tail)
    }
}

/// Forward and reverse models. They may be the same instance.
#[derive(Clone)]
pub struct Backends {
    pub forward: Arc<dyn KnowledgeBackend>,
    pub reverse: Arc<dyn KnowledgeBackend>,
}

impl Backends {
    pub fn new(forward: Arc<dyn KnowledgeBackend>, reverse: Arc<dyn KnowledgeBackend>) -> Self {
        Backends { forward, reverse }
    }

    pub fn shared(backend: Arc<dyn KnowledgeBackend>) -> Self {
        Backends {
            forward: backend.clone(),
            reverse: backend,
        }
    }

    pub fn for_direction(&self, direction: Direction) -> &dyn KnowledgeBackend {
        match direction {
            Direction::Forward => self.forward.as_ref(),
            Direction::Reverse => self.reverse.as_ref(),
        }
    }
}

impl fmt::Debug for Backends {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Backends { .. }")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub relation: Relation,
    pub direction: Direction,
    /// `None` matches any head.
    #[serde(default)]
    pub head: Option<String>,
    pub beams: Vec<RawBeam>,
}

/// Table-driven backend returning fixed beams with fixed probabilities.
///
/// Token scoring ignores context: every token gets its table probability or
/// the default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableBackend {
    #[serde(default)]
    pub entries: Vec<TableEntry>,
    #[serde(default)]
    pub token_probs: BTreeMap<String, f64>,
    #[serde(default = "default_token_prob")]
    pub default_token_prob: f64,
}

fn default_token_prob() -> f64 {
    0.1
}

impl Default for TableBackend {
    fn default() -> Self {
        TableBackend {
            entries: Vec::new(),
            token_probs: BTreeMap::new(),
            default_token_prob: default_token_prob(),
        }
    }
}

impl TableBackend {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&content)?)
    }

    /// Adds beams for `(relation, direction, head)`; phrases are whitespace
    /// tokenized and every token gets probability `prob`.
    pub fn with(mut self, relation: Relation, direction: Direction, head: Option<&str>, phrases: &[(&str, f64)]) -> Self {
        let beams = phrases
            .iter()
            .map(|(p, prob)| {
                let tokens: Vec<String> = p.split_whitespace().map(String::from).collect();
                RawBeam {
                    token_probs: vec![*prob; tokens.len()],
                    tokens,
                }
            })
            .collect();
        self.entries.push(TableEntry {
            relation,
            direction,
            head: head.map(text::normalize),
            beams,
        });
        self
    }

    pub fn with_token_prob(mut self, token: &str, prob: f64) -> Self {
        self.token_probs.insert(token.to_owned(), prob);
        self
    }

    fn lookup(&self, head: &str, relation: Relation, direction: Direction) -> Option<&TableEntry> {
        let key = text::normalize(head);
        let matching = |e: &&TableEntry| e.relation == relation && e.direction == direction;
        self.entries
            .iter()
            .filter(matching)
            .find(|e| e.head.as_deref().map(text::normalize).as_deref() == Some(key.as_str()))
            .or_else(|| self.entries.iter().filter(matching).find(|e| e.head.is_none()))
    }
}

impl KnowledgeBackend for TableBackend {
    fn generate(&self, request: &BackendRequest) -> Result<Vec<RawBeam>> {
        Ok(self
            .lookup(&request.head, request.relation, request.direction)
            .map(|e| e.beams.iter().take(request.beam_width).cloned().collect())
            .unwrap_or_default())
    }

    fn score_tail(&self, _head: &str, _relation: Relation, _direction: Direction, tail: &[String]) -> Result<Vec<f64>> {
        Ok(tail
            .iter()
            .map(|t| self.token_probs.get(t).copied().unwrap_or(self.default_token_prob))
            .collect())
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum ProcessRequest<'a> {
    Generate(&'a BackendRequest),
    Score {
        head: &'a str,
        relation: Relation,
        direction: Direction,
        tail: &'a [String],
    },
}

#[derive(Debug, Deserialize)]
struct ScoreResponse {
    token_probs: Vec<f64>,
}

/// Backend served by an external process speaking the JSON protocol.
///
/// Generation requests carry `"op": "generate"` plus the request fields and
/// expect `{"beams": [...]}`; scoring requests carry `"op": "score"` and
/// expect `{"token_probs": [...]}`.
#[derive(Debug, Clone)]
pub struct ProcessBackend {
    pub process: JsonProcess,
}

impl KnowledgeBackend for ProcessBackend {
    fn generate(&self, request: &BackendRequest) -> Result<Vec<RawBeam>> {
        let resp: BackendResponse = self.process.call(&ProcessRequest::Generate(request))?;
        Ok(resp.beams)
    }

    fn score_tail(&self, head: &str, relation: Relation, direction: Direction, tail: &[String]) -> Result<Vec<f64>> {
        let resp: ScoreResponse = self.process.call(&ProcessRequest::Score {
            head,
            relation,
            direction,
            tail,
        })?;
        Ok(resp.token_probs)
    }
}

fn by_logprob(a: &InferenceBeam, b: &InferenceBeam) -> Ordering {
    b.beam_logprob
        .total_cmp(&a.beam_logprob)
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Runs the backend and returns at most `beam_width` beams, best first.
pub fn infer(
    head: &str,
    relation: Relation,
    direction: Direction,
    beam_width: usize,
    seed: u64,
    backend: &dyn KnowledgeBackend,
) -> Result<Vec<InferenceBeam>> {
    if beam_width == 0 {
        return Err(Error::Argument("beam width must be at least 1".into()));
    }
    let context = |message: String| Error::Backend {
        relation,
        direction,
        message,
    };
    let request = BackendRequest {
        head: head.to_owned(),
        relation,
        direction,
        beam_width,
        seed,
    };
    let raw = backend.generate(&request).map_err(|e| context(e.to_string()))?;
    let mut beams = raw
        .into_iter()
        .filter(|b| !b.tokens.is_empty())
        .map(|b| InferenceBeam::new(b.tokens, b.token_probs))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| context(e.to_string()))?;
    beams.sort_by(by_logprob);
    beams.truncate(beam_width);
    Ok(beams)
}

/// Mutual-information rescoring score of one beam:
/// `exp(logprob / T) / (sum of unigram probabilities / T)`.
pub fn rescore_value(beam: &InferenceBeam, unigrams: &UnigramModel) -> f64 {
    let t = beam.len() as f64;
    let numerator = (beam.beam_logprob / t).exp();
    let denominator = beam.tokens.iter().map(|tok| unigrams.prob(tok)).sum::<f64>() / t;
    numerator / denominator
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescoredBeam {
    pub beam: InferenceBeam,
    pub score: f64,
}

/// Rescores and sorts beams by descending score. Ties fall back to the
/// beam log-probability, then to token order.
pub fn rescore_beams(beams: &[InferenceBeam], unigrams: &UnigramModel) -> Result<Vec<RescoredBeam>> {
    rescore_beams_with(beams, unigrams, Execution::default())
}

pub fn rescore_beams_with(
    beams: &[InferenceBeam],
    unigrams: &UnigramModel,
    exec: Execution,
) -> Result<Vec<RescoredBeam>> {
    if beams.is_empty() {
        return Err(Error::Argument("no beams to rescore".into()));
    }
    let mut scored: Vec<RescoredBeam> = exec::map(beams, exec, |b| RescoredBeam {
        score: rescore_value(b, unigrams),
        beam: b.clone(),
    });
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| by_logprob(&a.beam, &b.beam))
    });
    Ok(scored)
}

/// Negative conditional log-likelihood of `tail` given `(head, relation)`.
/// Lower means more expected.
pub fn token_likelihood(
    head: &str,
    relation: Relation,
    tail: &str,
    direction: Direction,
    backend: &dyn KnowledgeBackend,
) -> Result<f64> {
    let tokens = text::tokenize(tail);
    if tokens.is_empty() {
        return Err(Error::Argument("cannot score an empty tail".into()));
    }
    let probs = backend
        .score_tail(head, relation, direction, &tokens)
        .map_err(|e| Error::Backend {
            relation,
            direction,
            message: e.to_string(),
        })?;
    if probs.len() != tokens.len() {
        return Err(Error::Backend {
            relation,
            direction,
            message: format!("scored {} of {} tail tokens", probs.len(), tokens.len()),
        });
    }
    if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::Backend {
            relation,
            direction,
            message: format!("token probability {p} outside (0, 1]"),
        });
    }
    let nll: f64 = -probs.iter().map(|p| p.ln()).sum::<f64>();
    Ok(nll.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn beam(tokens: &[&str], probs: &[f64]) -> InferenceBeam {
        InferenceBeam::new(tokens.iter().map(|t| t.to_string()).collect(), probs.to_vec()).unwrap()
    }

    fn unigrams(pairs: &[(&str, f64)]) -> UnigramModel {
        UnigramModel::new(pairs.iter().map(|(t, p)| (t.to_string(), *p)).collect(), 1e-7).unwrap()
    }

    #[test]
    fn rescoring_hand_example() {
        let b = beam(&["silent", "grave"], &[0.5, 0.5]);
        assert_abs_diff_eq!(b.beam_logprob, 0.25f64.ln(), epsilon = 1e-12);
        let u = unigrams(&[("silent", 0.01), ("grave", 0.03)]);
        let out = rescore_beams(&[b], &u).unwrap();
        assert_abs_diff_eq!(out[0].score, 25.0, epsilon = 1e-6);
    }

    #[test]
    fn identical_beams_score_identically() {
        let u = unigrams(&[("a", 0.2)]);
        let out = rescore_beams(&[beam(&["a", "b"], &[0.3, 0.4]), beam(&["a", "b"], &[0.3, 0.4])], &u).unwrap();
        assert_eq!(out[0].score, out[1].score);
    }

    #[test]
    fn higher_logprob_wins_at_fixed_denominator() {
        let u = unigrams(&[("x", 0.2), ("y", 0.1)]);
        let low = beam(&["x", "y"], &[0.2, 0.2]);
        let high = beam(&["y", "x"], &[0.6, 0.5]);
        let out = rescore_beams(&[low, high.clone()], &u).unwrap();
        assert_eq!(out[0].beam, high);
        assert!(out[0].score > out[1].score);
    }

    #[test]
    fn rescoring_rejects_empty_input() {
        assert!(rescore_beams(&[], &unigrams(&[])).is_err());
    }

    #[test]
    fn invalid_beams_and_unigrams_rejected() {
        assert!(InferenceBeam::new(vec!["a".into()], vec![0.0]).is_err());
        assert!(InferenceBeam::new(vec!["a".into()], vec![0.5, 0.5]).is_err());
        assert!(InferenceBeam::new(vec![], vec![]).is_err());
        assert!(UnigramModel::new(HashMap::new(), 0.0).is_err());
    }

    #[test]
    fn unigram_tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.tsv");
        let u = UnigramModel::from_phrases(["the city", "the grave", "silent"], 1e-6).unwrap();
        assert_abs_diff_eq!(u.prob("the"), 0.4, epsilon = 1e-12);
        u.write_tsv(&path).unwrap();
        assert_eq!(UnigramModel::from_tsv(&path).unwrap(), u);
    }

    fn mock() -> TableBackend {
        TableBackend::default()
            .with(Relation::HasProperty, Direction::Reverse, Some("lit"), &[("the city", 0.4)])
            .with(
                Relation::CauseDesire,
                Direction::Forward,
                Some("the party is lit"),
                &[("to sing", 0.2), ("to dance", 0.6), ("to drink", 0.3)],
            )
            .with_token_prob("x", 0.5)
            .with_token_prob("y", 0.25)
            .with_token_prob("certain", 1.0)
    }

    #[test]
    fn infer_orders_and_bounds_beams() {
        let backend = mock();
        let beams = infer("the party is lit", Relation::CauseDesire, Direction::Forward, 3, 0, &backend).unwrap();
        assert_eq!(beams[0].phrase(), "to dance");
        assert!(beams.windows(2).all(|w| w[0].beam_logprob >= w[1].beam_logprob));
        let one = infer("the party is lit", Relation::CauseDesire, Direction::Forward, 1, 0, &backend).unwrap();
        assert_eq!(one.len(), 1);
        let rev = infer("lit", Relation::HasProperty, Direction::Reverse, 5, 0, &backend).unwrap();
        assert_eq!(rev.iter().map(InferenceBeam::phrase).collect::<Vec<_>>(), vec!["the city"]);
        assert!(infer("lit", Relation::HasProperty, Direction::Reverse, 0, 0, &backend).is_err());
    }

    struct Failing;

    impl KnowledgeBackend for Failing {
        fn generate(&self, _: &BackendRequest) -> Result<Vec<RawBeam>> {
            Err(Error::Adapter("model offline".into()))
        }
        fn score_tail(&self, _: &str, _: Relation, _: Direction, _: &[String]) -> Result<Vec<f64>> {
            Err(Error::Adapter("model offline".into()))
        }
    }

    #[test]
    fn backend_failures_carry_context() {
        let err = infer("lit", Relation::HasProperty, Direction::Reverse, 2, 0, &Failing).unwrap_err();
        match err {
            Error::Backend { relation, direction, .. } => {
                assert_eq!((relation, direction), (Relation::HasProperty, Direction::Reverse));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn likelihood_examples() {
        let b = mock();
        let l = |tail: &str| token_likelihood("h", Relation::Causes, tail, Direction::Forward, &b).unwrap();
        assert_eq!(l("certain certain"), 0.0);
        assert_abs_diff_eq!(l("x y"), 2.0794415416798357, epsilon = 1e-9);
        assert_abs_diff_eq!(l("x y"), l("x") + l("y"), epsilon = 1e-12);
        assert!(matches!(
            token_likelihood("h", Relation::Causes, "  ", Direction::Forward, &b),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn table_backend_loads_from_json() {
        let json = r#"{"entries": [{"relation": "RelatedTo", "direction": "reverse", "head": null,
            "beams": [{"tokens": ["the", "wardrobe"], "token_probs": [0.5, 0.5]}]}]}"#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        fs::write(&path, json).unwrap();
        let backend = TableBackend::from_json_file(&path).unwrap();
        let beams = infer("anything", Relation::RelatedTo, Direction::Reverse, 4, 0, &backend).unwrap();
        assert_eq!(beams[0].phrase(), "the wardrobe");
        assert_eq!(backend.default_token_prob, 0.1);
    }

    #[test]
    fn process_backend_speaks_protocol() {
        let script = r#"read line
case "$line" in
  *'"op":"score"'*) echo '{"token_probs": [0.5, 0.5]}' ;;
  *) echo '{"beams": [{"tokens": ["the", "city"], "token_probs": [0.9, 0.8]}]}' ;;
esac"#;
        let backend = ProcessBackend {
            process: JsonProcess::new("sh", vec!["-c".into(), script.into()]),
        };
        let beams = infer("lit", Relation::HasProperty, Direction::Reverse, 3, 1, &backend).unwrap();
        assert_eq!(beams[0].phrase(), "the city");
        let l = token_likelihood("lit", Relation::HasProperty, "the city", Direction::Reverse, &backend).unwrap();
        assert_abs_diff_eq!(l, -2.0 * 0.5f64.ln(), epsilon = 1e-12);
    }

    fn arb_beam() -> impl Strategy<Value = InferenceBeam> {
        prop::collection::vec(("[a-e]", 0.01f64..1.0), 1..6).prop_map(|pairs| {
            let (t, p): (Vec<String>, Vec<f64>) = pairs.into_iter().unzip();
            InferenceBeam::new(t, p).unwrap()
        })
    }

    proptest! {
        #[test]
        fn rescoring_is_a_permutation(beams in prop::collection::vec(arb_beam(), 1..12)) {
            let u = unigrams(&[("a", 0.1), ("b", 0.05), ("c", 0.3)]);
            let out = rescore_beams(&beams, &u).unwrap();
            let mut got: Vec<String> = out.iter().map(|r| format!("{:?}", r.beam)).collect();
            let mut want: Vec<String> = beams.iter().map(|b| format!("{b:?}")).collect();
            got.sort();
            want.sort();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn unigram_scaling_preserves_order(beams in prop::collection::vec(arb_beam(), 1..12), c in 0.01f64..1.0) {
            let u = unigrams(&[("a", 0.1), ("b", 0.05), ("c", 0.3), ("d", 0.2), ("e", 0.01)]);
            let base = rescore_beams(&beams, &u).unwrap();
            let scaled = rescore_beams(&beams, &u.scaled(c).unwrap()).unwrap();
            for (x, y) in base.iter().zip(&scaled) {
                // Only exact ties may swap places.
                prop_assert!(x.beam == y.beam || (x.score - rescore_value(&y.beam, &u)).abs() <= 1e-12 * x.score);
                prop_assert!((y.score - x.score / c).abs() <= 1e-9 * x.score.abs().max(1.0) / c);
            }
        }

        #[test]
        fn numerator_is_geometric_mean(b in arb_beam()) {
            let geo = b.token_probs.iter().product::<f64>().powf(1.0 / b.len() as f64);
            prop_assert!(((b.beam_logprob / b.len() as f64).exp() - geo).abs() < 1e-9);
        }
    }
}

//! Automatic metrics, annotation agreement, the similarity-retrieval baseline
//! and human-evaluation form export.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::adapter::JsonProcess;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::knowledge_engine::UnigramModel;
use crate::prompt_parser::Prompt;
use crate::text;

/// Token embeddings for similarity metrics.
pub trait Embedder: Send + Sync {
    fn embed(&self, token: &str) -> Option<Vec<f64>>;
}

/// Embeddings read from a whitespace-separated `token v1 v2 ...` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableEmbedder {
    vectors: HashMap<String, Vec<f64>>,
}

impl TableEmbedder {
    pub fn new(vectors: HashMap<String, Vec<f64>>) -> Self {
        TableEmbedder { vectors }
    }

    pub fn from_text_file(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (i, line) in content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut parts = line.split_whitespace();
            let token = parts.next().unwrap_or_default().to_lowercase();
            let v: Vec<f64> = parts
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("{}:{}: bad vector", path.display(), i + 1)))?;
            if *dim.get_or_insert(v.len()) != v.len() || v.is_empty() {
                return Err(Error::Config(format!("{}:{}: inconsistent dimension", path.display(), i + 1)));
            }
            vectors.insert(token, v);
        }
        Ok(TableEmbedder { vectors })
    }
}

impl Embedder for TableEmbedder {
    fn embed(&self, token: &str) -> Option<Vec<f64>> {
        self.vectors.get(&token.to_lowercase()).cloned()
    }
}

/// Deterministic pseudo-random Gaussian vector per token. Distinct tokens are
/// nearly orthogonal, so similarity reduces to soft exact matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedEmbedder {
    pub dim: usize,
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        HashedEmbedder { dim: 256 }
    }
}

impl Embedder for HashedEmbedder {
    fn embed(&self, token: &str) -> Option<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(text::fnv1a(token.to_lowercase().as_bytes()));
        Some((0..self.dim).map(|_| rng.sample(StandardNormal)).collect())
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// Mean per-pair precision.
    pub precision: f64,
    /// Mean per-pair recall.
    pub recall: f64,
    /// Harmonic mean of `precision` and `recall`.
    pub f1: f64,
    pub pairs: Vec<PairScore>,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Greedy token matching of one candidate against one reference.
///
/// Identical tokens match with similarity 1; other pairs use the clamped
/// cosine of their embeddings (0 when either is missing).
pub fn pair_similarity(candidate: &str, reference: &str, embedder: &dyn Embedder) -> Result<PairScore> {
    let cand = text::tokenize(candidate);
    let refs = text::tokenize(reference);
    if cand.is_empty() || refs.is_empty() {
        return Err(Error::Argument("cannot compare empty sentences".into()));
    }
    let ce: Vec<Option<Vec<f64>>> = cand.iter().map(|t| embedder.embed(t)).collect();
    let re: Vec<Option<Vec<f64>>> = refs.iter().map(|t| embedder.embed(t)).collect();
    let sim: Vec<Vec<f64>> = (0..cand.len())
        .map(|i| {
            (0..refs.len())
                .map(|j| {
                    if cand[i] == refs[j] {
                        1.0
                    } else {
                        match (&ce[i], &re[j]) {
                            (Some(a), Some(b)) => cosine(a, b).clamp(0.0, 1.0),
                            _ => 0.0,
                        }
                    }
                })
                .collect()
        })
        .collect();
    let precision = sim.iter().map(|row| row.iter().cloned().fold(0.0, f64::max)).sum::<f64>() / cand.len() as f64;
    let recall = (0..refs.len())
        .map(|j| sim.iter().map(|row| row[j]).fold(0.0, f64::max))
        .sum::<f64>()
        / refs.len() as f64;
    Ok(PairScore {
        precision,
        recall,
        f1: harmonic(precision, recall),
    })
}

pub fn semantic_similarity(candidates: &[String], references: &[String], embedder: &dyn Embedder) -> Result<SimilarityReport> {
    semantic_similarity_with(candidates, references, embedder, Execution::default())
}

pub fn semantic_similarity_with(
    candidates: &[String],
    references: &[String],
    embedder: &dyn Embedder,
    exec: Execution,
) -> Result<SimilarityReport> {
    if candidates.len() != references.len() {
        return Err(Error::Argument(format!(
            "{} candidates but {} references",
            candidates.len(),
            references.len()
        )));
    }
    if candidates.is_empty() {
        return Err(Error::Argument("nothing to compare".into()));
    }
    let pairs: Vec<(&String, &String)> = candidates.iter().zip(references).collect();
    let pairs = exec::map(&pairs, exec, |(c, r)| pair_similarity(c, r, embedder))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let n = pairs.len() as f64;
    let precision = pairs.iter().map(|p| p.precision).sum::<f64>() / n;
    let recall = pairs.iter().map(|p| p.recall).sum::<f64>() / n;
    Ok(SimilarityReport {
        precision,
        recall,
        f1: harmonic(precision, recall),
        pairs,
    })
}

/// Per-token probabilities from a language model.
pub trait LanguageModel: Send + Sync {
    fn token_probs(&self, tokens: &[String]) -> Result<Vec<f64>>;
}

/// Uniform distribution over a vocabulary of `vocab_size` tokens.
#[derive(Debug, Clone, Copy)]
pub struct UniformLm {
    pub vocab_size: usize,
}

impl LanguageModel for UniformLm {
    fn token_probs(&self, tokens: &[String]) -> Result<Vec<f64>> {
        Ok(vec![1.0 / self.vocab_size as f64; tokens.len()])
    }
}

impl LanguageModel for UnigramModel {
    fn token_probs(&self, tokens: &[String]) -> Result<Vec<f64>> {
        Ok(tokens.iter().map(|t| self.prob(t)).collect())
    }
}

#[derive(Serialize)]
struct LmRequest<'a> {
    tokens: &'a [String],
}

#[derive(Deserialize)]
struct LmResponse {
    token_probs: Vec<f64>,
}

/// External model: request `{"tokens"}`, response `{"token_probs"}`.
impl LanguageModel for JsonProcess {
    fn token_probs(&self, tokens: &[String]) -> Result<Vec<f64>> {
        Ok(self.call::<_, LmResponse>(&LmRequest { tokens })?.token_probs)
    }
}

/// Mean token probability of a sentence. Lower is less expected.
pub fn expectedness(sentence: &str, lm: &dyn LanguageModel) -> Result<f64> {
    let tokens = text::tokenize(sentence);
    if tokens.is_empty() {
        return Err(Error::Argument("cannot score an empty sentence".into()));
    }
    let probs = lm.token_probs(&tokens)?;
    if probs.len() != tokens.len() {
        return Err(Error::Adapter(format!(
            "language model scored {} of {} tokens",
            probs.len(),
            tokens.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::Adapter(format!("token probability {p} outside (0, 1]")));
    }
    Ok(probs.iter().sum::<f64>() / probs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bertscore_p: f64,
    pub bertscore_r: f64,
    pub bertscore_f1: f64,
    /// Mean expectedness of the candidates.
    pub expectedness: f64,
    pub n_items: usize,
}

pub fn evaluate_outputs(
    candidates: &[String],
    references: &[String],
    embedder: &dyn Embedder,
    lm: &dyn LanguageModel,
    exec: Execution,
) -> Result<MetricReport> {
    let sim = semantic_similarity_with(candidates, references, embedder, exec)?;
    let exp = exec::map(candidates, exec, |c| expectedness(c, lm))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport {
        bertscore_p: sim.precision,
        bertscore_r: sim.recall,
        bertscore_f1: sim.f1,
        expectedness: exp.iter().sum::<f64>() / exp.len() as f64,
        n_items: candidates.len(),
    })
}

/// Worker agreement with aggregate over an items x raters matrix of binary
/// labels. A tied majority counts as positive.
pub fn wawa_agreement(labels: &[Vec<bool>]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Argument("no items".into()));
    }
    let mut agree = 0usize;
    let mut total = 0usize;
    for (i, votes) in labels.iter().enumerate() {
        if votes.len() < 2 {
            return Err(Error::Argument(format!("item {i} has fewer than two raters")));
        }
        let positives = votes.iter().filter(|v| **v).count();
        let majority = 2 * positives >= votes.len();
        agree += votes.iter().filter(|v| **v == majority).count();
        total += votes.len();
    }
    Ok(agree as f64 / total as f64)
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        None
    } else {
        Some(cov / (va * vb).sqrt())
    }
}

/// Spearman correlation between two rating vectors, `None` when either is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Mean pairwise Spearman correlation over an items x raters matrix.
pub fn spearman_iaa(ratings: &[Vec<f64>]) -> Result<f64> {
    let raters = ratings.first().map(Vec::len).unwrap_or(0);
    if raters < 2 {
        return Err(Error::Argument("need at least two raters".into()));
    }
    if ratings.iter().any(|r| r.len() != raters) {
        return Err(Error::Argument("every item needs a rating from every rater".into()));
    }
    if ratings.len() < 2 {
        return Err(Error::Argument("need at least two items".into()));
    }
    let column = |j: usize| -> Vec<f64> { ratings.iter().map(|r| r[j]).collect() };
    let mut sum = 0.0;
    let mut used = 0usize;
    for a in 0..raters {
        for b in a + 1..raters {
            match spearman(&column(a), &column(b)) {
                Some(rho) => {
                    sum += rho;
                    used += 1;
                }
                None => warn!("raters {a} and {b}: constant ratings, pair skipped"),
            }
        }
    }
    if used == 0 {
        return Err(Error::Argument("every rater pair has a constant rating vector".into()));
    }
    Ok(sum / used as f64)
}

/// [`spearman_iaa`] per dimension (e.g. one per relation rule), averaged.
pub fn spearman_iaa_dimensions(dimensions: &[Vec<Vec<f64>>]) -> Result<f64> {
    if dimensions.is_empty() {
        return Err(Error::Argument("no dimensions".into()));
    }
    let scores = dimensions.iter().map(|d| spearman_iaa(d)).collect::<Result<Vec<_>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

fn mean_embedding(sentence: &str, embedder: &dyn Embedder) -> Option<Vec<f64>> {
    let vectors: Vec<Vec<f64>> = text::tokenize(sentence).iter().filter_map(|t| embedder.embed(t)).collect();
    let first = vectors.first()?;
    let mut mean = vec![0.0; first.len()];
    for v in &vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x / vectors.len() as f64;
        }
    }
    Some(mean)
}

/// Index of the corpus sentence whose mean token embedding is most
/// cosine-similar to the prompt. Earlier sentences win ties.
pub fn sim_retrieval_index(prompt: &Prompt, corpus: &[String], embedder: &dyn Embedder, exec: Execution) -> Result<usize> {
    if corpus.is_empty() {
        return Err(Error::Argument("retrieval corpus is empty".into()));
    }
    let query = mean_embedding(&prompt.text, embedder);
    let scores = exec::map(corpus, exec, |s| match (&query, mean_embedding(s, embedder)) {
        (Some(q), Some(v)) => cosine(q, &v),
        _ => 0.0,
    });
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}

pub fn sim_retrieval(prompt: &Prompt, corpus: &[String], embedder: &dyn Embedder) -> Result<String> {
    sim_retrieval_index(prompt, corpus, embedder, Execution::default()).map(|i| corpus[i].clone())
}

/// One row of a human-evaluation sheet. Scores are empty until filled in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanEvalForm {
    pub id: usize,
    pub sentence: String,
    pub is_hyperbole: Option<bool>,
    pub intensity: Option<u8>,
    pub coherency: Option<u8>,
    pub funniness: Option<u8>,
    pub creativity: Option<u8>,
    pub grammaticality: Option<u8>,
}

impl HumanEvalForm {
    pub fn blank(id: usize, sentence: String) -> Self {
        HumanEvalForm {
            id,
            sentence,
            is_hyperbole: None,
            intensity: None,
            coherency: None,
            funniness: None,
            creativity: None,
            grammaticality: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let scales = [
            ("intensity", self.intensity),
            ("coherency", self.coherency),
            ("funniness", self.funniness),
            ("creativity", self.creativity),
            ("grammaticality", self.grammaticality),
        ];
        for (name, v) in scales {
            if let Some(v) = v {
                if !(1..=5).contains(&v) {
                    return Err(Error::Argument(format!("form {}: {name} = {v} outside 1-5", self.id)));
                }
            }
        }
        Ok(())
    }
}

/// Maps a form id back to the position of its sentence in the input batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormKey {
    pub id: usize,
    pub source_index: usize,
}

/// Writes shuffled blank forms as CSV and returns the id-to-input key.
pub fn export_human_eval(sentences: &[String], path: &Path, seed: u64) -> Result<Vec<FormKey>> {
    if sentences.is_empty() {
        return Err(Error::Argument("no sentences to export".into()));
    }
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{other:?}")),
    })?;
    let mut key = Vec::with_capacity(order.len());
    for (i, &src) in order.iter().enumerate() {
        writer.serialize(HumanEvalForm::blank(i + 1, sentences[src].clone()))?;
        key.push(FormKey { id: i + 1, source_index: src });
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(key)
}

/// Reads filled forms back and checks every scale.
pub fn read_human_eval(path: &Path) -> Result<Vec<HumanEvalForm>> {
    let mut reader = csv::Reader::from_path(path)?;
    let forms = reader.deserialize().collect::<std::result::Result<Vec<HumanEvalForm>, _>>()?;
    for f in &forms {
        f.validate()?;
    }
    Ok(forms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table(pairs: &[(&str, &[f64])]) -> TableEmbedder {
        TableEmbedder::new(pairs.iter().map(|(t, v)| (t.to_string(), v.to_vec())).collect())
    }

    #[test]
    fn identical_sentences_score_one() {
        let r = semantic_similarity(&["the party is lit".into()], &["the party is lit".into()], &HashedEmbedder::default()).unwrap();
        assert_abs_diff_eq!(r.f1, 1.0, epsilon = 1e-12);
        // No embeddings at all: exact token identity still matches.
        let r = semantic_similarity(&["zz yy".into()], &["zz yy".into()], &TableEmbedder::default()).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn orthogonal_vocabularies_score_zero() {
        let e = table(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        let r = semantic_similarity(&["a".into()], &["b".into()], &e).unwrap();
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn greedy_matching_by_hand() {
        // cand = [x, y], ref = [u, v]
        // cos(x,u)=1/sqrt2, cos(x,v)=0, cos(y,u)=1/sqrt2, cos(y,v)=1/sqrt2 ... computed below.
        let e = table(&[("x", &[1.0, 0.0]), ("y", &[1.0, 1.0]), ("u", &[1.0, 1.0]), ("v", &[0.0, 1.0])]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // sim matrix rows x,y; cols u,v: [[s, 0], [1, s]]
        // P = (max(s,0) + max(1,s)) / 2 = (s + 1) / 2; R = (max(s,1) + max(0,s)) / 2 = (1 + s) / 2
        let r = pair_similarity("x y", "u v", &e).unwrap();
        assert_abs_diff_eq!(r.precision, (s + 1.0) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.recall, (1.0 + s) / 2.0, epsilon = 1e-12);
        let e2 = table(&[("x", &[1.0, 0.0]), ("y", &[0.0, 1.0]), ("u", &[1.0, 0.0])]);
        // cand [x, y] vs ref [u]: P = (1 + 0) / 2, R = 1
        let r = pair_similarity("x y", "u", &e2).unwrap();
        assert_abs_diff_eq!(r.precision, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.recall, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.f1, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let e = HashedEmbedder::default();
        assert!(matches!(semantic_similarity(&["a".into()], &[], &e), Err(Error::Argument(_))));
    }

    #[test]
    fn expectedness_examples() {
        assert_abs_diff_eq!(expectedness("any sentence at all", &UniformLm { vocab_size: 10 }).unwrap(), 0.1, epsilon = 1e-15);
        let lm = UnigramModel::new([("a".to_string(), 0.2), ("b".to_string(), 0.4)].into(), 1e-7).unwrap();
        assert_abs_diff_eq!(expectedness("a b", &lm).unwrap(), 0.3, epsilon = 1e-15);
        assert!(matches!(expectedness(" ", &lm), Err(Error::Argument(_))));
    }

    #[test]
    fn wawa_examples() {
        assert_eq!(wawa_agreement(&[vec![true, true, true], vec![false, false, false]]).unwrap(), 1.0);
        assert_abs_diff_eq!(wawa_agreement(&[vec![true, true, false]]).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        // tie resolves to positive: 1 of 2 agree
        assert_eq!(wawa_agreement(&[vec![true, false]]).unwrap(), 0.5);
        assert!(matches!(wawa_agreement(&[vec![true]]), Err(Error::Argument(_))));
    }

    #[test]
    fn spearman_extremes() {
        let same: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, i as f64]).collect();
        assert_abs_diff_eq!(spearman_iaa(&same).unwrap(), 1.0, epsilon = 1e-12);
        let reversed: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, (4 - i) as f64]).collect();
        assert_abs_diff_eq!(spearman_iaa(&reversed).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn spearman_skips_constant_raters() {
        let m: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64, i as f64, 3.0]).collect();
        assert_abs_diff_eq!(spearman_iaa(&m).unwrap(), 1.0, epsilon = 1e-12);
        let constant: Vec<Vec<f64>> = (0..4).map(|_| vec![1.0, 1.0]).collect();
        assert!(spearman_iaa(&constant).is_err());
    }

    /// Textbook formula, valid when there are no ties.
    fn spearman_no_ties(a: &[f64], b: &[f64]) -> f64 {
        let ra = average_ranks(a);
        let rb = average_ranks(b);
        let n = a.len() as f64;
        let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
        1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    }

    proptest! {
        #[test]
        fn spearman_matches_rank_difference_formula(perm in Just((0..8).collect::<Vec<usize>>()).prop_shuffle()) {
            let a: Vec<f64> = (0..8).map(|i| i as f64 * 1.5).collect();
            let b: Vec<f64> = perm.iter().map(|&p| p as f64).collect();
            prop_assert!((spearman(&a, &b).unwrap() - spearman_no_ties(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn self_similarity_is_one(words in prop::collection::vec("[a-z]{1,6}", 1..8)) {
            let s = words.join(" ");
            let r = pair_similarity(&s, &s, &HashedEmbedder { dim: 16 }).unwrap();
            prop_assert!((r.f1 - 1.0).abs() < 1e-12);
        }

        #[test]
        fn retrieval_ignores_duplicated_losers(dups in 1usize..4) {
            let e = HashedEmbedder { dim: 32 };
            let prompt = crate::prompt_parser::parse_prompt("the party is lit").unwrap();
            let mut corpus: Vec<String> = vec!["stocks fell sharply".into(), "the party is lit".into(), "rain today".into()];
            let base = sim_retrieval(&prompt, &corpus, &e).unwrap();
            for _ in 0..dups {
                corpus.insert(0, "rain today".into());
            }
            prop_assert_eq!(sim_retrieval(&prompt, &corpus, &e).unwrap(), base);
        }
    }

    #[test]
    fn retrieval_examples() {
        let prompt = crate::prompt_parser::parse_prompt("the party is lit").unwrap();
        let corpus: Vec<String> = vec!["a quiet evening".into(), "the party is lit".into(), "lit candles".into()];
        assert_eq!(sim_retrieval(&prompt, &corpus, &HashedEmbedder::default()).unwrap(), "the party is lit");

        // Hand-set embeddings. Prompt mean = (p + q) / 2 = [0.5, 0.5, 0].
        let e = table(&[
            ("party", &[1.0, 0.0, 0.0]),
            ("lit", &[0.0, 1.0, 0.0]),
            ("dance", &[1.0, 0.0, 0.0]),
            ("fire", &[0.0, 1.0, 0.0]),
            ("snow", &[0.0, 0.0, 1.0]),
        ]);
        let prompt = Prompt { text: "party lit".into(), subject: "party".into(), headword: "lit".into() };
        // cos with "dance"=1/sqrt2, "dance fire"=1, "snow"=0
        let corpus: Vec<String> = vec!["dance".into(), "dance fire".into(), "snow".into()];
        assert_eq!(sim_retrieval(&prompt, &corpus, &e).unwrap(), "dance fire");

        let ortho = table(&[("party", &[1.0, 0.0]), ("a", &[0.0, 1.0]), ("b", &[0.0, 1.0])]);
        let prompt = Prompt { text: "party".into(), subject: "party".into(), headword: "party".into() };
        assert_eq!(sim_retrieval(&prompt, &["a".into(), "b".into()], &ortho).unwrap(), "a");
        assert!(sim_retrieval(&prompt, &[], &ortho).is_err());
    }

    #[test]
    fn human_eval_export() {
        let dir = tempfile::tempdir().unwrap();
        let sentences: Vec<String> = (0..120).map(|i| format!("sentence {i}")).collect();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let key = export_human_eval(&sentences, &a, 9).unwrap();
        export_human_eval(&sentences, &b, 9).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        let forms = read_human_eval(&a).unwrap();
        assert_eq!(forms.len(), 120);
        assert_eq!(forms[0].sentence, sentences[key[0].source_index]);
        let header = fs::read_to_string(&a).unwrap().lines().next().unwrap().to_owned();
        assert_eq!(header, "id,sentence,is_hyperbole,intensity,coherency,funniness,creativity,grammaticality");
        assert!(matches!(export_human_eval(&[], &a, 1), Err(Error::Argument(_))));
    }

    #[test]
    fn filled_forms_are_validated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        fs::write(&path, "id,sentence,is_hyperbole,intensity,coherency,funniness,creativity,grammaticality\n1,x,true,6,1,1,1,1\n").unwrap();
        assert!(matches!(read_human_eval(&path), Err(Error::Argument(_))));
    }
}

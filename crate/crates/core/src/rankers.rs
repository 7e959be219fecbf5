//! Hyperbole classifiers and candidate ranking.
//!
//! The generic classifier scores any sentence. Its default encoder is a
//! logistic model over unigram and bigram indicators; an external encoder can
//! be plugged in through the JSON adapter. The specific classifier is a small
//! MLP over `(p_g, l_ab, l_ac, l_bc)`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::info;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adapter::JsonProcess;
use crate::candidate_generator::ScoredHyperbole;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::kb_data::{strip_keywords, KeywordConfig, LabeledSentence, SplitSet};
use crate::text;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n: usize,
}

impl BinaryMetrics {
    pub fn compute(predicted: &[bool], gold: &[bool]) -> Self {
        let n = predicted.len().min(gold.len());
        if n == 0 {
            return BinaryMetrics::default();
        }
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fneg = 0usize;
        let mut correct = 0usize;
        for (p, g) in predicted.iter().zip(gold) {
            match (p, g) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
            correct += usize::from(p == g);
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fneg);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        BinaryMetrics {
            accuracy: ratio(correct, n),
            precision,
            recall,
            f1,
            n,
        }
    }
}

/// Logistic regression over binary unigram/bigram indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalModel {
    vocabulary: BTreeMap<String, usize>,
    weights: Vec<f64>,
    bias: f64,
}

impl LexicalModel {
    /// An empty model: every sentence scores 0.5.
    pub fn untrained() -> Self {
        LexicalModel {
            vocabulary: BTreeMap::new(),
            weights: Vec::new(),
            bias: 0.0,
        }
    }

    fn ngrams(sentence: &str) -> Vec<String> {
        let tokens = text::tokenize(sentence);
        let mut grams: Vec<String> = tokens.clone();
        grams.extend(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])));
        grams.sort();
        grams.dedup();
        grams
    }

    fn features(&self, sentence: &str) -> Vec<usize> {
        Self::ngrams(sentence)
            .iter()
            .filter_map(|g| self.vocabulary.get(g).copied())
            .collect()
    }

    fn logit(&self, features: &[usize]) -> f64 {
        let scale = if features.is_empty() { 0.0 } else { 1.0 / (features.len() as f64).sqrt() };
        self.bias + features.iter().map(|&i| self.weights[i]).sum::<f64>() * scale
    }

    pub fn probability(&self, sentence: &str) -> f64 {
        sigmoid(self.logit(&self.features(sentence)))
    }

    fn fit(texts: &[String], labels: &[bool], config: &GenericConfig) -> Self {
        let mut vocabulary = BTreeMap::new();
        for t in texts {
            for g in Self::ngrams(t) {
                let next = vocabulary.len();
                vocabulary.entry(g).or_insert(next);
            }
        }
        let mut model = LexicalModel {
            weights: vec![0.0; vocabulary.len()],
            vocabulary,
            bias: 0.0,
        };
        let encoded: Vec<Vec<usize>> = texts.iter().map(|t| model.features(t)).collect();
        let mut order: Vec<usize> = (0..texts.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let x = &encoded[i];
                let scale = if x.is_empty() { 0.0 } else { 1.0 / (x.len() as f64).sqrt() };
                let y = if labels[i] { 1.0 } else { 0.0 };
                let grad = sigmoid(model.logit(x)) - y;
                for &j in x {
                    let w = &mut model.weights[j];
                    *w -= config.learning_rate * (grad * scale + config.l2 * *w);
                }
                model.bias -= config.learning_rate * grad;
            }
        }
        model
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderBackend {
    Lexical(LexicalModel),
    /// External encoder: request `{"sentence"}`, response `{"probability"}`.
    Adapter(JsonProcess),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub threshold: f64,
    pub keywords: KeywordConfig,
}

impl Default for GenericConfig {
    fn default() -> Self {
        GenericConfig {
            epochs: 30,
            learning_rate: 0.2,
            l2: 1e-4,
            seed: 0,
            threshold: 0.5,
            keywords: KeywordConfig::default(),
        }
    }
}

/// Sentence-level hyperbole classifier producing `p_g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericClassifier {
    pub encoder: EncoderBackend,
    pub threshold: f64,
    pub keywords: KeywordConfig,
}

impl GenericClassifier {
    pub fn untrained() -> Self {
        GenericClassifier {
            encoder: EncoderBackend::Lexical(LexicalModel::untrained()),
            threshold: 0.5,
            keywords: KeywordConfig::default(),
        }
    }

    pub fn with_adapter(adapter: JsonProcess) -> Self {
        GenericClassifier {
            encoder: EncoderBackend::Adapter(adapter),
            ..Self::untrained()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GenericReport {
    pub n_train: usize,
    pub dev: Option<BinaryMetrics>,
}

/// Trains the lexical encoder on the balanced training split, keywords removed.
pub fn train_generic(splits: &SplitSet, config: &GenericConfig) -> Result<(GenericClassifier, GenericReport)> {
    if splits.train.is_empty() {
        return Err(Error::Argument("empty training split".into()));
    }
    if !splits.is_train_balanced() {
        let (h, l) = SplitSet::label_counts(&splits.train);
        return Err(Error::Argument(format!(
            "training split is unbalanced ({h} hyperbole / {l} literal)"
        )));
    }
    let strip = |rs: &[LabeledSentence]| -> (Vec<String>, Vec<bool>) {
        rs.iter()
            .map(|r| (strip_keywords(&r.text, &config.keywords), r.label.is_hyperbole()))
            .unzip()
    };
    let (texts, labels) = strip(&splits.train);
    let clf = GenericClassifier {
        encoder: EncoderBackend::Lexical(LexicalModel::fit(&texts, &labels, config)),
        threshold: config.threshold,
        keywords: config.keywords.clone(),
    };
    let dev = if splits.dev.is_empty() {
        None
    } else {
        let m = evaluate_generic(&clf, &splits.dev)?;
        info!("generic classifier dev accuracy {:.4}, F1 {:.4}", m.accuracy, m.f1);
        Some(m)
    };
    Ok((
        clf,
        GenericReport {
            n_train: texts.len(),
            dev,
        },
    ))
}

pub fn evaluate_generic(clf: &GenericClassifier, records: &[LabeledSentence]) -> Result<BinaryMetrics> {
    let texts: Vec<String> = records.iter().map(|r| r.text.clone()).collect();
    let probs = score_generic_batch(clf, &texts, Execution::default())?;
    let predicted: Vec<bool> = probs.iter().map(|p| *p >= clf.threshold).collect();
    let gold: Vec<bool> = records.iter().map(|r| r.label.is_hyperbole()).collect();
    Ok(BinaryMetrics::compute(&predicted, &gold))
}

#[derive(Serialize)]
struct EncoderRequest<'a> {
    sentence: &'a str,
}

#[derive(Deserialize)]
struct EncoderResponse {
    probability: f64,
}

/// `p_g` for one sentence. Trigger keywords are removed first.
pub fn score_generic(clf: &GenericClassifier, sentence: &str) -> Result<f64> {
    if sentence.trim().is_empty() {
        return Err(Error::Argument("cannot score an empty sentence".into()));
    }
    let residual = strip_keywords(sentence, &clf.keywords);
    let p = match &clf.encoder {
        EncoderBackend::Lexical(m) => m.probability(&residual),
        EncoderBackend::Adapter(a) => a.call::<_, EncoderResponse>(&EncoderRequest { sentence: &residual })?.probability,
    };
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Adapter(format!("encoder returned probability {p}")));
    }
    Ok(p)
}

pub fn score_generic_batch(clf: &GenericClassifier, sentences: &[String], exec: Execution) -> Result<Vec<f64>> {
    exec::map(sentences, exec, |s| score_generic(clf, s))
        .into_iter()
        .collect()
}

pub const FEATURE_COUNT: usize = 4;
pub const HIDDEN_SIZES: [usize; 2] = [8, 4];

/// One training row for the specific classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecificExample {
    /// `(p_g, l_ab, l_ac, l_bc)`
    pub features: Vec<f64>,
    pub label: bool,
}

/// Per-feature standardization fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: [f64; FEATURE_COUNT],
    pub std: [f64; FEATURE_COUNT],
}

impl FeatureScaler {
    pub fn identity() -> Self {
        FeatureScaler {
            mean: [0.0; FEATURE_COUNT],
            std: [1.0; FEATURE_COUNT],
        }
    }

    pub fn fit(rows: &[[f64; FEATURE_COUNT]]) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = [0.0; FEATURE_COUNT];
        let mut std = [0.0; FEATURE_COUNT];
        for r in rows {
            for j in 0..FEATURE_COUNT {
                mean[j] += r[j] / n;
            }
        }
        for r in rows {
            for j in 0..FEATURE_COUNT {
                std[j] += (r[j] - mean[j]).powi(2) / n;
            }
        }
        for s in &mut std {
            *s = if s.sqrt() > 1e-12 { s.sqrt() } else { 1.0 };
        }
        FeatureScaler { mean, std }
    }

    pub fn transform(&self, row: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        std::array::from_fn(|j| (row[j] - self.mean[j]) / self.std[j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    /// `weights[out][in]`
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            weights: vec![vec![0.0; inputs]; outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Glorot-uniform initialization.
    fn glorot(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (inputs + outputs) as f64).sqrt();
        Dense {
            weights: (0..outputs)
                .map(|_| (0..inputs).map(|_| rng.random_range(-bound..bound)).collect())
                .collect(),
            bias: (0..outputs).map(|_| rng.random_range(-bound..bound)).collect(),
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
            .collect()
    }
}

/// `4 -> 8 -> 4 -> 1` with ReLU hidden units and a logistic output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
}

impl Mlp {
    fn sizes() -> [usize; 4] {
        [FEATURE_COUNT, HIDDEN_SIZES[0], HIDDEN_SIZES[1], 1]
    }

    pub fn zeros() -> Self {
        let s = Self::sizes();
        Mlp {
            layers: s.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    fn random(rng: &mut ChaCha8Rng) -> Self {
        let s = Self::sizes();
        Mlp {
            layers: s.windows(2).map(|w| Dense::glorot(w[0], w[1], rng)).collect(),
        }
    }

    /// Activations of every layer, input first, output probability last.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(acts.last().expect("input present"));
            acts.push(if i == last {
                z.into_iter().map(sigmoid).collect()
            } else {
                z.into_iter().map(|v| v.max(0.0)).collect()
            });
        }
        acts
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.activations(x).last().expect("output present")[0]
    }

    fn zero_grads(&self) -> Vec<Dense> {
        self.layers
            .iter()
            .map(|l| Dense::zeros(l.weights[0].len(), l.bias.len()))
            .collect()
    }

    /// Accumulates cross-entropy gradients for one example.
    fn backprop(&self, x: &[f64], y: f64, grads: &mut [Dense]) {
        let acts = self.activations(x);
        let mut delta = vec![acts.last().expect("output present")[0] - y];
        for l in (0..self.layers.len()).rev() {
            let input = &acts[l];
            for (o, d) in delta.iter().enumerate() {
                grads[l].bias[o] += d;
                for (i, a) in input.iter().enumerate() {
                    grads[l].weights[o][i] += d * a;
                }
            }
            if l == 0 {
                break;
            }
            delta = (0..input.len())
                .map(|i| {
                    if input[i] <= 0.0 {
                        0.0
                    } else {
                        delta
                            .iter()
                            .enumerate()
                            .map(|(o, d)| d * self.layers[l].weights[o][i])
                            .sum()
                    }
                })
                .collect();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecificConfig {
    /// L2 penalty, `alpha / 2 * |W|^2 / n`.
    pub alpha: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub holdout_fraction: f64,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for SpecificConfig {
    fn default() -> Self {
        SpecificConfig {
            alpha: 1e-4,
            learning_rate: 1e-2,
            epochs: 300,
            batch_size: 32,
            holdout_fraction: 0.2,
            seed: 0,
            threshold: 0.5,
        }
    }
}

/// MLP over `(p_g, l_ab, l_ac, l_bc)` producing `p_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecificClassifier {
    pub mlp: Mlp,
    pub scaler: FeatureScaler,
    pub threshold: f64,
}

impl SpecificClassifier {
    /// All-zero weights and identity scaling; scores 0.5 everywhere.
    pub fn zeroed() -> Self {
        SpecificClassifier {
            mlp: Mlp::zeros(),
            scaler: FeatureScaler::identity(),
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SpecificReport {
    pub n_train: usize,
    pub n_holdout: usize,
    pub train_accuracy: f64,
    pub holdout_accuracy: Option<f64>,
}

fn checked_features(features: &[f64]) -> Result<[f64; FEATURE_COUNT]> {
    let row: [f64; FEATURE_COUNT] = features.try_into().map_err(|_| {
        Error::Argument(format!(
            "expected {FEATURE_COUNT} features (p_g, l_ab, l_ac, l_bc), got {}",
            features.len()
        ))
    })?;
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument(format!("non-finite feature in {row:?}")));
    }
    Ok(row)
}

/// Fits the MLP on every example with Adam and mini-batches.
pub fn fit_specific(examples: &[SpecificExample], config: &SpecificConfig) -> Result<SpecificClassifier> {
    let rows = examples
        .iter()
        .map(|e| checked_features(&e.features))
        .collect::<Result<Vec<_>>>()?;
    let positives = examples.iter().filter(|e| e.label).count();
    if positives < 2 || examples.len() - positives < 2 {
        return Err(Error::Argument("need at least two examples of each class".into()));
    }
    let scaler = FeatureScaler::fit(&rows);
    let xs: Vec<[f64; FEATURE_COUNT]> = rows.iter().map(|r| scaler.transform(r)).collect();
    let ys: Vec<f64> = examples.iter().map(|e| if e.label { 1.0 } else { 0.0 }).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mlp = Mlp::random(&mut rng);
    let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut m = mlp.zero_grads();
    let mut v = mlp.zero_grads();
    let mut step = 0i32;
    let n = xs.len() as f64;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size.max(1)) {
            let mut grads = mlp.zero_grads();
            for &i in batch {
                mlp.backprop(&xs[i], ys[i], &mut grads);
            }
            step += 1;
            let bs = batch.len() as f64;
            let c1 = 1.0 - beta1.powi(step);
            let c2 = 1.0 - beta2.powi(step);
            for (l, layer) in mlp.layers.iter_mut().enumerate() {
                let update = |param: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *param -= config.learning_rate * (*m / c1) / ((*v / c2).sqrt() + eps);
                };
                for o in 0..layer.bias.len() {
                    update(&mut layer.bias[o], grads[l].bias[o] / bs, &mut m[l].bias[o], &mut v[l].bias[o]);
                    for i in 0..layer.weights[o].len() {
                        let g = grads[l].weights[o][i] / bs + config.alpha * layer.weights[o][i] / n;
                        update(&mut layer.weights[o][i], g, &mut m[l].weights[o][i], &mut v[l].weights[o][i]);
                    }
                }
            }
        }
    }
    Ok(SpecificClassifier {
        mlp,
        scaler,
        threshold: config.threshold,
    })
}

/// Shuffles under the seed, holds out a fraction, fits on the rest.
pub fn train_specific(
    examples: &[SpecificExample],
    config: &SpecificConfig,
) -> Result<(SpecificClassifier, SpecificReport)> {
    for e in examples {
        checked_features(&e.features)?;
    }
    let mut shuffled = examples.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed));
    let n_holdout = (shuffled.len() as f64 * config.holdout_fraction.clamp(0.0, 0.9)).round() as usize;
    let (holdout, train) = shuffled.split_at(n_holdout);
    let clf = fit_specific(train, config)?;
    let train_accuracy = specific_accuracy(&clf, train)?;
    let holdout_accuracy = if holdout.is_empty() {
        None
    } else {
        Some(specific_accuracy(&clf, holdout)?)
    };
    if let Some(acc) = holdout_accuracy {
        info!("specific classifier held-out accuracy {acc:.4}");
    }
    Ok((
        clf,
        SpecificReport {
            n_train: train.len(),
            n_holdout,
            train_accuracy,
            holdout_accuracy,
        },
    ))
}

pub fn specific_accuracy(clf: &SpecificClassifier, examples: &[SpecificExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Argument("no examples".into()));
    }
    let mut correct = 0;
    for e in examples {
        let p = score_specific(clf, &e.features)?;
        correct += usize::from((p >= clf.threshold) == e.label);
    }
    Ok(correct as f64 / examples.len() as f64)
}

/// `p_s` for one feature vector.
pub fn score_specific(clf: &SpecificClassifier, features: &[f64]) -> Result<f64> {
    let row = checked_features(features)?;
    Ok(clf.mlp.predict(&clf.scaler.transform(&row)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RankMode {
    #[value(name = "p_g")]
    PG,
    #[default]
    #[value(name = "p_s")]
    PS,
    /// `p_g`, then lower `l_ac`.
    #[value(name = "p_g_and_l_ac")]
    PGAndLAc,
    /// `p_g`, then lower `l_ab`.
    #[value(name = "p_g_and_l_ab")]
    PGAndLAb,
}

/// Sorts by the selected score, descending and stable, and assigns ranks 1..N.
pub fn rank_candidates(mut scored: Vec<ScoredHyperbole>, by: RankMode) -> Result<Vec<ScoredHyperbole>> {
    if by == RankMode::PS {
        if let Some(missing) = scored.iter().find(|s| s.p_s.is_none()) {
            return Err(Error::Config(format!("no p_s for {:?}; train a specific classifier", missing.sentence)));
        }
    }
    scored.sort_by(|a, b| match by {
        RankMode::PG => b.p_g.total_cmp(&a.p_g),
        RankMode::PS => b.p_s.unwrap_or(0.0).total_cmp(&a.p_s.unwrap_or(0.0)),
        RankMode::PGAndLAc => b.p_g.total_cmp(&a.p_g).then(a.candidate.l_ac.total_cmp(&b.candidate.l_ac)),
        RankMode::PGAndLAb => b.p_g.total_cmp(&a.p_g).then(a.candidate.l_ab.total_cmp(&b.candidate.l_ab)),
    });
    for (i, s) in scored.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    Ok(scored)
}

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Generic,
    Specific,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactManifest {
    pub version: u32,
    pub kind: ModelKind,
    /// SHA-256 of the training configuration JSON.
    pub config_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Generic(GenericClassifier),
    Specific(SpecificClassifier),
}

pub fn fingerprint<T: Serialize>(config: &T) -> Result<String> {
    let digest = Sha256::digest(serde_json::to_vec(config)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Writes `manifest.json`, `model.json` and `config.json` into `dir`.
pub fn save_model<C: Serialize>(dir: &Path, model: &Model, config: &C) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = ArtifactManifest {
        version: ARTIFACT_VERSION,
        kind: match model {
            Model::Generic(_) => ModelKind::Generic,
            Model::Specific(_) => ModelKind::Specific,
        },
        config_fingerprint: fingerprint(config)?,
    };
    let write = |name: &str, bytes: Vec<u8>| {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    };
    write("manifest.json", serde_json::to_vec_pretty(&manifest)?)?;
    write("config.json", serde_json::to_vec_pretty(config)?)?;
    write("model.json", serde_json::to_vec(model)?)?;
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<(ArtifactManifest, Model)> {
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read(&path).map_err(|e| Error::io(path, e))
    };
    let manifest: ArtifactManifest = serde_json::from_slice(&read("manifest.json")?)?;
    if manifest.version != ARTIFACT_VERSION {
        return Err(Error::Config(format!(
            "{}: artifact version {} (expected {ARTIFACT_VERSION})",
            dir.display(),
            manifest.version
        )));
    }
    let model: Model = serde_json::from_slice(&read("model.json")?)?;
    let consistent = matches!(
        (&manifest.kind, &model),
        (ModelKind::Generic, Model::Generic(_)) | (ModelKind::Specific, Model::Specific(_))
    );
    if !consistent {
        return Err(Error::Config(format!("{}: manifest kind does not match model", dir.display())));
    }
    Ok((manifest, model))
}

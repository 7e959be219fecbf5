//! Clause candidate generation: subjects (B) from the prompt, predicates (C)
//! from the prompt and from each subject, sentence assembly and grammar repair.

use std::collections::{BTreeMap, HashMap};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::adapter::JsonProcess;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::kb_data::Relation;
use crate::knowledge_engine::{self, Backends, Direction, InferenceBeam, UnigramModel};
use crate::prompt_parser::{self, AbRelation, BcRelation, Prompt, SensicalRule};
use crate::text::{self, is_in, PLURAL_PRONOUNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BOrigin {
    RelatedToSubject,
    HasPropertyOfHeadword,
    SubjectItself,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum COrigin {
    CausalFromA,
    CharacteristicOfB,
}

/// A `(B, C)` pair with its likelihood features and relation provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseCandidate {
    pub b: String,
    pub c: String,
    pub l_ab: f64,
    pub l_ac: f64,
    pub l_bc: f64,
    pub rule: u8,
    pub b_origin: BOrigin,
    pub c_origin: COrigin,
    /// Relation that produced C.
    pub c_relation: Relation,
}

/// Maps provenance onto the six-rule schema.
///
/// C inferred from A, or produced by `NotCapableOf` from B, is something B
/// cannot do (rules 1-3); any other C from B is a characteristic action
/// (rules 4-6).
pub fn rule_for(b_origin: BOrigin, c_origin: COrigin, c_relation: Relation) -> SensicalRule {
    let ab = match b_origin {
        BOrigin::RelatedToSubject => AbRelation::RelatedToSubject,
        BOrigin::HasPropertyOfHeadword => AbRelation::SharesAttributeWithHeadword,
        BOrigin::SubjectItself => AbRelation::IdenticalToSubject,
    };
    let bc = match (c_origin, c_relation) {
        (COrigin::CausalFromA, _) | (_, Relation::NotCapableOf) => BcRelation::NotCapableOf,
        _ => BcRelation::CharacteristicAction,
    };
    SensicalRule::from_relations(ab, bc)
}

impl ClauseCandidate {
    pub fn sensical_rule(&self) -> Option<SensicalRule> {
        SensicalRule::by_id(self.rule)
    }

    /// Classifier input `(p_g, l_ab, l_ac, l_bc)`.
    pub fn features(&self, p_g: f64) -> [f64; 4] {
        [p_g, self.l_ab, self.l_ac, self.l_bc]
    }
}

/// A generated sentence with its classifier scores and rank within a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHyperbole {
    pub prompt: String,
    pub sentence: String,
    pub candidate: ClauseCandidate,
    pub p_g: f64,
    #[serde(default)]
    pub p_s: Option<f64>,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub beam_width: usize,
    pub seed: u64,
    /// Apply unigram rescoring to reverse-model beams.
    pub rescore_reverse: bool,
    /// Apply unigram rescoring to forward-model beams.
    pub rescore_forward: bool,
    /// Beams requested per kept beam when rescoring.
    pub rescore_oversample: usize,
    pub execution: Execution,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            beam_width: 5,
            seed: 0,
            rescore_reverse: true,
            rescore_forward: false,
            rescore_oversample: 2,
            execution: Execution::default(),
        }
    }
}

struct Generator<'a> {
    backends: &'a Backends,
    unigrams: Option<&'a UnigramModel>,
    config: &'a GenerationConfig,
}

impl Generator<'_> {
    fn phrases(&self, head: &str, relation: Relation, direction: Direction) -> Result<Vec<String>> {
        let rescore = self.unigrams.filter(|_| match direction {
            Direction::Forward => self.config.rescore_forward,
            Direction::Reverse => self.config.rescore_reverse,
        });
        let backend = self.backends.for_direction(direction);
        let width = self.config.beam_width;
        let beams = match rescore {
            Some(unigrams) => {
                let pool = knowledge_engine::infer(
                    head,
                    relation,
                    direction,
                    width * self.config.rescore_oversample.max(1),
                    self.config.seed,
                    backend,
                )?;
                if pool.is_empty() {
                    return Ok(Vec::new());
                }
                knowledge_engine::rescore_beams_with(&pool, unigrams, Execution::Sequential)?
                    .into_iter()
                    .take(width)
                    .map(|r| r.beam)
                    .collect()
            }
            None => knowledge_engine::infer(head, relation, direction, width, self.config.seed, backend)?,
        };
        Ok(beams.iter().map(InferenceBeam::phrase).collect())
    }

    fn likelihood(&self, head: &str, relation: Relation, tail: &str, direction: Direction) -> Result<f64> {
        knowledge_engine::token_likelihood(head, relation, tail, direction, self.backends.for_direction(direction))
    }

    /// Lowest likelihood of `tail` over a relation set.
    fn best_likelihood(&self, head: &str, relations: &[Relation], tail: &str) -> Result<f64> {
        relations.iter().try_fold(f64::INFINITY, |best, r| {
            Ok(best.min(self.likelihood(head, *r, tail, Direction::Forward)?))
        })
    }
}

struct SubjectCandidate {
    b: String,
    origin: BOrigin,
    l_ab: f64,
}

/// Generates every `(B, C)` candidate for a prompt.
///
/// B comes from reverse `RelatedTo` on the subject, reverse `HasProperty` on
/// the headword, and the subject itself. Each B is paired with the causal
/// predicates of the whole prompt and with its own predicates. The result is
/// sorted by rule id, then B, then C.
pub fn gen_hyperbole(
    prompt: &Prompt,
    backends: &Backends,
    unigrams: Option<&UnigramModel>,
    config: &GenerationConfig,
) -> Result<Vec<ClauseCandidate>> {
    if config.beam_width == 0 {
        return Err(Error::Argument("beam width must be at least 1".into()));
    }
    let gen = Generator {
        backends,
        unigrams,
        config,
    };

    let subject_key = text::normalize(&prompt.subject);
    let mut subjects: Vec<SubjectCandidate> = Vec::new();
    let mut push_subject = |b: String, origin: BOrigin, source: &str, relation: Relation| -> Result<()> {
        let key = text::normalize(&b);
        if key.is_empty() || subjects.iter().any(|s| text::normalize(&s.b) == key) {
            return Ok(());
        }
        let origin = if key == subject_key { BOrigin::SubjectItself } else { origin };
        let l_ab = gen.likelihood(source, relation, &b, Direction::Reverse)?;
        subjects.push(SubjectCandidate { b, origin, l_ab });
        Ok(())
    };
    for b in gen.phrases(&prompt.subject, Relation::RelatedTo, Direction::Reverse)? {
        push_subject(b, BOrigin::RelatedToSubject, &prompt.subject, Relation::RelatedTo)?;
    }
    for b in gen.phrases(&prompt.headword, Relation::HasProperty, Direction::Reverse)? {
        push_subject(b, BOrigin::HasPropertyOfHeadword, &prompt.headword, Relation::HasProperty)?;
    }
    push_subject(prompt.subject.clone(), BOrigin::SubjectItself, &prompt.subject, Relation::RelatedTo)?;
    if subjects.is_empty() {
        return Err(Error::Generation(format!("no clause subjects for {:?}", prompt.text)));
    }

    let mut causal: Vec<(String, Relation)> = Vec::new();
    for relation in Relation::CAUSAL {
        for c in gen.phrases(&prompt.text, relation, Direction::Forward)? {
            causal.push((c, relation));
        }
    }
    let mut l_ac_cache: HashMap<String, f64> = HashMap::new();
    for (c, _) in &causal {
        if !l_ac_cache.contains_key(c) {
            l_ac_cache.insert(c.clone(), gen.best_likelihood(&prompt.text, &Relation::CAUSAL, c)?);
        }
    }

    let per_subject = exec::map(&subjects, config.execution, |s| -> Result<Vec<ClauseCandidate>> {
        let mut predicates: Vec<(String, COrigin, Relation)> =
            causal.iter().map(|(c, r)| (c.clone(), COrigin::CausalFromA, *r)).collect();
        for relation in Relation::CHARACTERISTIC {
            for c in gen.phrases(&s.b, relation, Direction::Forward)? {
                predicates.push((c, COrigin::CharacteristicOfB, relation));
            }
        }
        // Duplicate C text keeps the provenance with the lowest likelihood.
        let mut by_text: BTreeMap<String, ClauseCandidate> = BTreeMap::new();
        for (c, c_origin, c_relation) in predicates {
            let l_ac = match l_ac_cache.get(&c) {
                Some(l) => *l,
                None => gen.best_likelihood(&prompt.text, &Relation::CAUSAL, &c)?,
            };
            let l_bc = gen.best_likelihood(&s.b, &Relation::CHARACTERISTIC, &c)?;
            let candidate = ClauseCandidate {
                rule: rule_for(s.origin, c_origin, c_relation).id,
                b: s.b.clone(),
                c: c.clone(),
                l_ab: s.l_ab,
                l_ac,
                l_bc,
                b_origin: s.origin,
                c_origin,
                c_relation,
            };
            let own = |cand: &ClauseCandidate| match cand.c_origin {
                COrigin::CausalFromA => cand.l_ac,
                COrigin::CharacteristicOfB => cand.l_bc,
            };
            let key = text::normalize(&c);
            match by_text.get(&key) {
                Some(prev) if own(prev) <= own(&candidate) => {}
                _ => {
                    by_text.insert(key, candidate);
                }
            }
        }
        if by_text.is_empty() {
            warn!("no predicates for clause subject {:?}; dropping it", s.b);
        }
        Ok(by_text.into_values().collect())
    });

    let mut candidates = Vec::new();
    for group in per_subject {
        candidates.extend(group?);
    }
    if candidates.is_empty() {
        return Err(Error::Generation(format!("no clause predicates for {:?}", prompt.text)));
    }
    candidates.sort_by(|x, y| {
        (x.rule, text::normalize(&x.b), text::normalize(&x.c)).cmp(&(y.rule, text::normalize(&y.b), text::normalize(&y.c)))
    });
    Ok(candidates)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    /// `<A.1> is so <A.2> that even <B> <C>!`
    #[default]
    Default,
    /// `<A.1> is so <A.2> that <B> even <C>!`
    Paper,
}

pub fn assemble_sentence(prompt: &Prompt, candidate: &ClauseCandidate, template: Template) -> String {
    let c = candidate.c.trim().trim_end_matches(['.', '!', '?']);
    let body = match template {
        Template::Default => format!(
            "{} is so {} that even {} {}!",
            prompt.subject.trim(),
            prompt.headword.trim(),
            candidate.b.trim(),
            c
        ),
        Template::Paper => format!(
            "{} is so {} that {} even {}!",
            prompt.subject.trim(),
            prompt.headword.trim(),
            candidate.b.trim(),
            c
        ),
    };
    text::capitalize_first(&text::collapse_whitespace(&body))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GecMode {
    Adapter,
    #[default]
    Rules,
    Off,
}

#[derive(Serialize)]
struct GecRequest<'a> {
    sentence: &'a str,
}

#[derive(Deserialize)]
struct GecResponse {
    corrected: String,
}

/// Grammar repair. Adapter mode sends `{"sentence"}` and expects
/// `{"corrected"}`; when the adapter is missing or fails, the built-in rules run.
pub fn correct_grammar(sentence: &str, mode: GecMode, adapter: Option<&JsonProcess>) -> String {
    match mode {
        GecMode::Off => sentence.to_owned(),
        GecMode::Rules => rules::correct(sentence),
        GecMode::Adapter => {
            let result = adapter
                .ok_or_else(|| Error::Config("no grammar correction adapter configured".into()))
                .and_then(|a| a.call::<_, GecResponse>(&GecRequest { sentence }));
            match result {
                Ok(resp) if !resp.corrected.trim().is_empty() => resp.corrected,
                Ok(_) => {
                    warn!("grammar adapter returned an empty sentence; using rules");
                    rules::correct(sentence)
                }
                Err(e) => {
                    warn!("grammar adapter unavailable ({e}); using rules");
                    rules::correct(sentence)
                }
            }
        }
    }
}

/// Rule-based fixes: subject-verb agreement, a/an, capitalization and
/// terminal punctuation. Only inflections and articles are ever rewritten.
pub mod rules {
    use super::*;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    enum Number {
        First,
        Singular,
        Plural,
    }

    pub fn correct(sentence: &str) -> String {
        let mut words: Vec<String> = sentence.split_whitespace().map(String::from).collect();
        if words.is_empty() {
            return String::new();
        }
        let keys = |words: &[String]| -> Vec<String> {
            words.iter().map(|w| text::trim_punct(w).to_lowercase()).collect()
        };

        let k = keys(&words);
        if let Some(len) = prompt_parser::chunk_subject(&k) {
            agree(&mut words, &k, 0, len);
        }
        let k = keys(&words);
        if let Some(anchor) = prompt_parser::locate_pattern(&k) {
            agree(&mut words, &k, anchor.clause_start, anchor.subject_len);
        }

        fix_articles(&mut words);
        let mut out = text::capitalize_first(&words.join(" "));
        if !out.ends_with(['.', '!', '?']) {
            out.push('.');
        }
        out
    }

    fn number_of(subject: &[String]) -> Number {
        let head = subject.last().map(String::as_str).unwrap_or("");
        if subject.len() == 1 {
            if head == "i" {
                return Number::First;
            }
            if is_in(PLURAL_PRONOUNS, head) {
                return Number::Plural;
            }
            if is_in(text::PRONOUNS, head) {
                return Number::Singular;
            }
        }
        let det = subject.first().map(String::as_str).unwrap_or("");
        if ["a", "an", "this", "that", "every", "each", "one", "another"].contains(&det) && subject.len() > 1 {
            return Number::Singular;
        }
        if ["these", "those", "many", "few", "several", "both", "two", "three", "all"].contains(&det)
            && subject.len() > 1
        {
            return Number::Plural;
        }
        let plural_noun = head.ends_with('s')
            && !head.ends_with("ss")
            && !head.ends_with("us")
            && !head.ends_with("is")
            && head.len() > 2;
        if plural_noun {
            Number::Plural
        } else {
            Number::Singular
        }
    }

    /// Inflects the verb following `subject_len` tokens at `start`.
    fn agree(words: &mut [String], keys: &[String], start: usize, subject_len: usize) {
        let mut verb = start + subject_len;
        if keys.get(verb).is_some_and(|k| k == "even") {
            verb += 1;
        }
        let Some(current) = keys.get(verb) else { return };
        let number = number_of(&keys[start..start + subject_len]);
        let fixed: Option<String> = match (current.as_str(), number) {
            ("is" | "are" | "am", Number::First) => Some("am".into()),
            ("is" | "am", Number::Plural) => Some("are".into()),
            ("are" | "am", Number::Singular) => Some("is".into()),
            ("were", Number::First | Number::Singular) => Some("was".into()),
            ("was", Number::Plural) => Some("were".into()),
            ("has", Number::First | Number::Plural) => Some("have".into()),
            ("have", Number::Singular) => Some("has".into()),
            ("does", Number::First | Number::Plural) => Some("do".into()),
            ("do", Number::Singular) => Some("does".into()),
            (v, n) if !is_in(text::AUXILIARIES, v) => text::verb_base(v).and_then(|base| {
                let third = text::third_person(&base);
                if v != base && v != third {
                    return None;
                }
                Some(if n == Number::Singular { third } else { base })
            }),
            _ => None,
        };
        if let Some(new) = fixed {
            if &new != current {
                words[verb] = replace_core(&words[verb], &new);
            }
        }
    }

    fn replace_core(word: &str, new: &str) -> String {
        let core = text::trim_punct(word);
        let start = word.find(core).unwrap_or(0);
        let new = if core.chars().next().is_some_and(char::is_uppercase) {
            text::capitalize_first(new)
        } else {
            new.to_owned()
        };
        format!("{}{}{}", &word[..start], new, &word[start + core.len()..])
    }

    fn wants_an(next: &str) -> bool {
        let w = next.to_lowercase();
        const CONSONANT_SOUND: [&str; 7] = ["uni", "use", "usu", "one", "once", "eu", "ure"];
        const SILENT_H: [&str; 4] = ["hour", "honest", "honor", "heir"];
        if CONSONANT_SOUND.iter().any(|p| w.starts_with(p)) {
            return false;
        }
        if SILENT_H.iter().any(|p| w.starts_with(p)) {
            return true;
        }
        w.chars().next().is_some_and(text::is_vowel)
    }

    fn fix_articles(words: &mut [String]) {
        for i in 0..words.len().saturating_sub(1) {
            let core = text::trim_punct(&words[i]).to_lowercase();
            if core != "a" && core != "an" {
                continue;
            }
            let next = text::trim_punct(&words[i + 1]).to_owned();
            if next.is_empty() {
                continue;
            }
            let want = if wants_an(&next) { "an" } else { "a" };
            if core != want {
                words[i] = replace_core(&words[i], want);
            }
        }
    }
}

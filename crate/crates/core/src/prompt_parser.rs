//! Shallow parsing of literal prompts and of `so ... that` / `so ... even`
//! sentences, plus the six-rule relation schema.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, MissingPart, Result};
use crate::text::{self, is_in, AUXILIARIES, DETERMINERS, LINKING_VERBS, PRONOUNS};

/// A literal prompt (A) with its subject (A.1) and headword (A.2).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    pub subject: String,
    pub headword: String,
}

impl Prompt {
    /// The prompt with `so` inserted before the headword.
    pub fn intensified(&self) -> String {
        let words: Vec<&str> = self.text.split_whitespace().collect();
        let skip = self.subject.split_whitespace().count();
        let pos = words
            .iter()
            .enumerate()
            .skip(skip)
            .find(|(_, w)| text::trim_punct(w).eq_ignore_ascii_case(&self.headword))
            .map(|(i, _)| i);
        match pos {
            Some(i) => {
                let mut out: Vec<&str> = words[..i].to_vec();
                out.push("so");
                out.extend(&words[i..]);
                out.join(" ")
            }
            None => format!("{} so {}", self.text, self.headword),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connective {
    That,
    Even,
    ThatEven,
}

impl Connective {
    pub fn as_str(self) -> &'static str {
        match self {
            Connective::That => "that",
            Connective::Even => "even",
            Connective::ThatEven => "that even",
        }
    }
}

/// A `so...that` sentence split into prompt (A), clause subject (B) and
/// clause predicate (C).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternPartition {
    pub prompt: Prompt,
    pub clause_subject: String,
    pub clause_predicate: String,
    pub connective: Connective,
}

impl PatternPartition {
    /// `A(so) + connective + B + C`.
    pub fn reassemble(&self) -> String {
        format!(
            "{} {} {} {}",
            self.prompt.intensified(),
            self.connective.as_str(),
            self.clause_subject,
            self.clause_predicate
        )
    }
}

/// Relation between the clause subject B and the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbRelation {
    RelatedToSubject,
    SharesAttributeWithHeadword,
    IdenticalToSubject,
}

/// Relation between B and the predicate C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcRelation {
    NotCapableOf,
    CharacteristicAction,
}

/// One of the six sensical A/B/C relation combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensicalRule {
    pub id: u8,
    pub ab_relation: AbRelation,
    pub bc_relation: BcRelation,
}

const AB_ORDER: [AbRelation; 3] = [
    AbRelation::RelatedToSubject,
    AbRelation::SharesAttributeWithHeadword,
    AbRelation::IdenticalToSubject,
];

impl SensicalRule {
    /// Rules 1-3 pair each AB relation with `NotCapableOf`, rules 4-6 with
    /// `CharacteristicAction`.
    pub fn table() -> [SensicalRule; 6] {
        std::array::from_fn(|i| SensicalRule {
            id: i as u8 + 1,
            ab_relation: AB_ORDER[i % 3],
            bc_relation: if i < 3 {
                BcRelation::NotCapableOf
            } else {
                BcRelation::CharacteristicAction
            },
        })
    }

    pub fn by_id(id: u8) -> Option<SensicalRule> {
        Self::table().into_iter().find(|r| r.id == id)
    }

    pub fn from_relations(ab: AbRelation, bc: BcRelation) -> SensicalRule {
        Self::table()
            .into_iter()
            .find(|r| r.ab_relation == ab && r.bc_relation == bc)
            .expect("rule table covers the full cross product")
    }
}

impl fmt::Display for SensicalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {} ({:?} / {:?})", self.id, self.ab_relation, self.bc_relation)
    }
}

const INTENSIFIERS: &[&str] = &[
    "so", "very", "really", "too", "extremely", "quite", "super", "incredibly", "pretty", "not",
    "always", "just", "totally", "absolutely",
];

const NON_HEADS: &[&str] = &[
    "that", "even", "as", "far", "to", "the", "a", "an", "i", "he", "she", "it", "we", "they",
    "you", "and", "or", "but", "if", "then", "what",
];

const CLAUSE_BOUNDARIES: &[&str] = &[
    "even", "just", "never", "still", "also", "literally", "actually", "always", "in", "on", "at",
    "into", "onto", "with", "from", "of", "for", "by", "to", "up", "down", "away", "out", "off",
    "and", "or", "but", "not",
];

/// Parses a literal clause into subject and headword.
pub fn parse_prompt(sentence: &str) -> Result<Prompt> {
    let words = text::words(sentence);
    let keys: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let err = |missing| Error::Parse {
        text: sentence.to_owned(),
        missing,
    };
    if words.is_empty() {
        return Err(err(MissingPart::Subject));
    }

    let (subject_end, predicate_start) = match keys
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, k)| LINKING_VERBS.contains(&k.as_str()) || AUXILIARIES.contains(&k.as_str()))
    {
        Some((i, _)) => (i, i + 1),
        None => {
            if keys.len() < 3 {
                return Err(err(MissingPart::Headword));
            }
            let end = chunk_subject(&keys).ok_or_else(|| err(MissingPart::Subject))?;
            (end, end + 1)
        }
    };
    // Skip chained auxiliaries ("has been", "is getting").
    let mut start = predicate_start;
    while start < keys.len()
        && (is_in(LINKING_VERBS, &keys[start]) || is_in(AUXILIARIES, &keys[start]) || keys[start] == "getting")
    {
        start += 1;
    }
    let head = keys[start.min(keys.len())..]
        .iter()
        .position(|k| !is_in(INTENSIFIERS, k) && !is_in(DETERMINERS, k))
        .map(|p| p + start)
        .ok_or_else(|| err(MissingPart::Headword))?;

    Ok(Prompt {
        text: words.join(" "),
        subject: words[..subject_end].join(" "),
        headword: words[head].clone(),
    })
}

/// Token positions of a located `so <head> ... that|even` pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct PatternAnchor {
    pub so_index: usize,
    pub head_index: usize,
    pub connective: Connective,
    pub connective_indices: Vec<usize>,
    pub clause_start: usize,
    pub subject_len: usize,
}

/// Finds the pattern over lowercased, punctuation-trimmed tokens. The last
/// `so` that yields a complete pattern wins.
pub(crate) fn locate_pattern(keys: &[String]) -> Option<PatternAnchor> {
    let n = keys.len();
    (1..n.saturating_sub(1))
        .rev()
        .filter(|&i| keys[i] == "so" && !keys[i + 1].is_empty() && !is_in(NON_HEADS, &keys[i + 1]))
        .find_map(|so| {
            let conn = (so + 2..n).find(|&j| keys[j] == "that" || keys[j] == "even")?;
            let (mut connective, mut indices, clause_start) =
                if keys[conn] == "that" && keys.get(conn + 1).is_some_and(|k| k == "even") {
                    (Connective::ThatEven, vec![conn, conn + 1], conn + 2)
                } else if keys[conn] == "that" {
                    (Connective::That, vec![conn], conn + 1)
                } else {
                    (Connective::Even, vec![conn], conn + 1)
                };
            let clause = &keys[clause_start..];
            let subject_len = chunk_subject(clause)?;
            // "that B even C": the inner "even" belongs to the connective.
            if connective == Connective::That && clause.get(subject_len).is_some_and(|k| k == "even") {
                if clause.len() <= subject_len + 1 {
                    return None;
                }
                connective = Connective::ThatEven;
                indices.push(clause_start + subject_len);
            }
            Some(PatternAnchor {
                so_index: so,
                head_index: so + 1,
                connective,
                connective_indices: indices,
                clause_start,
                subject_len,
            })
        })
}

/// Length of the noun phrase at the start of `tokens`, always leaving at
/// least one token for the predicate.
pub(crate) fn chunk_subject(tokens: &[String]) -> Option<usize> {
    let n = tokens.len();
    if n < 2 || tokens[0].is_empty() {
        return None;
    }
    let first = tokens[0].as_str();
    if PRONOUNS.contains(&first) {
        return Some(1);
    }
    if is_verbish(first) || CLAUSE_BOUNDARIES.contains(&first) {
        return None;
    }
    let mut end = 1;
    if DETERMINERS.contains(&first) {
        while end < n - 1 && DETERMINERS.contains(&tokens[end].as_str()) {
            end += 1;
        }
        // determiner plus at least one word
        end += 1;
    }
    if end >= n {
        return None;
    }
    while end < n - 1 {
        let t = tokens[end].as_str();
        if t.is_empty() || is_verbish(t) || CLAUSE_BOUNDARIES.contains(&t) || t.ends_with("ly") {
            break;
        }
        // An unknown -s word right after a noun is most likely its verb.
        if t.ends_with('s') && !t.ends_with("ss") {
            break;
        }
        end += 1;
    }
    Some(end)
}

fn is_verbish(token: &str) -> bool {
    AUXILIARIES.contains(&token) || LINKING_VERBS.contains(&token) || text::verb_base(token).is_some()
}

/// Splits a `so...that` / `so...even` sentence into A, B and C.
pub fn partition_so_that(sentence: &str) -> Result<PatternPartition> {
    let raw: Vec<&str> = sentence.split_whitespace().collect();
    let keys: Vec<String> = raw.iter().map(|w| text::trim_punct(w).to_lowercase()).collect();
    let anchor = locate_pattern(&keys)
        .ok_or_else(|| Error::Pattern(format!("no so...that/so...even pattern in {sentence:?}")))?;
    let clean = |range: std::ops::Range<usize>| -> Vec<String> {
        raw[range]
            .iter()
            .map(|w| text::trim_punct(w).to_owned())
            .filter(|w| !w.is_empty())
            .collect()
    };

    let mut prefix = clean(0..anchor.so_index);
    if let Some(first) = prefix.first_mut() {
        if first != "I" {
            *first = text::lowercase_first(first);
        }
    }
    let connective_start = anchor.connective_indices[0];
    let head_and_rest = clean(anchor.head_index..connective_start);
    let headword = head_and_rest[0].clone();

    let prefix_keys: Vec<String> = prefix.iter().map(|w| w.to_lowercase()).collect();
    let subject_end = prefix_keys
        .iter()
        .skip(1)
        .position(|k| is_in(LINKING_VERBS, k) || is_in(AUXILIARIES, k))
        .map(|p| p + 1)
        .unwrap_or_else(|| prefix.len().saturating_sub(1).max(1));
    let subject = prefix[..subject_end.min(prefix.len())].join(" ");

    let mut prompt_words = prefix.clone();
    prompt_words.extend(head_and_rest);
    let prompt = Prompt {
        text: prompt_words.join(" "),
        subject,
        headword,
    };

    let subject_start = anchor.clause_start;
    let subject_stop = subject_start + anchor.subject_len;
    let predicate_start = match anchor.connective_indices.get(2) {
        Some(&inner_even) => inner_even + 1,
        None if anchor.connective_indices.len() == 2 && anchor.connective_indices[1] == subject_stop => {
            subject_stop + 1
        }
        None => subject_stop,
    };
    Ok(PatternPartition {
        prompt,
        clause_subject: clean(subject_start..subject_stop).join(" "),
        clause_predicate: clean(predicate_start..raw.len()).join(" "),
        connective: anchor.connective,
    })
}

/// True iff [`partition_so_that`] would succeed.
pub fn is_so_that(sentence: &str) -> bool {
    let keys: Vec<String> = sentence
        .split_whitespace()
        .map(|w| text::trim_punct(w).to_lowercase())
        .collect();
    locate_pattern(&keys).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_prompts() {
        let p = parse_prompt("the party is lit").unwrap();
        assert_eq!((p.subject.as_str(), p.headword.as_str()), ("the party", "lit"));
        let p = parse_prompt("He is tall").unwrap();
        assert_eq!((p.subject.as_str(), p.headword.as_str()), ("He", "tall"));
        let p = parse_prompt("My personality is really dry.").unwrap();
        assert_eq!((p.subject.as_str(), p.headword.as_str()), ("My personality", "dry"));
        let p = parse_prompt("He runs fast").unwrap();
        assert_eq!((p.subject.as_str(), p.headword.as_str()), ("He", "fast"));
    }

    #[test]
    fn degenerate_prompts_fail() {
        assert!(matches!(
            parse_prompt("run"),
            Err(Error::Parse { missing: MissingPart::Headword, .. })
        ));
        assert!(matches!(
            parse_prompt("the party is"),
            Err(Error::Parse { missing: MissingPart::Headword, .. })
        ));
        assert!(matches!(parse_prompt("   "), Err(Error::Parse { missing: MissingPart::Subject, .. })));
    }

    #[test]
    fn partitions_figure_sentence() {
        let p = partition_so_that("The party is so lit that even the wardrobe is dancing").unwrap();
        assert_eq!(p.prompt.text, "the party is lit");
        assert_eq!(p.prompt.subject, "the party");
        assert_eq!(p.prompt.headword, "lit");
        assert_eq!(p.clause_subject, "the wardrobe");
        assert_eq!(p.clause_predicate, "is dancing");
        assert_eq!(p.connective, Connective::ThatEven);
    }

    #[test]
    fn partitions_annotated_examples() {
        let p = partition_so_that("My personality is so dry that a cactus flourishes inside").unwrap();
        assert_eq!((p.clause_subject.as_str(), p.clause_predicate.as_str()), ("a cactus", "flourishes inside"));
        assert_eq!(p.prompt.text, "my personality is dry");
        let p = partition_so_that("He is so tall that a mountain looks up to him.").unwrap();
        assert_eq!((p.clause_subject.as_str(), p.clause_predicate.as_str()), ("a mountain", "looks up to him"));
        assert_eq!(p.connective, Connective::That);
        let p = partition_so_that("It was so cold even the penguins were shivering").unwrap();
        assert_eq!(p.connective, Connective::Even);
        assert_eq!(p.clause_subject, "the penguins");
    }

    #[test]
    fn b_even_c_order_is_recognized() {
        let p = partition_so_that("The party is so lit that the wardrobe even is dancing!").unwrap();
        assert_eq!(p.connective, Connective::ThatEven);
        assert_eq!((p.clause_subject.as_str(), p.clause_predicate.as_str()), ("the wardrobe", "is dancing"));
    }

    #[test]
    fn last_valid_so_wins() {
        let p = partition_so_that("I was so tired and so hungry that my stomach ate itself").unwrap();
        assert_eq!(p.prompt.headword, "hungry");
        assert_eq!(p.clause_subject, "my stomach");
    }

    #[test]
    fn pattern_absent() {
        assert!(matches!(partition_so_that("The party is lit"), Err(Error::Pattern(_))));
        assert!(!is_so_that("He is tall"));
        assert!(is_so_that("He is so tall that a mountain looks up to him"));
    }

    #[test]
    fn regex_acceptance_fixture() {
        // Enumerated fixture of near-miss strings, each checked by hand.
        let cases = [
            ("so that", false),
            ("so that even", false),
            ("He is so that", false),
            ("He is so tall that", false),
            ("He is so tall that he", false),
            ("so tall that a mountain cries", false),
            ("He ran so that he could win", false),
            ("He is so tall that mountains cry", true),
            ("He is so tall even mountains cry", true),
        ];
        for (s, expected) in cases {
            assert_eq!(is_so_that(s), expected, "{s}");
        }
    }

    #[test]
    fn rule_table_is_cross_product() {
        let table = SensicalRule::table();
        assert_eq!(table.len(), 6);
        for ab in AB_ORDER {
            for bc in [BcRelation::NotCapableOf, BcRelation::CharacteristicAction] {
                assert_eq!(table.iter().filter(|r| r.ab_relation == ab && r.bc_relation == bc).count(), 1);
            }
        }
        assert_eq!(SensicalRule::by_id(1).unwrap().ab_relation, AbRelation::RelatedToSubject);
        assert_eq!(SensicalRule::by_id(4).unwrap().ab_relation, AbRelation::RelatedToSubject);
        assert_eq!(SensicalRule::by_id(5).unwrap().ab_relation, AbRelation::SharesAttributeWithHeadword);
        assert_eq!(SensicalRule::by_id(3).unwrap().bc_relation, BcRelation::NotCapableOf);
        assert_eq!(SensicalRule::by_id(6).unwrap().ab_relation, AbRelation::IdenticalToSubject);
        assert!(SensicalRule::by_id(7).is_none());
    }

    fn squash(s: &str) -> String {
        text::tokenize(s).join(" ")
    }

    proptest! {
        #[test]
        fn partition_agrees_with_detector(words in prop::collection::vec(prop::sample::select(vec![
            "so", "that", "even", "the", "party", "is", "lit", "wardrobe", "dances", "he", "tall", "a", "cries",
        ]), 0..12)) {
            let s = words.join(" ");
            prop_assert_eq!(partition_so_that(&s).is_ok(), is_so_that(&s));
        }

        #[test]
        fn reassembly_reproduces_source(
            subj in prop::sample::select(vec!["The party", "He", "My personality", "The soup"]),
            head in prop::sample::select(vec!["lit", "tall", "dry", "hot"]),
            conn in prop::sample::select(vec!["that", "that even", "even"]),
            b in prop::sample::select(vec!["the wardrobe", "a cactus", "the city", "they"]),
            c in prop::sample::select(vec!["is dancing", "flourishes inside", "gets drunk", "cry"]),
        ) {
            let s = format!("{subj} is so {head} {conn} {b} {c}!");
            let p = partition_so_that(&s).unwrap();
            prop_assert_eq!(squash(&p.reassemble()), squash(&s));
        }
    }
}

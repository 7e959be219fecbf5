//! Tokenization and small lexical helpers shared by the parser, the grammar
//! rules and the metrics.

/// Splits on whitespace and trims edge punctuation, keeping the original case.
pub fn words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(trim_punct)
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Lowercased [`words`].
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(trim_punct)
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn trim_punct(word: &str) -> &str {
    word.trim_matches(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '-'))
        .trim_matches(|c: char| c == '\'' || c == '-')
}

/// Lowercase and collapse internal whitespace.
pub fn normalize(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn capitalize_first(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn lowercase_first(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// 64-bit FNV-1a. Stable across builds, used to derive per-token seeds.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub(crate) const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our",
    "their", "every", "each", "some", "any", "no", "all", "both", "many", "few", "several",
    "another", "one", "two", "three",
];

pub(crate) const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "everyone", "everybody", "nobody", "someone",
    "somebody", "anyone", "anybody", "everything", "nothing", "something", "people",
];

pub(crate) const PLURAL_PRONOUNS: &[&str] = &["you", "we", "they", "people"];

/// Copulas, auxiliaries and linking verbs.
pub(crate) const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "am", "be", "been", "being", "'s", "'re", "'m", "has", "have",
    "had", "do", "does", "did", "can", "could", "will", "would", "shall", "should", "may",
    "might", "must", "won't", "can't", "don't", "doesn't", "didn't", "isn't", "aren't",
    "wasn't", "weren't",
];

pub(crate) const LINKING_VERBS: &[&str] = &[
    "is", "are", "was", "were", "am", "be", "been", "'s", "'re", "'m", "looks", "look", "looked",
    "seems", "seem", "seemed", "feels", "feel", "felt", "gets", "get", "got", "becomes",
    "become", "became", "sounds", "sound", "sounded", "smells", "smell", "smelled", "tastes",
    "taste", "tasted", "appears", "appear", "appeared", "remains", "remain", "remained", "stays",
    "stay", "stayed", "grows", "grew", "ran", "runs", "went", "goes", "turned", "turns",
];

/// Common base-form verbs used by the shallow chunker and the agreement rules.
pub(crate) const VERB_LEXICON: &[&str] = &[
    "ask", "bark", "beg", "bend", "bleed", "blink", "blush", "boil", "bow", "break", "breathe",
    "burn", "burst", "buy", "call", "catch", "cheer", "chase", "clap", "climb", "collapse",
    "come", "cook", "cough", "crack", "crash", "crawl", "cry", "dance", "die", "dig", "drink",
    "drive", "drop", "drown", "eat", "explode", "fade", "fall", "faint", "feel", "fight", "fix",
    "flee", "flourish", "fly", "freeze", "get", "give", "glow", "go", "grow", "hate", "have",
    "hear", "hide", "hit", "hold", "hope", "hug", "hurt", "jump", "kill", "kiss", "kneel",
    "know", "laugh", "lie", "like", "listen", "live", "look", "lose", "love", "make", "melt",
    "miss", "move", "need", "open", "pass", "pay", "play", "pray", "push", "rain", "reach",
    "read", "rest", "ring", "rise", "roar", "run", "rush", "say", "scream", "see", "seem",
    "sell", "shake", "shine", "shiver", "shout", "shrink", "sing", "sink", "sit", "sleep",
    "slip", "smell", "smile", "sneeze", "snore", "speak", "spin", "stand", "stare", "starve",
    "stop", "sweat", "swim", "take", "talk", "taste", "tell", "think", "throw", "touch", "tremble",
    "try", "turn", "wait", "wake", "walk", "want", "wash", "watch", "wave", "weep", "whisper",
    "win", "wish", "wonder", "work", "worry", "write", "yawn", "yell",
];

/// Irregular past forms of lexicon verbs.
const IRREGULAR_PAST: &[(&str, &str)] = &[
    ("ate", "eat"), ("ran", "run"), ("went", "go"), ("flew", "fly"), ("fell", "fall"),
    ("grew", "grow"), ("sang", "sing"), ("sank", "sink"), ("froze", "freeze"), ("broke", "break"),
    ("burnt", "burn"), ("came", "come"), ("drank", "drink"), ("drove", "drive"), ("fled", "flee"),
    ("felt", "feel"), ("fought", "fight"), ("gave", "give"), ("got", "get"), ("had", "have"),
    ("heard", "hear"), ("hid", "hide"), ("held", "hold"), ("knew", "know"), ("lay", "lie"),
    ("lost", "lose"), ("made", "make"), ("paid", "pay"), ("rang", "ring"), ("rose", "rise"),
    ("said", "say"), ("saw", "see"), ("sold", "sell"), ("shook", "shake"), ("shone", "shine"),
    ("shrank", "shrink"), ("sat", "sit"), ("slept", "sleep"), ("spoke", "speak"), ("spun", "spin"),
    ("stood", "stand"), ("swam", "swim"), ("took", "take"), ("told", "tell"), ("thought", "think"),
    ("threw", "throw"), ("woke", "wake"), ("wept", "weep"), ("won", "win"), ("wrote", "write"),
    ("dug", "dig"), ("bled", "bleed"), ("bent", "bend"), ("caught", "catch"), ("bought", "buy"),
    ("knelt", "kneel"),
];

pub(crate) fn is_in(list: &[&str], word: &str) -> bool {
    let lower = word.to_lowercase();
    list.contains(&lower.as_str())
}

/// Third-person singular present form of a base verb.
pub fn third_person(base: &str) -> String {
    match base {
        "be" => return "is".into(),
        "have" => return "has".into(),
        "do" => return "does".into(),
        "go" => return "goes".into(),
        _ => {}
    }
    let b = base.as_bytes();
    let n = b.len();
    if n >= 2 && base.ends_with('y') && !is_vowel(b[n - 2] as char) {
        return format!("{}ies", &base[..n - 1]);
    }
    if base.ends_with('s')
        || base.ends_with('x')
        || base.ends_with('z')
        || base.ends_with("ch")
        || base.ends_with("sh")
        || base.ends_with('o')
    {
        return format!("{base}es");
    }
    format!("{base}s")
}

/// Base form of a verb if `word` is the known base or one of its inflections.
pub(crate) fn verb_base(word: &str) -> Option<String> {
    let lower = word.to_lowercase();
    if let Some((_, base)) = IRREGULAR_PAST.iter().find(|(past, _)| *past == lower) {
        return Some((*base).to_owned());
    }
    for base in VERB_LEXICON {
        if lower == *base
            || lower == third_person(base)
            || lower == past(base)
            || lower == gerund(base)
        {
            return Some((*base).to_owned());
        }
    }
    None
}

fn past(base: &str) -> String {
    if base.ends_with('e') {
        format!("{base}d")
    } else if base.ends_with('y') && base.len() > 1 && !is_vowel(base.as_bytes()[base.len() - 2] as char) {
        format!("{}ied", &base[..base.len() - 1])
    } else {
        format!("{base}ed")
    }
}

fn gerund(base: &str) -> String {
    if let Some(stem) = base.strip_suffix("ie") {
        format!("{stem}ying")
    } else if base.ends_with('e') && base != "be" && !base.ends_with("ee") {
        format!("{}ing", &base[..base.len() - 1])
    } else {
        format!("{base}ing")
    }
}

pub(crate) fn is_vowel(c: char) -> bool {
    matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_strips_edge_punctuation() {
        assert_eq!(tokenize("The party is lit!"), vec!["the", "party", "is", "lit"]);
        assert_eq!(words("\"Don't,\" he said."), vec!["Don't", "he", "said"]);
    }

    #[test]
    fn third_person_forms() {
        assert_eq!(third_person("fade"), "fades");
        assert_eq!(third_person("cry"), "cries");
        assert_eq!(third_person("play"), "plays");
        assert_eq!(third_person("watch"), "watches");
        assert_eq!(third_person("go"), "goes");
    }

    #[test]
    fn verb_base_recognizes_inflections() {
        assert_eq!(verb_base("flourishes").as_deref(), Some("flourish"));
        assert_eq!(verb_base("dancing").as_deref(), Some("dance"));
        assert_eq!(verb_base("cried").as_deref(), Some("cry"));
        assert_eq!(verb_base("wardrobe"), None);
    }

    #[test]
    fn fnv_is_stable() {
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}

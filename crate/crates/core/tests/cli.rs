//! The command-line workflow from raw inputs to ranked output and metrics.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn hypogen(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypogen"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = hypogen(args, dir);
    assert!(
        out.status.success(),
        "hypogen {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write_inputs(dir: &Path) {
    fs::write(
        dir.join("conceptnet.tsv"),
        "party\tRelatedTo\twardrobe\nwardrobe\tCapableOf\tdance\ncandle\tHasProperty\tlit\nx\tSynonym\ty\nbroken line\n",
    )
    .unwrap();
    fs::write(dir.join("similes.txt"), "as lit as a candle\nas cold as ice\nnot a simile\n").unwrap();
    let mut corpus = String::new();
    let fillers = ["the cat sat here", "we walked home", "rain fell today", "she read a book"];
    for i in 0..40 {
        let f = fillers[i % fillers.len()];
        corpus += &json!({"text": format!("{f} zorbly {i}"), "label": "hyperbole", "corpus": "hypo_red"}).to_string();
        corpus += "\n";
        corpus += &json!({"text": format!("{f} {i}"), "label": "literal", "corpus": "hypo_red"}).to_string();
        corpus += "\n";
        corpus += &json!({"text": format!("The party is so lit that even the wardrobe {i} is dancing"), "label": "hyperbole", "corpus": "hypo_so"}).to_string();
        corpus += "\n";
        corpus += &json!({"text": format!("It was so late that we {i} left"), "label": "literal", "corpus": "hypo_so"}).to_string();
        corpus += "\n";
    }
    fs::write(dir.join("corpus.jsonl"), corpus).unwrap();

    let table = json!({
        "entries": [
            {"relation": "RelatedTo", "direction": "reverse", "head": "the party",
             "beams": [{"tokens": ["the", "wardrobe"], "token_probs": [0.5, 0.4]},
                       {"tokens": ["the", "city"], "token_probs": [0.5, 0.3]}]},
            {"relation": "HasProperty", "direction": "reverse", "head": "lit",
             "beams": [{"tokens": ["the", "candle"], "token_probs": [0.5, 0.5]}]},
            {"relation": "Causes", "direction": "forward",
             "beams": [{"tokens": ["gets", "drunk"], "token_probs": [0.3, 0.3]}]},
            {"relation": "CapableOf", "direction": "forward",
             "beams": [{"tokens": ["is", "dancing"], "token_probs": [0.2, 0.2]}]}
        ],
        "token_probs": {"wardrobe": 0.02, "dancing": 0.05, "late": 0.6, "left": 0.7}
    });
    fs::write(dir.join("table.json"), table.to_string()).unwrap();
    fs::write(
        dir.join("hypogen.toml"),
        "seed = 5\ntop_k = 3\n[paths]\nunigrams = \"data/unigrams.tsv\"\n[backends.forward]\nkind = \"table\"\npath = \"table.json\"\n",
    )
    .unwrap();
}

#[test]
fn full_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_inputs(dir);

    ok(
        &["ingest", "--conceptnet", "conceptnet.tsv", "--similes", "similes.txt", "--corpus", "corpus.jsonl", "--out", "data", "--seed", "1"],
        dir,
    );
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.join("data/ingest_report.json")).unwrap()).unwrap();
    assert_eq!(report["malformed"], 1);
    assert_eq!(report["dropped_relation"], 1);
    assert_eq!(report["similes_rejected"], 1);
    // "candle HasProperty lit" appears in both sources.
    assert_eq!(report["duplicates_removed"], 1);
    assert_eq!(report["generic"]["train_hyperbole"], report["generic"]["train_literal"]);
    assert!(fs::read_to_string(dir.join("data/triples.tsv")).unwrap().contains("ice"));

    ok(&["train-clf", "generic", "--data", "data", "--out", "models/generic", "--seed", "2"], dir);
    let generic_report: Value = serde_json::from_str(&fs::read_to_string(dir.join("models/generic/report.json")).unwrap()).unwrap();
    assert_eq!(generic_report["test"]["accuracy"], 1.0);

    ok(
        &["train-clf", "specific", "--data", "data", "--out", "models/specific", "--seed", "3", "--config", "hypogen.toml", "--generic-model", "models/generic"],
        dir,
    );
    assert!(dir.join("models/specific/manifest.json").exists());

    let mut config = fs::read_to_string(dir.join("hypogen.toml")).unwrap();
    config = config.replace("[paths]\n", "[paths]\ngeneric_model = \"models/generic\"\nspecific_model = \"models/specific\"\n");
    fs::write(dir.join("ranked.toml"), config).unwrap();
    let stdout = ok(&["generate", "--prompt", "the party is lit", "--config", "ranked.toml"], dir);
    let records: Vec<Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 3);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r["rank"], i + 1);
        assert!(r["p_s"].is_f64());
        let rule = r["candidate"]["rule"].as_u64().unwrap();
        assert!((1..=6).contains(&rule));
        for f in ["l_ab", "l_ac", "l_bc"] {
            assert!(r["candidate"][f].is_f64());
        }
    }
    let p_s: Vec<f64> = records.iter().map(|r| r["p_s"].as_f64().unwrap()).collect();
    assert!(p_s.windows(2).all(|w| w[0] >= w[1]));
    fs::write(dir.join("generated.jsonl"), &stdout).unwrap();

    ok(&["score", "--model", "models/generic", "--in", "generated.jsonl", "--out", "scored.jsonl"], dir);
    let scored = jsonl(&dir.join("scored.jsonl"));
    assert_eq!(scored.len(), 3);
    assert!(scored.iter().all(|s| (0.0..=1.0).contains(&s["p_g"].as_f64().unwrap())));

    let references: String = records.iter().map(|r| format!("{}\n", r["sentence"].as_str().unwrap())).collect();
    fs::write(dir.join("refs.txt"), references).unwrap();
    fs::write(dir.join("labels.jsonl"), "[true, true, false]\n[false, false, false]\n").unwrap();
    fs::write(dir.join("ratings.jsonl"), "[1, 2]\n[2, 4]\n[3, 5]\n").unwrap();
    ok(
        &["evaluate", "--candidates", "generated.jsonl", "--references", "refs.txt", "--report", "metrics.json", "--lm", "data/unigrams.tsv", "--binary-labels", "labels.jsonl", "--ratings", "ratings.jsonl"],
        dir,
    );
    let metrics: Value = serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap();
    assert!((metrics["bertscore_f1"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((metrics["wawa"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-12);
    assert!((metrics["spearman"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    ok(&["export-human-eval", "--in", "generated.jsonl", "--out", "forms.csv", "--seed", "9"], dir);
    let forms = fs::read_to_string(dir.join("forms.csv")).unwrap();
    assert_eq!(forms.lines().count(), 4);
    assert!(!forms.contains("p_s"));
    assert!(dir.join("forms.key.json").exists());
}

#[test]
fn parse_prints_partition() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&["parse", "--sentence", "The party is so lit that even the wardrobe is dancing!"], tmp.path());
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["prompt"]["text"], "the party is lit");
    assert_eq!(v["clause_subject"], "the wardrobe");
    assert_eq!(v["clause_predicate"], "is dancing");
}

#[test]
fn failures_exit_nonzero_with_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_inputs(dir);
    fs::write(dir.join("plain.toml"), "[backends.forward]\nkind = \"table\"\npath = \"table.json\"\n").unwrap();

    let out = hypogen(&["generate", "--prompt", "run", "--config", "plain.toml"], dir);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("[prompt_parser]"));
    assert!(out.stdout.is_empty(), "no partial output");

    let out = hypogen(&["generate", "--prompt", "the party is lit"], dir);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("[cli]"));

    let out = hypogen(&["train-clf", "generic", "--data", "missing", "--out", "m"], dir);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("[rankers]"));

    let out = hypogen(&["parse", "--sentence", "run"], dir);
    assert!(String::from_utf8_lossy(&out.stderr).contains("[prompt_parser]"));
}

#[test]
fn environment_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_inputs(dir);
    fs::write(dir.join("plain.toml"), "top_k = 5\n[backends.forward]\nkind = \"table\"\npath = \"table.json\"\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hypogen"))
        .args(["generate", "--prompt", "the party is lit", "--config", "plain.toml"])
        .current_dir(dir)
        .env("HYPOGEN_TOP_K", "2")
        .env("HYPOGEN_TEMPLATE", "paper")
        .output()
        .unwrap();
    assert!(out.status.success());
    let lines: Vec<Value> = String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0]["sentence"].as_str().unwrap().contains(" even is ") || lines[0]["sentence"].as_str().unwrap().contains(" even gets "));
}

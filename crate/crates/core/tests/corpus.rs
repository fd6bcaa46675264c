use std::path::PathBuf;

use cloak_core::compile_source;
use cloak_core::frontend::{parse, print_source};
use serde::Deserialize;

#[derive(Deserialize)]
struct Entry {
    name: String,
    file: String,
    public: usize,
    private: usize,
    mpt: usize,
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn manifest() -> Vec<Entry> {
    serde_json::from_str(&std::fs::read_to_string(corpus_dir().join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn planted_kind_counts() {
    let entries = manifest();
    assert_eq!(entries.len(), 9);
    for e in entries {
        let src = std::fs::read_to_string(corpus_dir().join(&e.file)).unwrap();
        let compiled = compile_source(&e.file, &src)
            .unwrap_or_else(|d| panic!("{} has diagnostics: {}", e.name, d.iter().map(|d| d.render(&e.file, &src)).collect::<Vec<_>>().join("\n")));
        assert_eq!(compiled.name(), e.name);
        assert_eq!(compiled.checked.kind_counts(), (e.public, e.private, e.mpt), "{}", e.name);
        let verifies = compiled.artifacts.verifier_source.matches("function verify_").count();
        assert_eq!(verifies, e.mpt, "{}: one verify_ per MPT", e.name);
    }
}

#[test]
fn corpus_round_trips_through_printer() {
    for e in manifest() {
        let src = std::fs::read_to_string(corpus_dir().join(&e.file)).unwrap();
        let once = print_source(&parse(&e.file, &src));
        let twice = print_source(&parse(&e.file, &once));
        assert_eq!(once, twice, "{}", e.name);
    }
}

//! Corpus loading shared by the benches.

use std::path::PathBuf;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// `(contract name, file name, source)` for every manifest entry.
pub fn corpus() -> Vec<(String, String, String)> {
    let manifest = std::fs::read_to_string(corpus_dir().join("manifest.json")).expect("manifest");
    let entries: serde_json::Value = serde_json::from_str(&manifest).expect("manifest json");
    entries
        .as_array()
        .expect("manifest is a list")
        .iter()
        .map(|e| {
            let file = e["file"].as_str().expect("file").to_string();
            let src = std::fs::read_to_string(corpus_dir().join(&file)).expect("corpus file");
            (e["name"].as_str().expect("name").to_string(), file, src)
        })
        .collect()
}

pub fn listing() -> String {
    std::fs::read_to_string(corpus_dir().join("listing1.cloak")).expect("listing")
}

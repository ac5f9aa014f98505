use std::collections::BTreeMap;
use std::path::Path;

use fimforge_core::parsing::GRAMMAR_VERSIONS;

fn locked() -> BTreeMap<String, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("grammar.lock");
    toml::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn resolved() -> BTreeMap<String, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../Cargo.lock");
    let lock: toml::Value = toml::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    lock["package"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|p| Some((p["name"].as_str()?.to_string(), p["version"].as_str()?.to_string())))
        .filter(|(n, _)| n.starts_with("tree-sitter"))
        .collect()
}

#[test]
fn grammar_lock_matches_tables() {
    let lock = locked();
    for (name, version) in GRAMMAR_VERSIONS {
        assert_eq!(lock.get(*name).map(String::as_str), Some(*version), "{name}");
    }
    assert_eq!(lock.len(), GRAMMAR_VERSIONS.len() + 1);
}

#[test]
fn grammar_lock_matches_cargo_lock() {
    let resolved = resolved();
    for (name, version) in locked() {
        assert_eq!(resolved.get(&name), Some(&version), "{name} resolved to a different version");
    }
}

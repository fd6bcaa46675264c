//! Frozen digests, each recomputed here from sha2 without going through the
//! crate's own hashing helpers.

mod common;

use std::collections::BTreeMap;

use cloak_core::codegen::genesis_commitment;
use cloak_core::crypto::state_root;
use cloak_core::frontend::parse;
use cloak_core::pipeline::compile_source;
use common::golden::*;
use common::*;

#[test]
fn empty_state_root() {
    assert_eq!(sha(&[&[0x02]]), EMPTY_ROOT);
    assert_eq!(state_root(&BTreeMap::new()).to_string(), EMPTY_ROOT);
}

#[test]
fn listing_genesis_root() {
    assert_eq!(oracle_listing_root(), LISTING_GENESIS_ROOT);
    let file = parse("l", &read("corpus/listing1.cloak"));
    assert_eq!(genesis_commitment(&file.contracts[0]).root.to_string(), LISTING_GENESIS_ROOT);
}

#[test]
fn empty_policy_bytes() {
    let compiled = compile_source("e", "contract Empty { }").unwrap();
    assert_eq!(String::from_utf8(compiled.policy_json).unwrap(), EMPTY_POLICY);
    assert_eq!(compiled.policy_hash.to_string(), sha(&[&[0x03], EMPTY_POLICY.as_bytes()]));
}

#[test]
fn listing_policy() {
    let compiled = compile_file("corpus/listing1.cloak");
    assert_eq!(String::from_utf8(compiled.policy_json.clone()).unwrap(), LISTING_POLICY);
    assert_eq!(sha(&[&[0x03], LISTING_POLICY.as_bytes()]), LISTING_POLICY_HASH);
    assert_eq!(compiled.policy_hash.to_string(), LISTING_POLICY_HASH);
}

#[test]
fn repeated_compiles_are_byte_identical() {
    for rel in ["corpus/listing1.cloak", "corpus/supplychain.cloak", "corpus/htlc.cloak"] {
        let (a, b) = (compile_file(rel), compile_file(rel));
        assert_eq!(a.policy_json, b.policy_json);
        assert_eq!(a.artifacts.service_source, b.artifacts.service_source);
        assert_eq!(a.artifacts.verifier_source, b.artifacts.verifier_source);
        let strip_times = |s: &cloak_core::pipeline::Summary| {
            let mut s = s.clone();
            s.functions.iter_mut().for_each(|f| (f.check_time_us, f.codegen_time_us) = (0, 0));
            s.to_json()
        };
        assert_eq!(strip_times(&a.summary()), strip_times(&b.summary()));
    }
}

mod common;

use std::collections::BTreeSet;

use cloak_core::canonical::canonical_json;
use cloak_core::frontend::{parse, print_source, strip_annotations, Diagnostic};
use cloak_core::owner::{check_contract, FunctionKind, OwnerAtom};
use cloak_core::pipeline::compile_source;
use common::*;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn corpus_sources() -> Vec<(String, String)> {
    let manifest: serde_json::Value = serde_json::from_str(&read("corpus/manifest.json")).unwrap();
    let mut out: Vec<(String, String)> = manifest
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            let file = format!("corpus/{}", e["file"].as_str().unwrap());
            let src = read(&file);
            (file, src)
        })
        .collect();
    out.push(("corpus/listing1.cloak".into(), read("corpus/listing1.cloak")));
    out
}

/// A random contract over the oracle declarations. Each statement is a plain
/// or compound assignment; plain ones may leak. Returns the source and, for
/// every plain assignment, the byte range of its right-hand side and the
/// target's owner name.
fn random_program(seed: u64) -> (String, Vec<(usize, usize, &'static str)>) {
    const TARGETS: &[(&str, &str)] = &[("s0", "all"), ("s1", "me"), ("s2", "tee"), ("x", "a"), ("m", "me"), ("z", "all")];
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut src = String::from(
        "contract R {\n    uint @all s0;\n    uint @me s1;\n    uint @tee s2;\n    uint s3;\n    mapping(address !k => uint @k) bal;\n\n",
    );
    src.push_str("    function f(address a, uint @a x, uint @me m, uint z, bool @a q) public {\n");
    let mut sites = Vec::new();
    for _ in 0..rng.gen_range(1..8) {
        let (target, owner) = TARGETS[rng.gen_range(0..TARGETS.len())];
        let rhs = random_typed_expr(&mut rng, 3, false);
        match rng.gen_range(0..6) {
            0 => src.push_str(&format!("        {target} += {rhs};\n")),
            1 => src.push_str(&format!("        bal[msg.sender] += {rhs};\n")),
            2 => {
                let cond = random_typed_expr(&mut rng, 2, true);
                src.push_str(&format!("        if ({cond}) {{\n            {target} = "));
                let start = src.len();
                src.push_str(&rhs);
                sites.push((start, src.len(), owner));
                src.push_str(";\n        }\n");
            }
            _ => {
                src.push_str(&format!("        {target} = "));
                let start = src.len();
                src.push_str(&rhs);
                sites.push((start, src.len(), owner));
                src.push_str(";\n");
            }
        }
    }
    src.push_str("    }\n}\n");
    (src, sites)
}

fn spans_in_range(diags: &[Diagnostic], len: usize) -> bool {
    diags.iter().all(|d| d.span.start <= d.span.end && d.span.end <= len)
}

#[test]
fn owner_oracle_on_random_trees() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let e = random_expr(&mut rng, 6);
        assert_eq!(inferred_owner(&e), leaf_owner_oracle(&e), "{e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn owner_oracle(seed in any::<u64>(), depth in 0u32..=6) {
        let e = random_expr(&mut ChaCha20Rng::seed_from_u64(seed), depth);
        prop_assert_eq!(inferred_owner(&e), leaf_owner_oracle(&e), "{}", e);
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let (src, _) = random_program(seed);
        let first = parse("r", &src);
        prop_assert!(first.diagnostics.is_empty(), "{:?}", first.diagnostics);
        let again = parse("r", &print_source(&first));
        prop_assert!(again.diagnostics.is_empty());
        prop_assert_eq!(first.shape(), again.shape());
    }

    #[test]
    fn strip_is_idempotent(seed in any::<u64>()) {
        let file = parse("r", &random_program(seed).0);
        let once = strip_annotations(&file);
        prop_assert_eq!(strip_annotations(&once).shape(), once.shape());
    }

    #[test]
    fn diagnostic_spans_stay_in_source(seed in any::<u64>(), cut in 0usize..400, len in 0usize..40) {
        let (src, _) = random_program(seed);
        let cut = cut.min(src.len());
        let end = (cut + len).min(src.len());
        let mangled = format!("{}{}", &src[..cut], &src[end..]);
        let file = parse("m", &mangled);
        prop_assert!(spans_in_range(&file.diagnostics, mangled.len()));
        if let Err(d) = compile_source("m", &mangled) {
            prop_assert!(spans_in_range(&d, mangled.len()));
        }
    }

    #[test]
    fn arbitrary_text_gets_bounded_diagnostics(text in "[ -~\\n]{0,200}") {
        let file = parse("t", &text);
        prop_assert!(spans_in_range(&file.diagnostics, text.len()));
        let prefixed = format!("contract X {{ {text} }}");
        prop_assert!(spans_in_range(&parse("t", &prefixed).diagnostics, prefixed.len()));
    }

    #[test]
    fn reveal_clears_every_flow_error(seed in any::<u64>()) {
        let (src, sites) = random_program(seed);
        let first = check_contract(&parse("r", &src).contracts[0]);
        let flagged: Vec<_> = first
            .diagnostics
            .iter()
            .filter(|d| d.code == cloak_core::DiagCode::ImplicitFlow)
            .map(|d| (d.span.start, d.span.end))
            .collect();
        let mut fixed = src.clone();
        for (start, end, owner) in sites.iter().rev() {
            // a parenthesised value's span may exclude its outer parentheses
            if flagged.iter().any(|(s, e)| start <= s && e <= end) {
                fixed.replace_range(start..end, &format!("reveal({}, {owner})", &src[*start..*end]));
            }
        }
        let after = check_contract(&parse("r", &fixed).contracts[0]);
        prop_assert!(
            after.diagnostics.iter().all(|d| d.code != cloak_core::DiagCode::ImplicitFlow),
            "{}\n{:?}", fixed, after.diagnostics
        );
    }

    #[test]
    fn generated_policies_are_self_canonical(seed in any::<u64>()) {
        let (src, sites) = random_program(seed);
        let mut fixed = src.clone();
        for (start, end, owner) in sites.iter().rev() {
            fixed.replace_range(start..end, &format!("reveal({}, {owner})", &src[*start..*end]));
        }
        let compiled = compile_source("r", &fixed).map_err(|d| TestCaseError::fail(format!("{d:?}")))?;
        let generic: serde_json::Value = serde_json::from_slice(&compiled.policy_json).unwrap();
        prop_assert_eq!(canonical_json(&generic), compiled.policy_json);
    }
}

#[test]
fn corpus_parent_owner_covers_children() {
    for (file, src) in corpus_sources() {
        let checked = check_contract(&parse(&file, &src).contracts[0]);
        for f in &checked.ast.functions {
            let Some(body) = &f.body else { continue };
            body.walk_exprs(&mut |e| {
                use cloak_core::frontend::ast::ExprKind;
                // reveal re-owns its value; member access and indexing select
                // from a container whose own owner is not the element's
                let exempt: Option<u32> = match &e.kind {
                    ExprKind::Reveal { value, .. } => Some(value.id.0),
                    ExprKind::Member { base, .. } | ExprKind::Index { base, .. } => Some(base.id.0),
                    _ => None,
                };
                let parent = &checked.owner_of[&e.id];
                e.for_each_child(|c| {
                    if Some(c.id.0) != exempt {
                        assert!(parent.is_superset(&checked.owner_of[&c.id]), "{file}: {}", f.name.name);
                    }
                });
            });
        }
    }
}

#[test]
fn owner_map_is_total_and_never_empty() {
    for (file, src) in corpus_sources() {
        let checked = check_contract(&parse(&file, &src).contracts[0]);
        for f in &checked.ast.functions {
            if let Some(body) = &f.body {
                body.walk_exprs(&mut |e| assert!(!checked.owner_of[&e.id].is_empty(), "{file}"));
            }
        }
    }
}

#[test]
fn analysis_is_deterministic() {
    for (file, src) in corpus_sources() {
        let ast = parse(&file, &src).contracts[0].clone();
        let (a, b) = (check_contract(&ast), check_contract(&ast));
        assert_eq!(a.owner_of, b.owner_of);
        assert_eq!(a.kind_of, b.kind_of);
        assert_eq!(a.diagnostics, b.diagnostics);
    }
}

#[test]
fn mpt_classification_is_sound() {
    for (file, src) in corpus_sources() {
        let checked = check_contract(&parse(&file, &src).contracts[0]);
        for (name, kind) in &checked.kind_of {
            if *kind != FunctionKind::Mpt {
                continue;
            }
            let f = checked.ast.functions.iter().find(|f| &f.name.name == name).unwrap();
            let mut atoms: BTreeSet<OwnerAtom> = checked.function_owners[name].iter().cloned().collect();
            if let Some(body) = &f.body {
                body.walk_exprs(&mut |e| atoms.extend(checked.owner_of[&e.id].iter().cloned()));
            }
            let special = atoms.iter().any(|a| matches!(a, OwnerAtom::Tee | OwnerAtom::PartyClass(_)));
            let private = atoms.iter().filter(|a| **a != OwnerAtom::All).count();
            assert!(special || private >= 2, "{file}: {name}");
        }
    }
}

#[test]
fn corpus_policies_are_canonical_and_distinct() {
    let mut seen = BTreeSet::new();
    for (file, src) in corpus_sources() {
        let compiled = compile_source(&file, &src).unwrap();
        let generic: serde_json::Value = serde_json::from_slice(&compiled.policy_json).unwrap();
        assert_eq!(canonical_json(&generic), compiled.policy_json, "{file}");
        for f in &compiled.policy.functions {
            for id in f.read.iter().chain(&f.mutate) {
                assert!(compiled.policy.states.iter().any(|s| &s.name == id), "{file}: {id}");
            }
        }
        seen.insert(compiled.policy_json);
    }
    // listing1 and supplychain share a contract name but not a policy
    assert_eq!(seen.len(), corpus_sources().len());
}

#[test]
fn generated_sources_reparse_in_the_subset() {
    for (file, src) in corpus_sources() {
        let compiled = compile_source(&file, &src).unwrap();
        for out in [&compiled.artifacts.service_source, &compiled.artifacts.verifier_source] {
            let reparsed = parse("gen.sol", out);
            assert!(reparsed.diagnostics.is_empty(), "{file}: {:?}", reparsed.diagnostics);
            assert!(cloak_core::frontend::validate_subset(&reparsed).is_empty(), "{file}");
        }
    }
}

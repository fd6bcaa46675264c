//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use cloak_core::codegen::genesis_commitment;
use cloak_core::crypto::{state_root, PartyKeys};
use cloak_core::pipeline::compile_source;
use cloak_core::value::Value;
use cloak_core::FunctionKind;
use common::golden::*;
use common::*;
use primitive_types::U256;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn manifest() -> Vec<serde_json::Value> {
    serde_json::from_str::<serde_json::Value>(&read("corpus/manifest.json")).unwrap().as_array().unwrap().clone()
}

fn listing_fidelity() -> Outcome {
    let src = read("corpus/listing1.cloak");
    let (res, t) = timed(|| compile_source("listing1.cloak", &src));
    let compiled = res.map_err(|d| format!("{} diagnostics", d.len()))?;
    ensure(compiled.checked.kind_of.get("biddingProcure") == Some(&FunctionKind::Mpt), "biddingProcure is not MPT")?;
    ensure(compiled.checked.kind_counts() == (0, 0, 1), "unexpected kind counts")?;
    ensure(t < Duration::from_secs(1), format!("took {t:?}"))?;
    Ok(format!("0 diagnostics, biddingProcure=mpt, {t:?}"))
}

fn classification_corpus() -> Outcome {
    let mut n = 0;
    for e in manifest() {
        let file = format!("corpus/{}", e["file"].as_str().unwrap());
        let compiled = compile_source(&file, &read(&file)).map_err(|d| format!("{file}: {} diagnostics", d.len()))?;
        let want = (e["public"].as_u64().unwrap() as usize, e["private"].as_u64().unwrap() as usize, e["mpt"].as_u64().unwrap() as usize);
        ensure(compiled.checked.kind_counts() == want, format!("{file}: {:?} != {want:?}", compiled.checked.kind_counts()))?;
        n += 1;
    }
    Ok(format!("{n} contracts match planted counts"))
}

fn compile_times() -> Outcome {
    let mut worst_small = Duration::ZERO;
    let mut large = Duration::ZERO;
    for e in manifest() {
        let file = format!("corpus/{}", e["file"].as_str().unwrap());
        let src = read(&file);
        let (res, t) = timed(|| compile_source(&file, &src));
        res.map_err(|_| format!("{file} does not compile"))?;
        if e["loc"].as_u64().unwrap() > 500 {
            large = large.max(t);
        } else {
            worst_small = worst_small.max(t);
        }
    }
    ensure(worst_small < Duration::from_secs(1), format!("slowest small contract {worst_small:?}"))?;
    ensure(large < Duration::from_secs(5), format!("stress contract {large:?}"))?;
    Ok(format!("slowest <=330 LOC {worst_small:?}, ~1000 LOC {large:?}"))
}

fn end_to_end() -> Outcome {
    let bids = [U256::from(5), U256::from(3), U256::from(4)];
    let (winner, m_price, s_price) = reference_bidding(&bids);
    let started = Instant::now();
    let mut sim = Sim::supplychain(42);
    let tenderer = PartyKeys::from_name("T");
    let suppliers: Vec<PartyKeys> = ["A", "B", "C"].iter().map(|n| PartyKeys::from_name(n)).collect();
    sim.deposit(&tenderer, U256::from(100));
    sim.deposit(&suppliers[1], U256::from(10));
    let before = sim.root();
    let ann = sim.bid(&tenderer, &suppliers, &bids)?;
    sim.ledger.verify_and_update(&ann).map_err(|e| format!("rejected: {e:?}"))?;
    sim.exec.sync(&sim.ledger);
    let elapsed = started.elapsed();
    let got = open_own(&suppliers[winner], &ann);
    let (_, local_m, _, _, _) = interpret_bidding(&bids, U256::from(100));
    ensure(winner == 1 && got["winner"] == Value::Address(suppliers[1].address), "winner is not B")?;
    ensure(got["sPrice"] == Value::Uint(s_price) && s_price == U256::from(4), "sPrice")?;
    ensure(m_price == U256::from(3) && local_m == m_price, "mPrice")?;
    let (bt, bb) = (sim.balance(&tenderer.address), sim.balance(&suppliers[1].address));
    ensure(bt == U256::from(100) - s_price && bb == U256::from(10) + s_price, format!("balances T={bt} B={bb}"))?;
    ensure(sim.root() != before && sim.consistent(), "root did not advance consistently")?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("winner=B sPrice=4 mPrice=3 T={bt} B={bb}, {elapsed:?}"))
}

fn verifiability() -> Outcome {
    let n = verifiability_vectors(99)?;
    ensure(n == 8, format!("{n}/8 rejected"))?;
    Ok("8/8 negative vectors rejected, honest accepted".into())
}

fn confidentiality() -> Outcome {
    for seed in 0..50 {
        confidentiality_run(1000 + seed)?;
    }
    Ok("50 runs, no foreign value observable".into())
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    for i in 0..1000 {
        let n = rng.gen_range(2..=5);
        let bids: Vec<U256> = (0..n).map(|_| U256::from(rng.gen_range(0..100u64))).collect();
        let funding = U256::from(rng.gen_range(0..200u64));
        let (w, m, s, bt, bw) = interpret_bidding(&bids, funding);
        let (rw, rm, rs) = reference_bidding(&bids);
        ensure((w, m, s) == (rw, rm, rs), format!("instance {i}: {bids:?}"))?;
        ensure(bt == funding.overflowing_sub(rs).0 && bw == rs, format!("instance {i}: balances"))?;
    }
    for i in 0..1000 {
        let e = random_expr(&mut rng, 6);
        ensure(inferred_owner(&e) == leaf_owner_oracle(&e), format!("tree {i}: {e}"))?;
    }
    Ok("1000 bidding instances, 1000 owner trees".into())
}

fn determinism() -> Outcome {
    for e in manifest() {
        let file = format!("corpus/{}", e["file"].as_str().unwrap());
        let (a, b) = (compile_file(&file), compile_file(&file));
        ensure(a.policy_json == b.policy_json, format!("{file}: policy.json differs"))?;
        ensure(a.artifacts.service_source == b.artifacts.service_source, format!("{file}: service.sol differs"))?;
        ensure(a.artifacts.verifier_source == b.artifacts.verifier_source, format!("{file}: verifier.sol differs"))?;
    }
    ensure(sha(&[&[0x02]]) == EMPTY_ROOT, "empty root oracle")?;
    ensure(state_root(&Default::default()).to_string() == EMPTY_ROOT, "empty root")?;
    let listing = compile_file("corpus/listing1.cloak");
    let root = genesis_commitment(&listing.checked.ast).root.to_string();
    ensure(oracle_listing_root() == LISTING_GENESIS_ROOT && root == LISTING_GENESIS_ROOT, "initial SupplyChain root")?;
    let empty = compile_source("e", "contract Empty { }").map_err(|_| "empty contract")?;
    ensure(empty.policy_json == EMPTY_POLICY.as_bytes(), "empty policy bytes")?;
    ensure(listing.policy_hash.to_string() == LISTING_POLICY_HASH, "policy hash")?;
    Ok("byte-identical recompiles, golden digests match".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("listing fidelity", listing_fidelity),
        ("classification corpus", classification_corpus),
        ("compile time", compile_times),
        ("end-to-end MPT", end_to_end),
        ("verifiability", verifiability),
        ("confidentiality", confidentiality),
        ("oracle equivalence", oracle_equivalence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {}. {name}: {detail}", i + 1),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {}. {name}: panicked", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

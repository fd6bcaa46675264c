//! Fixtures and independent oracles shared by the integration tests and the
//! acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use cloak_core::crypto::PartyKeys;
use cloak_core::pipeline::{compile_source, Compiled};
use cloak_core::runtime::{
    deploy, party_open_result, seal_inputs, ContractId, Executor, Ledger, ResultAnnouncement, SessionStatus,
};
use cloak_core::value::{Address, Value, ValueType};
use cloak_core::ExecutorKeys;
use primitive_types::U256;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(repo_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn compile_file(rel: &str) -> Compiled {
    let src = read(rel);
    compile_source(rel, &src).unwrap_or_else(|d| {
        panic!("{rel}: {}", d.iter().map(|d| d.render(rel, &src)).collect::<Vec<_>>().join("\n"))
    })
}

/// Straight-line evaluation of the bidding loop. Returns (winner index, mPrice, sPrice).
pub fn reference_bidding(bids: &[U256]) -> (usize, U256, U256) {
    let mut winner = 0;
    let mut lowest = bids[0];
    let mut second = bids[0];
    for (i, &b) in bids.iter().enumerate().skip(1) {
        if b < lowest {
            second = lowest;
            lowest = b;
            winner = i;
        } else if b < second {
            second = b;
        }
    }
    (winner, lowest, second)
}

pub fn address_list(addrs: &[Address]) -> Value {
    Value::Array { elem_ty: ValueType::Address, items: addrs.iter().map(|a| Value::Address(*a)).collect() }
}

/// One simulated deployment of a compiled contract.
pub struct Sim {
    pub ledger: Ledger,
    pub exec: Executor,
    pub contract: ContractId,
    pub compiled: Compiled,
    pub rng: ChaCha20Rng,
    /// Every sealed input sent so far, as seen on the wire.
    pub envelopes: Vec<Vec<u8>>,
}

impl Sim {
    pub fn new(compiled: Compiled, seed: u64) -> Sim {
        let mut ledger = Ledger::default();
        let exec = Executor::new(ExecutorKeys::from_name("E"), seed);
        ledger.register_worker(exec.id(), exec.register_data()).unwrap();
        let contract = deploy(&mut ledger, &exec, &compiled).unwrap();
        Sim { ledger, exec, contract, compiled, rng: ChaCha20Rng::seed_from_u64(seed.wrapping_add(1)), envelopes: Vec::new() }
    }

    pub fn supplychain(seed: u64) -> Sim {
        Sim::new(compile_file("corpus/supplychain.cloak"), seed)
    }

    /// Opens a session, submits the initiator's then each member's inputs,
    /// and executes. The announcement is not yet verified.
    pub fn run(
        &mut self,
        function: &str,
        initiator: &PartyKeys,
        init_values: BTreeMap<String, Value>,
        members: &[(&PartyKeys, BTreeMap<String, Value>)],
    ) -> Result<ResultAnnouncement, String> {
        let sid = self.exec.open_session(self.contract, function, initiator.address).map_err(|e| e.to_string())?;
        let mut submissions = vec![(initiator, init_values)];
        submissions.extend(members.iter().map(|(k, v)| (*k, v.clone())));
        let mut status = SessionStatus::Collecting;
        for (keys, values) in submissions {
            let ct = seal_inputs(keys, &self.exec.enc_key(), self.contract, function, sid, values, &mut self.rng);
            self.envelopes.push(ct.clone());
            status = self.exec.submit_input(&sid, keys.address, &ct).map_err(|e| e.to_string())?;
        }
        assert_eq!(status, SessionStatus::Ready);
        self.exec.execute(&sid, &self.ledger).map_err(|e| e.to_string())
    }

    pub fn accept(&mut self, ann: &ResultAnnouncement) {
        self.ledger.verify_and_update(ann).expect("honest announcement is accepted");
        self.exec.sync(&self.ledger);
    }

    pub fn deposit(&mut self, who: &PartyKeys, amount: U256) {
        let ann = self.run("deposit", who, BTreeMap::from([("amount".into(), Value::Uint(amount))]), &[]).unwrap();
        self.accept(&ann);
    }

    pub fn bid(&mut self, tenderer: &PartyKeys, suppliers: &[PartyKeys], bids: &[U256]) -> Result<ResultAnnouncement, String> {
        let addrs: Vec<Address> = suppliers.iter().map(|s| s.address).collect();
        let init = BTreeMap::from([
            ("parties".to_string(), address_list(&addrs)),
            ("tenderer".to_string(), Value::Address(tenderer.address)),
        ]);
        let members: Vec<(&PartyKeys, BTreeMap<String, Value>)> = suppliers
            .iter()
            .zip(bids)
            .map(|(s, b)| (s, BTreeMap::from([("bids".to_string(), Value::Uint(*b))])))
            .collect();
        self.run("biddingProcure", tenderer, init, &members)
    }

    pub fn root(&self) -> cloak_core::Digest {
        self.ledger.state_root(&self.contract).unwrap()
    }

    pub fn balance(&self, who: &Address) -> U256 {
        let state = self.exec.plaintext_state(&self.contract).unwrap();
        match &state["balances"] {
            Value::Map { entries, .. } => entries
                .get(&cloak_core::value::Key::Address(*who))
                .and_then(Value::as_uint)
                .unwrap_or_default(),
            other => panic!("balances is {other:?}"),
        }
    }

    pub fn consistent(&self) -> bool {
        self.exec.recommit(&self.contract).map(|c| c.root) == Some(self.root())
    }
}

/// Result of a full bidding round through the simulator.
pub struct BiddingRun {
    pub sim: Sim,
    pub tenderer: PartyKeys,
    pub suppliers: Vec<PartyKeys>,
    pub bids: Vec<U256>,
    pub funding: U256,
    pub announcement: ResultAnnouncement,
    pub root_before: cloak_core::Digest,
}

pub fn bidding_round(seed: u64, names: &[&str], bids: &[U256], funding: U256) -> BiddingRun {
    let mut sim = Sim::supplychain(seed);
    let tenderer = PartyKeys::from_name(&format!("tenderer-{seed}"));
    let suppliers: Vec<PartyKeys> = names.iter().map(|n| PartyKeys::from_name(&format!("{n}-{seed}"))).collect();
    sim.deposit(&tenderer, funding);
    let root_before = sim.root();
    let announcement = sim.bid(&tenderer, &suppliers, bids).unwrap();
    BiddingRun { sim, tenderer, suppliers, bids: bids.to_vec(), funding, announcement, root_before }
}

pub fn open_own(keys: &PartyKeys, ann: &ResultAnnouncement) -> BTreeMap<String, Value> {
    party_open_result(keys, ann).unwrap().returns.into_iter().map(|n| (n.name, n.value)).collect()
}

/// Runs the bidding function of listing1.cloak directly in the interpreter.
/// Returns (winner index, mPrice, sPrice, tenderer balance, winner balance).
pub fn interpret_bidding(bids: &[U256], funding: U256) -> (usize, U256, U256, U256, U256) {
    let file = cloak_core::frontend::parse("t", &read("corpus/listing1.cloak"));
    let contract = cloak_core::frontend::strip_contract(&file.contracts[0]);
    let t = Address([0xee; 20]);
    let parties: Vec<Address> = (0..bids.len()).map(|i| Address([i as u8 + 1; 20])).collect();
    let mut balances = ValueType::Map(Box::new(ValueType::Address), Box::new(ValueType::Uint)).default_value();
    if let Value::Map { entries, .. } = &mut balances {
        entries.insert(cloak_core::value::Key::Address(t), Value::Uint(funding));
    }
    let state = BTreeMap::from([("balances".to_string(), balances), ("mPrice".to_string(), Value::uint(0))]);
    let bid_values = Value::Array { elem_ty: ValueType::Uint, items: bids.iter().map(|b| Value::Uint(*b)).collect() };
    let out = cloak_core::runtime::interpret(&contract, "biddingProcure", vec![address_list(&parties), bid_values, Value::Address(t)], state, t).unwrap();
    let winner = parties.iter().position(|p| Value::Address(*p) == out.returns[0]).unwrap();
    let Value::Map { entries, .. } = &out.state["balances"] else { panic!() };
    let bal = |a: Address| entries.get(&cloak_core::value::Key::Address(a)).and_then(Value::as_uint).unwrap_or_default();
    (winner, out.locals["mPrice"].as_uint().unwrap(), out.returns[1].as_uint().unwrap(), bal(t), bal(parties[winner]))
}

/// Big-endian bytes without leading zeros, plus their hex and decimal spellings.
pub fn spellings(v: U256) -> Vec<Vec<u8>> {
    let mut raw = [0u8; 32];
    v.to_big_endian(&mut raw);
    let first = raw.iter().position(|b| *b != 0).unwrap_or(31);
    let min = raw[first..].to_vec();
    vec![raw.to_vec(), hex::encode(&min).into_bytes(), v.to_string().into_bytes(), min]
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}

fn uint_leaves(v: &Value, out: &mut Vec<U256>) {
    match v {
        Value::Uint(u) => out.push(*u),
        Value::Array { items, .. } => items.iter().for_each(|i| uint_leaves(i, out)),
        Value::Map { entries, .. } => entries.values().for_each(|i| uint_leaves(i, out)),
        _ => {}
    }
}

/// One bidding run with 128-bit bids. Checks that no party's observable bytes
/// contain another party's input or return values, and that every party
/// opens its own payload and nobody else's.
pub fn confidentiality_run(seed: u64) -> Result<(), String> {
    use cloak_core::runtime::{open_payload, OpenError};
    use rand::Rng;
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(2..=5);
    let names: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let bids: Vec<U256> = (0..n).map(|_| U256::from(rng.gen::<u128>() | (1u128 << 127))).collect();
    let funding = U256::from(rng.gen::<u128>()) << 64;
    let mut run = bidding_round(seed, &name_refs, &bids, funding);
    run.sim.accept(&run.announcement);
    let ann = &run.announcement;

    let mut everyone: Vec<&PartyKeys> = vec![&run.tenderer];
    everyone.extend(run.suppliers.iter());
    let mut inputs: BTreeMap<Address, Vec<U256>> = BTreeMap::new();
    inputs.insert(run.tenderer.address, vec![funding]);
    for (s, b) in run.suppliers.iter().zip(&bids) {
        inputs.insert(s.address, vec![*b]);
    }
    let mut returns: BTreeMap<Address, Vec<U256>> = BTreeMap::new();
    for p in &everyone {
        for q in &everyone {
            match open_payload(p, ann, &q.address) {
                Ok(share) if p.address == q.address => {
                    let mut vals = Vec::new();
                    share.values().iter().for_each(|v| uint_leaves(v, &mut vals));
                    returns.insert(p.address, vals);
                }
                Ok(_) => return Err(format!("seed {seed}: a party opened someone else's payload")),
                Err(OpenError::NotAParticipant) if p.address == q.address => {
                    returns.insert(p.address, Vec::new());
                }
                Err(OpenError::DecryptFailure | OpenError::NotAParticipant) if p.address != q.address => {}
                Err(e) => return Err(format!("seed {seed}: unexpected {e:?}")),
            }
        }
    }

    let ledger_bytes = serde_json::to_vec(&run.sim.ledger.export_json()).unwrap();
    for j in &everyone {
        let mut seen = ledger_bytes.clone();
        if let Some(p) = ann.payloads.get(&j.address) {
            seen.extend_from_slice(p);
        }
        for e in &run.sim.envelopes {
            seen.extend_from_slice(e);
        }
        let known: Vec<U256> = inputs[&j.address].iter().chain(&returns[&j.address]).copied().collect();
        for i in everyone.iter().filter(|i| i.address != j.address) {
            for secret in inputs[&i.address].iter().chain(&returns[&i.address]) {
                if known.contains(secret) || secret.bits() < 32 {
                    continue;
                }
                for enc in spellings(*secret) {
                    if contains(&seen, &enc) {
                        return Err(format!("seed {seed}: {secret} of another party is visible to {}", j.address));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Every tamper vector, then a replay, against one honest announcement.
/// Returns the number of vectors rejected with the expected reason.
pub fn verifiability_vectors(seed: u64) -> Result<usize, String> {
    use cloak_core::runtime::scenario::Tamper;
    use cloak_core::runtime::RejectReason;
    let run = bidding_round(seed, &["A", "B", "C"], &[U256::from(5), U256::from(3), U256::from(4)], U256::from(100));
    let mut sim = run.sim;
    let mut rejected = 0;
    let before = sim.root();
    for t in Tamper::ALL {
        let got = sim.ledger.verify_and_update(&t.apply(&run.announcement));
        if got != Err(t.expected_rejection()) {
            return Err(format!("{t:?}: got {got:?}"));
        }
        if sim.root() != before {
            return Err(format!("{t:?} moved the root"));
        }
        rejected += 1;
    }
    sim.ledger.verify_and_update(&run.announcement).map_err(|e| format!("honest: {e:?}"))?;
    sim.exec.sync(&sim.ledger);
    let after = sim.root();
    if after == before || !sim.consistent() {
        return Err("honest acceptance did not advance a consistent root".into());
    }
    match sim.ledger.verify_and_update(&run.announcement) {
        Err(RejectReason::StaleState) if sim.root() == after => rejected += 1,
        other => return Err(format!("replay: {other:?}")),
    }
    Ok(rejected)
}

/// Declarations used by the random expression generator, with the owner
/// each leaf must contribute.
pub const ORACLE_CONTRACT: &str = "contract G {
    uint @all s0;
    uint @me s1;
    uint @tee s2;
    uint s3;
    function f(address a, uint @a x, uint @me m, uint z, bool @a q) public { }
}";

pub const ORACLE_LEAVES: &[(&str, &str)] =
    &[("s0", "all"), ("s1", "me"), ("s2", "tee"), ("s3", "all"), ("x", "id:a"), ("m", "me"), ("z", "all"), ("q", "id:a")];

/// Random well-typed expression text of depth at most `depth`, `uint` when
/// `boolean` is false.
pub fn random_typed_expr(rng: &mut impl rand::Rng, depth: u32, boolean: bool) -> String {
    const UINTS: &[&str] = &["s0", "s1", "s2", "s3", "x", "m", "z"];
    const ARITH: &[&str] = &["+", "-", "*", "/", "%"];
    const CMP: &[&str] = &["<", ">", "<=", ">=", "==", "!="];
    if depth == 0 || rng.gen_ratio(1, 4) {
        return match (boolean, rng.gen_ratio(1, 5)) {
            (false, true) => rng.gen_range(0..1000u32).to_string(),
            (false, false) => UINTS[rng.gen_range(0..UINTS.len())].to_string(),
            (true, true) => ["true", "false"][rng.gen_range(0..2)].to_string(),
            (true, false) => "q".to_string(),
        };
    }
    let d = depth - 1;
    if !boolean {
        let op = ARITH[rng.gen_range(0..ARITH.len())];
        return format!("({} {op} {})", random_typed_expr(rng, d, false), random_typed_expr(rng, d, false));
    }
    match rng.gen_range(0..4) {
        0 => format!("!({})", random_typed_expr(rng, d, true)),
        1 => {
            let op = ["&&", "||"][rng.gen_range(0..2)];
            format!("({} {op} {})", random_typed_expr(rng, d, true), random_typed_expr(rng, d, true))
        }
        _ => {
            let op = CMP[rng.gen_range(0..CMP.len())];
            format!("({} {op} {})", random_typed_expr(rng, d, false), random_typed_expr(rng, d, false))
        }
    }
}

pub fn random_expr(rng: &mut impl rand::Rng, depth: u32) -> String {
    let boolean = rng.gen();
    random_typed_expr(rng, depth, boolean)
}

/// Brute-force owner: the set of leaf owners, spelled as strings. Literals
/// are public.
pub fn leaf_owner_oracle(src: &str) -> std::collections::BTreeSet<String> {
    let mut out = std::collections::BTreeSet::new();
    let mut word = String::new();
    for ch in src.chars().chain(std::iter::once(' ')) {
        if ch.is_ascii_alphanumeric() {
            word.push(ch);
            continue;
        }
        if !word.is_empty() {
            let owner = ORACLE_LEAVES.iter().find(|(n, _)| *n == word).map_or("all", |(_, o)| *o);
            out.insert(owner.to_string());
            word.clear();
        }
    }
    out
}

/// The analyser's owner for `src` in the body of `G.f`.
pub fn inferred_owner(src: &str) -> std::collections::BTreeSet<String> {
    use cloak_core::owner::{infer_owner, OwnerEnv};
    let file = cloak_core::frontend::parse("g", ORACLE_CONTRACT);
    let contract = &file.contracts[0];
    let (mut env, _) = OwnerEnv::new(contract);
    env.enter_function(&contract.functions[0]);
    let expr = cloak_core::frontend::parse_expression(src).unwrap_or_else(|d| panic!("{src}: {d:?}"));
    let mut map = Default::default();
    let mut diags = Vec::new();
    infer_owner(&expr, &env, &mut map, &mut diags).iter().map(|a| a.to_string()).collect()
}

/// Frozen digests and a sha2-only oracle for them.
pub mod golden {
    use sha2::{Digest as _, Sha256};

    pub const EMPTY_ROOT: &str = "dbc1b4c900ffe48d575b5da5c638040125f65db0fe3e24494b76ea986457d986";
    pub const LISTING_GENESIS_ROOT: &str = "351e5036632f1f045b044bf63a1a2c49946f7a93596eecf776730a1f9573f3af";
    pub const EMPTY_POLICY: &str = r#"{"contract":"Empty","functions":[],"states":[]}"#;
    pub const LISTING_POLICY: &str = r#"{"contract":"SupplyChain","functions":[{"inputs":[{"name":"parties","owner":"all","type":"address[]"},{"name":"bids","owner":"class:p","type":"uint[]"},{"name":"tenderer","owner":"all","type":"address"}],"kind":"mpt","mutate":["balances"],"name":"biddingProcure","read":["balances"],"returns":[{"name":"winner","owner":"all","type":"address"},{"name":"sPrice","owner":"id:winner","type":"uint"}]}],"states":[{"name":"balances","owner":"id:k","type":"mapping(address=>uint)"},{"name":"mPrice","owner":"all","type":"uint"}]}"#;
    pub const LISTING_POLICY_HASH: &str = "90b9b26c5683dc4aefa10103cca1fc2226d1262f48535fa0de7a01ae3a500433";

    pub fn sha(parts: &[&[u8]]) -> String {
        let mut h = Sha256::new();
        for p in parts {
            h.update(p);
        }
        hex::encode(h.finalize())
    }

    pub fn sha_raw(parts: &[&[u8]]) -> Vec<u8> {
        hex::decode(sha(parts)).unwrap()
    }

    /// Root over genesis slots, each a default value under the all-zero secret at version 0.
    pub fn oracle_genesis_root(slots: &[(&str, Vec<u8>)]) -> String {
        let mut sorted: Vec<_> = slots.to_vec();
        sorted.sort_by(|a, b| a.0.cmp(b.0));
        let mut payload = Vec::new();
        for (name, encoding) in sorted {
            let nonce = sha_raw(&[&[0x09], &[0; 32], &0u64.to_be_bytes(), name.as_bytes()]);
            let digest = sha_raw(&[&[0x01], &encoding, &nonce]);
            payload.extend_from_slice(&(name.len() as u32).to_be_bytes());
            payload.extend_from_slice(name.as_bytes());
            payload.extend_from_slice(&digest);
        }
        sha(&[&[0x02], &payload])
    }

    /// Genesis of listing1.cloak: an empty mapping encodes as its u64 entry count, a uint as 32 bytes.
    pub fn oracle_listing_root() -> String {
        oracle_genesis_root(&[("balances", vec![0; 8]), ("mPrice", vec![0; 32])])
    }
}

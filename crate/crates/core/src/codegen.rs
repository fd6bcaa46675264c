//! Emits the service contract F (enclave-side logic) and the verifier
//! contract V (on-chain proof check and commitment update).

use std::collections::BTreeMap;
use std::fmt::Write;
use std::time::{Duration, Instant};

use primitive_types::U256;
use serde::Serialize;

use crate::crypto::{self, commit_state, slot_nonce, Digest, StateCommitment, GENESIS_SECRET};
use crate::frontend::ast::ContractDecl;
use crate::frontend::{print_contract, print_function, print_var_decl, strip_contract};
use crate::owner::{CheckedContract, FunctionKind};
use crate::policy::PrivacyPolicy;
use crate::value::{default_for_type, Value};

pub const PRAGMA: &str = "pragma solidity 0.5.17;";

/// Why the ledger refuses a result announcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
pub enum RejectReason {
    UnregisteredSigner,
    HashMismatch,
    StaleState,
    BadSignature,
}

/// One `require` line of every `verify_<f>` in V, with the rejections it
/// stands for. The simulator's `verify_and_update` enforces the same table.
#[derive(Debug, Clone, Copy)]
pub struct VerifierCheck {
    /// `{fn}` is replaced by the decimal function hash.
    pub condition: &'static str,
    pub rejects: &'static [RejectReason],
}

pub const VERIFIER_CHECKS: &[VerifierCheck] = &[
    VerifierCheck {
        condition: "cloakService.verify(proof, runtimeMR, codeHash, policyHash, {fn}, oldStateHash)",
        rejects: &[RejectReason::UnregisteredSigner, RejectReason::BadSignature],
    },
    VerifierCheck { condition: "codeHash == expectedCodeHash", rejects: &[RejectReason::HashMismatch] },
    VerifierCheck { condition: "policyHash == expectedPolicyHash", rejects: &[RejectReason::HashMismatch] },
    VerifierCheck { condition: "oldStateHash == stateRoot", rejects: &[RejectReason::StaleState] },
];

impl VerifierCheck {
    pub fn require_line(&self, function: &str) -> String {
        format!("require({});", self.condition.replace("{fn}", &digest_decimal(&crypto::function_hash(function))))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionGenRecord {
    pub name: String,
    pub kind: FunctionKind,
    /// Lines this function contributes to V.
    pub verifier_lines: usize,
    #[serde(skip)]
    pub time: Duration,
}

#[derive(Debug, Clone)]
pub struct GeneratedArtifacts {
    pub service_source: String,
    pub verifier_source: String,
    pub service_hash: Digest,
    pub verifier_hash: Digest,
    pub summary: Vec<FunctionGenRecord>,
}

pub fn digest_decimal(d: &Digest) -> String {
    U256::from_big_endian(&d.0).to_string()
}

/// Type-default value of every runtime-typed state variable.
pub fn default_state(contract: &ContractDecl) -> BTreeMap<String, Value> {
    contract
        .state_vars
        .iter()
        .filter_map(|v| Some((v.name.name.clone(), default_for_type(&v.ty)?)))
        .collect()
}

/// Commitment to the default state under genesis nonces.
pub fn genesis_commitment(contract: &ContractDecl) -> StateCommitment {
    commit_state(&default_state(contract), |slot| slot_nonce(&GENESIS_SECRET, 0, slot))
}

/// F: the annotation-free contract, pretty-printed.
pub fn generate_service(checked: &CheckedContract) -> String {
    format!("{PRAGMA}\n\n{}", print_contract(&strip_contract(&checked.ast)))
}

fn capitalized(name: &str) -> String {
    let mut c = name.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

const REGISTRY: &str = "struct RegisterData {
    string verKey;
    string encKey;
    string[] TEEMRs;
    string IASReport;
}

interface CloakService {
    function registerWorker(address workerId, RegisterData deviceInfo) external;
    function verify(uint256[] proof, uint256 TEEMR, uint256 codeHash, uint256 policyHash, uint256 functionHash, uint256 oldStateHash) external returns (bool);
}
";

/// V: commitment slots, one `verify_<f>` per MPT function, and the other
/// functions passed through without annotations.
pub fn generate_verifier(checked: &CheckedContract, policy: &PrivacyPolicy, service_hash: &Digest) -> (String, Vec<FunctionGenRecord>) {
    let stripped = strip_contract(&checked.ast);
    let genesis = genesis_commitment(&checked.ast);
    let policy_hash = crate::policy::policy_hash(policy);
    let teemr = crypto::hash(crypto::tags::MEASUREMENT, &[crypto::RUNTIME_VERSION.as_bytes()]);

    let mut out = format!("{PRAGMA}\n\n{REGISTRY}\ncontract {}Verifier {{\n", checked.ast.name.name);
    let _ = writeln!(out, "    CloakService cloakService;");
    let _ = writeln!(out, "    uint256 expectedCodeHash = {};", digest_decimal(service_hash));
    let _ = writeln!(out, "    uint256 expectedPolicyHash = {};", digest_decimal(&policy_hash));
    let _ = writeln!(out, "    uint256 runtimeMR = {};", digest_decimal(&teemr));
    let _ = writeln!(out, "    uint256 stateRoot = {};", digest_decimal(&genesis.root));
    for (name, d) in &genesis.slots {
        let _ = writeln!(out, "    uint256 {name}Commitment = {};", digest_decimal(d));
    }
    for v in &stripped.state_vars {
        let _ = writeln!(out, "    {};", print_var_decl(v));
    }

    let mut records = Vec::new();
    for (f, plain) in checked.ast.functions.iter().zip(&stripped.functions) {
        let started = Instant::now();
        let name = &f.name.name;
        let kind = checked.kind_of.get(name).copied().unwrap_or(FunctionKind::Public);
        let text = if kind == FunctionKind::Mpt {
            let mutated: Vec<&String> = policy
                .function(name)
                .map(|p| p.mutate.iter().filter(|m| genesis.slots.contains_key(*m)).collect())
                .unwrap_or_default();
            verify_function(name, &mutated)
        } else {
            print_function(plain, 1)
        };
        out.push('\n');
        out.push_str(&text);
        records.push(FunctionGenRecord {
            name: name.clone(),
            kind,
            verifier_lines: text.lines().count(),
            time: started.elapsed(),
        });
    }
    out.push_str("}\n");
    (out, records)
}

fn verify_function(name: &str, mutated: &[&String]) -> String {
    let mut params = vec![
        "uint256[] proof".to_string(),
        "uint256 codeHash".into(),
        "uint256 policyHash".into(),
        "uint256 oldStateHash".into(),
        "uint256 newStateHash".into(),
        "uint256[] returnCommitments".into(),
    ];
    params.extend(mutated.iter().map(|m| format!("uint256 new{}Commitment", capitalized(m))));
    let mut out = format!("    function verify_{name}({}) public {{\n", params.join(", "));
    for check in VERIFIER_CHECKS {
        let _ = writeln!(out, "        {}", check.require_line(name));
    }
    let _ = writeln!(out, "        stateRoot = newStateHash;");
    for m in mutated {
        let _ = writeln!(out, "        {m}Commitment = new{}Commitment;", capitalized(m));
    }
    out.push_str("    }\n");
    out
}

/// Generates F and V and hashes both.
pub fn generate(checked: &CheckedContract, policy: &PrivacyPolicy) -> GeneratedArtifacts {
    let service_source = generate_service(checked);
    let service_hash = crypto::code_hash(service_source.as_bytes());
    let (verifier_source, summary) = generate_verifier(checked, policy, &service_hash);
    let verifier_hash = crypto::code_hash(verifier_source.as_bytes());
    GeneratedArtifacts { service_source, verifier_source, service_hash, verifier_hash, summary }
}

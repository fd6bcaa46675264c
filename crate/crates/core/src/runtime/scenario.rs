//! Scripted end-to-end runs: register, deploy, sessions, verification and
//! result opening, each step checked against an expected outcome.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use primitive_types::U256;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::announce::ResultAnnouncement;
use super::executor::{deploy, session_shapes, ExecError, Executor, FunctionShape, InputSource, SessionId};
use super::ledger::{ContractId, Ledger};
use super::party::{open_payload, seal_inputs};
use crate::codegen::RejectReason;
use crate::crypto::{sign_proof, ExecutorKeys, PartyKeys};
use crate::frontend::Diagnostic;
use crate::pipeline::{compile_source, Compiled};
use crate::value::{Address, Key, Value, ValueType};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Path of the `.cloak` source, relative to the scenario file.
    pub contract: String,
    pub parties: Vec<String>,
    #[serde(default = "default_executor")]
    pub executor: String,
    #[serde(default)]
    pub seed: u64,
    pub steps: Vec<Step>,
}

fn default_executor() -> String {
    "E".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    Register {
        #[serde(default = "accept")]
        expect: String,
    },
    Deploy {
        #[serde(default = "ok")]
        expect: String,
    },
    OpenSession {
        session: String,
        function: String,
        initiator: String,
        #[serde(default = "ok")]
        expect: String,
    },
    Submit {
        session: String,
        party: String,
        inputs: BTreeMap<String, Json>,
        expect: String,
    },
    Execute {
        session: String,
        #[serde(default = "ok")]
        expect: String,
    },
    Verify {
        session: String,
        #[serde(default)]
        tamper: Option<Tamper>,
        #[serde(default = "accept")]
        expect: String,
    },
    Open {
        session: String,
        party: String,
        /// Whose payload to try; defaults to the party's own.
        #[serde(default)]
        payload_of: Option<String>,
        expect: Json,
    },
    /// Reads the executor's plaintext state.
    State {
        var: String,
        #[serde(default)]
        key: Option<Json>,
        expect: Json,
    },
    /// Ledger root equals a fresh recommitment of the executor's state.
    Consistent,
}

fn accept() -> String {
    "accept".into()
}

fn ok() -> String {
    "ok".into()
}

/// Ways to corrupt an honest announcement before verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tamper {
    PolicyHash,
    CodeHash,
    OldRoot,
    ReturnCommitment,
    NewRoot,
    Signature,
    Signer,
}

impl Tamper {
    pub const ALL: [Tamper; 7] = [
        Tamper::PolicyHash,
        Tamper::CodeHash,
        Tamper::OldRoot,
        Tamper::ReturnCommitment,
        Tamper::NewRoot,
        Tamper::Signature,
        Tamper::Signer,
    ];

    /// What the verifier must answer to an announcement tampered this way.
    pub fn expected_rejection(self) -> RejectReason {
        match self {
            Tamper::PolicyHash | Tamper::CodeHash => RejectReason::HashMismatch,
            Tamper::OldRoot => RejectReason::StaleState,
            Tamper::ReturnCommitment | Tamper::NewRoot | Tamper::Signature => RejectReason::BadSignature,
            Tamper::Signer => RejectReason::UnregisteredSigner,
        }
    }

    pub fn apply(self, ann: &ResultAnnouncement) -> ResultAnnouncement {
        let mut a = ann.clone();
        match self {
            Tamper::PolicyHash => a.policy_hash.0[0] ^= 1,
            Tamper::CodeHash => a.code_hash.0[0] ^= 1,
            Tamper::OldRoot => a.old_root.0[0] ^= 1,
            Tamper::ReturnCommitment => match a.return_commitments.first_mut() {
                Some((_, d)) => d.0[0] ^= 1,
                None => a.return_commitments.push((Address::default(), Default::default())),
            },
            Tamper::NewRoot => a.new_state.root.0[0] ^= 1,
            Tamper::Signature => a.proof.0[0] ^= 1,
            Tamper::Signer => {
                let rogue = ExecutorKeys::from_name("unregistered");
                a.executor = rogue.id();
                a.proof = sign_proof(&rogue, &a.proof_fields());
            }
        }
        a
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub index: usize,
    pub op: String,
    pub expected: String,
    pub actual: String,
    pub ok: bool,
}

impl fmt::Display for StepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.ok { "ok  " } else { "FAIL" };
        write!(f, "{mark} #{:<2} {:<12} {}", self.index, self.op, self.actual)?;
        if !self.ok {
            write!(f, " (expected {})", self.expected)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub steps: Vec<StepReport>,
    pub final_root: Option<String>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| s.ok)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Format(#[from] serde_json::Error),
    #[error("contract does not compile:\n{}", render(.0))]
    Compile(Vec<String>),
}

fn render(lines: &[String]) -> String {
    lines.join("\n")
}

impl Scenario {
    pub fn load(path: &Path) -> Result<(Scenario, PathBuf), ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.into(), source })?;
        let scenario = serde_json::from_str(&text)?;
        Ok((scenario, path.parent().unwrap_or(Path::new(".")).to_path_buf()))
    }
}

/// Name of an enum variant from its `Debug` output.
pub fn variant_name(e: &impl fmt::Debug) -> String {
    let s = format!("{e:?}");
    s.split(['(', ' ', '{']).next().unwrap_or_default().to_string()
}

/// A live simulation: ledger, executor and named parties.
pub struct World {
    pub ledger: Ledger,
    pub executor: Executor,
    pub parties: BTreeMap<String, PartyKeys>,
    pub compiled: Compiled,
    pub contract: Option<ContractId>,
    pub sessions: BTreeMap<String, SessionId>,
    pub announcements: BTreeMap<String, ResultAnnouncement>,
    shapes: BTreeMap<String, FunctionShape>,
    rng: ChaCha20Rng,
}

impl World {
    pub fn new(compiled: Compiled, parties: &[String], executor: &str, seed: u64) -> Self {
        let shapes = session_shapes(&compiled.checked.ast, &compiled.checked.kind_of);
        Self {
            ledger: Ledger::default(),
            executor: Executor::new(ExecutorKeys::from_name(executor), seed),
            parties: parties.iter().map(|p| (p.clone(), PartyKeys::from_name(p))).collect(),
            compiled,
            contract: None,
            sessions: BTreeMap::new(),
            announcements: BTreeMap::new(),
            shapes,
            rng: ChaCha20Rng::seed_from_u64(seed ^ 0x5eed),
        }
    }

    pub fn party(&self, name: &str) -> Result<&PartyKeys, String> {
        self.parties.get(name).ok_or_else(|| format!("unknown party `{name}`"))
    }

    fn address_names(&self) -> BTreeMap<String, Address> {
        self.parties.iter().map(|(n, k)| (n.clone(), k.address)).collect()
    }

    fn name_of(&self, a: &Address) -> String {
        self.parties.iter().find(|(_, k)| k.address == *a).map(|(n, _)| n.clone()).unwrap_or(a.to_string())
    }

    /// Human form of a value: party addresses print as their names.
    pub fn show(&self, v: &Value) -> String {
        match v {
            Value::Address(a) => self.name_of(a),
            Value::Array { items, .. } => format!("[{}]", items.iter().map(|i| self.show(i)).collect::<Vec<_>>().join(", ")),
            other => other.to_string(),
        }
    }

    fn run_step(&mut self, step: &Step) -> Result<(String, String), String> {
        match step {
            Step::Register { expect } => {
                let actual = match self.ledger.register_worker(self.executor.id(), self.executor.register_data()) {
                    Ok(()) => "accept".to_string(),
                    Err(e) => e.name().to_string(),
                };
                Ok((expect.clone(), actual))
            }
            Step::Deploy { expect } => {
                let actual = match deploy(&mut self.ledger, &self.executor, &self.compiled) {
                    Ok(id) => {
                        self.contract = Some(id);
                        "ok".to_string()
                    }
                    Err(e) => variant_name(&e),
                };
                Ok((expect.clone(), actual))
            }
            Step::OpenSession { session, function, initiator, expect } => {
                let contract = self.contract.ok_or("no contract deployed")?;
                let who = self.party(initiator)?.address;
                let actual = match self.executor.open_session(contract, function, who) {
                    Ok(id) => {
                        self.sessions.insert(session.clone(), id);
                        "ok".to_string()
                    }
                    Err(e) => variant_name(&e),
                };
                Ok((expect.clone(), actual))
            }
            Step::Submit { session, party, inputs, expect } => {
                let contract = self.contract.ok_or("no contract deployed")?;
                let sid = *self.sessions.get(session).ok_or_else(|| format!("unknown session `{session}`"))?;
                let keys = self.party(party)?.clone();
                let function = self.function_of(session)?;
                let shape = self.shapes.get(&function).ok_or_else(|| format!("no shape for `{function}`"))?;
                let names = self.address_names();
                let mut values = BTreeMap::new();
                for (name, json) in inputs {
                    let ty = shape.params.iter().find(|p| &p.name == name).map(|p| match (&p.source, &p.ty) {
                        (InputSource::ClassMember(_), ValueType::Array(e)) => (**e).clone(),
                        (_, t) => t.clone(),
                    });
                    values.insert(name.clone(), json_to_value(json, ty.as_ref(), &names)?);
                }
                let ct = seal_inputs(&keys, &self.executor.enc_key(), contract, &function, sid, values, &mut self.rng);
                let actual = match self.executor.submit_input(&sid, keys.address, &ct) {
                    Ok(status) => variant_name(&status).to_lowercase(),
                    Err(e) => variant_name(&e),
                };
                Ok((expect.clone(), actual))
            }
            Step::Execute { session, expect } => {
                let sid = *self.sessions.get(session).ok_or_else(|| format!("unknown session `{session}`"))?;
                let actual = match self.executor.execute(&sid, &self.ledger) {
                    Ok(ann) => {
                        self.announcements.insert(session.clone(), ann);
                        "ok".to_string()
                    }
                    Err(ExecError::Runtime(e)) => variant_name(&e),
                    Err(e) => variant_name(&e),
                };
                Ok((expect.clone(), actual))
            }
            Step::Verify { session, tamper, expect } => {
                let ann = self.announcements.get(session).ok_or_else(|| format!("no announcement for `{session}`"))?;
                let ann = match tamper {
                    Some(t) => t.apply(ann),
                    None => ann.clone(),
                };
                let before = self.ledger.state_root(&ann.contract);
                let actual = match self.ledger.verify_and_update(&ann) {
                    Ok(()) => "accept".to_string(),
                    Err(r) => {
                        if self.ledger.state_root(&ann.contract) != before {
                            return Err("rejected announcement changed the ledger root".into());
                        }
                        variant_name(&r)
                    }
                };
                self.executor.sync(&self.ledger);
                Ok((expect.clone(), actual))
            }
            Step::Open { session, party, payload_of, expect } => {
                let ann = self.announcements.get(session).ok_or_else(|| format!("no announcement for `{session}`"))?;
                let keys = self.party(party)?;
                let target = self.party(payload_of.as_deref().unwrap_or(party))?.address;
                match open_payload(keys, ann, &target) {
                    Ok(share) => {
                        let Json::Object(want) = expect else {
                            return Ok((expect.to_string(), "opened".into()));
                        };
                        let names = self.address_names();
                        let mut got = Vec::new();
                        let mut exp = Vec::new();
                        for (name, j) in want {
                            let actual = share.get(name);
                            let expected = json_to_value(j, actual.map(Value::ty).as_ref(), &names)?;
                            exp.push(format!("{name}={}", self.show(&expected)));
                            got.push(format!("{name}={}", actual.map(|v| self.show(v)).unwrap_or("<absent>".into())));
                        }
                        Ok((exp.join(" "), got.join(" ")))
                    }
                    Err(e) => Ok((json_label(expect), variant_name(&e))),
                }
            }
            Step::State { var, key, expect } => {
                let contract = self.contract.ok_or("no contract deployed")?;
                let state = self.executor.plaintext_state(&contract).ok_or("contract not installed")?;
                let names = self.address_names();
                let slot = state.get(var).ok_or_else(|| format!("no state variable `{var}`"))?;
                let value = match (slot, key) {
                    (Value::Map { key_ty, value_ty, entries }, Some(k)) => {
                        let k = json_to_value(k, Some(key_ty), &names)?.as_key().ok_or("bad key")?;
                        entries.get(&k).cloned().unwrap_or_else(|| value_ty.default_value())
                    }
                    (v, None) => v.clone(),
                    _ => return Err(format!("`{var}` is not a mapping")),
                };
                let expected = json_to_value(expect, Some(&value.ty()), &names)?;
                Ok((self.show(&expected), self.show(&value)))
            }
            Step::Consistent => {
                let contract = self.contract.ok_or("no contract deployed")?;
                let ledger = self.ledger.state_root(&contract);
                let mine = self.executor.recommit(&contract).map(|c| c.root);
                let actual = if ledger.is_some() && ledger == mine { "consistent" } else { "diverged" };
                Ok(("consistent".into(), actual.into()))
            }
        }
    }

    fn function_of(&self, session: &str) -> Result<String, String> {
        let sid = self.sessions.get(session).ok_or_else(|| format!("unknown session `{session}`"))?;
        self.executor.session_function(sid).ok_or_else(|| format!("executor forgot session `{session}`"))
    }
}

fn json_label(j: &Json) -> String {
    match j {
        Json::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn op_name(step: &Step) -> String {
    let v = serde_json::to_value(step).expect("steps serialize");
    v["op"].as_str().unwrap_or("?").to_string()
}

/// Converts scenario JSON to a runtime value. Numbers and decimal strings
/// are uints, party names are their addresses. Without a usable type hint
/// the JSON's own shape decides, so ill-typed inputs reach the executor.
pub fn json_to_value(j: &Json, ty: Option<&ValueType>, parties: &BTreeMap<String, Address>) -> Result<Value, String> {
    let address = |s: &str| -> Result<Address, String> {
        parties.get(s).copied().map(Ok).unwrap_or_else(|| s.parse().map_err(|e| format!("`{s}`: {e}")))
    };
    let uint = |s: &str| U256::from_dec_str(s).map_err(|e| format!("`{s}` is not a uint: {e:?}"));
    Ok(match (j, ty) {
        (Json::Bool(b), _) => Value::Bool(*b),
        (Json::Number(n), _) => Value::Uint(uint(&n.to_string())?),
        (Json::String(s), Some(ValueType::Uint)) => Value::Uint(uint(s)?),
        (Json::String(s), Some(ValueType::Address)) => Value::Address(address(s)?),
        (Json::String(s), _) => match uint(s) {
            Ok(u) => Value::Uint(u),
            Err(_) => Value::Address(address(s)?),
        },
        (Json::Array(items), Some(ValueType::Array(e))) => Value::Array {
            elem_ty: (**e).clone(),
            items: items.iter().map(|i| json_to_value(i, Some(e), parties)).collect::<Result<_, _>>()?,
        },
        (Json::Array(items), _) => {
            let items: Vec<Value> = items.iter().map(|i| json_to_value(i, None, parties)).collect::<Result<_, _>>()?;
            let elem_ty = items.first().map(Value::ty).unwrap_or(ValueType::Uint);
            Value::Array { elem_ty, items }
        }
        (Json::Object(m), Some(ValueType::Map(k, v))) => {
            let mut entries = BTreeMap::new();
            for (key, val) in m {
                let key: Key = json_to_value(&Json::String(key.clone()), Some(k), parties)?.as_key().ok_or("bad map key")?;
                entries.insert(key, json_to_value(val, Some(v), parties)?);
            }
            Value::Map { key_ty: (**k).clone(), value_ty: (**v).clone(), entries }
        }
        (other, _) => return Err(format!("cannot read {other} as a value")),
    })
}

pub fn compile_for_scenario(scenario: &Scenario, base: &Path) -> Result<Compiled, ScenarioError> {
    let path = base.join(&scenario.contract);
    let source = std::fs::read_to_string(&path).map_err(|source| ScenarioError::Io { path: path.clone(), source })?;
    let shown = path.display().to_string();
    compile_source(&shown, &source)
        .map_err(|d: Vec<Diagnostic>| ScenarioError::Compile(d.iter().map(|d| d.render(&shown, &source)).collect()))
}

/// Runs every step; a step that cannot run at all counts as a failed step.
pub fn run_scenario(scenario: &Scenario, base: &Path) -> Result<(ScenarioReport, World), ScenarioError> {
    let compiled = compile_for_scenario(scenario, base)?;
    let mut world = World::new(compiled, &scenario.parties, &scenario.executor, scenario.seed);
    let mut steps = Vec::new();
    for (index, step) in scenario.steps.iter().enumerate() {
        let (expected, actual) = match world.run_step(step) {
            Ok(pair) => pair,
            Err(msg) => ("step runs".into(), format!("error: {msg}")),
        };
        steps.push(StepReport { index, op: op_name(step), ok: expected == actual, expected, actual });
    }
    let final_root = world.contract.and_then(|c| world.ledger.state_root(&c)).map(|d| d.to_hex());
    Ok((ScenarioReport { name: scenario.name.clone(), steps, final_root }, world))
}

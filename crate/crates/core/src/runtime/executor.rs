//! The enclave executor: holds plaintext state, collects sealed inputs per
//! session, runs the service function and emits a signed announcement.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Mutex, MutexGuard};

use crypto_box::PublicKey;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::announce::ResultAnnouncement;
use super::interp::{interpret, RuntimeError};
use super::ledger::{ContractId, DeployError, Ledger};
use super::party::{InputEnvelope, NamedValue, ReturnShare};
use crate::codegen::{default_state, genesis_commitment};
use crate::crypto::{
    commit, commit_state, commit_tuple, hash, mock_attest, seal, sign_proof, slot_nonce, tags, Digest, ExecutorKeys, ProofFields,
    RegisterData, StateCommitment, GENESIS_SECRET,
};
use crate::frontend::ast::{ContractDecl, TypeKind};
use crate::frontend::strip_contract;
use crate::owner::{FunctionKind, OwnerAtom, OwnerEnv};
use crate::pipeline::Compiled;
use crate::policy::PrivacyPolicy;
use crate::value::{Address, Value, ValueType};

pub type SessionId = Digest;

/// Who supplies an argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSource {
    /// The party that opened the session.
    Initiator,
    /// One element per member of the party class, from that member.
    ClassMember(String),
}

/// Where a party class gets its member list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassBinding {
    Param(String),
    State(String),
}

#[derive(Debug, Clone)]
pub struct ParamShape {
    pub name: String,
    pub ty: ValueType,
    pub source: InputSource,
}

#[derive(Debug, Clone)]
pub struct FunctionShape {
    pub kind: FunctionKind,
    pub params: Vec<ParamShape>,
    pub bindings: BTreeMap<String, ClassBinding>,
}

/// Input shape of every runtime-callable function of `contract`.
pub fn session_shapes(contract: &ContractDecl, kind_of: &BTreeMap<String, FunctionKind>) -> BTreeMap<String, FunctionShape> {
    let (mut env, _) = OwnerEnv::new(contract);
    let state_bindings: BTreeMap<String, String> = contract
        .state_vars
        .iter()
        .filter_map(|v| env.lookup(&v.name.name).and_then(|i| Some((i.binds_class.clone()?, i.name.clone()))))
        .collect();
    let mut out = BTreeMap::new();
    'functions: for f in &contract.functions {
        env.enter_function(f);
        let mut params = Vec::new();
        let mut bindings = BTreeMap::new();
        let sig: Vec<_> = env.signature_vars().filter(|v| v.kind == crate::owner::VarKind::Param).cloned().collect();
        for (i, v) in sig.iter().enumerate() {
            let Some(ty) = ValueType::from_type_name(&v.ty) else { continue 'functions };
            let class = match (&v.ty.kind, v.owner.iter().find_map(class_of)) {
                (TypeKind::Array { .. }, Some(c)) => Some(c),
                _ => None,
            };
            let source = match class {
                Some(c) => {
                    let binding = sig
                        .iter()
                        .find(|p| p.binds_class.as_deref() == Some(c.as_str()))
                        .map(|p| ClassBinding::Param(p.name.clone()))
                        .or_else(|| state_bindings.get(&c).map(|s| ClassBinding::State(s.clone())));
                    match binding {
                        Some(b) => {
                            bindings.insert(c.clone(), b);
                            InputSource::ClassMember(c)
                        }
                        None => InputSource::Initiator,
                    }
                }
                None => InputSource::Initiator,
            };
            let name = if v.name.is_empty() { format!("#{i}") } else { v.name.clone() };
            params.push(ParamShape { name, ty, source });
        }
        let kind = kind_of.get(&f.name.name).copied().unwrap_or(FunctionKind::Public);
        out.insert(f.name.name.clone(), FunctionShape { kind, params, bindings });
    }
    out
}

fn class_of(a: &OwnerAtom) -> Option<String> {
    match a {
        OwnerAtom::PartyClass(c) => Some(c.clone()),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionStatus {
    Collecting,
    Ready,
    Executed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("unknown contract")]
    UnknownContract,
    #[error("function `{0}` cannot be called through a session")]
    UnknownFunction(String),
    #[error("unknown session")]
    UnknownSession,
    #[error("session is no longer collecting inputs")]
    NotCollecting,
    #[error("input does not decrypt or parse")]
    DecryptFailure,
    #[error("input signature, sender or session binding is wrong")]
    Unauthenticated,
    #[error("input type mismatch: {0}")]
    TypeMismatch(String),
    #[error("{0} is not an expected party of this session")]
    UnknownParty(Address),
    #[error("{0} already submitted")]
    DuplicateSubmission(Address),
    #[error("party class lists {0} more than once")]
    DuplicateBinding(Address),
    #[error("an MPT needs at least two parties, this session has {0}")]
    TooFewParties(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("unknown session")]
    UnknownSession,
    #[error("session is not ready")]
    NotReady,
    #[error("cached state does not match the ledger root")]
    OutOfSync,
    #[error("execution aborted: {0}")]
    Runtime(#[from] RuntimeError),
}

#[derive(Debug, Clone)]
struct Submission {
    values: BTreeMap<String, Value>,
    enc_key: PublicKey,
}

#[derive(Debug, Clone)]
struct Session {
    contract: ContractId,
    function: String,
    initiator: Address,
    /// Known once the initiator has submitted (or at once for state-bound classes).
    expected: Option<BTreeSet<Address>>,
    members: BTreeMap<String, Vec<Address>>,
    received: BTreeMap<Address, Submission>,
    status: SessionStatus,
}

#[derive(Debug, Clone)]
struct Snapshot {
    state: BTreeMap<String, Value>,
    commitment: StateCommitment,
    version: u64,
    /// Version that last committed each slot.
    written_at: BTreeMap<String, u64>,
}

#[derive(Debug, Clone)]
struct Deployed {
    service: ContractDecl,
    policy: PrivacyPolicy,
    policy_hash: Digest,
    code_hash: Digest,
    shapes: BTreeMap<String, FunctionShape>,
    secret: [u8; 32],
    current: Snapshot,
    /// Executed but not yet accepted, keyed by new root.
    pending: BTreeMap<Digest, Snapshot>,
    sessions_opened: u64,
}

struct Inner {
    contracts: BTreeMap<ContractId, Deployed>,
    sessions: BTreeMap<SessionId, Session>,
    rng: ChaCha20Rng,
}

/// A single enclave executor. All methods take `&self`; mutations are
/// serialized by an internal lock.
pub struct Executor {
    keys: ExecutorKeys,
    inner: Mutex<Inner>,
}

impl Executor {
    pub fn new(keys: ExecutorKeys, seed: u64) -> Self {
        let inner = Inner { contracts: BTreeMap::new(), sessions: BTreeMap::new(), rng: ChaCha20Rng::seed_from_u64(seed) };
        Self { keys, inner: Mutex::new(inner) }
    }

    pub fn id(&self) -> Address {
        self.keys.id()
    }

    pub fn enc_key(&self) -> PublicKey {
        self.keys.enc_key()
    }

    pub fn register_data(&self) -> RegisterData {
        mock_attest(&self.keys)
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Loads a compiled contract under `id` with type-default state.
    pub fn install(&self, id: ContractId, compiled: &Compiled) {
        let ast = &compiled.checked.ast;
        let state = default_state(ast);
        let deployed = Deployed {
            service: strip_contract(ast),
            policy: compiled.policy.clone(),
            policy_hash: compiled.policy_hash,
            code_hash: compiled.artifacts.service_hash,
            shapes: session_shapes(ast, &compiled.checked.kind_of),
            secret: self.keys.state_secret(&id),
            current: Snapshot { commitment: genesis_commitment(ast), state, version: 0, written_at: BTreeMap::new() },
            pending: BTreeMap::new(),
            sessions_opened: 0,
        };
        self.lock().contracts.insert(id, deployed);
    }

    /// Plaintext state of a contract. Only tests and the demo look at this.
    pub fn plaintext_state(&self, id: &ContractId) -> Option<BTreeMap<String, Value>> {
        self.lock().contracts.get(id).map(|d| d.current.state.clone())
    }

    /// Commitment the executor believes is current.
    pub fn cached_commitment(&self, id: &ContractId) -> Option<StateCommitment> {
        self.lock().contracts.get(id).map(|d| d.current.commitment.clone())
    }

    /// Recommits the cached plaintext state from scratch.
    pub fn recommit(&self, id: &ContractId) -> Option<StateCommitment> {
        let inner = self.lock();
        let d = inner.contracts.get(id)?;
        let snap = &d.current;
        Some(commit_state(&snap.state, |slot| {
            let version = snap.written_at.get(slot).copied().unwrap_or(0);
            slot_nonce(if version == 0 { &GENESIS_SECRET } else { &d.secret }, version, slot)
        }))
    }

    /// Adopts the pending state the ledger accepted, if any.
    pub fn sync(&self, ledger: &Ledger) {
        let mut inner = self.lock();
        for (id, d) in inner.contracts.iter_mut() {
            let Some(root) = ledger.state_root(id) else { continue };
            if root != d.current.commitment.root {
                if let Some(next) = d.pending.remove(&root) {
                    d.current = next;
                    d.pending.retain(|_, p| p.version > d.current.version);
                }
            }
        }
    }

    pub fn open_session(&self, contract: ContractId, function: &str, initiator: Address) -> Result<SessionId, SessionError> {
        let mut inner = self.lock();
        let d = inner.contracts.get_mut(&contract).ok_or(SessionError::UnknownContract)?;
        let shape = d.shapes.get(function).ok_or_else(|| SessionError::UnknownFunction(function.to_string()))?.clone();
        d.sessions_opened += 1;
        let id = hash(
            tags::SESSION,
            &[&contract.0, function.as_bytes(), &initiator.0, &d.sessions_opened.to_be_bytes()],
        );
        let state = d.current.state.clone();
        let mut session = Session {
            contract,
            function: function.to_string(),
            initiator,
            expected: None,
            members: BTreeMap::new(),
            received: BTreeMap::new(),
            status: SessionStatus::Collecting,
        };
        // Classes bound by state are known before anyone submits.
        if shape.bindings.values().all(|b| matches!(b, ClassBinding::State(_))) {
            resolve_members(&shape, &mut session, &BTreeMap::new(), &state)?;
        }
        inner.sessions.insert(id, session);
        Ok(id)
    }

    pub fn session_status(&self, id: &SessionId) -> Option<SessionStatus> {
        self.lock().sessions.get(id).map(|s| s.status)
    }

    pub fn session_function(&self, id: &SessionId) -> Option<String> {
        self.lock().sessions.get(id).map(|s| s.function.clone())
    }

    /// Parties whose inputs the session waits for, once known.
    pub fn expected_parties(&self, id: &SessionId) -> Option<BTreeSet<Address>> {
        self.lock().sessions.get(id).and_then(|s| s.expected.clone())
    }

    /// Decrypts, authenticates and type-checks one party's inputs.
    pub fn submit_input(&self, session_id: &SessionId, party: Address, ciphertext: &[u8]) -> Result<SessionStatus, SessionError> {
        let plain = self.keys.open(ciphertext).map_err(|_| SessionError::DecryptFailure)?;
        let env: InputEnvelope = serde_json::from_slice(&plain).map_err(|_| SessionError::DecryptFailure)?;

        let mut inner = self.lock();
        let Inner { contracts, sessions, .. } = &mut *inner;
        let session = sessions.get_mut(session_id).ok_or(SessionError::UnknownSession)?;
        if session.status != SessionStatus::Collecting {
            return Err(SessionError::NotCollecting);
        }
        let b = &env.body;
        if !env.authentic()
            || b.sender != party
            || b.session != *session_id
            || b.contract != session.contract
            || b.function != session.function
        {
            return Err(SessionError::Unauthenticated);
        }
        let enc_key = env.enc_key().ok_or(SessionError::Unauthenticated)?;
        let d = contracts.get(&session.contract).ok_or(SessionError::UnknownContract)?;
        let shape = &d.shapes[&session.function];

        if session.expected.is_none() && party != session.initiator {
            return Err(SessionError::UnknownParty(party));
        }
        if session.received.contains_key(&party) {
            return Err(SessionError::DuplicateSubmission(party));
        }
        if let Some(exp) = &session.expected {
            if !exp.contains(&party) {
                return Err(SessionError::UnknownParty(party));
            }
        }

        // Which slots this party fills, given the member lists known so far.
        let mut trial = session.clone();
        if trial.expected.is_none() {
            resolve_members(shape, &mut trial, &b.values, &d.current.state)?;
        }
        let mut required: BTreeMap<&str, ValueType> = BTreeMap::new();
        for p in &shape.params {
            match &p.source {
                InputSource::Initiator if party == trial.initiator => {
                    required.insert(&p.name, p.ty.clone());
                }
                InputSource::ClassMember(c) if trial.members.get(c).is_some_and(|m| m.contains(&party)) => {
                    let ValueType::Array(elem) = &p.ty else { unreachable!("class inputs are arrays") };
                    required.insert(&p.name, (**elem).clone());
                }
                _ => {}
            }
        }
        let given: BTreeSet<&str> = b.values.keys().map(String::as_str).collect();
        let wanted: BTreeSet<&str> = required.keys().copied().collect();
        if given != wanted {
            return Err(SessionError::TypeMismatch(format!("expected inputs {wanted:?}, got {given:?}")));
        }
        for (name, ty) in &required {
            if !b.values[*name].conforms_to(ty) {
                return Err(SessionError::TypeMismatch(format!("`{name}` must be {ty}")));
            }
        }

        *session = trial;
        session.received.insert(party, Submission { values: env.body.values, enc_key });
        let expected = session.expected.as_ref().expect("resolved above");
        if expected.iter().all(|a| session.received.contains_key(a)) {
            session.status = SessionStatus::Ready;
        }
        Ok(session.status)
    }

    /// Runs a ready session. A runtime error aborts it and changes nothing.
    pub fn execute(&self, session_id: &SessionId, ledger: &Ledger) -> Result<ResultAnnouncement, ExecError> {
        self.sync(ledger);
        let mut inner = self.lock();
        let Inner { contracts, sessions, rng } = &mut *inner;
        let session = sessions.get_mut(session_id).ok_or(ExecError::UnknownSession)?;
        if session.status != SessionStatus::Ready {
            return Err(ExecError::NotReady);
        }
        let d = contracts.get_mut(&session.contract).ok_or(ExecError::UnknownSession)?;
        if ledger.state_root(&session.contract) != Some(d.current.commitment.root) {
            return Err(ExecError::OutOfSync);
        }
        let shape = &d.shapes[&session.function];
        let init = &session.received[&session.initiator].values;
        let args: Vec<Value> = shape
            .params
            .iter()
            .map(|p| match &p.source {
                InputSource::Initiator => init[&p.name].clone(),
                InputSource::ClassMember(c) => {
                    let ValueType::Array(elem) = &p.ty else { unreachable!("class inputs are arrays") };
                    let items = session.members[c].iter().map(|a| session.received[a].values[&p.name].clone()).collect();
                    Value::Array { elem_ty: (**elem).clone(), items }
                }
            })
            .collect();

        let outcome = match interpret(&d.service, &session.function, args.clone(), d.current.state.clone(), session.initiator) {
            Ok(o) => o,
            Err(e) => {
                session.status = SessionStatus::Aborted;
                return Err(e.into());
            }
        };

        let version = d.current.version + 1;
        let mutated: BTreeSet<&String> =
            d.policy.function(&session.function).map(|f| f.mutate.iter().collect()).unwrap_or_default();
        let mut slots = d.current.commitment.slots.clone();
        let mut written_at = d.current.written_at.clone();
        for (name, v) in &outcome.state {
            if mutated.contains(name) || d.current.state.get(name) != Some(v) {
                slots.insert(name.clone(), commit(v, &slot_nonce(&d.secret, version, name)).digest);
                written_at.insert(name.clone(), version);
            }
        }
        let new_state = StateCommitment::from_slots(slots);

        // r_i: public returns plus those owned by party i.
        let f = d.service.function(&session.function).expect("shape exists only for known functions");
        let ret_policy = d.policy.function(&session.function).map(|p| p.returns.clone()).unwrap_or_default();
        let named: Vec<NamedValue> = outcome
            .returns
            .iter()
            .enumerate()
            .map(|(i, v)| NamedValue {
                name: f.returns.get(i).and_then(|r| r.name.as_ref()).map(|n| n.name.clone()).unwrap_or(format!("#{i}")),
                value: v.clone(),
            })
            .collect();
        let lookup_address = |name: &str| -> Option<Address> {
            named
                .iter()
                .find(|n| n.name == name)
                .map(|n| &n.value)
                .or_else(|| shape.params.iter().position(|p| p.name == name).map(|i| &args[i]))
                .or_else(|| outcome.state.get(name))
                .and_then(Value::as_address)
        };
        let recipients: Vec<Address> = session.expected.clone().unwrap_or_default().into_iter().collect();
        let mut return_commitments = Vec::new();
        let mut payloads = BTreeMap::new();
        for party in &recipients {
            let share: Vec<NamedValue> = named
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    let owner = ret_policy.get(*i).map(|e| e.owner.as_str()).unwrap_or("all");
                    owner.split(',').any(|atom| match atom {
                        "all" => true,
                        "me" => *party == session.initiator,
                        a => a.strip_prefix("id:").and_then(lookup_address) == Some(*party),
                    })
                })
                .map(|(_, n)| n.clone())
                .collect();
            let nonce = slot_nonce(&d.secret, version, &format!("return:{party}"));
            let values: Vec<Value> = share.iter().map(|n| n.value.clone()).collect();
            return_commitments.push((*party, commit_tuple(&values, &nonce).digest));
            let payload = ReturnShare { returns: share, nonce: Digest(nonce) };
            let json = serde_json::to_vec(&payload).expect("share serializes");
            payloads.insert(*party, seal(&session.received[party].enc_key, &json, rng));
        }
        return_commitments.sort();

        let fields = ProofFields {
            policy_hash: d.policy_hash,
            code_hash: d.code_hash,
            old_root: d.current.commitment.root,
            return_commitments: return_commitments.clone(),
            new_root: new_state.root,
        };
        let proof = sign_proof(&self.keys, &fields);
        d.pending.insert(new_state.root, Snapshot { state: outcome.state, commitment: new_state.clone(), version, written_at });
        session.status = SessionStatus::Executed;
        Ok(ResultAnnouncement {
            contract: session.contract,
            function: session.function.clone(),
            session: *session_id,
            executor: self.keys.id(),
            policy_hash: d.policy_hash,
            code_hash: d.code_hash,
            old_root: fields.old_root,
            return_commitments,
            new_state,
            proof,
            payloads,
        })
    }
}

/// Fixes class member lists and the expected party set from the
/// initiator's inputs or contract state.
fn resolve_members(
    shape: &FunctionShape,
    session: &mut Session,
    initiator_values: &BTreeMap<String, Value>,
    state: &BTreeMap<String, Value>,
) -> Result<(), SessionError> {
    let mut expected = BTreeSet::from([session.initiator]);
    for (class, binding) in &shape.bindings {
        let list = match binding {
            ClassBinding::Param(p) => initiator_values.get(p),
            ClassBinding::State(s) => state.get(s),
        };
        let addrs: Vec<Address> = match list {
            Some(Value::Array { items, .. }) => items.iter().filter_map(Value::as_address).collect(),
            _ => return Err(SessionError::TypeMismatch(format!("party class `{class}` needs an address list"))),
        };
        let mut seen = BTreeSet::new();
        for a in &addrs {
            if !seen.insert(*a) {
                return Err(SessionError::DuplicateBinding(*a));
            }
        }
        expected.extend(addrs.iter().copied());
        session.members.insert(class.clone(), addrs);
    }
    if shape.kind == FunctionKind::Mpt && expected.len() < 2 {
        return Err(SessionError::TooFewParties(expected.len()));
    }
    session.expected = Some(expected);
    Ok(())
}

/// Deploys `compiled` to the ledger and loads it into `executor`.
pub fn deploy(ledger: &mut Ledger, executor: &Executor, compiled: &Compiled) -> Result<ContractId, DeployError> {
    let initial = genesis_commitment(&compiled.checked.ast);
    let id = ledger.deploy(executor.id(), compiled.name(), compiled.policy_hash, compiled.artifacts.service_hash, initial)?;
    executor.install(id, compiled);
    Ok(id)
}

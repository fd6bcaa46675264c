//! In-memory chain: worker registry, deployed verifiers and the
//! announcement log.

use std::collections::BTreeMap;

use ed25519_dalek::VerifyingKey;
use serde::{Deserialize, Serialize};

use super::announce::ResultAnnouncement;
use crate::codegen::RejectReason;
use crate::crypto::{
    address_of, hash, ias_root, state_root, tags, validate_register_data, verify_proof, AttestError, AttestedWorker, Digest,
    RegisterData, StateCommitment,
};
use crate::value::Address;

pub type ContractId = Digest;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegisterReject {
    #[error("bad attestation report: {0}")]
    BadReport(String),
    #[error("report does not bind the presented keys")]
    KeyMismatch,
    #[error("worker is already registered")]
    Duplicate,
}

impl RegisterReject {
    pub fn name(&self) -> &'static str {
        match self {
            RegisterReject::BadReport(_) => "BadReport",
            RegisterReject::KeyMismatch => "KeyMismatch",
            RegisterReject::Duplicate => "Duplicate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeployError {
    #[error("executor is not a registered worker")]
    UnregisteredExecutor,
}

#[derive(Debug, Clone)]
pub struct Worker {
    pub data: RegisterData,
    pub attested: AttestedWorker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deployment {
    pub name: String,
    pub executor: Address,
    pub policy_hash: Digest,
    pub code_hash: Digest,
    /// Runtime measurement the verifier accepts.
    pub teemr: Digest,
    pub state: StateCommitment,
}

#[derive(Debug, Clone)]
pub struct Ledger {
    ias_root: VerifyingKey,
    workers: BTreeMap<Address, Worker>,
    deployments: BTreeMap<ContractId, Deployment>,
    log: Vec<ResultAnnouncement>,
    deploy_counter: u64,
}

impl Default for Ledger {
    fn default() -> Self {
        Self::new(ias_root().verifying_key())
    }
}

impl Ledger {
    pub fn new(ias_root: VerifyingKey) -> Self {
        Self { ias_root, workers: BTreeMap::new(), deployments: BTreeMap::new(), log: Vec::new(), deploy_counter: 0 }
    }

    pub fn register_worker(&mut self, worker_id: Address, data: RegisterData) -> Result<(), RegisterReject> {
        let attested = validate_register_data(&data, &self.ias_root).map_err(|e| match e {
            AttestError::BadReport(m) => RegisterReject::BadReport(m),
            AttestError::KeyMismatch => RegisterReject::KeyMismatch,
        })?;
        if address_of(&attested.ver_key) != worker_id {
            return Err(RegisterReject::KeyMismatch);
        }
        if self.workers.contains_key(&worker_id) {
            return Err(RegisterReject::Duplicate);
        }
        self.workers.insert(worker_id, Worker { data, attested });
        Ok(())
    }

    pub fn worker(&self, id: &Address) -> Option<&Worker> {
        self.workers.get(id)
    }

    /// Records a verifier for a contract served by `executor`.
    pub fn deploy(
        &mut self,
        executor: Address,
        name: &str,
        policy_hash: Digest,
        code_hash: Digest,
        initial: StateCommitment,
    ) -> Result<ContractId, DeployError> {
        let worker = self.workers.get(&executor).ok_or(DeployError::UnregisteredExecutor)?;
        let teemr = worker.attested.teemr;
        self.deploy_counter += 1;
        let id = hash(
            tags::CONTRACT_ID,
            &[name.as_bytes(), &code_hash.0, &executor.0, &self.deploy_counter.to_be_bytes()],
        );
        self.deployments.insert(id, Deployment { name: name.to_string(), executor, policy_hash, code_hash, teemr, state: initial });
        Ok(id)
    }

    pub fn deployment(&self, id: &ContractId) -> Option<&Deployment> {
        self.deployments.get(id)
    }

    pub fn state_root(&self, id: &ContractId) -> Option<Digest> {
        self.deployments.get(id).map(|d| d.state.root)
    }

    pub fn log(&self) -> &[ResultAnnouncement] {
        &self.log
    }

    /// The verifier contract: checks signer, hashes, freshness and the
    /// proof signature, then moves the committed state forward.
    pub fn verify_and_update(&mut self, ann: &ResultAnnouncement) -> Result<(), RejectReason> {
        let dep = self.deployments.get(&ann.contract).ok_or(RejectReason::HashMismatch)?;
        let worker = self.workers.get(&ann.executor).ok_or(RejectReason::UnregisteredSigner)?;
        if worker.attested.teemr != dep.teemr {
            return Err(RejectReason::UnregisteredSigner);
        }
        if ann.policy_hash != dep.policy_hash || ann.code_hash != dep.code_hash {
            return Err(RejectReason::HashMismatch);
        }
        if ann.old_root != dep.state.root {
            return Err(RejectReason::StaleState);
        }
        if state_root(&ann.new_state.slots) != ann.new_state.root
            || !verify_proof(&worker.attested.ver_key, &ann.proof_fields(), &ann.proof)
        {
            return Err(RejectReason::BadSignature);
        }
        let dep = self.deployments.get_mut(&ann.contract).expect("checked above");
        dep.state = ann.new_state.clone();
        self.log.push(ann.clone());
        Ok(())
    }

    /// Everything publicly visible on the chain, as JSON.
    pub fn export_json(&self) -> serde_json::Value {
        let workers: BTreeMap<String, &RegisterData> = self.workers.iter().map(|(k, w)| (k.to_string(), &w.data)).collect();
        let deployments: BTreeMap<String, &Deployment> = self.deployments.iter().map(|(k, d)| (k.to_hex(), d)).collect();
        serde_json::json!({
            "workers": workers,
            "deployments": deployments,
            "log": self.log,
        })
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{hash, tags, Digest};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Commitment {
    pub digest: Digest,
}

/// H(0x01 ‖ enc(value) ‖ nonce).
pub fn commit(value: &Value, nonce: &[u8; 32]) -> Commitment {
    Commitment { digest: hash(tags::VALUE_COMMIT, &[&value.encode(), nonce]) }
}

/// H(0x01 ‖ u64 count ‖ enc(v_1) ‖ … ‖ enc(v_n) ‖ nonce), for a party's return share.
pub fn commit_tuple(values: &[Value], nonce: &[u8; 32]) -> Commitment {
    let mut payload = (values.len() as u64).to_be_bytes().to_vec();
    for v in values {
        payload.extend_from_slice(&v.encode());
    }
    Commitment { digest: hash(tags::VALUE_COMMIT, &[&payload, nonce]) }
}

pub fn verify_opening(c: &Commitment, value: &Value, nonce: &[u8; 32]) -> bool {
    commit(value, nonce) == *c
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateCommitment {
    pub root: Digest,
    pub slots: BTreeMap<String, Digest>,
}

impl StateCommitment {
    pub fn from_slots(slots: BTreeMap<String, Digest>) -> Self {
        Self { root: state_root(&slots), slots }
    }
}

/// H(0x02 ‖ for each slot in name order: u32 name length ‖ name ‖ digest).
pub fn state_root(slots: &BTreeMap<String, Digest>) -> Digest {
    let mut payload = Vec::with_capacity(slots.len() * 48);
    for (name, d) in slots {
        payload.extend_from_slice(&(name.len() as u32).to_be_bytes());
        payload.extend_from_slice(name.as_bytes());
        payload.extend_from_slice(&d.0);
    }
    hash(tags::STATE_COMMIT, &[&payload])
}

/// Commits every slot of `state` with the nonce `nonce_for` gives its name.
pub fn commit_state(state: &BTreeMap<String, Value>, nonce_for: impl Fn(&str) -> [u8; 32]) -> StateCommitment {
    let slots = state.iter().map(|(name, v)| (name.clone(), commit(v, &nonce_for(name)).digest)).collect();
    StateCommitment::from_slots(slots)
}

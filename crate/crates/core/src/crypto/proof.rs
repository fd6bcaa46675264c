use ed25519_dalek::VerifyingKey;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::keys::verify_sig;
use super::{hash, tags, Digest, ExecutorKeys};
use crate::value::Address;

/// The tuple an executor signs: P, F, C(s), every C(r_i) and C(s').
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofFields {
    pub policy_hash: Digest,
    pub code_hash: Digest,
    pub old_root: Digest,
    pub return_commitments: Vec<(Address, Digest)>,
    pub new_root: Digest,
}

/// H(0x05 ‖ H(P) ‖ H(F) ‖ old root ‖ u64 count ‖ (address ‖ C(r_i)) sorted by address ‖ new root).
pub fn proof_digest(f: &ProofFields) -> Digest {
    let mut rets = f.return_commitments.clone();
    rets.sort();
    let mut payload = Vec::with_capacity(32 * 4 + 8 + rets.len() * 52);
    payload.extend_from_slice(&f.policy_hash.0);
    payload.extend_from_slice(&f.code_hash.0);
    payload.extend_from_slice(&f.old_root.0);
    payload.extend_from_slice(&(rets.len() as u64).to_be_bytes());
    for (addr, c) in &rets {
        payload.extend_from_slice(&addr.0);
        payload.extend_from_slice(&c.0);
    }
    payload.extend_from_slice(&f.new_root.0);
    hash(tags::PROOF, &[&payload])
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct ProofSignature(pub [u8; 64]);

impl std::fmt::Debug for ProofSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ProofSignature({})", hex::encode(self.0))
    }
}

impl Serialize for ProofSignature {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.0))
    }
}

impl<'de> Deserialize<'de> for ProofSignature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)?;
        Ok(ProofSignature(raw.try_into().map_err(|_| serde::de::Error::custom("signature must be 64 bytes"))?))
    }
}

pub fn sign_proof(keys: &ExecutorKeys, fields: &ProofFields) -> ProofSignature {
    ProofSignature(keys.sign(&proof_digest(fields).0))
}

pub fn verify_proof(ver_key: &VerifyingKey, fields: &ProofFields, sig: &ProofSignature) -> bool {
    verify_sig(ver_key, &proof_digest(fields).0, &sig.0)
}

//! Commitments, key material, mock attestation and the result proof.
//!
//! Every hash is SHA-256 over a one-byte domain tag followed by the payload.

mod attest;
mod commit;
mod keys;
mod proof;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

pub use attest::{ias_root, mock_attest, validate_register_data, AttestError, AttestedWorker, IasReport, RegisterData, ReportData};
pub use commit::{commit, commit_state, commit_tuple, state_root, verify_opening, Commitment, StateCommitment};
pub use keys::{address_of, open, seal, ExecutorKeys, PartyKeys, SealError, RUNTIME_VERSION};
pub(crate) use keys::verify_sig;
pub use proof::{proof_digest, sign_proof, verify_proof, ProofFields, ProofSignature};

/// One-byte domain tags; no two uses of the hash share one.
pub mod tags {
    pub const VALUE_COMMIT: u8 = 0x01;
    pub const STATE_COMMIT: u8 = 0x02;
    pub const POLICY: u8 = 0x03;
    pub const CODE: u8 = 0x04;
    pub const PROOF: u8 = 0x05;
    pub const ADDRESS: u8 = 0x06;
    pub const MEASUREMENT: u8 = 0x07;
    pub const REPORT_DATA: u8 = 0x08;
    pub const NONCE: u8 = 0x09;
    pub const SESSION: u8 = 0x0a;
    pub const FUNCTION: u8 = 0x0b;
    pub const CONTRACT_ID: u8 = 0x0c;
    pub const KEY_SEED: u8 = 0x0d;
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl FromStr for Digest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = hex::decode(s).map_err(|e| e.to_string())?;
        Ok(Digest(raw.try_into().map_err(|_| format!("digest `{s}` is not 32 bytes"))?))
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// H(tag ‖ parts...).
pub fn hash(tag: u8, parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    h.update([tag]);
    for p in parts {
        h.update(p);
    }
    Digest(h.finalize().into())
}

pub fn policy_hash(canonical_policy: &[u8]) -> Digest {
    hash(tags::POLICY, &[canonical_policy])
}

pub fn code_hash(source: &[u8]) -> Digest {
    hash(tags::CODE, &[source])
}

/// Secret behind version-0 nonces. Initial state is all defaults and public,
/// so its commitment can be fixed at compile time.
pub const GENESIS_SECRET: [u8; 32] = [0; 32];

/// Nonce for `slot` at state `version`: H(0x09 ‖ secret ‖ u64 version ‖ slot).
pub fn slot_nonce(secret: &[u8; 32], version: u64, slot: &str) -> [u8; 32] {
    hash(tags::NONCE, &[secret, &version.to_be_bytes(), slot.as_bytes()]).0
}

pub fn function_hash(name: &str) -> Digest {
    hash(tags::FUNCTION, &[name.as_bytes()])
}

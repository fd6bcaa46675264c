//! Party client: sealed, signed input envelopes and opening of result payloads.

use std::collections::BTreeMap;

use crypto_box::PublicKey;
use ed25519_dalek::VerifyingKey;
use rand_chacha::rand_core::CryptoRngCore;
use serde::{Deserialize, Serialize};

use super::announce::ResultAnnouncement;
use crate::canonical::to_canonical_bytes;
use crate::crypto::{address_of, commit_tuple, seal, Digest, PartyKeys};
use crate::value::{Address, Value};

/// What a party signs: its inputs bound to one session of one function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputBody {
    pub contract: Digest,
    pub function: String,
    pub session: Digest,
    pub sender: Address,
    pub ver_key: String,
    /// Where the executor seals this party's result share.
    pub enc_key: String,
    pub values: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputEnvelope {
    pub body: InputBody,
    pub signature: String,
}

impl InputEnvelope {
    pub fn new(keys: &PartyKeys, body: InputBody) -> Self {
        let signature = hex::encode(keys.sign(&to_canonical_bytes(&body)));
        Self { body, signature }
    }

    /// Signature valid and sender derived from the presented key.
    pub fn authentic(&self) -> bool {
        let Some(vk) = hex::decode(&self.body.ver_key)
            .ok()
            .and_then(|b| <[u8; 32]>::try_from(b).ok())
            .and_then(|b| VerifyingKey::from_bytes(&b).ok())
        else {
            return false;
        };
        let Ok(sig) = hex::decode(&self.signature) else { return false };
        address_of(&vk) == self.body.sender && crate::crypto::verify_sig(&vk, &to_canonical_bytes(&self.body), &sig)
    }

    pub fn enc_key(&self) -> Option<PublicKey> {
        let raw: [u8; 32] = hex::decode(&self.body.enc_key).ok()?.try_into().ok()?;
        Some(PublicKey::from(raw))
    }
}

/// Builds and seals an input envelope for the executor whose encKey is `executor_enc`.
pub fn seal_inputs(
    keys: &PartyKeys,
    executor_enc: &PublicKey,
    contract: Digest,
    function: &str,
    session: Digest,
    values: BTreeMap<String, Value>,
    rng: &mut impl CryptoRngCore,
) -> Vec<u8> {
    let body = InputBody {
        contract,
        function: function.to_string(),
        session,
        sender: keys.address,
        ver_key: hex::encode(keys.verifying_key().as_bytes()),
        enc_key: hex::encode(keys.enc_public().as_bytes()),
        values,
    };
    let json = serde_json::to_vec(&InputEnvelope::new(keys, body)).expect("envelope serializes");
    seal(executor_enc, &json, rng)
}

/// One named return value inside a share. Unnamed returns are `#<position>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: Value,
}

/// r_i and the nonce that opens its commitment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnShare {
    pub returns: Vec<NamedValue>,
    pub nonce: Digest,
}

impl ReturnShare {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.returns.iter().find(|r| r.name == name).map(|r| &r.value)
    }

    pub fn values(&self) -> Vec<Value> {
        self.returns.iter().map(|r| r.value.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum OpenError {
    #[error("party has no payload in this announcement")]
    NotAParticipant,
    #[error("payload does not decrypt under this party's key")]
    DecryptFailure,
    #[error("payload does not open the announced commitment")]
    OpeningMismatch,
}

/// Decrypts the payload addressed to `recipient` with `keys`, then checks
/// it against the announced return commitment.
pub fn open_payload(keys: &PartyKeys, ann: &ResultAnnouncement, recipient: &Address) -> Result<ReturnShare, OpenError> {
    let ct = ann.payloads.get(recipient).ok_or(OpenError::NotAParticipant)?;
    let plain = keys.open(ct).map_err(|_| OpenError::DecryptFailure)?;
    let share: ReturnShare = serde_json::from_slice(&plain).map_err(|_| OpenError::OpeningMismatch)?;
    let announced = ann.return_commitment(recipient).ok_or(OpenError::OpeningMismatch)?;
    if commit_tuple(&share.values(), &share.nonce.0).digest != announced {
        return Err(OpenError::OpeningMismatch);
    }
    Ok(share)
}

/// The party's own r_i.
pub fn party_open_result(keys: &PartyKeys, ann: &ResultAnnouncement) -> Result<ReturnShare, OpenError> {
    open_payload(keys, ann, &keys.address)
}

use crypto_box::{PublicKey, SecretKey};
use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use rand_chacha::rand_core::CryptoRngCore;

use super::{hash, tags, Digest};
use crate::value::Address;

/// Version string whose digest is the executor measurement (TEEMR).
pub const RUNTIME_VERSION: &str = concat!("cloak-runtime-sim/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("sealed box could not be opened")]
pub struct SealError;

/// Seals `msg` to `recipient` (anonymous sender, authenticated encryption).
pub fn seal(recipient: &PublicKey, msg: &[u8], rng: &mut impl CryptoRngCore) -> Vec<u8> {
    recipient.seal(rng, msg).expect("sealing into a Vec cannot fail")
}

pub fn open(key: &SecretKey, ciphertext: &[u8]) -> Result<Vec<u8>, SealError> {
    key.unseal(ciphertext).map_err(|_| SealError)
}

pub fn address_of(vk: &VerifyingKey) -> Address {
    let d = hash(tags::ADDRESS, &[vk.as_bytes()]);
    let mut a = [0u8; 20];
    a.copy_from_slice(&d.0[..20]);
    Address(a)
}

fn sub_seed(seed: &[u8; 32], purpose: &[u8]) -> [u8; 32] {
    hash(tags::KEY_SEED, &[purpose, seed]).0
}

/// A party's signing and decryption keys plus its derived address.
#[derive(Clone)]
pub struct PartyKeys {
    signing: SigningKey,
    enc: SecretKey,
    pub address: Address,
}

impl PartyKeys {
    pub fn from_seed(seed: [u8; 32]) -> Self {
        let signing = SigningKey::from_bytes(&sub_seed(&seed, b"sign"));
        let enc = SecretKey::from_bytes(sub_seed(&seed, b"enc"));
        let address = address_of(&signing.verifying_key());
        Self { signing, enc, address }
    }

    /// Deterministic fixture keys for a named party.
    pub fn from_name(name: &str) -> Self {
        Self::from_seed(hash(tags::KEY_SEED, &[b"party:", name.as_bytes()]).0)
    }

    pub fn verifying_key(&self) -> VerifyingKey {
        self.signing.verifying_key()
    }

    pub fn enc_public(&self) -> PublicKey {
        self.enc.public_key()
    }

    pub fn sign(&self, msg: &[u8]) -> [u8; 64] {
        self.signing.sign(msg).to_bytes()
    }

    pub fn open(&self, ciphertext: &[u8]) -> Result<Vec<u8>, SealError> {
        open(&self.enc, ciphertext)
    }
}

pub(crate) fn verify_sig(vk: &VerifyingKey, msg: &[u8], sig: &[u8]) -> bool {
    let Ok(bytes) = <[u8; 64]>::try_from(sig) else { return false };
    vk.verify(msg, &Signature::from_bytes(&bytes)).is_ok()
}

/// Executor identity: verKey for signing results, encKey for receiving
/// inputs, and the measurement of the runtime it runs.
#[derive(Clone)]
pub struct ExecutorKeys {
    signing: SigningKey,
    enc: SecretKey,
    pub teemr: Digest,
}

impl ExecutorKeys {
    pub fn from_seed(seed: [u8; 32]) -> Self {
        Self::with_runtime(seed, RUNTIME_VERSION)
    }

    pub fn with_runtime(seed: [u8; 32], runtime_version: &str) -> Self {
        Self {
            signing: SigningKey::from_bytes(&sub_seed(&seed, b"exec-sign")),
            enc: SecretKey::from_bytes(sub_seed(&seed, b"exec-enc")),
            teemr: hash(tags::MEASUREMENT, &[runtime_version.as_bytes()]),
        }
    }

    pub fn from_name(name: &str) -> Self {
        Self::from_seed(hash(tags::KEY_SEED, &[b"executor:", name.as_bytes()]).0)
    }

    pub fn ver_key(&self) -> VerifyingKey {
        self.signing.verifying_key()
    }

    pub fn enc_key(&self) -> PublicKey {
        self.enc.public_key()
    }

    /// Worker id on the ledger, derived from verKey like a party address.
    pub fn id(&self) -> Address {
        address_of(&self.ver_key())
    }

    pub fn sign(&self, msg: &[u8]) -> [u8; 64] {
        self.signing.sign(msg).to_bytes()
    }

    pub fn open(&self, ciphertext: &[u8]) -> Result<Vec<u8>, SealError> {
        open(&self.enc, ciphertext)
    }

    /// Enclave-held secret from which a contract's slot nonces derive.
    pub fn state_secret(&self, contract: &Digest) -> [u8; 32] {
        hash(tags::KEY_SEED, &[b"state", &self.signing.to_bytes(), &contract.0]).0
    }
}

//! The result transaction an executor posts after an MPT.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crypto::{Digest, ProofFields, ProofSignature, StateCommitment};
use crate::value::Address;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultAnnouncement {
    pub contract: Digest,
    pub function: String,
    pub session: Digest,
    pub executor: Address,
    pub policy_hash: Digest,
    pub code_hash: Digest,
    pub old_root: Digest,
    /// Sorted by address.
    pub return_commitments: Vec<(Address, Digest)>,
    pub new_state: StateCommitment,
    pub proof: ProofSignature,
    /// Sealed `(r_i, nonce)` per recipient.
    #[serde(with = "hex_payloads")]
    pub payloads: BTreeMap<Address, Vec<u8>>,
}

impl ResultAnnouncement {
    /// The fields the proof signature covers.
    pub fn proof_fields(&self) -> ProofFields {
        ProofFields {
            policy_hash: self.policy_hash,
            code_hash: self.code_hash,
            old_root: self.old_root,
            return_commitments: self.return_commitments.clone(),
            new_root: self.new_state.root,
        }
    }

    pub fn return_commitment(&self, party: &Address) -> Option<Digest> {
        self.return_commitments.iter().find(|(a, _)| a == party).map(|(_, d)| *d)
    }
}

mod hex_payloads {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::value::Address;

    pub fn serialize<S: Serializer>(m: &BTreeMap<Address, Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        m.iter().map(|(a, ct)| (a.to_string(), hex::encode(ct))).collect::<BTreeMap<_, _>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Address, Vec<u8>>, D::Error> {
        BTreeMap::<String, String>::deserialize(d)?
            .into_iter()
            .map(|(a, ct)| {
                let a = a.parse().map_err(serde::de::Error::custom)?;
                let ct = hex::decode(ct).map_err(serde::de::Error::custom)?;
                Ok((a, ct))
            })
            .collect()
    }
}

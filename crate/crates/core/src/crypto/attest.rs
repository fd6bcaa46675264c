//! Mock remote attestation. A fixture "IAS root" key signs reports that bind
//! an executor's two public keys and its runtime measurement.

use crypto_box::PublicKey;
use ed25519_dalek::{SigningKey, VerifyingKey};
use serde::{Deserialize, Serialize};

use super::keys::verify_sig;
use super::{hash, tags, Digest, ExecutorKeys};

/// The fixture key standing in for Intel's attestation service.
pub fn ias_root() -> SigningKey {
    SigningKey::from_bytes(&hash(tags::KEY_SEED, &[b"mock-ias-root"]).0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportBody {
    #[serde(rename = "MRENCLAVE")]
    pub mrenclave: String,
    #[serde(rename = "REPORTDATA")]
    pub report_data: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuoteBody {
    #[serde(rename = "REPORTBODY")]
    pub report_body: ReportBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportData {
    #[serde(rename = "isvEnclaveQuoteStatus")]
    pub quote_status: String,
    #[serde(rename = "isvEnclaveQuoteBody")]
    pub quote_body: QuoteBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IasReport {
    #[serde(rename = "X-IASReport-Signature")]
    pub signature: String,
    #[serde(rename = "reportData")]
    pub report_data: ReportData,
}

impl IasReport {
    fn signed_bytes(data: &ReportData) -> Vec<u8> {
        serde_json::to_vec(data).expect("report data serializes")
    }

    pub fn sign(report_data: ReportData, root: &SigningKey) -> Self {
        use ed25519_dalek::Signer;
        let sig = root.sign(&Self::signed_bytes(&report_data));
        Self { signature: hex::encode(sig.to_bytes()), report_data }
    }

    pub fn signature_valid(&self, root: &VerifyingKey) -> bool {
        hex::decode(&self.signature).is_ok_and(|sig| verify_sig(root, &Self::signed_bytes(&self.report_data), &sig))
    }
}

/// On-chain registration record of an executor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterData {
    #[serde(rename = "verKey")]
    pub ver_key: String,
    #[serde(rename = "encKey")]
    pub enc_key: String,
    #[serde(rename = "TEEMRs")]
    pub teemrs: Vec<String>,
    /// The report as JSON text.
    #[serde(rename = "IASReport")]
    pub ias_report: String,
}

/// Keys and measurement extracted from an accepted registration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttestedWorker {
    pub ver_key: VerifyingKey,
    pub enc_key: PublicKey,
    pub teemr: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AttestError {
    #[error("attestation report is malformed, unsigned or not OK: {0}")]
    BadReport(String),
    #[error("report does not bind the presented keys")]
    KeyMismatch,
}

fn binding(ver_key: &[u8], enc_key: &[u8]) -> Digest {
    hash(tags::REPORT_DATA, &[ver_key, enc_key])
}

pub fn mock_attest(keys: &ExecutorKeys) -> RegisterData {
    let ver = keys.ver_key().to_bytes();
    let enc = *keys.enc_key().as_bytes();
    let data = ReportData {
        quote_status: "OK".into(),
        quote_body: QuoteBody {
            report_body: ReportBody { mrenclave: keys.teemr.to_hex(), report_data: binding(&ver, &enc).to_hex() },
        },
    };
    let report = IasReport::sign(data, &ias_root());
    RegisterData {
        ver_key: hex::encode(ver),
        enc_key: hex::encode(enc),
        teemrs: vec![keys.teemr.to_hex()],
        ias_report: serde_json::to_string(&report).expect("report serializes"),
    }
}

pub fn validate_register_data(data: &RegisterData, root: &VerifyingKey) -> Result<AttestedWorker, AttestError> {
    let bad = |m: &str| AttestError::BadReport(m.to_string());
    let report: IasReport = serde_json::from_str(&data.ias_report).map_err(|e| AttestError::BadReport(e.to_string()))?;
    if !report.signature_valid(root) {
        return Err(bad("signature does not verify under the IAS root"));
    }
    if report.report_data.quote_status != "OK" {
        return Err(bad("quote status is not OK"));
    }
    let body = &report.report_data.quote_body.report_body;
    if !data.teemrs.contains(&body.mrenclave) {
        return Err(bad("MRENCLAVE is not among the declared TEEMRs"));
    }
    let teemr: Digest = body.mrenclave.parse().map_err(|e: String| AttestError::BadReport(e))?;
    let ver: [u8; 32] = hex_array(&data.ver_key).ok_or(AttestError::KeyMismatch)?;
    let enc: [u8; 32] = hex_array(&data.enc_key).ok_or(AttestError::KeyMismatch)?;
    if binding(&ver, &enc).to_hex() != body.report_data {
        return Err(AttestError::KeyMismatch);
    }
    let ver_key = VerifyingKey::from_bytes(&ver).map_err(|_| AttestError::KeyMismatch)?;
    Ok(AttestedWorker { ver_key, enc_key: PublicKey::from(enc), teemr })
}

fn hex_array(s: &str) -> Option<[u8; 32]> {
    hex::decode(s).ok()?.try_into().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn root() -> VerifyingKey {
        ias_root().verifying_key()
    }

    #[test]
    fn attest_then_validate() {
        let keys = ExecutorKeys::from_name("E");
        let w = validate_register_data(&mock_attest(&keys), &root()).unwrap();
        assert_eq!(w.teemr, keys.teemr);
        assert_eq!(w.ver_key, keys.ver_key());
    }

    #[test]
    fn field_names_are_exact() {
        let d = mock_attest(&ExecutorKeys::from_name("E"));
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        for k in ["verKey", "encKey", "TEEMRs", "IASReport"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        let r: serde_json::Value = serde_json::from_str(&d.ias_report).unwrap();
        assert!(r["X-IASReport-Signature"].is_string());
        assert!(r["reportData"]["isvEnclaveQuoteBody"]["REPORTBODY"]["MRENCLAVE"].is_string());
        assert!(r["reportData"]["isvEnclaveQuoteBody"]["REPORTBODY"]["REPORTDATA"].is_string());
        assert_eq!(r["reportData"]["isvEnclaveQuoteStatus"], "OK");
    }

    fn tampered(f: impl FnOnce(&mut IasReport)) -> RegisterData {
        let mut d = mock_attest(&ExecutorKeys::from_name("E"));
        let mut r: IasReport = serde_json::from_str(&d.ias_report).unwrap();
        f(&mut r);
        d.ias_report = serde_json::to_string(&r).unwrap();
        d
    }

    #[test]
    fn tampered_mrenclave_rejected() {
        let d = tampered(|r| r.report_data.quote_body.report_body.mrenclave = "00".repeat(32));
        assert!(matches!(validate_register_data(&d, &root()), Err(AttestError::BadReport(_))));
    }

    #[test]
    fn bad_status_rejected_even_if_signed() {
        let d = tampered(|r| {
            let mut data = r.report_data.clone();
            data.quote_status = "GROUP_OUT_OF_DATE".into();
            *r = IasReport::sign(data, &ias_root());
        });
        assert!(matches!(validate_register_data(&d, &root()), Err(AttestError::BadReport(_))));
    }

    #[test]
    fn swapped_keys_rejected() {
        let mut d = mock_attest(&ExecutorKeys::from_name("E"));
        d.enc_key = mock_attest(&ExecutorKeys::from_name("F")).enc_key;
        assert_eq!(validate_register_data(&d, &root()), Err(AttestError::KeyMismatch));
    }
}

//! The compile driver: parse, subset check, owner analysis, policy and code
//! generation for one source file.

use std::time::Duration;

use serde::Serialize;

use crate::canonical::to_canonical_bytes;
use crate::codegen::{generate, GeneratedArtifacts};
use crate::crypto::{self, Digest, RUNTIME_VERSION};
use crate::frontend::ast::SourceFile;
use crate::frontend::{parse, strip_annotations, validate_subset, DiagCode, Diagnostic, Span};
use crate::owner::{check_contract, CheckedContract, FunctionKind};
use crate::policy::{canonical_bytes, generate_policy, PrivacyPolicy};

#[derive(Debug, Clone)]
pub struct Compiled {
    pub checked: CheckedContract,
    pub policy: PrivacyPolicy,
    /// Canonical bytes of `policy`, as written to policy.json.
    pub policy_json: Vec<u8>,
    pub policy_hash: Digest,
    pub artifacts: GeneratedArtifacts,
}

impl Compiled {
    pub fn name(&self) -> &str {
        &self.checked.ast.name.name
    }

    pub fn summary(&self) -> Summary {
        let functions = self
            .artifacts
            .summary
            .iter()
            .map(|r| FunctionSummary {
                name: r.name.clone(),
                kind: r.kind,
                check_time_us: micros(self.checked.check_time.get(&r.name).copied().unwrap_or_default()),
                codegen_time_us: micros(r.time),
            })
            .collect();
        Summary {
            contract: self.name().to_string(),
            functions,
            hashes: Hashes {
                verifier: self.artifacts.verifier_hash,
                service: self.artifacts.service_hash,
                policy: self.policy_hash,
                runtime: runtime_hash(),
            },
        }
    }
}

fn micros(d: Duration) -> u64 {
    d.as_micros().try_into().unwrap_or(u64::MAX)
}

/// Digest of the runtime version string the verifier expects.
pub fn runtime_hash() -> Digest {
    crypto::hash(crypto::tags::MEASUREMENT, &[RUNTIME_VERSION.as_bytes()])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionSummary {
    pub name: String,
    pub kind: FunctionKind,
    pub check_time_us: u64,
    pub codegen_time_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hashes {
    pub verifier: Digest,
    pub service: Digest,
    pub policy: Digest,
    pub runtime: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub contract: String,
    pub functions: Vec<FunctionSummary>,
    pub hashes: Hashes,
}

impl Summary {
    pub fn to_json(&self) -> Vec<u8> {
        to_canonical_bytes(self)
    }
}

/// Parses `source` and checks the annotation-free program against the subset.
pub fn parse_and_validate(path: &str, source: &str) -> Result<SourceFile, Vec<Diagnostic>> {
    let file = parse(path, source);
    if !file.diagnostics.is_empty() {
        return Err(file.diagnostics);
    }
    let diags = validate_subset(&strip_annotations(&file));
    if !diags.is_empty() {
        return Err(diags);
    }
    Ok(file)
}

/// Parse, validate and run owner analysis. The file must hold exactly one contract.
pub fn check_source(path: &str, source: &str) -> Result<CheckedContract, Vec<Diagnostic>> {
    let file = parse_and_validate(path, source)?;
    if file.contracts.len() != 1 {
        let span = file.contracts.get(1).map(|c| c.span).unwrap_or(Span::new(0, source.len()));
        return Err(vec![Diagnostic::error(
            DiagCode::UnsupportedConstruct,
            span,
            format!("expected exactly one contract per file, found {}", file.contracts.len()),
        )]);
    }
    let checked = check_contract(&file.contracts[0]);
    if !checked.is_clean() {
        return Err(checked.diagnostics);
    }
    Ok(checked)
}

pub fn compile_checked(checked: CheckedContract) -> Compiled {
    let policy = generate_policy(&checked);
    let policy_json = canonical_bytes(&policy);
    let policy_hash = crypto::policy_hash(&policy_json);
    let artifacts = generate(&checked, &policy);
    Compiled { checked, policy, policy_json, policy_hash, artifacts }
}

/// The full pipeline. Nothing is produced unless every stage is diagnostic-free.
pub fn compile_source(path: &str, source: &str) -> Result<Compiled, Vec<Diagnostic>> {
    check_source(path, source).map(compile_checked)
}

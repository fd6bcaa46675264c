//! Compiler and deterministic TEE-blockchain simulator for Cloak confidential
//! smart contracts.

pub mod frontend;
pub mod owner;
pub mod crypto;
pub mod value;
pub mod canonical;
pub mod policy;
pub mod codegen;
pub mod pipeline;
pub mod runtime;

pub use crypto::{Digest, ExecutorKeys, PartyKeys, StateCommitment};
pub use frontend::{DiagCode, Diagnostic};
pub use owner::{check_contract, CheckedContract, FunctionKind, OwnerAtom, OwnerSet};
pub use pipeline::{compile_source, Compiled};
pub use policy::PrivacyPolicy;
pub use runtime::{Executor, Ledger, ResultAnnouncement};
pub use value::{Address, Value, ValueType};

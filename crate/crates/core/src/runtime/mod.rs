//! In-process simulation of the deployment phase: a ledger holding
//! verifier state, one enclave executor and party clients.

mod announce;
mod executor;
mod interp;
mod ledger;
mod party;
pub mod scenario;

pub use announce::ResultAnnouncement;
pub use executor::{
    deploy, session_shapes, ClassBinding, ExecError, Executor, FunctionShape, InputSource, ParamShape, SessionError, SessionId,
    SessionStatus,
};
pub use interp::{interpret, interpret_with_limit, ExecOutcome, RuntimeError, DEFAULT_STEP_LIMIT};
pub use ledger::{ContractId, DeployError, Deployment, Ledger, RegisterReject, Worker};
pub use party::{open_payload, party_open_result, seal_inputs, InputBody, InputEnvelope, NamedValue, OpenError, ReturnShare};

pub use crate::codegen::RejectReason;

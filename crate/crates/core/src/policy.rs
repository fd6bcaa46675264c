//! Privacy policy P: the state catalogue plus, per function, its inputs,
//! the state it reads and mutates, and its returns.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::canonical::to_canonical_bytes;
use crate::crypto::{self, Digest};
use crate::frontend::ast::{AssignOp, ContractDecl, Expr, ExprKind, FunctionDecl};
use crate::owner::infer::{walk_function, BodyVisitor};
use crate::owner::{CheckedContract, FunctionKind, OwnerEnv, VarInfo, VarKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarEntry {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub owner: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionPolicy {
    pub name: String,
    pub kind: FunctionKind,
    pub inputs: Vec<VarEntry>,
    pub read: Vec<String>,
    pub mutate: Vec<String>,
    pub returns: Vec<VarEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyPolicy {
    pub contract: String,
    pub states: Vec<VarEntry>,
    pub functions: Vec<FunctionPolicy>,
}

impl PrivacyPolicy {
    pub fn function(&self, name: &str) -> Option<&FunctionPolicy> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn state(&self, name: &str) -> Option<&VarEntry> {
        self.states.iter().find(|s| s.name == name)
    }
}

/// Owner string of a declaration: `all`, `me`, `tee`, `id:<name>` or `class:<name>`.
/// A key-owned mapping renders as `id:<key binding>`.
pub fn render_owner(info: &VarInfo) -> String {
    use crate::owner::IndexOwner;
    if let Some(IndexOwner::Keyed(k)) = &info.index {
        return format!("id:{k}");
    }
    info.owner.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
}

fn entry(info: &VarInfo) -> VarEntry {
    VarEntry { name: info.name.clone(), ty: info.ty.render_plain(), owner: render_owner(info) }
}

/// State variables `f` reads and mutates. Containers count as a whole; a
/// compound update both reads and mutates its target. Locals shadow state.
pub fn compute_rw_sets(f: &FunctionDecl, contract: &ContractDecl) -> (BTreeSet<String>, BTreeSet<String>) {
    let (mut env, _) = OwnerEnv::new(contract);
    let mut rw = RwCollector::default();
    walk_function(&mut env, f, &mut rw);
    (rw.read, rw.mutate)
}

#[derive(Default)]
struct RwCollector {
    read: BTreeSet<String>,
    mutate: BTreeSet<String>,
}

impl RwCollector {
    fn state_name(env: &OwnerEnv, e: &Expr) -> Option<String> {
        let name = e.as_ident()?;
        env.lookup(name).filter(|v| v.kind == VarKind::State).map(|v| v.name.clone())
    }

    fn read_expr(&mut self, env: &OwnerEnv, e: &Expr) {
        match &e.kind {
            ExprKind::Ident(_) => {
                if let Some(n) = Self::state_name(env, e) {
                    self.read.insert(n);
                }
            }
            ExprKind::Assign { op, target, value } => {
                if *op == AssignOp::Assign {
                    self.write_target(env, target);
                } else {
                    self.read_expr(env, target);
                    self.write_target(env, target);
                }
                self.read_expr(env, value);
            }
            ExprKind::Update { target, .. } => {
                self.read_expr(env, target);
                self.write_target(env, target);
            }
            _ => e.for_each_child(|c| self.read_expr(env, c)),
        }
    }

    /// Records the written container; index expressions along the way are reads.
    fn write_target(&mut self, env: &OwnerEnv, t: &Expr) {
        match &t.kind {
            ExprKind::Ident(_) => {
                if let Some(n) = Self::state_name(env, t) {
                    self.mutate.insert(n);
                }
            }
            ExprKind::Index { base, index } => {
                self.write_target(env, base);
                self.read_expr(env, index);
            }
            _ => self.read_expr(env, t),
        }
    }
}

impl BodyVisitor for RwCollector {
    fn expr(&mut self, env: &OwnerEnv, e: &Expr) {
        self.read_expr(env, e);
    }
}

/// Builds P from a diagnostic-free contract.
pub fn generate_policy(checked: &CheckedContract) -> PrivacyPolicy {
    let contract = &checked.ast;
    let (mut env, _) = OwnerEnv::new(contract);
    let states = contract
        .state_vars
        .iter()
        .filter_map(|v| env.lookup(&v.name.name).map(entry))
        .collect();
    let in_decl_order = |set: &BTreeSet<String>| -> Vec<String> {
        contract.state_vars.iter().map(|v| v.name.name.clone()).filter(|n| set.contains(n)).collect()
    };
    let functions = contract
        .functions
        .iter()
        .map(|f| {
            env.enter_function(f);
            let (read, mutate) = compute_rw_sets(f, contract);
            FunctionPolicy {
                name: f.name.name.clone(),
                kind: checked.kind_of.get(&f.name.name).copied().unwrap_or(FunctionKind::Public),
                inputs: env.signature_vars().filter(|v| v.kind == VarKind::Param).map(entry).collect(),
                read: in_decl_order(&read),
                mutate: in_decl_order(&mutate),
                returns: env.return_vars().map(entry).collect(),
            }
        })
        .collect();
    PrivacyPolicy { contract: contract.name.name.clone(), states, functions }
}

pub fn canonical_bytes(policy: &PrivacyPolicy) -> Vec<u8> {
    to_canonical_bytes(policy)
}

pub fn policy_hash(policy: &PrivacyPolicy) -> Digest {
    crypto::policy_hash(&canonical_bytes(policy))
}

//! Privacy-flow consistency.
//!
//! A plain assignment may only move data into a location whose declared
//! owners (plus `all`) cover the source owners. Compound updates are exempt.
//! `t = reveal(e, o)` additionally opens a channel from the owners of `e`
//! into `t`, so later plain flows of those owners into `t` are accepted.
//! A reported leak opens the same channel to avoid cascades.

use std::collections::HashSet;

use super::env::{DeclId, OwnerEnv, VarInfo, VarKind};
use super::infer::{location_owner, root_var, walk_function, BodyVisitor};
use super::{OwnerAtom, OwnerMap, OwnerSet};
use crate::frontend::ast::{AssignOp, ContractDecl, Expr, ExprKind, FunctionDecl, OwnerKind, VarDecl};
use crate::frontend::{DiagCode, Diagnostic};

/// Checks every assignment, initializer and return in `f` against declared
/// owners. `owner_of` must hold inferred owners for all of `f`'s expressions.
pub fn check_consistency(f: &FunctionDecl, contract: &ContractDecl, owner_of: &OwnerMap) -> Vec<Diagnostic> {
    let (mut env, _) = OwnerEnv::new(contract);
    let mut checker = FlowChecker { owner_of, assigned: HashSet::new(), channels: HashSet::new(), diags: Vec::new() };
    walk_function(&mut env, f, &mut checker);
    checker.diags
}

struct FlowChecker<'a> {
    owner_of: &'a OwnerMap,
    assigned: HashSet<DeclId>,
    channels: HashSet<(DeclId, OwnerAtom)>,
    diags: Vec<Diagnostic>,
}

impl FlowChecker<'_> {
    fn owner(&self, e: &Expr) -> OwnerSet {
        self.owner_of.get(&e.id).cloned().unwrap_or_else(OwnerSet::public)
    }

    fn visit(&mut self, env: &OwnerEnv, e: &Expr) {
        e.for_each_child(|c| self.visit(env, c));
        match &e.kind {
            ExprKind::Assign { op, target, value } => {
                let var = root_var(target, env);
                if *op == AssignOp::Assign {
                    let dest = location_owner(target, env);
                    let name = var.map_or("<location>", |v| v.name.as_str());
                    self.check_flow(var.map(|v| v.id), name, &dest, value);
                }
                self.mark(var);
            }
            ExprKind::Update { target, .. } => self.mark(root_var(target, env)),
            ExprKind::Reveal { owner, .. } => {
                if let OwnerKind::Id(name) = &owner.kind {
                    if let Some(v) = env.lookup(name) {
                        if matches!(v.kind, VarKind::Return | VarKind::Local) && !self.assigned.contains(&v.id) {
                            self.diags.push(Diagnostic::error(
                                DiagCode::UnassignedRevealTarget,
                                owner.span,
                                format!("`{name}` is revealed to before it has been assigned"),
                            ));
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn mark(&mut self, var: Option<&VarInfo>) {
        if let Some(v) = var {
            self.assigned.insert(v.id);
        }
    }

    fn check_flow(&mut self, dest_id: Option<DeclId>, dest_name: &str, dest: &OwnerSet, value: &Expr) {
        let source = self.owner(value);
        if let (Some(id), ExprKind::Reveal { value: inner, .. }) = (dest_id, &value.kind) {
            for atom in self.owner(inner).private_atoms() {
                self.channels.insert((id, atom.clone()));
            }
        }
        let leaked: OwnerSet = source
            .private_atoms()
            .filter(|a| !dest.contains(a))
            .filter(|a| dest_id.is_none_or(|id| !self.channels.contains(&(id, (*a).clone()))))
            .cloned()
            .collect();
        if !leaked.is_empty() {
            // Report each (location, owner) leak once; repeats are the same mistake.
            if let Some(id) = dest_id {
                for atom in leaked.iter() {
                    self.channels.insert((id, atom.clone()));
                }
            }
            self.diags.push(Diagnostic::error(
                DiagCode::ImplicitFlow,
                value.span,
                format!(
                    "data owned by {leaked} flows into `{dest_name}` (owned by {dest}) without reveal"
                ),
            ));
        }
    }
}

impl BodyVisitor for FlowChecker<'_> {
    fn expr(&mut self, env: &OwnerEnv, e: &Expr) {
        self.visit(env, e);
    }

    fn local(&mut self, _env: &OwnerEnv, decl: &VarDecl, info: &VarInfo) {
        if let Some(init) = &decl.init {
            self.check_flow(Some(info.id), &info.name, &info.owner, init);
            self.assigned.insert(info.id);
        }
    }

    fn ret(&mut self, env: &OwnerEnv, values: &[Expr]) {
        let targets: Vec<(DeclId, String, OwnerSet)> =
            env.return_vars().map(|v| (v.id, v.name.clone(), v.owner.clone())).collect();
        for ((id, name, dest), value) in targets.iter().zip(values) {
            let label = if name.is_empty() { "<return value>" } else { name.as_str() };
            self.check_flow(Some(*id), label, dest, value);
            self.assigned.insert(*id);
        }
    }
}

//! Bottom-up owner inference.

use super::env::{IndexOwner, OwnerEnv, VarInfo};
use super::{OwnerAtom, OwnerMap, OwnerSet};
use crate::frontend::ast::{Block, Expr, ExprKind, FunctionDecl, Stmt, StmtKind, VarDecl};
use crate::frontend::Diagnostic;

/// Infers the owner of `expr` and of every sub-expression, recording each in
/// `owner_of`. The result is never empty.
pub fn infer_owner(expr: &Expr, env: &OwnerEnv, owner_of: &mut OwnerMap, diags: &mut Vec<Diagnostic>) -> OwnerSet {
    let owners = match &expr.kind {
        ExprKind::Number(_) | ExprKind::Bool(_) => OwnerSet::public(),
        ExprKind::Ident(name) => env.lookup(name).map_or_else(OwnerSet::public, |v| v.owner.clone()),
        ExprKind::Member { base, .. } => {
            infer_owner(base, env, owner_of, diags);
            OwnerSet::public()
        }
        ExprKind::Index { base, index } => {
            let base_owner = infer_owner(base, env, owner_of, diags);
            let key_owner = infer_owner(index, env, owner_of, diags);
            let mut elem = element_owner(base, index, env).unwrap_or(base_owner);
            elem.extend(&key_owner);
            elem
        }
        ExprKind::Reveal { value, owner } => {
            infer_owner(value, env, owner_of, diags);
            match env.resolve_atom(owner, false) {
                Ok(atom) => OwnerSet::single(atom),
                Err(d) => {
                    diags.push(d);
                    OwnerSet::public()
                }
            }
        }
        ExprKind::Call { callee, args } => {
            infer_owner(callee, env, owner_of, diags);
            let mut acc = OwnerSet::public();
            for a in args {
                acc.extend(&infer_owner(a, env, owner_of, diags));
            }
            acc
        }
        _ => {
            let mut acc = OwnerSet::empty();
            expr.for_each_child(|c| acc.extend(&infer_owner(c, env, owner_of, diags)));
            if acc.is_empty() {
                acc = OwnerSet::public();
            }
            acc
        }
    };
    owner_of.insert(expr.id, owners.clone());
    owners
}

/// Declared owner of `base[index]`, not counting the key's own owner.
fn element_owner(base: &Expr, index: &Expr, env: &OwnerEnv) -> Option<OwnerSet> {
    let var = env.lookup(base.as_ident()?)?;
    Some(match var.index.as_ref()? {
        IndexOwner::Fixed(s) => s.clone(),
        IndexOwner::Keyed(k) => OwnerSet::single(if index.is_msg_sender() {
            OwnerAtom::Me
        } else if let Some(name) = index.as_ident() {
            OwnerAtom::Party(name.to_string())
        } else {
            OwnerAtom::PartyClass(k.clone())
        }),
    })
}

/// Declared owner of an assignable location.
pub fn location_owner(target: &Expr, env: &OwnerEnv) -> OwnerSet {
    match &target.kind {
        ExprKind::Ident(name) => env.lookup(name).map_or_else(OwnerSet::public, |v| v.owner.clone()),
        ExprKind::Index { base, index } => element_owner(base, index, env).unwrap_or_else(|| location_owner(base, env)),
        _ => OwnerSet::public(),
    }
}

/// Declaration that an assignment to `target` writes into.
pub(crate) fn root_var<'e>(target: &Expr, env: &'e OwnerEnv) -> Option<&'e VarInfo> {
    match &target.kind {
        ExprKind::Ident(name) => env.lookup(name),
        ExprKind::Index { base, .. } => root_var(base, env),
        _ => None,
    }
}

/// Callbacks for [`walk_body`], which maintains scoping in execution order.
pub(crate) trait BodyVisitor {
    fn expr(&mut self, env: &OwnerEnv, e: &Expr);
    fn local(&mut self, _env: &OwnerEnv, _decl: &VarDecl, _info: &VarInfo) {}
    fn ret(&mut self, _env: &OwnerEnv, _values: &[Expr]) {}
    fn diagnostics(&mut self, _diags: Vec<Diagnostic>) {}
}

pub(crate) fn walk_function(env: &mut OwnerEnv, f: &FunctionDecl, v: &mut impl BodyVisitor) {
    let diags = env.enter_function(f);
    v.diagnostics(diags);
    if let Some(body) = &f.body {
        walk_block(env, body, v);
    }
}

fn walk_block(env: &mut OwnerEnv, b: &Block, v: &mut impl BodyVisitor) {
    env.push_scope();
    for s in &b.stmts {
        walk_stmt(env, s, v);
    }
    env.pop_scope();
}

fn walk_scoped(env: &mut OwnerEnv, s: &Stmt, v: &mut impl BodyVisitor) {
    env.push_scope();
    walk_stmt(env, s, v);
    env.pop_scope();
}

fn walk_stmt(env: &mut OwnerEnv, s: &Stmt, v: &mut impl BodyVisitor) {
    match &s.kind {
        StmtKind::VarDecl(decl) => {
            if let Some(init) = &decl.init {
                v.expr(env, init);
            }
            let (info, diags) = env.declare_local(decl);
            v.diagnostics(diags);
            v.local(env, decl, &info);
        }
        StmtKind::Expr(e) => v.expr(env, e),
        StmtKind::If { cond, then_branch, else_branch } => {
            v.expr(env, cond);
            walk_scoped(env, then_branch, v);
            if let Some(e) = else_branch {
                walk_scoped(env, e, v);
            }
        }
        StmtKind::For { init, cond, step, body } => {
            env.push_scope();
            if let Some(i) = init {
                walk_stmt(env, i, v);
            }
            if let Some(c) = cond {
                v.expr(env, c);
            }
            walk_scoped(env, body, v);
            if let Some(st) = step {
                v.expr(env, st);
            }
            env.pop_scope();
        }
        StmtKind::Return(values) => {
            for e in values {
                v.expr(env, e);
            }
            v.ret(env, values);
        }
        StmtKind::Block(b) => walk_block(env, b, v),
    }
}

struct Inference<'a> {
    owner_of: &'a mut OwnerMap,
    diags: &'a mut Vec<Diagnostic>,
}

impl BodyVisitor for Inference<'_> {
    fn expr(&mut self, env: &OwnerEnv, e: &Expr) {
        infer_owner(e, env, self.owner_of, self.diags);
    }

    fn diagnostics(&mut self, diags: Vec<Diagnostic>) {
        self.diags.extend(diags);
    }
}

/// Infers owners for every expression in `f`, resolving names with proper
/// block scoping. Annotation errors in the signature and locals are reported.
pub fn infer_function(env: &mut OwnerEnv, f: &FunctionDecl, owner_of: &mut OwnerMap, diags: &mut Vec<Diagnostic>) {
    walk_function(env, f, &mut Inference { owner_of, diags });
}

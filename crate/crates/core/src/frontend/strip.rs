//! Annotation stripping: the plain program checked for subset validity and
//! emitted as the service contract.

use super::ast::*;

/// Removes every owner annotation and binding, and replaces `reveal(e, o)` by `e`.
/// Spans and expression ids are kept so diagnostics still point into the source.
pub fn strip_annotations(file: &SourceFile) -> SourceFile {
    SourceFile {
        path: file.path.clone(),
        declarations: file.declarations.clone(),
        contracts: file.contracts.iter().map(strip_contract).collect(),
        diagnostics: file.diagnostics.clone(),
    }
}

pub fn strip_contract(c: &ContractDecl) -> ContractDecl {
    ContractDecl {
        name: c.name.clone(),
        state_vars: c.state_vars.iter().map(strip_var).collect(),
        functions: c.functions.iter().map(strip_function).collect(),
        span: c.span,
    }
}

fn strip_function(f: &FunctionDecl) -> FunctionDecl {
    FunctionDecl {
        name: f.name.clone(),
        params: f.params.iter().map(strip_param).collect(),
        visibility: f.visibility,
        returns: f.returns.iter().map(strip_param).collect(),
        body: f.body.as_ref().map(strip_block),
        span: f.span,
    }
}

fn strip_param(p: &Param) -> Param {
    Param { ty: strip_type(&p.ty), owner: None, name: p.name.clone(), span: p.span }
}

fn strip_var(v: &VarDecl) -> VarDecl {
    VarDecl {
        ty: strip_type(&v.ty),
        owner: None,
        name: v.name.clone(),
        init: v.init.as_ref().map(strip_expr),
        span: v.span,
    }
}

fn strip_type(t: &TypeName) -> TypeName {
    let kind = match &t.kind {
        TypeKind::Mapping { key, value, .. } => TypeKind::Mapping {
            key: Box::new(strip_type(key)),
            key_binding: None,
            value: Box::new(strip_type(value)),
            value_owner: None,
        },
        TypeKind::Array { elem, len, .. } => TypeKind::Array { elem: Box::new(strip_type(elem)), len: *len, slot: None },
        other => other.clone(),
    };
    TypeName { kind, span: t.span }
}

fn strip_block(b: &Block) -> Block {
    Block { stmts: b.stmts.iter().map(strip_stmt).collect(), span: b.span }
}

fn strip_stmt(s: &Stmt) -> Stmt {
    let kind = match &s.kind {
        StmtKind::VarDecl(v) => StmtKind::VarDecl(strip_var(v)),
        StmtKind::Expr(e) => StmtKind::Expr(strip_expr(e)),
        StmtKind::If { cond, then_branch, else_branch } => StmtKind::If {
            cond: strip_expr(cond),
            then_branch: Box::new(strip_stmt(then_branch)),
            else_branch: else_branch.as_ref().map(|e| Box::new(strip_stmt(e))),
        },
        StmtKind::For { init, cond, step, body } => StmtKind::For {
            init: init.as_ref().map(|i| Box::new(strip_stmt(i))),
            cond: cond.as_ref().map(strip_expr),
            step: step.as_ref().map(strip_expr),
            body: Box::new(strip_stmt(body)),
        },
        StmtKind::Return(values) => StmtKind::Return(values.iter().map(strip_expr).collect()),
        StmtKind::Block(b) => StmtKind::Block(strip_block(b)),
    };
    Stmt { kind, span: s.span }
}

fn strip_expr(e: &Expr) -> Expr {
    let bx = |e: &Expr| Box::new(strip_expr(e));
    let kind = match &e.kind {
        ExprKind::Reveal { value, .. } => return strip_expr(value),
        ExprKind::Number(_) | ExprKind::Bool(_) | ExprKind::Ident(_) => e.kind.clone(),
        ExprKind::Index { base, index } => ExprKind::Index { base: bx(base), index: bx(index) },
        ExprKind::Member { base, member } => ExprKind::Member { base: bx(base), member: member.clone() },
        ExprKind::Binary { op, lhs, rhs } => ExprKind::Binary { op: *op, lhs: bx(lhs), rhs: bx(rhs) },
        ExprKind::Unary { op, operand } => ExprKind::Unary { op: *op, operand: bx(operand) },
        ExprKind::Call { callee, args } => ExprKind::Call { callee: bx(callee), args: args.iter().map(strip_expr).collect() },
        ExprKind::Assign { op, target, value } => ExprKind::Assign { op: *op, target: bx(target), value: bx(value) },
        ExprKind::Update { op, prefix, target } => ExprKind::Update { op: *op, prefix: *prefix, target: bx(target) },
    };
    Expr { id: e.id, kind, span: e.span }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, print_source};
    use super::*;

    #[test]
    fn strips_owners_bindings_and_reveals() {
        let src = "contract C { mapping(address !k => uint @k) b; function f(address[!p] ps, uint[@p] xs) public returns (uint @w s) { s = reveal(xs[0], all); } }";
        let stripped = strip_annotations(&parse("t", src));
        let text = print_source(&stripped);
        assert!(!text.contains('@') && !text.contains('!') && !text.contains("reveal"), "{text}");
        assert!(text.contains("mapping(address => uint) b;"));
        assert!(text.contains("s = xs[0];"));
    }

    #[test]
    fn idempotent() {
        let src = "contract C { uint @all m; function f(uint @me x) public { m = reveal(x, all); } }";
        let once = strip_annotations(&parse("t", src));
        let twice = strip_annotations(&once);
        assert_eq!(once.shape(), twice.shape());
    }
}

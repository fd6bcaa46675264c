//! Canonical pretty printer. Output reparses to a structurally equal tree.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn print_source(file: &SourceFile) -> String {
    let mut out = String::new();
    for decl in &file.declarations {
        print_declaration(&mut out, decl);
        out.push('\n');
    }
    for (i, c) in file.contracts.iter().enumerate() {
        if i > 0 || !file.declarations.is_empty() {
            out.push('\n');
        }
        out.push_str(&print_contract(c));
    }
    out
}

fn print_declaration(out: &mut String, decl: &Declaration) {
    match decl {
        Declaration::Pragma { text, .. } => {
            let _ = write!(out, "pragma {text};");
        }
        Declaration::Import { path, .. } => {
            let _ = write!(out, "import \"{path}\";");
        }
        Declaration::Struct(s) => {
            let _ = writeln!(out, "struct {} {{", s.name.name);
            for field in &s.fields {
                let _ = writeln!(out, "{INDENT}{};", print_param(field));
            }
            out.push_str("}\n");
        }
        Declaration::Interface(i) => {
            let _ = writeln!(out, "interface {} {{", i.name.name);
            for f in &i.functions {
                let _ = writeln!(out, "{INDENT}{};", function_header(f));
            }
            out.push_str("}\n");
        }
    }
}

pub fn print_contract(c: &ContractDecl) -> String {
    if c.state_vars.is_empty() && c.functions.is_empty() {
        return format!("contract {} {{ }}\n", c.name.name);
    }
    let mut out = format!("contract {} {{\n", c.name.name);
    for v in &c.state_vars {
        let _ = writeln!(out, "{INDENT}{};", print_var_decl(v));
    }
    for (i, f) in c.functions.iter().enumerate() {
        if i > 0 || !c.state_vars.is_empty() {
            out.push('\n');
        }
        out.push_str(&print_function(f, 1));
    }
    out.push_str("}\n");
    out
}

pub fn function_header(f: &FunctionDecl) -> String {
    let params: Vec<String> = f.params.iter().map(print_param).collect();
    let mut s = format!("function {}({}) {}", f.name.name, params.join(", "), f.visibility.as_str());
    if !f.returns.is_empty() {
        let rets: Vec<String> = f.returns.iter().map(print_param).collect();
        let _ = write!(s, " returns ({})", rets.join(", "));
    }
    s
}

pub fn print_function(f: &FunctionDecl, depth: usize) -> String {
    let pad = INDENT.repeat(depth);
    let mut out = format!("{pad}{}", function_header(f));
    match &f.body {
        Some(body) => {
            out.push(' ');
            print_block(&mut out, body, depth);
            out.push('\n');
        }
        None => out.push_str(";\n"),
    }
    out
}

pub fn print_type(ty: &TypeName) -> String {
    match &ty.kind {
        TypeKind::Uint => "uint".into(),
        TypeKind::Bool => "bool".into(),
        TypeKind::Address => "address".into(),
        TypeKind::String => "string".into(),
        TypeKind::Named(n) => n.clone(),
        TypeKind::Mapping { key, key_binding, value, value_owner } => {
            let mut s = format!("mapping({}", print_type(key));
            if let Some(b) = key_binding {
                let _ = write!(s, " {}", b.kind.sigil_text());
            }
            let _ = write!(s, " => {}", print_type(value));
            if let Some(o) = value_owner {
                let _ = write!(s, " {}", o.kind.sigil_text());
            }
            s.push(')');
            s
        }
        TypeKind::Array { elem, len, slot } => {
            let inner = match (len, slot) {
                (_, Some(a)) => a.kind.sigil_text(),
                (ArrayLen::Dynamic, None) => String::new(),
                (ArrayLen::Fixed(n), None) => n.to_string(),
            };
            format!("{}[{inner}]", print_type(elem))
        }
    }
}

fn with_owner(ty: &TypeName, owner: &Option<OwnerAnnotation>) -> String {
    match owner {
        Some(o) => format!("{} {}", print_type(ty), o.kind.sigil_text()),
        None => print_type(ty),
    }
}

pub fn print_param(p: &Param) -> String {
    let mut s = with_owner(&p.ty, &p.owner);
    if let Some(n) = &p.name {
        s.push(' ');
        s.push_str(&n.name);
    }
    s
}

pub fn print_var_decl(v: &VarDecl) -> String {
    let mut s = format!("{} {}", with_owner(&v.ty, &v.owner), v.name.name);
    if let Some(init) = &v.init {
        let _ = write!(s, " = {}", print_expr(init));
    }
    s
}

fn print_block(out: &mut String, block: &Block, depth: usize) {
    out.push_str("{\n");
    for stmt in &block.stmts {
        print_stmt(out, stmt, depth + 1);
    }
    out.push_str(&INDENT.repeat(depth));
    out.push('}');
}

/// Prints `stmt` as the body of an `if`/`else`/`for` header already on the line.
fn print_branch(out: &mut String, stmt: &Stmt, depth: usize) {
    match &stmt.kind {
        StmtKind::Block(b) => {
            out.push(' ');
            print_block(out, b, depth);
        }
        _ => {
            out.push('\n');
            print_stmt(out, stmt, depth + 1);
            // print_stmt ends with a newline; callers add their own.
            out.pop();
        }
    }
}

fn simple_stmt_text(stmt: &Stmt) -> String {
    match &stmt.kind {
        StmtKind::VarDecl(v) => print_var_decl(v),
        StmtKind::Expr(e) => print_expr(e),
        _ => unreachable!("for-init is a declaration or expression"),
    }
}

fn print_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    match &stmt.kind {
        StmtKind::VarDecl(_) | StmtKind::Expr(_) => {
            let _ = writeln!(out, "{pad}{};", simple_stmt_text(stmt));
        }
        StmtKind::Return(values) => match values.len() {
            0 => {
                let _ = writeln!(out, "{pad}return;");
            }
            1 => {
                let _ = writeln!(out, "{pad}return {};", print_expr(&values[0]));
            }
            _ => {
                let vs: Vec<String> = values.iter().map(print_expr).collect();
                let _ = writeln!(out, "{pad}return ({});", vs.join(", "));
            }
        },
        StmtKind::Block(b) => {
            out.push_str(&pad);
            print_block(out, b, depth);
            out.push('\n');
        }
        StmtKind::If { .. } => {
            out.push_str(&pad);
            print_if(out, stmt, depth);
            out.push('\n');
        }
        StmtKind::For { init, cond, step, body } => {
            let init = init.as_ref().map(|s| simple_stmt_text(s)).unwrap_or_default();
            let cond = cond.as_ref().map(print_expr).map(|c| format!(" {c}")).unwrap_or_default();
            let step = step.as_ref().map(print_expr).map(|s| format!(" {s}")).unwrap_or_default();
            let _ = write!(out, "{pad}for ({init};{cond};{step})");
            print_branch(out, body, depth);
            out.push('\n');
        }
    }
}

fn print_if(out: &mut String, stmt: &Stmt, depth: usize) {
    let StmtKind::If { cond, then_branch, else_branch } = &stmt.kind else {
        unreachable!()
    };
    let _ = write!(out, "if ({})", print_expr(cond));
    print_branch(out, then_branch, depth);
    if let Some(e) = else_branch {
        if matches!(then_branch.kind, StmtKind::Block(_)) {
            out.push_str(" else");
        } else {
            let _ = write!(out, "\n{}else", INDENT.repeat(depth));
        }
        if matches!(e.kind, StmtKind::If { .. }) {
            out.push(' ');
            print_if(out, e, depth);
        } else {
            print_branch(out, e, depth);
        }
    }
}

const PREC_ASSIGN: u8 = 1;
const PREC_UNARY: u8 = 8;
const PREC_POSTFIX: u8 = 9;
const PREC_PRIMARY: u8 = 10;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Assign { .. } => PREC_ASSIGN,
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Unary { .. } => PREC_UNARY,
        ExprKind::Update { prefix: true, .. } => PREC_UNARY,
        ExprKind::Update { prefix: false, .. }
        | ExprKind::Index { .. }
        | ExprKind::Member { .. }
        | ExprKind::Call { .. } => PREC_POSTFIX,
        ExprKind::Number(_) | ExprKind::Bool(_) | ExprKind::Ident(_) | ExprKind::Reveal { .. } => PREC_PRIMARY,
    }
}

fn paren_if(e: &Expr, cond: bool) -> String {
    let s = print_expr(e);
    if cond {
        format!("({s})")
    } else {
        s
    }
}

pub fn print_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Number(n) => n.to_string(),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Ident(n) => n.clone(),
        ExprKind::Index { base, index } => {
            format!("{}[{}]", paren_if(base, precedence(base) < PREC_POSTFIX), print_expr(index))
        }
        ExprKind::Member { base, member } => {
            format!("{}.{}", paren_if(base, precedence(base) < PREC_POSTFIX), member.name)
        }
        ExprKind::Call { callee, args } => {
            let args: Vec<String> = args.iter().map(print_expr).collect();
            format!("{}({})", paren_if(callee, precedence(callee) < PREC_POSTFIX), args.join(", "))
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            format!(
                "{} {} {}",
                paren_if(lhs, precedence(lhs) < p),
                op.symbol(),
                paren_if(rhs, precedence(rhs) <= p)
            )
        }
        ExprKind::Unary { op, operand } => {
            let sym = match op {
                UnaryOp::Not => "!",
                UnaryOp::Neg => "-",
            };
            // `- -x` must not print as `--x`.
            let inner = paren_if(
                operand,
                precedence(operand) < PREC_UNARY
                    || matches!(operand.kind, ExprKind::Unary { .. } | ExprKind::Update { prefix: true, .. }),
            );
            format!("{sym}{inner}")
        }
        ExprKind::Update { op, prefix, target } => {
            let sym = match op {
                UpdateOp::Increment => "++",
                UpdateOp::Decrement => "--",
            };
            if *prefix {
                let inner = paren_if(
                    target,
                    precedence(target) < PREC_UNARY
                        || matches!(target.kind, ExprKind::Unary { .. } | ExprKind::Update { prefix: true, .. }),
                );
                format!("{sym}{inner}")
            } else {
                format!("{}{sym}", paren_if(target, precedence(target) < PREC_POSTFIX))
            }
        }
        ExprKind::Reveal { value, owner } => format!("reveal({}, {})", print_expr(value), owner.kind.name()),
        ExprKind::Assign { op, target, value } => format!(
            "{} {} {}",
            paren_if(target, precedence(target) <= PREC_ASSIGN),
            op.symbol(),
            print_expr(value)
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn roundtrip(src: &str) -> String {
        let a = parse("a", src);
        assert!(a.diagnostics.is_empty(), "{:?}", a.diagnostics);
        let printed = print_source(&a);
        let b = parse("b", &printed);
        assert!(b.diagnostics.is_empty(), "{printed}\n{:?}", b.diagnostics);
        assert_eq!(a.shape(), b.shape(), "{printed}");
        printed
    }

    #[test]
    fn empty_contract_form() {
        assert_eq!(roundtrip("contract C {}"), "contract C { }\n");
    }

    #[test]
    fn precedence_parens_survive() {
        let p = roundtrip("contract C { function f() public { x = (a + b) * (c - (d - e)); y = -(-z); q = !(a < b); } }");
        assert!(p.contains("x = (a + b) * (c - (d - e));"), "{p}");
        assert!(p.contains("y = -(-z);"), "{p}");
    }

    #[test]
    fn unbraced_branches() {
        let p = roundtrip(
            "contract C { function f() public { if (a) x = 1; else if (b) x = 2; else x = 3; for (;;) i++; } }",
        );
        assert!(p.contains("if (a)\n"), "{p}");
    }

    #[test]
    fn annotated_types() {
        let p = roundtrip("contract C { mapping(address !k => uint @k) b; uint @all m; function f(address[!p] ps, uint[@p] bs) public returns (address w, uint @w s) { } }");
        assert!(p.contains("mapping(address !k => uint @k) b;"), "{p}");
        assert!(p.contains("function f(address[!p] ps, uint[@p] bs) public returns (address w, uint @w s) {"), "{p}");
    }
}

//! Name resolution and type rules of the plain (annotation-free) subset.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use super::ast::*;
use super::diagnostics::{DiagCode, Diagnostic, Span};

/// Resolved type of an expression or declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Uint,
    Bool,
    Address,
    String,
    Mapping(Box<Ty>, Box<Ty>),
    Array(Box<Ty>, ArrayLen),
    Interface(String),
    Struct(String),
    /// Result of a call with no return value.
    Void,
    /// Already reported; suppresses follow-up diagnostics.
    Error,
}

impl Ty {
    pub fn is_elementary(&self) -> bool {
        matches!(self, Ty::Uint | Ty::Bool | Ty::Address)
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Uint => f.write_str("uint"),
            Ty::Bool => f.write_str("bool"),
            Ty::Address => f.write_str("address"),
            Ty::String => f.write_str("string"),
            Ty::Mapping(k, v) => write!(f, "mapping({k} => {v})"),
            Ty::Array(e, ArrayLen::Dynamic) => write!(f, "{e}[]"),
            Ty::Array(e, ArrayLen::Fixed(n)) => write!(f, "{e}[{n}]"),
            Ty::Interface(n) | Ty::Struct(n) => f.write_str(n),
            Ty::Void => f.write_str("void"),
            Ty::Error => f.write_str("<error>"),
        }
    }
}

/// Where a type is being declared; each position admits a different set of types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DeclSite {
    State,
    Param,
    Local,
    External,
}

struct Globals<'a> {
    interfaces: HashMap<&'a str, &'a InterfaceDecl>,
    structs: HashSet<&'a str>,
}

/// Checks a parse-clean, annotation-stripped file. Returns an empty list iff
/// the program is valid in the subset.
pub fn validate_subset(file: &SourceFile) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut globals = Globals { interfaces: HashMap::new(), structs: HashSet::new() };
    let mut top_names: HashSet<String> = HashSet::new();

    let mut declare_top = |name: &'_ Ident, diags: &mut Vec<Diagnostic>| {
        if !top_names.insert(name.name.clone()) {
            diags.push(Diagnostic::error(
                DiagCode::DuplicateDeclaration,
                name.span,
                format!("`{}` is declared more than once", name.name),
            ));
        }
    };
    for decl in &file.declarations {
        match decl {
            Declaration::Struct(s) => {
                declare_top(&s.name, &mut diags);
                globals.structs.insert(&s.name.name);
            }
            Declaration::Interface(i) => {
                declare_top(&i.name, &mut diags);
                globals.interfaces.insert(&i.name.name, i);
            }
            _ => {}
        }
    }
    for c in &file.contracts {
        declare_top(&c.name, &mut diags);
    }

    let mut checker = Checker { globals: &globals, diags };
    for s in file.structs() {
        let mut seen = HashSet::new();
        for field in &s.fields {
            checker.resolve(&field.ty, DeclSite::External);
            checker.unique(&mut seen, field.name.as_ref());
        }
    }
    for i in file.interfaces() {
        let mut seen = HashSet::new();
        for f in &i.functions {
            checker.unique(&mut seen, Some(&f.name));
            let mut names = HashSet::new();
            for p in f.params.iter().chain(&f.returns) {
                checker.resolve(&p.ty, DeclSite::External);
                checker.unique(&mut names, p.name.as_ref());
            }
        }
    }
    for c in &file.contracts {
        checker.check_contract(c);
    }
    checker.diags
}

struct Checker<'g, 'a> {
    globals: &'g Globals<'a>,
    diags: Vec<Diagnostic>,
}

struct FnEnv<'c> {
    state: &'c BTreeMap<String, Ty>,
    /// Parameters and named returns.
    signature: HashMap<String, Ty>,
    scopes: Vec<HashMap<String, Ty>>,
    returns: Vec<Ty>,
}

impl FnEnv<'_> {
    fn lookup(&self, name: &str) -> Option<&Ty> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name))
            .or_else(|| self.signature.get(name))
            .or_else(|| self.state.get(name))
    }
}

impl<'g, 'a> Checker<'g, 'a> {
    fn err(&mut self, code: DiagCode, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    fn unique<'n>(&mut self, seen: &mut HashSet<&'n str>, name: Option<&'n Ident>) {
        if let Some(name) = name {
            if !seen.insert(name.name.as_str()) {
                self.err(
                    DiagCode::DuplicateDeclaration,
                    name.span,
                    format!("`{}` is declared more than once", name.name),
                );
            }
        }
    }

    fn resolve(&mut self, t: &TypeName, site: DeclSite) -> Ty {
        match &t.kind {
            TypeKind::Uint => Ty::Uint,
            TypeKind::Bool => Ty::Bool,
            TypeKind::Address => Ty::Address,
            TypeKind::String => {
                if site != DeclSite::External {
                    self.err(DiagCode::UnsupportedConstruct, t.span, "`string` is only allowed in structs and interfaces");
                    return Ty::Error;
                }
                Ty::String
            }
            TypeKind::Named(n) => {
                if self.globals.interfaces.contains_key(n.as_str()) {
                    if site != DeclSite::State {
                        self.err(
                            DiagCode::UnsupportedConstruct,
                            t.span,
                            "interface-typed variables are only allowed as state variables",
                        );
                        return Ty::Error;
                    }
                    Ty::Interface(n.clone())
                } else if self.globals.structs.contains(n.as_str()) {
                    if site != DeclSite::External {
                        self.err(DiagCode::UnsupportedConstruct, t.span, "struct values are only allowed in interfaces");
                        return Ty::Error;
                    }
                    Ty::Struct(n.clone())
                } else {
                    self.err(DiagCode::UndeclaredIdentifier, t.span, format!("undeclared type `{n}`"));
                    Ty::Error
                }
            }
            TypeKind::Mapping { key, value, .. } => {
                if site != DeclSite::State {
                    self.err(DiagCode::UnsupportedConstruct, t.span, "mappings are only allowed as state variables");
                    return Ty::Error;
                }
                let k = self.resolve(key, site);
                if !matches!(k, Ty::Address | Ty::Uint | Ty::Error) {
                    self.err(DiagCode::UnsupportedConstruct, key.span, "mapping keys must be `address` or `uint`");
                }
                if matches!(value.kind, TypeKind::Mapping { .. } | TypeKind::Array { .. }) {
                    self.err(DiagCode::UnsupportedConstruct, value.span, "mapping values must be elementary");
                    return Ty::Error;
                }
                let v = self.resolve(value, site);
                Ty::Mapping(Box::new(k), Box::new(v))
            }
            TypeKind::Array { elem, len, .. } => {
                let elem_site = if site == DeclSite::External { site } else { DeclSite::Local };
                if !matches!(elem.kind, TypeKind::Uint | TypeKind::Bool | TypeKind::Address)
                    && !(site == DeclSite::External && matches!(elem.kind, TypeKind::String))
                {
                    self.err(DiagCode::UnsupportedConstruct, elem.span, "array elements must be elementary");
                    return Ty::Error;
                }
                let e = self.resolve(elem, elem_site);
                Ty::Array(Box::new(e), *len)
            }
        }
    }

    fn check_contract(&mut self, c: &ContractDecl) {
        let mut state = BTreeMap::new();
        let mut seen = HashSet::new();
        for v in &c.state_vars {
            self.unique(&mut seen, Some(&v.name));
            let ty = self.resolve(&v.ty, DeclSite::State);
            state.insert(v.name.name.clone(), ty);
        }
        for v in &c.state_vars {
            if let Some(init) = &v.init {
                let env = FnEnv { state: &state, signature: HashMap::new(), scopes: Vec::new(), returns: Vec::new() };
                let expected = state[&v.name.name].clone();
                let got = self.expr(&env, init);
                self.expect_assignable(&expected, &got, init.span);
            }
        }
        let mut fn_names = HashSet::new();
        for f in &c.functions {
            self.unique(&mut fn_names, Some(&f.name));
            self.check_function(&state, f);
        }
    }

    fn check_function(&mut self, state: &BTreeMap<String, Ty>, f: &FunctionDecl) {
        let mut signature = HashMap::new();
        let mut seen = HashSet::new();
        let mut returns = Vec::new();
        for (i, p) in f.params.iter().chain(&f.returns).enumerate() {
            let ty = self.resolve(&p.ty, DeclSite::Param);
            self.unique(&mut seen, p.name.as_ref());
            if i >= f.params.len() {
                returns.push(ty.clone());
            }
            if let Some(n) = &p.name {
                signature.insert(n.name.clone(), ty);
            }
        }
        let mut env = FnEnv { state, signature, scopes: vec![HashMap::new()], returns };
        if let Some(body) = &f.body {
            for s in &body.stmts {
                self.stmt(&mut env, s);
            }
        }
    }

    fn declare_local(&mut self, env: &mut FnEnv<'_>, v: &VarDecl) {
        let ty = self.resolve(&v.ty, DeclSite::Local);
        if let Some(init) = &v.init {
            let got = self.expr(env, init);
            self.expect_assignable(&ty, &got, init.span);
        }
        let scope = env.scopes.last_mut().expect("function scope");
        if scope.contains_key(&v.name.name) {
            self.err(
                DiagCode::DuplicateDeclaration,
                v.name.span,
                format!("`{}` is already declared in this scope", v.name.name),
            );
        }
        scope.insert(v.name.name.clone(), ty);
    }

    fn scoped(&mut self, env: &mut FnEnv<'_>, s: &Stmt) {
        env.scopes.push(HashMap::new());
        self.stmt(env, s);
        env.scopes.pop();
    }

    fn stmt(&mut self, env: &mut FnEnv<'_>, s: &Stmt) {
        match &s.kind {
            StmtKind::VarDecl(v) => self.declare_local(env, v),
            StmtKind::Expr(e) => {
                self.expr(env, e);
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let t = self.expr(env, cond);
                self.expect_ty(&Ty::Bool, &t, cond.span, "condition");
                self.scoped(env, then_branch);
                if let Some(e) = else_branch {
                    self.scoped(env, e);
                }
            }
            StmtKind::For { init, cond, step, body } => {
                env.scopes.push(HashMap::new());
                if let Some(i) = init {
                    self.stmt(env, i);
                }
                if let Some(c) = cond {
                    let t = self.expr(env, c);
                    self.expect_ty(&Ty::Bool, &t, c.span, "loop condition");
                }
                if let Some(st) = step {
                    self.expr(env, st);
                }
                self.scoped(env, body);
                env.scopes.pop();
            }
            StmtKind::Return(values) => {
                if !values.is_empty() && values.len() != env.returns.len() {
                    self.err(
                        DiagCode::ArityMismatch,
                        s.span,
                        format!("function returns {} value(s) but {} given", env.returns.len(), values.len()),
                    );
                    for v in values {
                        self.expr(env, v);
                    }
                    return;
                }
                let expected = env.returns.clone();
                for (v, want) in values.iter().zip(expected) {
                    let got = self.expr(env, v);
                    self.expect_assignable(&want, &got, v.span);
                }
            }
            StmtKind::Block(b) => {
                env.scopes.push(HashMap::new());
                for st in &b.stmts {
                    self.stmt(env, st);
                }
                env.scopes.pop();
            }
        }
    }

    fn expect_ty(&mut self, want: &Ty, got: &Ty, span: Span, what: &str) {
        if *got != Ty::Error && *want != Ty::Error && got != want {
            self.err(DiagCode::TypeMismatch, span, format!("{what} must be `{want}`, found `{got}`"));
        }
    }

    fn expect_assignable(&mut self, want: &Ty, got: &Ty, span: Span) {
        if *got == Ty::Error || *want == Ty::Error {
            return;
        }
        if matches!(want, Ty::Mapping(..)) {
            self.err(DiagCode::TypeMismatch, span, "mappings cannot be assigned");
        } else if got != want {
            self.err(DiagCode::TypeMismatch, span, format!("expected `{want}`, found `{got}`"));
        }
    }

    fn is_lvalue(e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Ident(_) => true,
            ExprKind::Index { base, .. } => Self::is_lvalue(base),
            _ => false,
        }
    }

    fn expr(&mut self, env: &FnEnv<'_>, e: &Expr) -> Ty {
        match &e.kind {
            ExprKind::Number(_) => Ty::Uint,
            ExprKind::Bool(_) => Ty::Bool,
            ExprKind::Ident(name) => match env.lookup(name) {
                Some(t) => t.clone(),
                None => {
                    self.err(DiagCode::UndeclaredIdentifier, e.span, format!("undeclared identifier `{name}`"));
                    Ty::Error
                }
            },
            ExprKind::Member { base, member } => {
                if base.as_ident() == Some("msg") && env.lookup("msg").is_none() {
                    if member.name == "sender" {
                        return Ty::Address;
                    }
                    self.err(DiagCode::UnsupportedConstruct, member.span, format!("`msg.{}` is not supported", member.name));
                    return Ty::Error;
                }
                let bt = self.expr(env, base);
                match (&bt, member.name.as_str()) {
                    (Ty::Error, _) => Ty::Error,
                    (Ty::Array(..), "length") => Ty::Uint,
                    _ => {
                        self.err(DiagCode::TypeMismatch, member.span, format!("`{bt}` has no member `{}`", member.name));
                        Ty::Error
                    }
                }
            }
            ExprKind::Index { base, index } => {
                let bt = self.expr(env, base);
                let it = self.expr(env, index);
                match bt {
                    Ty::Mapping(k, v) => {
                        self.expect_ty(&k, &it, index.span, "mapping key");
                        *v
                    }
                    Ty::Array(elem, _) => {
                        self.expect_ty(&Ty::Uint, &it, index.span, "array index");
                        *elem
                    }
                    Ty::Error => Ty::Error,
                    other => {
                        self.err(DiagCode::TypeMismatch, base.span, format!("`{other}` cannot be indexed"));
                        Ty::Error
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(env, lhs);
                let r = self.expr(env, rhs);
                if l == Ty::Error || r == Ty::Error {
                    return match op {
                        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => Ty::Uint,
                        _ => Ty::Bool,
                    };
                }
                let sym = op.symbol();
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod
                    | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => {
                        if l != Ty::Uint || r != Ty::Uint {
                            self.err(
                                DiagCode::TypeMismatch,
                                e.span,
                                format!("operator `{sym}` expects `uint` operands, found `{l}` and `{r}`"),
                            );
                            return Ty::Error;
                        }
                        if matches!(op, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod) {
                            Ty::Uint
                        } else {
                            Ty::Bool
                        }
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if l != r || !l.is_elementary() {
                            self.err(
                                DiagCode::TypeMismatch,
                                e.span,
                                format!("operator `{sym}` cannot compare `{l}` with `{r}`"),
                            );
                            return Ty::Error;
                        }
                        Ty::Bool
                    }
                    BinOp::And | BinOp::Or => {
                        if l != Ty::Bool || r != Ty::Bool {
                            self.err(
                                DiagCode::TypeMismatch,
                                e.span,
                                format!("operator `{sym}` expects `bool` operands, found `{l}` and `{r}`"),
                            );
                            return Ty::Error;
                        }
                        Ty::Bool
                    }
                }
            }
            ExprKind::Unary { op, operand } => {
                let t = self.expr(env, operand);
                let want = match op {
                    UnaryOp::Not => Ty::Bool,
                    UnaryOp::Neg => Ty::Uint,
                };
                if t != Ty::Error && t != want {
                    self.err(DiagCode::TypeMismatch, e.span, format!("unary operator expects `{want}`, found `{t}`"));
                    return Ty::Error;
                }
                want
            }
            ExprKind::Reveal { value, .. } => self.expr(env, value),
            ExprKind::Call { callee, args } => self.call(env, e, callee, args),
            ExprKind::Assign { op, target, value } => {
                let tt = self.expr(env, target);
                let vt = self.expr(env, value);
                if !Self::is_lvalue(target) {
                    self.err(DiagCode::TypeMismatch, target.span, "left-hand side is not assignable");
                    return Ty::Error;
                }
                match op {
                    AssignOp::Assign => self.expect_assignable(&tt, &vt, value.span),
                    AssignOp::AddAssign | AssignOp::SubAssign => {
                        self.expect_ty(&Ty::Uint, &tt, target.span, "compound assignment target");
                        self.expect_ty(&Ty::Uint, &vt, value.span, "compound assignment operand");
                    }
                }
                tt
            }
            ExprKind::Update { target, .. } => {
                let tt = self.expr(env, target);
                if !Self::is_lvalue(target) {
                    self.err(DiagCode::TypeMismatch, target.span, "operand of `++`/`--` is not assignable");
                    return Ty::Error;
                }
                self.expect_ty(&Ty::Uint, &tt, target.span, "operand of `++`/`--`");
                Ty::Uint
            }
        }
    }

    fn call(&mut self, env: &FnEnv<'_>, e: &Expr, callee: &Expr, args: &[Expr]) -> Ty {
        if callee.as_ident() == Some("require") && env.lookup("require").is_none() {
            if args.len() != 1 {
                self.err(DiagCode::ArityMismatch, e.span, "`require` takes exactly one argument");
            }
            for a in args {
                let t = self.expr(env, a);
                self.expect_ty(&Ty::Bool, &t, a.span, "`require` argument");
            }
            return Ty::Void;
        }
        if let ExprKind::Member { base, member } = &callee.kind {
            let bt = self.expr(env, base);
            if let Ty::Interface(iface) = &bt {
                let decl = self.globals.interfaces[iface.as_str()];
                let Some(f) = decl.functions.iter().find(|f| f.name.name == member.name) else {
                    self.err(
                        DiagCode::UndeclaredIdentifier,
                        member.span,
                        format!("interface `{iface}` has no function `{}`", member.name),
                    );
                    return Ty::Error;
                };
                if f.params.len() != args.len() {
                    self.err(
                        DiagCode::ArityMismatch,
                        e.span,
                        format!("`{}` takes {} argument(s) but {} given", member.name, f.params.len(), args.len()),
                    );
                }
                for (a, p) in args.iter().zip(&f.params) {
                    let got = self.expr(env, a);
                    let want = self.resolve(&p.ty, DeclSite::External);
                    self.expect_assignable(&want, &got, a.span);
                }
                return match f.returns.len() {
                    0 => Ty::Void,
                    1 => self.resolve(&f.returns[0].ty, DeclSite::External),
                    _ => {
                        self.err(DiagCode::UnsupportedConstruct, e.span, "multi-value calls are not supported");
                        Ty::Error
                    }
                };
            }
            if bt == Ty::Error {
                return Ty::Error;
            }
        }
        self.err(
            DiagCode::UnsupportedConstruct,
            callee.span,
            "only `reveal`, `require` and interface calls are supported",
        );
        Ty::Error
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, strip_annotations};
    use super::*;

    fn check(src: &str) -> Vec<Diagnostic> {
        let f = parse("t", src);
        assert!(f.diagnostics.is_empty(), "{:?}", f.diagnostics);
        validate_subset(&strip_annotations(&f))
    }

    fn codes(src: &str) -> Vec<DiagCode> {
        check(src).into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn undeclared_identifier() {
        assert_eq!(
            codes("contract C { uint x; function f() public { x = y; } }"),
            vec![DiagCode::UndeclaredIdentifier]
        );
    }

    #[test]
    fn bool_plus_uint() {
        assert_eq!(
            codes("contract C { function f() public { bool b = 1 + true; } }"),
            vec![DiagCode::TypeMismatch]
        );
    }

    #[test]
    fn mapping_key_type() {
        assert_eq!(
            codes("contract C { mapping(address => uint) m; function f() public { m[1] = 2; } }"),
            vec![DiagCode::TypeMismatch]
        );
        assert!(codes("contract C { mapping(address => uint) m; function f() public { m[msg.sender] = 2; } }").is_empty());
    }

    #[test]
    fn return_arity() {
        assert_eq!(
            codes("contract C { function f() public returns (uint) { return (1, 2); } }"),
            vec![DiagCode::ArityMismatch]
        );
        assert!(codes("contract C { function f() public returns (uint a, bool b) { return (1, true); } }").is_empty());
    }

    #[test]
    fn duplicates() {
        assert_eq!(
            codes("contract C { uint a; uint a; function f() public {} function f() public {} }"),
            vec![DiagCode::DuplicateDeclaration, DiagCode::DuplicateDeclaration]
        );
        assert_eq!(
            codes("contract C { function f() public { uint a; uint a; } }"),
            vec![DiagCode::DuplicateDeclaration]
        );
    }

    #[test]
    fn locals_shadow_state_and_are_block_scoped() {
        assert!(codes("contract C { uint m; function f() public { uint m = 1; m = 2; } }").is_empty());
        assert_eq!(
            codes("contract C { function f() public { if (true) { uint a = 1; } a = 2; } }"),
            vec![DiagCode::UndeclaredIdentifier]
        );
        assert_eq!(
            codes("contract C { function f() public { for (uint i = 0; i < 2; i++) {} i = 1; } }"),
            vec![DiagCode::UndeclaredIdentifier]
        );
    }

    #[test]
    fn interface_calls() {
        let src = "interface S { function v(uint[] p, uint x) external returns (bool); }\n\
                   contract C { S s; function f(uint[] p) public { require(s.v(p, 1)); } }";
        assert!(codes(src).is_empty());
        let bad = "interface S { function v(uint x) external returns (bool); }\n\
                   contract C { S s; function f() public { require(s.v(true)); s.w(); } }";
        assert_eq!(codes(bad), vec![DiagCode::TypeMismatch, DiagCode::UndeclaredIdentifier]);
    }

    #[test]
    fn unsupported_types() {
        assert_eq!(
            codes("contract C { mapping(bool => uint) m; function f(mapping(address => uint) x) public {} }"),
            vec![DiagCode::UnsupportedConstruct, DiagCode::UnsupportedConstruct]
        );
    }
}

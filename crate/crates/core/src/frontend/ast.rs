//! Annotated syntax tree for `.cloak` sources.
//!
//! Every node carries a [`Span`]. Spans and expression ids are skipped when
//! serializing, so [`SourceFile::shape`] gives a position-free structural view
//! used for round-trip and idempotence comparisons.

use primitive_types::U256;
use serde::{Serialize, Serializer};

use super::diagnostics::{Diagnostic, Span};

/// Parser-assigned identity of an expression node, unique within one parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ExprId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ident {
    pub name: String,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum OwnerKind {
    All,
    Me,
    Tee,
    Id(String),
    KeyBinding(String),
}

impl OwnerKind {
    pub fn from_name(name: &str) -> Self {
        match name {
            "all" => OwnerKind::All,
            "me" => OwnerKind::Me,
            "tee" => OwnerKind::Tee,
            other => OwnerKind::Id(other.to_string()),
        }
    }

    /// Source spelling, including the `@` / `!` sigil.
    pub fn sigil_text(&self) -> String {
        match self {
            OwnerKind::KeyBinding(name) => format!("!{name}"),
            other => format!("@{}", other.name()),
        }
    }

    /// Spelling without sigil, as used in `reveal(e, owner)`.
    pub fn name(&self) -> &str {
        match self {
            OwnerKind::All => "all",
            OwnerKind::Me => "me",
            OwnerKind::Tee => "tee",
            OwnerKind::Id(n) | OwnerKind::KeyBinding(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OwnerAnnotation {
    pub kind: OwnerKind,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ArrayLen {
    Dynamic,
    Fixed(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TypeKind {
    Uint,
    Bool,
    Address,
    String,
    Mapping {
        key: Box<TypeName>,
        key_binding: Option<OwnerAnnotation>,
        value: Box<TypeName>,
        value_owner: Option<OwnerAnnotation>,
    },
    Array {
        elem: Box<TypeName>,
        len: ArrayLen,
        slot: Option<OwnerAnnotation>,
    },
    /// Interface or struct name.
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeName {
    pub kind: TypeKind,
    #[serde(skip)]
    pub span: Span,
}

impl TypeName {
    pub fn new(kind: TypeKind, span: Span) -> Self {
        Self { kind, span }
    }

    pub fn is_elementary(&self) -> bool {
        matches!(self.kind, TypeKind::Uint | TypeKind::Bool | TypeKind::Address)
    }

    /// Annotation-free rendering, e.g. `mapping(address=>uint)`, `uint[]`.
    pub fn render_plain(&self) -> String {
        match &self.kind {
            TypeKind::Uint => "uint".into(),
            TypeKind::Bool => "bool".into(),
            TypeKind::Address => "address".into(),
            TypeKind::String => "string".into(),
            TypeKind::Named(n) => n.clone(),
            TypeKind::Mapping { key, value, .. } => {
                format!("mapping({}=>{})", key.render_plain(), value.render_plain())
            }
            TypeKind::Array { elem, len, .. } => match len {
                ArrayLen::Dynamic => format!("{}[]", elem.render_plain()),
                ArrayLen::Fixed(n) => format!("{}[{n}]", elem.render_plain()),
            },
        }
    }
}

/// State variable or local variable declaration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarDecl {
    pub ty: TypeName,
    pub owner: Option<OwnerAnnotation>,
    pub name: Ident,
    pub init: Option<Expr>,
    #[serde(skip)]
    pub span: Span,
}

/// Function parameter, return slot or struct field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Param {
    pub ty: TypeName,
    pub owner: Option<OwnerAnnotation>,
    pub name: Option<Ident>,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Visibility {
    Public,
    Internal,
    External,
}

impl Visibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::Internal => "internal",
            Visibility::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub visibility: Visibility,
    pub returns: Vec<Param>,
    /// `None` only for interface members.
    pub body: Option<Block>,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContractDecl {
    pub name: Ident,
    pub state_vars: Vec<VarDecl>,
    pub functions: Vec<FunctionDecl>,
    #[serde(skip)]
    pub span: Span,
}

impl ContractDecl {
    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name.name == name)
    }

    pub fn state_var(&self, name: &str) -> Option<&VarDecl> {
        self.state_vars.iter().find(|v| v.name.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructDecl {
    pub name: Ident,
    pub fields: Vec<Param>,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InterfaceDecl {
    pub name: Ident,
    pub functions: Vec<FunctionDecl>,
    #[serde(skip)]
    pub span: Span,
}

/// Top-level items other than contracts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Declaration {
    Pragma {
        text: String,
        #[serde(skip)]
        span: Span,
    },
    Import {
        path: String,
        #[serde(skip)]
        span: Span,
    },
    Struct(StructDecl),
    Interface(InterfaceDecl),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceFile {
    #[serde(skip)]
    pub path: String,
    pub declarations: Vec<Declaration>,
    pub contracts: Vec<ContractDecl>,
    #[serde(skip)]
    pub diagnostics: Vec<Diagnostic>,
}

impl SourceFile {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }

    /// Position-free structural view of the tree.
    pub fn shape(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("AST serializes")
    }

    pub fn interfaces(&self) -> impl Iterator<Item = &InterfaceDecl> {
        self.declarations.iter().filter_map(|d| match d {
            Declaration::Interface(i) => Some(i),
            _ => None,
        })
    }

    pub fn structs(&self) -> impl Iterator<Item = &StructDecl> {
        self.declarations.iter().filter_map(|d| match d {
            Declaration::Struct(s) => Some(s),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum StmtKind {
    VarDecl(VarDecl),
    Expr(Expr),
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Expr>,
        body: Box<Stmt>,
    },
    Return(Vec<Expr>),
    Block(Block),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stmt {
    pub kind: StmtKind,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne => 4,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 5,
            BinOp::Add | BinOp::Sub => 6,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AssignOp {
    Assign,
    AddAssign,
    SubAssign,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::AddAssign => "+=",
            AssignOp::SubAssign => "-=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UpdateOp {
    Increment,
    Decrement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ExprKind {
    Number(#[serde(serialize_with = "ser_u256")] U256),
    Bool(bool),
    Ident(String),
    Index {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    Member {
        base: Box<Expr>,
        member: Ident,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Reveal {
        value: Box<Expr>,
        owner: OwnerAnnotation,
    },
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
    },
    Assign {
        op: AssignOp,
        target: Box<Expr>,
        value: Box<Expr>,
    },
    Update {
        op: UpdateOp,
        prefix: bool,
        target: Box<Expr>,
    },
}

fn ser_u256<S: Serializer>(v: &U256, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Expr {
    #[serde(skip)]
    pub id: ExprId,
    pub kind: ExprKind,
    #[serde(skip)]
    pub span: Span,
}

impl Expr {
    /// Identifier name if this is a bare identifier.
    pub fn as_ident(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Ident(n) => Some(n),
            _ => None,
        }
    }

    pub fn is_msg_sender(&self) -> bool {
        matches!(&self.kind, ExprKind::Member { base, member }
            if base.as_ident() == Some("msg") && member.name == "sender")
    }

    /// Calls `f` on every direct sub-expression, in evaluation order.
    pub fn for_each_child<'a>(&'a self, mut f: impl FnMut(&'a Expr)) {
        match &self.kind {
            ExprKind::Number(_) | ExprKind::Bool(_) | ExprKind::Ident(_) => {}
            ExprKind::Index { base, index } => {
                f(base);
                f(index);
            }
            ExprKind::Member { base, .. } => f(base),
            ExprKind::Binary { lhs, rhs, .. } => {
                f(lhs);
                f(rhs);
            }
            ExprKind::Unary { operand, .. } => f(operand),
            ExprKind::Reveal { value, .. } => f(value),
            ExprKind::Call { callee, args } => {
                f(callee);
                args.iter().for_each(f);
            }
            ExprKind::Assign { target, value, .. } => {
                f(target);
                f(value);
            }
            ExprKind::Update { target, .. } => f(target),
        }
    }

    /// Pre-order walk over this expression and all descendants.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        self.for_each_child(|c| c.walk(f));
    }
}

impl Stmt {
    /// Calls `f` on every expression that appears directly in this statement or
    /// nested statements (not on sub-expressions).
    pub fn for_each_root_expr<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match &self.kind {
            StmtKind::VarDecl(v) => {
                if let Some(init) = &v.init {
                    f(init);
                }
            }
            StmtKind::Expr(e) => f(e),
            StmtKind::If { cond, then_branch, else_branch } => {
                f(cond);
                then_branch.for_each_root_expr(f);
                if let Some(e) = else_branch {
                    e.for_each_root_expr(f);
                }
            }
            StmtKind::For { init, cond, step, body } => {
                if let Some(i) = init {
                    i.for_each_root_expr(f);
                }
                if let Some(c) = cond {
                    f(c);
                }
                if let Some(s) = step {
                    f(s);
                }
                body.for_each_root_expr(f);
            }
            StmtKind::Return(values) => values.iter().for_each(&mut *f),
            StmtKind::Block(b) => b.stmts.iter().for_each(|s| s.for_each_root_expr(f)),
        }
    }
}

impl Block {
    /// Pre-order walk over every expression node in the block.
    pub fn walk_exprs<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        for stmt in &self.stmts {
            stmt.for_each_root_expr(&mut |e| e.walk(f));
        }
    }
}

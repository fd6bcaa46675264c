//! Recursive-descent parser for the `.cloak` language.
//!
//! Parsing stops at the first error; a file with errors exposes no contracts.

use super::ast::*;
use super::diagnostics::{DiagCode, Diagnostic, Span};
use super::lexer::{tokenize, Token, TokenKind};

type PResult<T> = Result<T, Diagnostic>;

/// Parses `source`. Never fails outright: errors are reported through
/// [`SourceFile::diagnostics`] and leave `contracts` and `declarations` empty.
pub fn parse(path: &str, source: &str) -> SourceFile {
    let result = tokenize(source).and_then(|tokens| Parser::new(tokens, source).parse_file());
    match result {
        Ok((declarations, contracts)) => SourceFile {
            path: path.to_string(),
            declarations,
            contracts,
            diagnostics: Vec::new(),
        },
        Err(diag) => SourceFile {
            path: path.to_string(),
            declarations: Vec::new(),
            contracts: Vec::new(),
            diagnostics: vec![diag],
        },
    }
}

/// Parses a single expression; the whole input must be consumed.
pub fn parse_expression(source: &str) -> Result<Expr, Diagnostic> {
    let mut p = Parser::new(tokenize(source)?, source);
    let e = p.parse_expr()?;
    p.expect(TokenKind::Eof, "end of input")?;
    Ok(e)
}

struct Parser<'s> {
    tokens: Vec<Token>,
    pos: usize,
    source: &'s str,
    next_id: u32,
}

impl<'s> Parser<'s> {
    fn new(tokens: Vec<Token>, source: &'s str) -> Self {
        Self { tokens, pos: 0, source, next_id: 0 }
    }

    // ---- token helpers ----

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_kind(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_nth(&self, n: usize) -> &TokenKind {
        let idx = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[idx].kind
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek_kind() == kind
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> Option<Token> {
        if self.at(kind) {
            Some(self.bump())
        } else {
            None
        }
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn error_here(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(DiagCode::ParseError, self.peek().span, msg)
    }

    fn describe(&self) -> String {
        match self.peek_kind() {
            TokenKind::Eof => "end of input".to_string(),
            _ => {
                let span = self.peek().span;
                format!("`{}`", &self.source[span.start..span.end])
            }
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<Token> {
        if self.at(&kind) {
            Ok(self.bump())
        } else {
            Err(self.error_here(format!("expected {what}, found {}", self.describe())))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<Ident> {
        match self.peek_kind().clone() {
            TokenKind::Ident(name) => {
                let span = self.bump().span;
                Ok(Ident { name, span })
            }
            _ => Err(self.error_here(format!("expected {what}, found {}", self.describe()))),
        }
    }

    fn fresh_id(&mut self) -> ExprId {
        let id = ExprId(self.next_id);
        self.next_id += 1;
        id
    }

    fn mk(&mut self, kind: ExprKind, span: Span) -> Expr {
        Expr { id: self.fresh_id(), kind, span }
    }

    // ---- top level ----

    fn parse_file(mut self) -> PResult<(Vec<Declaration>, Vec<ContractDecl>)> {
        let mut decls = Vec::new();
        let mut contracts = Vec::new();
        loop {
            match self.peek_kind() {
                TokenKind::Eof => break,
                TokenKind::Contract => contracts.push(self.parse_contract()?),
                TokenKind::Pragma => decls.push(self.parse_pragma()?),
                TokenKind::Import => {
                    let start = self.bump().span;
                    let path = match self.peek_kind().clone() {
                        TokenKind::Str(s) => {
                            self.bump();
                            s
                        }
                        _ => return Err(self.error_here("expected import path string")),
                    };
                    let end = self.expect(TokenKind::Semi, "`;`")?.span;
                    decls.push(Declaration::Import { path, span: start.to(end) });
                }
                TokenKind::Struct => decls.push(Declaration::Struct(self.parse_struct()?)),
                TokenKind::Interface => decls.push(Declaration::Interface(self.parse_interface()?)),
                TokenKind::Uint | TokenKind::Bool | TokenKind::Address | TokenKind::Mapping => {
                    // Parse the stray declaration anyway so malformed annotations get
                    // their precise diagnostic before the placement error.
                    let start = self.peek().span;
                    self.parse_var_decl(true)?;
                    return Err(Diagnostic::error(
                        DiagCode::ParseError,
                        start,
                        "variable declaration outside of a contract",
                    ));
                }
                _ => {
                    return Err(self.error_here(format!(
                        "expected `contract`, `interface`, `struct`, `pragma` or `import`, found {}",
                        self.describe()
                    )))
                }
            }
        }
        Ok((decls, contracts))
    }

    fn parse_pragma(&mut self) -> PResult<Declaration> {
        let start = self.bump().span;
        let text_start = self.peek().span.start;
        while !self.at(&TokenKind::Semi) {
            if self.at(&TokenKind::Eof) {
                return Err(self.error_here("unterminated pragma"));
            }
            self.bump();
        }
        let text_end = self.prev_span().end.max(text_start);
        let end = self.bump().span;
        let text = self.source[text_start..text_end].trim().to_string();
        if text.is_empty() {
            return Err(Diagnostic::error(DiagCode::ParseError, start, "empty pragma"));
        }
        Ok(Declaration::Pragma { text, span: start.to(end) })
    }

    fn parse_struct(&mut self) -> PResult<StructDecl> {
        let start = self.bump().span;
        let name = self.expect_ident("struct name")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut fields = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            let p = self.parse_param(false)?;
            if p.name.is_none() {
                return Err(Diagnostic::error(DiagCode::ParseError, p.span, "struct field needs a name"));
            }
            self.expect(TokenKind::Semi, "`;`")?;
            fields.push(p);
        }
        let end = self.bump().span;
        Ok(StructDecl { name, fields, span: start.to(end) })
    }

    fn parse_interface(&mut self) -> PResult<InterfaceDecl> {
        let start = self.bump().span;
        let name = self.expect_ident("interface name")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut functions = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            if !self.at(&TokenKind::Function) {
                return Err(self.error_here(format!(
                    "expected `function` in interface, found {}",
                    self.describe()
                )));
            }
            functions.push(self.parse_function(true)?);
        }
        let end = self.bump().span;
        Ok(InterfaceDecl { name, functions, span: start.to(end) })
    }

    fn parse_contract(&mut self) -> PResult<ContractDecl> {
        let start = self.bump().span;
        let name = self.expect_ident("contract name")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut state_vars = Vec::new();
        let mut functions = Vec::new();
        loop {
            match self.peek_kind() {
                TokenKind::RBrace => break,
                TokenKind::Function => functions.push(self.parse_function(false)?),
                TokenKind::Eof => return Err(self.error_here("unterminated contract body")),
                _ => {
                    let decl = self.parse_var_decl(true)?;
                    self.expect(TokenKind::Semi, "`;`")?;
                    state_vars.push(decl);
                }
            }
        }
        let end = self.bump().span;
        Ok(ContractDecl { name, state_vars, functions, span: start.to(end) })
    }

    fn parse_function(&mut self, in_interface: bool) -> PResult<FunctionDecl> {
        let start = self.bump().span;
        let name = self.expect_ident("function name")?;
        let params = self.parse_param_list(false)?;
        let visibility = match self.peek_kind() {
            TokenKind::Public => Visibility::Public,
            TokenKind::Internal => Visibility::Internal,
            TokenKind::External => Visibility::External,
            _ => return Err(self.error_here(format!("expected visibility, found {}", self.describe()))),
        };
        let vis_span = self.bump().span;
        if in_interface != (visibility == Visibility::External) {
            let msg = if in_interface {
                "interface functions must be `external`"
            } else {
                "contract functions must be `public` or `internal`"
            };
            return Err(Diagnostic::error(DiagCode::ParseError, vis_span, msg));
        }
        let returns = if self.eat(&TokenKind::Returns).is_some() {
            self.parse_param_list(true)?
        } else {
            Vec::new()
        };
        let (body, end) = if in_interface {
            let end = self.expect(TokenKind::Semi, "`;`")?.span;
            (None, end)
        } else {
            let block = self.parse_block()?;
            let end = block.span;
            (Some(block), end)
        };
        Ok(FunctionDecl { name, params, visibility, returns, body, span: start.to(end) })
    }

    fn parse_param_list(&mut self, returns: bool) -> PResult<Vec<Param>> {
        self.expect(TokenKind::LParen, "`(`")?;
        let mut params = Vec::new();
        if self.eat(&TokenKind::RParen).is_some() {
            return Ok(params);
        }
        loop {
            let p = self.parse_param(true)?;
            if !returns && p.name.is_none() {
                return Err(Diagnostic::error(DiagCode::ParseError, p.span, "parameter needs a name"));
            }
            params.push(p);
            if self.eat(&TokenKind::Comma).is_none() {
                break;
            }
        }
        self.expect(TokenKind::RParen, "`)` or `,`")?;
        Ok(params)
    }

    fn parse_param(&mut self, allow_array_binding: bool) -> PResult<Param> {
        let ty = self.parse_type(allow_array_binding)?;
        let owner = self.parse_postfix_owner(&ty)?;
        let name = match self.peek_kind() {
            TokenKind::Ident(_) => Some(self.expect_ident("name")?),
            _ => None,
        };
        let end = name.as_ref().map(|n| n.span).or(owner.as_ref().map(|o| o.span)).unwrap_or(ty.span);
        Ok(Param { span: ty.span.to(end), ty, owner, name })
    }

    /// State variable (`state = true`) or local declaration, without the `;`.
    fn parse_var_decl(&mut self, state: bool) -> PResult<VarDecl> {
        let ty = self.parse_type(state)?;
        let owner = self.parse_postfix_owner(&ty)?;
        let name = self.expect_ident("variable name")?;
        let init = if self.eat(&TokenKind::Assign).is_some() {
            Some(self.parse_expr()?)
        } else {
            None
        };
        let end = init.as_ref().map(|e| e.span).unwrap_or(name.span);
        Ok(VarDecl { span: ty.span.to(end), ty, owner, name, init })
    }

    // ---- annotations ----

    /// `@owner` directly after an elementary type.
    fn parse_postfix_owner(&mut self, ty: &TypeName) -> PResult<Option<OwnerAnnotation>> {
        match self.peek_kind() {
            TokenKind::At => {
                if !ty.is_elementary() {
                    return Err(Diagnostic::error(
                        DiagCode::AnnotationSyntaxError,
                        self.peek().span,
                        "owner annotation on a mapping or array must be placed inside the type",
                    ));
                }
                Ok(Some(self.parse_owner_annotation()?))
            }
            TokenKind::Bang => Err(Diagnostic::error(
                DiagCode::AnnotationSyntaxError,
                self.peek().span,
                "`!` bindings are only allowed in mapping-key or array positions",
            )),
            _ => Ok(None),
        }
    }

    fn sigil_name(&mut self, sigil: Span, what: &str) -> PResult<(String, Span)> {
        let next = self.peek().clone();
        let name = match &next.kind {
            TokenKind::Ident(n) if next.span.start == sigil.end => n.clone(),
            _ => {
                return Err(Diagnostic::error(
                    DiagCode::AnnotationSyntaxError,
                    sigil,
                    format!("dangling `{}`: expected {what} immediately after it", &self.source[sigil.start..sigil.end]),
                ))
            }
        };
        self.bump();
        Ok((name, sigil.to(next.span)))
    }

    fn parse_owner_annotation(&mut self) -> PResult<OwnerAnnotation> {
        let at = self.bump().span;
        let (name, span) = self.sigil_name(at, "an owner name")?;
        Ok(OwnerAnnotation { kind: OwnerKind::from_name(&name), span })
    }

    fn parse_binding(&mut self) -> PResult<OwnerAnnotation> {
        let bang = self.bump().span;
        let (name, span) = self.sigil_name(bang, "a binding name")?;
        if matches!(name.as_str(), "all" | "me" | "tee") {
            return Err(Diagnostic::error(
                DiagCode::AnnotationSyntaxError,
                span,
                format!("`{name}` is a reserved owner and cannot be bound"),
            ));
        }
        Ok(OwnerAnnotation { kind: OwnerKind::KeyBinding(name), span })
    }

    // ---- types ----

    fn parse_type(&mut self, allow_array_binding: bool) -> PResult<TypeName> {
        let tok = self.peek().clone();
        let mut ty = match &tok.kind {
            TokenKind::Uint => {
                self.bump();
                TypeName::new(TypeKind::Uint, tok.span)
            }
            TokenKind::Bool => {
                self.bump();
                TypeName::new(TypeKind::Bool, tok.span)
            }
            TokenKind::Address => {
                self.bump();
                TypeName::new(TypeKind::Address, tok.span)
            }
            TokenKind::StringTy => {
                self.bump();
                TypeName::new(TypeKind::String, tok.span)
            }
            TokenKind::Ident(n) => {
                self.bump();
                TypeName::new(TypeKind::Named(n.clone()), tok.span)
            }
            TokenKind::Mapping => return self.parse_mapping(),
            _ => return Err(self.error_here(format!("expected a type, found {}", self.describe()))),
        };
        while self.at(&TokenKind::LBracket) {
            self.bump();
            let (len, slot) = match self.peek_kind().clone() {
                TokenKind::RBracket => (ArrayLen::Dynamic, None),
                TokenKind::Number(n) => {
                    self.bump();
                    let n = if n.bits() <= 64 { n.as_u64() } else { u64::MAX };
                    (ArrayLen::Fixed(n), None)
                }
                TokenKind::At => (ArrayLen::Dynamic, Some(self.parse_owner_annotation()?)),
                TokenKind::Bang => {
                    if !allow_array_binding {
                        return Err(Diagnostic::error(
                            DiagCode::AnnotationSyntaxError,
                            self.peek().span,
                            "`!` party bindings are only allowed on parameter or state arrays",
                        ));
                    }
                    (ArrayLen::Dynamic, Some(self.parse_binding()?))
                }
                _ => return Err(self.error_here(format!("expected `]`, found {}", self.describe()))),
            };
            let end = self.expect(TokenKind::RBracket, "`]`")?.span;
            let span = ty.span.to(end);
            ty = TypeName::new(TypeKind::Array { elem: Box::new(ty), len, slot }, span);
        }
        Ok(ty)
    }

    fn parse_mapping(&mut self) -> PResult<TypeName> {
        let start = self.bump().span;
        self.expect(TokenKind::LParen, "`(`")?;
        let key = self.parse_type(false)?;
        let key_binding = match self.peek_kind() {
            TokenKind::Bang => Some(self.parse_binding()?),
            TokenKind::At => {
                return Err(Diagnostic::error(
                    DiagCode::AnnotationSyntaxError,
                    self.peek().span,
                    "mapping keys take a `!name` binding, not an owner",
                ))
            }
            _ => None,
        };
        self.expect(TokenKind::FatArrow, "`=>`")?;
        let value = self.parse_type(false)?;
        let value_owner = self.parse_postfix_owner(&value)?;
        let end = self.expect(TokenKind::RParen, "`)`")?.span;
        Ok(TypeName::new(
            TypeKind::Mapping { key: Box::new(key), key_binding, value: Box::new(value), value_owner },
            start.to(end),
        ))
    }

    // ---- statements ----

    fn parse_block(&mut self) -> PResult<Block> {
        let start = self.expect(TokenKind::LBrace, "`{`")?.span;
        let mut stmts = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            if self.at(&TokenKind::Eof) {
                return Err(self.error_here("unterminated block"));
            }
            stmts.push(self.parse_stmt()?);
        }
        let end = self.bump().span;
        Ok(Block { stmts, span: start.to(end) })
    }

    fn starts_var_decl(&self) -> bool {
        match self.peek_kind() {
            TokenKind::Uint | TokenKind::Bool | TokenKind::Address | TokenKind::StringTy | TokenKind::Mapping => true,
            TokenKind::Ident(_) => matches!(self.peek_nth(1), TokenKind::Ident(_)),
            _ => false,
        }
    }

    fn parse_stmt(&mut self) -> PResult<Stmt> {
        let start = self.peek().span;
        match self.peek_kind() {
            TokenKind::LBrace => {
                let b = self.parse_block()?;
                let span = b.span;
                Ok(Stmt { kind: StmtKind::Block(b), span })
            }
            TokenKind::If => {
                self.bump();
                self.expect(TokenKind::LParen, "`(`")?;
                let cond = self.parse_expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                let then_branch = Box::new(self.parse_stmt()?);
                let else_branch = if self.eat(&TokenKind::Else).is_some() {
                    Some(Box::new(self.parse_stmt()?))
                } else {
                    None
                };
                let end = else_branch.as_ref().map(|e| e.span).unwrap_or(then_branch.span);
                Ok(Stmt { kind: StmtKind::If { cond, then_branch, else_branch }, span: start.to(end) })
            }
            TokenKind::For => {
                self.bump();
                self.expect(TokenKind::LParen, "`(`")?;
                let init = if self.eat(&TokenKind::Semi).is_some() {
                    None
                } else {
                    Some(Box::new(self.parse_simple_stmt()?))
                };
                let cond = if self.at(&TokenKind::Semi) { None } else { Some(self.parse_expr()?) };
                self.expect(TokenKind::Semi, "`;`")?;
                let step = if self.at(&TokenKind::RParen) { None } else { Some(self.parse_expr()?) };
                self.expect(TokenKind::RParen, "`)`")?;
                let body = Box::new(self.parse_stmt()?);
                let span = start.to(body.span);
                Ok(Stmt { kind: StmtKind::For { init, cond, step, body }, span })
            }
            TokenKind::Return => {
                self.bump();
                let mut values = Vec::new();
                if !self.at(&TokenKind::Semi) {
                    if self.at(&TokenKind::LParen) && self.is_tuple_ahead() {
                        self.bump();
                        loop {
                            values.push(self.parse_expr()?);
                            if self.eat(&TokenKind::Comma).is_none() {
                                break;
                            }
                        }
                        self.expect(TokenKind::RParen, "`)`")?;
                    } else {
                        values.push(self.parse_expr()?);
                    }
                }
                let end = self.expect(TokenKind::Semi, "`;`")?.span;
                Ok(Stmt { kind: StmtKind::Return(values), span: start.to(end) })
            }
            _ => self.parse_simple_stmt(),
        }
    }

    /// Looks for a top-level comma inside the parenthesis at the cursor.
    fn is_tuple_ahead(&self) -> bool {
        let mut depth = 0usize;
        for tok in &self.tokens[self.pos..] {
            match tok.kind {
                TokenKind::LParen | TokenKind::LBracket => depth += 1,
                TokenKind::RParen | TokenKind::RBracket => {
                    depth -= 1;
                    if depth == 0 {
                        return false;
                    }
                }
                TokenKind::Comma if depth == 1 => return true,
                TokenKind::Semi | TokenKind::Eof => return false,
                _ => {}
            }
        }
        false
    }

    /// Variable declaration or expression statement, including the `;`.
    fn parse_simple_stmt(&mut self) -> PResult<Stmt> {
        let start = self.peek().span;
        let kind = if self.starts_var_decl() {
            StmtKind::VarDecl(self.parse_var_decl(false)?)
        } else {
            StmtKind::Expr(self.parse_expr()?)
        };
        let end = self.expect(TokenKind::Semi, "`;`")?.span;
        Ok(Stmt { kind, span: start.to(end) })
    }

    // ---- expressions ----

    pub(crate) fn parse_expr(&mut self) -> PResult<Expr> {
        let target = self.parse_binary(2)?;
        let op = match self.peek_kind() {
            TokenKind::Assign => AssignOp::Assign,
            TokenKind::PlusAssign => AssignOp::AddAssign,
            TokenKind::MinusAssign => AssignOp::SubAssign,
            _ => return Ok(target),
        };
        self.bump();
        let value = self.parse_expr()?;
        let span = target.span.to(value.span);
        Ok(self.mk(ExprKind::Assign { op, target: Box::new(target), value: Box::new(value) }, span))
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek_kind() {
            TokenKind::OrOr => BinOp::Or,
            TokenKind::AndAnd => BinOp::And,
            TokenKind::EqEq => BinOp::Eq,
            TokenKind::NotEq => BinOp::Ne,
            TokenKind::Lt => BinOp::Lt,
            TokenKind::Gt => BinOp::Gt,
            TokenKind::Le => BinOp::Le,
            TokenKind::Ge => BinOp::Ge,
            TokenKind::Plus => BinOp::Add,
            TokenKind::Minus => BinOp::Sub,
            TokenKind::Star => BinOp::Mul,
            TokenKind::Slash => BinOp::Div,
            TokenKind::Percent => BinOp::Mod,
            _ => return None,
        })
    }

    fn parse_binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.parse_binary(op.precedence() + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = self.mk(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span);
        }
        if self.at(&TokenKind::At) {
            return Err(Diagnostic::error(
                DiagCode::AnnotationSyntaxError,
                self.peek().span,
                "owner annotations are only allowed in declarations",
            ));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        let start = self.peek().span;
        let prefix = match self.peek_kind() {
            TokenKind::Bang => Some(Ok(UnaryOp::Not)),
            TokenKind::Minus => Some(Ok(UnaryOp::Neg)),
            TokenKind::PlusPlus => Some(Err(UpdateOp::Increment)),
            TokenKind::MinusMinus => Some(Err(UpdateOp::Decrement)),
            _ => None,
        };
        let Some(prefix) = prefix else {
            return self.parse_postfix();
        };
        self.bump();
        let operand = self.parse_unary()?;
        let span = start.to(operand.span);
        let kind = match prefix {
            Ok(op) => ExprKind::Unary { op, operand: Box::new(operand) },
            Err(op) => ExprKind::Update { op, prefix: true, target: Box::new(operand) },
        };
        Ok(self.mk(kind, span))
    }

    fn parse_postfix(&mut self) -> PResult<Expr> {
        let mut expr = self.parse_primary()?;
        loop {
            match self.peek_kind() {
                TokenKind::LBracket => {
                    self.bump();
                    let index = self.parse_expr()?;
                    let end = self.expect(TokenKind::RBracket, "`]`")?.span;
                    let span = expr.span.to(end);
                    expr = self.mk(ExprKind::Index { base: Box::new(expr), index: Box::new(index) }, span);
                }
                TokenKind::Dot => {
                    self.bump();
                    let member = self.expect_ident("member name")?;
                    let span = expr.span.to(member.span);
                    expr = self.mk(ExprKind::Member { base: Box::new(expr), member }, span);
                }
                TokenKind::LParen => {
                    self.bump();
                    let mut args = Vec::new();
                    if !self.at(&TokenKind::RParen) {
                        loop {
                            args.push(self.parse_expr()?);
                            if self.eat(&TokenKind::Comma).is_none() {
                                break;
                            }
                        }
                    }
                    let end = self.expect(TokenKind::RParen, "`)`")?.span;
                    let span = expr.span.to(end);
                    expr = self.mk(ExprKind::Call { callee: Box::new(expr), args }, span);
                }
                TokenKind::PlusPlus | TokenKind::MinusMinus => {
                    let op = if self.at(&TokenKind::PlusPlus) { UpdateOp::Increment } else { UpdateOp::Decrement };
                    let end = self.bump().span;
                    let span = expr.span.to(end);
                    expr = self.mk(ExprKind::Update { op, prefix: false, target: Box::new(expr) }, span);
                }
                _ => return Ok(expr),
            }
        }
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Number(n) => {
                self.bump();
                Ok(self.mk(ExprKind::Number(n), tok.span))
            }
            TokenKind::True | TokenKind::False => {
                self.bump();
                Ok(self.mk(ExprKind::Bool(tok.kind == TokenKind::True), tok.span))
            }
            TokenKind::Ident(name) => {
                self.bump();
                Ok(self.mk(ExprKind::Ident(name), tok.span))
            }
            TokenKind::LParen => {
                self.bump();
                let inner = self.parse_expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Reveal => {
                self.bump();
                self.expect(TokenKind::LParen, "`(`")?;
                let value = self.parse_expr()?;
                self.expect(TokenKind::Comma, "`,` and the reveal target owner")?;
                let owner_tok = self.peek().clone();
                let owner = match &owner_tok.kind {
                    TokenKind::Ident(n) => {
                        self.bump();
                        OwnerAnnotation { kind: OwnerKind::from_name(n), span: owner_tok.span }
                    }
                    TokenKind::At => {
                        return Err(Diagnostic::error(
                            DiagCode::AnnotationSyntaxError,
                            owner_tok.span,
                            "reveal target is written without `@`",
                        ))
                    }
                    _ => return Err(self.error_here(format!("expected an owner, found {}", self.describe()))),
                };
                let end = self.expect(TokenKind::RParen, "`)`")?.span;
                Ok(self.mk(ExprKind::Reveal { value: Box::new(value), owner }, tok.span.to(end)))
            }
            TokenKind::At => Err(Diagnostic::error(
                DiagCode::AnnotationSyntaxError,
                tok.span,
                "owner annotations are only allowed in declarations",
            )),
            _ => Err(self.error_here(format!("expected an expression, found {}", self.describe()))),
        }
    }
}

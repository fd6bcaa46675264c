//! Tokenizer for `.cloak` sources.

use primitive_types::U256;

use super::diagnostics::{DiagCode, Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Number(U256),
    Str(String),

    // keywords
    Contract,
    Interface,
    Struct,
    Function,
    Returns,
    Return,
    Public,
    Internal,
    External,
    If,
    Else,
    For,
    Mapping,
    Uint,
    Bool,
    Address,
    StringTy,
    True,
    False,
    Reveal,
    Pragma,
    Import,

    // punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Dot,
    At,
    Bang,
    Caret,
    FatArrow,
    Assign,
    PlusAssign,
    MinusAssign,
    PlusPlus,
    MinusMinus,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    NotEq,
    AndAnd,
    OrOr,

    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

fn keyword(word: &str) -> Option<TokenKind> {
    Some(match word {
        "contract" => TokenKind::Contract,
        "interface" => TokenKind::Interface,
        "struct" => TokenKind::Struct,
        "function" => TokenKind::Function,
        "returns" => TokenKind::Returns,
        "return" => TokenKind::Return,
        "public" => TokenKind::Public,
        "internal" => TokenKind::Internal,
        "external" => TokenKind::External,
        "if" => TokenKind::If,
        "else" => TokenKind::Else,
        "for" => TokenKind::For,
        "mapping" => TokenKind::Mapping,
        "uint" | "uint256" => TokenKind::Uint,
        "bool" => TokenKind::Bool,
        "address" => TokenKind::Address,
        "string" => TokenKind::StringTy,
        "true" => TokenKind::True,
        "false" => TokenKind::False,
        "reveal" => TokenKind::Reveal,
        "pragma" => TokenKind::Pragma,
        "import" => TokenKind::Import,
        _ => return None,
    })
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start = i;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(Diagnostic::error(
                        DiagCode::LexError,
                        Span::new(start, source.len()),
                        "unterminated block comment",
                    ));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }

        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' || c == b'$' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
                i += 1;
            }
            let word = &source[start..i];
            let kind = keyword(word).unwrap_or_else(|| TokenKind::Ident(word.to_string()));
            tokens.push(Token { kind, span: Span::new(start, i) });
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && (bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
                return Err(Diagnostic::error(
                    DiagCode::LexError,
                    Span::new(start, i + 1),
                    "malformed number literal",
                ));
            }
            let value = U256::from_dec_str(&source[start..i]).map_err(|_| {
                Diagnostic::error(
                    DiagCode::LexError,
                    Span::new(start, i),
                    "number literal does not fit in 256 bits",
                )
            })?;
            tokens.push(Token { kind: TokenKind::Number(value), span: Span::new(start, i) });
            continue;
        }
        if c == b'"' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' && bytes[i] != b'\n' {
                i += 1;
            }
            if i >= bytes.len() || bytes[i] != b'"' {
                return Err(Diagnostic::error(
                    DiagCode::LexError,
                    Span::new(start, i),
                    "unterminated string literal",
                ));
            }
            i += 1;
            tokens.push(Token {
                kind: TokenKind::Str(source[start + 1..i - 1].to_string()),
                span: Span::new(start, i),
            });
            continue;
        }

        let next = bytes.get(i + 1).copied();
        let (kind, len) = match (c, next) {
            (b'=', Some(b'>')) => (TokenKind::FatArrow, 2),
            (b'=', Some(b'=')) => (TokenKind::EqEq, 2),
            (b'!', Some(b'=')) => (TokenKind::NotEq, 2),
            (b'<', Some(b'=')) => (TokenKind::Le, 2),
            (b'>', Some(b'=')) => (TokenKind::Ge, 2),
            (b'&', Some(b'&')) => (TokenKind::AndAnd, 2),
            (b'|', Some(b'|')) => (TokenKind::OrOr, 2),
            (b'+', Some(b'=')) => (TokenKind::PlusAssign, 2),
            (b'-', Some(b'=')) => (TokenKind::MinusAssign, 2),
            (b'+', Some(b'+')) => (TokenKind::PlusPlus, 2),
            (b'-', Some(b'-')) => (TokenKind::MinusMinus, 2),
            (b'(', _) => (TokenKind::LParen, 1),
            (b')', _) => (TokenKind::RParen, 1),
            (b'{', _) => (TokenKind::LBrace, 1),
            (b'}', _) => (TokenKind::RBrace, 1),
            (b'[', _) => (TokenKind::LBracket, 1),
            (b']', _) => (TokenKind::RBracket, 1),
            (b';', _) => (TokenKind::Semi, 1),
            (b',', _) => (TokenKind::Comma, 1),
            (b'.', _) => (TokenKind::Dot, 1),
            (b'@', _) => (TokenKind::At, 1),
            (b'!', _) => (TokenKind::Bang, 1),
            (b'^', _) => (TokenKind::Caret, 1),
            (b'=', _) => (TokenKind::Assign, 1),
            (b'+', _) => (TokenKind::Plus, 1),
            (b'-', _) => (TokenKind::Minus, 1),
            (b'*', _) => (TokenKind::Star, 1),
            (b'/', _) => (TokenKind::Slash, 1),
            (b'%', _) => (TokenKind::Percent, 1),
            (b'<', _) => (TokenKind::Lt, 1),
            (b'>', _) => (TokenKind::Gt, 1),
            _ => {
                let ch = source[i..].chars().next().unwrap_or('?');
                return Err(Diagnostic::error(
                    DiagCode::LexError,
                    Span::new(i, i + ch.len_utf8()),
                    format!("illegal character {ch:?}"),
                ));
            }
        };
        i += len;
        tokens.push(Token { kind, span: Span::new(start, i) });
    }

    tokens.push(Token { kind: TokenKind::Eof, span: Span::new(source.len(), source.len()) });
    Ok(tokens)
}

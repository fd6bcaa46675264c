//! Big-step interpreter for annotation-free contract functions.
//!
//! `uint` arithmetic wraps modulo 2^256. Division or modulo by zero, an
//! out-of-range array index, a failed `require` or running out of steps
//! abort the call.

use std::collections::BTreeMap;

use primitive_types::U256;

use crate::frontend::ast::{
    AssignOp, BinOp, Block, ContractDecl, Expr, ExprKind, FunctionDecl, Stmt, StmtKind, UnaryOp, UpdateOp,
};
use crate::value::{default_for_type, Address, Value};

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("division or modulo by zero")]
    DivisionByZero,
    #[error("index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: U256, len: usize },
    #[error("require condition failed")]
    RequireFailed,
    #[error("step limit exceeded")]
    StepLimit,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("expected {expected} arguments, got {got}")]
    ArgumentCount { expected: usize, got: usize },
    #[error("type error: {0}")]
    Type(String),
    #[error("unsupported at runtime: {0}")]
    Unsupported(String),
}

type R<T> = Result<T, RuntimeError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutcome {
    pub returns: Vec<Value>,
    pub state: BTreeMap<String, Value>,
    /// Locals of the function's outermost block as they stood at exit.
    pub locals: BTreeMap<String, Value>,
}

/// Runs `function` of `contract` with `args` over a copy of `state`.
pub fn interpret(
    contract: &ContractDecl,
    function: &str,
    args: Vec<Value>,
    state: BTreeMap<String, Value>,
    sender: Address,
) -> R<ExecOutcome> {
    interpret_with_limit(contract, function, args, state, sender, DEFAULT_STEP_LIMIT)
}

pub fn interpret_with_limit(
    contract: &ContractDecl,
    function: &str,
    args: Vec<Value>,
    state: BTreeMap<String, Value>,
    sender: Address,
    step_limit: u64,
) -> R<ExecOutcome> {
    let f = contract.function(function).ok_or_else(|| RuntimeError::UnknownFunction(function.to_string()))?;
    if args.len() != f.params.len() {
        return Err(RuntimeError::ArgumentCount { expected: f.params.len(), got: args.len() });
    }
    let mut frame = BTreeMap::new();
    for (p, a) in f.params.iter().zip(args) {
        if let Some(n) = &p.name {
            frame.insert(n.name.clone(), a);
        }
    }
    for r in &f.returns {
        if let Some(n) = &r.name {
            let d = default_for_type(&r.ty).ok_or_else(|| RuntimeError::Unsupported(r.ty.render_plain()))?;
            frame.insert(n.name.clone(), d);
        }
    }
    let mut m = Machine { state, scopes: vec![frame], sender, steps: 0, limit: step_limit, explicit: None, locals_captured: None };
    m.run(f)?;
    let returns = match m.explicit.take() {
        Some(vals) => vals,
        None => f
            .returns
            .iter()
            .map(|r| match &r.name {
                Some(n) => Ok(m.scopes[0].get(&n.name).cloned().unwrap_or(Value::uint(0))),
                None => default_for_type(&r.ty).ok_or_else(|| RuntimeError::Unsupported(r.ty.render_plain())),
            })
            .collect::<R<Vec<_>>>()?,
    };
    let locals = m.locals_captured.take().unwrap_or_default();
    Ok(ExecOutcome { returns, state: m.state, locals })
}

enum Flow {
    Normal,
    Return,
}

/// An assignable location.
enum Place {
    Var(String),
    Element(String, Value),
}

struct Machine {
    state: BTreeMap<String, Value>,
    scopes: Vec<BTreeMap<String, Value>>,
    sender: Address,
    steps: u64,
    limit: u64,
    explicit: Option<Vec<Value>>,
    locals_captured: Option<BTreeMap<String, Value>>,
}

impl Machine {
    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.limit {
            return Err(RuntimeError::StepLimit);
        }
        Ok(())
    }

    fn run(&mut self, f: &FunctionDecl) -> R<()> {
        let Some(body) = &f.body else { return Ok(()) };
        self.scopes.push(BTreeMap::new());
        let result = self.stmts(body);
        self.capture_locals();
        self.scopes.truncate(1);
        result.map(|_| ())
    }

    fn stmts(&mut self, b: &Block) -> R<Flow> {
        for s in &b.stmts {
            if let Flow::Return = self.stmt(s)? {
                return Ok(Flow::Return);
            }
        }
        Ok(Flow::Normal)
    }

    fn scoped<T>(&mut self, f: impl FnOnce(&mut Self) -> R<T>) -> R<T> {
        self.scopes.push(BTreeMap::new());
        let r = f(self);
        self.scopes.pop();
        r
    }

    fn capture_locals(&mut self) {
        if self.locals_captured.is_none() {
            self.locals_captured = Some(self.scopes.get(1).cloned().unwrap_or_default());
        }
    }

    fn stmt(&mut self, s: &Stmt) -> R<Flow> {
        self.tick()?;
        match &s.kind {
            StmtKind::VarDecl(v) => {
                let value = match &v.init {
                    Some(e) => self.eval(e)?,
                    None => default_for_type(&v.ty).ok_or_else(|| RuntimeError::Unsupported(v.ty.render_plain()))?,
                };
                self.scopes.last_mut().expect("a scope is always open").insert(v.name.name.clone(), value);
                Ok(Flow::Normal)
            }
            StmtKind::Expr(e) => {
                self.eval(e)?;
                Ok(Flow::Normal)
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                if self.eval_bool(cond)? {
                    self.scoped(|m| m.stmt(then_branch))
                } else if let Some(e) = else_branch {
                    self.scoped(|m| m.stmt(e))
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::For { init, cond, step, body } => self.scoped(|m| {
                if let Some(i) = init {
                    m.stmt(i)?;
                }
                loop {
                    m.tick()?;
                    if let Some(c) = cond {
                        if !m.eval_bool(c)? {
                            break;
                        }
                    }
                    if let Flow::Return = m.scoped(|m| m.stmt(body))? {
                        return Ok(Flow::Return);
                    }
                    if let Some(st) = step {
                        m.eval(st)?;
                    }
                }
                Ok(Flow::Normal)
            }),
            StmtKind::Return(values) => {
                if !values.is_empty() {
                    let vals = values.iter().map(|e| self.eval(e)).collect::<R<Vec<_>>>()?;
                    self.explicit = Some(vals);
                }
                self.capture_locals();
                Ok(Flow::Return)
            }
            StmtKind::Block(b) => self.scoped(|m| m.stmts(b)),
        }
    }

    fn lookup(&self, name: &str) -> R<&Value> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name))
            .or_else(|| self.state.get(name))
            .ok_or_else(|| RuntimeError::Type(format!("unbound identifier `{name}`")))
    }

    fn slot_mut(&mut self, name: &str) -> R<&mut Value> {
        for s in self.scopes.iter_mut().rev() {
            if let Some(v) = s.get_mut(name) {
                return Ok(v);
            }
        }
        self.state.get_mut(name).ok_or_else(|| RuntimeError::Type(format!("unbound identifier `{name}`")))
    }

    fn eval_bool(&mut self, e: &Expr) -> R<bool> {
        self.eval(e)?.as_bool().ok_or_else(|| RuntimeError::Type("expected bool".into()))
    }

    fn eval_uint(&mut self, e: &Expr) -> R<U256> {
        self.eval(e)?.as_uint().ok_or_else(|| RuntimeError::Type("expected uint".into()))
    }

    fn eval(&mut self, e: &Expr) -> R<Value> {
        self.tick()?;
        match &e.kind {
            ExprKind::Number(n) => Ok(Value::Uint(*n)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Ident(n) => self.lookup(n).cloned(),
            ExprKind::Member { base, member } => {
                if e.is_msg_sender() {
                    return Ok(Value::Address(self.sender));
                }
                match (self.eval(base)?, member.name.as_str()) {
                    (Value::Array { items, .. }, "length") => Ok(Value::Uint(U256::from(items.len()))),
                    _ => Err(RuntimeError::Unsupported(format!("member `{}`", member.name))),
                }
            }
            ExprKind::Index { base, index } => {
                let key = self.eval(index)?;
                let container = self.eval(base)?;
                read_element(&container, &key)
            }
            ExprKind::Reveal { value, .. } => self.eval(value),
            ExprKind::Unary { op, operand } => match op {
                UnaryOp::Not => Ok(Value::Bool(!self.eval_bool(operand)?)),
                UnaryOp::Neg => Ok(Value::Uint(U256::zero().overflowing_sub(self.eval_uint(operand)?).0)),
            },
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs),
            ExprKind::Call { callee, args } => {
                if callee.as_ident() == Some("require") && args.len() == 1 {
                    if self.eval_bool(&args[0])? {
                        Ok(Value::Bool(true))
                    } else {
                        Err(RuntimeError::RequireFailed)
                    }
                } else {
                    Err(RuntimeError::Unsupported("external calls".into()))
                }
            }
            ExprKind::Assign { op, target, value } => {
                let place = self.place(target)?;
                let rhs = self.eval(value)?;
                let new = match op {
                    AssignOp::Assign => rhs,
                    AssignOp::AddAssign | AssignOp::SubAssign => {
                        let cur = self.read_place(&place)?.as_uint().ok_or_else(|| RuntimeError::Type("expected uint".into()))?;
                        let r = rhs.as_uint().ok_or_else(|| RuntimeError::Type("expected uint".into()))?;
                        Value::Uint(if *op == AssignOp::AddAssign { cur.overflowing_add(r).0 } else { cur.overflowing_sub(r).0 })
                    }
                };
                self.write_place(&place, new.clone())?;
                Ok(new)
            }
            ExprKind::Update { op, prefix, target } => {
                let place = self.place(target)?;
                let cur = self.read_place(&place)?.as_uint().ok_or_else(|| RuntimeError::Type("expected uint".into()))?;
                let new = match op {
                    UpdateOp::Increment => cur.overflowing_add(U256::one()).0,
                    UpdateOp::Decrement => cur.overflowing_sub(U256::one()).0,
                };
                self.write_place(&place, Value::Uint(new))?;
                Ok(Value::Uint(if *prefix { new } else { cur }))
            }
        }
    }

    fn binary(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr) -> R<Value> {
        match op {
            BinOp::And => return Ok(Value::Bool(self.eval_bool(lhs)? && self.eval_bool(rhs)?)),
            BinOp::Or => return Ok(Value::Bool(self.eval_bool(lhs)? || self.eval_bool(rhs)?)),
            BinOp::Eq => return Ok(Value::Bool(self.eval(lhs)? == self.eval(rhs)?)),
            BinOp::Ne => return Ok(Value::Bool(self.eval(lhs)? != self.eval(rhs)?)),
            _ => {}
        }
        let a = self.eval_uint(lhs)?;
        let b = self.eval_uint(rhs)?;
        Ok(match op {
            BinOp::Add => Value::Uint(a.overflowing_add(b).0),
            BinOp::Sub => Value::Uint(a.overflowing_sub(b).0),
            BinOp::Mul => Value::Uint(a.overflowing_mul(b).0),
            BinOp::Div => Value::Uint(a.checked_div(b).ok_or(RuntimeError::DivisionByZero)?),
            BinOp::Mod => Value::Uint(a.checked_rem(b).ok_or(RuntimeError::DivisionByZero)?),
            BinOp::Lt => Value::Bool(a < b),
            BinOp::Gt => Value::Bool(a > b),
            BinOp::Le => Value::Bool(a <= b),
            BinOp::Ge => Value::Bool(a >= b),
            BinOp::And | BinOp::Or | BinOp::Eq | BinOp::Ne => unreachable!("handled above"),
        })
    }

    fn place(&mut self, target: &Expr) -> R<Place> {
        match &target.kind {
            ExprKind::Ident(n) => Ok(Place::Var(n.clone())),
            ExprKind::Index { base, index } => {
                let name = base.as_ident().ok_or_else(|| RuntimeError::Unsupported("nested containers".into()))?;
                let key = self.eval(index)?;
                Ok(Place::Element(name.to_string(), key))
            }
            _ => Err(RuntimeError::Unsupported("assignment target".into())),
        }
    }

    fn read_place(&self, p: &Place) -> R<Value> {
        match p {
            Place::Var(n) => self.lookup(n).cloned(),
            Place::Element(n, key) => read_element(self.lookup(n)?, key),
        }
    }

    fn write_place(&mut self, p: &Place, v: Value) -> R<()> {
        match p {
            Place::Var(n) => {
                *self.slot_mut(n)? = v;
                Ok(())
            }
            Place::Element(n, key) => write_element(self.slot_mut(n)?, key, v),
        }
    }
}

fn array_index(key: &Value, len: usize) -> R<usize> {
    let i = key.as_uint().ok_or_else(|| RuntimeError::Type("array index must be uint".into()))?;
    if i >= U256::from(len) {
        return Err(RuntimeError::IndexOutOfBounds { index: i, len });
    }
    Ok(i.as_usize())
}

fn read_element(container: &Value, key: &Value) -> R<Value> {
    match container {
        Value::Array { items, .. } => Ok(items[array_index(key, items.len())?].clone()),
        Value::Map { value_ty, entries, .. } => {
            let k = key.as_key().ok_or_else(|| RuntimeError::Type("bad mapping key".into()))?;
            Ok(entries.get(&k).cloned().unwrap_or_else(|| value_ty.default_value()))
        }
        _ => Err(RuntimeError::Type("indexing a non-container".into())),
    }
}

fn write_element(container: &mut Value, key: &Value, v: Value) -> R<()> {
    match container {
        Value::Array { items, .. } => {
            let i = array_index(key, items.len())?;
            items[i] = v;
            Ok(())
        }
        Value::Map { entries, .. } => {
            let k = key.as_key().ok_or_else(|| RuntimeError::Type("bad mapping key".into()))?;
            // Default entries are dropped so equal maps compare equal.
            if v.is_default() {
                entries.remove(&k);
            } else {
                entries.insert(k, v);
            }
            Ok(())
        }
        _ => Err(RuntimeError::Type("indexing a non-container".into())),
    }
}

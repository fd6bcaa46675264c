//! Scoped declaration table carrying declared owners.

use std::collections::{BTreeMap, BTreeSet};

use super::{OwnerAtom, OwnerSet};
use crate::frontend::ast::{ContractDecl, FunctionDecl, OwnerAnnotation, OwnerKind, Param, TypeKind, TypeName, VarDecl};
use crate::frontend::{DiagCode, Diagnostic, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeclId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    State,
    Param,
    Return,
    Local,
}

/// How indexing into a container decides the owner of the element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexOwner {
    Fixed(OwnerSet),
    /// `mapping(K !k => V @k)`: the element belongs to whoever the key names.
    Keyed(String),
}

#[derive(Debug, Clone)]
pub struct VarInfo {
    pub id: DeclId,
    pub name: String,
    pub kind: VarKind,
    pub ty: TypeName,
    /// Owner of the bare identifier; for containers, of a generic element.
    pub owner: OwnerSet,
    pub index: Option<IndexOwner>,
    /// Party-class name bound by `address[!p]`.
    pub binds_class: Option<String>,
    pub span: Span,
}

impl VarInfo {
    pub fn is_address(&self) -> bool {
        matches!(self.ty.kind, TypeKind::Address)
    }
}

#[derive(Debug, Clone, Default)]
pub struct OwnerEnv {
    state: BTreeMap<String, VarInfo>,
    classes: BTreeSet<String>,
    fn_classes: BTreeSet<String>,
    signature: Vec<VarInfo>,
    scopes: Vec<BTreeMap<String, VarInfo>>,
    next_id: u32,
}

impl OwnerEnv {
    /// Declares the state variables of `contract`. Returned diagnostics concern
    /// owner annotations on state declarations.
    pub fn new(contract: &ContractDecl) -> (Self, Vec<Diagnostic>) {
        let mut env = OwnerEnv::default();
        let mut diags = Vec::new();
        for v in &contract.state_vars {
            let info = env.placeholder(&v.ty, &v.name.name, VarKind::State, v.span);
            if let Some(c) = &info.binds_class {
                env.classes.insert(c.clone());
            }
            env.state.entry(v.name.name.clone()).or_insert(info);
        }
        for v in &contract.state_vars {
            let resolved = env.resolve_decl(&v.ty, v.owner.as_ref(), &mut diags);
            if let Some(info) = env.state.get_mut(&v.name.name) {
                (info.owner, info.index) = resolved;
            }
        }
        (env, diags)
    }

    /// Declares the parameters and named returns of `f`, replacing any
    /// previous function scope.
    pub fn enter_function(&mut self, f: &FunctionDecl) -> Vec<Diagnostic> {
        self.signature.clear();
        self.fn_classes.clear();
        self.scopes.clear();
        let mut diags = Vec::new();
        let sig: Vec<(&Param, VarKind)> = f
            .params
            .iter()
            .map(|p| (p, VarKind::Param))
            .chain(f.returns.iter().map(|p| (p, VarKind::Return)))
            .collect();
        for (p, kind) in &sig {
            let name = p.name.as_ref().map(|n| n.name.as_str()).unwrap_or("");
            let info = self.placeholder(&p.ty, name, *kind, p.span);
            if let Some(c) = &info.binds_class {
                self.fn_classes.insert(c.clone());
            }
            self.signature.push(info);
        }
        for (i, (p, _)) in sig.iter().enumerate() {
            let resolved = self.resolve_decl(&p.ty, p.owner.as_ref(), &mut diags);
            (self.signature[i].owner, self.signature[i].index) = resolved;
        }
        diags
    }

    pub fn signature_vars(&self) -> impl Iterator<Item = &VarInfo> {
        self.signature.iter()
    }

    pub fn return_vars(&self) -> impl Iterator<Item = &VarInfo> {
        self.signature.iter().filter(|v| v.kind == VarKind::Return)
    }

    pub fn push_scope(&mut self) {
        self.scopes.push(BTreeMap::new());
    }

    pub fn pop_scope(&mut self) {
        self.scopes.pop();
    }

    /// Declares a local in the innermost scope. Its annotation is resolved
    /// against what is visible before the declaration.
    pub fn declare_local(&mut self, v: &VarDecl) -> (VarInfo, Vec<Diagnostic>) {
        let mut diags = Vec::new();
        let mut info = self.placeholder(&v.ty, &v.name.name, VarKind::Local, v.span);
        (info.owner, info.index) = self.resolve_decl(&v.ty, v.owner.as_ref(), &mut diags);
        if self.scopes.is_empty() {
            self.push_scope();
        }
        if let Some(scope) = self.scopes.last_mut() {
            scope.insert(v.name.name.clone(), info.clone());
        }
        (info, diags)
    }

    pub fn lookup(&self, name: &str) -> Option<&VarInfo> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name))
            .or_else(|| self.signature.iter().find(|v| v.name == name))
            .or_else(|| self.state.get(name))
    }

    fn is_class(&self, name: &str) -> bool {
        self.fn_classes.contains(name) || self.classes.contains(name)
    }

    fn placeholder(&mut self, ty: &TypeName, name: &str, kind: VarKind, span: Span) -> VarInfo {
        let id = DeclId(self.next_id);
        self.next_id += 1;
        let binds_class = match &ty.kind {
            TypeKind::Array { slot: Some(OwnerAnnotation { kind: OwnerKind::KeyBinding(p), .. }), .. } => Some(p.clone()),
            _ => None,
        };
        VarInfo {
            id,
            name: name.to_string(),
            kind,
            ty: ty.clone(),
            owner: OwnerSet::public(),
            index: None,
            binds_class,
            span,
        }
    }

    fn resolve_decl(
        &self,
        ty: &TypeName,
        owner: Option<&OwnerAnnotation>,
        diags: &mut Vec<Diagnostic>,
    ) -> (OwnerSet, Option<IndexOwner>) {
        match &ty.kind {
            TypeKind::Mapping { key_binding, value_owner, .. } => {
                let binding = key_binding.as_ref().map(|b| b.kind.name());
                let index = match value_owner {
                    None => IndexOwner::Fixed(OwnerSet::public()),
                    Some(ann) => match &ann.kind {
                        OwnerKind::Id(n) if Some(n.as_str()) == binding => IndexOwner::Keyed(n.clone()),
                        _ => IndexOwner::Fixed(self.annotation_set(ann, false, diags)),
                    },
                };
                let bare = match &index {
                    IndexOwner::Fixed(s) => s.clone(),
                    IndexOwner::Keyed(k) => OwnerSet::single(OwnerAtom::PartyClass(k.clone())),
                };
                (bare, Some(index))
            }
            TypeKind::Array { slot, .. } => {
                let elem = match slot {
                    None => OwnerSet::public(),
                    Some(OwnerAnnotation { kind: OwnerKind::KeyBinding(_), .. }) => OwnerSet::public(),
                    Some(ann) => self.annotation_set(ann, true, diags),
                };
                (elem.clone(), Some(IndexOwner::Fixed(elem)))
            }
            _ => {
                let set = owner.map_or_else(OwnerSet::public, |a| self.annotation_set(a, false, diags));
                (set, None)
            }
        }
    }

    fn annotation_set(&self, ann: &OwnerAnnotation, in_slot: bool, diags: &mut Vec<Diagnostic>) -> OwnerSet {
        match self.resolve_atom(ann, in_slot) {
            Ok(atom) => OwnerSet::single(atom),
            Err(d) => {
                diags.push(d);
                OwnerSet::public()
            }
        }
    }

    /// Resolves an owner name to an atom. `allow_class` permits naming a
    /// `!p` party class.
    pub fn resolve_atom(&self, ann: &OwnerAnnotation, allow_class: bool) -> Result<OwnerAtom, Diagnostic> {
        let name = match &ann.kind {
            OwnerKind::All => return Ok(OwnerAtom::All),
            OwnerKind::Me => return Ok(OwnerAtom::Me),
            OwnerKind::Tee => return Ok(OwnerAtom::Tee),
            OwnerKind::Id(n) | OwnerKind::KeyBinding(n) => n,
        };
        if self.is_class(name) && self.lookup(name).is_none() {
            return if allow_class {
                Ok(OwnerAtom::PartyClass(name.clone()))
            } else {
                Err(Diagnostic::error(
                    DiagCode::UnresolvedOwner,
                    ann.span,
                    format!("party class `{name}` can only own array elements"),
                ))
            };
        }
        match self.lookup(name) {
            Some(v) if v.is_address() => Ok(OwnerAtom::Party(name.clone())),
            Some(v) => Err(Diagnostic::error(
                DiagCode::UnresolvedOwner,
                ann.span,
                format!("owner `{name}` must be an address, but it is declared as `{}`", v.ty.render_plain()),
            )),
            None => Err(Diagnostic::error(
                DiagCode::UnresolvedOwner,
                ann.span,
                format!("owner `{name}` does not name an address variable or party binding in scope"),
            )),
        }
    }
}

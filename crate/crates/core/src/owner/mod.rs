//! Owner inference, function classification and privacy-flow checking.
//!
//! Every expression gets an [`OwnerSet`]: leaves take their declared owner,
//! inner nodes take the union of their operands. A function whose combined
//! owner set mentions `tee`, a party class, or two distinct non-public owners
//! is a multi-party transaction.

mod env;
mod flow;
pub(crate) mod infer;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::frontend::ast::{ContractDecl, ExprId, ExprKind, FunctionDecl};
use crate::frontend::Diagnostic;

pub use env::{DeclId, IndexOwner, OwnerEnv, VarInfo, VarKind};
pub use flow::check_consistency;
pub use infer::{infer_function, infer_owner, location_owner};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum OwnerAtom {
    All,
    Me,
    Tee,
    Party(String),
    PartyClass(String),
}

impl fmt::Display for OwnerAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OwnerAtom::All => f.write_str("all"),
            OwnerAtom::Me => f.write_str("me"),
            OwnerAtom::Tee => f.write_str("tee"),
            OwnerAtom::Party(n) => write!(f, "id:{n}"),
            OwnerAtom::PartyClass(n) => write!(f, "class:{n}"),
        }
    }
}

/// Finite set of owner atoms with set semantics.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct OwnerSet(BTreeSet<OwnerAtom>);

impl OwnerSet {
    pub fn empty() -> Self {
        Self(BTreeSet::new())
    }

    pub fn public() -> Self {
        Self::single(OwnerAtom::All)
    }

    pub fn single(atom: OwnerAtom) -> Self {
        Self(BTreeSet::from([atom]))
    }

    pub fn contains(&self, atom: &OwnerAtom) -> bool {
        self.0.contains(atom)
    }

    pub fn insert(&mut self, atom: OwnerAtom) {
        self.0.insert(atom);
    }

    pub fn extend(&mut self, other: &OwnerSet) {
        self.0.extend(other.0.iter().cloned());
    }

    pub fn union(&self, other: &OwnerSet) -> OwnerSet {
        let mut s = self.clone();
        s.extend(other);
        s
    }

    pub fn is_superset(&self, other: &OwnerSet) -> bool {
        self.0.is_superset(&other.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &OwnerAtom> {
        self.0.iter()
    }

    /// Atoms other than `all`.
    pub fn private_atoms(&self) -> impl Iterator<Item = &OwnerAtom> {
        self.0.iter().filter(|a| **a != OwnerAtom::All)
    }

    pub fn without_public(&self) -> OwnerSet {
        Self(self.private_atoms().cloned().collect())
    }

    pub fn is_public(&self) -> bool {
        self.private_atoms().next().is_none()
    }
}

impl FromIterator<OwnerAtom> for OwnerSet {
    fn from_iter<I: IntoIterator<Item = OwnerAtom>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for OwnerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionKind {
    Public,
    Private,
    Mpt,
}

impl FunctionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FunctionKind::Public => "public",
            FunctionKind::Private => "private",
            FunctionKind::Mpt => "mpt",
        }
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type OwnerMap = BTreeMap<ExprId, OwnerSet>;

/// Kind of a function from the union of all its owners.
pub fn classify_owners(owners: &OwnerSet) -> FunctionKind {
    let multi = owners
        .iter()
        .any(|a| matches!(a, OwnerAtom::Tee | OwnerAtom::PartyClass(_)))
        || owners.private_atoms().count() >= 2;
    if multi {
        FunctionKind::Mpt
    } else if owners.is_public() {
        FunctionKind::Public
    } else {
        FunctionKind::Private
    }
}

/// Union of the owners of every expression in `f`'s body plus its declared
/// parameter and return owners. Indexed containers are skipped.
pub fn function_owner_union(f: &FunctionDecl, contract: &ContractDecl, owner_of: &OwnerMap) -> OwnerSet {
    let (mut env, _) = OwnerEnv::new(contract);
    env.enter_function(f);
    let mut all = OwnerSet::empty();
    for info in env.signature_vars() {
        all.extend(&info.owner);
    }
    if let Some(body) = &f.body {
        // A container being indexed stands for its element, whose owner is
        // recorded on the index expression itself.
        let mut containers = BTreeSet::new();
        body.walk_exprs(&mut |e| {
            if let ExprKind::Index { base, .. } = &e.kind {
                containers.insert(base.id);
            }
        });
        body.walk_exprs(&mut |e| {
            if containers.contains(&e.id) {
                return;
            }
            if let Some(o) = owner_of.get(&e.id) {
                all.extend(o);
            }
        });
    }
    all
}

pub fn classify_function(f: &FunctionDecl, contract: &ContractDecl, owner_of: &OwnerMap) -> FunctionKind {
    classify_owners(&function_owner_union(f, contract, owner_of))
}

/// A contract after owner analysis. Downstream stages accept it only when
/// `diagnostics` is empty.
#[derive(Debug, Clone)]
pub struct CheckedContract {
    pub ast: ContractDecl,
    pub owner_of: OwnerMap,
    pub kind_of: BTreeMap<String, FunctionKind>,
    /// Combined owner set per function, as used for classification.
    pub function_owners: BTreeMap<String, OwnerSet>,
    pub diagnostics: Vec<Diagnostic>,
    /// Wall-clock analysis time per function. Not part of any canonical output.
    pub check_time: BTreeMap<String, Duration>,
}

impl CheckedContract {
    pub fn is_clean(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn kind_counts(&self) -> (usize, usize, usize) {
        let count = |k| self.kind_of.values().filter(|v| **v == k).count();
        (count(FunctionKind::Public), count(FunctionKind::Private), count(FunctionKind::Mpt))
    }
}

/// Runs inference, classification and consistency checking over every function.
pub fn check_contract(contract: &ContractDecl) -> CheckedContract {
    let (base_env, mut diagnostics) = OwnerEnv::new(contract);
    let mut owner_of = OwnerMap::new();
    let mut kind_of = BTreeMap::new();
    let mut function_owners = BTreeMap::new();
    let mut check_time = BTreeMap::new();

    for f in &contract.functions {
        let started = Instant::now();
        let mut env = base_env.clone();
        let mut fn_diags = Vec::new();
        infer_function(&mut env, f, &mut owner_of, &mut fn_diags);
        let owners = function_owner_union(f, contract, &owner_of);
        kind_of.insert(f.name.name.clone(), classify_owners(&owners));
        function_owners.insert(f.name.name.clone(), owners);
        fn_diags.extend(check_consistency(f, contract, &owner_of));
        diagnostics.extend(fn_diags);
        check_time.insert(f.name.name.clone(), started.elapsed());
    }

    CheckedContract { ast: contract.clone(), owner_of, kind_of, function_owners, diagnostics, check_time }
}

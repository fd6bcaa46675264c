//! Runtime values shared by the interpreter, commitments and party messages.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use primitive_types::U256;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::frontend::ast::{TypeKind, TypeName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Address(pub [u8; 20]);

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl FromStr for Address {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = hex::decode(s.strip_prefix("0x").unwrap_or(s)).map_err(|e| e.to_string())?;
        let bytes: [u8; 20] = raw.try_into().map_err(|_| format!("address `{s}` is not 20 bytes"))?;
        Ok(Address(bytes))
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Types of runtime values. Strings, structs and interfaces never reach the runtime.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Uint,
    Bool,
    Address,
    Map(Box<ValueType>, Box<ValueType>),
    Array(Box<ValueType>),
}

impl ValueType {
    pub fn from_type_name(t: &TypeName) -> Option<ValueType> {
        Some(match &t.kind {
            TypeKind::Uint => ValueType::Uint,
            TypeKind::Bool => ValueType::Bool,
            TypeKind::Address => ValueType::Address,
            TypeKind::Mapping { key, value, .. } => {
                ValueType::Map(Box::new(Self::from_type_name(key)?), Box::new(Self::from_type_name(value)?))
            }
            TypeKind::Array { elem, .. } => ValueType::Array(Box::new(Self::from_type_name(elem)?)),
            TypeKind::String | TypeKind::Named(_) => return None,
        })
    }

    pub fn default_value(&self) -> Value {
        match self {
            ValueType::Uint => Value::Uint(U256::zero()),
            ValueType::Bool => Value::Bool(false),
            ValueType::Address => Value::Address(Address::default()),
            ValueType::Map(k, v) => Value::Map { key_ty: (**k).clone(), value_ty: (**v).clone(), entries: BTreeMap::new() },
            ValueType::Array(e) => Value::Array { elem_ty: (**e).clone(), items: Vec::new() },
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueType::Uint => f.write_str("uint"),
            ValueType::Bool => f.write_str("bool"),
            ValueType::Address => f.write_str("address"),
            ValueType::Map(k, v) => write!(f, "mapping({k}=>{v})"),
            ValueType::Array(e) => write!(f, "{e}[]"),
        }
    }
}

/// Default value of a declared type; fixed-size arrays get their full length.
pub fn default_for_type(t: &TypeName) -> Option<Value> {
    match &t.kind {
        TypeKind::Array { elem, len: crate::frontend::ast::ArrayLen::Fixed(n), .. } => {
            let e = default_for_type(elem)?;
            Some(Value::Array { elem_ty: e.ty(), items: vec![e; *n as usize] })
        }
        _ => Some(ValueType::from_type_name(t)?.default_value()),
    }
}

/// Mapping key. Ordering follows the canonical byte encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Key {
    Uint(#[serde(with = "u256_dec")] U256),
    Address(Address),
}

impl Key {
    pub fn to_value(self) -> Value {
        match self {
            Key::Uint(u) => Value::Uint(u),
            Key::Address(a) => Value::Address(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Uint(#[serde(with = "u256_dec")] U256),
    Bool(bool),
    Address(Address),
    Map {
        key_ty: ValueType,
        value_ty: ValueType,
        #[serde(with = "map_entries")]
        entries: BTreeMap<Key, Value>,
    },
    Array {
        elem_ty: ValueType,
        items: Vec<Value>,
    },
}

impl Value {
    pub fn uint(n: u64) -> Value {
        Value::Uint(U256::from(n))
    }

    pub fn ty(&self) -> ValueType {
        match self {
            Value::Uint(_) => ValueType::Uint,
            Value::Bool(_) => ValueType::Bool,
            Value::Address(_) => ValueType::Address,
            Value::Map { key_ty, value_ty, .. } => ValueType::Map(Box::new(key_ty.clone()), Box::new(value_ty.clone())),
            Value::Array { elem_ty, .. } => ValueType::Array(Box::new(elem_ty.clone())),
        }
    }

    /// Whether this value has type `ty`, including every element.
    pub fn conforms_to(&self, ty: &ValueType) -> bool {
        match (self, ty) {
            (Value::Uint(_), ValueType::Uint) | (Value::Bool(_), ValueType::Bool) | (Value::Address(_), ValueType::Address) => true,
            (Value::Array { elem_ty, items }, ValueType::Array(e)) => {
                elem_ty == &**e && items.iter().all(|i| i.conforms_to(e))
            }
            (Value::Map { key_ty, value_ty, entries }, ValueType::Map(k, v)) => {
                key_ty == &**k
                    && value_ty == &**v
                    && entries.iter().all(|(key, val)| key.to_value().conforms_to(k) && val.conforms_to(v))
            }
            _ => false,
        }
    }

    pub fn is_default(&self) -> bool {
        match self {
            Value::Uint(u) => u.is_zero(),
            Value::Bool(b) => !b,
            Value::Address(a) => *a == Address::default(),
            Value::Map { entries, .. } => entries.values().all(Value::is_default),
            Value::Array { items, .. } => items.is_empty(),
        }
    }

    pub fn as_uint(&self) -> Option<U256> {
        match self {
            Value::Uint(u) => Some(*u),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_address(&self) -> Option<Address> {
        match self {
            Value::Address(a) => Some(*a),
            _ => None,
        }
    }

    pub fn as_key(&self) -> Option<Key> {
        match self {
            Value::Uint(u) => Some(Key::Uint(*u)),
            Value::Address(a) => Some(Key::Address(*a)),
            _ => None,
        }
    }

    /// Canonical byte encoding: uint as 32-byte big-endian, address as 20
    /// bytes, bool as one byte; containers are a u64 big-endian count followed
    /// by their entries. Maps list non-default entries in key order.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Value::Uint(u) => out.extend_from_slice(&u256_be(*u)),
            Value::Bool(b) => out.push(u8::from(*b)),
            Value::Address(a) => out.extend_from_slice(&a.0),
            Value::Map { entries, .. } => {
                let live: Vec<_> = entries.iter().filter(|(_, v)| !v.is_default()).collect();
                out.extend_from_slice(&(live.len() as u64).to_be_bytes());
                for (k, v) in live {
                    k.to_value().encode_into(out);
                    v.encode_into(out);
                }
            }
            Value::Array { items, .. } => {
                out.extend_from_slice(&(items.len() as u64).to_be_bytes());
                for i in items {
                    i.encode_into(out);
                }
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Uint(u) => write!(f, "{u}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Address(a) => write!(f, "{a}"),
            Value::Map { entries, .. } => {
                f.write_str("{")?;
                for (i, (k, v)) in entries.iter().filter(|(_, v)| !v.is_default()).enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}: {v}", k.to_value())?;
                }
                f.write_str("}")
            }
            Value::Array { items, .. } => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

pub fn u256_be(u: U256) -> [u8; 32] {
    let mut b = [0u8; 32];
    u.to_big_endian(&mut b);
    b
}

mod u256_dec {
    use primitive_types::U256;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &U256, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<U256, D::Error> {
        let s = String::deserialize(d)?;
        U256::from_dec_str(&s).map_err(|e| serde::de::Error::custom(format!("{e:?}")))
    }
}

mod map_entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{Key, Value};

    pub fn serialize<S: Serializer>(m: &BTreeMap<Key, Value>, s: S) -> Result<S::Ok, S::Error> {
        m.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Key, Value>, D::Error> {
        Ok(Vec::<(Key, Value)>::deserialize(d)?.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodings() {
        assert_eq!(Value::uint(5).encode()[31], 5);
        assert_eq!(Value::uint(5).encode().len(), 32);
        assert_eq!(Value::Bool(true).encode(), vec![1]);
        assert_eq!(Value::Address(Address([7; 20])).encode(), vec![7; 20]);
        let empty = ValueType::Map(Box::new(ValueType::Address), Box::new(ValueType::Uint)).default_value();
        assert_eq!(empty.encode(), vec![0; 8]);
    }

    #[test]
    fn map_ignores_default_entries() {
        let mut m = ValueType::Map(Box::new(ValueType::Uint), Box::new(ValueType::Uint)).default_value();
        let with_zero = {
            if let Value::Map { entries, .. } = &mut m {
                entries.insert(Key::Uint(U256::one()), Value::uint(0));
            }
            m.clone()
        };
        assert_eq!(with_zero.encode(), vec![0; 8]);
    }

    #[test]
    fn serde_round_trip() {
        let mut entries = BTreeMap::new();
        entries.insert(Key::Address(Address([1; 20])), Value::uint(100));
        let v = Value::Map { key_ty: ValueType::Address, value_ty: ValueType::Uint, entries };
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<Value>(&text).unwrap(), v);
        let a = Value::Array { elem_ty: ValueType::Uint, items: vec![Value::Uint(U256::MAX)] };
        assert_eq!(serde_json::from_str::<Value>(&serde_json::to_string(&a).unwrap()).unwrap(), a);
    }
}

use std::fmt;
use std::sync::Arc;

use ordered_float::OrderedFloat;

/// A scalar drawn from the database domain.
///
/// Values of different kinds never meet in a well-formed database: every
/// column carries a single kind, and binding a query rejects variables that
/// span columns of different kinds. The derived ordering across kinds exists
/// only so that `Value` is totally ordered.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Float(OrderedFloat<f64>),
    Text(Arc<str>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Int,
    Float,
    Text,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Int => "int",
            ValueKind::Float => "float",
            ValueKind::Text => "text",
        })
    }
}

impl Value {
    pub fn float(v: f64) -> Self {
        Value::Float(OrderedFloat(v))
    }

    pub fn text(s: &str) -> Self {
        Value::Text(Arc::from(s))
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Int(_) => ValueKind::Int,
            Value::Float(_) => ValueKind::Float,
            Value::Text(_) => ValueKind::Text,
        }
    }

    /// Numeric view used by identity weight functions.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Float(v) => Some(v.0),
            Value::Text(_) => None,
        }
    }

    /// Parses a raw field as the given kind.
    pub fn parse_as(raw: &str, kind: ValueKind) -> Option<Value> {
        match kind {
            ValueKind::Int => raw.trim().parse().ok().map(Value::Int),
            ValueKind::Float => raw.trim().parse().ok().map(Value::float),
            ValueKind::Text => Some(Value::text(raw)),
        }
    }

    /// Narrowest kind that can represent every field in `raw`.
    pub fn infer_kind<'a>(raw: impl IntoIterator<Item = &'a str> + Clone) -> ValueKind {
        if raw.clone().into_iter().all(|s| s.trim().parse::<i64>().is_ok()) {
            ValueKind::Int
        } else if raw.into_iter().all(|s| s.trim().parse::<f64>().is_ok()) {
            ValueKind::Float
        } else {
            ValueKind::Text
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{}", v.0),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::float(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::text(v)
    }
}

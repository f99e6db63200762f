use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Column types understood by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataType {
    Int64,
    Float64,
    Text,
    Vector(usize),
}

impl DataType {
    pub fn is_vector(&self) -> bool {
        matches!(self, DataType::Vector(_))
    }

    pub fn parse(s: &str) -> Option<DataType> {
        let s = s.trim();
        match s {
            "int64" => Some(DataType::Int64),
            "float64" => Some(DataType::Float64),
            "text" => Some(DataType::Text),
            _ => {
                let dim = s.strip_prefix("vector(")?.strip_suffix(')')?;
                dim.trim().parse().ok().map(DataType::Vector)
            }
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataType::Int64 => f.write_str("int64"),
            DataType::Float64 => f.write_str("float64"),
            DataType::Text => f.write_str("text"),
            DataType::Vector(dim) => write!(f, "vector({dim})"),
        }
    }
}

/// A relational (non-vector) value.
///
/// Comparisons between differing variants are type errors; `Null` compares
/// as "unknown" and makes every predicate false.
#[derive(Debug, Clone)]
pub enum ScalarValue {
    Int(i64),
    Float(f64),
    Text(Arc<str>),
    Null,
}

impl ScalarValue {
    pub fn text(s: impl AsRef<str>) -> Self {
        ScalarValue::Text(Arc::from(s.as_ref()))
    }

    pub fn data_type(&self) -> Option<DataType> {
        match self {
            ScalarValue::Int(_) => Some(DataType::Int64),
            ScalarValue::Float(_) => Some(DataType::Float64),
            ScalarValue::Text(_) => Some(DataType::Text),
            ScalarValue::Null => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, ScalarValue::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ScalarValue::Float(v) => Some(*v),
            ScalarValue::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ScalarValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// SQL comparison. `Ok(None)` when either side is null.
    pub fn compare(&self, other: &ScalarValue) -> Result<Option<Ordering>> {
        match (self, other) {
            (ScalarValue::Null, _) | (_, ScalarValue::Null) => Ok(None),
            (ScalarValue::Int(a), ScalarValue::Int(b)) => Ok(Some(a.cmp(b))),
            (ScalarValue::Float(a), ScalarValue::Float(b)) => Ok(a.partial_cmp(b)),
            (ScalarValue::Text(a), ScalarValue::Text(b)) => Ok(Some(a.cmp(b))),
            (a, b) => Err(Error::Type(format!("cannot compare {a:?} with {b:?}"))),
        }
    }

    /// Renders the value as a SQL literal.
    pub fn to_sql(&self) -> String {
        match self {
            ScalarValue::Int(v) => v.to_string(),
            ScalarValue::Float(v) => format!("{v:?}"),
            ScalarValue::Text(s) => format!("'{}'", s.replace('\'', "''")),
            ScalarValue::Null => "NULL".to_string(),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            ScalarValue::Null => 0,
            ScalarValue::Int(_) => 1,
            ScalarValue::Float(_) => 2,
            ScalarValue::Text(_) => 3,
        }
    }
}

impl fmt::Display for ScalarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarValue::Int(v) => write!(f, "{v}"),
            ScalarValue::Float(v) => write!(f, "{v}"),
            ScalarValue::Text(s) => f.write_str(s),
            ScalarValue::Null => Ok(()),
        }
    }
}

// Total order and bitwise float equality so values can serve as hash and
// sort keys (partition keys, categories, result normalization).
impl PartialEq for ScalarValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ScalarValue {}

impl PartialOrd for ScalarValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScalarValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ScalarValue::Int(a), ScalarValue::Int(b)) => a.cmp(b),
            (ScalarValue::Float(a), ScalarValue::Float(b)) => a.total_cmp(b),
            (ScalarValue::Text(a), ScalarValue::Text(b)) => a.cmp(b),
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

impl Hash for ScalarValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            ScalarValue::Int(v) => v.hash(state),
            ScalarValue::Float(v) => v.to_bits().hash(state),
            ScalarValue::Text(s) => s.hash(state),
            ScalarValue::Null => {}
        }
    }
}

impl From<i64> for ScalarValue {
    fn from(v: i64) -> Self {
        ScalarValue::Int(v)
    }
}

impl From<f64> for ScalarValue {
    fn from(v: f64) -> Self {
        ScalarValue::Float(v)
    }
}

impl From<&str> for ScalarValue {
    fn from(v: &str) -> Self {
        ScalarValue::text(v)
    }
}

/// One cell of a row: either a scalar or an embedding.
#[derive(Debug, Clone, PartialEq)]
pub enum Datum {
    Scalar(ScalarValue),
    Vector(Vec<f32>),
}

impl From<ScalarValue> for Datum {
    fn from(v: ScalarValue) -> Self {
        Datum::Scalar(v)
    }
}

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Datum::Scalar(v) => v.fmt(f),
            Datum::Vector(v) => f.write_str(&format_vector(v)),
        }
    }
}

/// `[f;f;...]` vector literal used by the table file format.
pub fn format_vector(v: &[f32]) -> String {
    let mut out = String::with_capacity(v.len() * 10 + 2);
    out.push('[');
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        out.push_str(&x.to_string());
    }
    out.push(']');
    out
}

pub fn parse_vector(s: &str) -> Option<Vec<f32>> {
    let body = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    if body.trim().is_empty() {
        return Some(Vec::new());
    }
    body.split(';').map(|x| x.trim().parse::<f32>().ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_type_comparison_is_an_error() {
        let err = ScalarValue::Int(1).compare(&ScalarValue::Float(1.0));
        assert!(matches!(err, Err(Error::Type(_))));
        assert!(ScalarValue::text("a")
            .compare(&ScalarValue::Int(3))
            .is_err());
    }

    #[test]
    fn null_compares_unknown() {
        assert_eq!(ScalarValue::Null.compare(&ScalarValue::Int(1)).unwrap(), None);
    }

    #[test]
    fn vector_literal_round_trip() {
        let v = vec![0.1f32, -2.5, 3.0e-7];
        assert_eq!(parse_vector(&format_vector(&v)).unwrap(), v);
        assert_eq!(parse_vector("[]").unwrap(), Vec::<f32>::new());
        assert!(parse_vector("[1;x]").is_none());
    }

    #[test]
    fn data_type_parse() {
        assert_eq!(DataType::parse("vector(16)"), Some(DataType::Vector(16)));
        assert_eq!(DataType::parse("int64"), Some(DataType::Int64));
        assert_eq!(DataType::parse("int4"), None);
    }
}

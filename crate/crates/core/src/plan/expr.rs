use std::fmt;
use std::sync::Arc;

use crate::data::{Metric, ScalarValue};

/// Possibly qualified column reference, e.g. `users.id` or `sim`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnRef {
    pub qualifier: Option<String>,
    pub name: String,
}

impl ColumnRef {
    pub fn new(qualifier: Option<&str>, name: &str) -> Self {
        Self {
            qualifier: qualifier.map(str::to_string),
            name: name.to_string(),
        }
    }

    pub fn bare(name: &str) -> Self {
        Self::new(None, name)
    }

    pub fn qualified(qualifier: &str, name: &str) -> Self {
        Self::new(Some(qualifier), name)
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{q}.{}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

/// Bound value of a `${name}` placeholder.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Scalar(ScalarValue),
    Vector(Arc<Vec<f32>>),
}

impl ParamValue {
    pub fn vector(v: Vec<f32>) -> Self {
        ParamValue::Vector(Arc::new(v))
    }
}

impl From<ScalarValue> for ParamValue {
    fn from(v: ScalarValue) -> Self {
        ParamValue::Scalar(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
}

impl CmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::NotEq => "<>",
            CmpOp::Lt => "<",
            CmpOp::LtEq => "<=",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds(&self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::NotEq => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::LtEq => ord != Greater,
            CmpOp::Gt => ord == Greater,
        }
    }
}

/// `left <*> right`: distance between two vector operands.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceExpr {
    pub left: Box<Expr>,
    pub right: Box<Expr>,
    pub metric: Metric,
}

impl DistanceExpr {
    pub fn new(left: Expr, right: Expr, metric: Metric) -> Self {
        Self {
            left: Box::new(left),
            right: Box::new(right),
            metric,
        }
    }

    /// Same operands regardless of written order.
    pub fn same_operands(&self, other: &DistanceExpr) -> bool {
        self.metric == other.metric
            && ((self.left == other.left && self.right == other.right)
                || (self.left == other.right && self.right == other.left))
    }

    pub fn operands(&self) -> [&Expr; 2] {
        [&self.left, &self.right]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column(ColumnRef),
    Literal(ScalarValue),
    Param { name: String, value: ParamValue },
    Distance(DistanceExpr),
    Compare { op: CmpOp, left: Box<Expr>, right: Box<Expr> },
    And(Vec<Expr>),
}

impl Expr {
    pub fn column(name: &str) -> Expr {
        Expr::Column(ColumnRef::bare(name))
    }

    pub fn qualified(qualifier: &str, name: &str) -> Expr {
        Expr::Column(ColumnRef::qualified(qualifier, name))
    }

    pub fn compare(op: CmpOp, left: Expr, right: Expr) -> Expr {
        Expr::Compare {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Conjunction that flattens nested `And`s and unwraps single terms.
    pub fn and(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(terms.len());
        for t in terms {
            match t {
                Expr::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::And(flat)
        }
    }

    pub fn conjuncts(&self) -> Vec<&Expr> {
        match self {
            Expr::And(terms) => terms.iter().collect(),
            other => vec![other],
        }
    }

    pub fn into_conjuncts(self) -> Vec<Expr> {
        match self {
            Expr::And(terms) => terms,
            other => vec![other],
        }
    }

    pub fn as_column(&self) -> Option<&ColumnRef> {
        match self {
            Expr::Column(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_distance(&self) -> Option<&DistanceExpr> {
        match self {
            Expr::Distance(d) => Some(d),
            _ => None,
        }
    }

    /// For `distance <= bound` returns the distance and the bound.
    pub fn as_distance_bound(&self) -> Option<(&DistanceExpr, &Expr)> {
        match self {
            Expr::Compare {
                op: CmpOp::LtEq,
                left,
                right,
            } => left.as_distance().map(|d| (d, right.as_ref())),
            _ => None,
        }
    }

    /// Visits every column reference.
    pub fn columns(&self) -> Vec<&ColumnRef> {
        let mut out = Vec::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns<'a>(&'a self, out: &mut Vec<&'a ColumnRef>) {
        match self {
            Expr::Column(c) => out.push(c),
            Expr::Literal(_) | Expr::Param { .. } => {}
            Expr::Distance(d) => {
                d.left.collect_columns(out);
                d.right.collect_columns(out);
            }
            Expr::Compare { left, right, .. } => {
                left.collect_columns(out);
                right.collect_columns(out);
            }
            Expr::And(terms) => terms.iter().for_each(|t| t.collect_columns(out)),
        }
    }

    pub fn visit_distances_mut(&mut self, f: &mut impl FnMut(&mut DistanceExpr)) {
        match self {
            Expr::Distance(d) => {
                d.left.visit_distances_mut(f);
                d.right.visit_distances_mut(f);
                f(d);
            }
            Expr::Compare { left, right, .. } => {
                left.visit_distances_mut(f);
                right.visit_distances_mut(f);
            }
            Expr::And(terms) => terms.iter_mut().for_each(|t| t.visit_distances_mut(f)),
            Expr::Column(_) | Expr::Literal(_) | Expr::Param { .. } => {}
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(c) => c.fmt(f),
            Expr::Literal(v) => f.write_str(&v.to_sql()),
            Expr::Param { name, .. } => write!(f, "${{{name}}}"),
            Expr::Distance(d) => write!(f, "{} <*> {}", d.left, d.right),
            Expr::Compare { op, left, right } => write!(f, "{left} {} {right}", op.symbol()),
            Expr::And(terms) => {
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" AND ")?;
                    }
                    t.fmt(f)?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn and_flattens() {
        let a = Expr::column("a");
        let e = Expr::and(vec![Expr::and(vec![a.clone(), a.clone()]), a.clone()]);
        assert_eq!(e.conjuncts().len(), 3);
        assert_eq!(Expr::and(vec![a.clone()]), a);
    }

    #[test]
    fn display() {
        let d = Expr::Distance(DistanceExpr::new(
            Expr::column("embedding"),
            Expr::Param {
                name: "q".into(),
                value: ParamValue::vector(vec![1.0]),
            },
            Metric::L2,
        ));
        let e = Expr::and(vec![
            Expr::compare(CmpOp::LtEq, d, Expr::Literal(ScalarValue::Float(0.5))),
            Expr::compare(CmpOp::NotEq, Expr::qualified("r", "cuisine"), Expr::Literal("x".into())),
        ]);
        assert_eq!(e.to_string(), "embedding <*> ${q} <= 0.5 AND r.cuisine <> 'x'");
    }
}

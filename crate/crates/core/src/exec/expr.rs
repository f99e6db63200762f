use std::sync::Arc;

use crate::data::{Metric, ScalarValue, Table};
use crate::error::{Error, Result};
use crate::plan::{CmpOp, Expr, ParamValue};

use super::tuple::{Layout, ScoredTuple, Slot};

/// Expression compiled against a [`Layout`].
#[derive(Debug, Clone)]
pub enum PhysExpr {
    Base { rel: usize, col: usize, table: Arc<Table> },
    Extra(usize),
    Const(ScalarValue),
    Vector(Arc<Vec<f32>>),
    Distance { left: Box<PhysExpr>, right: Box<PhysExpr>, metric: Metric },
    Compare { op: CmpOp, left: Box<PhysExpr>, right: Box<PhysExpr> },
    And(Vec<PhysExpr>),
}

impl PhysExpr {
    pub fn compile(expr: &Expr, layout: &Layout) -> Result<PhysExpr> {
        Ok(match expr {
            Expr::Column(c) => {
                let (_, slot) = layout.resolve(c)?;
                PhysExpr::slot(slot, layout)
            }
            Expr::Literal(v) => PhysExpr::Const(v.clone()),
            Expr::Param { value, .. } => match value {
                ParamValue::Scalar(v) => PhysExpr::Const(v.clone()),
                ParamValue::Vector(v) => PhysExpr::Vector(v.clone()),
            },
            Expr::Distance(d) => PhysExpr::Distance {
                left: Box::new(PhysExpr::compile(&d.left, layout)?),
                right: Box::new(PhysExpr::compile(&d.right, layout)?),
                metric: d.metric,
            },
            Expr::Compare { op, left, right } => PhysExpr::Compare {
                op: *op,
                left: Box::new(PhysExpr::compile(left, layout)?),
                right: Box::new(PhysExpr::compile(right, layout)?),
            },
            Expr::And(terms) => PhysExpr::And(
                terms
                    .iter()
                    .map(|t| PhysExpr::compile(t, layout))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    pub fn slot(slot: Slot, layout: &Layout) -> PhysExpr {
        match slot {
            Slot::Base { rel, col } => PhysExpr::Base {
                rel,
                col,
                table: layout.table(rel).clone(),
            },
            Slot::Extra(i) => PhysExpr::Extra(i),
        }
    }

    pub fn scalar(&self, t: &ScoredTuple) -> Result<ScalarValue> {
        match self {
            PhysExpr::Base { rel, col, table } => Ok(table.value(*col, t.rows[*rel]).clone()),
            PhysExpr::Extra(i) => Ok(t.extras[*i].clone()),
            PhysExpr::Const(v) => Ok(v.clone()),
            PhysExpr::Distance { left, right, metric } => {
                let a = left.vector(t)?;
                let b = right.vector(t)?;
                if a.len() != b.len() {
                    return Err(Error::Dimension {
                        expected: a.len(),
                        actual: b.len(),
                    });
                }
                Ok(ScalarValue::Float(metric.eval(a, b)))
            }
            PhysExpr::Vector(_) => Err(Error::exec("expression", "vector used as a scalar")),
            PhysExpr::Compare { .. } | PhysExpr::And(_) => {
                Err(Error::exec("expression", "predicate used as a value"))
            }
        }
    }

    pub fn float(&self, t: &ScoredTuple) -> Result<f64> {
        match self.scalar(t)? {
            ScalarValue::Float(v) => Ok(v),
            other => Err(Error::exec("expression", format!("expected float64, got {other:?}"))),
        }
    }

    pub fn vector<'a>(&'a self, t: &ScoredTuple) -> Result<&'a [f32]> {
        match self {
            PhysExpr::Base { rel, col, table } => Ok(table.vector_at(*col, t.rows[*rel])),
            PhysExpr::Vector(v) => Ok(v.as_slice()),
            _ => Err(Error::exec("expression", "expected a vector operand")),
        }
    }

    pub fn test(&self, t: &ScoredTuple) -> Result<bool> {
        match self {
            PhysExpr::Compare { op, left, right } => {
                let a = left.scalar(t)?;
                let b = right.scalar(t)?;
                Ok(a.compare(&b)?.is_some_and(|o| op.holds(o)))
            }
            PhysExpr::And(terms) => {
                for term in terms {
                    if !term.test(t)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            _ => Err(Error::exec("expression", "value used as a predicate")),
        }
    }
}

use crate::catalog::Catalog;
use crate::data::{DataType, Metric, ScalarValue};
use crate::error::{Error, Result};

use super::expr::{ColumnRef, Expr, ParamValue};
use super::op::{JoinKind, LogicalOp};

/// Where a field's values come from, when it is a stored column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnOrigin {
    pub table: String,
    pub column: usize,
    pub is_primary_key: bool,
}

/// One column of an operator's output.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub qualifier: Option<String>,
    pub name: String,
    pub ty: DataType,
    pub origin: Option<ColumnOrigin>,
    /// Produced by a window's rank computation.
    pub is_rank: bool,
}

impl Field {
    fn matches(&self, col: &ColumnRef) -> bool {
        self.name == col.name
            && match &col.qualifier {
                Some(q) => self.qualifier.as_deref() == Some(q.as_str()),
                None => true,
            }
    }
}

/// Resolves `col` against `local` first, then `outer`.
pub fn resolve<'a>(local: &'a [Field], outer: &'a [Field], col: &ColumnRef) -> Result<&'a Field> {
    for scope in [local, outer] {
        let mut hits = scope.iter().filter(|f| f.matches(col));
        if let Some(first) = hits.next() {
            if hits.next().is_some() {
                return Err(Error::plan(format!("ambiguous column `{col}`")));
            }
            return Ok(first);
        }
    }
    Err(Error::plan(format!("unknown column `{col}`")))
}

/// Static type of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprType {
    Scalar(Option<DataType>),
    Vector(usize),
    Bool,
}

pub fn expr_type(expr: &Expr, local: &[Field], outer: &[Field]) -> Result<ExprType> {
    Ok(match expr {
        Expr::Column(c) => match resolve(local, outer, c)?.ty {
            DataType::Vector(dim) => ExprType::Vector(dim),
            ty => ExprType::Scalar(Some(ty)),
        },
        Expr::Literal(v) => ExprType::Scalar(v.data_type()),
        Expr::Param { value, .. } => match value {
            ParamValue::Scalar(v) => ExprType::Scalar(v.data_type()),
            ParamValue::Vector(v) => ExprType::Vector(v.len()),
        },
        Expr::Distance(d) => {
            let l = expr_type(&d.left, local, outer)?;
            let r = expr_type(&d.right, local, outer)?;
            match (l, r) {
                (ExprType::Vector(a), ExprType::Vector(b)) if a == b => ExprType::Scalar(Some(DataType::Float64)),
                (ExprType::Vector(a), ExprType::Vector(b)) => {
                    return Err(Error::Dimension {
                        expected: a,
                        actual: b,
                    })
                }
                _ => return Err(Error::Type(format!("distance operands of `{expr}` must be vectors"))),
            }
        }
        Expr::Compare { left, right, .. } => {
            let l = expr_type(left, local, outer)?;
            let r = expr_type(right, local, outer)?;
            match (l, r) {
                (ExprType::Scalar(a), ExprType::Scalar(b)) => {
                    if let (Some(a), Some(b)) = (a, b) {
                        if a != b {
                            return Err(Error::Type(format!("cannot compare {a} with {b} in `{expr}`")));
                        }
                    }
                    ExprType::Bool
                }
                _ => return Err(Error::Type(format!("`{expr}` compares non-scalar values"))),
            }
        }
        Expr::And(terms) => {
            for t in terms {
                if expr_type(t, local, outer)? != ExprType::Bool {
                    return Err(Error::Type(format!("`{t}` is not a predicate")));
                }
            }
            ExprType::Bool
        }
    })
}

fn expect_bool(expr: &Expr, local: &[Field], outer: &[Field]) -> Result<()> {
    match expr_type(expr, local, outer)? {
        ExprType::Bool => Ok(()),
        _ => Err(Error::Type(format!("`{expr}` is not a predicate"))),
    }
}

fn scalar_type(expr: &Expr, local: &[Field], outer: &[Field]) -> Result<DataType> {
    match expr_type(expr, local, outer)? {
        ExprType::Scalar(Some(ty)) => Ok(ty),
        ExprType::Scalar(None) => Ok(DataType::Int64),
        ExprType::Vector(dim) => Ok(DataType::Vector(dim)),
        ExprType::Bool => Err(Error::Type(format!("`{expr}` is a predicate, not a value"))),
    }
}

/// Output fields of `op`, checking every expression along the way.
/// `outer` holds the columns visible from an enclosing dependent join.
pub fn output_fields(op: &LogicalOp, catalog: &Catalog, outer: &[Field]) -> Result<Vec<Field>> {
    match op {
        LogicalOp::Scan { table } => {
            let entry = catalog.get(table)?;
            let pk = entry.schema.primary_key();
            Ok(entry
                .schema
                .columns()
                .iter()
                .enumerate()
                .map(|(i, c)| Field {
                    qualifier: Some(table.clone()),
                    name: c.name.clone(),
                    ty: c.ty,
                    origin: Some(ColumnOrigin {
                        table: table.clone(),
                        column: i,
                        is_primary_key: i == pk,
                    }),
                    is_rank: false,
                })
                .collect())
        }
        LogicalOp::Filter { predicate, input } => {
            let fields = output_fields(input, catalog, outer)?;
            expect_bool(predicate, &fields, outer)?;
            Ok(fields)
        }
        LogicalOp::Map { items, input } => {
            let mut fields = output_fields(input, catalog, outer)?;
            for item in items {
                let ty = scalar_type(&item.expr, &fields, outer)?;
                fields.push(Field {
                    qualifier: None,
                    name: item.name.clone(),
                    ty,
                    origin: None,
                    is_rank: false,
                });
            }
            Ok(fields)
        }
        LogicalOp::OrderBy { keys, input } => {
            let fields = output_fields(input, catalog, outer)?;
            for k in keys {
                scalar_type(k, &fields, outer)?;
            }
            Ok(fields)
        }
        LogicalOp::Limit { input, .. } => output_fields(input, catalog, outer),
        LogicalOp::Window {
            partition_by,
            order_by,
            rank_column,
            input,
            ..
        } => {
            let mut fields = output_fields(input, catalog, outer)?;
            for k in partition_by.iter().chain(order_by) {
                scalar_type(k, &fields, outer)?;
            }
            fields.push(Field {
                qualifier: None,
                name: rank_column.clone(),
                ty: DataType::Int64,
                origin: None,
                is_rank: true,
            });
            Ok(fields)
        }
        LogicalOp::Join {
            kind,
            condition,
            left,
            right,
        } => {
            let mut fields = output_fields(left, catalog, outer)?;
            let right_fields = match kind {
                JoinKind::Inner => output_fields(right, catalog, outer)?,
                JoinKind::Dependent => {
                    let mut scope = outer.to_vec();
                    scope.extend(fields.iter().cloned());
                    output_fields(right, catalog, &scope)?
                }
            };
            fields.extend(right_fields);
            if let Some(c) = condition {
                expect_bool(c, &fields, outer)?;
            }
            Ok(fields)
        }
        LogicalOp::Selection { rank, input, .. } => {
            let fields = output_fields(input, catalog, outer)?;
            let f = resolve(&fields, outer, rank)?;
            if !f.is_rank {
                return Err(Error::plan(format!("`{rank}` is not a rank column")));
            }
            Ok(fields)
        }
        LogicalOp::UpdateState {
            category, sim, input, ..
        } => {
            let fields = output_fields(input, catalog, outer)?;
            resolve(&fields, outer, category)?;
            let s = resolve(&fields, outer, sim)?;
            if s.ty != DataType::Float64 {
                return Err(Error::Type(format!("similarity column `{sim}` must be float64")));
            }
            Ok(fields)
        }
        LogicalOp::Project { items, alias, input } => {
            let fields = output_fields(input, catalog, outer)?;
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                let name = item
                    .output_name()
                    .ok_or_else(|| Error::plan(format!("projection `{}` needs an alias", item.expr)))?;
                let (origin, is_rank) = match &item.expr {
                    Expr::Column(c) => {
                        let f = resolve(&fields, outer, c)?;
                        (f.origin.clone(), f.is_rank)
                    }
                    _ => (None, false),
                };
                out.push(Field {
                    qualifier: alias.clone(),
                    name: name.to_string(),
                    ty: scalar_type(&item.expr, &fields, outer)?,
                    origin,
                    is_rank,
                });
            }
            Ok(out)
        }
    }
}

/// Sets every distance expression's metric from the relation its vector
/// column belongs to.
pub fn bind_metrics(op: &mut LogicalOp, catalog: &Catalog, outer: &[Field]) -> Result<()> {
    // Scope visible to this node's own expressions.
    let scope: Vec<Field> = match &*op {
        LogicalOp::Scan { .. } => Vec::new(),
        LogicalOp::Join { left, .. } => output_fields(left, catalog, outer)?,
        other => output_fields(other.input().expect("unary"), catalog, outer)?,
    };
    let mut join_scope = None;
    if let LogicalOp::Join {
        kind, left, right, ..
    } = op
    {
        bind_metrics(left, catalog, outer)?;
        let mut inner_outer = outer.to_vec();
        if *kind == JoinKind::Dependent {
            inner_outer.extend(scope.iter().cloned());
        }
        bind_metrics(right, catalog, &inner_outer)?;
        let mut all = scope.clone();
        all.extend(output_fields(right, catalog, &inner_outer)?);
        join_scope = Some(all);
    } else {
        for child in op.children_mut() {
            bind_metrics(child, catalog, outer)?;
        }
    }
    let local = join_scope.as_deref().unwrap_or(&scope);
    let mut failure = None;
    let mut bind = |d: &mut super::expr::DistanceExpr| {
        let mut metric = None;
        for operand in [&d.left, &d.right] {
            if let Expr::Column(c) = operand.as_ref() {
                match resolve(local, outer, c) {
                    Ok(f) => {
                        if let Some(o) = &f.origin {
                            if let Ok(entry) = catalog.get(&o.table) {
                                metric = metric.or(Some(entry.distance_metric()));
                            }
                        }
                    }
                    Err(e) => failure = Some(e),
                }
            }
        }
        d.metric = metric.unwrap_or(Metric::L2);
    };
    for_each_expr_mut(op, &mut |e| e.visit_distances_mut(&mut bind));
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Applies `f` to every expression held directly by `op` (not its children).
pub fn for_each_expr_mut(op: &mut LogicalOp, f: &mut impl FnMut(&mut Expr)) {
    match op {
        LogicalOp::Scan { .. } | LogicalOp::Limit { .. } | LogicalOp::Selection { .. } | LogicalOp::UpdateState { .. } => {}
        LogicalOp::Filter { predicate, .. } => f(predicate),
        LogicalOp::Map { items, .. } => items.iter_mut().for_each(|i| f(&mut i.expr)),
        LogicalOp::OrderBy { keys, .. } => keys.iter_mut().for_each(f),
        LogicalOp::Window {
            partition_by, order_by, ..
        } => partition_by.iter_mut().chain(order_by.iter_mut()).for_each(f),
        LogicalOp::Join { condition, .. } => {
            if let Some(c) = condition {
                f(c)
            }
        }
        LogicalOp::Project { items, .. } => items.iter_mut().for_each(|i| f(&mut i.expr)),
    }
}

/// Turns integer literals and parameters compared against float columns into
/// floats, so `price < 100` type-checks against a float64 `price`.
pub fn coerce_literals(expr: &mut Expr, local: &[Field], outer: &[Field]) {
    match expr {
        Expr::Compare { left, right, .. } => {
            let lt = expr_type(left, local, outer).ok();
            let rt = expr_type(right, local, outer).ok();
            let float = Some(ExprType::Scalar(Some(DataType::Float64)));
            if lt == float {
                widen(right);
            }
            if rt == float {
                widen(left);
            }
            coerce_literals(left, local, outer);
            coerce_literals(right, local, outer);
        }
        Expr::And(terms) => terms.iter_mut().for_each(|t| coerce_literals(t, local, outer)),
        _ => {}
    }
}

fn widen(expr: &mut Expr) {
    match expr {
        Expr::Literal(ScalarValue::Int(v)) => *expr = Expr::Literal(ScalarValue::Float(*v as f64)),
        Expr::Param {
            value: ParamValue::Scalar(v @ ScalarValue::Int(_)),
            ..
        } => {
            let i = v.as_i64().unwrap();
            *v = ScalarValue::Float(i as f64);
        }
        _ => {}
    }
}

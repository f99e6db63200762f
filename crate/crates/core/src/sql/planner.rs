use std::collections::BTreeMap;

use crate::catalog::Catalog;
use crate::data::ScalarValue;
use crate::error::{Error, Result};
use crate::plan::{
    bind_metrics, coerce_literals, output_fields, resolve, CmpOp, DistanceExpr, Expr, Field, Frame, JoinKind,
    LogicalOp, ParamValue, ProjectItem,
};

use super::ast::{AstExpr, FromItem, LimitValue, Query};

/// Parameter bindings for `${name}` placeholders.
pub type Params = BTreeMap<String, ParamValue>;

const DEFAULT_RANK_COLUMN: &str = "rank";

/// Builds the unrewritten logical plan of `q`.
pub fn plan_query(q: &Query, catalog: &Catalog, params: &Params) -> Result<LogicalOp> {
    let mut plan = plan_select(q, catalog, params, None)?;
    bind_metrics(&mut plan, catalog, &[])?;
    output_fields(&plan, catalog, &[])?;
    Ok(plan)
}

/// Converts an AST expression, looking parameters up with `param`.
pub(crate) fn convert_expr(e: &AstExpr, param: &dyn Fn(&str) -> Result<ParamValue>) -> Result<Expr> {
    Ok(match e {
        AstExpr::Column(c) => Expr::Column(c.clone()),
        AstExpr::Int(v) => Expr::Literal(ScalarValue::Int(*v)),
        AstExpr::Float(v) => Expr::Literal(ScalarValue::Float(*v)),
        AstExpr::Str(s) => Expr::Literal(ScalarValue::Text(s.as_str().into())),
        AstExpr::Param(name) => Expr::Param {
            name: name.clone(),
            value: param(name)?,
        },
        AstExpr::Distance(a, b) => Expr::Distance(DistanceExpr::new(
            convert_expr(a, param)?,
            convert_expr(b, param)?,
            Default::default(),
        )),
        AstExpr::Compare { op, left, right } => {
            Expr::compare(*op, convert_expr(left, param)?, convert_expr(right, param)?)
        }
        AstExpr::And(terms) => Expr::and(terms.iter().map(|t| convert_expr(t, param)).collect::<Result<_>>()?),
        AstExpr::Rank(_) => return Err(Error::plan("RANK() is only allowed as a select item")),
    })
}

fn lookup(params: &Params) -> impl Fn(&str) -> Result<ParamValue> + '_ {
    move |name| {
        params
            .get(name)
            .cloned()
            .ok_or_else(|| Error::plan(format!("unbound parameter ${{{name}}}")))
    }
}

fn count_param(params: &Params, name: &str) -> Result<usize> {
    match params.get(name) {
        Some(ParamValue::Scalar(ScalarValue::Int(v))) if *v >= 0 => Ok(*v as usize),
        Some(_) => Err(Error::Type(format!("parameter ${{{name}}} must be a non-negative integer"))),
        None => Err(Error::plan(format!("unbound parameter ${{{name}}}"))),
    }
}

fn typed(e: &AstExpr, fields: &[Field], params: &Params) -> Result<Expr> {
    let mut expr = convert_expr(e, &lookup(params))?;
    coerce_literals(&mut expr, fields, &[]);
    Ok(expr)
}

/// Recognizes `alias.rank <= K` over a rank column of a subquery.
fn rank_bound(e: &AstExpr, fields: &[Field], params: &Params) -> Result<Option<(crate::plan::ColumnRef, usize)>> {
    let AstExpr::Compare {
        op: CmpOp::LtEq,
        left,
        right,
    } = e
    else {
        return Ok(None);
    };
    let AstExpr::Column(c) = left.as_ref() else {
        return Ok(None);
    };
    if !resolve(fields, &[], c).is_ok_and(|f| f.is_rank) {
        return Ok(None);
    }
    let k = match right.as_ref() {
        AstExpr::Int(v) if *v >= 0 => *v as usize,
        AstExpr::Param(name) => count_param(params, name)?,
        _ => return Ok(None),
    };
    Ok(Some((c.clone(), k)))
}

fn plan_select(q: &Query, catalog: &Catalog, params: &Params, alias: Option<&str>) -> Result<LogicalOp> {
    let mut plan = match &q.from {
        FromItem::Table(t) => {
            catalog.get(t)?;
            LogicalOp::scan(t)
        }
        FromItem::Subquery { query, alias } => plan_select(query, catalog, params, Some(alias))?,
    };
    for j in &q.joins {
        catalog.get(&j.table)?;
        let right = LogicalOp::scan(&j.table);
        let mut fields = output_fields(&plan, catalog, &[])?;
        fields.extend(output_fields(&right, catalog, &[])?);
        plan = LogicalOp::Join {
            kind: JoinKind::Inner,
            condition: Some(typed(&j.on, &fields, params)?),
            left: Box::new(plan),
            right: Box::new(right),
        };
    }

    if let Some(filter) = &q.filter {
        let fields = output_fields(&plan, catalog, &[])?;
        let terms = match filter {
            AstExpr::And(ts) => ts.clone(),
            other => vec![other.clone()],
        };
        let mut rest = Vec::new();
        let mut selection = None;
        for t in terms {
            match rank_bound(&t, &fields, params)? {
                Some(bound) if selection.is_none() => selection = Some(bound),
                Some(_) => return Err(Error::Unsupported("more than one rank bound".into())),
                None => rest.push(typed(&t, &fields, params)?),
            }
        }
        if !rest.is_empty() {
            plan = LogicalOp::Filter {
                predicate: Expr::and(rest),
                input: Box::new(plan),
            };
        }
        if let Some((rank, k)) = selection {
            plan = LogicalOp::Selection {
                rank,
                k,
                input: Box::new(plan),
            };
        }
    }

    let windows: Vec<_> = q
        .select
        .iter()
        .filter_map(|s| match &s.expr {
            AstExpr::Rank(w) => Some((w, s.alias.as_deref().unwrap_or(DEFAULT_RANK_COLUMN))),
            _ => None,
        })
        .collect();
    if windows.len() > 1 {
        return Err(Error::Unsupported("more than one window function".into()));
    }
    if let Some((w, rank_column)) = windows.first() {
        let fields = output_fields(&plan, catalog, &[])?;
        let conv = |xs: &[AstExpr]| xs.iter().map(|e| typed(e, &fields, params)).collect::<Result<Vec<_>>>();
        plan = LogicalOp::Window {
            partition_by: conv(&w.partition_by)?,
            order_by: conv(&w.order_by)?,
            frame: Frame::WHOLE,
            rank_column: rank_column.to_string(),
            input: Box::new(plan),
        };
    }

    if !q.order_by.is_empty() {
        let fields = output_fields(&plan, catalog, &[])?;
        let keys = q
            .order_by
            .iter()
            .map(|e| typed(e, &fields, params))
            .collect::<Result<Vec<_>>>()?;
        plan = LogicalOp::OrderBy {
            keys,
            input: Box::new(plan),
        };
    }
    if let Some(limit) = &q.limit {
        let count = match limit {
            LimitValue::Count(n) => *n as usize,
            LimitValue::Param(name) => count_param(params, name)?,
        };
        plan = LogicalOp::Limit {
            count,
            input: Box::new(plan),
        };
    }

    let fields = output_fields(&plan, catalog, &[])?;
    let mut items = Vec::with_capacity(q.select.len());
    for s in &q.select {
        let item = match &s.expr {
            AstExpr::Rank(_) => ProjectItem {
                expr: Expr::column(s.alias.as_deref().unwrap_or(DEFAULT_RANK_COLUMN)),
                alias: None,
            },
            other => ProjectItem {
                expr: typed(other, &fields, params)?,
                alias: s.alias.clone(),
            },
        };
        items.push(item);
    }
    Ok(LogicalOp::Project {
        items,
        alias: alias.map(str::to_string),
        input: Box::new(plan),
    })
}

use std::fmt::Write;

use crate::data::ScalarValue;

use super::ast::{AstExpr, FromItem, LimitValue, Query};

/// Minimal SQL pretty-printer; `parse(render(q)) == q`.
pub fn render(q: &Query) -> String {
    let mut out = String::new();
    render_into(q, &mut out);
    out
}

fn render_into(q: &Query, out: &mut String) {
    out.push_str("SELECT ");
    for (i, item) in q.select.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&render_expr(&item.expr));
        if let Some(a) = &item.alias {
            let _ = write!(out, " AS {a}");
        }
    }
    out.push_str(" FROM ");
    match &q.from {
        FromItem::Table(t) => out.push_str(t),
        FromItem::Subquery { query, alias } => {
            out.push('(');
            render_into(query, out);
            let _ = write!(out, ") AS {alias}");
        }
    }
    for j in &q.joins {
        let _ = write!(out, " JOIN {} ON {}", j.table, render_expr(&j.on));
    }
    if let Some(f) = &q.filter {
        let _ = write!(out, " WHERE {}", render_expr(f));
    }
    if !q.order_by.is_empty() {
        let _ = write!(out, " ORDER BY {}", list(&q.order_by));
    }
    match &q.limit {
        Some(LimitValue::Count(n)) => {
            let _ = write!(out, " LIMIT {n}");
        }
        Some(LimitValue::Param(p)) => {
            let _ = write!(out, " LIMIT ${{{p}}}");
        }
        None => {}
    }
}

fn list(xs: &[AstExpr]) -> String {
    xs.iter().map(render_expr).collect::<Vec<_>>().join(", ")
}

pub fn render_expr(e: &AstExpr) -> String {
    match e {
        AstExpr::Column(c) => c.to_string(),
        AstExpr::Int(v) => v.to_string(),
        AstExpr::Float(v) => ScalarValue::Float(*v).to_sql(),
        AstExpr::Str(s) => ScalarValue::Text(s.as_str().into()).to_sql(),
        AstExpr::Param(p) => format!("${{{p}}}"),
        AstExpr::Distance(a, b) => format!("DISTANCE({}, {})", render_expr(a), render_expr(b)),
        AstExpr::Compare { op, left, right } => {
            format!("{} {} {}", render_expr(left), op.symbol(), render_expr(right))
        }
        AstExpr::And(terms) => terms.iter().map(render_expr).collect::<Vec<_>>().join(" AND "),
        AstExpr::Rank(w) => {
            let mut s = String::from("RANK() OVER (");
            if !w.partition_by.is_empty() {
                let _ = write!(s, "PARTITION BY {} ", list(&w.partition_by));
            }
            let _ = write!(s, "ORDER BY {})", list(&w.order_by));
            s
        }
    }
}

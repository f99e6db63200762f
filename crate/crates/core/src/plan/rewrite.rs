use crate::catalog::Catalog;
use crate::error::Result;

use super::expr::{ColumnRef, Expr};
use super::op::{JoinKind, LogicalOp, MapItem};
use super::pattern::{find_patterns, PatternKind, PatternMatch};

/// Name of the column that carries scan-provided distances.
pub const SIM: &str = "sim";

fn sim() -> Expr {
    Expr::column(SIM)
}

/// Puts `Map(sim := distance)` directly above the scan at the bottom of a
/// unary chain.
fn insert_map(op: &LogicalOp, distance: &Expr) -> LogicalOp {
    match op {
        LogicalOp::Scan { .. } => LogicalOp::Map {
            items: vec![MapItem {
                name: SIM.to_string(),
                expr: distance.clone(),
            }],
            input: Box::new(op.clone()),
        },
        other => {
            let mut copy = other.clone();
            if let Some(child) = copy.children_mut().into_iter().next() {
                *child = insert_map(child, distance);
            }
            copy
        }
    }
}

fn replace_at(plan: &LogicalOp, path: &[usize], node: LogicalOp) -> LogicalOp {
    let mut out = plan.clone();
    *out.at_mut(path).expect("pattern path is valid") = node;
    out
}

/// Sorts on scan-provided scores instead of recomputing distances.
pub fn rewrite_knn_like(plan: &LogicalOp, m: &PatternMatch) -> LogicalOp {
    if m.kind != PatternKind::KnnLike {
        return plan.clone();
    }
    let Some(LogicalOp::Limit { count, input }) = plan.at(&m.anchor) else {
        return plan.clone();
    };
    let LogicalOp::OrderBy { keys, input: below } = input.as_ref() else {
        return plan.clone();
    };
    let node = LogicalOp::Limit {
        count: *count,
        input: Box::new(LogicalOp::OrderBy {
            keys: vec![sim()],
            input: Box::new(insert_map(below, &keys[0])),
        }),
    };
    replace_at(plan, &m.anchor, node)
}

/// Turns a per-entity window over a join into a dependent join whose inner
/// side is a top-k pipeline per outer row.
pub fn rewrite_entity_centric(plan: &LogicalOp, m: &PatternMatch) -> LogicalOp {
    if m.kind != PatternKind::EntityCentric {
        return plan.clone();
    }
    let Some(LogicalOp::Window {
        partition_by,
        order_by,
        frame,
        rank_column,
        input,
    }) = plan.at(&m.anchor)
    else {
        return plan.clone();
    };
    let LogicalOp::Join {
        condition, left, right, ..
    } = input.as_ref()
    else {
        return plan.clone();
    };
    let mapped = insert_map(right, &order_by[0]);
    let filtered = match condition {
        Some(c) => LogicalOp::Filter {
            predicate: c.clone(),
            input: Box::new(mapped),
        },
        None => mapped,
    };
    let inner = LogicalOp::Limit {
        count: m.k.expect("bound by detection"),
        input: Box::new(LogicalOp::OrderBy {
            keys: vec![sim()],
            input: Box::new(filtered),
        }),
    };
    let node = LogicalOp::Window {
        partition_by: partition_by.clone(),
        order_by: vec![sim()],
        frame: *frame,
        rank_column: rank_column.clone(),
        input: Box::new(LogicalOp::Join {
            kind: JoinKind::Dependent,
            condition: None,
            left: left.clone(),
            right: Box::new(inner),
        }),
    };
    replace_at(plan, &m.anchor, node)
}

/// Inserts per-category progress tracking below the window, wired to the
/// range scan it may stop.
pub fn rewrite_category_driven(plan: &LogicalOp, m: &PatternMatch) -> LogicalOp {
    if m.kind != PatternKind::CategoryDriven {
        return plan.clone();
    }
    let Some(LogicalOp::Window {
        partition_by,
        order_by,
        frame,
        rank_column,
        input,
    }) = plan.at(&m.anchor)
    else {
        return plan.clone();
    };
    let target = m.target_table.clone().expect("bound by detection");
    let update = |input: LogicalOp| LogicalOp::UpdateState {
        category: m.category.clone().expect("bound by detection"),
        sim: ColumnRef::bare(SIM),
        k: m.k.expect("bound by detection"),
        feedback: Some(target.clone()),
        input: Box::new(input),
    };
    let below = match input.as_ref() {
        LogicalOp::Join {
            condition, left, right, ..
        } => {
            let mapped = insert_map(right, &order_by[0]);
            let filtered = match condition {
                Some(c) => LogicalOp::Filter {
                    predicate: c.clone(),
                    input: Box::new(mapped),
                },
                None => mapped,
            };
            LogicalOp::Join {
                kind: JoinKind::Dependent,
                condition: None,
                left: left.clone(),
                right: Box::new(update(filtered)),
            }
        }
        chain => update(insert_map(chain, &order_by[0])),
    };
    let node = LogicalOp::Window {
        partition_by: partition_by.clone(),
        order_by: vec![sim()],
        frame: *frame,
        rank_column: rank_column.clone(),
        input: Box::new(below),
    };
    replace_at(plan, &m.anchor, node)
}

/// Applies all rewrites until no pattern remains: category-driven first,
/// then entity-centric, then knn-like.
pub fn optimize(plan: &LogicalOp, catalog: &Catalog) -> Result<LogicalOp> {
    let mut current = plan.clone();
    loop {
        let matches = find_patterns(&current, catalog)?;
        let pick = [PatternKind::CategoryDriven, PatternKind::EntityCentric, PatternKind::KnnLike]
            .into_iter()
            .find_map(|kind| matches.iter().find(|m| m.kind == kind));
        let Some(m) = pick else { return Ok(current) };
        current = match m.kind {
            PatternKind::CategoryDriven => rewrite_category_driven(&current, m),
            PatternKind::EntityCentric => rewrite_entity_centric(&current, m),
            PatternKind::KnnLike => rewrite_knn_like(&current, m),
            PatternKind::None => unreachable!(),
        };
    }
}

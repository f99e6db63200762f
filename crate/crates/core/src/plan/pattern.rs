use crate::catalog::Catalog;
use crate::data::DataType;
use crate::error::Result;

use super::expr::{ColumnRef, DistanceExpr, Expr};
use super::fields::{output_fields, resolve, Field};
use super::op::{JoinKind, LogicalOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    /// `Limit(OrderBy(distance))` over a scan.
    KnnLike,
    /// Per-entity top-k: window partitioned by the query table's key.
    EntityCentric,
    /// Per-(entity, category) top-k inside a distance bound.
    CategoryDriven,
    None,
}

/// A recognized hybrid pattern and the plan pieces it binds.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMatch {
    pub kind: PatternKind,
    /// Path of the `Limit` (KnnLike) or the `Window` (the other kinds).
    pub anchor: Vec<usize>,
    pub distance: Option<DistanceExpr>,
    pub k: Option<usize>,
    pub partition_keys: Vec<Expr>,
    /// Table whose vectors are searched.
    pub target_table: Option<String>,
    /// Table providing one query per row (join forms only).
    pub query_table: Option<String>,
    pub query_key: Option<ColumnRef>,
    pub category: Option<ColumnRef>,
    pub range_bound: Option<Expr>,
}

impl PatternMatch {
    pub fn none() -> Self {
        Self {
            kind: PatternKind::None,
            anchor: Vec::new(),
            distance: None,
            k: None,
            partition_keys: Vec::new(),
            target_table: None,
            query_table: None,
            query_key: None,
            category: None,
            range_bound: None,
        }
    }

    fn priority(&self) -> u8 {
        match self.kind {
            PatternKind::CategoryDriven => 3,
            PatternKind::EntityCentric => 2,
            PatternKind::KnnLike => 1,
            PatternKind::None => 0,
        }
    }
}

/// Highest-priority pattern in the plan (CategoryDriven, then
/// EntityCentric, then KnnLike), or `None`.
pub fn detect_pattern(plan: &LogicalOp, catalog: &Catalog) -> Result<PatternMatch> {
    let all = find_patterns(plan, catalog)?;
    Ok(all
        .into_iter()
        .max_by_key(|m| m.priority())
        .unwrap_or_else(PatternMatch::none))
}

/// Every pattern occurrence, in pre-order.
pub fn find_patterns(plan: &LogicalOp, catalog: &Catalog) -> Result<Vec<PatternMatch>> {
    output_fields(plan, catalog, &[])?;
    let mut found = Vec::new();
    for (path, node) in plan.walk() {
        let outer = outer_scope(plan, &path, catalog)?;
        match node {
            LogicalOp::Limit { .. } => {
                if let Some(m) = knn_like(node, &path, catalog, &outer)? {
                    found.push(m);
                }
            }
            LogicalOp::Selection { .. } => {
                if let Some(m) = windowed(plan, &path, catalog)? {
                    found.push(m);
                }
            }
            _ => {}
        }
    }
    Ok(found)
}

/// Columns visible from enclosing dependent joins at `path`.
pub fn outer_scope(plan: &LogicalOp, path: &[usize], catalog: &Catalog) -> Result<Vec<Field>> {
    let mut outer = Vec::new();
    let mut node = plan;
    for &step in path {
        if let LogicalOp::Join {
            kind: JoinKind::Dependent,
            left,
            ..
        } = node
        {
            if step == 1 {
                let left_fields = output_fields(left, catalog, &outer)?;
                outer.extend(left_fields);
            }
        }
        node = node.children()[step];
    }
    Ok(outer)
}

fn is_chain_over_scan(op: &LogicalOp) -> bool {
    let mut node = op;
    loop {
        match node {
            LogicalOp::Scan { .. } => return true,
            LogicalOp::Filter { input, .. } | LogicalOp::Map { input, .. } => node = input,
            _ => return false,
        }
    }
}

/// Splits `d` into (target vector column, query operand) where the target
/// column belongs to `local` fields of `table`.
fn target_side<'a>(
    d: &'a DistanceExpr,
    local: &[Field],
    outer: &[Field],
    table: &str,
) -> Option<(&'a ColumnRef, &'a Expr)> {
    for (a, b) in [(&d.left, &d.right), (&d.right, &d.left)] {
        let Expr::Column(c) = a.as_ref() else { continue };
        let Ok(field) = resolve(local, &[], c) else { continue };
        let ok = matches!(field.ty, DataType::Vector(_))
            && field.origin.as_ref().is_some_and(|o| o.table == table);
        if ok && resolve(local, outer, c).is_ok() {
            return Some((c, b.as_ref()));
        }
    }
    None
}

fn knn_like(node: &LogicalOp, path: &[usize], catalog: &Catalog, outer: &[Field]) -> Result<Option<PatternMatch>> {
    let LogicalOp::Limit { count, input } = node else {
        return Ok(None);
    };
    let LogicalOp::OrderBy { keys, input: below } = input.as_ref() else {
        return Ok(None);
    };
    let [Expr::Distance(d)] = keys.as_slice() else {
        return Ok(None);
    };
    if !is_chain_over_scan(below) {
        return Ok(None);
    }
    let table = below.chain_scan().unwrap().to_string();
    let local = output_fields(below, catalog, outer)?;
    let Some((_, query)) = target_side(d, &local, outer, &table) else {
        return Ok(None);
    };
    let query_ok = match query {
        Expr::Param { .. } => true,
        Expr::Column(c) => resolve(&[], outer, c).is_ok() && resolve(&local, &[], c).is_err(),
        _ => false,
    };
    if !query_ok {
        return Ok(None);
    }
    Ok(Some(PatternMatch {
        kind: PatternKind::KnnLike,
        anchor: path.to_vec(),
        distance: Some(d.clone()),
        k: Some(*count),
        target_table: Some(table),
        ..PatternMatch::none()
    }))
}

/// Follows a `Selection` down through renaming projections to the window
/// that computes its rank. Returns the window's path.
fn window_below_selection(plan: &LogicalOp, sel_path: &[usize]) -> Option<Vec<usize>> {
    let LogicalOp::Selection { rank, .. } = plan.at(sel_path)? else {
        return None;
    };
    let mut wanted = rank.name.clone();
    let mut path = sel_path.to_vec();
    path.push(0);
    loop {
        match plan.at(&path)? {
            LogicalOp::Project { items, .. } => {
                let item = items.iter().find(|i| i.output_name() == Some(wanted.as_str()))?;
                wanted = item.expr.as_column()?.name.clone();
                path.push(0);
            }
            LogicalOp::Window { rank_column, .. } if *rank_column == wanted => return Some(path),
            _ => return None,
        }
    }
}

fn windowed(plan: &LogicalOp, sel_path: &[usize], catalog: &Catalog) -> Result<Option<PatternMatch>> {
    let Some(win_path) = window_below_selection(plan, sel_path) else {
        return Ok(None);
    };
    let LogicalOp::Selection { k, .. } = plan.at(sel_path).unwrap() else {
        unreachable!()
    };
    let LogicalOp::Window {
        partition_by,
        order_by,
        frame,
        input,
        ..
    } = plan.at(&win_path).unwrap()
    else {
        unreachable!()
    };
    if !frame.is_whole() {
        return Ok(None);
    }
    let [Expr::Distance(d)] = order_by.as_slice() else {
        return Ok(None);
    };
    let base = PatternMatch {
        anchor: win_path.clone(),
        distance: Some(d.clone()),
        k: Some(*k),
        partition_keys: partition_by.clone(),
        ..PatternMatch::none()
    };
    let win_outer = outer_scope(plan, &win_path, catalog)?;
    let outer = &win_outer;

    match input.as_ref() {
        LogicalOp::Join {
            kind: JoinKind::Inner,
            condition,
            left,
            right,
        } => {
            let Some(target) = right.chain_scan().filter(|_| is_chain_over_scan(right)) else {
                return Ok(None);
            };
            let right_fields = output_fields(right, catalog, outer)?;
            let left_fields = output_fields(left, catalog, outer)?;
            let Some((_, query)) = target_side(d, &right_fields, outer, target) else {
                return Ok(None);
            };
            let Expr::Column(qc) = query else { return Ok(None) };
            let Ok(qfield) = resolve(&left_fields, &[], qc) else {
                return Ok(None);
            };
            let Some(query_table) = qfield.origin.as_ref().map(|o| o.table.clone()) else {
                return Ok(None);
            };
            let is_query_pk = |e: &Expr| -> bool {
                e.as_column()
                    .and_then(|c| resolve(&left_fields, &[], c).ok())
                    .and_then(|f| f.origin.as_ref())
                    .is_some_and(|o| o.is_primary_key && o.table == query_table)
            };
            let target_category = |e: &Expr| -> Option<ColumnRef> {
                let c = e.as_column()?;
                let f = resolve(&right_fields, &[], c).ok()?;
                let o = f.origin.as_ref()?;
                (o.table == target && !f.ty.is_vector()).then(|| c.clone())
            };
            let bound = condition.as_ref().and_then(|c| {
                c.conjuncts()
                    .into_iter()
                    .find_map(|t| t.as_distance_bound().filter(|(bd, _)| bd.same_operands(d)).map(|(_, b)| b.clone()))
            });
            let base = PatternMatch {
                target_table: Some(target.to_string()),
                query_table: Some(query_table.clone()),
                ..base
            };
            if let (Some(bound), [pk, cat]) = (&bound, partition_by.as_slice()) {
                if is_query_pk(pk) {
                    if let Some(category) = target_category(cat) {
                        return Ok(Some(PatternMatch {
                            kind: PatternKind::CategoryDriven,
                            query_key: pk.as_column().cloned(),
                            category: Some(category),
                            range_bound: Some(bound.clone()),
                            ..base
                        }));
                    }
                }
            }
            if let [pk] = partition_by.as_slice() {
                if is_query_pk(pk) {
                    return Ok(Some(PatternMatch {
                        kind: PatternKind::EntityCentric,
                        query_key: pk.as_column().cloned(),
                        ..base
                    }));
                }
            }
            Ok(None)
        }
        chain if is_chain_over_scan(chain) => {
            let target = chain.chain_scan().unwrap().to_string();
            let fields = output_fields(chain, catalog, outer)?;
            let Some((_, Expr::Param { .. })) = target_side(d, &fields, outer, &target) else {
                return Ok(None);
            };
            let mut bound = None;
            let mut node = chain;
            while let Some(next) = node.input() {
                if let LogicalOp::Filter { predicate, .. } = node {
                    bound = bound.or_else(|| {
                        predicate.conjuncts().into_iter().find_map(|t| {
                            t.as_distance_bound()
                                .filter(|(bd, _)| bd.same_operands(d))
                                .map(|(_, b)| b.clone())
                        })
                    });
                }
                node = next;
            }
            let Some(bound) = bound else { return Ok(None) };
            // A single query vector acts as a constant entity key.
            let cat = match partition_by.as_slice() {
                [c] => c,
                [Expr::Literal(_), c] => c,
                _ => return Ok(None),
            };
            let Some(c) = cat.as_column() else { return Ok(None) };
            let Ok(f) = resolve(&fields, &[], c) else { return Ok(None) };
            if f.ty.is_vector() || f.origin.as_ref().is_none_or(|o| o.table != target) {
                return Ok(None);
            }
            Ok(Some(PatternMatch {
                kind: PatternKind::CategoryDriven,
                category: Some(c.clone()),
                range_bound: Some(bound),
                target_table: Some(target),
                ..base
            }))
        }
        _ => Ok(None),
    }
}

use std::sync::Arc;

use crate::catalog::Catalog;
use crate::data::Table;
use crate::error::{Error, Result};
use crate::index::HnswIndex;
use crate::plan::{
    output_fields, resolve, CmpOp, DistanceExpr, Expr, Field, JoinKind, LogicalOp, ParamValue,
};

use super::expr::PhysExpr;
use super::node::{MapKind, NodeKind, PhysNode, SourceKind};
use super::tuple::{table_of, Layout, Slot};
use super::{ExecMode, ExecOptions, PhysicalPlan};

/// Over-fetch factor of the batch index probe used by the baseline mode.
pub const BATCH_OVERFETCH: usize = 10;

/// Access-path request passed from an operator down to the scan below it.
#[derive(Debug, Clone)]
enum Hint {
    None,
    Topk { distance: DistanceExpr, k: usize },
    Range { distance: DistanceExpr, radius: f64 },
}

struct Lowered {
    node: PhysNode,
    layout: Layout,
    /// Distance the tuples' score equals, when a source reports one.
    score_of: Option<DistanceExpr>,
    /// Source is an ordered top-k stream that honors a threshold.
    topk_stream: bool,
}

struct Lowering<'a> {
    catalog: &'a Catalog,
    options: &'a ExecOptions,
    /// Relation whose range scan an enclosing UpdateState may stop.
    feedback_target: Option<String>,
}

fn node(label: String, kind: NodeKind) -> PhysNode {
    PhysNode { id: 0, label, kind }
}

/// Lowers a logical plan into an executable operator tree.
pub fn lower(plan: &LogicalOp, catalog: &Catalog, options: &ExecOptions) -> Result<PhysicalPlan> {
    output_fields(plan, catalog, &[])?;
    let mut cx = Lowering {
        catalog,
        options,
        feedback_target: None,
    };
    let lowered = cx.lower(plan, &Layout::default(), Hint::None)?;
    let mut root = lowered.node;
    let mut names = Vec::new();
    assign_ids(&mut root, &mut names);
    Ok(PhysicalPlan {
        root,
        layout: lowered.layout,
        names,
        threads: options.threads.max(1),
    })
}

fn assign_ids(node: &mut PhysNode, names: &mut Vec<String>) {
    node.id = names.len();
    names.push(node.name().to_string());
    for c in node.children_mut() {
        assign_ids(c, names);
    }
}

/// Walks a Filter/Map chain down to its scan.
fn chain_scan(op: &LogicalOp) -> Option<&str> {
    match op {
        LogicalOp::Scan { table } => Some(table),
        LogicalOp::Filter { input, .. } | LogicalOp::Map { input, .. } => chain_scan(input),
        _ => None,
    }
}

fn constant_f64(e: &Expr) -> Option<f64> {
    match e {
        Expr::Literal(v) => v.as_f64(),
        Expr::Param {
            value: ParamValue::Scalar(v),
            ..
        } => v.as_f64(),
        _ => None,
    }
}

impl Lowering<'_> {
    fn label(op: &LogicalOp) -> String {
        op.explain().lines().next().unwrap_or_default().to_string()
    }

    /// True when `d` compares a vector column of `table`'s scan (within
    /// `fields`) against a constant or outer vector.
    fn searchable(&self, d: &DistanceExpr, table: &str, fields: &[Field], outer: &[Field]) -> bool {
        let target = |e: &Expr| {
            e.as_column()
                .and_then(|c| resolve(fields, &[], c).ok())
                .is_some_and(|f| f.ty.is_vector() && f.origin.as_ref().is_some_and(|o| o.table == table))
        };
        let query = |e: &Expr| match e {
            Expr::Param {
                value: ParamValue::Vector(_),
                ..
            } => true,
            Expr::Column(c) => resolve(fields, &[], c).is_err() && resolve(&[], outer, c).is_ok(),
            _ => false,
        };
        (target(&d.left) && query(&d.right)) || (target(&d.right) && query(&d.left))
    }

    fn query_side<'e>(&self, d: &'e DistanceExpr, fields: &[Field]) -> &'e Expr {
        let is_local = |e: &Expr| e.as_column().is_some_and(|c| resolve(fields, &[], c).is_ok());
        if is_local(&d.left) {
            &d.right
        } else {
            &d.left
        }
    }

    fn index_for(&self, table: &str, d: &DistanceExpr, label: &str) -> Result<Arc<HnswIndex>> {
        let entry = self.catalog.get(table)?;
        let index = entry
            .index
            .clone()
            .ok_or_else(|| Error::lowering(label, format!("relation `{table}` has no vector index")))?;
        if index.metric() != d.metric {
            return Err(Error::lowering(
                label,
                format!("index metric {} does not match distance metric {}", index.metric(), d.metric),
            ));
        }
        Ok(index)
    }

    fn lower(&mut self, op: &LogicalOp, outer: &Layout, hint: Hint) -> Result<Lowered> {
        let label = Self::label(op);
        match op {
            LogicalOp::Scan { table } => self.lower_scan(table, outer, hint, label),
            LogicalOp::Filter { predicate, input } => {
                let mut hint = hint;
                let mut rest: Vec<Expr> = predicate.conjuncts().into_iter().cloned().collect();
                if matches!(hint, Hint::None) && self.options.mode != ExecMode::Unoptimized {
                    if let Some(table) = chain_scan(input) {
                        let fields = output_fields(input, self.catalog, &outer.all_fields())?;
                        let pos = rest.iter().position(|t| {
                            t.as_distance_bound().is_some_and(|(d, r)| {
                                constant_f64(r).is_some() && self.searchable(d, table, &fields, &outer.all_fields())
                            })
                        });
                        if let Some(p) = pos {
                            let term = rest.remove(p);
                            let (d, r) = term.as_distance_bound().expect("checked");
                            hint = Hint::Range {
                                distance: d.clone(),
                                radius: constant_f64(r).expect("checked"),
                            };
                        }
                    }
                }
                let inner = self.lower(input, outer, hint)?;
                if rest.is_empty() {
                    return Ok(inner);
                }
                let predicate = PhysExpr::compile(&Expr::and(rest), &inner.layout)?;
                Ok(Lowered {
                    node: node(
                        label,
                        NodeKind::Filter {
                            predicate,
                            input: Box::new(inner.node),
                        },
                    ),
                    ..inner
                })
            }
            LogicalOp::Map { items, input } => {
                let inner = self.lower(input, outer, hint)?;
                let mut layout = inner.layout.clone();
                let fields = output_fields(op, self.catalog, &outer.all_fields())?;
                let new_fields = &fields[fields.len() - items.len()..];
                let mut kinds = Vec::with_capacity(items.len());
                for (item, field) in items.iter().zip(new_fields) {
                    let from_score = match (&item.expr, &inner.score_of) {
                        (Expr::Distance(d), Some(s)) => d.same_operands(s) && d.metric == s.metric,
                        _ => false,
                    };
                    let slot = layout.extra_count;
                    if from_score {
                        kinds.push(MapKind::FromScore);
                        layout.score_extras.push(slot);
                    } else {
                        kinds.push(MapKind::Compute(PhysExpr::compile(&item.expr, &inner.layout)?));
                    }
                    layout.extra_count += 1;
                    layout.local.push((field.clone(), Slot::Extra(slot)));
                }
                Ok(Lowered {
                    node: node(
                        label,
                        NodeKind::Map {
                            items: kinds,
                            input: Box::new(inner.node),
                        },
                    ),
                    layout,
                    ..inner
                })
            }
            LogicalOp::OrderBy { keys, input } => self.lower_sort(keys, None, input, outer, label),
            LogicalOp::Limit { count, input } => {
                let inner = match input.as_ref() {
                    LogicalOp::OrderBy { keys, input: below } => {
                        self.lower_sort(keys, Some(*count), below, outer, Self::label(input))?
                    }
                    other => self.lower(other, outer, Hint::None)?,
                };
                Ok(Lowered {
                    node: node(
                        label,
                        NodeKind::Limit {
                            count: *count,
                            input: Box::new(inner.node),
                        },
                    ),
                    score_of: None,
                    topk_stream: false,
                    layout: inner.layout,
                })
            }
            LogicalOp::Window {
                partition_by,
                order_by,
                rank_column,
                input,
                ..
            } => {
                let inner = self.lower(input, outer, Hint::None)?;
                let compile = |xs: &[Expr]| {
                    xs.iter()
                        .map(|e| PhysExpr::compile(e, &inner.layout))
                        .collect::<Result<Vec<_>>>()
                };
                let partition_by = compile(partition_by)?;
                let order_by = compile(order_by)?;
                let mut layout = inner.layout.clone();
                let fields = output_fields(op, self.catalog, &outer.all_fields())?;
                let rank_field = fields.last().expect("rank field").clone();
                debug_assert_eq!(&rank_field.name, rank_column);
                layout.local.push((rank_field, Slot::Extra(layout.extra_count)));
                layout.extra_count += 1;
                Ok(Lowered {
                    node: node(
                        label,
                        NodeKind::Window {
                            partition_by,
                            order_by,
                            input: Box::new(inner.node),
                        },
                    ),
                    layout,
                    score_of: None,
                    topk_stream: false,
                })
            }
            LogicalOp::Selection { rank, k, input } => {
                let inner = self.lower(input, outer, Hint::None)?;
                let (_, slot) = inner.layout.resolve(rank)?;
                let rank = PhysExpr::slot(slot, &inner.layout);
                Ok(Lowered {
                    node: node(
                        label,
                        NodeKind::Selection {
                            rank,
                            k: *k,
                            input: Box::new(inner.node),
                        },
                    ),
                    ..inner
                })
            }
            LogicalOp::UpdateState {
                category,
                sim,
                k,
                feedback,
                input,
            } => {
                let saved = self.feedback_target.clone();
                if self.options.feedback {
                    self.feedback_target = feedback.clone();
                }
                let inner = self.lower(input, outer, hint);
                self.feedback_target = saved;
                let inner = inner?;
                let category = PhysExpr::compile(&Expr::Column(category.clone()), &inner.layout)?;
                let sim = PhysExpr::compile(&Expr::Column(sim.clone()), &inner.layout)?;
                Ok(Lowered {
                    node: node(
                        label,
                        NodeKind::UpdateState {
                            category,
                            sim,
                            k: *k,
                            input: Box::new(inner.node),
                        },
                    ),
                    ..inner
                })
            }
            LogicalOp::Project { items, input, .. } => {
                let inner = self.lower(input, outer, Hint::None)?;
                let fields = output_fields(op, self.catalog, &outer.all_fields())?;
                let mut layout = inner.layout.clone();
                layout.local.clear();
                let mut computed = Vec::new();
                for (item, field) in items.iter().zip(fields) {
                    let slot = match &item.expr {
                        Expr::Column(c) => inner.layout.resolve(c)?.1,
                        other => {
                            computed.push(PhysExpr::compile(other, &inner.layout)?);
                            layout.extra_count += 1;
                            Slot::Extra(layout.extra_count - 1)
                        }
                    };
                    layout.local.push((field, slot));
                }
                Ok(Lowered {
                    node: node(
                        label,
                        NodeKind::Project {
                            computed,
                            input: Box::new(inner.node),
                        },
                    ),
                    layout,
                    ..inner
                })
            }
            LogicalOp::Join {
                kind: JoinKind::Dependent,
                condition,
                left,
                right,
            } => {
                let l = self.lower(left, outer, Hint::None)?;
                let r = self.lower(right, &l.layout.as_outer(), Hint::None)?;
                let mut layout = r.layout.clone();
                layout.outer = l.layout.outer.clone();
                let mut local = l.layout.local.clone();
                local.extend(r.layout.local.iter().cloned());
                layout.local = local;
                layout.score_extras.clear();
                let parallel = self.options.threads > 1 && !r.node.contains_update_state();
                let mut joined = node(
                    label.clone(),
                    NodeKind::DependentJoin {
                        left: Box::new(l.node),
                        right: Box::new(r.node),
                        parallel,
                    },
                );
                if let Some(c) = condition {
                    joined = node(
                        label,
                        NodeKind::Filter {
                            predicate: PhysExpr::compile(c, &layout)?,
                            input: Box::new(joined),
                        },
                    );
                }
                Ok(Lowered {
                    node: joined,
                    layout,
                    score_of: None,
                    topk_stream: false,
                })
            }
            LogicalOp::Join {
                kind: JoinKind::Inner,
                condition,
                left,
                right,
            } => self.lower_inner_join(condition.as_ref(), left, right, outer, label),
        }
    }

    fn lower_scan(&mut self, table: &str, outer: &Layout, hint: Hint, label: String) -> Result<Lowered> {
        let data: Arc<Table> = table_of(self.catalog, table)?;
        let fields = output_fields(&LogicalOp::scan(table), self.catalog, &[])?;
        let rel = outer.rels.len();
        let mut layout = outer.clone();
        layout.rels.push(data.clone());
        layout.outer = outer.all_pairs();
        layout.local = fields
            .iter()
            .enumerate()
            .map(|(col, f)| (f.clone(), Slot::Base { rel, col }))
            .collect();
        layout.score_extras.clear();
        let vector_column = data.schema().vector_column().map(|(c, _)| c);
        let mode = self.options.mode;
        let query = |d: &DistanceExpr| -> Result<PhysExpr> {
            let q = self.query_side(d, &fields);
            PhysExpr::compile(q, &Layout {
                local: Vec::new(),
                ..layout.clone()
            })
        };
        let (kind, score_of, topk_stream) = match (&hint, mode) {
            (Hint::None, _) => (SourceKind::TableScan, None, false),
            (Hint::Topk { distance, .. }, ExecMode::Ann) => (
                SourceKind::AnnTopk {
                    index: self.index_for(table, distance, &label)?,
                    query: query(distance)?,
                    lookahead: self.options.lookahead,
                },
                Some(distance.clone()),
                true,
            ),
            (Hint::Topk { distance, .. }, ExecMode::Exact) => (
                SourceKind::ExactTopk {
                    column: vector_column.expect("searchable scan has a vector column"),
                    query: query(distance)?,
                    metric: distance.metric,
                },
                Some(distance.clone()),
                true,
            ),
            (Hint::Topk { distance, k }, ExecMode::Unoptimized) => match self.catalog.get(table)?.index.clone() {
                Some(index) if index.metric() == distance.metric => (
                    SourceKind::IndexBatch {
                        index,
                        query: query(distance)?,
                        fetch: k.saturating_mul(BATCH_OVERFETCH),
                    },
                    None,
                    false,
                ),
                _ => (SourceKind::TableScan, None, false),
            },
            (Hint::Range { distance, radius }, ExecMode::Ann) => {
                let patience = self
                    .options
                    .patience
                    .unwrap_or_else(|| self.catalog.get(table).ok().and_then(|e| e.index.clone()).map_or(1, |i| i.params().ef_search));
                (
                    SourceKind::AnnRange {
                        index: self.index_for(table, distance, &label)?,
                        query: query(distance)?,
                        radius: *radius,
                        patience: patience.max(1),
                        feedback: self.feedback_target.as_deref() == Some(table),
                    },
                    Some(distance.clone()),
                    false,
                )
            }
            (Hint::Range { distance, radius }, _) => (
                SourceKind::ExactRange {
                    column: vector_column.expect("searchable scan has a vector column"),
                    query: query(distance)?,
                    metric: distance.metric,
                    radius: *radius,
                    feedback: self.feedback_target.as_deref() == Some(table),
                },
                Some(distance.clone()),
                false,
            ),
        };
        Ok(Lowered {
            node: node(label, NodeKind::Source { table: data, kind }),
            layout,
            score_of,
            topk_stream,
        })
    }

    fn lower_sort(
        &mut self,
        keys: &[Expr],
        limit: Option<usize>,
        input: &LogicalOp,
        outer: &Layout,
        label: String,
    ) -> Result<Lowered> {
        let mut hint = Hint::None;
        if let (Some(k), [key]) = (limit, keys) {
            if let Some(table) = chain_scan(input) {
                let outer_fields = outer.all_fields();
                let fields = output_fields(input, self.catalog, &outer_fields)?;
                let distance = match key {
                    Expr::Distance(d) => Some(d.clone()),
                    Expr::Column(c) => map_definition(input, &c.name),
                    _ => None,
                };
                if let Some(d) = distance {
                    let base_fields = output_fields(&LogicalOp::scan(table), self.catalog, &[])?;
                    let searchable = self.searchable(&d, table, &base_fields, &outer_fields)
                        || self.searchable(&d, table, &fields, &outer_fields);
                    let batch_ok = self.options.mode != ExecMode::Unoptimized
                        || matches!(self.query_side(&d, &base_fields), Expr::Param { .. });
                    if searchable && batch_ok {
                        hint = Hint::Topk { distance: d, k };
                    }
                }
            }
        }
        let inner = self.lower(input, outer, hint)?;
        let compiled = keys
            .iter()
            .map(|e| PhysExpr::compile(e, &inner.layout))
            .collect::<Result<Vec<_>>>()?;
        let early_stop = inner.topk_stream
            && limit.is_some()
            && match keys {
                [Expr::Distance(d)] => inner.score_of.as_ref().is_some_and(|s| s.same_operands(d)),
                [Expr::Column(c)] => matches!(
                    inner.layout.resolve(c)?.1,
                    Slot::Extra(i) if inner.layout.score_extras.contains(&i)
                ),
                _ => false,
            };
        Ok(Lowered {
            node: node(
                label,
                NodeKind::Sort {
                    keys: compiled,
                    limit,
                    early_stop,
                    input: Box::new(inner.node),
                },
            ),
            layout: inner.layout,
            score_of: None,
            topk_stream: false,
        })
    }

    fn lower_inner_join(
        &mut self,
        condition: Option<&Expr>,
        left: &LogicalOp,
        right: &LogicalOp,
        outer: &Layout,
        label: String,
    ) -> Result<Lowered> {
        let outer_fields = outer.all_fields();
        let left_fields = output_fields(left, self.catalog, &outer_fields)?;
        let right_fields = output_fields(right, self.catalog, &outer_fields)?;
        let conjuncts: Vec<Expr> = condition.map(|c| c.conjuncts().into_iter().cloned().collect()).unwrap_or_default();

        // A distance bound against a scanned relation becomes a range search
        // per left tuple.
        if self.options.mode != ExecMode::Unoptimized {
            if let Some(table) = chain_scan(right) {
                let mut scope = outer_fields.clone();
                scope.extend(left_fields.iter().cloned());
                let ranged = conjuncts.iter().any(|t| {
                    t.as_distance_bound().is_some_and(|(d, r)| {
                        constant_f64(r).is_some() && self.searchable(d, table, &right_fields, &scope)
                    })
                });
                if ranged {
                    let rewritten = LogicalOp::Join {
                        kind: JoinKind::Dependent,
                        condition: None,
                        left: Box::new(left.clone()),
                        right: Box::new(LogicalOp::Filter {
                            predicate: condition.expect("has conjuncts").clone(),
                            input: Box::new(right.clone()),
                        }),
                    };
                    let mut lowered = self.lower(&rewritten, outer, Hint::None)?;
                    lowered.node.label = label;
                    return Ok(lowered);
                }
            }
        }

        let l = self.lower(left, outer, Hint::None)?;
        let r = self.lower(right, outer, Hint::None)?;
        let skip = (outer.rels.len(), outer.extra_count);
        let mut layout = l.layout.clone();
        let rel_shift = l.layout.rels.len() - skip.0;
        let extra_shift = l.layout.extra_count - skip.1;
        layout.rels.extend(r.layout.rels[skip.0..].iter().cloned());
        layout.extra_count += r.layout.extra_count - skip.1;
        for (f, slot) in &r.layout.local {
            let shifted = match *slot {
                Slot::Base { rel, col } if rel >= skip.0 => Slot::Base {
                    rel: rel + rel_shift,
                    col,
                },
                Slot::Extra(i) if i >= skip.1 => Slot::Extra(i + extra_shift),
                other => other,
            };
            layout.local.push((f.clone(), shifted));
        }
        layout.score_extras.clear();

        let side = |e: &Expr, fields: &[Field]| e.columns().iter().all(|c| resolve(fields, &[], c).is_ok()) && !e.columns().is_empty();
        let mut probe_keys = Vec::new();
        let mut build_keys = Vec::new();
        let mut residual = Vec::new();
        for t in conjuncts {
            if let Expr::Compare {
                op: CmpOp::Eq,
                left: a,
                right: b,
            } = &t
            {
                if side(a, &left_fields) && side(b, &right_fields) {
                    probe_keys.push(PhysExpr::compile(a, &l.layout)?);
                    build_keys.push(PhysExpr::compile(b, &r.layout)?);
                    continue;
                }
                if side(b, &left_fields) && side(a, &right_fields) {
                    probe_keys.push(PhysExpr::compile(b, &l.layout)?);
                    build_keys.push(PhysExpr::compile(a, &r.layout)?);
                    continue;
                }
            }
            residual.push(t);
        }
        let residual = if residual.is_empty() {
            None
        } else {
            Some(PhysExpr::compile(&Expr::and(residual), &layout)?)
        };
        let kind = if probe_keys.is_empty() {
            NodeKind::NestedLoopJoin {
                condition: residual,
                left: Box::new(l.node),
                right: Box::new(r.node),
                skip,
            }
        } else {
            NodeKind::HashJoin {
                probe_keys,
                build_keys,
                residual,
                left: Box::new(l.node),
                right: Box::new(r.node),
                skip,
            }
        };
        Ok(Lowered {
            node: node(label, kind),
            layout,
            score_of: None,
            topk_stream: false,
        })
    }
}

/// Expression a Map in the chain assigns to `name`, if it is a distance.
fn map_definition(op: &LogicalOp, name: &str) -> Option<DistanceExpr> {
    match op {
        LogicalOp::Map { items, input } => items
            .iter()
            .find(|i| i.name == name)
            .and_then(|i| i.expr.as_distance().cloned())
            .or_else(|| map_definition(input, name)),
        LogicalOp::Filter { input, .. } => map_definition(input, name),
        _ => None,
    }
}

impl Layout {
    fn all_pairs(&self) -> Vec<(Field, Slot)> {
        let mut v = self.outer.clone();
        v.extend(self.local.iter().cloned());
        v
    }

    pub(crate) fn all_fields(&self) -> Vec<Field> {
        self.all_pairs().into_iter().map(|(f, _)| f).collect()
    }
}

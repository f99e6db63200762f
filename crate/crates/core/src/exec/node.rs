use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use crate::data::{add_distance_calls, distance_calls, Metric, RowId, ScalarValue, Table};
use crate::error::{Error, Result};
use crate::index::HnswIndex;

use super::expr::PhysExpr;
use super::record_table::RecordTable;
use super::stats::OperatorStats;
use super::tuple::ScoredTuple;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Flow {
    Continue,
    Stop,
}

/// Access path of a pipeline source.
#[derive(Debug, Clone)]
pub enum SourceKind {
    TableScan,
    AnnTopk {
        index: Arc<HnswIndex>,
        query: PhysExpr,
        lookahead: usize,
    },
    AnnRange {
        index: Arc<HnswIndex>,
        query: PhysExpr,
        radius: f64,
        patience: usize,
        feedback: bool,
    },
    ExactTopk {
        column: usize,
        query: PhysExpr,
        metric: Metric,
    },
    ExactRange {
        column: usize,
        query: PhysExpr,
        metric: Metric,
        radius: f64,
        feedback: bool,
    },
    /// Fixed-size index probe whose scores are discarded.
    IndexBatch {
        index: Arc<HnswIndex>,
        query: PhysExpr,
        fetch: usize,
    },
}

#[derive(Debug, Clone)]
pub enum MapKind {
    /// Copies the score reported by the source.
    FromScore,
    Compute(PhysExpr),
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Source {
        table: Arc<Table>,
        kind: SourceKind,
    },
    Filter {
        predicate: PhysExpr,
        input: Box<PhysNode>,
    },
    Map {
        items: Vec<MapKind>,
        input: Box<PhysNode>,
    },
    UpdateState {
        category: PhysExpr,
        sim: PhysExpr,
        k: usize,
        input: Box<PhysNode>,
    },
    Limit {
        count: usize,
        input: Box<PhysNode>,
    },
    Sort {
        keys: Vec<PhysExpr>,
        limit: Option<usize>,
        /// Input is a top-k stream ordered like the first key.
        early_stop: bool,
        input: Box<PhysNode>,
    },
    Window {
        partition_by: Vec<PhysExpr>,
        order_by: Vec<PhysExpr>,
        input: Box<PhysNode>,
    },
    Selection {
        rank: PhysExpr,
        k: usize,
        input: Box<PhysNode>,
    },
    Project {
        computed: Vec<PhysExpr>,
        input: Box<PhysNode>,
    },
    HashJoin {
        probe_keys: Vec<PhysExpr>,
        build_keys: Vec<PhysExpr>,
        residual: Option<PhysExpr>,
        left: Box<PhysNode>,
        right: Box<PhysNode>,
        skip: (usize, usize),
    },
    NestedLoopJoin {
        condition: Option<PhysExpr>,
        left: Box<PhysNode>,
        right: Box<PhysNode>,
        skip: (usize, usize),
    },
    /// Runs `right` once per `left` tuple with that tuple as outer context.
    DependentJoin {
        left: Box<PhysNode>,
        right: Box<PhysNode>,
        parallel: bool,
    },
}

#[derive(Debug, Clone)]
pub struct PhysNode {
    pub id: usize,
    pub label: String,
    pub kind: NodeKind,
}

/// Per-thread execution context.
pub(crate) struct Cx {
    pub stats: RefCell<Vec<OperatorStats>>,
    pub threads: usize,
}

impl Cx {
    pub fn new(names: &[String], threads: usize) -> Self {
        Self {
            stats: RefCell::new(
                names
                    .iter()
                    .map(|n| OperatorStats {
                        name: n.clone(),
                        ..Default::default()
                    })
                    .collect(),
            ),
            threads,
        }
    }

    fn with(&self, id: usize, f: impl FnOnce(&mut OperatorStats)) {
        f(&mut self.stats.borrow_mut()[id]);
    }

    fn tuple_in(&self, id: usize) {
        self.with(id, |s| s.tuples_in += 1);
    }

    fn tuple_out(&self, id: usize) {
        self.with(id, |s| s.tuples_out += 1);
    }

    fn calls(&self, id: usize, n: u64) {
        if n > 0 {
            self.with(id, |s| s.distance_calls += n);
        }
    }
}

/// State threaded along one pipeline.
#[derive(Clone, Copy, Default)]
pub(crate) struct Pipe<'a> {
    /// Progress table written by an UpdateState stage downstream.
    pub feedback: Option<&'a RefCell<RecordTable>>,
    /// K-th best `(distance, row)` held by a top-k sort downstream.
    pub threshold: Option<&'a Cell<Option<(f64, RowId)>>>,
}

type Emit<'e> = dyn FnMut(ScoredTuple) -> Result<Flow> + 'e;

fn counted<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let before = distance_calls();
    let out = f();
    (out, distance_calls() - before)
}

fn beyond(bound: Option<(f64, RowId)>, threshold: Option<(f64, RowId)>) -> bool {
    match (bound, threshold) {
        (_, None) => false,
        (None, Some(_)) => true,
        (Some((d, r)), Some((td, tr))) => d.total_cmp(&td).then(r.cmp(&tr)) == Ordering::Greater,
    }
}

fn context(label: &str, e: Error) -> Error {
    match e {
        Error::Exec { context, message } if !context.contains('/') => Error::Exec {
            context: format!("{label}/{context}"),
            message,
        },
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SortKey(f64, RowId);

impl Eq for SortKey {}

impl PartialOrd for SortKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SortKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

fn combine(left: &ScoredTuple, right: &ScoredTuple, skip: (usize, usize)) -> ScoredTuple {
    let mut t = left.clone();
    t.rows.extend_from_slice(&right.rows[skip.0..]);
    t.extras.extend(right.extras[skip.1..].iter().cloned());
    t.score = None;
    t
}

fn exact_candidates(
    table: &Table,
    column: usize,
    query: &[f32],
    metric: Metric,
    radius: Option<f64>,
) -> Result<Vec<(f64, RowId)>> {
    let mut all = Vec::with_capacity(table.row_count());
    for row in 0..table.row_count() as RowId {
        let v = table.vector_at(column, row);
        if v.len() != query.len() {
            return Err(Error::Dimension {
                expected: v.len(),
                actual: query.len(),
            });
        }
        let d = metric.eval(v, query);
        if radius.is_none_or(|r| d <= r) {
            all.push((d, row));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(all)
}

impl PhysNode {
    pub fn children(&self) -> Vec<&PhysNode> {
        match &self.kind {
            NodeKind::Source { .. } => vec![],
            NodeKind::Filter { input, .. }
            | NodeKind::Map { input, .. }
            | NodeKind::UpdateState { input, .. }
            | NodeKind::Limit { input, .. }
            | NodeKind::Sort { input, .. }
            | NodeKind::Window { input, .. }
            | NodeKind::Selection { input, .. }
            | NodeKind::Project { input, .. } => vec![input],
            NodeKind::HashJoin { left, right, .. }
            | NodeKind::NestedLoopJoin { left, right, .. }
            | NodeKind::DependentJoin { left, right, .. } => vec![left, right],
        }
    }

    pub(crate) fn children_mut(&mut self) -> Vec<&mut PhysNode> {
        match &mut self.kind {
            NodeKind::Source { .. } => vec![],
            NodeKind::Filter { input, .. }
            | NodeKind::Map { input, .. }
            | NodeKind::UpdateState { input, .. }
            | NodeKind::Limit { input, .. }
            | NodeKind::Sort { input, .. }
            | NodeKind::Window { input, .. }
            | NodeKind::Selection { input, .. }
            | NodeKind::Project { input, .. } => vec![input],
            NodeKind::HashJoin { left, right, .. }
            | NodeKind::NestedLoopJoin { left, right, .. }
            | NodeKind::DependentJoin { left, right, .. } => vec![left, right],
        }
    }

    /// Operator name used in stats and pipeline listings.
    pub fn name(&self) -> &'static str {
        match &self.kind {
            NodeKind::Source { kind, .. } => match kind {
                SourceKind::TableScan => "TableScan",
                SourceKind::AnnTopk { .. } => "AnnTopkScan",
                SourceKind::AnnRange { .. } => "AnnRangeScan",
                SourceKind::ExactTopk { .. } => "ExactTopkScan",
                SourceKind::ExactRange { .. } => "ExactRangeScan",
                SourceKind::IndexBatch { .. } => "IndexBatch",
            },
            NodeKind::Filter { .. } => "Filter",
            NodeKind::Map { .. } => "Map",
            NodeKind::UpdateState { .. } => "UpdateState",
            NodeKind::Limit { .. } => "Limit",
            NodeKind::Sort { .. } => "SortSink",
            NodeKind::Window { .. } => "WindowSink",
            NodeKind::Selection { .. } => "Selection",
            NodeKind::Project { .. } => "Project",
            NodeKind::HashJoin { .. } => "HashJoin",
            NodeKind::NestedLoopJoin { .. } => "NestedLoopJoin",
            NodeKind::DependentJoin { .. } => "DependentJoin",
        }
    }

    pub(crate) fn contains_update_state(&self) -> bool {
        matches!(self.kind, NodeKind::UpdateState { .. }) || self.children().iter().any(|c| c.contains_update_state())
    }

    pub(crate) fn run(&self, cx: &Cx, outer: Option<&ScoredTuple>, pipe: Pipe<'_>, emit: &mut Emit<'_>) -> Result<Flow> {
        self.run_inner(cx, outer, pipe, emit).map_err(|e| context(&self.label, e))
    }

    fn run_inner(&self, cx: &Cx, outer: Option<&ScoredTuple>, pipe: Pipe<'_>, emit: &mut Emit<'_>) -> Result<Flow> {
        let id = self.id;
        match &self.kind {
            NodeKind::Source { table, kind } => self.run_source(cx, table, kind, outer, pipe, emit),
            NodeKind::Filter { predicate, input } => input.run(cx, outer, pipe, &mut |t| {
                cx.tuple_in(id);
                let (keep, calls) = counted(|| predicate.test(&t));
                cx.calls(id, calls);
                if keep? {
                    cx.tuple_out(id);
                    emit(t)
                } else {
                    Ok(Flow::Continue)
                }
            }),
            NodeKind::Map { items, input } => input.run(cx, outer, pipe, &mut |mut t| {
                cx.tuple_in(id);
                for item in items {
                    let v = match item {
                        MapKind::FromScore => {
                            let s = t.score.ok_or_else(|| Error::exec("Map", "tuple carries no score"))?;
                            ScalarValue::Float(s)
                        }
                        MapKind::Compute(e) => {
                            let (v, calls) = counted(|| e.scalar(&t));
                            cx.calls(id, calls);
                            v?
                        }
                    };
                    t.extras.push(v);
                }
                cx.tuple_out(id);
                emit(t)
            }),
            NodeKind::UpdateState {
                category,
                sim,
                k,
                input,
            } => {
                let table = RefCell::new(RecordTable::new(*k));
                let inner = Pipe {
                    feedback: Some(&table),
                    threshold: pipe.threshold,
                };
                input.run(cx, outer, inner, &mut |t| {
                    cx.tuple_in(id);
                    let c = category
                        .scalar(&t)
                        .map_err(|e| Error::exec("UpdateState", format!("category: {e}")))?;
                    let s = sim.float(&t).map_err(|e| Error::exec("UpdateState", format!("sim: {e}")))?;
                    table.borrow_mut().update(&c, s);
                    cx.tuple_out(id);
                    emit(t)
                })
            }
            NodeKind::Limit { count, input } => {
                let mut seen = 0;
                let mut downstream = Flow::Continue;
                if *count == 0 {
                    return Ok(Flow::Continue);
                }
                input.run(cx, outer, pipe, &mut |t| {
                    cx.tuple_in(id);
                    seen += 1;
                    cx.tuple_out(id);
                    downstream = emit(t)?;
                    if downstream == Flow::Stop || seen >= *count {
                        return Ok(Flow::Stop);
                    }
                    Ok(Flow::Continue)
                })?;
                Ok(downstream)
            }
            NodeKind::Sort {
                keys,
                limit,
                early_stop,
                input,
            } => {
                let mut buf: Vec<(Vec<ScalarValue>, ScoredTuple)> = Vec::new();
                let threshold = Cell::new(None);
                let k = limit.filter(|_| *early_stop);
                let mut best: BinaryHeap<SortKey> = BinaryHeap::new();
                let inner = Pipe {
                    feedback: pipe.feedback,
                    threshold: k.map(|_| &threshold),
                };
                if limit == &Some(0) {
                    return Ok(Flow::Continue);
                }
                input.run(cx, outer, inner, &mut |t| {
                    cx.tuple_in(id);
                    let (vals, calls) = counted(|| keys.iter().map(|e| e.scalar(&t)).collect::<Result<Vec<_>>>());
                    cx.calls(id, calls);
                    let vals = vals?;
                    if let Some(k) = k {
                        let key = vals[0]
                            .as_f64()
                            .ok_or_else(|| Error::exec("SortSink", "top-k key is not numeric"))?;
                        best.push(SortKey(key, *t.rows.last().expect("base row")));
                        if best.len() > k {
                            best.pop();
                        }
                        if best.len() >= k {
                            threshold.set(best.peek().map(|s| (s.0, s.1)));
                        }
                    }
                    buf.push((vals, t));
                    Ok(Flow::Continue)
                })?;
                buf.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.rows.cmp(&b.1.rows)));
                if let Some(l) = limit {
                    buf.truncate(*l);
                }
                for (_, t) in buf {
                    cx.tuple_out(id);
                    if emit(t)? == Flow::Stop {
                        return Ok(Flow::Stop);
                    }
                }
                Ok(Flow::Continue)
            }
            NodeKind::Window {
                partition_by,
                order_by,
                input,
            } => {
                type Entry = (Vec<ScalarValue>, ScoredTuple);
                let mut parts: HashMap<Vec<ScalarValue>, Vec<Entry>> = HashMap::new();
                input.run(cx, outer, Pipe::default(), &mut |t| {
                    cx.tuple_in(id);
                    let (keys, calls) = counted(|| -> Result<_> {
                        let p = partition_by.iter().map(|e| e.scalar(&t)).collect::<Result<Vec<_>>>()?;
                        let o = order_by.iter().map(|e| e.scalar(&t)).collect::<Result<Vec<_>>>()?;
                        Ok((p, o))
                    });
                    cx.calls(id, calls);
                    let (p, o) = keys?;
                    parts.entry(p).or_default().push((o, t));
                    Ok(Flow::Continue)
                })?;
                let mut keys: Vec<_> = parts.keys().cloned().collect();
                keys.sort();
                for key in keys {
                    let mut part = parts.remove(&key).expect("key listed");
                    part.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.rows.cmp(&b.1.rows)));
                    for (rank, (_, mut t)) in part.into_iter().enumerate() {
                        t.extras.push(ScalarValue::Int(rank as i64 + 1));
                        cx.tuple_out(id);
                        if emit(t)? == Flow::Stop {
                            return Ok(Flow::Stop);
                        }
                    }
                }
                Ok(Flow::Continue)
            }
            NodeKind::Selection { rank, k, input } => input.run(cx, outer, pipe, &mut |t| {
                cx.tuple_in(id);
                let r = rank
                    .scalar(&t)?
                    .as_i64()
                    .ok_or_else(|| Error::exec("Selection", "rank is not an integer"))?;
                if r <= *k as i64 {
                    cx.tuple_out(id);
                    emit(t)
                } else {
                    Ok(Flow::Continue)
                }
            }),
            NodeKind::Project { computed, input } => input.run(cx, outer, pipe, &mut |mut t| {
                cx.tuple_in(id);
                for e in computed {
                    let (v, calls) = counted(|| e.scalar(&t));
                    cx.calls(id, calls);
                    t.extras.push(v?);
                }
                cx.tuple_out(id);
                emit(t)
            }),
            NodeKind::HashJoin {
                probe_keys,
                build_keys,
                residual,
                left,
                right,
                skip,
            } => {
                let mut table: HashMap<Vec<ScalarValue>, Vec<ScoredTuple>> = HashMap::new();
                right.run(cx, outer, Pipe::default(), &mut |t| {
                    let key = build_keys.iter().map(|e| e.scalar(&t)).collect::<Result<Vec<_>>>()?;
                    if !key.iter().any(ScalarValue::is_null) {
                        table.entry(key).or_default().push(t);
                    }
                    Ok(Flow::Continue)
                })?;
                left.run(cx, outer, Pipe::default(), &mut |t| {
                    cx.tuple_in(id);
                    let key = probe_keys.iter().map(|e| e.scalar(&t)).collect::<Result<Vec<_>>>()?;
                    let Some(matches) = table.get(&key) else {
                        return Ok(Flow::Continue);
                    };
                    for m in matches {
                        let joined = combine(&t, m, *skip);
                        if let Some(r) = residual {
                            let (keep, calls) = counted(|| r.test(&joined));
                            cx.calls(id, calls);
                            if !keep? {
                                continue;
                            }
                        }
                        cx.tuple_out(id);
                        if emit(joined)? == Flow::Stop {
                            return Ok(Flow::Stop);
                        }
                    }
                    Ok(Flow::Continue)
                })
            }
            NodeKind::NestedLoopJoin {
                condition,
                left,
                right,
                skip,
            } => {
                let mut inner = Vec::new();
                right.run(cx, outer, Pipe::default(), &mut |t| {
                    inner.push(t);
                    Ok(Flow::Continue)
                })?;
                left.run(cx, outer, Pipe::default(), &mut |t| {
                    cx.tuple_in(id);
                    for m in &inner {
                        let joined = combine(&t, m, *skip);
                        if let Some(c) = condition {
                            let (keep, calls) = counted(|| c.test(&joined));
                            cx.calls(id, calls);
                            if !keep? {
                                continue;
                            }
                        }
                        cx.tuple_out(id);
                        if emit(joined)? == Flow::Stop {
                            return Ok(Flow::Stop);
                        }
                    }
                    Ok(Flow::Continue)
                })
            }
            NodeKind::DependentJoin { left, right, parallel } => {
                if *parallel && cx.threads > 1 {
                    return self.run_parallel(cx, left, right, outer, emit);
                }
                left.run(cx, outer, Pipe::default(), &mut |t| {
                    cx.tuple_in(id);
                    let mut downstream = Flow::Continue;
                    right.run(cx, Some(&t), Pipe::default(), &mut |inner| {
                        cx.tuple_out(id);
                        downstream = emit(inner)?;
                        Ok(downstream)
                    })?;
                    Ok(downstream)
                })
            }
        }
    }

    fn run_parallel(
        &self,
        cx: &Cx,
        left: &PhysNode,
        right: &PhysNode,
        outer: Option<&ScoredTuple>,
        emit: &mut Emit<'_>,
    ) -> Result<Flow> {
        let mut outers = Vec::new();
        left.run(cx, outer, Pipe::default(), &mut |t| {
            outers.push(t);
            Ok(Flow::Continue)
        })?;
        if outers.is_empty() {
            return Ok(Flow::Continue);
        }
        let names: Vec<String> = cx.stats.borrow().iter().map(|s| s.name.clone()).collect();
        let workers = cx.threads.min(outers.len());
        let chunk = outers.len().div_ceil(workers);
        type Part = (Vec<Vec<ScoredTuple>>, Vec<OperatorStats>, u64);
        let parts: Vec<Result<Part>> = std::thread::scope(|s| {
            let handles: Vec<_> = outers
                .chunks(chunk)
                .map(|slice| {
                    let names = &names;
                    s.spawn(move || -> Result<Part> {
                        let local = Cx::new(names, 1);
                        let before = distance_calls();
                        let mut results = Vec::with_capacity(slice.len());
                        for t in slice {
                            let mut out = Vec::new();
                            right.run(&local, Some(t), Pipe::default(), &mut |inner| {
                                out.push(inner);
                                Ok(Flow::Continue)
                            })?;
                            results.push(out);
                        }
                        let calls = distance_calls() - before;
                        Ok((results, local.stats.into_inner(), calls))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut batches = Vec::with_capacity(outers.len());
        for part in parts {
            let (results, stats, calls) = part?;
            add_distance_calls(calls);
            let mut mine = cx.stats.borrow_mut();
            for (a, b) in mine.iter_mut().zip(&stats) {
                a.merge(b);
            }
            batches.extend(results);
        }
        for batch in batches {
            cx.tuple_in(self.id);
            for t in batch {
                cx.tuple_out(self.id);
                if emit(t)? == Flow::Stop {
                    return Ok(Flow::Stop);
                }
            }
        }
        Ok(Flow::Continue)
    }

    fn run_source(
        &self,
        cx: &Cx,
        table: &Table,
        kind: &SourceKind,
        outer: Option<&ScoredTuple>,
        pipe: Pipe<'_>,
        emit: &mut Emit<'_>,
    ) -> Result<Flow> {
        let id = self.id;
        let empty = ScoredTuple::default();
        let context_tuple = outer.unwrap_or(&empty);
        let mut push = |row: RowId, score: Option<f64>| -> Result<Flow> {
            cx.with(id, |s| {
                s.tuples_out += 1;
            });
            emit(ScoredTuple::extend(outer, row, score))
        };
        let stop_requested = |emitted: usize, feedback: bool| -> bool {
            feedback && pipe.feedback.is_some_and(|rt| rt.borrow().allows_stop(emitted))
        };
        match kind {
            SourceKind::TableScan => {
                for row in 0..table.row_count() as RowId {
                    cx.with(id, |s| s.tuples_scanned += 1);
                    if push(row, None)? == Flow::Stop {
                        return Ok(Flow::Stop);
                    }
                }
            }
            SourceKind::AnnTopk { index, query, lookahead } => {
                let q = query.vector(context_tuple)?;
                let mut cursor = index.topk_cursor(q)?.with_lookahead(*lookahead);
                loop {
                    if let Some(th) = pipe.threshold {
                        if beyond(cursor.peek_distance(), th.get()) {
                            break;
                        }
                    }
                    let (next, calls) = counted(|| cursor.next_candidate());
                    cx.calls(id, calls);
                    let Some(n) = next else { break };
                    cx.with(id, |s| s.tuples_scanned += 1);
                    if push(n.row, Some(n.distance))? == Flow::Stop {
                        return Ok(Flow::Stop);
                    }
                }
            }
            SourceKind::AnnRange {
                index,
                query,
                radius,
                patience,
                feedback,
            } => {
                let q = query.vector(context_tuple)?;
                let mut cursor = index.range_cursor(q, *radius, *patience)?;
                let mut emitted = 0;
                loop {
                    let probes = cursor.probes();
                    let (next, calls) = counted(|| cursor.next_in_range_until(|| stop_requested(emitted, *feedback)));
                    cx.calls(id, calls);
                    let scanned = (cursor.probes() - probes) as u64;
                    cx.with(id, |s| s.tuples_scanned += scanned);
                    let Some(n) = next else { break };
                    emitted += 1;
                    if push(n.row, Some(n.distance))? == Flow::Stop {
                        return Ok(Flow::Stop);
                    }
                }
            }
            SourceKind::ExactTopk { column, query, metric } => {
                let q = query.vector(context_tuple)?;
                let (all, calls) = counted(|| exact_candidates(table, *column, q, *metric, None));
                cx.calls(id, calls);
                let all = all?;
                for (i, &(d, row)) in all.iter().enumerate() {
                    if let Some(th) = pipe.threshold {
                        if beyond(Some((d, row)), th.get()) {
                            break;
                        }
                    }
                    let _ = i;
                    cx.with(id, |s| s.tuples_scanned += 1);
                    if push(row, Some(d))? == Flow::Stop {
                        return Ok(Flow::Stop);
                    }
                }
            }
            SourceKind::ExactRange {
                column,
                query,
                metric,
                radius,
                feedback,
            } => {
                let q = query.vector(context_tuple)?;
                let (all, calls) = counted(|| exact_candidates(table, *column, q, *metric, Some(*radius)));
                cx.calls(id, calls);
                for (emitted, &(d, row)) in all?.iter().enumerate() {
                    if stop_requested(emitted, *feedback) {
                        break;
                    }
                    cx.with(id, |s| s.tuples_scanned += 1);
                    if push(row, Some(d))? == Flow::Stop {
                        return Ok(Flow::Stop);
                    }
                }
            }
            SourceKind::IndexBatch { index, query, fetch } => {
                let q = query.vector(context_tuple)?;
                let ef = index.params().ef_search.max(*fetch);
                let (hits, calls) = counted(|| index.search_topk_ef(q, *fetch, ef));
                cx.calls(id, calls);
                for n in hits? {
                    cx.with(id, |s| s.tuples_scanned += 1);
                    if push(n.row, None)? == Flow::Stop {
                        return Ok(Flow::Stop);
                    }
                }
            }
        }
        Ok(Flow::Continue)
    }
}

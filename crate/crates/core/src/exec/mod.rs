//! Physical operators and the lowering from logical plans.

mod expr;
mod lower;
mod node;
mod record_table;
mod stats;
mod tuple;

use std::fmt;
use std::str::FromStr;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::index::DEFAULT_LOOKAHEAD;
use crate::plan::LogicalOp;

pub use expr::PhysExpr;
pub use lower::{lower, BATCH_OVERFETCH};
pub use node::{MapKind, NodeKind, PhysNode, SourceKind};
pub use record_table::{CategoryState, RecordTable, RECENT_WINDOW};
pub use stats::{ExecStats, OperatorStats};
pub use tuple::{Layout, ResultSet, ScoredTuple, Slot};

use node::{Cx, Flow, Pipe};

/// Access-path strategy for similarity predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecMode {
    /// Index cursors (approximate).
    Ann,
    /// Brute-force ordered streams with the same operator shapes.
    Exact,
    /// Conventional plans: a fixed-size index probe or a full scan, then a
    /// full sort.
    Unoptimized,
}

impl fmt::Display for ExecMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExecMode::Ann => "ann",
            ExecMode::Exact => "exact",
            ExecMode::Unoptimized => "unoptimized",
        })
    }
}

impl FromStr for ExecMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ann" => Ok(ExecMode::Ann),
            "exact" => Ok(ExecMode::Exact),
            "unoptimized" => Ok(ExecMode::Unoptimized),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecOptions {
    pub mode: ExecMode,
    /// Range-cursor patience; the index's search width when unset.
    pub patience: Option<usize>,
    /// Lets UpdateState stop range scans early.
    pub feedback: bool,
    pub threads: usize,
    pub lookahead: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            mode: ExecMode::Ann,
            patience: None,
            feedback: true,
            threads: 1,
            lookahead: DEFAULT_LOOKAHEAD,
        }
    }
}

impl ExecOptions {
    pub fn new(mode: ExecMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

/// An executable operator tree.
#[derive(Debug, Clone)]
pub struct PhysicalPlan {
    pub root: PhysNode,
    pub layout: Layout,
    /// Operator names by node id.
    pub names: Vec<String>,
    pub threads: usize,
}

impl PhysicalPlan {
    pub fn execute(&self) -> Result<(ResultSet, ExecStats)> {
        let cx = Cx::new(&self.names, self.threads);
        let mut rows = Vec::new();
        self.root.run(&cx, None, Pipe::default(), &mut |t| {
            rows.push(
                self.layout
                    .local
                    .iter()
                    .map(|(_, slot)| self.layout.datum(&t, *slot))
                    .collect(),
            );
            Ok(Flow::Continue)
        })?;
        let operators = cx.stats.into_inner();
        let distance_calls = operators.iter().map(|o| o.distance_calls).sum();
        let stats = ExecStats {
            distance_calls,
            tuples_scanned: operators.iter().filter(|o| o.is_source()).map(|o| o.tuples_scanned).sum(),
            tuples_emitted: rows.len() as u64,
            operators,
        };
        let columns = self.layout.local.iter().map(|(f, _)| f.name.clone()).collect();
        Ok((ResultSet { columns, rows }, stats))
    }

    /// Pipelines in execution order, split at pipeline breakers.
    pub fn pipelines(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        let mut current = vec!["Collector".to_string()];
        collect_pipelines(&self.root, &mut current, &mut out);
        current.reverse();
        out.push(current);
        out
    }

    /// Pipelines rendered as `A -> B -> C`, one per line.
    pub fn describe_pipelines(&self) -> String {
        self.pipelines()
            .iter()
            .map(|p| p.join(" -> "))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Appends `node`'s operators to `current` (downstream first) and closes
/// finished pipelines into `out`.
fn collect_pipelines(node: &PhysNode, current: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    match &node.kind {
        NodeKind::Sort { input, .. } | NodeKind::Window { input, .. } => {
            let mut below = vec![node.name().to_string()];
            collect_pipelines(input, &mut below, out);
            below.reverse();
            out.push(below);
        }
        NodeKind::HashJoin { left, right, .. } => {
            let mut build = vec!["HashBuild".to_string()];
            collect_pipelines(right, &mut build, out);
            build.reverse();
            out.push(build);
            current.push(node.name().to_string());
            collect_pipelines(left, current, out);
        }
        NodeKind::NestedLoopJoin { left, right, .. } => {
            let mut build = vec!["Materialize".to_string()];
            collect_pipelines(right, &mut build, out);
            build.reverse();
            out.push(build);
            current.push(node.name().to_string());
            collect_pipelines(left, current, out);
        }
        NodeKind::DependentJoin { left, right, .. } => {
            let mut inner = vec!["DependentJoin(inner)".to_string()];
            collect_pipelines(right, &mut inner, out);
            inner.reverse();
            out.push(inner);
            current.push(node.name().to_string());
            collect_pipelines(left, current, out);
        }
        _ => {
            current.push(node.name().to_string());
            for c in node.children() {
                collect_pipelines(c, current, out);
            }
        }
    }
}

/// Lowers and runs `plan`.
pub fn run_plan(plan: &LogicalOp, catalog: &Catalog, options: &ExecOptions) -> Result<(ResultSet, ExecStats)> {
    lower(plan, catalog, options)?.execute()
}

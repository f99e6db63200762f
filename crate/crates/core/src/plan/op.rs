use std::fmt::{self, Write as _};

use super::expr::{ColumnRef, Expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinKind {
    Inner,
    /// The right side is re-evaluated once per left tuple and may reference
    /// the left tuple's columns.
    Dependent,
}

/// Window frame `[lo, hi]` in rows; `hi = None` means MAX.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub lo: usize,
    pub hi: Option<usize>,
}

impl Frame {
    pub const WHOLE: Frame = Frame { lo: 0, hi: None };

    pub fn is_whole(&self) -> bool {
        *self == Frame::WHOLE
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(hi) => write!(f, "[{}, {hi}]", self.lo),
            None => write!(f, "[{}, MAX]", self.lo),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapItem {
    pub name: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

impl ProjectItem {
    pub fn output_name(&self) -> Option<&str> {
        self.alias
            .as_deref()
            .or_else(|| self.expr.as_column().map(|c| c.name.as_str()))
    }
}

/// Logical operator tree.
#[derive(Debug, Clone, PartialEq)]
pub enum LogicalOp {
    Scan {
        table: String,
    },
    Filter {
        predicate: Expr,
        input: Box<LogicalOp>,
    },
    Map {
        items: Vec<MapItem>,
        input: Box<LogicalOp>,
    },
    OrderBy {
        keys: Vec<Expr>,
        input: Box<LogicalOp>,
    },
    Limit {
        count: usize,
        input: Box<LogicalOp>,
    },
    Window {
        partition_by: Vec<Expr>,
        order_by: Vec<Expr>,
        frame: Frame,
        rank_column: String,
        input: Box<LogicalOp>,
    },
    Join {
        kind: JoinKind,
        condition: Option<Expr>,
        left: Box<LogicalOp>,
        right: Box<LogicalOp>,
    },
    /// Keeps tuples whose rank column is at most `k`.
    Selection {
        rank: ColumnRef,
        k: usize,
        input: Box<LogicalOp>,
    },
    /// Tracks per-category top-k progress; may end the named scan early.
    UpdateState {
        category: ColumnRef,
        sim: ColumnRef,
        k: usize,
        feedback: Option<String>,
        input: Box<LogicalOp>,
    },
    Project {
        items: Vec<ProjectItem>,
        alias: Option<String>,
        input: Box<LogicalOp>,
    },
}

impl LogicalOp {
    pub fn scan(table: &str) -> Self {
        LogicalOp::Scan {
            table: table.to_string(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LogicalOp::Scan { .. } => "Scan",
            LogicalOp::Filter { .. } => "Filter",
            LogicalOp::Map { .. } => "Map",
            LogicalOp::OrderBy { .. } => "OrderBy",
            LogicalOp::Limit { .. } => "Limit",
            LogicalOp::Window { .. } => "Window",
            LogicalOp::Join { .. } => "Join",
            LogicalOp::Selection { .. } => "Selection",
            LogicalOp::UpdateState { .. } => "UpdateState",
            LogicalOp::Project { .. } => "Project",
        }
    }

    pub fn children(&self) -> Vec<&LogicalOp> {
        match self {
            LogicalOp::Scan { .. } => vec![],
            LogicalOp::Join { left, right, .. } => vec![left, right],
            LogicalOp::Filter { input, .. }
            | LogicalOp::Map { input, .. }
            | LogicalOp::OrderBy { input, .. }
            | LogicalOp::Limit { input, .. }
            | LogicalOp::Window { input, .. }
            | LogicalOp::Selection { input, .. }
            | LogicalOp::UpdateState { input, .. }
            | LogicalOp::Project { input, .. } => vec![input],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut LogicalOp> {
        match self {
            LogicalOp::Scan { .. } => vec![],
            LogicalOp::Join { left, right, .. } => vec![left, right],
            LogicalOp::Filter { input, .. }
            | LogicalOp::Map { input, .. }
            | LogicalOp::OrderBy { input, .. }
            | LogicalOp::Limit { input, .. }
            | LogicalOp::Window { input, .. }
            | LogicalOp::Selection { input, .. }
            | LogicalOp::UpdateState { input, .. }
            | LogicalOp::Project { input, .. } => vec![input],
        }
    }

    /// Single input of a unary operator.
    pub fn input(&self) -> Option<&LogicalOp> {
        match self {
            LogicalOp::Scan { .. } | LogicalOp::Join { .. } => None,
            _ => self.children().into_iter().next(),
        }
    }

    /// Node reached by following child indices from the root.
    pub fn at(&self, path: &[usize]) -> Option<&LogicalOp> {
        let mut node = self;
        for &i in path {
            node = node.children().into_iter().nth(i)?;
        }
        Some(node)
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut LogicalOp> {
        let mut node = self;
        for &i in path {
            node = node.children_mut().into_iter().nth(i)?;
        }
        Some(node)
    }

    /// Pre-order list of `(path, node)`.
    pub fn walk(&self) -> Vec<(Vec<usize>, &LogicalOp)> {
        let mut out = Vec::new();
        let mut stack = vec![(Vec::new(), self)];
        while let Some((path, node)) = stack.pop() {
            let children = node.children();
            for (i, child) in children.into_iter().enumerate().rev() {
                let mut p = path.clone();
                p.push(i);
                stack.push((p, child));
            }
            out.push((path, node));
        }
        out
    }

    /// Scanned table at the bottom of a unary chain, if the chain ends in one.
    pub fn chain_scan(&self) -> Option<&str> {
        let mut node = self;
        loop {
            match node {
                LogicalOp::Scan { table } => return Some(table),
                LogicalOp::Join { .. } => return None,
                _ => node = node.input()?,
            }
        }
    }

    /// Indented one-operator-per-line dump.
    pub fn explain(&self) -> String {
        let mut out = String::new();
        self.explain_into(&mut out, 0);
        out
    }

    fn explain_into(&self, out: &mut String, depth: usize) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        let _ = writeln!(out, "{} [{}]", self.name(), self.explain_args());
        for child in self.children() {
            child.explain_into(out, depth + 1);
        }
    }

    fn explain_args(&self) -> String {
        let list = |xs: &[Expr]| xs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ");
        match self {
            LogicalOp::Scan { table } => table.clone(),
            LogicalOp::Filter { predicate, .. } => predicate.to_string(),
            LogicalOp::Map { items, .. } => items
                .iter()
                .map(|i| format!("{}: {}", i.name, i.expr))
                .collect::<Vec<_>>()
                .join(", "),
            LogicalOp::OrderBy { keys, .. } => list(keys),
            LogicalOp::Limit { count, .. } => count.to_string(),
            LogicalOp::Window {
                partition_by,
                order_by,
                frame,
                rank_column,
                ..
            } => format!(
                "partitionBy: {}; orderBy: {}; frame: {frame}; rank: {rank_column}",
                list(partition_by),
                list(order_by)
            ),
            LogicalOp::Join { kind, condition, .. } => {
                let kind = match kind {
                    JoinKind::Inner => "inner",
                    JoinKind::Dependent => "dependent",
                };
                match condition {
                    Some(c) => format!("{kind}; on: {c}"),
                    None => kind.to_string(),
                }
            }
            LogicalOp::Selection { rank, k, .. } => format!("{rank} <= {k}"),
            LogicalOp::UpdateState {
                category,
                sim,
                k,
                feedback,
                ..
            } => {
                let mut s = format!("category: {category}; sim: {sim}; k: {k}");
                if let Some(f) = feedback {
                    let _ = write!(s, "; feedback: {f}");
                }
                s
            }
            LogicalOp::Project { items, alias, .. } => {
                let mut s = items
                    .iter()
                    .map(|i| match &i.alias {
                        Some(a) => format!("{} AS {a}", i.expr),
                        None => i.expr.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                if let Some(a) = alias {
                    let _ = write!(s, "; as: {a}");
                }
                s
            }
        }
    }
}

impl fmt::Display for LogicalOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.explain())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_scan_is_one_line() {
        assert_eq!(LogicalOp::scan("products").explain(), "Scan [products]\n");
    }

    #[test]
    fn paths_and_walk() {
        let plan = LogicalOp::Join {
            kind: JoinKind::Inner,
            condition: None,
            left: Box::new(LogicalOp::scan("a")),
            right: Box::new(LogicalOp::Limit {
                count: 3,
                input: Box::new(LogicalOp::scan("b")),
            }),
        };
        assert_eq!(plan.at(&[1, 0]), Some(&LogicalOp::scan("b")));
        let names: Vec<&str> = plan.walk().iter().map(|(_, n)| n.name()).collect();
        assert_eq!(names, ["Join", "Scan", "Limit", "Scan"]);
        assert_eq!(plan.at(&[1]).unwrap().chain_scan(), Some("b"));
        assert_eq!(plan.chain_scan(), None);
    }
}

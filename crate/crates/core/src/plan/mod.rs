//! Logical plans, hybrid-pattern detection and rewriting.

mod explain;
mod expr;
mod fields;
mod op;
mod pattern;
mod rewrite;

pub use explain::parse_explain;
pub use expr::{CmpOp, ColumnRef, DistanceExpr, Expr, ParamValue};
pub use fields::{bind_metrics, coerce_literals, expr_type, for_each_expr_mut, output_fields, resolve, ColumnOrigin, ExprType, Field};
pub use op::{Frame, JoinKind, LogicalOp, MapItem, ProjectItem};
pub use pattern::{detect_pattern, find_patterns, outer_scope, PatternKind, PatternMatch};
pub use rewrite::{optimize, rewrite_category_driven, rewrite_entity_centric, rewrite_knn_like, SIM};

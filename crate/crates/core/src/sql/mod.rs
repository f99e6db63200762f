//! SQL subset covering filtered top-k, range, join and windowed top-k queries.

mod ast;
mod lexer;
mod parser;
mod planner;
mod render;

pub use ast::{AstExpr, FromItem, JoinClause, LimitValue, Query, SelectItem, WindowSpec};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use planner::{plan_query, Params};
pub use render::{render, render_expr};

pub(crate) use parser::Parser;
pub(crate) use planner::convert_expr;

/// Parses and plans in one step.
pub fn plan_sql(sql: &str, catalog: &crate::Catalog, params: &Params) -> crate::Result<crate::plan::LogicalOp> {
    plan_query(&parse(sql)?, catalog, params)
}

use crate::plan::{CmpOp, ColumnRef};

#[derive(Debug, Clone, PartialEq)]
pub enum AstExpr {
    Column(ColumnRef),
    Int(i64),
    Float(f64),
    Str(String),
    Param(String),
    Distance(Box<AstExpr>, Box<AstExpr>),
    Compare {
        op: CmpOp,
        left: Box<AstExpr>,
        right: Box<AstExpr>,
    },
    And(Vec<AstExpr>),
    /// `RANK() OVER (...)`; only valid as a select item.
    Rank(WindowSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec {
    pub partition_by: Vec<AstExpr>,
    pub order_by: Vec<AstExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectItem {
    pub expr: AstExpr,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FromItem {
    Table(String),
    Subquery { query: Box<Query>, alias: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinClause {
    pub table: String,
    pub on: AstExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LimitValue {
    Count(u64),
    Param(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub select: Vec<SelectItem>,
    pub from: FromItem,
    pub joins: Vec<JoinClause>,
    pub filter: Option<AstExpr>,
    pub order_by: Vec<AstExpr>,
    pub limit: Option<LimitValue>,
}

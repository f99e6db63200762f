use crate::error::{Error, Result};
use crate::plan::{CmpOp, ColumnRef};

use super::ast::{AstExpr, FromItem, JoinClause, LimitValue, Query, SelectItem, WindowSpec};
use super::lexer::{tokenize, Token, TokenKind};

const RESERVED: &[&str] = &[
    "select", "from", "where", "join", "inner", "on", "as", "order", "by", "limit", "and", "or", "not", "group",
    "having", "union", "left", "right", "full", "outer", "cross", "offset", "distinct", "over", "partition",
];

const UNSUPPORTED: &[&str] = &[
    "or", "not", "group", "having", "union", "left", "right", "full", "outer", "cross", "offset", "distinct",
    "intersect", "except", "insert", "update", "delete", "create", "with", "case", "between", "in", "like", "is",
    "desc", "asc",
];

/// Parses one SELECT statement.
pub fn parse(sql: &str) -> Result<Query> {
    let mut p = Parser::new(tokenize(sql)?);
    let q = p.query()?;
    p.eat(&TokenKind::Semicolon);
    p.expect_end()?;
    Ok(q)
}

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Self {
        Self { tokens, pos: 0 }
    }

    pub(crate) fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> Error {
        let t = self.peek();
        let found = match &t.kind {
            TokenKind::Eof => "end of input".to_string(),
            other => format!("{other:?}"),
        };
        Error::Parse {
            location: t.location(),
            message: format!("{}, found {found}", message.into()),
        }
    }

    /// Unsupported keyword at the cursor becomes an `Unsupported` error.
    fn check_unsupported(&self) -> Result<()> {
        if let TokenKind::Ident(s) = &self.peek().kind {
            let lower = s.to_ascii_lowercase();
            if UNSUPPORTED.contains(&lower.as_str()) {
                return Err(Error::Unsupported(s.to_ascii_uppercase()));
            }
        }
        Ok(())
    }

    pub(crate) fn eat(&mut self, kind: &TokenKind) -> bool {
        if &self.peek().kind == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, kind: TokenKind, what: &str) -> Result<()> {
        if self.eat(&kind) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    pub(crate) fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek().is_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.check_unsupported()?;
            Err(self.error(format!("expected {}", kw.to_ascii_uppercase())))
        }
    }

    pub(crate) fn expect_end(&mut self) -> Result<()> {
        if self.peek().kind == TokenKind::Eof {
            Ok(())
        } else {
            self.check_unsupported()?;
            Err(self.error("expected end of statement"))
        }
    }

    /// Any identifier, reserved or not.
    pub(crate) fn word(&mut self, what: &str) -> Result<String> {
        match &self.peek().kind {
            TokenKind::Ident(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    pub(crate) fn ident(&mut self, what: &str) -> Result<String> {
        if let TokenKind::Ident(s) = &self.peek().kind {
            if RESERVED.contains(&s.to_ascii_lowercase().as_str()) {
                self.check_unsupported()?;
                return Err(self.error(format!("expected {what}")));
            }
        }
        self.word(what)
    }

    pub(crate) fn usize_literal(&mut self, what: &str) -> Result<usize> {
        match self.peek().kind {
            TokenKind::Int(v) if v >= 0 => {
                self.advance();
                Ok(v as usize)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    pub(crate) fn column_ref(&mut self) -> Result<ColumnRef> {
        let first = self.word("column")?;
        if self.eat(&TokenKind::Dot) {
            let name = self.word("column name")?;
            Ok(ColumnRef::qualified(&first, &name))
        } else {
            Ok(ColumnRef::bare(&first))
        }
    }

    fn query(&mut self) -> Result<Query> {
        self.expect_keyword("select")?;
        if self.peek().kind == TokenKind::Star {
            return Err(Error::Unsupported("SELECT *".into()));
        }
        self.check_unsupported()?;
        let mut select = vec![self.select_item()?];
        while self.eat(&TokenKind::Comma) {
            select.push(self.select_item()?);
        }
        self.expect_keyword("from")?;
        let from = if self.eat(&TokenKind::LParen) {
            let query = self.query()?;
            self.expect(TokenKind::RParen, "`)`")?;
            self.expect_keyword("as")?;
            let alias = self.ident("subquery alias")?;
            FromItem::Subquery {
                query: Box::new(query),
                alias,
            }
        } else {
            FromItem::Table(self.table_name()?)
        };
        let mut joins = Vec::new();
        loop {
            let inner = self.eat_keyword("inner");
            if !self.eat_keyword("join") {
                if inner {
                    return Err(self.error("expected JOIN"));
                }
                break;
            }
            let table = self.table_name()?;
            self.expect_keyword("on")?;
            joins.push(JoinClause {
                table,
                on: self.expr()?,
            });
        }
        let filter = if self.eat_keyword("where") {
            Some(self.expr()?)
        } else {
            None
        };
        self.check_unsupported()?;
        let mut order_by = Vec::new();
        if self.eat_keyword("order") {
            self.expect_keyword("by")?;
            order_by = self.expr_list()?;
            self.check_unsupported()?;
        }
        let limit = if self.eat_keyword("limit") {
            Some(match self.advance().kind {
                TokenKind::Int(v) if v >= 0 => LimitValue::Count(v as u64),
                TokenKind::Param(name) => LimitValue::Param(name),
                _ => {
                    self.pos -= 1;
                    return Err(self.error("expected LIMIT count"));
                }
            })
        } else {
            None
        };
        self.check_unsupported()?;
        Ok(Query {
            select,
            from,
            joins,
            filter,
            order_by,
            limit,
        })
    }

    fn table_name(&mut self) -> Result<String> {
        let name = self.ident("table name")?;
        if matches!(self.peek().kind, TokenKind::Ident(_)) && !self.is_clause_keyword() {
            return Err(Error::Unsupported("table alias".into()));
        }
        Ok(name)
    }

    fn is_clause_keyword(&self) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if RESERVED.contains(&s.to_ascii_lowercase().as_str()))
    }

    fn select_item(&mut self) -> Result<SelectItem> {
        let expr = self.expr()?;
        let alias = if self.eat_keyword("as") {
            Some(self.word("alias")?)
        } else {
            None
        };
        Ok(SelectItem { expr, alias })
    }

    pub(crate) fn expr_list(&mut self) -> Result<Vec<AstExpr>> {
        let mut out = vec![self.expr()?];
        while self.eat(&TokenKind::Comma) {
            out.push(self.expr()?);
        }
        Ok(out)
    }

    pub(crate) fn expr(&mut self) -> Result<AstExpr> {
        let mut terms = vec![self.comparison()?];
        while self.eat_keyword("and") {
            terms.push(self.comparison()?);
        }
        self.check_unsupported()?;
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            AstExpr::And(terms)
        })
    }

    fn comparison(&mut self) -> Result<AstExpr> {
        let left = self.operand()?;
        let op = match self.peek().kind {
            TokenKind::Eq => CmpOp::Eq,
            TokenKind::NotEq => CmpOp::NotEq,
            TokenKind::Lt => CmpOp::Lt,
            TokenKind::LtEq => CmpOp::LtEq,
            TokenKind::Gt => {
                if self.peek_at(1).kind == TokenKind::Eq {
                    return Err(Error::Unsupported("operator >=".into()));
                }
                CmpOp::Gt
            }
            _ => return Ok(left),
        };
        self.advance();
        let right = self.operand()?;
        Ok(AstExpr::Compare {
            op,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    fn operand(&mut self) -> Result<AstExpr> {
        let left = self.primary()?;
        if self.eat(&TokenKind::DistanceOp) {
            let right = self.primary()?;
            return Ok(AstExpr::Distance(Box::new(left), Box::new(right)));
        }
        Ok(left)
    }

    fn primary(&mut self) -> Result<AstExpr> {
        self.check_unsupported()?;
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Int(v) => {
                self.advance();
                Ok(AstExpr::Int(v))
            }
            TokenKind::Float(v) => {
                self.advance();
                Ok(AstExpr::Float(v))
            }
            TokenKind::Str(s) => {
                self.advance();
                Ok(AstExpr::Str(s))
            }
            TokenKind::Param(name) => {
                self.advance();
                Ok(AstExpr::Param(name))
            }
            TokenKind::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            TokenKind::Ident(name) if self.peek_at(1).kind == TokenKind::LParen => {
                let lower = name.to_ascii_lowercase();
                match lower.as_str() {
                    "distance" => {
                        self.advance();
                        self.advance();
                        let a = self.operand()?;
                        self.expect(TokenKind::Comma, "`,`")?;
                        let b = self.operand()?;
                        self.expect(TokenKind::RParen, "`)`")?;
                        Ok(AstExpr::Distance(Box::new(a), Box::new(b)))
                    }
                    "rank" => {
                        self.advance();
                        self.advance();
                        self.expect(TokenKind::RParen, "`)`")?;
                        self.expect_keyword("over")?;
                        self.expect(TokenKind::LParen, "`(`")?;
                        let mut partition_by = Vec::new();
                        if self.eat_keyword("partition") {
                            self.expect_keyword("by")?;
                            partition_by = self.expr_list()?;
                        }
                        self.expect_keyword("order")?;
                        self.expect_keyword("by")?;
                        let order_by = self.expr_list()?;
                        if self.peek().is_keyword("rows") || self.peek().is_keyword("range") {
                            return Err(Error::Unsupported("window frame clause".into()));
                        }
                        self.expect(TokenKind::RParen, "`)`")?;
                        Ok(AstExpr::Rank(WindowSpec {
                            partition_by,
                            order_by,
                        }))
                    }
                    _ => Err(Error::Unsupported(format!("function {}", name.to_ascii_uppercase()))),
                }
            }
            TokenKind::Ident(_) => {
                let first = self.ident("expression")?;
                if self.eat(&TokenKind::Dot) {
                    let name = self.word("column name")?;
                    Ok(AstExpr::Column(ColumnRef::qualified(&first, &name)))
                } else {
                    Ok(AstExpr::Column(ColumnRef::bare(&first)))
                }
            }
            _ => Err(self.error("expected expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Location;

    #[test]
    fn simple_limit() {
        let q = parse("SELECT id FROM t LIMIT 1").unwrap();
        assert_eq!(q.limit, Some(LimitValue::Count(1)));
        assert_eq!(q.from, FromItem::Table("t".into()));
    }

    #[test]
    fn syntax_error_position() {
        let err = parse("SELECT id\nFROM t\nWHERE price <= ").unwrap_err();
        match err {
            Error::Parse {
                location: Location::LineColumn { line, .. },
                ..
            } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unsupported_constructs() {
        for sql in [
            "SELECT id FROM t GROUP BY id",
            "SELECT id FROM t WHERE a = 1 OR b = 2",
            "SELECT COUNT(id) FROM t",
            "SELECT * FROM t",
            "SELECT id FROM t p",
        ] {
            assert!(matches!(parse(sql), Err(Error::Unsupported(_))), "{sql}");
        }
    }

    #[test]
    fn rank_as_column_name() {
        let q = parse("SELECT qid FROM (SELECT id AS qid, RANK() OVER (ORDER BY x) AS rank FROM t) AS r WHERE r.rank <= 3")
            .unwrap();
        assert_eq!(
            q.filter,
            Some(AstExpr::Compare {
                op: CmpOp::LtEq,
                left: Box::new(AstExpr::Column(ColumnRef::qualified("r", "rank"))),
                right: Box::new(AstExpr::Int(3)),
            })
        );
    }
}

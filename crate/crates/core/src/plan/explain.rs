use crate::data::ScalarValue;
use crate::error::{Error, Location, Result};
use crate::sql::{convert_expr, tokenize, Parser, TokenKind};

use super::expr::{ColumnRef, Expr, ParamValue};
use super::op::{Frame, JoinKind, LogicalOp, MapItem, ProjectItem};

/// Parses the output of [`LogicalOp::explain`]. Parameter values are not
/// part of the dump; parameters come back bound to NULL placeholders.
pub fn parse_explain(text: &str) -> Result<LogicalOp> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let indent = raw.len() - raw.trim_start_matches(' ').len();
        if indent % 2 != 0 {
            return Err(line_error(i, "indentation must be a multiple of two spaces"));
        }
        lines.push((i, indent / 2, raw.trim()));
    }
    let mut pos = 0;
    let op = parse_node(&lines, &mut pos, 0)?;
    if let Some((i, ..)) = lines.get(pos) {
        return Err(line_error(*i, "unexpected operator after the root"));
    }
    Ok(op)
}

fn line_error(line: usize, message: &str) -> Error {
    Error::Parse {
        location: Location::LineColumn {
            line: line + 1,
            column: 1,
        },
        message: message.to_string(),
    }
}

fn parse_node(lines: &[(usize, usize, &str)], pos: &mut usize, depth: usize) -> Result<LogicalOp> {
    let Some(&(line, d, text)) = lines.get(*pos) else {
        return Err(Error::Parse {
            location: Location::LineColumn { line: 0, column: 1 },
            message: "missing operator".into(),
        });
    };
    if d != depth {
        return Err(line_error(line, "unexpected indentation"));
    }
    *pos += 1;
    let (name, args) = match (text.find('['), text.rfind(']')) {
        (Some(a), Some(b)) if b > a => (text[..a].trim(), &text[a + 1..b]),
        _ => return Err(line_error(line, "expected `Name [args]`")),
    };
    let child = |pos: &mut usize| parse_node(lines, pos, depth + 1);
    let mut p = Parser::new(tokenize(args).map_err(|e| relocate(e, line))?);
    let placeholder = |_: &str| Ok(ParamValue::Scalar(ScalarValue::Null));
    let expr = |p: &mut Parser| -> Result<Expr> { convert_expr(&p.expr()?, &placeholder) };
    let column = |p: &mut Parser| -> Result<ColumnRef> { p.column_ref() };
    let list = |p: &mut Parser| -> Result<Vec<Expr>> {
        let mut out = Vec::new();
        if matches!(p.peek().kind, TokenKind::Semicolon | TokenKind::Eof) {
            return Ok(out);
        }
        out.push(expr(p)?);
        while p.eat(&TokenKind::Comma) {
            out.push(expr(p)?);
        }
        Ok(out)
    };
    let label = |p: &mut Parser, what: &str| -> Result<()> {
        if !p.eat_keyword(what) {
            return Err(p.error(format!("expected `{what}:`")));
        }
        p.expect(TokenKind::Colon, "`:`")
    };

    let op = (|| -> Result<LogicalOp> {
        Ok(match name {
            "Scan" => LogicalOp::Scan {
                table: p.word("table name")?,
            },
            "Filter" => LogicalOp::Filter {
                predicate: expr(&mut p)?,
                input: Box::new(child(pos)?),
            },
            "Map" => {
                let mut items = Vec::new();
                loop {
                    let name = p.word("column name")?;
                    p.expect(TokenKind::Colon, "`:`")?;
                    items.push(MapItem {
                        name,
                        expr: expr(&mut p)?,
                    });
                    if !p.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                LogicalOp::Map {
                    items,
                    input: Box::new(child(pos)?),
                }
            }
            "OrderBy" => LogicalOp::OrderBy {
                keys: list(&mut p)?,
                input: Box::new(child(pos)?),
            },
            "Limit" => LogicalOp::Limit {
                count: p.usize_literal("limit count")?,
                input: Box::new(child(pos)?),
            },
            "Window" => {
                label(&mut p, "partitionBy")?;
                let partition_by = list(&mut p)?;
                p.expect(TokenKind::Semicolon, "`;`")?;
                label(&mut p, "orderBy")?;
                let order_by = list(&mut p)?;
                p.expect(TokenKind::Semicolon, "`;`")?;
                label(&mut p, "frame")?;
                p.expect(TokenKind::LBracket, "`[`")?;
                let lo = p.usize_literal("frame start")?;
                p.expect(TokenKind::Comma, "`,`")?;
                let hi = if p.eat_keyword("MAX") {
                    None
                } else {
                    Some(p.usize_literal("frame end")?)
                };
                p.expect(TokenKind::RBracket, "`]`")?;
                p.expect(TokenKind::Semicolon, "`;`")?;
                label(&mut p, "rank")?;
                let rank_column = p.word("rank column")?;
                LogicalOp::Window {
                    partition_by,
                    order_by,
                    frame: Frame { lo, hi },
                    rank_column,
                    input: Box::new(child(pos)?),
                }
            }
            "Join" => {
                let kind = match p.word("join kind")?.as_str() {
                    "inner" => JoinKind::Inner,
                    "dependent" => JoinKind::Dependent,
                    other => return Err(p.error(format!("unknown join kind `{other}`"))),
                };
                let condition = if p.eat(&TokenKind::Semicolon) {
                    label(&mut p, "on")?;
                    Some(expr(&mut p)?)
                } else {
                    None
                };
                let left = child(pos)?;
                let right = child(pos)?;
                LogicalOp::Join {
                    kind,
                    condition,
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
            "Selection" => {
                let rank = column(&mut p)?;
                p.expect(TokenKind::LtEq, "`<=`")?;
                LogicalOp::Selection {
                    rank,
                    k: p.usize_literal("rank bound")?,
                    input: Box::new(child(pos)?),
                }
            }
            "UpdateState" => {
                label(&mut p, "category")?;
                let category = column(&mut p)?;
                p.expect(TokenKind::Semicolon, "`;`")?;
                label(&mut p, "sim")?;
                let sim = column(&mut p)?;
                p.expect(TokenKind::Semicolon, "`;`")?;
                label(&mut p, "k")?;
                let k = p.usize_literal("k")?;
                let feedback = if p.eat(&TokenKind::Semicolon) {
                    label(&mut p, "feedback")?;
                    Some(p.word("table name")?)
                } else {
                    None
                };
                LogicalOp::UpdateState {
                    category,
                    sim,
                    k,
                    feedback,
                    input: Box::new(child(pos)?),
                }
            }
            "Project" => {
                let mut items = Vec::new();
                loop {
                    let e = expr(&mut p)?;
                    let alias = if p.eat_keyword("AS") {
                        Some(p.word("alias")?)
                    } else {
                        None
                    };
                    items.push(ProjectItem { expr: e, alias });
                    if !p.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                let alias = if p.eat(&TokenKind::Semicolon) {
                    label(&mut p, "as")?;
                    Some(p.word("alias")?)
                } else {
                    None
                };
                LogicalOp::Project {
                    items,
                    alias,
                    input: Box::new(child(pos)?),
                }
            }
            other => return Err(line_error(line, &format!("unknown operator `{other}`"))),
        })
    })()
    .map_err(|e| relocate(e, line))?;
    p.expect_end().map_err(|e| relocate(e, line))?;
    Ok(op)
}

/// Rebases a token position inside `[...]` onto the dump line.
fn relocate(e: Error, line: usize) -> Error {
    match e {
        Error::Parse {
            location: Location::LineColumn { line: 1, column },
            message,
        } => Error::Parse {
            location: Location::LineColumn { line: line + 1, column },
            message,
        },
        other => other,
    }
}

use crate::error::{Error, Location, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Param(String),
    Comma,
    Dot,
    Star,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Semicolon,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    /// `<*>`, the distance operator of plan dumps.
    DistanceOp,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

impl Token {
    pub fn location(&self) -> Location {
        Location::LineColumn {
            line: self.line,
            column: self.column,
        }
    }

    /// Case-insensitive keyword test.
    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.kind, TokenKind::Ident(s) if s.eq_ignore_ascii_case(kw))
    }
}

fn error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        location: Location::LineColumn { line, column },
        message: message.into(),
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let push = |tokens: &mut Vec<Token>, kind| tokens.push(Token { kind, line: tl, column: tc });
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            push(&mut tokens, TokenKind::Ident(chars[start..i].iter().collect()));
            continue;
        }
        let negative_number = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
        if c.is_ascii_digit() || negative_number {
            let start = i;
            bump!();
            let mut is_float = false;
            while i < chars.len() {
                let d = chars[i];
                if d.is_ascii_digit() {
                    bump!();
                } else if d == '.' && !is_float && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit()) {
                    is_float = true;
                    bump!();
                } else if (d == 'e' || d == 'E')
                    && (chars.get(i + 1).is_some_and(|n| n.is_ascii_digit())
                        || (matches!(chars.get(i + 1), Some('-' | '+'))
                            && chars.get(i + 2).is_some_and(|n| n.is_ascii_digit())))
                {
                    is_float = true;
                    bump!();
                    bump!();
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let kind = if is_float {
                TokenKind::Float(text.parse().map_err(|_| error(tl, tc, format!("bad number `{text}`")))?)
            } else {
                TokenKind::Int(text.parse().map_err(|_| error(tl, tc, format!("integer out of range `{text}`")))?)
            };
            push(&mut tokens, kind);
            continue;
        }
        match c {
            '\'' => {
                bump!();
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(error(tl, tc, "unterminated string literal")),
                        Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                            s.push('\'');
                            bump!();
                            bump!();
                        }
                        Some('\'') => {
                            bump!();
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            bump!();
                        }
                    }
                }
                push(&mut tokens, TokenKind::Str(s));
            }
            '$' => {
                bump!();
                if chars.get(i) != Some(&'{') {
                    return Err(error(tl, tc, "expected `{` after `$`"));
                }
                bump!();
                let mut name = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(error(tl, tc, "unterminated parameter")),
                        Some('}') => {
                            bump!();
                            break;
                        }
                        Some(&ch) => {
                            name.push(ch);
                            bump!();
                        }
                    }
                }
                let name = name.trim().to_string();
                if name.is_empty() || !name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                    return Err(error(tl, tc, format!("bad parameter name `{name}`")));
                }
                push(&mut tokens, TokenKind::Param(name));
            }
            '<' => {
                bump!();
                let kind = match chars.get(i) {
                    Some('=') => {
                        bump!();
                        TokenKind::LtEq
                    }
                    Some('>') => {
                        bump!();
                        TokenKind::NotEq
                    }
                    Some('*') if chars.get(i + 1) == Some(&'>') => {
                        bump!();
                        bump!();
                        TokenKind::DistanceOp
                    }
                    _ => TokenKind::Lt,
                };
                push(&mut tokens, kind);
            }
            _ => {
                let kind = match c {
                    ',' => TokenKind::Comma,
                    '.' => TokenKind::Dot,
                    '*' => TokenKind::Star,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    ':' => TokenKind::Colon,
                    ';' => TokenKind::Semicolon,
                    '=' => TokenKind::Eq,
                    '>' => TokenKind::Gt,
                    other => return Err(error(tl, tc, format!("unexpected character `{other}`"))),
                };
                bump!();
                push(&mut tokens, kind);
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        line,
        column: col,
    });
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        tokenize(s).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn operators_and_literals() {
        assert_eq!(
            kinds("a <= 1 <> 2.5 <*> ${ q } 'it''s' < -3e-2"),
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::LtEq,
                TokenKind::Int(1),
                TokenKind::NotEq,
                TokenKind::Float(2.5),
                TokenKind::DistanceOp,
                TokenKind::Param("q".into()),
                TokenKind::Str("it's".into()),
                TokenKind::Lt,
                TokenKind::Float(-0.03),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn positions() {
        let toks = tokenize("SELECT\n  id").unwrap();
        assert_eq!((toks[1].line, toks[1].column), (2, 3));
        let err = tokenize("SELECT\n  #").unwrap_err();
        assert!(matches!(
            err,
            Error::Parse {
                location: Location::LineColumn { line: 2, column: 3 },
                ..
            }
        ));
    }
}

//! Minimal s-expression reader for PDDL text.
//!
//! Everything is lowercased on the way in; PDDL is case-insensitive and the
//! rest of the crate compares names with plain string equality.

use super::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum SExpr {
    Symbol(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Symbol(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            SExpr::Symbol(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Symbol(..) => None,
        }
    }

    /// Short rendering used in error messages.
    pub fn describe(&self) -> String {
        match self {
            SExpr::Symbol(s, _) => format!("`{s}`"),
            SExpr::List(items, _) => match items.first().and_then(SExpr::as_symbol) {
                Some(head) => format!("`({head} ...)`"),
                None => "a list".to_string(),
            },
        }
    }

    /// Head symbol of a list, if it has one.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_symbol()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Open,
    Close,
    Symbol(String),
}

fn tokenize(text: &str) -> Vec<(Token, Pos)> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut col = 0;
    let mut chars = text.chars().peekable();
    let mut current: Option<(String, Pos)> = None;

    fn flush(current: &mut Option<(String, Pos)>, tokens: &mut Vec<(Token, Pos)>) {
        if let Some((s, p)) = current.take() {
            tokens.push((Token::Symbol(s), p));
        }
    }

    while let Some(c) = chars.next() {
        col += 1;
        let pos = Pos { line, col };
        match c {
            '\n' => {
                flush(&mut current, &mut tokens);
                line += 1;
                col = 0;
            }
            ';' => {
                flush(&mut current, &mut tokens);
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                flush(&mut current, &mut tokens);
                tokens.push((Token::Open, pos));
            }
            ')' => {
                flush(&mut current, &mut tokens);
                tokens.push((Token::Close, pos));
            }
            c if c.is_whitespace() => flush(&mut current, &mut tokens),
            c => match &mut current {
                Some((s, _)) => s.extend(c.to_lowercase()),
                None => current = Some((c.to_lowercase().collect(), pos)),
            },
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

/// Parses exactly one top-level s-expression; trailing tokens are an error.
pub(crate) fn parse_one(text: &str) -> Result<SExpr, PddlError> {
    let tokens = tokenize(text);
    let mut iter = tokens.into_iter().peekable();
    let expr = match iter.next() {
        None => {
            return Err(PddlError::Syntax {
                line: 1,
                col: 1,
                expected: "`(`".into(),
                found: "end of input".into(),
            })
        }
        Some((tok, pos)) => read(tok, pos, &mut iter)?,
    };
    if let Some((tok, pos)) = iter.next() {
        return Err(PddlError::Syntax {
            line: pos.line,
            col: pos.col,
            expected: "end of input".into(),
            found: describe_token(&tok),
        });
    }
    Ok(expr)
}

fn describe_token(tok: &Token) -> String {
    match tok {
        Token::Open => "`(`".into(),
        Token::Close => "`)`".into(),
        Token::Symbol(s) => format!("`{s}`"),
    }
}

fn read<I>(tok: Token, pos: Pos, iter: &mut std::iter::Peekable<I>) -> Result<SExpr, PddlError>
where
    I: Iterator<Item = (Token, Pos)>,
{
    match tok {
        Token::Symbol(s) => Ok(SExpr::Symbol(s, pos)),
        Token::Close => Err(PddlError::Syntax {
            line: pos.line,
            col: pos.col,
            expected: "`(` or a symbol".into(),
            found: "`)`".into(),
        }),
        Token::Open => {
            let mut items = Vec::new();
            loop {
                match iter.next() {
                    None => {
                        return Err(PddlError::Syntax {
                            line: pos.line,
                            col: pos.col,
                            expected: "`)` closing this list".into(),
                            found: "end of input".into(),
                        })
                    }
                    Some((Token::Close, _)) => return Ok(SExpr::List(items, pos)),
                    Some((t, p)) => items.push(read(t, p, iter)?),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_lowercases() {
        let e = parse_one("(Define (DOMAIN bw) ; comment\n (:requirements :strips))").unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(items[0].as_symbol(), Some("define"));
        assert_eq!(items[1].head(), Some("domain"));
        assert_eq!(items.len(), 3);
    }

    #[test]
    fn unbalanced_input_reports_position() {
        match parse_one("(define\n  (domain x)") {
            Err(PddlError::Syntax { line, col, .. }) => assert_eq!((line, col), (1, 1)),
            other => panic!("unexpected {other:?}"),
        }
        match parse_one("(a) )") {
            Err(PddlError::Syntax { line, col, expected, .. }) => {
                assert_eq!((line, col), (1, 5));
                assert_eq!(expected, "end of input");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

//! Recursive-descent parser for the formula text grammar.
//!
//! ```text
//! formula := or
//! or      := and ("or" and)*
//! and     := until ("and" until)*
//! until   := unary ("U" interval until)?
//! unary   := "not" unary | "G" interval unary | "F" interval unary | atom
//! atom    := ident | "(" formula ")"
//! interval:= "[" int "," int "]"
//! ```
//!
//! `and`/`or` chains collapse into one n-ary node. Until is right-associative
//! and binds tighter than the Boolean connectives.

use std::fmt;

use thiserror::Error;

use super::{Formula, Interval};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    /// `U` not followed by `[a,b]`.
    UntilWithoutInterval,
    /// Interval bound that is negative, fractional, or too large.
    BadBound(String),
    /// `[a,b]` with `a > b`.
    ReversedInterval(usize, usize),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected `{t}`"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::UntilWithoutInterval => f.write_str("until requires an interval"),
            ParseErrorKind::BadBound(b) => write!(f, "interval bound `{b}` is not a non-negative integer"),
            ParseErrorKind::ReversedInterval(a, b) => write!(f, "reversed interval [{a},{b}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LBrack,
    RBrack,
    Comma,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => f.write_str(s),
            Tok::LBrack => f.write_str("["),
            Tok::RBrack => f.write_str("]"),
            Tok::Comma => f.write_str(","),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        let single = match c {
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            ',' => Some(Tok::Comma),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            out.push((pos, tok));
        } else if c.is_whitespace() {
            chars.next();
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((pos, Tok::Ident(s)));
        } else if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
            // Numbers are validated as interval bounds later, so sloppy
            // literals like `1.5` or `-2` lex as one token.
            let mut s = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+') {
                    s.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((pos, Tok::Number(s)));
        } else {
            return Err(ParseError {
                pos,
                kind: ParseErrorKind::UnexpectedChar(c),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { pos: self.pos(), kind }
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Some(t) => self.err(ParseErrorKind::UnexpectedToken(t.to_string())),
            None => self.err(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn or(&mut self) -> Result<Formula<String>, ParseError> {
        let mut items = vec![self.and()?];
        while self.is_keyword("or") {
            self.at += 1;
            items.push(self.and()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Formula::Or(items)
        })
    }

    fn and(&mut self) -> Result<Formula<String>, ParseError> {
        let mut items = vec![self.until()?];
        while self.is_keyword("and") {
            self.at += 1;
            items.push(self.until()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Formula::And(items)
        })
    }

    fn until(&mut self) -> Result<Formula<String>, ParseError> {
        let lhs = self.unary()?;
        if !self.is_keyword("U") {
            return Ok(lhs);
        }
        self.at += 1;
        if self.peek() != Some(&Tok::LBrack) {
            return Err(self.err(ParseErrorKind::UntilWithoutInterval));
        }
        let i = self.interval()?;
        let rhs = self.until()?;
        Ok(Formula::until(i, lhs, rhs))
    }

    fn unary(&mut self) -> Result<Formula<String>, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == "not" => {
                self.at += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Ident(s)) if s == "G" || s == "F" => {
                let always = s == "G";
                self.at += 1;
                let i = self.interval()?;
                let body = self.unary()?;
                Ok(if always {
                    Formula::always(i, body)
                } else {
                    Formula::eventually(i, body)
                })
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let f = self.or()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Some(Tok::Ident(s)) if !matches!(s.as_str(), "and" | "or" | "U") => {
                let name = s.clone();
                self.at += 1;
                Ok(Formula::Pred(name))
            }
            _ => Err(self.unexpected()),
        }
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        let start = self.pos();
        self.expect(Tok::LBrack)?;
        let lo = self.bound()?;
        self.expect(Tok::Comma)?;
        let hi = self.bound()?;
        self.expect(Tok::RBrack)?;
        Interval::new(lo, hi).ok_or(ParseError {
            pos: start,
            kind: ParseErrorKind::ReversedInterval(lo, hi),
        })
    }

    fn bound(&mut self) -> Result<usize, ParseError> {
        match self.peek() {
            Some(Tok::Number(s)) => {
                let v = s
                    .parse::<usize>()
                    .map_err(|_| self.err(ParseErrorKind::BadBound(s.clone())))?;
                self.at += 1;
                Ok(v)
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Parses formula text into an AST with named atoms.
pub fn parse(text: &str) -> Result<Formula<String>, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        end: text.len(),
    };
    let f = p.or()?;
    if p.peek().is_some() {
        return Err(p.unexpected());
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(s: &str) -> Formula<String> {
        Formula::Pred(s.to_string())
    }

    fn iv(a: usize, b: usize) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn conjunction() {
        assert_eq!(
            parse("mu1 and mu2").unwrap(),
            Formula::And(vec![pred("mu1"), pred("mu2")])
        );
    }

    #[test]
    fn nested_temporal() {
        assert_eq!(
            parse("G[0,2] F[5,7] mu1").unwrap(),
            Formula::always(iv(0, 2), Formula::eventually(iv(5, 7), pred("mu1")))
        );
    }

    #[test]
    fn until_needs_interval() {
        let e = parse("mu1 U mu2").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UntilWithoutInterval);
        assert_eq!(e.pos, 6);
    }

    #[test]
    fn chains_flatten_but_groups_do_not() {
        assert_eq!(
            parse("a and b and c").unwrap(),
            Formula::And(vec![pred("a"), pred("b"), pred("c")])
        );
        assert_eq!(
            parse("(a and b) and c").unwrap(),
            Formula::And(vec![Formula::And(vec![pred("a"), pred("b")]), pred("c")])
        );
    }

    #[test]
    fn precedence() {
        // until > and > or
        assert_eq!(
            parse("a or b and c U[1,2] d").unwrap(),
            Formula::Or(vec![
                pred("a"),
                Formula::And(vec![pred("b"), Formula::until(iv(1, 2), pred("c"), pred("d"))]),
            ])
        );
        assert_eq!(
            parse("not a and b").unwrap(),
            Formula::And(vec![Formula::not(pred("a")), pred("b")])
        );
    }

    #[test]
    fn full_case_study_formula() {
        let text = "G[0,2] F[5,7] mu1 and F[15,17] G[2,5] mu2 and F[27,35] (mu3 U[2,10] mu1) \
                    and G[0,50] not mu4 and F[37,50] mu5";
        let f = parse(text).unwrap();
        assert_eq!(f.horizon(), 50);
        match f {
            Formula::And(parts) => assert_eq!(parts.len(), 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn interval_errors() {
        assert!(matches!(
            parse("F[1.5,3] a").unwrap_err().kind,
            ParseErrorKind::BadBound(_)
        ));
        assert!(matches!(
            parse("F[-1,3] a").unwrap_err().kind,
            ParseErrorKind::BadBound(_)
        ));
        let e = parse("G[5,2] a").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::ReversedInterval(5, 2));
        assert_eq!(e.pos, 1);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert_eq!(parse("a and").unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        let e = parse("a ) b").unwrap_err();
        assert_eq!(e.pos, 2);
        assert_eq!(parse("a # b").unwrap_err().kind, ParseErrorKind::UnexpectedChar('#'));
        assert!(parse("(a or b").is_err());
        assert!(parse("").is_err());
    }
}

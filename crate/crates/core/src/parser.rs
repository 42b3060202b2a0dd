//! Text syntax for formulas.
//!
//! ```text
//! formula := imp
//! imp     := or ( "->" imp )?          right-associative, loosest
//! or      := and ( "|" and )*          left-associative
//! and     := unary ( "&" unary )*      left-associative
//! unary   := "~" unary | R<k> unary | D<k> unary | atom
//! atom    := "true" | "false" | ident | "(" formula ")"
//! ```
//!
//! Modal operators are single tokens (`R1`, `D12`), so an identifier that
//! spells `R` or `D` followed only by digits is always an operator.

use std::fmt;

use thiserror::Error;

use crate::formula::{AgentId, Formula};

/// Half-open character range `[start, end)` into the parsed input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unexpected {found} at {span}, expected {expected}")]
    UnexpectedToken {
        span: SourceSpan,
        found: String,
        expected: String,
    },
    #[error("unbalanced parenthesis at {span}")]
    UnbalancedParen { span: SourceSpan },
    #[error("agent index at {span} is not a positive integer")]
    BadAgentIndex { span: SourceSpan },
    #[error("trailing input at {span}")]
    TrailingInput { span: SourceSpan },
    #[error("unrecognized character {ch:?} at {span}")]
    BadChar { span: SourceSpan, ch: char },
}

impl ParseError {
    pub fn span(&self) -> SourceSpan {
        match self {
            ParseError::UnexpectedToken { span, .. }
            | ParseError::UnbalancedParen { span }
            | ParseError::BadAgentIndex { span }
            | ParseError::TrailingInput { span }
            | ParseError::BadChar { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Arrow,
    LParen,
    RParen,
    Report(AgentId),
    Def(AgentId),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Not => "`~`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Report(j) => format!("`R{j}`"),
            Tok::Def(j) => format!("`D{j}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let single = |tok| (tok, SourceSpan { start, end: start + 1 });
        match c {
            _ if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '~' => out.push(single(Tok::Not)),
            '&' => out.push(single(Tok::And)),
            '|' => out.push(single(Tok::Or)),
            '(' => out.push(single(Tok::LParen)),
            ')' => out.push(single(Tok::RParen)),
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    out.push((Tok::Arrow, SourceSpan { start, end: start + 2 }));
                    i += 2;
                    continue;
                }
                return Err(ParseError::BadChar {
                    span: SourceSpan { start, end: start + 1 },
                    ch: c,
                });
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = i;
                while end < chars.len() && (chars[end].is_ascii_alphanumeric() || chars[end] == '_') {
                    end += 1;
                }
                let word: String = chars[i..end].iter().collect();
                let span = SourceSpan { start, end };
                out.push((classify_word(&word, span)?, span));
                i = end;
                continue;
            }
            _ => {
                return Err(ParseError::BadChar {
                    span: SourceSpan { start, end: start + 1 },
                    ch: c,
                })
            }
        }
        i += 1;
    }
    out.push((Tok::Eof, SourceSpan { start: chars.len(), end: chars.len() }));
    Ok(out)
}

fn classify_word(word: &str, span: SourceSpan) -> Result<Tok, ParseError> {
    match word {
        "true" => return Ok(Tok::True),
        "false" => return Ok(Tok::False),
        _ => {}
    }
    let (head, digits) = word.split_at(1);
    if (head == "R" || head == "D") && !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        let agent = digits
            .parse::<u32>()
            .ok()
            .and_then(AgentId::new)
            .ok_or(ParseError::BadAgentIndex { span })?;
        return Ok(if head == "R" { Tok::Report(agent) } else { Tok::Def(agent) });
    }
    Ok(Tok::Ident(word.to_string()))
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    open: Vec<SourceSpan>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        if *self.peek() == Tok::Eof {
            if let Some(open) = self.open.last() {
                return ParseError::UnbalancedParen { span: *open };
            }
        }
        ParseError::UnexpectedToken {
            span: self.span(),
            found: self.peek().describe(),
            expected: expected.to_string(),
        }
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            acc = Formula::or(acc, self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Report(j) => {
                self.bump();
                Ok(Formula::Report(j, Box::new(self.unary()?)))
            }
            Tok::Def(j) => {
                self.bump();
                Ok(Formula::Def(j, Box::new(self.unary()?)))
            }
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Formula::Prop(name))
            }
            Tok::LParen => {
                let open = self.span();
                self.bump();
                self.open.push(open);
                let inner = self.implication()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.open.pop();
                self.bump();
                Ok(inner)
            }
            Tok::RParen => Err(ParseError::UnbalancedParen { span: self.span() }),
            _ => Err(self.unexpected("a formula")),
        }
    }
}

pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, open: Vec::new() };
    let f = p.implication()?;
    match p.peek() {
        Tok::Eof => Ok(f),
        Tok::RParen => Err(ParseError::UnbalancedParen { span: p.span() }),
        _ => Err(ParseError::TrailingInput { span: p.span() }),
    }
}

/// One formula per non-blank line; `#` starts a comment.
pub fn parse_corpus(text: &str) -> Result<Vec<Formula>, (usize, ParseError)> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        out.push(parse(body).map_err(|e| (lineno + 1, e))?);
    }
    Ok(out)
}

// Binding strength: larger binds tighter.
const PREC_IMP: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Implies(..) => PREC_IMP,
        Formula::Or(..) => PREC_OR,
        Formula::And(..) => PREC_AND,
        _ => PREC_UNARY,
    }
}

/// Renders with the fewest parentheses the grammar needs.
pub fn render(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(f, &mut out, false);
    out
}

/// Like [`render`], but every binary subformula nested under another
/// operator is parenthesized, so the tree shape is visible without
/// knowing the precedence table.
pub fn render_explicit(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(f, &mut out, true);
    out
}

fn write_child(f: &Formula, out: &mut String, needs_parens: bool, explicit: bool) {
    let wrap = needs_parens || (explicit && prec(f) < PREC_UNARY);
    if wrap {
        out.push('(');
    }
    write_formula(f, out, explicit);
    if wrap {
        out.push(')');
    }
}

fn write_formula(f: &Formula, out: &mut String, explicit: bool) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Prop(p) => out.push_str(p),
        Formula::Not(a) => {
            out.push('~');
            write_child(a, out, prec(a) < PREC_UNARY, explicit);
        }
        Formula::Report(j, a) | Formula::Def(j, a) => {
            out.push(if matches!(f, Formula::Report(..)) { 'R' } else { 'D' });
            out.push_str(&j.to_string());
            out.push(' ');
            write_child(a, out, prec(a) < PREC_UNARY, explicit);
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            let (p, sym) = if matches!(f, Formula::And(..)) {
                (PREC_AND, " & ")
            } else {
                (PREC_OR, " | ")
            };
            write_child(a, out, prec(a) < p, explicit);
            out.push_str(sym);
            write_child(b, out, prec(b) <= p, explicit);
        }
        Formula::Implies(a, b) => {
            write_child(a, out, prec(a) <= PREC_IMP, explicit);
            out.push_str(" -> ");
            write_child(b, out, prec(b) < PREC_IMP, explicit);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::prop("p")
    }
    fn q() -> Formula {
        Formula::prop("q")
    }
    fn r() -> Formula {
        Formula::prop("r")
    }

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse("R1 (p & ~q)").unwrap(),
            Formula::report(1, Formula::and(p(), Formula::not(q())))
        );
        assert_eq!(
            parse("D1 p -> p").unwrap(),
            Formula::implies(Formula::def(1, p()), p())
        );
        assert_eq!(parse("p & q | r").unwrap(), Formula::or(Formula::and(p(), q()), r()));
    }

    #[test]
    fn associativity() {
        assert_eq!(
            parse("p -> q -> r").unwrap(),
            Formula::implies(p(), Formula::implies(q(), r()))
        );
        assert_eq!(parse("p & q & r").unwrap(), Formula::and(Formula::and(p(), q()), r()));
        assert_eq!(parse("p | q | r").unwrap(), Formula::or(Formula::or(p(), q()), r()));
    }

    #[test]
    fn unary_chains() {
        assert_eq!(
            parse("~D12 R3 ~p").unwrap(),
            Formula::not(Formula::def(12, Formula::report(3, Formula::not(p()))))
        );
        assert_eq!(parse("  true->false ").unwrap(), Formula::implies(Formula::True, Formula::False));
    }

    #[test]
    fn identifiers_that_look_like_operators() {
        assert_eq!(parse("R").unwrap(), Formula::prop("R"));
        assert_eq!(parse("R1x").unwrap(), Formula::prop("R1x"));
        assert_eq!(parse("Pile_12").unwrap(), Formula::prop("Pile_12"));
        assert_eq!(parse("trueish").unwrap(), Formula::prop("trueish"));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse("R0 p"), Err(ParseError::BadAgentIndex { .. })));
        assert!(matches!(parse("(p & q"), Err(ParseError::UnbalancedParen { span }) if span.start == 0));
        assert!(matches!(parse("p & q)"), Err(ParseError::UnbalancedParen { .. })));
        assert!(matches!(parse("p q"), Err(ParseError::TrailingInput { span }) if span.start == 2));
        assert!(matches!(parse("p &"), Err(ParseError::UnexpectedToken { .. })));
        assert!(matches!(parse("p $ q"), Err(ParseError::BadChar { ch: '$', .. })));
        assert!(matches!(parse(""), Err(ParseError::UnexpectedToken { .. })));
        assert!(matches!(parse("p - q"), Err(ParseError::BadChar { ch: '-', .. })));
    }

    #[test]
    fn error_reports_expected_token() {
        let err = parse("p & )").unwrap_err();
        assert_eq!(err.span(), SourceSpan { start: 4, end: 5 });
        let err = parse("& p").unwrap_err();
        match err {
            ParseError::UnexpectedToken { expected, found, .. } => {
                assert_eq!(expected, "a formula");
                assert_eq!(found, "`&`");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn render_examples() {
        assert_eq!(render(&Formula::report(1, Formula::and(p(), Formula::not(q())))), "R1 (p & ~q)");
        assert_eq!(render(&Formula::def(2, Formula::report(1, p()))), "D2 R1 p");
        assert_eq!(render(&Formula::False), "false");
        assert_eq!(render(&Formula::or(Formula::and(p(), q()), r())), "p & q | r");
        assert_eq!(render(&Formula::and(p(), Formula::or(q(), r()))), "p & (q | r)");
        assert_eq!(
            render(&Formula::implies(Formula::implies(p(), q()), r())),
            "(p -> q) -> r"
        );
        assert_eq!(render(&Formula::and(p(), Formula::and(q(), r()))), "p & (q & r)");
    }

    #[test]
    fn explicit_rendering() {
        let f = parse("p & q | r").unwrap();
        assert_eq!(render_explicit(&f), "(p & q) | r");
        let g = parse("R1 (p & ~q) -> D1 p").unwrap();
        assert_eq!(render_explicit(&g), "R1 (p & ~q) -> D1 p");
        assert_eq!(parse(&render_explicit(&g)).unwrap(), g);
    }

    #[test]
    fn corpus_format() {
        let text = "# header\np -> p\n\n  R1 q   # trailing comment\n";
        let fs = parse_corpus(text).unwrap();
        assert_eq!(fs, vec![Formula::implies(p(), p()), Formula::report(1, q())]);
        let err = parse_corpus("p\n(q\n").unwrap_err();
        assert_eq!(err.0, 2);
    }
}

//! Concrete syntax for formulas.
//!
//! ```text
//! formula  := or
//! or       := and ('|' and)*
//! and      := prefix ('&' prefix)*
//! prefix   := '<' bexpr '>' prefix
//!           | '[' bexpr ']' prefix
//!           | ('exists' | 'forall') lident '.' or
//!           | ('min' | 'max') uident '.' or
//!           | 'gforall' lident 'guard' '{' formula '}' 'frees' '{' lident,* '}' '.' or
//!           | atom
//! atom     := 'tt' | 'ff' | UIdent | '(' formula ')'
//! bexpr    := bterm ('&' bterm)*
//! bterm    := '!' bterm | 'true' | '(' bexpr ')' | term ('=' | '!=') term
//! term     := lident | '*'
//! ```
//!
//! Identifiers are `[A-Za-z_][A-Za-z0-9_]*`; an uppercase first letter makes
//! a recursion variable, anything else a data variable. Quantifier and
//! fixed-point bodies extend as far right as possible.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{BExpr, DataTerm, DataVar, Formula, RecVar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    KwTt,
    KwFf,
    KwTrue,
    KwExists,
    KwForall,
    KwMin,
    KwMax,
    KwGforall,
    KwGuard,
    KwFrees,
    Lt,
    Gt,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Dot,
    Pipe,
    Amp,
    Bang,
    Eq,
    Neq,
    Star,
    Comma,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::KwTt => "`tt`".into(),
            Tok::KwFf => "`ff`".into(),
            Tok::KwTrue => "`true`".into(),
            Tok::KwExists => "`exists`".into(),
            Tok::KwForall => "`forall`".into(),
            Tok::KwMin => "`min`".into(),
            Tok::KwMax => "`max`".into(),
            Tok::KwGforall => "`gforall`".into(),
            Tok::KwGuard => "`guard`".into(),
            Tok::KwFrees => "`frees`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::Star => "`*`".into(),
            Tok::Comma => "`,`".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut column = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, column);
        let bump = |chars: &mut core::iter::Peekable<core::str::Chars>,
                        line: &mut usize,
                        column: &mut usize| {
            let c = chars.next().unwrap();
            if c == '\n' {
                *line += 1;
                *column = 1;
            } else {
                *column += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars, &mut line, &mut column);
            continue;
        }
        if c == '#' {
            // comment to end of line
            while let Some(&c2) = chars.peek() {
                bump(&mut chars, &mut line, &mut column);
                if c2 == '\n' {
                    break;
                }
            }
            continue;
        }
        let tok = if c.is_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&c2) = chars.peek() {
                if c2.is_alphanumeric() || c2 == '_' {
                    word.push(bump(&mut chars, &mut line, &mut column));
                } else {
                    break;
                }
            }
            match word.as_str() {
                "tt" => Tok::KwTt,
                "ff" => Tok::KwFf,
                "true" => Tok::KwTrue,
                "exists" => Tok::KwExists,
                "forall" => Tok::KwForall,
                "min" => Tok::KwMin,
                "max" => Tok::KwMax,
                "gforall" => Tok::KwGforall,
                "guard" => Tok::KwGuard,
                "frees" => Tok::KwFrees,
                _ => Tok::Ident(word),
            }
        } else if c.is_ascii_digit() {
            // digits form identifiers too? No: bare numerals are not valid
            // formula tokens; report a targeted error.
            return Err(ParseError {
                line: tl,
                column: tc,
                message: format!("unexpected character `{c}` (identifiers start with a letter or `_`)"),
            });
        } else {
            bump(&mut chars, &mut line, &mut column);
            match c {
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '.' => Tok::Dot,
                '|' => Tok::Pipe,
                '&' => Tok::Amp,
                '=' => Tok::Eq,
                '*' => Tok::Star,
                ',' => Tok::Comma,
                '!' => {
                    if chars.peek() == Some(&'=') {
                        bump(&mut chars, &mut line, &mut column);
                        Tok::Neq
                    } else {
                        Tok::Bang
                    }
                }
                other => {
                    return Err(ParseError {
                        line: tl,
                        column: tc,
                        message: format!("unknown operator `{other}`"),
                    })
                }
            }
        };
        out.push(Spanned {
            tok,
            line: tl,
            column: tc,
        });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end_line: usize,
    end_column: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.column))
            .unwrap_or((self.end_line, self.end_column))
    }

    fn err(&self, message: String) -> ParseError {
        let (line, column) = self.here();
        ParseError {
            line,
            column,
            message,
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(format!("expected {}, found {}", want.describe(), t.describe()))),
            None => Err(self.err(format!("expected {}, found end of input", want.describe()))),
        }
    }

    fn data_var(&mut self, role: &str) -> Result<DataVar, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                if name.chars().next().is_some_and(|c| c.is_uppercase()) {
                    Err(self.err(format!(
                        "expected a data variable for {role}, found recursion variable `{name}` \
                         (data variables start with a lowercase letter or `_`)"
                    )))
                } else {
                    self.pos += 1;
                    Ok(DataVar::new(&name))
                }
            }
            Some(t) => Err(self.err(format!("expected a data variable for {role}, found {}", t.describe()))),
            None => Err(self.err(format!("expected a data variable for {role}, found end of input"))),
        }
    }

    fn rec_var(&mut self, role: &str) -> Result<RecVar, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                if name.chars().next().is_some_and(|c| c.is_uppercase()) {
                    self.pos += 1;
                    Ok(RecVar::new(&name))
                } else {
                    Err(self.err(format!(
                        "expected a recursion variable for {role}, found data variable `{name}` \
                         (recursion variables start with an uppercase letter)"
                    )))
                }
            }
            Some(t) => Err(self.err(format!(
                "expected a recursion variable for {role}, found {}",
                t.describe()
            ))),
            None => Err(self.err(format!(
                "expected a recursion variable for {role}, found end of input"
            ))),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let rhs = self.and_expr()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.prefix_expr()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let rhs = self.prefix_expr()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix_expr(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Lt) => {
                self.pos += 1;
                let b = self.bexpr()?;
                self.expect(Tok::Gt)?;
                let body = self.prefix_expr()?;
                Ok(Formula::diamond(b, body))
            }
            Some(Tok::LBrack) => {
                self.pos += 1;
                let b = self.bexpr()?;
                self.expect(Tok::RBrack)?;
                let body = self.prefix_expr()?;
                Ok(Formula::box_mod(b, body))
            }
            Some(Tok::KwExists) => {
                self.pos += 1;
                let x = self.data_var("`exists`")?;
                self.expect(Tok::Dot)?;
                let body = self.or_expr()?;
                Ok(Formula::Exists(x, Box::new(body)))
            }
            Some(Tok::KwForall) => {
                self.pos += 1;
                let x = self.data_var("`forall`")?;
                self.expect(Tok::Dot)?;
                let body = self.or_expr()?;
                Ok(Formula::Forall(x, Box::new(body)))
            }
            Some(Tok::KwMin) => {
                self.pos += 1;
                let x = self.rec_var("`min`")?;
                self.expect(Tok::Dot)?;
                let body = self.or_expr()?;
                Ok(Formula::Min(x, Box::new(body)))
            }
            Some(Tok::KwMax) => {
                self.pos += 1;
                let x = self.rec_var("`max`")?;
                self.expect(Tok::Dot)?;
                let body = self.or_expr()?;
                Ok(Formula::Max(x, Box::new(body)))
            }
            Some(Tok::KwGforall) => {
                self.pos += 1;
                let x = self.data_var("`gforall`")?;
                self.expect(Tok::KwGuard)?;
                self.expect(Tok::LBrace)?;
                let guard = self.formula()?;
                self.expect(Tok::RBrace)?;
                self.expect(Tok::KwFrees)?;
                self.expect(Tok::LBrace)?;
                let mut frees = Vec::new();
                if self.peek() != Some(&Tok::RBrace) {
                    loop {
                        let v = self.data_var("the `frees` list")?;
                        if !frees.contains(&v) {
                            frees.push(v);
                        }
                        if self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBrace)?;
                self.expect(Tok::Dot)?;
                let body = self.or_expr()?;
                Ok(Formula::GForall {
                    guard: Box::new(guard),
                    frees,
                    var: x,
                    body: Box::new(body),
                })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.next() {
            Some(Tok::KwTt) => Ok(Formula::Tt),
            Some(Tok::KwFf) => Ok(Formula::Ff),
            Some(Tok::Ident(name)) => {
                if name.chars().next().is_some_and(|c| c.is_uppercase()) {
                    Ok(Formula::Var(RecVar::new(&name)))
                } else {
                    self.pos -= 1;
                    Err(self.err(format!(
                        "data variable `{name}` is not a formula; did you mean a recursion \
                         variable (uppercase) or a modality `<...>`?"
                    )))
                }
            }
            Some(Tok::LParen) => {
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Some(t) => {
                self.pos -= 1;
                Err(self.err(format!("expected a formula, found {}", t.describe())))
            }
            None => Err(self.err("expected a formula, found end of input".to_string())),
        }
    }

    fn bexpr(&mut self) -> Result<BExpr, ParseError> {
        let mut lhs = self.bterm()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let rhs = self.bterm()?;
            lhs = BExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn bterm(&mut self) -> Result<BExpr, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(BExpr::not(self.bterm()?))
            }
            Some(Tok::KwTrue) => {
                self.pos += 1;
                Ok(BExpr::True)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let b = self.bexpr()?;
                self.expect(Tok::RParen)?;
                Ok(b)
            }
            _ => {
                let lhs = self.term()?;
                match self.next() {
                    Some(Tok::Eq) => Ok(BExpr::Eq(lhs, self.term()?)),
                    Some(Tok::Neq) => Ok(BExpr::neq(lhs, self.term()?)),
                    Some(t) => {
                        self.pos -= 1;
                        Err(self.err(format!("expected `=` or `!=`, found {}", t.describe())))
                    }
                    None => Err(self.err("expected `=` or `!=`, found end of input".to_string())),
                }
            }
        }
    }

    fn term(&mut self) -> Result<DataTerm, ParseError> {
        match self.next() {
            Some(Tok::Star) => Ok(DataTerm::Star),
            Some(Tok::Ident(name)) => {
                if name.chars().next().is_some_and(|c| c.is_uppercase()) {
                    self.pos -= 1;
                    Err(self.err(format!(
                        "recursion variable `{name}` cannot appear in a constraint expression"
                    )))
                } else {
                    Ok(DataTerm::Var(DataVar::new(&name)))
                }
            }
            Some(t) => {
                self.pos -= 1;
                Err(self.err(format!("expected `*` or a data variable, found {}", t.describe())))
            }
            None => Err(self.err("expected `*` or a data variable, found end of input".to_string())),
        }
    }
}

impl Parser {
    fn monitor(&mut self) -> Result<crate::monitor::Monitor, ParseError> {
        use crate::monitor::Monitor;
        let mut lhs = self.monitor_prod()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let rhs = self.monitor_prod()?;
            lhs = Monitor::par_or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn monitor_prod(&mut self) -> Result<crate::monitor::Monitor, ParseError> {
        use crate::monitor::Monitor;
        let mut lhs = self.monitor_prefix()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let rhs = self.monitor_prefix()?;
            lhs = Monitor::par_and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn monitor_prefix(&mut self) -> Result<crate::monitor::Monitor, ParseError> {
        use crate::monitor::Monitor;
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                // `(b).m` is a guard prefix; `(m)` is grouping. Try the
                // guard reading first and fall back on failure.
                let saved = self.pos;
                self.pos += 1;
                let guard_attempt = (|| -> Result<BExpr, ParseError> {
                    let b = self.bexpr()?;
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::Dot)?;
                    Ok(b)
                })();
                match guard_attempt {
                    Ok(b) => {
                        let inner = self.monitor_prefix()?;
                        Ok(Monitor::guard(b, inner))
                    }
                    Err(_) => {
                        self.pos = saved;
                        self.pos += 1;
                        let m = self.monitor()?;
                        self.expect(Tok::RParen)?;
                        Ok(m)
                    }
                }
            }
            Some(Tok::Ident(word)) if word == "guess" => {
                self.pos += 1;
                let x = self.data_var("`guess`")?;
                self.expect(Tok::Dot)?;
                let inner = self.monitor_prefix()?;
                Ok(Monitor::Guess(x, alloc::boxed::Box::new(inner)))
            }
            Some(Tok::Ident(word)) if word == "rec" => {
                self.pos += 1;
                let x = self.rec_var("`rec`")?;
                self.expect(Tok::Dot)?;
                let body = self.monitor()?;
                Ok(Monitor::Rec(x, alloc::boxed::Box::new(body)))
            }
            Some(Tok::Ident(word)) if word == "yes" => {
                self.pos += 1;
                Ok(Monitor::Yes)
            }
            Some(Tok::Ident(word)) if word == "end" => {
                self.pos += 1;
                Ok(Monitor::End)
            }
            Some(Tok::Ident(word)) if word.chars().next().is_some_and(|c| c.is_uppercase()) => {
                self.pos += 1;
                Ok(Monitor::Var(RecVar::new(&word)))
            }
            Some(t) => Err(self.err(format!("expected a monitor, found {}", t.describe()))),
            None => Err(self.err("expected a monitor, found end of input".to_string())),
        }
    }
}

/// Parses a bare constraint expression, e.g. `*=x & y!=z`.
pub fn parse_bexpr(text: &str) -> Result<BExpr, ParseError> {
    let toks = lex(text)?;
    let lines = text.lines().count().max(1);
    let last_len = text.lines().last().map(|l| l.chars().count()).unwrap_or(0);
    let mut p = Parser {
        toks,
        pos: 0,
        end_line: lines,
        end_column: last_len + 1,
    };
    let b = p.bexpr()?;
    if let Some(t) = p.peek() {
        let msg = format!("unexpected {} after the end of the expression", t.describe());
        return Err(p.err(msg));
    }
    Ok(b)
}

/// Parses a monitor from its concrete syntax (`yes end (b). guess rec | &`).
pub fn parse_monitor(text: &str) -> Result<crate::monitor::Monitor, ParseError> {
    let toks = lex(text)?;
    let lines = text.lines().count().max(1);
    let last_len = text.lines().last().map(|l| l.chars().count()).unwrap_or(0);
    let mut p = Parser {
        toks,
        pos: 0,
        end_line: lines,
        end_column: last_len + 1,
    };
    let m = p.monitor()?;
    if let Some(t) = p.peek() {
        let msg = format!("unexpected {} after the end of the monitor", t.describe());
        return Err(p.err(msg));
    }
    Ok(m)
}

/// Parses a formula from its concrete syntax. No normalization is performed.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let lines = text.lines().count().max(1);
    let last_len = text.lines().last().map(|l| l.chars().count()).unwrap_or(0);
    let mut p = Parser {
        toks,
        pos: 0,
        end_line: lines,
        end_column: last_len + 1,
    };
    let f = p.formula()?;
    if let Some(t) = p.peek() {
        let msg = format!("unexpected {} after the end of the formula", t.describe());
        return Err(p.err(msg));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{BExpr, DataVar, Formula};

    fn x() -> DataVar {
        DataVar::new("x")
    }

    #[test]
    fn parses_first_second_equal() {
        let f = parse_formula("exists x. <*=x><*=x> tt").unwrap();
        let expected = Formula::exists(
            "x",
            Formula::diamond(
                BExpr::Eq(DataTerm::Star, DataTerm::Var(x())),
                Formula::diamond(BExpr::Eq(DataTerm::Star, DataTerm::Var(x())), Formula::Tt),
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn parses_tt() {
        assert_eq!(parse_formula("tt").unwrap(), Formula::Tt);
    }

    #[test]
    fn parses_leak_body() {
        let f = parse_formula("min X. <x=*> tt | <x!=*> X").unwrap();
        let expected = Formula::min(
            "X",
            Formula::or(
                Formula::diamond(BExpr::Eq(DataTerm::Var(x()), DataTerm::Star), Formula::Tt),
                Formula::diamond(
                    BExpr::neq(DataTerm::Var(x()), DataTerm::Star),
                    Formula::rec_var("X"),
                ),
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn parses_full_leak() {
        let f = parse_formula("exists x. <x=*> min X. <x=*> tt | <x!=*> X").unwrap();
        match f {
            Formula::Exists(v, body) => {
                assert_eq!(v, x());
                assert!(matches!(*body, Formula::Diamond(_, _)));
            }
            other => panic!("unexpected shape: {other:?}"),
        }
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let f = parse_formula("tt & ff | tt").unwrap();
        assert_eq!(
            f,
            Formula::or(Formula::and(Formula::Tt, Formula::Ff), Formula::Tt)
        );
    }

    #[test]
    fn gforall_syntax() {
        let f = parse_formula("gforall x guard { tt } frees { y, z } . ff").unwrap();
        match f {
            Formula::GForall {
                guard,
                frees,
                var,
                body,
            } => {
                assert_eq!(*guard, Formula::Tt);
                assert_eq!(frees, alloc::vec![DataVar::new("y"), DataVar::new("z")]);
                assert_eq!(var, x());
                assert_eq!(*body, Formula::Ff);
            }
            other => panic!("unexpected shape: {other:?}"),
        }
    }

    #[test]
    fn error_carries_position() {
        let err = parse_formula("exists x.\n  <*=x> %").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.column, 9);
    }

    #[test]
    fn error_on_unknown_operator() {
        assert!(parse_formula("tt @ ff").is_err());
    }

    #[test]
    fn error_on_lowercase_fix_binder() {
        assert!(parse_formula("min x. tt").is_err());
        assert!(parse_formula("exists X. tt").is_err());
    }
}

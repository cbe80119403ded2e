//! Growth-rate expressions: parsing, evaluation, and exact symbolic
//! differentiation on a small node grammar.
//!
//! Variables are named `u1..uN` (with `u`, `v` as aliases when N = 2).
//! The grammar covers constants, `+ - * /`, unary minus, integer powers,
//! and the unary functions `exp` and `log` — rich enough for Lotka-Volterra
//! and saturating growth laws while keeping differentiation total.

use crate::error::{Error, Result};

/// Expression syntax tree. Variable indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Const(f64),
    Var(usize),
    Neg(Box<ExprAst>),
    Add(Box<ExprAst>, Box<ExprAst>),
    Sub(Box<ExprAst>, Box<ExprAst>),
    Mul(Box<ExprAst>, Box<ExprAst>),
    Div(Box<ExprAst>, Box<ExprAst>),
    /// Power with a literal integer exponent.
    Pow(Box<ExprAst>, i32),
    Exp(Box<ExprAst>),
    Log(Box<ExprAst>),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token together with its starting byte position.
    fn next(&mut self) -> Result<(Token, usize)> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Token::Eof, start));
        }
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Token::Plus
            }
            b'-' => {
                self.pos += 1;
                Token::Minus
            }
            b'*' => {
                self.pos += 1;
                Token::Star
            }
            b'/' => {
                self.pos += 1;
                Token::Slash
            }
            b'^' => {
                self.pos += 1;
                Token::Caret
            }
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_digit() || self.src[end] == b'.')
                {
                    end += 1;
                }
                // Exponent part: 1e-3, 2.5E+4.
                if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                    let mut probe = end + 1;
                    if probe < self.src.len() && (self.src[probe] == b'+' || self.src[probe] == b'-')
                    {
                        probe += 1;
                    }
                    if probe < self.src.len() && self.src[probe].is_ascii_digit() {
                        while probe < self.src.len() && self.src[probe].is_ascii_digit() {
                            probe += 1;
                        }
                        end = probe;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..end]).unwrap();
                let value = text.parse::<f64>().map_err(|_| Error::Parse {
                    position: start,
                    message: format!("malformed number '{text}'"),
                })?;
                self.pos = end;
                Token::Number(value)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[start..end]).unwrap().to_string();
                self.pos = end;
                Token::Ident(text)
            }
            other => {
                return Err(Error::Parse {
                    position: start,
                    message: format!("unexpected character '{}'", other as char),
                })
            }
        };
        Ok((tok, start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: Token,
    current_pos: usize,
    num_vars: usize,
    constants: &'a [(String, f64)],
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, num_vars: usize, constants: &'a [(String, f64)]) -> Result<Self> {
        let mut lexer = Lexer::new(src);
        let (current, current_pos) = lexer.next()?;
        Ok(Parser {
            lexer,
            current,
            current_pos,
            num_vars,
            constants,
        })
    }

    fn advance(&mut self) -> Result<()> {
        let (tok, pos) = self.lexer.next()?;
        self.current = tok;
        self.current_pos = pos;
        Ok(())
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            position: self.current_pos,
            message: message.into(),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<ExprAst> {
        let mut lhs = self.term()?;
        loop {
            match self.current {
                Token::Plus => {
                    self.advance()?;
                    lhs = ExprAst::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.advance()?;
                    lhs = ExprAst::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // term := unary (('*'|'/') unary)*
    fn term(&mut self) -> Result<ExprAst> {
        let mut lhs = self.unary()?;
        loop {
            match self.current {
                Token::Star => {
                    self.advance()?;
                    lhs = ExprAst::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Token::Slash => {
                    self.advance()?;
                    lhs = ExprAst::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary := '-' unary | power   (power binds tighter: -u^2 == -(u^2))
    fn unary(&mut self) -> Result<ExprAst> {
        if self.current == Token::Minus {
            self.advance()?;
            return Ok(ExprAst::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    // power := atom ('^' signed-integer)?
    fn power(&mut self) -> Result<ExprAst> {
        let base = self.atom()?;
        if self.current == Token::Caret {
            self.advance()?;
            let negative = if self.current == Token::Minus {
                self.advance()?;
                true
            } else {
                false
            };
            let exponent = match self.current {
                Token::Number(n) => {
                    if n.fract() != 0.0 || n.abs() > i32::MAX as f64 {
                        return Err(self.err(format!("exponent {n} must be an integer")));
                    }
                    self.advance()?;
                    n as i32
                }
                _ => return Err(self.err("expected integer exponent after '^'")),
            };
            let exponent = if negative { -exponent } else { exponent };
            return Ok(ExprAst::Pow(Box::new(base), exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprAst> {
        match self.current.clone() {
            Token::Number(n) => {
                self.advance()?;
                Ok(ExprAst::Const(n))
            }
            Token::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                if self.current != Token::RParen {
                    return Err(self.err("expected ')'"));
                }
                self.advance()?;
                Ok(inner)
            }
            Token::Ident(name) => {
                let pos = self.current_pos;
                self.advance()?;
                if self.current == Token::LParen {
                    let func = match name.as_str() {
                        "exp" => ExprAst::Exp as fn(Box<ExprAst>) -> ExprAst,
                        "log" => ExprAst::Log as fn(Box<ExprAst>) -> ExprAst,
                        _ => {
                            return Err(Error::Parse {
                                position: pos,
                                message: format!("unknown function '{name}'"),
                            })
                        }
                    };
                    self.advance()?;
                    let arg = self.expr()?;
                    if self.current != Token::RParen {
                        return Err(self.err("expected ')'"));
                    }
                    self.advance()?;
                    return Ok(func(Box::new(arg)));
                }
                self.resolve_ident(&name, pos)
            }
            Token::Eof => Err(self.err("unexpected end of expression")),
            _ => Err(self.err("expected a number, variable, or '('")),
        }
    }

    fn resolve_ident(&self, name: &str, pos: usize) -> Result<ExprAst> {
        if name == "u" && self.num_vars <= 2 {
            return Ok(ExprAst::Var(0));
        }
        if name == "v" && self.num_vars == 2 {
            return Ok(ExprAst::Var(1));
        }
        if let Some(rest) = name.strip_prefix('u') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let k: usize = rest.parse().map_err(|_| Error::Parse {
                    position: pos,
                    message: format!("malformed variable '{name}'"),
                })?;
                if k == 0 || k > self.num_vars {
                    return Err(Error::Parse {
                        position: pos,
                        message: format!(
                            "variable '{name}' out of range; {} variable(s) declared",
                            self.num_vars
                        ),
                    });
                }
                return Ok(ExprAst::Var(k - 1));
            }
        }
        if let Some((_, value)) = self.constants.iter().find(|(n, _)| n == name) {
            return Ok(ExprAst::Const(*value));
        }
        Err(Error::Parse {
            position: pos,
            message: format!("unknown identifier '{name}'"),
        })
    }
}

/// Parse `text` over variables `u1..u<num_vars>` (aliases `u`, `v` for
/// two variables). Errors report the byte position of the offending token.
pub fn parse(text: &str, num_vars: usize) -> Result<ExprAst> {
    parse_with_constants(text, num_vars, &[])
}

/// [`parse`] with additional named constants folded in at parse time
/// (used by parameter sweeps).
pub fn parse_with_constants(
    text: &str,
    num_vars: usize,
    constants: &[(String, f64)],
) -> Result<ExprAst> {
    if text.trim().is_empty() {
        return Err(Error::Parse {
            position: 0,
            message: "empty expression".into(),
        });
    }
    if num_vars == 0 {
        return Err(Error::Parse {
            position: 0,
            message: "at least one variable must be declared".into(),
        });
    }
    let mut parser = Parser::new(text, num_vars, constants)?;
    let ast = parser.expr()?;
    if parser.current != Token::Eof {
        return Err(parser.err("unexpected trailing input"));
    }
    Ok(ast)
}

/// All identifiers appearing in `text` (variables, functions, and named
/// constants alike), in source order.
pub fn identifiers(text: &str) -> Vec<String> {
    let mut lexer = Lexer::new(text);
    let mut out = Vec::new();
    while let Ok((tok, _)) = lexer.next() {
        match tok {
            Token::Ident(name) => out.push(name),
            Token::Eof => break,
            _ => {}
        }
    }
    out
}

impl ExprAst {
    /// Evaluate at `point`; `point[i]` is the value of variable i.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        let v = self.eval_inner(point)?;
        if !v.is_finite() {
            return Err(Error::EvalDomain(format!("non-finite result {v}")));
        }
        Ok(v)
    }

    fn eval_inner(&self, point: &[f64]) -> Result<f64> {
        Ok(match self {
            ExprAst::Const(c) => *c,
            ExprAst::Var(i) => {
                if *i >= point.len() {
                    return Err(Error::EvalDomain(format!(
                        "variable u{} evaluated at a point of dimension {}",
                        i + 1,
                        point.len()
                    )));
                }
                point[*i]
            }
            ExprAst::Neg(e) => -e.eval_inner(point)?,
            ExprAst::Add(a, b) => a.eval_inner(point)? + b.eval_inner(point)?,
            ExprAst::Sub(a, b) => a.eval_inner(point)? - b.eval_inner(point)?,
            ExprAst::Mul(a, b) => a.eval_inner(point)? * b.eval_inner(point)?,
            ExprAst::Div(a, b) => {
                let den = b.eval_inner(point)?;
                if den == 0.0 {
                    return Err(Error::EvalDomain("division by zero".into()));
                }
                a.eval_inner(point)? / den
            }
            ExprAst::Pow(base, k) => {
                let b = base.eval_inner(point)?;
                if b == 0.0 && *k < 0 {
                    return Err(Error::EvalDomain("zero raised to a negative power".into()));
                }
                b.powi(*k)
            }
            ExprAst::Exp(e) => e.eval_inner(point)?.exp(),
            ExprAst::Log(e) => {
                let arg = e.eval_inner(point)?;
                if arg <= 0.0 {
                    return Err(Error::EvalDomain(format!("log of non-positive value {arg}")));
                }
                arg.ln()
            }
        })
    }

    /// Exact partial derivative with respect to variable `var`, as a new
    /// tree (constant-folded).
    pub fn differentiate(&self, var: usize) -> ExprAst {
        let d = match self {
            ExprAst::Const(_) => ExprAst::Const(0.0),
            ExprAst::Var(i) => ExprAst::Const(if *i == var { 1.0 } else { 0.0 }),
            ExprAst::Neg(e) => ExprAst::Neg(Box::new(e.differentiate(var))),
            ExprAst::Add(a, b) => ExprAst::Add(
                Box::new(a.differentiate(var)),
                Box::new(b.differentiate(var)),
            ),
            ExprAst::Sub(a, b) => ExprAst::Sub(
                Box::new(a.differentiate(var)),
                Box::new(b.differentiate(var)),
            ),
            ExprAst::Mul(a, b) => ExprAst::Add(
                Box::new(ExprAst::Mul(Box::new(a.differentiate(var)), b.clone())),
                Box::new(ExprAst::Mul(a.clone(), Box::new(b.differentiate(var)))),
            ),
            ExprAst::Div(a, b) => ExprAst::Div(
                Box::new(ExprAst::Sub(
                    Box::new(ExprAst::Mul(Box::new(a.differentiate(var)), b.clone())),
                    Box::new(ExprAst::Mul(a.clone(), Box::new(b.differentiate(var)))),
                )),
                Box::new(ExprAst::Pow(b.clone(), 2)),
            ),
            ExprAst::Pow(base, k) => {
                if *k == 0 {
                    ExprAst::Const(0.0)
                } else {
                    ExprAst::Mul(
                        Box::new(ExprAst::Mul(
                            Box::new(ExprAst::Const(*k as f64)),
                            Box::new(ExprAst::Pow(base.clone(), k - 1)),
                        )),
                        Box::new(base.differentiate(var)),
                    )
                }
            }
            ExprAst::Exp(e) => ExprAst::Mul(
                Box::new(ExprAst::Exp(e.clone())),
                Box::new(e.differentiate(var)),
            ),
            ExprAst::Log(e) => ExprAst::Div(Box::new(e.differentiate(var)), e.clone()),
        };
        d.simplified()
    }

    /// Constant folding plus identity elimination (x+0, x*1, x*0, x^1, ...).
    #[allow(clippy::redundant_guards)] // f64 literals cannot appear in patterns
    pub fn simplified(&self) -> ExprAst {
        match self {
            ExprAst::Const(_) | ExprAst::Var(_) => self.clone(),
            ExprAst::Neg(e) => match e.simplified() {
                ExprAst::Const(c) => ExprAst::Const(-c),
                ExprAst::Neg(inner) => *inner,
                s => ExprAst::Neg(Box::new(s)),
            },
            ExprAst::Add(a, b) => match (a.simplified(), b.simplified()) {
                (ExprAst::Const(x), ExprAst::Const(y)) => ExprAst::Const(x + y),
                (ExprAst::Const(c), s) if c == 0.0 => s,
                (s, ExprAst::Const(c)) if c == 0.0 => s,
                (x, y) => ExprAst::Add(Box::new(x), Box::new(y)),
            },
            ExprAst::Sub(a, b) => match (a.simplified(), b.simplified()) {
                (ExprAst::Const(x), ExprAst::Const(y)) => ExprAst::Const(x - y),
                (s, ExprAst::Const(c)) if c == 0.0 => s,
                (ExprAst::Const(c), s) if c == 0.0 => ExprAst::Neg(Box::new(s)).simplified(),
                (x, y) => ExprAst::Sub(Box::new(x), Box::new(y)),
            },
            ExprAst::Mul(a, b) => match (a.simplified(), b.simplified()) {
                (ExprAst::Const(x), ExprAst::Const(y)) => ExprAst::Const(x * y),
                (ExprAst::Const(c), _) | (_, ExprAst::Const(c)) if c == 0.0 => ExprAst::Const(0.0),
                (ExprAst::Const(c), s) if c == 1.0 => s,
                (s, ExprAst::Const(c)) if c == 1.0 => s,
                (x, y) => ExprAst::Mul(Box::new(x), Box::new(y)),
            },
            ExprAst::Div(a, b) => match (a.simplified(), b.simplified()) {
                (ExprAst::Const(x), ExprAst::Const(y)) if y != 0.0 => ExprAst::Const(x / y),
                (ExprAst::Const(c), _) if c == 0.0 => ExprAst::Const(0.0),
                (s, ExprAst::Const(c)) if c == 1.0 => s,
                (x, y) => ExprAst::Div(Box::new(x), Box::new(y)),
            },
            ExprAst::Pow(base, k) => match (base.simplified(), k) {
                (_, 0) => ExprAst::Const(1.0),
                (s, 1) => s,
                (ExprAst::Const(c), k) => ExprAst::Const(c.powi(*k)),
                (s, k) => ExprAst::Pow(Box::new(s), *k),
            },
            ExprAst::Exp(e) => ExprAst::Exp(Box::new(e.simplified())),
            ExprAst::Log(e) => ExprAst::Log(Box::new(e.simplified())),
        }
    }

    /// Freeze every variable except `keep` at `frozen[j]`, remapping the
    /// surviving variable to index 0. The result is a one-variable section.
    pub fn section(&self, keep: usize, frozen: &[f64]) -> ExprAst {
        self.substitute(keep, frozen).simplified()
    }

    fn substitute(&self, keep: usize, frozen: &[f64]) -> ExprAst {
        match self {
            ExprAst::Const(c) => ExprAst::Const(*c),
            ExprAst::Var(i) => {
                if *i == keep {
                    ExprAst::Var(0)
                } else {
                    ExprAst::Const(frozen[*i])
                }
            }
            ExprAst::Neg(e) => ExprAst::Neg(Box::new(e.substitute(keep, frozen))),
            ExprAst::Add(a, b) => ExprAst::Add(
                Box::new(a.substitute(keep, frozen)),
                Box::new(b.substitute(keep, frozen)),
            ),
            ExprAst::Sub(a, b) => ExprAst::Sub(
                Box::new(a.substitute(keep, frozen)),
                Box::new(b.substitute(keep, frozen)),
            ),
            ExprAst::Mul(a, b) => ExprAst::Mul(
                Box::new(a.substitute(keep, frozen)),
                Box::new(b.substitute(keep, frozen)),
            ),
            ExprAst::Div(a, b) => ExprAst::Div(
                Box::new(a.substitute(keep, frozen)),
                Box::new(b.substitute(keep, frozen)),
            ),
            ExprAst::Pow(base, k) => ExprAst::Pow(Box::new(base.substitute(keep, frozen)), *k),
            ExprAst::Exp(e) => ExprAst::Exp(Box::new(e.substitute(keep, frozen))),
            ExprAst::Log(e) => ExprAst::Log(Box::new(e.substitute(keep, frozen))),
        }
    }

    /// Canonical fully-parenthesized printing; `parse(print(ast))` evaluates
    /// identically to `ast`.
    pub fn print(&self) -> String {
        match self {
            ExprAst::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    format!("({c:?})")
                } else {
                    format!("{c:?}")
                }
            }
            ExprAst::Var(i) => format!("u{}", i + 1),
            ExprAst::Neg(e) => format!("(-{})", e.print()),
            ExprAst::Add(a, b) => format!("({} + {})", a.print(), b.print()),
            ExprAst::Sub(a, b) => format!("({} - {})", a.print(), b.print()),
            ExprAst::Mul(a, b) => format!("({} * {})", a.print(), b.print()),
            ExprAst::Div(a, b) => format!("({} / {})", a.print(), b.print()),
            ExprAst::Pow(base, k) => format!("({}^{})", base.print(), k),
            ExprAst::Exp(e) => format!("exp({})", e.print()),
            ExprAst::Log(e) => format!("log({})", e.print()),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            ExprAst::Const(_) => None,
            ExprAst::Var(i) => Some(*i),
            ExprAst::Neg(e) | ExprAst::Exp(e) | ExprAst::Log(e) => e.max_var(),
            ExprAst::Pow(e, _) => e.max_var(),
            ExprAst::Add(a, b) | ExprAst::Sub(a, b) | ExprAst::Mul(a, b) | ExprAst::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (None, m) | (m, None) => m,
                    (Some(x), Some(y)) => Some(x.max(y)),
                }
            }
        }
    }
}

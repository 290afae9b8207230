use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::expr::{DiffExpr, Monomial, Q};
use super::space::{JetSpace, MultiIndex, Symbol, Var};

/// Dependent slot used for `D[...]` tokens inside operator strings.
const OPERATOR_SLOT: u8 = u8::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown name `{name}` at {pos}")]
    UnknownName { pos: usize, name: String },
    #[error("negative exponent on odd variable at {pos}")]
    NegativeOddExponent { pos: usize },
    #[error("negative exponent on a non-monomial at {pos}")]
    NegativeNonMonomial { pos: usize },
    #[error("jet token at {pos} has {got} indices, expected {expected}")]
    JetArity {
        pos: usize,
        got: usize,
        expected: usize,
    },
    #[error("operator string is not linear in D at {pos}")]
    NonlinearOperator { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Q),
    Int(u64),
    Name(String),
    LBracket,
    RBracket,
    Comma,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Caret,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        self.skip_ws();
        let pos = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((pos, Tok::End));
        };
        let tok = match c {
            b'0'..=b'9' => {
                let num = self.digits();
                let n: BigInt = num.parse().map_err(|_| ParseError::Syntax {
                    pos,
                    msg: "bad integer".into(),
                })?;
                let save = self.pos;
                self.skip_ws();
                if self.src.get(self.pos) == Some(&b'/') {
                    self.pos += 1;
                    self.skip_ws();
                    let dpos = self.pos;
                    let den = self.digits();
                    if den.is_empty() {
                        return Err(ParseError::Syntax {
                            pos: dpos,
                            msg: "expected denominator".into(),
                        });
                    }
                    let d: BigInt = den.parse().map_err(|_| ParseError::Syntax {
                        pos: dpos,
                        msg: "bad denominator".into(),
                    })?;
                    if d.is_zero() {
                        return Err(ParseError::Syntax {
                            pos: dpos,
                            msg: "zero denominator".into(),
                        });
                    }
                    Tok::Num(Q::new(n, d))
                } else {
                    self.pos = save;
                    match num.parse::<u64>() {
                        Ok(k) => Tok::Int(k),
                        Err(_) => Tok::Num(Q::from_integer(n)),
                    }
                }
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                return Ok((pos, Tok::Name(s.to_string())));
            }
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b',' => Tok::Comma,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'^' => Tok::Caret,
            _ => {
                return Err(ParseError::Syntax {
                    pos,
                    msg: format!("unexpected character `{}`", c as char),
                })
            }
        };
        if !matches!(tok, Tok::Num(_) | Tok::Int(_)) {
            self.pos += 1;
        }
        Ok((pos, tok))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    cur: (usize, Tok),
    space: &'a JetSpace,
    operator: bool,
    depth: usize,
}

const MAX_DEPTH: usize = 200;

impl<'a> Parser<'a> {
    fn new(text: &'a str, space: &'a JetSpace, operator: bool) -> Result<Self, ParseError> {
        let mut lex = Lexer {
            src: text.as_bytes(),
            pos: 0,
        };
        let cur = lex.next()?;
        Ok(Parser {
            lex,
            cur,
            space,
            operator,
            depth: 0,
        })
    }

    fn bump(&mut self) -> Result<(usize, Tok), ParseError> {
        let next = self.lex.next()?;
        Ok(std::mem::replace(&mut self.cur, next))
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.cur.1 == t {
            self.bump()?;
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos: self.cur.0,
                msg: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<DiffExpr, ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::Syntax {
                pos: self.cur.0,
                msg: "nesting too deep".into(),
            });
        }
        let mut acc = self.product()?;
        loop {
            match self.cur.1 {
                Tok::Plus => {
                    self.bump()?;
                    acc += self.product()?;
                }
                Tok::Minus => {
                    self.bump()?;
                    acc -= self.product()?;
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn product(&mut self) -> Result<DiffExpr, ParseError> {
        let mut acc = self.unary()?;
        while self.cur.1 == Tok::Star {
            self.bump()?;
            let rhs = self.unary()?;
            acc = &acc * &rhs;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<DiffExpr, ParseError> {
        match self.cur.1 {
            Tok::Minus => {
                self.bump()?;
                self.depth += 1;
                if self.depth > MAX_DEPTH {
                    return Err(ParseError::Syntax {
                        pos: self.cur.0,
                        msg: "nesting too deep".into(),
                    });
                }
                let e = self.unary()?;
                self.depth -= 1;
                Ok(-e)
            }
            Tok::Plus => {
                self.bump()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<DiffExpr, ParseError> {
        let base = self.atom()?;
        if self.cur.1 != Tok::Caret {
            return Ok(base);
        }
        let pos = self.cur.0;
        self.bump()?;
        let negative = if self.cur.1 == Tok::Minus {
            self.bump()?;
            true
        } else {
            false
        };
        let epos = self.cur.0;
        let k = match self.bump()?.1 {
            Tok::Int(k) if k <= 10_000 => k as i32,
            Tok::Int(_) => {
                return Err(ParseError::Syntax {
                    pos: epos,
                    msg: "exponent too large".into(),
                })
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos: epos,
                    msg: "expected integer exponent".into(),
                })
            }
        };
        if !negative {
            return Ok(base.pow(k as u32));
        }
        if base.terms().any(|(m, _)| m.odd_degree() > 0) {
            return Err(ParseError::NegativeOddExponent { pos });
        }
        base.pow_i(-k)
            .ok_or(ParseError::NegativeNonMonomial { pos })
    }

    fn indices(&mut self) -> Result<Vec<u8>, ParseError> {
        self.expect(Tok::LBracket, "`[`")?;
        let mut out = Vec::new();
        loop {
            let pos = self.cur.0;
            match self.bump()?.1 {
                Tok::Int(k) if k <= 64 => out.push(k as u8),
                _ => {
                    return Err(ParseError::Syntax {
                        pos,
                        msg: "expected small non-negative integer index".into(),
                    })
                }
            }
            match self.cur.1 {
                Tok::Comma => {
                    self.bump()?;
                }
                Tok::RBracket => {
                    self.bump()?;
                    return Ok(out);
                }
                _ => {
                    return Err(ParseError::Syntax {
                        pos: self.cur.0,
                        msg: "expected `,` or `]`".into(),
                    })
                }
            }
        }
    }

    fn multi_index(&mut self, pos: usize) -> Result<MultiIndex, ParseError> {
        let idx = self.indices()?;
        let n = self.space.n();
        if idx.len() != n {
            return Err(ParseError::JetArity {
                pos,
                got: idx.len(),
                expected: n,
            });
        }
        Ok(MultiIndex::from_slice(&idx))
    }

    fn atom(&mut self) -> Result<DiffExpr, ParseError> {
        let (pos, tok) = self.bump()?;
        match tok {
            Tok::Int(k) => Ok(DiffExpr::constant(Q::from_integer(BigInt::from(k)))),
            Tok::Num(c) => Ok(DiffExpr::constant(c)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Name(name) => {
                if self.operator && name == "D" {
                    let idx = self.multi_index(pos)?;
                    return Ok(DiffExpr::even(Var::Jet(OPERATOR_SLOT, idx)));
                }
                let sym = self
                    .space
                    .lookup(&name)
                    .ok_or(ParseError::UnknownName { pos, name })?;
                match sym {
                    Symbol::Indep(i) => Ok(DiffExpr::even(Var::Indep(i as u8))),
                    Symbol::Param(i) => Ok(DiffExpr::even(Var::Param(i as u8))),
                    Symbol::Nonlocal(i) => Ok(DiffExpr::var(
                        Var::Nonlocal(i as u8),
                        self.space.nonlocal()[i].odd,
                    )),
                    Symbol::Dependent(j) => {
                        let idx = if self.cur.1 == Tok::LBracket {
                            self.multi_index(pos)?
                        } else {
                            MultiIndex::zero()
                        };
                        Ok(DiffExpr::jet(j, idx, self.space.dependent()[j].odd))
                    }
                }
            }
            _ => Err(ParseError::Syntax {
                pos,
                msg: "expected a number, name or `(`".into(),
            }),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if self.cur.1 != Tok::End {
            return Err(ParseError::Syntax {
                pos: self.cur.0,
                msg: "unexpected trailing input".into(),
            });
        }
        Ok(())
    }
}

pub fn parse(text: &str, space: &JetSpace) -> Result<DiffExpr, ParseError> {
    let mut p = Parser::new(text, space, false)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses `Σ a_I * D[I]` into its coefficient map.  `D[...]` tokens act as
/// formal symbols; each term must contain at most one of them, to the first power.
pub fn parse_operator(
    text: &str,
    space: &JetSpace,
) -> Result<BTreeMap<MultiIndex, DiffExpr>, ParseError> {
    let mut p = Parser::new(text, space, true)?;
    let e = p.expr()?;
    p.finish()?;
    let mut out: BTreeMap<MultiIndex, DiffExpr> = BTreeMap::new();
    let groups = e.collect(|v| matches!(v, Var::Jet(OPERATOR_SLOT, _)));
    for (key, coef) in groups {
        let idx = match key.even() {
            [] => MultiIndex::zero(),
            [(Var::Jet(_, i), 1)] => *i,
            _ => return Err(ParseError::NonlinearOperator { pos: 0 }),
        };
        out.entry(idx).or_default().add_scaled(&coef, &Q::one());
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

fn render_q(out: &mut String, c: &Q) {
    if c.is_integer() {
        let _ = write!(out, "{}", c.numer());
    } else {
        let _ = write!(out, "{}/{}", c.numer(), c.denom());
    }
}

pub fn render_monomial(m: &Monomial, space: &JetSpace) -> String {
    let mut parts = Vec::new();
    for (v, e) in m.even() {
        let name = space.var_name(v);
        if *e == 1 {
            parts.push(name);
        } else {
            parts.push(format!("{name}^{e}"));
        }
    }
    for v in m.odd() {
        parts.push(space.var_name(v));
    }
    parts.join("*")
}

pub fn render(e: &DiffExpr, space: &JetSpace) -> String {
    if e.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (m, c)) in e.ordered_terms().into_iter().enumerate() {
        let neg = c.is_negative();
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let a = c.abs();
        if m.is_one() {
            render_q(&mut out, &a);
        } else {
            if !a.is_one() {
                render_q(&mut out, &a);
                out.push('*');
            }
            out.push_str(&render_monomial(m, space));
        }
    }
    out
}

/// Renders `Σ a_I D_I` in the operator-string grammar.
pub fn render_operator(entry: &BTreeMap<MultiIndex, DiffExpr>, space: &JetSpace) -> String {
    let mut parts = Vec::new();
    for (idx, a) in entry.iter().rev() {
        if a.is_zero() {
            continue;
        }
        let c = render(a, space);
        if idx.is_zero() {
            parts.push(format!("({c})"));
        } else {
            let exps: Vec<String> = idx
                .exponents(space.n())
                .iter()
                .map(|e| e.to_string())
                .collect();
            parts.push(format!("({c})*D[{}]", exps.join(",")));
        }
    }
    if parts.is_empty() {
        "0".to_string()
    } else {
        parts.join(" + ")
    }
}

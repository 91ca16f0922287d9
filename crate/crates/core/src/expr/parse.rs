//! Infix expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' int | '^' '(' int ')')?      int may carry a leading '-'
//! atom   := number | ident | ident '(' args ')' | '(' expr ')'
//! ident  := [A-Za-z][A-Za-z0-9]* ('_' (letters | digits | '{' letters '}'))?
//! ```
//!
//! A letter suffix is a jet derivative (`y_tt`); a digit suffix on a called
//! name is an opaque partial derivative by argument slot (`V_1(y)`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::{normalize, Expr, ExprError, FnKind, Symbol, Tree};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident { head: String, suffix: String },
    Op(char),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

fn err(pos: usize, msg: impl Into<String>) -> ExprError {
    ExprError::Parse {
        pos,
        msg: msg.into(),
    }
}

impl<'a> Lexer<'a> {
    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek_char() {
            if !f(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, ExprError> {
        let mut out = Vec::new();
        loop {
            self.take_while(char::is_whitespace);
            let start = self.pos;
            let Some(c) = self.peek_char() else {
                break;
            };
            if c.is_ascii_digit() || c == '.' {
                let text = self.number_text();
                let v = decimal(text).ok_or_else(|| err(start, format!("bad number `{text}`")))?;
                out.push((start, Tok::Num(v)));
            } else if c.is_ascii_alphabetic() {
                let head = self.take_while(|c| c.is_ascii_alphanumeric()).to_string();
                let mut suffix = String::new();
                if self.peek_char() == Some('_') {
                    self.bump();
                    if self.peek_char() == Some('{') {
                        self.bump();
                        suffix = self.take_while(|c| c.is_ascii_alphanumeric()).to_string();
                        if self.bump() != Some('}') {
                            return Err(err(self.pos, "expected `}` closing derivative suffix"));
                        }
                    } else {
                        suffix = self.take_while(|c| c.is_ascii_alphanumeric()).to_string();
                    }
                    let letters = suffix.chars().all(|c| c.is_ascii_alphabetic());
                    let digits = suffix.chars().all(|c| c.is_ascii_digit());
                    if suffix.is_empty() || !(letters || digits) {
                        return Err(err(start, format!("malformed suffix on `{head}`")));
                    }
                }
                out.push((start, Tok::Ident { head, suffix }));
            } else if "+-*/^(),".contains(c) {
                self.bump();
                out.push((start, Tok::Op(c)));
            } else {
                return Err(err(start, format!("unexpected character `{c}`")));
            }
        }
        Ok(out)
    }

    fn number_text(&mut self) -> &'a str {
        let start = self.pos;
        self.take_while(|c| c.is_ascii_digit());
        if self.peek_char() == Some('.') {
            self.bump();
            self.take_while(|c| c.is_ascii_digit());
        }
        let rest = &self.src[self.pos..];
        let mut it = rest.chars();
        if matches!(it.next(), Some('e') | Some('E')) {
            let after: String = it.take(2).collect();
            let ok = after.starts_with(|c: char| c.is_ascii_digit())
                || (after.starts_with('-') || after.starts_with('+'))
                    && after[1..].starts_with(|c: char| c.is_ascii_digit());
            if ok {
                self.bump();
                if matches!(self.peek_char(), Some('-') | Some('+')) {
                    self.bump();
                }
                self.take_while(|c| c.is_ascii_digit());
            }
        }
        &self.src[start..self.pos]
    }
}

/// Exact value of a decimal literal such as `12`, `0.25` or `1e-3`.
fn decimal(text: &str) -> Option<BigRational> {
    let (mant, exp) = match text.find(['e', 'E']) {
        Some(k) => (&text[..k], text[k + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int, frac) = match mant.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mant, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = digits.parse().ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut v = BigRational::from_integer(n);
    let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        v *= factor;
    } else {
        v /= factor;
    }
    Some(v)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    k: usize,
    end: usize,
}

impl Parser {
    fn pos(&self) -> usize {
        self.toks.get(self.k).map_or(self.end, |t| t.0)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.k).map(|t| &t.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.k += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Tree, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                let t = self.term()?;
                terms.push(negate(t));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Tree::Add(terms)
        })
    }

    fn term(&mut self) -> Result<Tree, ExprError> {
        let mut fs = vec![self.unary()?];
        loop {
            if self.eat('*') {
                fs.push(self.unary()?);
            } else if self.eat('/') {
                let d = self.unary()?;
                fs.push(Tree::Pow(Box::new(d), -1));
            } else {
                break;
            }
        }
        Ok(if fs.len() == 1 { fs.pop().unwrap() } else { Tree::Mul(fs) })
    }

    fn unary(&mut self) -> Result<Tree, ExprError> {
        if self.eat('-') {
            return Ok(negate(self.unary()?));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Tree, ExprError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let paren = self.eat('(');
        let neg = self.eat('-');
        let at = self.pos();
        let n = match self.peek() {
            Some(Tok::Num(v)) if v.is_integer() => {
                let v = v.to_integer();
                self.k += 1;
                i64::try_from(v).map_err(|_| err(at, "exponent too large"))?
            }
            _ => return Err(err(at, "exponent must be an integer")),
        };
        if paren && !self.eat(')') {
            return Err(err(self.pos(), "expected `)` after exponent"));
        }
        Ok(Tree::Pow(Box::new(base), if neg { -n } else { n }))
    }

    fn atom(&mut self) -> Result<Tree, ExprError> {
        let at = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.k += 1;
                Ok(Tree::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.k += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(err(self.pos(), "expected `)`"));
                }
                Ok(e)
            }
            Some(Tok::Ident { head, suffix }) => {
                self.k += 1;
                if self.eat('(') {
                    let mut args = Vec::new();
                    if !self.eat(')') {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(')') {
                                break;
                            }
                            if !self.eat(',') {
                                return Err(err(self.pos(), "expected `,` or `)`"));
                            }
                        }
                    }
                    self.call(at, head, suffix, args)
                } else {
                    if suffix.chars().any(|c| c.is_ascii_digit()) {
                        return Err(err(at, format!("`{head}_{suffix}` needs an argument list")));
                    }
                    Ok(Tree::Sym(Symbol::jet(&head, &suffix)))
                }
            }
            Some(Tok::Op(c)) => Err(err(at, format!("unexpected `{c}`"))),
            None => Err(err(at, "unexpected end of input")),
        }
    }

    fn call(&self, at: usize, head: String, suffix: String, args: Vec<Tree>) -> Result<Tree, ExprError> {
        if let Some(kind) = FnKind::from_name(&head) {
            if !suffix.is_empty() {
                return Err(err(at, format!("built-in `{head}` takes no suffix")));
            }
            if args.len() != 1 {
                return Err(err(
                    at,
                    format!("arity mismatch: `{head}` takes 1 argument, got {}", args.len()),
                ));
            }
            return Ok(Tree::Func(kind, Box::new(args.into_iter().next().unwrap())));
        }
        if args.is_empty() {
            return Err(err(at, format!("`{head}` called with no arguments")));
        }
        if suffix.chars().any(|c| c.is_ascii_alphabetic()) {
            return Err(err(at, format!("function `{head}` cannot carry a jet suffix")));
        }
        let mut derivs = Vec::new();
        for c in suffix.chars() {
            let d = c.to_digit(10).unwrap() as usize;
            if d == 0 || d > args.len() {
                return Err(err(at, format!("derivative slot {d} out of range for `{head}`")));
            }
            derivs.push((d - 1) as u8);
        }
        Ok(Tree::Opaque {
            name: head,
            derivs,
            args,
        })
    }
}

fn negate(t: Tree) -> Tree {
    match t {
        Tree::Num(v) => Tree::Num(-v),
        other => Tree::Mul(vec![Tree::Num(-BigRational::one()), other]),
    }
}

/// Parse infix text into a raw tree.
pub fn parse_tree(src: &str) -> Result<Tree, ExprError> {
    let toks = Lexer { src, pos: 0 }.tokens()?;
    if toks.is_empty() {
        return Err(err(0, "empty expression"));
    }
    let mut p = Parser {
        toks,
        k: 0,
        end: src.len(),
    };
    let t = p.expr()?;
    if p.k != p.toks.len() {
        return Err(err(p.pos(), "unexpected trailing input"));
    }
    Ok(t)
}

/// Parse and normalize.
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    normalize(&parse_tree(src)?)
}

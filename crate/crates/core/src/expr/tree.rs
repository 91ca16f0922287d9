use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Atom, Expr, ExprError, FnKind, Poly, Symbol};

/// Raw, possibly unnormalized expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Tree {
    Num(BigRational),
    Sym(Symbol),
    Add(Vec<Tree>),
    Mul(Vec<Tree>),
    Pow(Box<Tree>, i64),
    Func(FnKind, Box<Tree>),
    Opaque {
        name: String,
        derivs: Vec<u8>,
        args: Vec<Tree>,
    },
}

/// Map a raw tree to its normal form.
pub fn normalize(t: &Tree) -> Result<Expr, ExprError> {
    Ok(match t {
        Tree::Num(c) => Expr::rational(c.clone()),
        Tree::Sym(s) => Expr::symbol(s.clone()),
        Tree::Add(xs) => {
            let mut acc = Expr::zero();
            for x in xs {
                acc = acc.add(&normalize(x)?);
            }
            acc
        }
        Tree::Mul(xs) => {
            let mut acc = Expr::one();
            for x in xs {
                acc = acc.mul(&normalize(x)?);
            }
            acc
        }
        Tree::Pow(b, n) => normalize(b)?.pow(*n)?,
        Tree::Func(k, a) => Expr::func(*k, normalize(a)?),
        Tree::Opaque { name, derivs, args } => Expr::opaque(
            name,
            derivs.clone(),
            args.iter().map(normalize).collect::<Result<Vec<_>, _>>()?,
        ),
    })
}

fn atom_tree(a: &Atom) -> Tree {
    match a {
        Atom::Sym(s) => Tree::Sym(s.clone()),
        Atom::Func(k, x) => Tree::Func(*k, Box::new(x.to_tree())),
        Atom::Opaque(o) => Tree::Opaque {
            name: o.name.to_string(),
            derivs: o.derivs.clone(),
            args: o.args.iter().map(Expr::to_tree).collect(),
        },
    }
}

fn poly_tree(p: &Poly) -> Tree {
    let terms: Vec<Tree> = p
        .terms()
        .iter()
        .map(|t| {
            let mut fs = Vec::new();
            if !t.coef.is_one() || t.mono.is_one() {
                fs.push(Tree::Num(t.coef.clone()));
            }
            for (a, e) in t.mono.factors() {
                let at = atom_tree(a);
                fs.push(if *e == 1 { at } else { Tree::Pow(Box::new(at), *e) });
            }
            if fs.len() == 1 {
                fs.pop().unwrap()
            } else {
                Tree::Mul(fs)
            }
        })
        .collect();
    match terms.len() {
        0 => Tree::Num(BigRational::from_integer(BigInt::from(0))),
        1 => terms.into_iter().next().unwrap(),
        _ => Tree::Add(terms),
    }
}

impl Expr {
    /// Canonical tree view of the normal form.
    pub fn to_tree(&self) -> Tree {
        let num = poly_tree(self.num());
        if self.den().is_empty() {
            return num;
        }
        let mut fs = vec![num];
        for (p, e) in self.den() {
            fs.push(Tree::Pow(Box::new(poly_tree(p)), -(*e as i64)));
        }
        Tree::Mul(fs)
    }

    /// Tagged s-expression encoding of the canonical tree.
    pub fn to_tree_format(&self) -> String {
        let mut out = String::new();
        write_tree(&self.to_tree(), &mut out);
        out
    }
}

fn write_tree(t: &Tree, out: &mut String) {
    match t {
        Tree::Num(c) => {
            out.push_str("(num ");
            out.push_str(&c.to_string());
            out.push(')');
        }
        Tree::Sym(s) => {
            out.push_str("(sym ");
            out.push_str(&s.to_string());
            out.push(')');
        }
        Tree::Add(xs) | Tree::Mul(xs) => {
            out.push_str(if matches!(t, Tree::Add(_)) { "(add" } else { "(mul" });
            for x in xs {
                out.push(' ');
                write_tree(x, out);
            }
            out.push(')');
        }
        Tree::Pow(b, e) => {
            out.push_str("(pow ");
            write_tree(b, out);
            out.push_str(&format!(" {e})"));
        }
        Tree::Func(k, a) => {
            out.push_str(&format!("(fn {} ", k.name()));
            write_tree(a, out);
            out.push(')');
        }
        Tree::Opaque { name, derivs, args } => {
            out.push_str("(opaque ");
            out.push_str(name);
            out.push_str(" [");
            let ds: Vec<String> = derivs.iter().map(|d| (d + 1).to_string()).collect();
            out.push_str(&ds.join(" "));
            out.push(']');
            for a in args {
                out.push(' ');
                write_tree(a, out);
            }
            out.push(')');
        }
    }
}

struct SexpReader<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> SexpReader<'a> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.src[self.pos..].chars().next().map_or(1, char::len_utf8);
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }

    fn word(&mut self) -> Result<&'a str, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() || c == '(' || c == ')' || c == '[' || c == ']' {
                break;
            }
            self.pos += c.len_utf8();
        }
        if start == self.pos {
            return Err(self.err("expected a token"));
        }
        Ok(&self.src[start..self.pos])
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn node(&mut self) -> Result<Tree, ExprError> {
        self.expect('(')?;
        let tag = self.word()?;
        let t = match tag {
            "num" => {
                let w = self.word()?;
                let c = parse_rational(w).ok_or_else(|| self.err("bad rational literal"))?;
                Tree::Num(c)
            }
            "sym" => Tree::Sym(Symbol::new(self.word()?)),
            "add" | "mul" => {
                let mut xs = Vec::new();
                while self.peek() == Some('(') {
                    xs.push(self.node()?);
                }
                if tag == "add" {
                    Tree::Add(xs)
                } else {
                    Tree::Mul(xs)
                }
            }
            "pow" => {
                let b = self.node()?;
                let e: i64 = self.word()?.parse().map_err(|_| self.err("bad exponent"))?;
                Tree::Pow(Box::new(b), e)
            }
            "fn" => {
                let name = self.word()?;
                let k = FnKind::from_name(name).ok_or_else(|| self.err("unknown function"))?;
                Tree::Func(k, Box::new(self.node()?))
            }
            "opaque" => {
                let name = self.word()?.to_string();
                self.expect('[')?;
                let mut derivs = Vec::new();
                while self.peek() != Some(']') {
                    let d: u8 = self.word()?.parse().map_err(|_| self.err("bad slot"))?;
                    if d == 0 {
                        return Err(self.err("slots are 1-based"));
                    }
                    derivs.push(d - 1);
                }
                self.expect(']')?;
                let mut args = Vec::new();
                while self.peek() == Some('(') {
                    args.push(self.node()?);
                }
                Tree::Opaque { name, derivs, args }
            }
            _ => return Err(self.err(&format!("unknown node tag `{tag}`"))),
        };
        self.expect(')')?;
        Ok(t)
    }
}

pub(crate) fn parse_rational(w: &str) -> Option<BigRational> {
    let (n, d) = match w.split_once('/') {
        Some((n, d)) => (n, d),
        None => (w, "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_negative() || d == BigInt::from(0) {
        return None;
    }
    Some(BigRational::new(n, d))
}

/// Read the tagged tree encoding produced by [`Expr::to_tree_format`].
pub fn parse_tree_format(src: &str) -> Result<Tree, ExprError> {
    let mut r = SexpReader { src, pos: 0 };
    let t = r.node()?;
    r.skip_ws();
    if r.pos != src.len() {
        return Err(r.err("trailing input"));
    }
    Ok(t)
}

impl Tree {
    /// Evaluate the raw tree directly, without normalizing.
    pub fn eval(&self, env: &super::Env) -> Result<f64, ExprError> {
        use num_traits::ToPrimitive;
        Ok(match self {
            Tree::Num(c) => c.to_f64().unwrap_or(f64::NAN),
            Tree::Sym(s) => Expr::symbol(s.clone()).eval(env)?,
            Tree::Add(xs) => xs.iter().map(|x| x.eval(env)).sum::<Result<f64, _>>()?,
            Tree::Mul(xs) => xs.iter().map(|x| x.eval(env)).product::<Result<f64, _>>()?,
            Tree::Pow(b, n) => {
                let v = b.eval(env)?;
                if v == 0.0 && *n < 0 {
                    return Err(ExprError::Domain("division by zero".into()));
                }
                v.powi(*n as i32)
            }
            Tree::Func(k, a) => super::eval::apply_fn(*k, a.eval(env)?)?,
            Tree::Opaque { name, derivs, args } => {
                let vals = args.iter().map(|a| a.eval(env)).collect::<Result<Vec<_>, _>>()?;
                let key = super::Opaque {
                    name: name.as_str().into(),
                    derivs: {
                        let mut d = derivs.clone();
                        d.sort_unstable();
                        d
                    },
                    args: Vec::new(),
                }
                .key();
                super::eval::apply_opaque(env, &key, &vals)?
            }
        })
    }
}

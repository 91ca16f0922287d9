//! Exact symbolic expressions over jet coordinates and transcendental atoms.
//!
//! An [`Expr`] is always held in normal form: a Laurent polynomial over atoms
//! (symbols, applied functions, opaque function atoms) with exact rational
//! coefficients, divided by a product of powers of primitive polynomials.
//! The raw node tree produced by the parsers is [`Tree`]; [`normalize`] maps a
//! tree to its normal form.

mod eval;
mod parse;
mod poly;
mod print;
mod tree;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use eval::{Env, NumFn};
pub use parse::{parse, parse_tree};
pub use poly::{Monomial, Poly, Term};
pub use print::{to_latex, to_plain};
pub use tree::{normalize, parse_tree_format, Tree};

/// Errors raised by the expression kernel.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("numeric domain error: {0}")]
    Domain(String),
    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// A named symbol, optionally carrying a jet-derivative suffix (`y_tt`).
///
/// The suffix is a multiset of single-letter base coordinate names, stored
/// sorted so that `y_tx` and `y_xt` are the same symbol.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Symbol {
    head: Arc<str>,
    deriv: Arc<str>,
}

impl Symbol {
    /// Parse `y`, `y_tt` or `y_{tt}` into a symbol.
    pub fn new(name: &str) -> Symbol {
        match name.split_once('_') {
            Some((head, suffix)) => {
                let suffix = suffix.trim_start_matches('{').trim_end_matches('}');
                Symbol::jet(head, suffix)
            }
            None => Symbol::jet(name, ""),
        }
    }

    pub fn jet(head: &str, deriv: &str) -> Symbol {
        let mut letters: Vec<char> = deriv.chars().collect();
        letters.sort_unstable();
        Symbol {
            head: Arc::from(head),
            deriv: Arc::from(letters.into_iter().collect::<String>()),
        }
    }

    pub fn head(&self) -> &str {
        &self.head
    }

    pub fn deriv(&self) -> &str {
        &self.deriv
    }

    /// Number of derivative letters.
    pub fn order(&self) -> usize {
        self.deriv.chars().count()
    }

    /// The same head with one more derivative letter.
    pub fn with_extra(&self, letter: char) -> Symbol {
        let mut d = self.deriv.to_string();
        d.push(letter);
        Symbol::jet(&self.head, &d)
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.head
            .cmp(&other.head)
            .then(self.deriv.len().cmp(&other.deriv.len()))
            .then(self.deriv.cmp(&other.deriv))
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.deriv.is_empty() {
            write!(f, "{}", self.head)
        } else {
            write!(f, "{}_{}", self.head, self.deriv)
        }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Built-in transcendental functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FnKind {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl FnKind {
    pub fn name(self) -> &'static str {
        match self {
            FnKind::Sin => "sin",
            FnKind::Cos => "cos",
            FnKind::Tan => "tan",
            FnKind::Exp => "exp",
            FnKind::Log => "log",
            FnKind::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<FnKind> {
        Some(match name {
            "sin" => FnKind::Sin,
            "cos" => FnKind::Cos,
            "tan" => FnKind::Tan,
            "exp" => FnKind::Exp,
            "log" => FnKind::Log,
            "sqrt" => FnKind::Sqrt,
            _ => return None,
        })
    }
}

/// An opaque function applied to arguments, with sorted partial-derivative
/// slots (0-based argument positions, repeated for higher partials).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Opaque {
    pub name: Arc<str>,
    pub derivs: Vec<u8>,
    pub args: Vec<Expr>,
}

impl Opaque {
    /// Name used to look up a numeric binding, e.g. `V` or `V_11`.
    pub fn key(&self) -> String {
        if self.derivs.is_empty() {
            self.name.to_string()
        } else {
            let digits: String = self.derivs.iter().map(|d| char::from(b'1' + d)).collect();
            format!("{}_{}", self.name, digits)
        }
    }
}

/// Indivisible factors of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Sym(Symbol),
    Func(FnKind, Expr),
    Opaque(Arc<Opaque>),
}

impl Atom {
    fn contains(&self, s: &Symbol) -> bool {
        match self {
            Atom::Sym(x) => x == s,
            Atom::Func(_, a) => a.contains(s),
            Atom::Opaque(o) => o.args.iter().any(|a| a.contains(s)),
        }
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Atom::Sym(x) => {
                out.insert(x.clone());
            }
            Atom::Func(_, a) => out.extend(a.free_symbols().iter().cloned()),
            Atom::Opaque(o) => {
                for a in &o.args {
                    out.extend(a.free_symbols().iter().cloned());
                }
            }
        }
    }
}

struct Inner {
    num: Poly,
    den: Vec<(Poly, u32)>,
    syms: OnceLock<BTreeSet<Symbol>>,
}

/// A normalized symbolic expression. Cheap to clone.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.num == other.0.num && self.0.den == other.0.den)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.num.hash(state);
        self.0.den.hash(state);
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .num
            .cmp(&other.0.num)
            .then_with(|| self.0.den.cmp(&other.0.den))
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", to_plain(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", to_plain(self))
    }
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

pub(crate) fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Expr {
    fn raw(num: Poly, den: Vec<(Poly, u32)>) -> Expr {
        Expr(Arc::new(Inner {
            num,
            den,
            syms: OnceLock::new(),
        }))
    }

    /// Build from a numerator and denominator factors, cancelling exact
    /// factors of the denominator.
    fn build(mut num: Poly, den: BTreeMap<Poly, u32>) -> Expr {
        if num.is_zero() {
            return Expr::zero();
        }
        let mut kept = Vec::new();
        for (p, mut e) in den {
            while e > 0 {
                match num.exact_div(&p) {
                    Some(q) => {
                        num = q;
                        e -= 1;
                    }
                    None => break,
                }
            }
            if e > 0 {
                kept.push((p, e));
            }
        }
        Expr::raw(num, kept)
    }

    pub fn from_poly(p: Poly) -> Expr {
        Expr::raw(p, Vec::new())
    }

    pub fn zero() -> Expr {
        Expr::from_poly(Poly::zero())
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn int(n: i64) -> Expr {
        Expr::rational(rat(n))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn rational(c: BigRational) -> Expr {
        Expr::from_poly(Poly::constant(c))
    }

    pub fn symbol(s: Symbol) -> Expr {
        Expr::from_poly(Poly::atom(Atom::Sym(s), 1))
    }

    /// Shorthand for `Expr::symbol(Symbol::new(name))`.
    pub fn sym(name: &str) -> Expr {
        Expr::symbol(Symbol::new(name))
    }

    /// Apply a transcendental function, folding exact constant values
    /// (e.g. `sin(0)`, `cos(1/2*pi)`, `log(1)`).
    pub fn func(kind: FnKind, arg: Expr) -> Expr {
        if let Some(v) = fold_func(kind, &arg) {
            return v;
        }
        Expr::from_poly(Poly::atom(Atom::Func(kind, arg), 1))
    }

    pub fn sin(arg: Expr) -> Expr {
        Expr::func(FnKind::Sin, arg)
    }

    pub fn cos(arg: Expr) -> Expr {
        Expr::func(FnKind::Cos, arg)
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::func(FnKind::Exp, arg)
    }

    /// An opaque function atom; `derivs` are 0-based argument slots.
    pub fn opaque(name: &str, mut derivs: Vec<u8>, args: Vec<Expr>) -> Expr {
        derivs.sort_unstable();
        Expr::from_poly(Poly::atom(
            Atom::Opaque(Arc::new(Opaque {
                name: Arc::from(name),
                derivs,
                args,
            })),
            1,
        ))
    }

    pub fn num(&self) -> &Poly {
        &self.0.num
    }

    pub fn den(&self) -> &[(Poly, u32)] {
        &self.0.den
    }

    pub fn is_zero(&self) -> bool {
        self.0.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.den.is_empty() && self.0.num.as_constant().is_some_and(|c| c.is_one())
    }

    /// The rational value if this expression is a constant.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.0.den.is_empty() {
            self.0.num.as_constant()
        } else {
            None
        }
    }

    /// The symbol if this expression is exactly one symbol.
    pub fn as_symbol(&self) -> Option<&Symbol> {
        if !self.0.den.is_empty() {
            return None;
        }
        match self.0.num.terms() {
            [t] if t.coef.is_one() => match t.mono.factors() {
                [(Atom::Sym(s), 1)] => Some(s),
                _ => None,
            },
            _ => None,
        }
    }

    /// All symbols occurring anywhere in the expression.
    pub fn free_symbols(&self) -> &BTreeSet<Symbol> {
        self.0.syms.get_or_init(|| {
            let mut out = BTreeSet::new();
            self.0.num.collect_symbols(&mut out);
            for (p, _) in &self.0.den {
                p.collect_symbols(&mut out);
            }
            out
        })
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.free_symbols().contains(s)
    }

    fn den_map(&self) -> BTreeMap<Poly, u32> {
        self.0.den.iter().cloned().collect()
    }

    fn den_product(den: &[(Poly, u32)]) -> Poly {
        let mut acc = Poly::one();
        for (p, e) in den {
            for _ in 0..*e {
                acc = acc.mul(p);
            }
        }
        acc
    }

    pub fn add(&self, other: &Expr) -> Expr {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.0.den == other.0.den {
            if self.0.den.is_empty() {
                return Expr::from_poly(self.0.num.add(&other.0.num));
            }
            return Expr::build(self.0.num.add(&other.0.num), self.den_map());
        }
        let mut lcm = self.den_map();
        for (p, e) in other.0.den.iter() {
            let slot = lcm.entry(p.clone()).or_insert(0);
            *slot = (*slot).max(*e);
        }
        let lift = |x: &Expr| {
            let have = x.den_map();
            let mut n = x.0.num.clone();
            for (p, e) in &lcm {
                for _ in have.get(p).copied().unwrap_or(0)..*e {
                    n = n.mul(p);
                }
            }
            n
        };
        let total = lift(self).add(&lift(other));
        Expr::build(total, lcm)
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Expr {
        Expr::raw(self.0.num.neg(), self.0.den.clone())
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        if self.is_zero() || other.is_zero() {
            return Expr::zero();
        }
        let num = self.0.num.mul(&other.0.num);
        if self.0.den.is_empty() && other.0.den.is_empty() {
            return Expr::from_poly(num);
        }
        let mut den = self.den_map();
        for (p, e) in other.0.den.iter() {
            *den.entry(p.clone()).or_insert(0) += e;
        }
        Expr::build(num, den)
    }

    pub fn scale(&self, c: &BigRational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr::raw(self.0.num.scale(c), self.0.den.clone())
    }

    /// Multiplicative inverse.
    pub fn inv(&self) -> Result<Expr, ExprError> {
        if self.is_zero() {
            return Err(ExprError::ZeroDenominator);
        }
        let num = &self.0.num;
        let content = num.content();
        let reduced = num.mul_mono(&content.inverse());
        let lead = reduced.terms()[0].coef.clone();
        let primitive = reduced.scale(&lead.recip());
        let factor = Poly::monomial(content.inverse(), lead.recip());
        let top = Expr::den_product(&self.0.den).mul(&factor);
        if primitive.is_one() {
            return Ok(Expr::from_poly(top));
        }
        let (root, k) = primitive.perfect_power();
        let mut den = BTreeMap::new();
        den.insert(root, k);
        Ok(Expr::build(top, den))
    }

    pub fn div(&self, other: &Expr) -> Result<Expr, ExprError> {
        Ok(self.mul(&other.inv()?))
    }

    /// Integer power; negative exponents invert.
    pub fn pow(&self, n: i64) -> Result<Expr, ExprError> {
        if n < 0 {
            return self.inv()?.pow(-n);
        }
        if n == 0 {
            return Ok(Expr::one());
        }
        if self.0.den.is_empty() {
            if let [t] = self.0.num.terms() {
                return Ok(Expr::from_poly(Poly::monomial(
                    t.mono.pow(n),
                    num_traits::pow(t.coef.clone(), n as usize),
                )));
            }
        }
        let mut base = self.clone();
        let mut acc = Expr::one();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    /// Formal partial derivative with respect to a symbol.
    pub fn diff(&self, c: &Symbol) -> Expr {
        if !self.contains(c) {
            return Expr::zero();
        }
        let dnum = poly_diff(&self.0.num, c);
        if self.0.den.is_empty() {
            return dnum;
        }
        let inv_den = Expr::raw(Poly::one(), self.0.den.clone());
        let mut acc = dnum.mul(&inv_den);
        let num = Expr::from_poly(self.0.num.clone());
        for (p, e) in self.0.den.iter() {
            if !p.contains(c) {
                continue;
            }
            let dp = poly_diff(p, c);
            let one_over_p = Expr::raw(Poly::one(), vec![(p.clone(), 1)]);
            let term = num
                .mul(&dp)
                .mul(&one_over_p)
                .mul(&inv_den)
                .scale(&rat(-(*e as i64)));
            acc = acc.add(&term);
        }
        acc
    }

    /// Simultaneous substitution of symbols, followed by normalization.
    pub fn substitute(&self, map: &HashMap<Symbol, Expr>) -> Result<Expr, ExprError> {
        if map.is_empty() || !self.free_symbols().iter().any(|s| map.contains_key(s)) {
            return Ok(self.clone());
        }
        let num = subst_poly(&self.0.num, map)?;
        let mut den = Expr::one();
        for (p, e) in self.0.den.iter() {
            den = den.mul(&subst_poly(p, map)?.pow(*e as i64)?);
        }
        num.div(&den)
    }

    /// Replace opaque atoms by `f(name, derivs, substituted args)` when it
    /// returns `Some`.
    pub fn map_opaque(
        &self,
        f: &dyn Fn(&Opaque, &[Expr]) -> Result<Option<Expr>, ExprError>,
    ) -> Result<Expr, ExprError> {
        let num = map_opaque_poly(&self.0.num, f)?;
        let mut den = Expr::one();
        for (p, e) in self.0.den.iter() {
            den = den.mul(&map_opaque_poly(p, f)?.pow(*e as i64)?);
        }
        num.div(&den)
    }

    /// Coefficient-wise check against another expression.
    pub fn same_as(&self, other: &Expr) -> bool {
        self.sub(other).is_zero()
    }

    /// Number of numerator terms.
    pub fn term_count(&self) -> usize {
        self.0.num.terms().len()
    }

    /// Numerator terms as individual expressions (each over the common
    /// denominator).
    pub fn additive_terms(&self) -> Vec<Expr> {
        self.0
            .num
            .terms()
            .iter()
            .map(|t| Expr::raw(Poly::from_terms(vec![t.clone()]), self.0.den.clone()))
            .collect()
    }

    /// Expand as a polynomial in the given symbols: returns map from
    /// exponent vectors to coefficient expressions. Fails if a symbol occurs
    /// inside a denominator, a function argument, or with a negative power.
    pub fn coefficients_in(&self, vars: &[Symbol]) -> Option<BTreeMap<Vec<u32>, Expr>> {
        for (p, _) in self.0.den.iter() {
            if vars.iter().any(|v| p.contains(v)) {
                return None;
            }
        }
        let mut out: BTreeMap<Vec<u32>, Poly> = BTreeMap::new();
        for t in self.0.num.terms() {
            let mut key = vec![0u32; vars.len()];
            let mut rest = Vec::new();
            for (a, e) in t.mono.factors() {
                match a {
                    Atom::Sym(s) => {
                        if let Some(k) = vars.iter().position(|v| v == s) {
                            if *e < 0 {
                                return None;
                            }
                            key[k] = *e as u32;
                            continue;
                        }
                    }
                    other => {
                        if vars.iter().any(|v| other.contains(v)) {
                            return None;
                        }
                    }
                }
                rest.push((a.clone(), *e));
            }
            let term = Poly::monomial(Monomial::from_sorted(rest), t.coef.clone());
            let slot = out.entry(key).or_insert_with(Poly::zero);
            *slot = slot.add(&term);
        }
        Some(
            out.into_iter()
                .filter(|(_, p)| !p.is_zero())
                .map(|(k, p)| (k, Expr::raw(p, self.0.den.clone())))
                .collect(),
        )
    }
}

fn poly_diff(p: &Poly, c: &Symbol) -> Expr {
    let mut direct: Vec<Term> = Vec::new();
    let mut other = Expr::zero();
    for t in p.terms() {
        for (k, (a, e)) in t.mono.factors().iter().enumerate() {
            if !a.contains(c) {
                continue;
            }
            let lowered = t.mono.with_exponent(k, e - 1);
            let coef = &t.coef * rat(*e);
            match a {
                Atom::Sym(_) => direct.push(Term {
                    mono: lowered,
                    coef,
                }),
                _ => {
                    let inner = atom_diff(a, c);
                    if !inner.is_zero() {
                        other = other.add(&Expr::from_poly(Poly::monomial(lowered, coef)).mul(&inner));
                    }
                }
            }
        }
    }
    Expr::from_poly(Poly::collect(direct)).add(&other)
}

fn atom_diff(a: &Atom, c: &Symbol) -> Expr {
    match a {
        Atom::Sym(s) => {
            if s == c {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Func(kind, arg) => {
            let da = arg.diff(c);
            if da.is_zero() {
                return Expr::zero();
            }
            let outer = match kind {
                FnKind::Sin => Expr::cos(arg.clone()),
                FnKind::Cos => Expr::sin(arg.clone()).neg(),
                FnKind::Tan => {
                    let t = Expr::func(FnKind::Tan, arg.clone());
                    Expr::one().add(&t.mul(&t))
                }
                FnKind::Exp => Expr::exp(arg.clone()),
                FnKind::Log => match arg.inv() {
                    Ok(v) => v,
                    Err(_) => return Expr::zero(),
                },
                FnKind::Sqrt => {
                    let s = Expr::from_poly(Poly::atom(Atom::Func(FnKind::Sqrt, arg.clone()), -1));
                    s.scale(&BigRational::new(BigInt::from(1), BigInt::from(2)))
                }
            };
            outer.mul(&da)
        }
        Atom::Opaque(o) => {
            let mut acc = Expr::zero();
            for (slot, arg) in o.args.iter().enumerate() {
                let da = arg.diff(c);
                if da.is_zero() {
                    continue;
                }
                let mut derivs = o.derivs.clone();
                derivs.push(slot as u8);
                let d = Expr::opaque(&o.name, derivs, o.args.clone());
                acc = acc.add(&d.mul(&da));
            }
            acc
        }
    }
}

fn subst_atom(a: &Atom, map: &HashMap<Symbol, Expr>) -> Result<Option<Expr>, ExprError> {
    Ok(match a {
        Atom::Sym(s) => map.get(s).cloned(),
        Atom::Func(kind, arg) => {
            if !arg.free_symbols().iter().any(|s| map.contains_key(s)) {
                None
            } else {
                Some(Expr::func(*kind, arg.substitute(map)?))
            }
        }
        Atom::Opaque(o) => {
            if !o
                .args
                .iter()
                .any(|x| x.free_symbols().iter().any(|s| map.contains_key(s)))
            {
                None
            } else {
                let args = o
                    .args
                    .iter()
                    .map(|x| x.substitute(map))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(Expr::opaque(&o.name, o.derivs.clone(), args))
            }
        }
    })
}

fn subst_poly(p: &Poly, map: &HashMap<Symbol, Expr>) -> Result<Expr, ExprError> {
    let mut kept: Vec<Term> = Vec::new();
    let mut acc = Expr::zero();
    for t in p.terms() {
        let mut keep = Vec::new();
        let mut factor = Expr::one();
        let mut touched = false;
        for (a, e) in t.mono.factors() {
            match subst_atom(a, map)? {
                Some(v) => {
                    touched = true;
                    factor = factor.mul(&v.pow(*e)?);
                }
                None => keep.push((a.clone(), *e)),
            }
        }
        let rest = Poly::monomial(Monomial::from_sorted(keep), t.coef.clone());
        if touched {
            acc = acc.add(&factor.mul(&Expr::from_poly(rest)));
        } else {
            kept.push(rest.terms()[0].clone());
        }
    }
    Ok(Expr::from_poly(Poly::collect(kept)).add(&acc))
}

fn map_opaque_poly(
    p: &Poly,
    f: &dyn Fn(&Opaque, &[Expr]) -> Result<Option<Expr>, ExprError>,
) -> Result<Expr, ExprError> {
    let mut acc = Expr::zero();
    for t in p.terms() {
        let mut term = Expr::rational(t.coef.clone());
        for (a, e) in t.mono.factors() {
            let v = match a {
                Atom::Sym(_) => Expr::from_poly(Poly::atom(a.clone(), 1)),
                Atom::Func(kind, arg) => Expr::func(*kind, arg.map_opaque(f)?),
                Atom::Opaque(o) => {
                    let args = o
                        .args
                        .iter()
                        .map(|x| x.map_opaque(f))
                        .collect::<Result<Vec<_>, _>>()?;
                    match f(o, &args)? {
                        Some(v) => v,
                        None => Expr::opaque(&o.name, o.derivs.clone(), args),
                    }
                }
            };
            term = term.mul(&v.pow(*e)?);
        }
        acc = acc.add(&term);
    }
    Ok(acc)
}

/// If `arg` is `r*pi` with rational `r`, return `r`.
fn pi_multiple(arg: &Expr) -> Option<BigRational> {
    if !arg.den().is_empty() {
        return None;
    }
    match arg.num().terms() {
        [] => Some(BigRational::zero()),
        [t] => match t.mono.factors() {
            [(Atom::Sym(s), 1)] if s.head() == "pi" && s.deriv().is_empty() => Some(t.coef.clone()),
            [] => None,
            _ => None,
        },
        _ => None,
    }
}

fn fold_func(kind: FnKind, arg: &Expr) -> Option<Expr> {
    if let Some(c) = arg.as_rational() {
        match kind {
            FnKind::Sin | FnKind::Tan if c.is_zero() => return Some(Expr::zero()),
            FnKind::Cos | FnKind::Exp if c.is_zero() => return Some(Expr::one()),
            FnKind::Log if c.is_one() => return Some(Expr::zero()),
            FnKind::Sqrt if !c.is_negative() => {
                let (n, d) = (c.numer(), c.denom());
                let (rn, rd) = (n.sqrt(), d.sqrt());
                if &(&rn * &rn) == n && &(&rd * &rd) == d {
                    return Some(Expr::rational(BigRational::new(rn, rd)));
                }
                return None;
            }
            _ => return None,
        }
    }
    let r = pi_multiple(arg)?;
    let twice = &r * rat(2);
    if !twice.is_integer() {
        return None;
    }
    let k = twice.to_integer();
    let quarter = k.mod_floor(&BigInt::from(4)).to_i64()?;
    let sin_vals = [0, 1, 0, -1];
    let cos_vals = [1, 0, -1, 0];
    match kind {
        FnKind::Sin => Some(Expr::int(sin_vals[quarter as usize])),
        FnKind::Cos => Some(Expr::int(cos_vals[quarter as usize])),
        FnKind::Tan if quarter % 2 == 0 => Some(Expr::zero()),
        _ => None,
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                Expr::$f(self, rhs)
            }
        }
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                Expr::$f(&self, &rhs)
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                Expr::$f(&self, rhs)
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                Expr::$f(self, &rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| a.add(&b))
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

/// Parse-and-normalize convenience; panics on malformed input. Intended
/// for tests and literals known to be valid.
pub fn ex(src: &str) -> Expr {
    match parse(src) {
        Ok(e) => e,
        Err(err) => panic!("bad expression literal {src:?}: {err}"),
    }
}

/// Formal partial derivative restricted to a declared set of symbols.
pub fn partial(e: &Expr, c: &Symbol, declared: &BTreeSet<Symbol>) -> Result<Expr, ExprError> {
    if !declared.contains(c) {
        return Err(ExprError::UnknownCoordinate(c.to_string()));
    }
    Ok(e.diff(c))
}

#[cfg(test)]
mod tests;

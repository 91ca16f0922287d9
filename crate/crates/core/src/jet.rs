//! Fibered charts `(x^σ, y^i_α)` on jet bundles and the contact calculus.
//!
//! Base coordinates are single letters so that a jet coordinate is written
//! as the field name followed by its derivative letters (`y_tx`). Forms are
//! kept in the adapted coframe `(dx^σ, θ^i_α)`; `dy^i_α` only appears through
//! [`BigradedForm::dy`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::expr::{Expr, ExprError, FnKind, Symbol};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("jet order {order} exceeds the order cap {cap}")]
    OrderCap { order: usize, cap: usize },
    #[error("cannot contract scalar")]
    CannotContractScalar,
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
}

/// Derivative counts per base coordinate.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> MultiIndex {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, mu: usize) -> MultiIndex {
        let mut v = vec![0; n];
        v[mu] = 1;
        MultiIndex(v)
    }

    pub fn from_counts(counts: Vec<u32>) -> MultiIndex {
        MultiIndex(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// |α|
    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn get(&self, mu: usize) -> u32 {
        self.0[mu]
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn plus(&self, mu: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[mu] += 1;
        MultiIndex(v)
    }

    /// `self − other`, if every component stays non-negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn minus(&self, mu: usize) -> Option<MultiIndex> {
        let mut v = self.0.clone();
        v[mu] = v[mu].checked_sub(1)?;
        Some(MultiIndex(v))
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// α!
    pub fn factorial(&self) -> BigInt {
        self.0.iter().fold(BigInt::from(1), |acc, &a| {
            acc * (1..=a).fold(BigInt::from(1), |f, k| f * BigInt::from(k))
        })
    }

    /// Π binom(γ_μ, β_μ), zero unless β ≤ γ.
    pub fn binom(gamma: &MultiIndex, beta: &MultiIndex) -> BigInt {
        match gamma.checked_sub(beta) {
            Some(d) => gamma.factorial() / (beta.factorial() * d.factorial()),
            None => BigInt::from(0),
        }
    }

    /// All multi-indices of dimension `n` with `|α| ≤ k`, in graded order.
    pub fn up_to(n: usize, k: usize) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero(n)];
        let mut layer = vec![MultiIndex::zero(n)];
        for _ in 0..k {
            let mut next = BTreeSet::new();
            for a in &layer {
                for mu in 0..n {
                    next.insert(a.plus(mu));
                }
            }
            layer = next.into_iter().collect();
            out.extend(layer.iter().cloned());
        }
        out
    }

    /// Derivative letters for the given base names, e.g. `tt` or `tx`.
    pub fn letters(&self, base: &[char]) -> String {
        let mut s = String::new();
        for (mu, &a) in self.0.iter().enumerate() {
            for _ in 0..a {
                s.push(base[mu]);
            }
        }
        s
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// `y^i_α`: field component index plus multi-index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JetCoordinate {
    pub field: usize,
    pub alpha: MultiIndex,
}

const RESERVED: &[&str] = &["pi"];

fn valid_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic()) && cs.all(|c| c.is_ascii_alphanumeric())
}

/// A fibered chart together with the tracked jet order.
#[derive(Clone, Debug, PartialEq)]
pub struct JetBundle {
    base: Vec<char>,
    fields: Vec<String>,
    order: usize,
    cap: usize,
    angles: BTreeSet<String>,
}

impl JetBundle {
    /// Base names must be single letters; field names plain identifiers.
    pub fn new(base: &[&str], fields: &[&str], order: usize) -> Result<JetBundle, JetError> {
        if base.is_empty() || fields.is_empty() {
            return Err(JetError::InvalidBundle("need at least one base coordinate and one field".into()));
        }
        let mut seen = BTreeSet::new();
        let mut bs = Vec::new();
        for b in base {
            let mut cs = b.chars();
            match (cs.next(), cs.next()) {
                (Some(c), None) if c.is_ascii_alphabetic() => bs.push(c),
                _ => {
                    return Err(JetError::InvalidBundle(format!(
                        "base coordinate `{b}` must be a single letter"
                    )))
                }
            }
        }
        for name in base.iter().chain(fields) {
            if !valid_ident(name) || RESERVED.contains(name) || FnKind::from_name(name).is_some() {
                return Err(JetError::InvalidBundle(format!("`{name}` is not a usable coordinate name")));
            }
            if !seen.insert(name.to_string()) {
                return Err(JetError::InvalidBundle(format!("duplicate coordinate `{name}`")));
            }
        }
        Ok(JetBundle {
            base: bs,
            fields: fields.iter().map(|s| s.to_string()).collect(),
            order,
            cap: 4 * order + 1,
            angles: BTreeSet::new(),
        })
    }

    pub fn with_cap(mut self, cap: usize) -> JetBundle {
        self.cap = cap;
        self
    }

    pub fn with_order(mut self, order: usize) -> JetBundle {
        self.order = order;
        self
    }

    /// Mark field components as angle-valued (sampled away from poles).
    pub fn with_angles<S: AsRef<str>>(mut self, names: &[S]) -> JetBundle {
        self.angles.extend(names.iter().map(|s| s.as_ref().to_string()));
        self
    }

    /// Product bundle with extra fields adjoined after the existing ones.
    pub fn with_fields(&self, extra: &[&str]) -> Result<JetBundle, JetError> {
        let base: Vec<String> = self.base.iter().map(|c| c.to_string()).collect();
        let base: Vec<&str> = base.iter().map(String::as_str).collect();
        let mut fields: Vec<&str> = self.fields.iter().map(String::as_str).collect();
        fields.extend_from_slice(extra);
        let mut b = JetBundle::new(&base, &fields, self.order)?;
        b.cap = self.cap;
        b.angles = self.angles.clone();
        Ok(b)
    }

    pub fn base(&self) -> &[char] {
        &self.base
    }

    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn n(&self) -> usize {
        self.base.len()
    }

    pub fn m(&self) -> usize {
        self.fields.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn angles(&self) -> &BTreeSet<String> {
        &self.angles
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f == name)
    }

    pub fn base_index(&self, name: &str) -> Option<usize> {
        let mut cs = name.chars();
        match (cs.next(), cs.next()) {
            (Some(c), None) => self.base.iter().position(|&b| b == c),
            _ => None,
        }
    }

    pub fn base_symbol(&self, mu: usize) -> Symbol {
        Symbol::jet(&self.base[mu].to_string(), "")
    }

    pub fn symbol(&self, c: &JetCoordinate) -> Symbol {
        Symbol::jet(&self.fields[c.field], &c.alpha.letters(&self.base))
    }

    pub fn field_symbol(&self, i: usize, alpha: &MultiIndex) -> Symbol {
        Symbol::jet(&self.fields[i], &alpha.letters(&self.base))
    }

    pub fn field_expr(&self, i: usize, alpha: &MultiIndex) -> Expr {
        Expr::symbol(self.field_symbol(i, alpha))
    }

    /// Read a symbol as a jet coordinate of this bundle.
    pub fn coordinate(&self, s: &Symbol) -> Option<JetCoordinate> {
        let field = self.field_index(s.head())?;
        let mut counts = vec![0u32; self.n()];
        for c in s.deriv().chars() {
            let mu = self.base.iter().position(|&b| b == c)?;
            counts[mu] += 1;
        }
        Some(JetCoordinate {
            field,
            alpha: MultiIndex(counts),
        })
    }

    pub fn is_base(&self, s: &Symbol) -> bool {
        s.deriv().is_empty() && self.base_index(s.head()).is_some()
    }

    /// Every symbol the chart knows: base coordinates or jet coordinates.
    pub fn is_declared(&self, s: &Symbol) -> bool {
        self.is_base(s) || self.coordinate(s).is_some()
    }

    /// Jet coordinates occurring in `e`, sorted.
    pub fn jet_coordinates(&self, e: &Expr) -> Vec<JetCoordinate> {
        let mut out: Vec<JetCoordinate> = e.free_symbols().iter().filter_map(|s| self.coordinate(s)).collect();
        out.sort();
        out
    }

    /// Highest jet order occurring in `e` (0 when no fiber coordinate occurs).
    pub fn expr_order(&self, e: &Expr) -> usize {
        self.jet_coordinates(e).iter().map(|c| c.alpha.order()).max().unwrap_or(0)
    }

    /// Highest order of field `i` occurring in `e`.
    pub fn field_order(&self, e: &Expr, i: usize) -> Option<usize> {
        self.jet_coordinates(e)
            .iter()
            .filter(|c| c.field == i)
            .map(|c| c.alpha.order())
            .max()
    }

    fn check_cap(&self, order: usize) -> Result<(), JetError> {
        if order > self.cap {
            Err(JetError::OrderCap { order, cap: self.cap })
        } else {
            Ok(())
        }
    }

    /// `D_μ e = ∂_μ e + Σ y^j_{α+μ} ∂e/∂y^j_α`.
    pub fn total_derivative(&self, e: &Expr, mu: usize) -> Result<Expr, JetError> {
        let mut acc = e.diff(&self.base_symbol(mu));
        for s in e.free_symbols() {
            if let Some(c) = self.coordinate(s) {
                let up = c.alpha.plus(mu);
                self.check_cap(up.order())?;
                let d = e.diff(s);
                acc = acc.add(&self.field_expr(c.field, &up).mul(&d));
            }
        }
        Ok(acc)
    }

    /// `D_α e`, applied one base direction at a time.
    pub fn iterated_total_derivative(&self, e: &Expr, alpha: &MultiIndex) -> Result<Expr, JetError> {
        let mut acc = e.clone();
        for (mu, &k) in alpha.counts().iter().enumerate() {
            for _ in 0..k {
                acc = self.total_derivative(&acc, mu)?;
            }
        }
        Ok(acc)
    }

    /// Substitute bound fields by the prolongation of their bindings.
    ///
    /// `y^i_α` becomes `D_α b_i` computed in `target`, so bindings may mention
    /// base coordinates and fields of `target`. Unbound fields are left alone.
    pub fn prolong_substitute(
        &self,
        e: &Expr,
        bindings: &BTreeMap<usize, Expr>,
        target: &JetBundle,
    ) -> Result<Expr, JetError> {
        let mut map = HashMap::new();
        for s in e.free_symbols() {
            if let Some(c) = self.coordinate(s) {
                if let Some(b) = bindings.get(&c.field) {
                    map.insert(s.clone(), target.iterated_total_derivative(b, &c.alpha)?);
                }
            }
        }
        Ok(e.substitute(&map)?)
    }

    /// Volume form `dx^1∧…∧dx^n`.
    pub fn volume(&self) -> BigradedForm {
        BigradedForm::monomial(Expr::one(), (0..self.n()).map(Basis::Base).collect())
    }
}

/// A basis 1-form of the adapted coframe. Contact forms sort before base
/// forms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    Contact(JetCoordinate),
    Base(usize),
}

/// Components of a vector field in the adapted frame `(D_σ, ∂^α_i)`.
#[derive(Clone, Debug, Default)]
pub struct FieldComponents {
    pub horizontal: Vec<Expr>,
    pub vertical: BTreeMap<JetCoordinate, Expr>,
}

impl FieldComponents {
    fn on(&self, b: &Basis) -> Expr {
        match b {
            Basis::Base(mu) => self.horizontal.get(*mu).cloned().unwrap_or_else(Expr::zero),
            Basis::Contact(c) => self.vertical.get(c).cloned().unwrap_or_else(Expr::zero),
        }
    }
}

/// Sort a wedge product; `None` when a factor repeats, otherwise the sign.
fn canonical(mut bs: Vec<Basis>) -> Option<(Vec<Basis>, bool)> {
    let mut odd = false;
    for i in 1..bs.len() {
        let mut j = i;
        while j > 0 && bs[j - 1] > bs[j] {
            bs.swap(j - 1, j);
            odd = !odd;
            j -= 1;
        }
    }
    if bs.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((bs, odd))
}

/// A finite sum of coefficient × wedge of adapted basis forms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BigradedForm {
    terms: BTreeMap<Vec<Basis>, Expr>,
}

impl BigradedForm {
    pub fn zero() -> BigradedForm {
        BigradedForm::default()
    }

    pub fn scalar(f: Expr) -> BigradedForm {
        BigradedForm::monomial(f, Vec::new())
    }

    /// `f · b_1∧…∧b_k`, canonicalized.
    pub fn monomial(f: Expr, bs: Vec<Basis>) -> BigradedForm {
        let mut out = BigradedForm::zero();
        out.push(f, bs);
        out
    }

    pub fn dx(mu: usize) -> BigradedForm {
        BigradedForm::monomial(Expr::one(), vec![Basis::Base(mu)])
    }

    pub fn theta(c: JetCoordinate) -> BigradedForm {
        BigradedForm::monomial(Expr::one(), vec![Basis::Contact(c)])
    }

    /// `dy^i_α = θ^i_α + y^i_{α+σ} dx^σ`.
    pub fn dy(bundle: &JetBundle, c: JetCoordinate) -> BigradedForm {
        let mut out = BigradedForm::theta(c.clone());
        for mu in 0..bundle.n() {
            out.push(bundle.field_expr(c.field, &c.alpha.plus(mu)), vec![Basis::Base(mu)]);
        }
        out
    }

    fn push(&mut self, f: Expr, bs: Vec<Basis>) {
        if f.is_zero() {
            return;
        }
        let Some((bs, odd)) = canonical(bs) else {
            return;
        };
        let f = if odd { f.neg() } else { f };
        let sum = match self.terms.get(&bs) {
            Some(g) => g.add(&f),
            None => f,
        };
        if sum.is_zero() {
            self.terms.remove(&bs);
        } else {
            self.terms.insert(bs, sum);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Vec<Basis>, Expr> {
        &self.terms
    }

    pub fn coefficient(&self, bs: &[Basis]) -> Expr {
        self.terms.get(bs).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Distinct (contact degree, horizontal degree) pairs present.
    pub fn degrees(&self) -> BTreeSet<(usize, usize)> {
        self.terms
            .keys()
            .map(|bs| {
                let p = bs.iter().filter(|b| matches!(b, Basis::Contact(_))).count();
                (p, bs.len() - p)
            })
            .collect()
    }

    pub fn add(&self, other: &BigradedForm) -> BigradedForm {
        let mut out = self.clone();
        for (bs, f) in &other.terms {
            out.push(f.clone(), bs.clone());
        }
        out
    }

    pub fn neg(&self) -> BigradedForm {
        BigradedForm {
            terms: self.terms.iter().map(|(b, f)| (b.clone(), f.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &BigradedForm) -> BigradedForm {
        self.add(&other.neg())
    }

    pub fn scale(&self, g: &Expr) -> BigradedForm {
        let mut out = BigradedForm::zero();
        for (bs, f) in &self.terms {
            out.push(f.mul(g), bs.clone());
        }
        out
    }

    pub fn wedge(&self, other: &BigradedForm) -> BigradedForm {
        let mut out = BigradedForm::zero();
        for (a, f) in &self.terms {
            for (b, g) in &other.terms {
                let mut bs = a.clone();
                bs.extend(b.iter().cloned());
                out.push(f.mul(g), bs);
            }
        }
        out
    }

    /// Apply a degree-one antiderivation given by its action on functions
    /// and on single basis forms.
    fn antiderive(
        &self,
        on_fn: impl Fn(&Expr) -> Result<BigradedForm, JetError>,
        on_basis: impl Fn(&Basis) -> BigradedForm,
    ) -> Result<BigradedForm, JetError> {
        let mut out = BigradedForm::zero();
        for (bs, f) in &self.terms {
            let rest = BigradedForm::monomial(Expr::one(), bs.clone());
            out = out.add(&on_fn(f)?.wedge(&rest));
            for k in 0..bs.len() {
                let d = on_basis(&bs[k]);
                if d.is_zero() {
                    continue;
                }
                let before = BigradedForm::monomial(f.clone(), bs[..k].to_vec());
                let after = BigradedForm::monomial(Expr::one(), bs[k + 1..].to_vec());
                let piece = before.wedge(&d).wedge(&after);
                out = if k % 2 == 0 { out.add(&piece) } else { out.sub(&piece) };
            }
        }
        Ok(out)
    }

    /// Horizontal differential: `d_H f = D_σf dx^σ`, `d_H θ^i_α = −θ^i_{α+σ}∧dx^σ`.
    pub fn d_h(&self, bundle: &JetBundle) -> Result<BigradedForm, JetError> {
        self.antiderive(
            |f| {
                let mut out = BigradedForm::zero();
                for mu in 0..bundle.n() {
                    out.push(bundle.total_derivative(f, mu)?, vec![Basis::Base(mu)]);
                }
                Ok(out)
            },
            |b| match b {
                Basis::Base(_) => BigradedForm::zero(),
                Basis::Contact(c) => {
                    let mut out = BigradedForm::zero();
                    for mu in 0..bundle.n() {
                        let up = JetCoordinate {
                            field: c.field,
                            alpha: c.alpha.plus(mu),
                        };
                        out.push(Expr::int(-1), vec![Basis::Contact(up), Basis::Base(mu)]);
                    }
                    out
                }
            },
        )
    }

    /// Vertical differential: `d_V f = ∂f/∂y^i_α θ^i_α`, basis forms closed.
    pub fn d_v(&self, bundle: &JetBundle) -> Result<BigradedForm, JetError> {
        self.antiderive(
            |f| {
                let mut out = BigradedForm::zero();
                for c in bundle.jet_coordinates(f) {
                    let d = f.diff(&bundle.symbol(&c));
                    out.push(d, vec![Basis::Contact(c)]);
                }
                Ok(out)
            },
            |_| BigradedForm::zero(),
        )
    }

    /// The horizontalization `h`: contact terms vanish.
    pub fn horizontalize(&self) -> BigradedForm {
        BigradedForm {
            terms: self
                .terms
                .iter()
                .filter(|(bs, _)| bs.iter().all(|b| matches!(b, Basis::Base(_))))
                .map(|(b, f)| (b.clone(), f.clone()))
                .collect(),
        }
    }

    /// Interior product with a field given in the adapted frame.
    pub fn contract(&self, u: &FieldComponents) -> Result<BigradedForm, JetError> {
        let mut out = BigradedForm::zero();
        for (bs, f) in &self.terms {
            if bs.is_empty() {
                return Err(JetError::CannotContractScalar);
            }
            for k in 0..bs.len() {
                let c = u.on(&bs[k]);
                if c.is_zero() {
                    continue;
                }
                let mut rest = bs.clone();
                rest.remove(k);
                let g = f.mul(&c);
                out.push(if k % 2 == 0 { g } else { g.neg() }, rest);
            }
        }
        Ok(out)
    }

    /// Pullback along the prolongation of a section `y^i = γ^i(x)`.
    ///
    /// Contact forms are pulled back honestly, `θ^i_α ↦ (∂_σγ^i_α − γ^i_{α+σ})dx^σ`,
    /// so the vanishing on sections is computed rather than assumed.
    pub fn pullback(&self, bundle: &JetBundle, section: &[Expr]) -> Result<BigradedForm, JetError> {
        let binds: BTreeMap<usize, Expr> = section.iter().cloned().enumerate().collect();
        let jet = |i: usize, a: &MultiIndex| -> Result<Expr, JetError> {
            bundle.iterated_total_derivative(&section[i], a)
        };
        let mut out = BigradedForm::zero();
        for (bs, f) in &self.terms {
            let mut acc = BigradedForm::scalar(bundle.prolong_substitute(f, &binds, bundle)?);
            for b in bs {
                let piece = match b {
                    Basis::Base(mu) => BigradedForm::dx(*mu),
                    Basis::Contact(c) => {
                        let mut p = BigradedForm::zero();
                        let g = jet(c.field, &c.alpha)?;
                        for mu in 0..bundle.n() {
                            let v = bundle.total_derivative(&g, mu)?.sub(&jet(c.field, &c.alpha.plus(mu))?);
                            p.push(v, vec![Basis::Base(mu)]);
                        }
                        p
                    }
                };
                acc = acc.wedge(&piece);
            }
            out = out.add(&acc);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ex;

    fn line() -> JetBundle {
        JetBundle::new(&["t"], &["y"], 1).unwrap()
    }

    fn plane() -> JetBundle {
        JetBundle::new(&["t", "x"], &["u"], 2).unwrap()
    }

    #[test]
    fn total_derivative_examples() {
        let b = line();
        assert_eq!(b.total_derivative(&ex("y"), 0).unwrap(), ex("y_t"));
        assert_eq!(b.total_derivative(&ex("y_t^2"), 0).unwrap(), ex("2*y_t*y_tt"));
        let bx = JetBundle::new(&["x"], &["y"], 1).unwrap();
        assert_eq!(bx.total_derivative(&ex("x*y"), 0).unwrap(), ex("y + x*y_x"));
        assert_eq!(b.total_derivative(&ex("V(y)"), 0).unwrap(), ex("V_1(y)*y_t"));
    }

    #[test]
    fn iterated_derivatives_commute() {
        let b = plane();
        let a = MultiIndex::from_counts(vec![1, 1]);
        let e = ex("u*u_x + t*x^2*u_t");
        let tx = b.total_derivative(&b.total_derivative(&e, 0).unwrap(), 1).unwrap();
        let xt = b.total_derivative(&b.total_derivative(&e, 1).unwrap(), 0).unwrap();
        assert_eq!(tx, xt);
        assert_eq!(b.iterated_total_derivative(&e, &a).unwrap(), tx);
        assert_eq!(b.iterated_total_derivative(&e, &MultiIndex::zero(2)).unwrap(), e);
        let tt = MultiIndex::from_counts(vec![2, 0]);
        assert_eq!(b.iterated_total_derivative(&ex("u"), &tt).unwrap(), ex("u_tt"));
    }

    #[test]
    fn order_cap_is_enforced() {
        let b = line().with_cap(2);
        assert!(b.total_derivative(&ex("y_t"), 0).is_ok());
        assert_eq!(
            b.total_derivative(&ex("y_tt"), 0),
            Err(JetError::OrderCap { order: 3, cap: 2 })
        );
        assert_eq!(line().cap(), 5);
    }

    #[test]
    fn bundle_validation() {
        assert!(JetBundle::new(&["th"], &["y"], 1).is_err());
        assert!(JetBundle::new(&["t"], &["t"], 1).is_err());
        assert!(JetBundle::new(&["t"], &["pi"], 1).is_err());
        assert!(JetBundle::new(&["t"], &[], 1).is_err());
        assert!(JetBundle::new(&["t"], &["sin"], 1).is_err());
    }

    #[test]
    fn multi_index_arithmetic() {
        let g = MultiIndex::from_counts(vec![2, 1]);
        let b = MultiIndex::from_counts(vec![1, 1]);
        assert_eq!(g.order(), 3);
        assert_eq!(g.factorial(), BigInt::from(2));
        assert_eq!(MultiIndex::binom(&g, &b), BigInt::from(2));
        assert_eq!(MultiIndex::binom(&b, &g), BigInt::from(0));
        assert_eq!(MultiIndex::up_to(2, 2).len(), 6);
        assert!(MultiIndex::zero(2) < MultiIndex::unit(2, 1));
        assert!(MultiIndex::unit(2, 0) < MultiIndex::unit(2, 1));
    }

    #[test]
    fn differential_examples() {
        let b = line();
        let y = BigradedForm::scalar(ex("y"));
        assert_eq!(y.d_h(&b).unwrap(), BigradedForm::monomial(ex("y_t"), vec![Basis::Base(0)]));
        let theta = BigradedForm::theta(JetCoordinate {
            field: 0,
            alpha: MultiIndex::zero(1),
        });
        assert_eq!(y.d_v(&b).unwrap(), theta);
        let lam = BigradedForm::monomial(ex("1/2*y_t^2"), vec![Basis::Base(0)]);
        assert!(lam.d_h(&b).unwrap().is_zero());
    }

    #[test]
    fn horizontalize_examples() {
        let b = line();
        let c0 = JetCoordinate {
            field: 0,
            alpha: MultiIndex::zero(1),
        };
        let dy = BigradedForm::dy(&b, c0.clone());
        assert_eq!(dy.horizontalize(), BigradedForm::monomial(ex("y_t"), vec![Basis::Base(0)]));
        assert!(BigradedForm::theta(c0).horizontalize().is_zero());
        assert_eq!(BigradedForm::dx(0).horizontalize(), BigradedForm::dx(0));
    }

    #[test]
    fn contract_examples() {
        let c0 = JetCoordinate {
            field: 0,
            alpha: MultiIndex::zero(1),
        };
        let dt = BigradedForm::dx(0);
        let d_t = FieldComponents {
            horizontal: vec![Expr::one()],
            vertical: BTreeMap::new(),
        };
        assert_eq!(dt.contract(&d_t).unwrap(), BigradedForm::scalar(Expr::one()));
        let eta = FieldComponents {
            horizontal: vec![Expr::zero()],
            vertical: [(c0.clone(), ex("eta"))].into_iter().collect(),
        };
        let form = BigradedForm::theta(c0.clone()).wedge(&dt);
        assert_eq!(form.contract(&eta).unwrap(), BigradedForm::monomial(ex("eta"), vec![Basis::Base(0)]));
        let d_y = FieldComponents {
            horizontal: vec![Expr::zero()],
            vertical: [(c0, Expr::one())].into_iter().collect(),
        };
        assert!(dt.contract(&d_y).unwrap().is_zero());
        assert_eq!(
            BigradedForm::scalar(ex("y")).contract(&d_y),
            Err(JetError::CannotContractScalar)
        );
    }

    #[test]
    fn wedge_is_antisymmetric() {
        let a = BigradedForm::dx(0);
        let b = BigradedForm::dx(1);
        assert_eq!(a.wedge(&b), b.wedge(&a).neg());
        assert!(a.wedge(&a).is_zero());
    }

    #[test]
    fn pullback_kills_contact_forms() {
        let b = line();
        let c1 = JetCoordinate {
            field: 0,
            alpha: MultiIndex::unit(1, 0),
        };
        let form = BigradedForm::theta(c1).scale(&ex("y*y_t"));
        assert!(form.pullback(&b, &[ex("t^3 + 2*t")]).unwrap().is_zero());
        let f = BigradedForm::scalar(ex("y_t^2"));
        let pulled = f.pullback(&b, &[ex("sin(t)")]).unwrap();
        assert_eq!(pulled, BigradedForm::scalar(ex("cos(t)^2")));
    }
}

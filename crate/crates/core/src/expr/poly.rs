use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Atom, Symbol};

/// Product of atom powers; exponents are nonzero and atoms strictly sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<(Atom, i64)>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    /// Caller guarantees sorted, distinct atoms and nonzero exponents.
    pub(crate) fn from_sorted(v: Vec<(Atom, i64)>) -> Monomial {
        Monomial(v)
    }

    pub fn factors(&self) -> &[(Atom, i64)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if e != 0 {
                        out.push((a[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    pub fn pow(&self, n: i64) -> Monomial {
        if n == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|(a, e)| (a.clone(), e * n)).collect())
    }

    pub fn inverse(&self) -> Monomial {
        self.pow(-1)
    }

    pub(crate) fn with_exponent(&self, k: usize, e: i64) -> Monomial {
        let mut v = self.0.clone();
        if e == 0 {
            v.remove(k);
        } else {
            v[k].1 = e;
        }
        Monomial(v)
    }

    /// Whether `self` divides `other` with a polynomial quotient.
    fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().all(|(a, e)| {
            let have = other
                .0
                .binary_search_by(|(b, _)| b.cmp(a))
                .map(|k| other.0[k].1)
                .unwrap_or(0);
            have >= *e
        })
    }
}

/// Display and leading-term order: total degree first, then the largest
/// atoms decide. `Greater` sorts earlier in a polynomial.
pub(crate) fn mono_order(a: &Monomial, b: &Monomial) -> Ordering {
    let d = a.degree().cmp(&b.degree());
    if d != Ordering::Equal {
        return d;
    }
    let mut ia = a.0.iter().rev();
    let mut ib = b.0.iter().rev();
    loop {
        match (ia.next(), ib.next()) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
            (Some((x, ex)), Some((y, ey))) => {
                let c = x.cmp(y).then(ex.cmp(ey));
                if c != Ordering::Equal {
                    return c;
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub mono: Monomial,
    pub coef: BigRational,
}

/// Sparse Laurent polynomial over atoms, terms in descending display order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    terms: Vec<Term>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Poly {
        Poly::monomial(Monomial::one(), c)
    }

    pub fn monomial(mono: Monomial, coef: BigRational) -> Poly {
        if coef.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![Term { mono, coef }],
            }
        }
    }

    pub fn atom(a: Atom, e: i64) -> Poly {
        Poly::monomial(Monomial(vec![(a, e)]), BigRational::one())
    }

    /// Combine like terms and sort.
    pub fn collect(terms: Vec<Term>) -> Poly {
        let mut map: HashMap<Monomial, BigRational> = HashMap::with_capacity(terms.len());
        for t in terms {
            match map.get_mut(&t.mono) {
                Some(c) => *c += t.coef,
                None => {
                    map.insert(t.mono, t.coef);
                }
            }
        }
        Poly::from_map(map)
    }

    fn from_map(map: HashMap<Monomial, BigRational>) -> Poly {
        let mut terms: Vec<Term> = map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(mono, coef)| Term { mono, coef })
            .collect();
        terms.sort_by(|x, y| mono_order(&y.mono, &x.mono));
        Poly { terms }
    }

    pub fn from_terms(terms: Vec<Term>) -> Poly {
        Poly::collect(terms)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        matches!(self.terms.as_slice(), [t] if t.mono.is_one() && t.coef.is_one())
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.as_slice() {
            [] => Some(BigRational::zero()),
            [t] if t.mono.is_one() => Some(t.coef.clone()),
            _ => None,
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match mono_order(&a[i].mono, &b[j].mono) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &a[i].coef + &b[j].coef;
                    if !c.is_zero() {
                        out.push(Term {
                            mono: a[i].mono.clone(),
                            coef: c,
                        });
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Poly { terms: out }
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    mono: t.mono.clone(),
                    coef: -t.coef.clone(),
                })
                .collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    mono: t.mono.clone(),
                    coef: &t.coef * c,
                })
                .collect(),
        }
    }

    /// Multiply by a monomial. Order is translation invariant, so the
    /// result stays sorted.
    pub fn mul_mono(&self, m: &Monomial) -> Poly {
        if m.is_one() {
            return self.clone();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    mono: t.mono.mul(m),
                    coef: t.coef.clone(),
                })
                .collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let [t] = other.terms.as_slice() {
            return self.mul_mono(&t.mono).scale(&t.coef);
        }
        if let [t] = self.terms.as_slice() {
            return other.mul_mono(&t.mono).scale(&t.coef);
        }
        let mut map: HashMap<Monomial, BigRational> =
            HashMap::with_capacity(self.terms.len() * other.terms.len());
        for x in &self.terms {
            for y in &other.terms {
                let m = x.mono.mul(&y.mono);
                let c = &x.coef * &y.coef;
                match map.get_mut(&m) {
                    Some(v) => *v += c,
                    None => {
                        map.insert(m, c);
                    }
                }
            }
        }
        Poly::from_map(map)
    }

    /// Monomial gcd: per atom, the minimum exponent over all terms (absent
    /// atoms count as exponent zero).
    pub fn content(&self) -> Monomial {
        let mut all: BTreeSet<Atom> = BTreeSet::new();
        for t in &self.terms {
            for (a, _) in &t.mono.0 {
                all.insert(a.clone());
            }
        }
        let mut acc = Vec::new();
        for a in all {
            let mut lo = i64::MAX;
            for t in &self.terms {
                let e = t
                    .mono
                    .0
                    .binary_search_by(|(b, _)| b.cmp(&a))
                    .map(|k| t.mono.0[k].1)
                    .unwrap_or(0);
                lo = lo.min(e);
            }
            if lo != 0 {
                acc.push((a, lo));
            }
        }
        Monomial(acc)
    }

    /// Exact division by a polynomial `p` with no monomial content. Returns
    /// `None` when `p` does not divide `self`.
    pub fn exact_div(&self, p: &Poly) -> Option<Poly> {
        if p.terms.len() < 2 {
            return None;
        }
        // Shift self into the polynomial ring.
        let low = self.content();
        let neg: Vec<(Atom, i64)> = low
            .0
            .iter()
            .filter(|(_, e)| *e < 0)
            .map(|(a, e)| (a.clone(), -e))
            .collect();
        let shift = Monomial(neg);
        let mut r = self.mul_mono(&shift);
        let lead = &p.terms[0];
        let lead_inv = Monomial::inverse(&lead.mono);
        let mut q: Vec<Term> = Vec::new();
        while let Some(top) = r.terms.first() {
            if !lead.mono.divides(&top.mono) {
                return None;
            }
            let t = Term {
                mono: top.mono.mul(&lead_inv),
                coef: &top.coef / &lead.coef,
            };
            r = r.sub(&p.mul_mono(&t.mono).scale(&t.coef));
            q.push(t);
        }
        Some(Poly::collect(q).mul_mono(&shift.inverse()))
    }

    /// `(q, k)` with `self = q^k` and `k` maximal.
    pub fn perfect_power(&self) -> (Poly, u32) {
        if self.terms.len() < 2 {
            return (self.clone(), 1);
        }
        let g = self.terms[0].mono.0.iter().fold(0i64, |g, (_, e)| gcd(g, e.abs()));
        for k in (2..=g).rev() {
            if g % k != 0 {
                continue;
            }
            if let Some(q) = self.root(k as u32) {
                let (r, j) = q.perfect_power();
                return (r, j * k as u32);
            }
        }
        (self.clone(), 1)
    }

    /// Exact `k`-th root by peeling leading terms.
    fn root(&self, k: u32) -> Option<Poly> {
        let lead = &self.terms[0];
        let mono = Monomial(
            lead.mono
                .0
                .iter()
                .map(|(a, e)| (a.clone(), e / k as i64))
                .collect(),
        );
        let coef = rational_root(&lead.coef, k)?;
        let first = Term { mono, coef };
        let slope = Poly::monomial(first.mono.pow(k as i64 - 1), first.coef.clone())
            .scale(&BigRational::from_integer(k.into()));
        let slope = &slope.terms[0];
        let mut q = Poly::from_terms(vec![first.clone()]);
        for _ in 0..=self.terms.len() {
            let r = self.sub(&q.pow(k));
            let Some(top) = r.terms.first() else {
                return Some(q);
            };
            let t = Term {
                mono: top.mono.mul(&slope.mono.inverse()),
                coef: &top.coef / &slope.coef,
            };
            if mono_order(&t.mono, &first.mono) != Ordering::Less {
                return None;
            }
            q = q.add(&Poly::from_terms(vec![t]));
        }
        None
    }

    fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.terms
            .iter()
            .any(|t| t.mono.0.iter().any(|(a, _)| a.contains(s)))
    }

    pub(crate) fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        for t in &self.terms {
            for (a, _) in &t.mono.0 {
                a.collect_symbols(out);
            }
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn rational_root(c: &BigRational, k: u32) -> Option<BigRational> {
    use num_traits::Signed;
    if c.is_negative() && k % 2 == 0 {
        return None;
    }
    let n = c.numer().nth_root(k);
    let d = c.denom().nth_root(k);
    let r = BigRational::new(n, d);
    let mut back = BigRational::one();
    for _ in 0..k {
        back *= &r;
    }
    (back == *c).then_some(r)
}

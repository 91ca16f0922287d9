//! First variation: Euler–Lagrange expressions, momenta, symmetries,
//! Noether currents and the Helmholtz conditions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::jet::{BigradedForm, JetBundle, JetCoordinate, JetError, MultiIndex};
use crate::lift::{LiftError, ProjectableVectorField, VariationField};
use crate::oracle::{IdentityReport, OracleError, Ranges, ZeroTester};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VarError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("decomposition failure: residual {0}")]
    DecompositionFailure(String),
    #[error("Lagrangian has jet order {found} but was declared of order {declared}")]
    OrderTooHigh { found: usize, declared: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl From<ExprError> for VarError {
    fn from(e: ExprError) -> VarError {
        VarError::Jet(e.into())
    }
}

/// `λ = L dx^1∧…∧dx^n` on a bundle whose tracked order is the order of `λ`.
#[derive(Clone, Debug)]
pub struct Lagrangian {
    pub bundle: JetBundle,
    pub density: Expr,
}

impl Lagrangian {
    pub fn new(bundle: JetBundle, density: Expr) -> Result<Lagrangian, VarError> {
        let found = bundle.expr_order(&density);
        if found > bundle.order() {
            return Err(VarError::OrderTooHigh {
                found,
                declared: bundle.order(),
            });
        }
        Ok(Lagrangian { bundle, density })
    }

    pub fn order(&self) -> usize {
        self.bundle.order()
    }

    pub fn form(&self) -> BigradedForm {
        self.bundle.volume().scale(&self.density)
    }

    /// The same density viewed on another (e.g. product) bundle.
    pub fn on(&self, bundle: &JetBundle) -> Lagrangian {
        Lagrangian {
            bundle: bundle.clone(),
            density: self.density.clone(),
        }
    }
}

/// Components `Δ_i` of `Δ_i θ^i ∧ ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceForm {
    pub components: Vec<Expr>,
}

impl SourceForm {
    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    /// `η^i Δ_i`.
    pub fn contract(&self, eta: &[Expr]) -> Expr {
        self.components.iter().zip(eta).map(|(d, e)| d.mul(e)).sum()
    }
}

/// An (n−1)-form `ε^μ ω_μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Current {
    pub components: Vec<Expr>,
}

impl Current {
    pub fn zero(n: usize) -> Current {
        Current {
            components: vec![Expr::zero(); n],
        }
    }

    /// `D_μ ε^μ`.
    pub fn divergence(&self, bundle: &JetBundle) -> Result<Expr, VarError> {
        let mut acc = Expr::zero();
        for (mu, e) in self.components.iter().enumerate() {
            acc = acc.add(&bundle.total_derivative(e, mu)?);
        }
        Ok(acc)
    }
}

/// `p^{βμ}_i`, keyed by `(i, β, μ)`; absent entries are zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MomentaTable {
    pub entries: BTreeMap<(usize, MultiIndex, usize), Expr>,
}

impl MomentaTable {
    pub fn get(&self, i: usize, beta: &MultiIndex, mu: usize) -> Expr {
        self.entries
            .get(&(i, beta.clone(), mu))
            .cloned()
            .unwrap_or_else(Expr::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.values().all(Expr::is_zero)
    }

    /// `Σ_β w^i_β p^{βμ}_i` for each `μ`, with `w^i_β = D_β w^i`.
    pub fn contract(&self, bundle: &JetBundle, w: &[Expr]) -> Result<Current, VarError> {
        let mut out = Current::zero(bundle.n());
        for ((i, beta, mu), p) in &self.entries {
            let wb = bundle.iterated_total_derivative(&w[*i], beta)?;
            out.components[*mu] = out.components[*mu].add(&wb.mul(p));
        }
        Ok(out)
    }
}

/// Nonzero `∂L/∂y^i_α` for the listed fields.
pub fn partials(bundle: &JetBundle, l: &Expr, fields: &[usize]) -> BTreeMap<JetCoordinate, Expr> {
    bundle
        .jet_coordinates(l)
        .into_iter()
        .filter(|c| fields.contains(&c.field))
        .map(|c| {
            let d = l.diff(&bundle.symbol(&c));
            (c, d)
        })
        .filter(|(_, d)| !d.is_zero())
        .collect()
}

fn sign(k: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(if k % 2 == 0 { 1 } else { -1 }))
}

/// `Σ_α (−1)^{|α|} D_α ∂L/∂y^i_α` for each listed field.
pub fn euler_lagrange_of(bundle: &JetBundle, l: &Expr, fields: &[usize]) -> Result<Vec<Expr>, VarError> {
    let mut out = vec![Expr::zero(); fields.len()];
    for (c, d) in partials(bundle, l, fields) {
        let k = fields.iter().position(|&f| f == c.field).unwrap();
        let t = bundle.iterated_total_derivative(&d, &c.alpha)?.scale(&sign(c.alpha.order()));
        out[k] = out[k].add(&t);
    }
    Ok(out)
}

pub fn euler_lagrange(lag: &Lagrangian) -> Result<SourceForm, VarError> {
    let fields: Vec<usize> = (0..lag.bundle.m()).collect();
    Ok(SourceForm {
        components: euler_lagrange_of(&lag.bundle, &lag.density, &fields)?,
    })
}

/// Momenta by the descending recursion, the share of `∂L/∂y_α` going to
/// `p^{α−μ,μ}` being `α_μ/|α|`.
pub fn momenta_of(bundle: &JetBundle, l: &Expr, fields: &[usize]) -> Result<MomentaTable, VarError> {
    let n = bundle.n();
    let parts = partials(bundle, l, fields);
    let mut table = MomentaTable::default();
    for &i in fields {
        let top = parts.keys().filter(|c| c.field == i).map(|c| c.alpha.order()).max().unwrap_or(0);
        for level in (1..=top).rev() {
            for alpha in MultiIndex::up_to(n, level).into_iter().filter(|a| a.order() == level) {
                let key = JetCoordinate {
                    field: i,
                    alpha: alpha.clone(),
                };
                let mut f = parts.get(&key).cloned().unwrap_or_else(Expr::zero);
                for nu in 0..n {
                    let p = table.get(i, &alpha, nu);
                    if !p.is_zero() {
                        f = f.sub(&bundle.total_derivative(&p, nu)?);
                    }
                }
                if f.is_zero() {
                    continue;
                }
                for mu in 0..n {
                    if let Some(beta) = alpha.minus(mu) {
                        let w = BigRational::new(BigInt::from(alpha.get(mu)), BigInt::from(level));
                        table.entries.insert((i, beta, mu), f.scale(&w));
                    }
                }
            }
        }
    }
    table.entries.retain(|_, v| !v.is_zero());
    Ok(table)
}

pub fn momenta(lag: &Lagrangian) -> Result<MomentaTable, VarError> {
    let fields: Vec<usize> = (0..lag.bundle.m()).collect();
    momenta_of(&lag.bundle, &lag.density, &fields)
}

/// Residual `Σ η_α ∂L/∂y_α − η·E − D_μ(Σ η_β p^{βμ})` as an n-form; an
/// error if it does not vanish.
pub fn first_variation_identity(lag: &Lagrangian, eta: &VariationField) -> Result<BigradedForm, VarError> {
    let b = &eta.bundle;
    let fields: Vec<usize> = (0..eta.base_m).collect();
    let mut lhs = Expr::zero();
    for (c, d) in partials(b, &lag.density, &fields) {
        lhs = lhs.add(&eta.jet(c.field, &c.alpha)?.mul(&d));
    }
    let e = euler_lagrange_of(b, &lag.density, &fields)?;
    let p = momenta_of(b, &lag.density, &fields)?;
    let flux = p.contract(b, &eta.components)?.divergence(b)?;
    let residual = lhs.sub(&SourceForm { components: e }.contract(&eta.components)).sub(&flux);
    if !residual.is_zero() {
        return Err(VarError::DecompositionFailure(residual.to_string()));
    }
    Ok(b.volume().scale(&residual))
}

/// Density of the Lie derivative of `L dx` along the prolonged field:
/// `D_μ(Lξ^μ) + Σ D_α(Ξ_V)^i ∂L/∂y^i_α`.
pub fn lie_density(bundle: &JetBundle, l: &Expr, field: &ProjectableVectorField) -> Result<Expr, VarError> {
    let mut acc = Expr::zero();
    for (mu, x) in field.xi.iter().enumerate() {
        if !x.is_zero() {
            acc = acc.add(&bundle.total_derivative(&l.mul(x), mu)?);
        }
    }
    let xv = field.vertical_part(bundle);
    let fields: Vec<usize> = (0..bundle.m()).collect();
    for (c, d) in partials(bundle, l, &fields) {
        if xv[c.field].is_zero() {
            continue;
        }
        acc = acc.add(&bundle.iterated_total_derivative(&xv[c.field], &c.alpha)?.mul(&d));
    }
    Ok(acc)
}

/// How a symmetry question was settled.
#[derive(Clone, Debug, PartialEq)]
pub enum Decision {
    Symbolic,
    Numeric(IdentityReport),
    Undecided(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryVerdict {
    pub holds: bool,
    pub decided_by: Decision,
    pub residual: Expr,
}

/// Symbolic test first, then the random-point test.
pub fn is_symmetry_with(
    lag: &Lagrangian,
    field: &ProjectableVectorField,
    tester: &ZeroTester,
) -> Result<SymmetryVerdict, VarError> {
    let residual = lie_density(&lag.bundle, &lag.density, field)?;
    if residual.is_zero() {
        return Ok(SymmetryVerdict {
            holds: true,
            decided_by: Decision::Symbolic,
            residual,
        });
    }
    let (holds, decided_by) = match tester.test(&residual) {
        Ok(r) => (r.zero, Decision::Numeric(r)),
        Err(e) => (false, Decision::Undecided(e.to_string())),
    };
    Ok(SymmetryVerdict {
        holds,
        decided_by,
        residual,
    })
}

pub fn is_symmetry(lag: &Lagrangian, field: &ProjectableVectorField) -> Result<SymmetryVerdict, VarError> {
    let tester = ZeroTester::new(0).with_ranges(Ranges::for_bundle(&lag.bundle));
    is_symmetry_with(lag, field, &tester)
}

/// `ε^μ = Σ_β D_β(Ξ_V) p^{βμ} + ξ^μ L`.
pub fn noether_current(lag: &Lagrangian, field: &ProjectableVectorField) -> Result<Current, VarError> {
    let b = &lag.bundle;
    let xv = field.vertical_part(b);
    let mut eps = momenta(lag)?.contract(b, &xv)?;
    for (mu, x) in field.xi.iter().enumerate() {
        eps.components[mu] = eps.components[mu].add(&x.mul(&lag.density));
    }
    Ok(eps)
}

/// `Ξ_V·E + D_μ ε^μ`; vanishes identically for a symmetry.
pub fn noether_identity(lag: &Lagrangian, field: &ProjectableVectorField, eps: &Current) -> Result<Expr, VarError> {
    let e = euler_lagrange(lag)?;
    let xv = field.vertical_part(&lag.bundle);
    Ok(e.contract(&xv).add(&eps.divergence(&lag.bundle)?))
}

/// One nonvanishing Helmholtz expression.
#[derive(Clone, Debug, PartialEq)]
pub struct HelmholtzViolation {
    pub i: usize,
    pub j: usize,
    pub beta: MultiIndex,
    pub label: String,
    pub value: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HelmholtzReport {
    pub passed: bool,
    pub violations: Vec<HelmholtzViolation>,
}

/// `H^β_{ij} = ∂Δ_i/∂y^j_β − (−1)^{|β|} Σ_{γ≥β} binom(γ,β) (−D)_{γ−β} ∂Δ_j/∂y^i_γ`.
pub fn helmholtz_check(bundle: &JetBundle, delta: &SourceForm) -> Result<HelmholtzReport, VarError> {
    let m = delta.components.len();
    let n = bundle.n();
    let top = delta.components.iter().map(|d| bundle.expr_order(d)).max().unwrap_or(0);
    let indices = MultiIndex::up_to(n, top);
    let d = |k: usize, c: &JetCoordinate| delta.components[k].diff(&bundle.symbol(c));
    let mut violations = Vec::new();
    for i in 0..m {
        for j in 0..m {
            for beta in &indices {
                let mut h = d(
                    i,
                    &JetCoordinate {
                        field: j,
                        alpha: beta.clone(),
                    },
                );
                let mut adj = Expr::zero();
                for gamma in &indices {
                    let Some(diff) = gamma.checked_sub(beta) else {
                        continue;
                    };
                    let q = d(
                        j,
                        &JetCoordinate {
                            field: i,
                            alpha: gamma.clone(),
                        },
                    );
                    if q.is_zero() {
                        continue;
                    }
                    let c = BigRational::from_integer(MultiIndex::binom(gamma, beta)) * sign(diff.order());
                    adj = adj.add(&bundle.iterated_total_derivative(&q, &diff)?.scale(&c));
                }
                h = h.sub(&adj.scale(&sign(beta.order())));
                if !h.is_zero() {
                    let letters = beta.letters(bundle.base());
                    let label = format!(
                        "H[{}, {}; {}]",
                        bundle.fields()[i],
                        bundle.fields()[j],
                        if letters.is_empty() { "0".to_string() } else { letters }
                    );
                    violations.push(HelmholtzViolation {
                        i,
                        j,
                        beta: beta.clone(),
                        label,
                        value: h,
                    });
                }
            }
        }
    }
    Ok(HelmholtzReport {
        passed: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ex;

    fn lag(fields: &[&str], order: usize, l: &str) -> Lagrangian {
        Lagrangian::new(JetBundle::new(&["t"], fields, order).unwrap(), ex(l)).unwrap()
    }

    fn mi(k: u32) -> MultiIndex {
        MultiIndex::from_counts(vec![k])
    }

    #[test]
    fn el_examples() {
        let osc = lag(&["y"], 1, "1/2*y_t^2 - 1/2*y^2");
        assert_eq!(euler_lagrange(&osc).unwrap().components, vec![ex("-(y_tt + y)")]);
        let null = lag(&["y"], 1, "2*y*y_t");
        assert!(euler_lagrange(&null).unwrap().is_zero());
        let pot = lag(&["y"], 1, "1/2*y_t^2 - V(y)");
        assert_eq!(euler_lagrange(&pot).unwrap().components, vec![ex("-y_tt - V_1(y)")]);
    }

    #[test]
    fn declared_order_is_checked() {
        let b = JetBundle::new(&["t"], &["y"], 1).unwrap();
        assert!(matches!(
            Lagrangian::new(b, ex("y_tt^2")),
            Err(VarError::OrderTooHigh { found: 2, declared: 1 })
        ));
    }

    #[test]
    fn momenta_examples() {
        let p = momenta(&lag(&["y"], 1, "1/2*y_t^2")).unwrap();
        assert_eq!(p.get(0, &mi(0), 0), ex("y_t"));
        let p = momenta(&lag(&["y"], 2, "1/2*y_tt^2")).unwrap();
        assert_eq!(p.get(0, &mi(1), 0), ex("y_tt"));
        assert_eq!(p.get(0, &mi(0), 0), ex("-y_ttt"));
        assert!(momenta(&lag(&["y"], 1, "y^2 + sin(y)")).unwrap().is_zero());
    }

    #[test]
    fn symmetric_momenta_in_two_dimensions() {
        let b = JetBundle::new(&["t", "x"], &["u"], 2).unwrap();
        let l = Lagrangian::new(b.clone(), ex("u_tx^2 + u_t*u_x")).unwrap();
        let p = momenta(&l).unwrap();
        let t = MultiIndex::unit(2, 0);
        let x = MultiIndex::unit(2, 1);
        assert_eq!(p.get(0, &t, 1), ex("u_tx"));
        assert_eq!(p.get(0, &x, 0), ex("u_tx"));
        let eta = VariationField::adjoin_default(&b).unwrap();
        assert!(first_variation_identity(&l, &eta).unwrap().is_zero());
    }

    #[test]
    fn first_variation_examples() {
        for (fields, order, l) in [
            (vec!["y"], 1, "1/2*y_t^2 - 1/2*y^2"),
            (vec!["y"], 2, "1/2*y_tt^2"),
            (vec!["th", "ph"], 1, "1/2*(th_t^2 + sin(th)^2*ph_t^2)"),
            (vec!["y"], 3, "y_ttt*y_t + y^3*y_tt"),
        ] {
            let lg = lag(&fields, order, l);
            let eta = VariationField::adjoin_default(&lg.bundle).unwrap();
            assert!(first_variation_identity(&lg, &eta).unwrap().is_zero(), "{l}");
        }
    }

    #[test]
    fn symmetry_examples() {
        let b = JetBundle::new(&["t"], &["y"], 1).unwrap();
        let osc = lag(&["y"], 1, "1/2*y_t^2 - 1/2*y^2");
        let dt = ProjectableVectorField::new(&b, vec![ex("1")], vec![ex("0")]).unwrap();
        let v = is_symmetry(&osc, &dt).unwrap();
        assert!(v.holds);
        assert_eq!(v.decided_by, Decision::Symbolic);
        let free = lag(&["y"], 1, "1/2*y_t^2");
        let scale = ProjectableVectorField::vertical(&b, vec![ex("y")]).unwrap();
        let v = is_symmetry(&free, &scale).unwrap();
        assert!(!v.holds);
        assert_eq!(v.residual, ex("y_t^2"));
    }

    #[test]
    fn rotation_is_a_sphere_symmetry() {
        let s = lag(&["th", "ph"], 1, "1/2*(th_t^2 + sin(th)^2*ph_t^2)");
        let rot = ProjectableVectorField::vertical(&s.bundle, vec![ex("0"), ex("1")]).unwrap();
        let v = is_symmetry(&s, &rot).unwrap();
        assert!(v.holds && v.decided_by == Decision::Symbolic);
        let eps = noether_current(&s, &rot).unwrap();
        assert_eq!(eps.components, vec![ex("sin(th)^2*ph_t")]);
        assert!(noether_identity(&s, &rot, &eps).unwrap().is_zero());
    }

    #[test]
    fn numeric_symmetry_path() {
        // invariance that needs sin^2 + cos^2 = 1
        let l = lag(&["a", "b"], 1, "1/2*(a_t^2 + b_t^2)");
        let b = &l.bundle;
        let rot = ProjectableVectorField::vertical(b, vec![ex("-b"), ex("a")]).unwrap();
        assert!(is_symmetry(&l, &rot).unwrap().holds);
        let l3 = lag(&["a"], 1, "(cos(2*a) + 2*sin(a)^2)*a_t^2");
        let shift = ProjectableVectorField::vertical(&l3.bundle, vec![ex("1")]).unwrap();
        let v = is_symmetry(&l3, &shift).unwrap();
        assert!(v.holds);
        assert!(matches!(v.decided_by, Decision::Numeric(_)));
    }

    #[test]
    fn energy_current() {
        let l = lag(&["y"], 1, "1/2*y_t^2 - V(y)");
        let dt = ProjectableVectorField::new(&l.bundle, vec![ex("1")], vec![ex("0")]).unwrap();
        let eps = noether_current(&l, &dt).unwrap();
        assert_eq!(eps.components, vec![ex("-(1/2*y_t^2 + V(y))")]);
        assert!(noether_identity(&l, &dt, &eps).unwrap().is_zero());
        let zero = ProjectableVectorField::zero(&l.bundle);
        assert_eq!(noether_current(&l, &zero).unwrap(), Current::zero(1));
    }

    #[test]
    fn helmholtz_examples() {
        let b = JetBundle::new(&["t"], &["y"], 2).unwrap();
        let bad = SourceForm {
            components: vec![ex("y_tt + y_t + y")],
        };
        let r = helmholtz_check(&b, &bad).unwrap();
        assert!(!r.passed);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].beta, mi(1));
        assert_eq!(r.violations[0].value, ex("2"));
        assert_eq!(r.violations[0].label, "H[y, y; t]");
        let zero = SourceForm {
            components: vec![ex("0")],
        };
        assert!(helmholtz_check(&b, &zero).unwrap().passed);
        let el = euler_lagrange(&lag(&["y"], 2, "y_tt^2*y + sin(y_t)")).unwrap();
        assert!(helmholtz_check(&b, &el).unwrap().passed);
    }
}

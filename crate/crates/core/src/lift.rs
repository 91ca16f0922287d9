//! Projectable vector fields, lift templates and flow prolongation.
//!
//! Sign convention: the generalized Lie derivative of a section is minus the
//! vertical part of the lifted field, `£γ = y_σξ^σ − Ξ`, so `Ξ_V = −£`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{Expr, ExprError, Opaque};
use crate::jet::{FieldComponents, JetBundle, JetCoordinate, JetError, MultiIndex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiftError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("lift order mismatch: {0}")]
    OrderMismatch(String),
    #[error("field is not projectable: {0}")]
    NotProjectable(String),
    #[error("expected {expected} components, got {got}")]
    Arity { expected: usize, got: usize },
}

impl From<ExprError> for LiftError {
    fn from(e: ExprError) -> LiftError {
        LiftError::Jet(e.into())
    }
}

/// `ξ^σ(x)∂_σ + Ξ^i(x, y)∂_i` on a given bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectableVectorField {
    pub xi: Vec<Expr>,
    pub fiber: Vec<Expr>,
}

/// A prolonged field in both frames.
#[derive(Clone, Debug)]
pub struct Prolongation {
    pub horizontal: Vec<Expr>,
    /// `D_α(Ξ_V)^i`, components along `∂^α_i` in the adapted frame.
    pub vertical: BTreeMap<JetCoordinate, Expr>,
    /// `ξ^σ y^i_{α+σ} + D_α(Ξ_V)^i`, components along the coordinate `∂/∂y^i_α`.
    pub coordinate: BTreeMap<JetCoordinate, Expr>,
}

impl Prolongation {
    pub fn adapted(&self) -> FieldComponents {
        FieldComponents {
            horizontal: self.horizontal.clone(),
            vertical: self.vertical.clone(),
        }
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), LiftError> {
    if expected == got {
        Ok(())
    } else {
        Err(LiftError::Arity { expected, got })
    }
}

impl ProjectableVectorField {
    /// Validated constructor: `ξ` may depend on base coordinates only and `Ξ`
    /// on base and order-zero fiber coordinates only.
    pub fn new(bundle: &JetBundle, xi: Vec<Expr>, fiber: Vec<Expr>) -> Result<Self, LiftError> {
        check_len(bundle.n(), xi.len())?;
        check_len(bundle.m(), fiber.len())?;
        for x in &xi {
            if let Some(c) = bundle.jet_coordinates(x).first() {
                return Err(LiftError::NotProjectable(format!(
                    "base component depends on `{}`",
                    bundle.symbol(c)
                )));
            }
        }
        for f in &fiber {
            if let Some(c) = bundle.jet_coordinates(f).iter().find(|c| c.alpha.order() > 0) {
                return Err(LiftError::NotProjectable(format!(
                    "fiber component depends on `{}`",
                    bundle.symbol(c)
                )));
            }
        }
        Ok(ProjectableVectorField { xi, fiber })
    }

    /// A field whose fiber components may depend on higher jets (an
    /// evolutionary field, e.g. the vertical part of a lift). Not validated.
    pub fn generalized(xi: Vec<Expr>, fiber: Vec<Expr>) -> Self {
        ProjectableVectorField { xi, fiber }
    }

    pub fn zero(bundle: &JetBundle) -> Self {
        ProjectableVectorField {
            xi: vec![Expr::zero(); bundle.n()],
            fiber: vec![Expr::zero(); bundle.m()],
        }
    }

    pub fn vertical(bundle: &JetBundle, fiber: Vec<Expr>) -> Result<Self, LiftError> {
        ProjectableVectorField::new(bundle, vec![Expr::zero(); bundle.n()], fiber)
    }

    /// `(Ξ_V)^i = Ξ^i − y^i_σ ξ^σ`.
    pub fn vertical_part(&self, bundle: &JetBundle) -> Vec<Expr> {
        (0..bundle.m())
            .map(|i| {
                let mut v = self.fiber[i].clone();
                for (mu, x) in self.xi.iter().enumerate() {
                    v = v.sub(&bundle.field_expr(i, &MultiIndex::unit(bundle.n(), mu)).mul(x));
                }
                v
            })
            .collect()
    }

    /// `j_sΞ = ξ^σD_σ + D_α(Ξ_V)^i ∂^α_i` for `|α| ≤ s`.
    pub fn prolong(&self, bundle: &JetBundle, s: usize) -> Result<Prolongation, LiftError> {
        let xv = self.vertical_part(bundle);
        let n = bundle.n();
        let mut vertical = BTreeMap::new();
        let mut coordinate = BTreeMap::new();
        for i in 0..bundle.m() {
            for alpha in MultiIndex::up_to(n, s) {
                let v = bundle.iterated_total_derivative(&xv[i], &alpha)?;
                let mut c = v.clone();
                for (mu, x) in self.xi.iter().enumerate() {
                    c = c.add(&bundle.field_expr(i, &alpha.plus(mu)).mul(x));
                }
                let key = JetCoordinate { field: i, alpha };
                vertical.insert(key.clone(), v);
                coordinate.insert(key, c);
            }
        }
        Ok(Prolongation {
            horizontal: self.xi.clone(),
            vertical,
            coordinate,
        })
    }

    /// `(u_H, u_V)`: the horizontal part `ξ^σD_σ` and the vertical components.
    pub fn split_hv(
        &self,
        bundle: &JetBundle,
        s: usize,
    ) -> Result<(Vec<Expr>, BTreeMap<JetCoordinate, Expr>), LiftError> {
        let p = self.prolong(bundle, s)?;
        Ok((p.horizontal, p.vertical))
    }

    /// `£γ = (y^i_σξ^σ − Ξ^i)∘j_1γ`, with `γ` given in base coordinates.
    pub fn lie_derivative(&self, bundle: &JetBundle, section: &[Expr]) -> Result<Vec<Expr>, LiftError> {
        check_len(bundle.m(), section.len())?;
        let binds: BTreeMap<usize, Expr> = section.iter().cloned().enumerate().collect();
        self.vertical_part(bundle)
            .iter()
            .map(|v| Ok(bundle.prolong_substitute(&v.neg(), &binds, bundle)?))
            .collect()
    }

    /// Apply the field as a derivation on functions of `(x, y)`.
    fn apply(&self, bundle: &JetBundle, f: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for (mu, x) in self.xi.iter().enumerate() {
            acc = acc.add(&x.mul(&f.diff(&bundle.base_symbol(mu))));
        }
        for (i, y) in self.fiber.iter().enumerate() {
            acc = acc.add(&y.mul(&f.diff(&bundle.field_symbol(i, &MultiIndex::zero(bundle.n())))));
        }
        acc
    }

    /// Lie bracket of projectable fields on the total space.
    pub fn bracket(&self, other: &Self, bundle: &JetBundle) -> Self {
        let comp = |a: &Expr, b: &Expr| self.apply(bundle, b).sub(&other.apply(bundle, a));
        ProjectableVectorField {
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| comp(a, b)).collect(),
            fiber: self.fiber.iter().zip(&other.fiber).map(|(a, b)| comp(a, b)).collect(),
        }
    }
}

/// Template for a lift: fiber components written in terms of the base field
/// `ξ^μ` through the opaque atoms `xi1(x..)`, `xi1_2(x..)`, ...
#[derive(Clone, Debug, PartialEq)]
pub struct LiftRule {
    pub name: String,
    /// Declared order pair `(r, k)`; `k` bounds the derivatives of `ξ` used.
    pub order: (usize, usize),
    pub template: Vec<Expr>,
}

/// The atom standing for `∂_{slots} ξ^μ`.
pub fn xi_atom(bundle: &JetBundle, mu: usize, slots: &[usize]) -> Expr {
    let args = (0..bundle.n()).map(|k| Expr::symbol(bundle.base_symbol(k))).collect();
    Expr::opaque(
        &format!("xi{}", mu + 1),
        slots.iter().map(|&s| s as u8).collect(),
        args,
    )
}

fn xi_index(o: &Opaque) -> Option<usize> {
    let digits = o.name.strip_prefix("xi")?;
    let k: usize = digits.parse().ok()?;
    k.checked_sub(1)
}

impl LiftRule {
    pub fn new(name: &str, order: (usize, usize), template: Vec<Expr>) -> LiftRule {
        LiftRule {
            name: name.to_string(),
            order,
            template,
        }
    }

    /// Trivial lift: the fiber does not move.
    pub fn identity(bundle: &JetBundle) -> LiftRule {
        LiftRule::new("identity", (0, 0), vec![Expr::zero(); bundle.m()])
    }

    fn indexed(bundle: &JetBundle, names: &[&str]) -> Result<Vec<usize>, LiftError> {
        check_len(bundle.n(), names.len())?;
        names
            .iter()
            .map(|s| bundle.field_index(s).ok_or_else(|| JetError::UnknownField(s.to_string()).into()))
            .collect()
    }

    /// Tangent lift on vector-valued fields: `Ξ^μ = u^ν ∂_ν ξ^μ`.
    pub fn tangent(bundle: &JetBundle, comps: &[&str]) -> Result<LiftRule, LiftError> {
        let idx = LiftRule::indexed(bundle, comps)?;
        let mut template = vec![Expr::zero(); bundle.m()];
        let zero = MultiIndex::zero(bundle.n());
        for (mu, &f) in idx.iter().enumerate() {
            template[f] = idx
                .iter()
                .enumerate()
                .map(|(nu, &g)| bundle.field_expr(g, &zero).mul(&xi_atom(bundle, mu, &[nu])))
                .sum();
        }
        Ok(LiftRule::new("tangent", (0, 1), template))
    }

    /// Cotangent lift on covector-valued fields: `Ξ_μ = −u_ν ∂_μ ξ^ν`.
    pub fn cotangent(bundle: &JetBundle, comps: &[&str]) -> Result<LiftRule, LiftError> {
        let idx = LiftRule::indexed(bundle, comps)?;
        let mut template = vec![Expr::zero(); bundle.m()];
        let zero = MultiIndex::zero(bundle.n());
        for (mu, &f) in idx.iter().enumerate() {
            let s: Expr = idx
                .iter()
                .enumerate()
                .map(|(nu, &g)| bundle.field_expr(g, &zero).mul(&xi_atom(bundle, nu, &[mu])))
                .sum();
            template[f] = s.neg();
        }
        Ok(LiftRule::new("cotangent", (0, 1), template))
    }

    /// Rank-2 covariant tensors: `Ξ_ij = −(g_kj ∂_iξ^k + g_ik ∂_jξ^k)`.
    /// `comps[i][j]` names the field holding `g_ij`; symmetric tensors repeat
    /// names.
    pub fn covariant2(bundle: &JetBundle, comps: &[Vec<&str>]) -> Result<LiftRule, LiftError> {
        let n = bundle.n();
        check_len(n, comps.len())?;
        let mut idx = Vec::new();
        for row in comps {
            idx.push(LiftRule::indexed(bundle, row)?);
        }
        let zero = MultiIndex::zero(n);
        let g = |i: usize, j: usize| bundle.field_expr(idx[i][j], &zero);
        let mut template = vec![Expr::zero(); bundle.m()];
        for i in 0..n {
            for j in 0..n {
                let mut s = Expr::zero();
                for k in 0..n {
                    s = s.add(&g(k, j).mul(&xi_atom(bundle, k, &[i])));
                    s = s.add(&g(i, k).mul(&xi_atom(bundle, k, &[j])));
                }
                template[idx[i][j]] = s.neg();
            }
        }
        Ok(LiftRule::new("covariant2", (0, 1), template))
    }

    /// Substitute the base field and its partials into the template.
    pub fn apply(&self, bundle: &JetBundle, xi: &[Expr]) -> Result<ProjectableVectorField, LiftError> {
        check_len(bundle.n(), xi.len())?;
        check_len(bundle.m(), self.template.len())?;
        let k = self.order.1;
        let mut fiber = Vec::new();
        for t in &self.template {
            let v = t.map_opaque(&|o, args| {
                let Some(mu) = xi_index(o) else {
                    return Ok(None);
                };
                if mu >= xi.len() || args.len() != bundle.n() {
                    return Err(ExprError::Domain(format!("`{}` does not match the base", o.name)));
                }
                if o.derivs.len() > k {
                    return Err(ExprError::Domain(format!(
                        "`{}` uses {} derivatives, rule declares {k}",
                        o.key(),
                        o.derivs.len()
                    )));
                }
                let mut d = xi[mu].clone();
                for &s in &o.derivs {
                    d = d.diff(&bundle.base_symbol(s as usize));
                }
                Ok(Some(d))
            });
            match v {
                Ok(v) => fiber.push(v),
                Err(ExprError::Domain(msg)) => return Err(LiftError::OrderMismatch(msg)),
                Err(e) => return Err(e.into()),
            }
        }
        ProjectableVectorField::new(bundle, xi.to_vec(), fiber)
    }
}

/// Vertical variation data on a product bundle.
///
/// The first `base_m` fields of `bundle` are the original fields; the
/// components `η^i` are expressions on the product bundle (adjoined fiber
/// variables, or a concrete vertical field).
#[derive(Clone, Debug)]
pub struct VariationField {
    pub bundle: JetBundle,
    pub base_m: usize,
    pub components: Vec<Expr>,
}

impl VariationField {
    /// Default names: `eta` for one field, `eta1..etam` otherwise.
    pub fn default_names(m: usize) -> Vec<String> {
        if m == 1 {
            vec!["eta".to_string()]
        } else {
            (1..=m).map(|k| format!("eta{k}")).collect()
        }
    }

    /// Adjoin `η^i` as new fiber coordinates.
    pub fn adjoin(bundle: &JetBundle, names: &[&str]) -> Result<VariationField, LiftError> {
        check_len(bundle.m(), names.len())?;
        let product = bundle.with_fields(names)?;
        let zero = MultiIndex::zero(bundle.n());
        let components = (0..bundle.m()).map(|k| product.field_expr(bundle.m() + k, &zero)).collect();
        Ok(VariationField {
            bundle: product,
            base_m: bundle.m(),
            components,
        })
    }

    pub fn adjoin_default(bundle: &JetBundle) -> Result<VariationField, LiftError> {
        let names = VariationField::default_names(bundle.m());
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        VariationField::adjoin(bundle, &names)
    }

    /// A concrete variation, given directly on `bundle`.
    pub fn bound(bundle: &JetBundle, components: Vec<Expr>) -> Result<VariationField, LiftError> {
        check_len(bundle.m(), components.len())?;
        Ok(VariationField {
            bundle: bundle.clone(),
            base_m: bundle.m(),
            components,
        })
    }

    /// The vertical part of a field, `Ξ_V = −£`.
    pub fn from_field(bundle: &JetBundle, field: &ProjectableVectorField) -> Result<VariationField, LiftError> {
        VariationField::bound(bundle, field.vertical_part(bundle))
    }

    /// `η^i_α = D_α η^i`.
    pub fn jet(&self, i: usize, alpha: &MultiIndex) -> Result<Expr, LiftError> {
        Ok(self.bundle.iterated_total_derivative(&self.components[i], alpha)?)
    }

    /// Names of the adjoined fields (empty when bound).
    pub fn adjoined(&self) -> &[String] {
        &self.bundle.fields()[self.base_m..]
    }

    /// The variation as an evolutionary field on the product bundle; the
    /// adjoined fields themselves are not varied.
    pub fn as_field(&self) -> ProjectableVectorField {
        let mut fiber = self.components.clone();
        fiber.resize(self.bundle.m(), Expr::zero());
        ProjectableVectorField::generalized(vec![Expr::zero(); self.bundle.n()], fiber)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ex;

    fn line() -> JetBundle {
        JetBundle::new(&["t"], &["y"], 1).unwrap()
    }

    fn c(alpha: u32) -> JetCoordinate {
        JetCoordinate {
            field: 0,
            alpha: MultiIndex::from_counts(vec![alpha]),
        }
    }

    #[test]
    fn prolong_time_translation() {
        let b = line();
        let f = ProjectableVectorField::new(&b, vec![ex("1")], vec![ex("0")]).unwrap();
        let p = f.prolong(&b, 2).unwrap();
        assert!(p.coordinate.values().all(Expr::is_zero));
        assert_eq!(p.vertical[&c(1)], ex("-y_tt"));
    }

    #[test]
    fn prolong_scaling() {
        let b = line();
        let f = ProjectableVectorField::vertical(&b, vec![ex("y")]).unwrap();
        let p = f.prolong(&b, 1).unwrap();
        assert_eq!(p.coordinate[&c(0)], ex("y"));
        assert_eq!(p.coordinate[&c(1)], ex("y_t"));
    }

    #[test]
    fn prolong_general_first_order() {
        let b = line();
        let f = ProjectableVectorField::new(&b, vec![ex("xi(t)")], vec![ex("phi(t, y)")]).unwrap();
        let p = f.prolong(&b, 1).unwrap();
        let want = b.total_derivative(&ex("phi(t, y) - y_t*xi(t)"), 0).unwrap();
        assert_eq!(p.vertical[&c(1)], want);
        // coordinate components live on J_1: the y_tt terms cancel
        assert!(!p.coordinate[&c(1)].contains(&crate::expr::Symbol::new("y_tt")));
    }

    #[test]
    fn split_examples() {
        let b = line();
        let f = ProjectableVectorField::new(&b, vec![ex("1")], vec![ex("y")]).unwrap();
        let (h, v) = f.split_hv(&b, 0).unwrap();
        assert_eq!(h, vec![ex("1")]);
        assert_eq!(v[&c(0)], ex("y - y_t"));
        let g = ProjectableVectorField::vertical(&b, vec![ex("t*y^2")]).unwrap();
        let (h, v) = g.split_hv(&b, 1).unwrap();
        assert!(h[0].is_zero());
        assert_eq!(v[&c(1)], ex("y^2 + 2*t*y*y_t"));
    }

    #[test]
    fn not_projectable() {
        let b = line();
        assert!(ProjectableVectorField::new(&b, vec![ex("y")], vec![ex("0")]).is_err());
        assert!(ProjectableVectorField::new(&b, vec![ex("1")], vec![ex("y_t")]).is_err());
    }

    #[test]
    fn lie_derivative_examples() {
        let b = line();
        let f = ProjectableVectorField::vertical(&b, vec![ex("y^2")]).unwrap();
        assert_eq!(f.lie_derivative(&b, &[ex("sin(t)")]).unwrap(), vec![ex("-sin(t)^2")]);
        let g = ProjectableVectorField::new(&b, vec![ex("t")], vec![ex("y")]).unwrap();
        assert_eq!(g.lie_derivative(&b, &[ex("t^2")]).unwrap(), vec![ex("t^2")]);
    }

    #[test]
    fn tangent_lift_on_time() {
        let b = JetBundle::new(&["t"], &["u"], 1).unwrap();
        let rule = LiftRule::tangent(&b, &["u"]).unwrap();
        let f = rule.apply(&b, &[ex("t^3")]).unwrap();
        assert_eq!(f.fiber, vec![ex("3*t^2*u")]);
        assert_eq!(LiftRule::identity(&b).apply(&b, &[ex("t")]).unwrap().fiber, vec![ex("0")]);
    }

    #[test]
    fn lift_order_mismatch() {
        let b = JetBundle::new(&["t"], &["u"], 1).unwrap();
        let rule = LiftRule::new("bad", (0, 1), vec![ex("u*xi1_11(t)")]);
        assert!(matches!(rule.apply(&b, &[ex("t")]), Err(LiftError::OrderMismatch(_))));
    }

    #[test]
    fn covariant_lift_gives_lie_derivative_of_metric() {
        let b = JetBundle::new(&["a", "b"], &["g11", "g12", "g22"], 1).unwrap();
        let names = vec![vec!["g11", "g12"], vec!["g12", "g22"]];
        let rule = LiftRule::covariant2(&b, &names).unwrap();
        let xi = vec![ex("a*b"), ex("b^2 + a")];
        let f = rule.apply(&b, &xi).unwrap();
        // γ: a generic metric field
        let gamma = vec![ex("1 + a^2"), ex("a*b"), ex("2 + b")];
        let lie = f.lie_derivative(&b, &gamma).unwrap();
        let g = [[gamma[0].clone(), gamma[1].clone()], [gamma[1].clone(), gamma[2].clone()]];
        let x = [ex("a"), ex("b")];
        let sym = |e: &Expr| e.as_symbol().unwrap().clone();
        let field_of = [[0, 1], [1, 2]];
        for i in 0..2 {
            for j in 0..2 {
                let mut want = Expr::zero();
                for k in 0..2 {
                    want = want.add(&xi[k].mul(&g[i][j].diff(&sym(&x[k]))));
                    want = want.add(&g[k][j].mul(&xi[k].diff(&sym(&x[i]))));
                    want = want.add(&g[i][k].mul(&xi[k].diff(&sym(&x[j]))));
                }
                assert_eq!(lie[field_of[i][j]], want);
            }
        }
    }

    #[test]
    fn rotation_is_killing_for_round_metric() {
        let b = JetBundle::new(&["h", "f"], &["g11", "g12", "g22"], 1).unwrap();
        let rule = LiftRule::covariant2(&b, &[vec!["g11", "g12"], vec!["g12", "g22"]]).unwrap();
        let f = rule.apply(&b, &[ex("0"), ex("1")]).unwrap();
        let lie = f.lie_derivative(&b, &[ex("1"), ex("0"), ex("sin(h)^2")]).unwrap();
        assert!(lie.iter().all(Expr::is_zero));
    }

    #[test]
    fn adjoined_variation() {
        let b = line();
        let v = VariationField::adjoin_default(&b).unwrap();
        assert_eq!(v.adjoined(), &["eta".to_string()]);
        assert_eq!(v.jet(0, &MultiIndex::from_counts(vec![2])).unwrap(), ex("eta_tt"));
    }
}

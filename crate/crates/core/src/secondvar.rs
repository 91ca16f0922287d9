//! Second variation, the deformed Lagrangian, the Jacobi and Bianchi
//! morphisms and the strong current.
//!
//! Variations live on a product bundle (see [`VariationField`]); the
//! original fields are the first `base_m` fields of that bundle.

use std::collections::BTreeMap;

use crate::expr::Expr;
use crate::jet::JetBundle;
use crate::lift::{ProjectableVectorField, VariationField};
use crate::oracle::ZeroTester;
use crate::varcalc::{
    euler_lagrange, euler_lagrange_of, lie_density, momenta_of, partials, Current, Lagrangian, MomentaTable,
    VarError,
};

fn original(eta: &VariationField) -> Vec<usize> {
    (0..eta.base_m).collect()
}

/// `i`-fold Lie derivative of `λ` along the prolonged field.
pub fn variational_derivative(
    lag: &Lagrangian,
    field: &ProjectableVectorField,
    i: usize,
) -> Result<Lagrangian, VarError> {
    if !(1..=2).contains(&i) {
        return Err(VarError::Unsupported(format!("variation of order {i}")));
    }
    let mut l = lag.density.clone();
    for _ in 0..i {
        l = lie_density(&lag.bundle, &l, field)?;
    }
    Ok(Lagrangian {
        bundle: lag.bundle.clone(),
        density: l,
    })
}

/// `η·E(η·E(λ))`, the Euler–Lagrange operator taken in the original fields.
pub fn second_variation(lag: &Lagrangian, eta: &VariationField) -> Result<Lagrangian, VarError> {
    let b = &eta.bundle;
    let e = euler_lagrange_of(b, &lag.density, &original(eta))?;
    let omega = contract(&e, &eta.components);
    let inner = euler_lagrange_of(b, &omega, &original(eta))?;
    Ok(Lagrangian {
        bundle: b.clone(),
        density: contract(&inner, &eta.components),
    })
}

fn contract(e: &[Expr], eta: &[Expr]) -> Expr {
    e.iter().zip(eta).map(|(a, b)| a.mul(b)).sum()
}

/// The deformed Lagrangian in both representatives.
#[derive(Clone, Debug)]
pub struct DeformedLagrangian {
    /// `η^i E_i(λ)`.
    pub raw: Expr,
    /// `Σ η^i_α ∂L/∂y^i_α`; equals `raw + D_μ discarded^μ`.
    pub integrated: Expr,
    /// `Σ η^i_β p^{βμ}_i`.
    pub discarded: Current,
}

pub fn deform(lag: &Lagrangian, eta: &VariationField) -> Result<DeformedLagrangian, VarError> {
    let b = &eta.bundle;
    let fields = original(eta);
    let e = euler_lagrange_of(b, &lag.density, &fields)?;
    let raw = contract(&e, &eta.components);
    let mut integrated = Expr::zero();
    for (c, d) in partials(b, &lag.density, &fields) {
        integrated = integrated.add(&eta.jet(c.field, &c.alpha)?.mul(&d));
    }
    let discarded = momenta_of(b, &lag.density, &fields)?.contract(b, &eta.components)?;
    let residual = integrated.sub(&raw).sub(&discarded.divergence(b)?);
    if !residual.is_zero() {
        return Err(VarError::DecompositionFailure(residual.to_string()));
    }
    Ok(DeformedLagrangian {
        raw,
        integrated,
        discarded,
    })
}

/// Components `J_i(η)` of the linearized Euler–Lagrange operator.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiSystem {
    pub components: Vec<Expr>,
}

/// `J_i = Σ_{j,α} ∂E_i/∂y^j_α · D_α η^j`.
pub fn jacobi(lag: &Lagrangian, eta: &VariationField) -> Result<JacobiSystem, VarError> {
    let b = &eta.bundle;
    let fields = original(eta);
    let e = euler_lagrange_of(b, &lag.density, &fields)?;
    linearize(b, &e, eta)
}

/// Directional derivative of arbitrary components along `η`.
pub fn linearize(b: &JetBundle, e: &[Expr], eta: &VariationField) -> Result<JacobiSystem, VarError> {
    let fields = original(eta);
    let mut out = Vec::new();
    for ei in e {
        let mut acc = Expr::zero();
        for (c, d) in partials(b, ei, &fields) {
            acc = acc.add(&eta.jet(c.field, &c.alpha)?.mul(&d));
        }
        out.push(acc);
    }
    Ok(JacobiSystem { components: out })
}

/// `β = E_y(ω)` together with the momenta of `ω` in the original fields.
#[derive(Clone, Debug)]
pub struct BianchiForm {
    pub components: Vec<Expr>,
    pub momenta: MomentaTable,
    /// `Σ η_β p_ω^{βμ}`; its divergence is the remainder `F_ω` contracted
    /// with `η`.
    pub remainder: Current,
}

pub fn bianchi(lag: &Lagrangian, eta: &VariationField) -> Result<BianchiForm, VarError> {
    let b = &eta.bundle;
    let fields = original(eta);
    let omega = deform(lag, eta)?.raw;
    let components = euler_lagrange_of(b, &omega, &fields)?;
    let momenta = momenta_of(b, &omega, &fields)?;
    let remainder = momenta.contract(b, &eta.components)?;
    Ok(BianchiForm {
        components,
        momenta,
        remainder,
    })
}

/// Substitution data for the original and the adjoined fields.
#[derive(Clone, Debug)]
pub struct Binding {
    /// Indexed by product-bundle field.
    pub fields: BTreeMap<usize, Expr>,
    /// Bundle the bound expressions live on.
    pub target: JetBundle,
}

impl Binding {
    pub fn apply(&self, source: &JetBundle, e: &Expr) -> Result<Expr, VarError> {
        Ok(source.prolong_substitute(e, &self.fields, &self.target)?)
    }
}

#[derive(Clone, Debug)]
pub struct KernelReport {
    pub in_kernel: bool,
    pub residuals: Vec<Expr>,
    pub max_abs: f64,
}

/// Whether every expression vanishes along the binding (symbolically, or
/// numerically below `tester.tol` in absolute value).
pub fn vanishes_along(
    b: &JetBundle,
    es: &[Expr],
    binding: &Binding,
    tester: &ZeroTester,
) -> Result<KernelReport, VarError> {
    let residuals = es
        .iter()
        .map(|e| binding.apply(b, e))
        .collect::<Result<Vec<_>, _>>()?;
    let mut max_abs: f64 = 0.0;
    for r in &residuals {
        if !r.is_zero() {
            max_abs = max_abs.max(tester.max_abs(r)?);
        }
    }
    Ok(KernelReport {
        in_kernel: max_abs <= tester.tol,
        residuals,
        max_abs,
    })
}

pub fn jacobi_kernel_test(
    lag: &Lagrangian,
    eta: &VariationField,
    binding: &Binding,
    tester: &ZeroTester,
) -> Result<KernelReport, VarError> {
    let j = jacobi(lag, eta)?;
    vanishes_along(&eta.bundle, &j.components, binding, tester)
}

/// The strong current and its divergence.
#[derive(Clone, Debug)]
pub struct StrongCurrent {
    pub current: Current,
    pub divergence: Expr,
    /// `D_H H − η·(J − β)`; zero whenever the momenta recursion is exact.
    pub residual: Expr,
}

/// `H^μ = Σ η_β p_ω^{βμ}` for the raw deformed Lagrangian.
///
/// `D_H H = η·J − η·β`. Euler–Lagrange operators are formally self-adjoint,
/// so `β = J` and the divergence vanishes; for the first-order mechanical
/// examples `H` itself vanishes. The residual is computed, not assumed.
pub fn strong_current(lag: &Lagrangian, eta: &VariationField) -> Result<StrongCurrent, VarError> {
    let b = &eta.bundle;
    let bi = bianchi(lag, eta)?;
    let j = jacobi(lag, eta)?;
    let divergence = bi.remainder.divergence(b)?;
    // β − J measures the failure of self-adjointness
    let skew: Vec<Expr> = bi.components.iter().zip(&j.components).map(|(a, c)| a.sub(c)).collect();
    let residual = divergence.add(&contract(&skew, &eta.components));
    Ok(StrongCurrent {
        current: bi.remainder,
        divergence,
        residual,
    })
}

/// Convenience: `E(λ)` viewed on the product bundle.
pub fn euler_lagrange_on(lag: &Lagrangian, eta: &VariationField) -> Result<Vec<Expr>, VarError> {
    Ok(euler_lagrange(&lag.on(&eta.bundle))?.components[..eta.base_m].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ex;
    use crate::jet::JetBundle;

    fn lag(fields: &[&str], l: &str) -> (Lagrangian, VariationField) {
        let b = JetBundle::new(&["t"], fields, 1).unwrap();
        let eta = VariationField::adjoin_default(&b).unwrap();
        (Lagrangian::new(b, ex(l)).unwrap(), eta)
    }

    #[test]
    fn first_variation_along_fields() {
        let (l, _) = lag(&["y"], "1/2*y_t^2");
        let scale = ProjectableVectorField::vertical(&l.bundle, vec![ex("y")]).unwrap();
        assert_eq!(variational_derivative(&l, &scale, 1).unwrap().density, ex("y_t^2"));
        let (osc, _) = lag(&["y"], "1/2*y_t^2 - 1/2*y^2");
        let dt = ProjectableVectorField::new(&osc.bundle, vec![ex("1")], vec![ex("0")]).unwrap();
        assert!(variational_derivative(&osc, &dt, 1).unwrap().density.is_zero());
        assert!(variational_derivative(&osc, &dt, 3).is_err());
    }

    #[test]
    fn oscillator_second_variation() {
        let (l, eta) = lag(&["y"], "1/2*y_t^2 - 1/2*y^2");
        let lp = l.on(&eta.bundle);
        let d2 = variational_derivative(&lp, &eta.as_field(), 2).unwrap();
        assert_eq!(d2.density, ex("eta_t^2 - eta^2"));
        let sv = second_variation(&l, &eta).unwrap();
        assert_eq!(sv.density, ex("-eta*(eta_tt + eta)"));
        let diff = d2.density.sub(&sv.density);
        let exact = Lagrangian { bundle: eta.bundle.clone(), density: diff };
        assert!(euler_lagrange(&exact).unwrap().is_zero());
    }

    #[test]
    fn free_particle_second_variation() {
        let (l, eta) = lag(&["y"], "1/2*y_t^2");
        assert_eq!(second_variation(&l, &eta).unwrap().density, ex("-eta*eta_tt"));
    }

    #[test]
    fn oscillator_deform() {
        let (l, eta) = lag(&["y"], "1/2*y_t^2 - 1/2*y^2");
        let d = deform(&l, &eta).unwrap();
        assert_eq!(d.raw, ex("-eta*(y_tt + y)"));
        assert_eq!(d.integrated, ex("eta_t*y_t - eta*y"));
        assert_eq!(d.discarded.components, vec![ex("eta*y_t")]);
        let (null, eta) = lag(&["y"], "2*y*y_t");
        assert!(deform(&null, &eta).unwrap().raw.is_zero());
    }

    #[test]
    fn oscillator_jacobi_and_bianchi() {
        let (l, eta) = lag(&["y"], "1/2*y_t^2 - 1/2*y^2");
        assert_eq!(jacobi(&l, &eta).unwrap().components, vec![ex("-(eta_tt + eta)")]);
        let bi = bianchi(&l, &eta).unwrap();
        assert_eq!(bi.components, vec![ex("-(eta_tt + eta)")]);
        let (free, eta) = lag(&["y"], "1/2*y_t^2");
        assert_eq!(jacobi(&free, &eta).unwrap().components, vec![ex("-eta_tt")]);
    }

    #[test]
    fn oscillator_strong_current_vanishes() {
        let (l, eta) = lag(&["y"], "1/2*y_t^2 - 1/2*y^2");
        let s = strong_current(&l, &eta).unwrap();
        assert!(s.current.components[0].is_zero());
        assert!(s.residual.is_zero());
        let zero = VariationField::bound(&l.bundle, vec![ex("0")]).unwrap();
        assert!(strong_current(&l, &zero).unwrap().current.components[0].is_zero());
    }

    #[test]
    fn kernel_test_on_oscillator() {
        let (l, eta) = lag(&["y"], "1/2*y_t^2 - 1/2*y^2");
        let b = eta.bundle.clone();
        let binding = |y: &str, e: &str| Binding {
            fields: [(0, ex(y)), (1, ex(e))].into_iter().collect(),
            target: b.clone(),
        };
        let z = ZeroTester::new(5);
        assert!(jacobi_kernel_test(&l, &eta, &binding("sin(t)", "cos(t)"), &z).unwrap().in_kernel);
        let r = jacobi_kernel_test(&l, &eta, &binding("sin(t)", "1"), &z).unwrap();
        assert!(!r.in_kernel);
        assert!(r.max_abs >= 1e-2);
    }
}

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_traits::ToPrimitive;

use super::{Atom, Expr, ExprError, FnKind, Poly, Symbol};

/// Numeric rule for an opaque function atom.
pub type NumFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Numeric bindings for symbols and opaque functions.
#[derive(Clone, Default)]
pub struct Env {
    vars: HashMap<Symbol, f64>,
    funcs: HashMap<String, NumFn>,
}

impl fmt::Debug for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Env")
            .field("vars", &self.vars)
            .field("funcs", &self.funcs.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn set(&mut self, s: Symbol, v: f64) -> &mut Env {
        self.vars.insert(s, v);
        self
    }

    pub fn with(mut self, name: &str, v: f64) -> Env {
        self.vars.insert(Symbol::new(name), v);
        self
    }

    pub fn get(&self, s: &Symbol) -> Option<f64> {
        self.vars.get(s).copied()
    }

    /// Bind an opaque function by key (`V`, `V_1`, `g11_12`, ...).
    pub fn set_fn(&mut self, key: &str, f: NumFn) -> &mut Env {
        self.funcs.insert(key.to_string(), f);
        self
    }

    pub fn func(&self, key: &str) -> Option<&NumFn> {
        self.funcs.get(key)
    }

    pub fn vars(&self) -> impl Iterator<Item = (&Symbol, &f64)> {
        self.vars.iter()
    }
}

fn checked(v: f64, what: &str) -> Result<f64, ExprError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ExprError::Domain(format!("non-finite value in {what}")))
    }
}

fn powi(base: f64, e: i64) -> Result<f64, ExprError> {
    if base == 0.0 && e < 0 {
        return Err(ExprError::Domain("division by zero".into()));
    }
    Ok(base.powi(e as i32))
}

fn eval_atom(a: &Atom, env: &Env) -> Result<f64, ExprError> {
    match a {
        Atom::Sym(s) => match env.get(s) {
            Some(v) => Ok(v),
            None if s.head() == "pi" && s.deriv().is_empty() => Ok(std::f64::consts::PI),
            None => Err(ExprError::Unbound(s.to_string())),
        },
        Atom::Func(kind, arg) => apply_fn(*kind, arg.eval(env)?),
        Atom::Opaque(o) => {
            let args = o
                .args
                .iter()
                .map(|x| x.eval(env))
                .collect::<Result<Vec<_>, _>>()?;
            apply_opaque(env, &o.key(), &args)
        }
    }
}

pub(crate) fn apply_fn(kind: FnKind, x: f64) -> Result<f64, ExprError> {
    let v = match kind {
        FnKind::Sin => x.sin(),
        FnKind::Cos => x.cos(),
        FnKind::Tan => x.tan(),
        FnKind::Exp => x.exp(),
        FnKind::Log => {
            if x <= 0.0 {
                return Err(ExprError::Domain(format!("log of non-positive value {x}")));
            }
            x.ln()
        }
        FnKind::Sqrt => {
            if x < 0.0 {
                return Err(ExprError::Domain(format!("sqrt of negative value {x}")));
            }
            x.sqrt()
        }
    };
    checked(v, kind.name())
}

pub(crate) fn apply_opaque(env: &Env, key: &str, args: &[f64]) -> Result<f64, ExprError> {
    let f = env.func(key).ok_or_else(|| ExprError::Unbound(key.to_string()))?;
    checked(f(args), key)
}

fn eval_terms(p: &Poly, env: &Env) -> Result<Vec<f64>, ExprError> {
    p.terms()
        .iter()
        .map(|t| {
            let mut v = t.coef.to_f64().unwrap_or(f64::NAN);
            for (a, e) in t.mono.factors() {
                v *= powi(eval_atom(a, env)?, *e)?;
            }
            checked(v, "term")
        })
        .collect()
}

impl Expr {
    /// IEEE double evaluation.
    pub fn eval(&self, env: &Env) -> Result<f64, ExprError> {
        let (v, _) = self.eval_scaled(env)?;
        Ok(v)
    }

    /// Value together with the magnitude of the largest additive term.
    pub fn eval_scaled(&self, env: &Env) -> Result<(f64, f64), ExprError> {
        let terms = eval_terms(self.num(), env)?;
        let mut den = 1.0;
        for (p, e) in self.den() {
            let v: f64 = eval_terms(p, env)?.iter().sum();
            den *= powi(v, *e as i64)?;
        }
        if den == 0.0 {
            return Err(ExprError::Domain("division by zero".into()));
        }
        let sum: f64 = terms.iter().sum();
        let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs())) / den.abs();
        Ok((checked(sum / den, "quotient")?, scale))
    }
}

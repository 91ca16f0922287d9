//! Numeric ground truth: random-point identity tests, finite differences,
//! RK4 integration of derived equations and conservation drift.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{to_plain, Env, Expr, ExprError, Symbol};
use crate::jet::{JetBundle, JetError, MultiIndex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("no valid sample point after {0} attempts: {1}")]
    RetryCap(usize, String),
    #[error("singular mass matrix at t = {t} (step {step})")]
    Singular { t: f64, step: usize },
    #[error("equation {0} is not linear in its highest derivatives")]
    NotQuasiLinear(usize),
    #[error("missing initial value for `{0}`")]
    MissingInitial(String),
    #[error("unsupported problem: {0}")]
    Unsupported(String),
}

/// Relative tolerance of the symbolic-zero fallback.
pub const ZERO_TOL: f64 = 1e-9;
/// Tolerance of the finite-difference oracle.
pub const FD_TOL: f64 = 1e-6;
/// Finite-difference step, scaled by `max(1, |x|)`.
pub const FD_STEP: f64 = 1e-6;

/// Sampling intervals per symbol.
#[derive(Clone, Debug)]
pub struct Ranges {
    pub default: (f64, f64),
    pub angle: (f64, f64),
    pub angles: BTreeSet<String>,
    pub overrides: HashMap<Symbol, (f64, f64)>,
}

impl Default for Ranges {
    fn default() -> Ranges {
        Ranges {
            default: (-1.0, 1.0),
            angle: (0.1, std::f64::consts::PI - 0.1),
            angles: BTreeSet::new(),
            overrides: HashMap::new(),
        }
    }
}

impl Ranges {
    /// Angle-typed fields of the bundle sample away from the poles.
    pub fn for_bundle(b: &JetBundle) -> Ranges {
        Ranges {
            angles: b.angles().clone(),
            ..Ranges::default()
        }
    }

    pub fn with(mut self, s: Symbol, lo: f64, hi: f64) -> Ranges {
        self.overrides.insert(s, (lo, hi));
        self
    }

    pub fn range(&self, s: &Symbol) -> (f64, f64) {
        if let Some(r) = self.overrides.get(s) {
            *r
        } else if s.deriv().is_empty() && self.angles.contains(s.head()) {
            self.angle
        } else {
            self.default
        }
    }
}

/// Outcome of a numeric identity test.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub expr: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub zero: bool,
}

/// Seeded random-point sampler.
#[derive(Clone, Debug)]
pub struct ZeroTester {
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub ranges: Ranges,
    /// Fixed bindings: symbols here are not sampled, opaque rules are used.
    pub env: Env,
    pub retries: usize,
}

impl ZeroTester {
    pub fn new(seed: u64) -> ZeroTester {
        ZeroTester {
            seed,
            samples: 50,
            tol: ZERO_TOL,
            ranges: Ranges::default(),
            env: Env::new(),
            retries: 1000,
        }
    }

    pub fn with_ranges(mut self, r: Ranges) -> ZeroTester {
        self.ranges = r;
        self
    }

    pub fn with_env(mut self, env: Env) -> ZeroTester {
        self.env = env;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> ZeroTester {
        self.tol = tol;
        self
    }

    pub fn with_samples(mut self, k: usize) -> ZeroTester {
        self.samples = k;
        self
    }

    fn free(&self, es: &[&Expr]) -> Vec<Symbol> {
        let mut out = BTreeSet::new();
        for e in es {
            for s in e.free_symbols() {
                let fixed = self.env.get(s).is_some() || (s.head() == "pi" && s.deriv().is_empty());
                if !fixed {
                    out.insert(s.clone());
                }
            }
        }
        out.into_iter().collect()
    }

    /// Draw sample points and hand each to `f`; points where `f` reports a
    /// domain error are redrawn.
    fn sample<F>(&self, syms: &[Symbol], mut f: F) -> Result<(), OracleError>
    where
        F: FnMut(&Env) -> Result<(), ExprError>,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut done = 0;
        let mut attempts = 0;
        while done < self.samples {
            attempts += 1;
            let mut env = self.env.clone();
            for s in syms {
                let (lo, hi) = self.ranges.range(s);
                env.set(s.clone(), rng.random_range(lo..hi));
            }
            match f(&env) {
                Ok(()) => done += 1,
                Err(ExprError::Domain(msg)) => {
                    if attempts >= self.retries {
                        return Err(OracleError::RetryCap(attempts, msg));
                    }
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }

    /// Residual at each point is `|e| / max |additive term|`.
    pub fn test(&self, e: &Expr) -> Result<IdentityReport, OracleError> {
        let mut worst: f64 = 0.0;
        if !e.is_zero() {
            let syms = self.free(&[e]);
            self.sample(&syms, |env| {
                let (v, scale) = e.eval_scaled(env)?;
                let r = if scale > 0.0 { v.abs() / scale } else { v.abs() };
                worst = worst.max(r);
                Ok(())
            })?;
        }
        Ok(IdentityReport {
            expr: to_plain(e),
            samples: self.samples,
            max_residual: worst,
            tol: self.tol,
            zero: worst <= self.tol,
        })
    }

    /// Absolute maximum of `|e|` over the samples.
    pub fn max_abs(&self, e: &Expr) -> Result<f64, OracleError> {
        let mut worst: f64 = 0.0;
        let syms = self.free(&[e]);
        self.sample(&syms, |env| {
            worst = worst.max(e.eval(env)?.abs());
            Ok(())
        })?;
        Ok(worst)
    }

    /// Compare `∂e/∂c` with a central difference.
    pub fn fd_check(&self, e: &Expr, c: &Symbol) -> Result<IdentityReport, OracleError> {
        let d = e.diff(c);
        let mut syms = self.free(&[e, &d]);
        if !syms.contains(c) && self.env.get(c).is_none() {
            syms.push(c.clone());
        }
        let mut worst: f64 = 0.0;
        self.sample(&syms, |env| {
            let x = env.get(c).ok_or_else(|| ExprError::Unbound(c.to_string()))?;
            let h = FD_STEP * x.abs().max(1.0);
            let mut up = env.clone();
            up.set(c.clone(), x + h);
            let mut dn = env.clone();
            dn.set(c.clone(), x - h);
            let numeric = (e.eval(&up)? - e.eval(&dn)?) / (2.0 * h);
            let exact = d.eval(env)?;
            worst = worst.max((numeric - exact).abs() / exact.abs().max(1.0));
            Ok(())
        })?;
        Ok(IdentityReport {
            expr: to_plain(e),
            samples: self.samples,
            max_residual: worst,
            tol: FD_TOL,
            zero: worst <= FD_TOL,
        })
    }
}

/// An ODE system `Δ_k = 0` on a bundle over one base coordinate.
#[derive(Clone, Debug)]
pub struct NumericProblem {
    pub bundle: JetBundle,
    pub equations: Vec<Expr>,
    pub initial: BTreeMap<Symbol, f64>,
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
    /// Parameter values and opaque rules.
    pub env: Env,
}

/// States at every step multiple, with the solved top derivatives appended.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub symbols: Vec<Symbol>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn env_at(&self, k: usize, base: &Env, time: &Symbol) -> Env {
        let mut env = base.clone();
        env.set(time.clone(), self.times[k]);
        for (s, v) in self.symbols.iter().zip(&self.values[k]) {
            env.set(s.clone(), *v);
        }
        env
    }

    pub fn value(&self, k: usize, s: &Symbol) -> Option<f64> {
        let i = self.symbols.iter().position(|x| x == s)?;
        Some(self.values[k][i])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Solve `a x = b` by partial pivoting; `None` if singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

struct Compiled {
    state: Vec<Symbol>,
    tops: Vec<Symbol>,
    /// for each state slot, the slot holding its derivative or the top index
    next: Vec<Result<usize, usize>>,
    mass: Vec<Vec<Expr>>,
    rest: Vec<Expr>,
}

fn compile(p: &NumericProblem) -> Result<Compiled, OracleError> {
    let b = &p.bundle;
    if b.n() != 1 {
        return Err(OracleError::Unsupported("integration needs exactly one base coordinate".into()));
    }
    if p.equations.len() != b.m() {
        return Err(OracleError::Unsupported(format!(
            "{} equations for {} fields",
            p.equations.len(),
            b.m()
        )));
    }
    let alpha = |k: usize| MultiIndex::from_counts(vec![k as u32]);
    let mut state = Vec::new();
    let mut tops = Vec::new();
    let mut next = Vec::new();
    for i in 0..b.m() {
        let r = p
            .equations
            .iter()
            .filter_map(|e| b.field_order(e, i))
            .max()
            .unwrap_or(0);
        if r == 0 {
            return Err(OracleError::Unsupported(format!(
                "field `{}` enters without derivatives",
                b.fields()[i]
            )));
        }
        for k in 0..r {
            state.push(b.field_symbol(i, &alpha(k)));
            next.push(if k + 1 < r { Ok(state.len()) } else { Err(tops.len()) });
        }
        tops.push(b.field_symbol(i, &alpha(r)));
    }
    let zero: HashMap<Symbol, Expr> = tops.iter().map(|s| (s.clone(), Expr::zero())).collect();
    let mut mass = Vec::new();
    let mut rest = Vec::new();
    for (k, e) in p.equations.iter().enumerate() {
        let row: Vec<Expr> = tops.iter().map(|s| e.diff(s)).collect();
        if row.iter().any(|m| tops.iter().any(|s| m.contains(s))) {
            return Err(OracleError::NotQuasiLinear(k));
        }
        mass.push(row);
        rest.push(e.substitute(&zero)?);
    }
    Ok(Compiled {
        state,
        tops,
        next,
        mass,
        rest,
    })
}

impl Compiled {
    fn accel(&self, env: &Env, t: f64, step: usize) -> Result<Vec<f64>, OracleError> {
        let m = self
            .mass
            .iter()
            .map(|row| row.iter().map(|e| e.eval(env)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let r = self
            .rest
            .iter()
            .map(|e| e.eval(env).map(|v| -v))
            .collect::<Result<Vec<_>, _>>()?;
        solve(m, r).ok_or(OracleError::Singular { t, step })
    }

    fn rhs(&self, base: &Env, time: &Symbol, t: f64, y: &[f64], step: usize) -> Result<Vec<f64>, OracleError> {
        let mut env = base.clone();
        env.set(time.clone(), t);
        for (s, v) in self.state.iter().zip(y) {
            env.set(s.clone(), *v);
        }
        let a = self.accel(&env, t, step)?;
        Ok(self
            .next
            .iter()
            .map(|n| match n {
                Ok(slot) => y[*slot],
                Err(top) => a[*top],
            })
            .collect())
    }
}

/// Classic fixed-step RK4 on the quasi-linear system.
pub fn integrate(p: &NumericProblem) -> Result<Trajectory, OracleError> {
    let c = compile(p)?;
    let time = p.bundle.base_symbol(0);
    let mut y: Vec<f64> = c
        .state
        .iter()
        .map(|s| {
            p.initial
                .get(s)
                .copied()
                .ok_or_else(|| OracleError::MissingInitial(s.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let steps = ((p.t1 - p.t0) / p.step).round().max(0.0) as usize;
    let h = p.step;
    let mut symbols = c.state.clone();
    symbols.extend(c.tops.iter().cloned());
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let record = |t: f64, y: &[f64], k: usize, times: &mut Vec<f64>, values: &mut Vec<Vec<f64>>| {
        let mut env = p.env.clone();
        env.set(time.clone(), t);
        for (s, v) in c.state.iter().zip(y) {
            env.set(s.clone(), *v);
        }
        let a = c.accel(&env, t, k)?;
        let mut row = y.to_vec();
        row.extend(a);
        times.push(t);
        values.push(row);
        Ok::<(), OracleError>(())
    };
    record(p.t0, &y, 0, &mut times, &mut values)?;
    for k in 0..steps {
        let t = p.t0 + k as f64 * h;
        let k1 = c.rhs(&p.env, &time, t, &y, k)?;
        let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
        let k2 = c.rhs(&p.env, &time, t + 0.5 * h, &y2, k)?;
        let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
        let k3 = c.rhs(&p.env, &time, t + 0.5 * h, &y3, k)?;
        let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
        let k4 = c.rhs(&p.env, &time, t + h, &y4, k)?;
        for j in 0..y.len() {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        record(p.t0 + (k + 1) as f64 * h, &y, k + 1, &mut times, &mut values)?;
    }
    Ok(Trajectory { symbols, times, values })
}

/// `max_k |ε(t_k) − ε(t_0)|` along a trajectory.
pub fn drift(traj: &Trajectory, eps: &Expr, base: &Env, time: &Symbol) -> Result<f64, OracleError> {
    if traj.is_empty() {
        return Ok(0.0);
    }
    let e0 = eps.eval(&traj.env_at(0, base, time))?;
    let mut worst: f64 = 0.0;
    for k in 1..traj.len() {
        let v = eps.eval(&traj.env_at(k, base, time))?;
        worst = worst.max((v - e0).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ex;

    fn oscillator(step: f64) -> NumericProblem {
        let bundle = JetBundle::new(&["t"], &["y"], 1).unwrap();
        NumericProblem {
            bundle,
            equations: vec![ex("-(y_tt + y)")],
            initial: [(Symbol::new("y"), 0.0), (Symbol::new("y_t"), 1.0)].into_iter().collect(),
            t0: 0.0,
            t1: 10.0,
            step,
            env: Env::new(),
        }
    }

    #[test]
    fn zero_test_examples() {
        let z = ZeroTester::new(7);
        assert!(z.test(&ex("y_t - y_t")).unwrap().zero);
        assert!(z.test(&ex("sin(th)^2 + cos(th)^2 - 1")).unwrap().zero);
        assert!(!z.test(&ex("y_tt + y")).unwrap().zero);
    }

    #[test]
    fn zero_test_is_seed_deterministic() {
        let e = ex("y_tt + y*sin(y_t)");
        assert_eq!(ZeroTester::new(3).test(&e).unwrap(), ZeroTester::new(3).test(&e).unwrap());
    }

    #[test]
    fn domain_errors_are_resampled() {
        let z = ZeroTester::new(1);
        let r = z.test(&ex("log(x^3) - 3*log(x) + sqrt(x)^2 - x")).unwrap();
        assert!(r.zero);
        assert!(z.test(&ex("log(x) + 1")).is_ok());
        let never = ZeroTester::new(1).with_ranges(Ranges::default().with(Symbol::new("x"), -2.0, -1.0));
        assert!(matches!(never.test(&ex("log(x) + 1")), Err(OracleError::RetryCap(..))));
    }

    #[test]
    fn fd_examples() {
        let z = ZeroTester::new(11);
        assert!(z.fd_check(&ex("y_t^2"), &Symbol::new("y_t")).unwrap().zero);
        assert!(z.fd_check(&ex("sin(x)"), &Symbol::new("x")).unwrap().zero);
        let mut env = Env::new();
        env.set_fn("V", std::sync::Arc::new(|a: &[f64]| a[0].powi(3)));
        env.set_fn("V_1", std::sync::Arc::new(|a: &[f64]| 3.0 * a[0].powi(2)));
        let z = ZeroTester::new(11).with_env(env.clone());
        assert!(z.fd_check(&ex("V(y)"), &Symbol::new("y")).unwrap().zero);
        env.set_fn("V_1", std::sync::Arc::new(|a: &[f64]| 2.0 * a[0]));
        let z = ZeroTester::new(11).with_env(env);
        assert!(!z.fd_check(&ex("V(y)"), &Symbol::new("y")).unwrap().zero);
    }

    #[test]
    fn rk4_oscillator() {
        let traj = integrate(&oscillator(1e-3)).unwrap();
        let last = traj.len() - 1;
        assert!((traj.value(last, &Symbol::new("y")).unwrap() - 10f64.sin()).abs() < 1e-7);
        let energy = ex("1/2*y_t^2 + 1/2*y^2");
        let d = drift(&traj, &energy, &Env::new(), &Symbol::new("t")).unwrap();
        assert!(d < 1e-8, "drift {d}");
        assert_eq!(drift(&traj, &ex("3"), &Env::new(), &Symbol::new("t")).unwrap(), 0.0);
    }

    #[test]
    fn rk4_free_particle_is_exact() {
        let mut p = oscillator(1e-2);
        p.equations = vec![ex("-y_tt")];
        p.initial.insert(Symbol::new("y"), 0.5);
        let traj = integrate(&p).unwrap();
        let last = traj.len() - 1;
        assert!((traj.value(last, &Symbol::new("y")).unwrap() - 10.5).abs() < 1e-12);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |h: f64| {
            let mut p = oscillator(h);
            p.t1 = 2.0;
            let traj = integrate(&p).unwrap();
            (traj.value(traj.len() - 1, &Symbol::new("y")).unwrap() - 2f64.sin()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn singular_mass_matrix_is_reported() {
        let mut p = oscillator(1e-2);
        p.equations = vec![ex("y*y_tt + 1")];
        p.initial.insert(Symbol::new("y"), 0.0);
        assert!(matches!(integrate(&p), Err(OracleError::Singular { step: 0, .. })));
        p.equations = vec![ex("y_tt^2 + 1")];
        assert_eq!(integrate(&p).unwrap_err(), OracleError::NotQuasiLinear(0));
    }

    #[test]
    fn missing_initial_value() {
        let mut p = oscillator(1e-2);
        p.initial.remove(&Symbol::new("y_t"));
        assert_eq!(integrate(&p).unwrap_err(), OracleError::MissingInitial("y_t".into()));
    }
}

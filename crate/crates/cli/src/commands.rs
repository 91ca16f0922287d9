//! Subcommand dispatch.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use jetcalc::expr::{Expr, Symbol};
use jetcalc::jet::JetBundle;
use jetcalc::lift::VariationField;
use jetcalc::oracle::{drift, integrate, NumericProblem, Ranges, Trajectory, ZeroTester};
use jetcalc::riemann::Metric;
use jetcalc::secondvar::{
    bianchi, deform, jacobi, second_variation, strong_current, vanishes_along, variational_derivative, Binding,
};
use jetcalc::varcalc::{
    euler_lagrange, euler_lagrange_of, first_variation_identity, helmholtz_check, is_symmetry_with, momenta,
    noether_current, noether_identity, Lagrangian, SourceForm,
};

use crate::problem::{parse_problem, NamedField, Problem};
use crate::render::{self, sign_normalized, Format, Line};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    El,
    Momenta,
    Noether,
    Symmetry,
    Helmholtz,
    Deform,
    Jacobi,
    Bianchi,
    SecondVariation,
    StrongCurrent,
    CompleteLift,
    Integrate,
    Verify,
}

#[derive(Clone, Debug)]
pub struct Options {
    pub format: Format,
    pub seed: u64,
    pub tol: f64,
    pub order_cap: Option<usize>,
    pub bind: Option<String>,
    pub field: Option<String>,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            format: Format::Plain,
            seed: 0,
            tol: 1e-9,
            order_cap: None,
            bind: None,
            field: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Parse `text` and run `cmd`; never panics on malformed input.
pub fn run_text(cmd: Command, text: &str, opts: &Options) -> Outcome {
    let res = parse_problem(text).map_err(CliError::from).and_then(|p| run(cmd, &p, opts));
    match res {
        Ok(o) => o,
        Err(e) => Outcome {
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
            code: e.exit_code(),
        },
    }
}

fn ctx<E: std::fmt::Display>(context: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Derivation {
        context,
        msg: e.to_string(),
    }
}

fn ok(stdout: String) -> Result<Outcome, CliError> {
    Ok(Outcome {
        stdout,
        stderr: String::new(),
        code: 0,
    })
}

struct Session<'a> {
    p: &'a Problem,
    opts: &'a Options,
}

pub fn run(cmd: Command, p: &Problem, opts: &Options) -> Result<Outcome, CliError> {
    let s = Session { p, opts };
    let f = opts.format;
    match cmd {
        Command::El => ok(render::lines(&s.el_lines()?, f)),
        Command::Momenta => s.momenta(),
        Command::Noether => s.noether(),
        Command::Symmetry => s.symmetry(),
        Command::Helmholtz => s.helmholtz(),
        Command::Deform => s.deform(),
        Command::Jacobi => s.jacobi(false),
        Command::Bianchi => s.jacobi(true),
        Command::SecondVariation => {
            let (lag, eta) = s.variation()?;
            let sv = second_variation(&lag, &eta).map_err(ctx("secondvar"))?;
            ok(render::lines(&[Line::bare(sv.density)], f))
        }
        Command::StrongCurrent => s.strong_current(),
        Command::CompleteLift => s.complete_lift(),
        Command::Integrate => s.integrate(),
        Command::Verify => s.verify(),
    }
}

impl Session<'_> {
    fn lagrangian(&self) -> Result<Lagrangian, CliError> {
        let lag = self
            .p
            .lagrangian
            .clone()
            .ok_or_else(|| CliError::Usage("problem declares no lagrangian".into()))?;
        Ok(match self.opts.order_cap {
            Some(c) => Lagrangian {
                bundle: lag.bundle.clone().with_cap(c),
                density: lag.density,
            },
            None => lag,
        })
    }

    fn bundle(&self) -> JetBundle {
        match &self.p.lagrangian {
            Some(l) => l.bundle.clone(),
            None => self.p.bundle.clone(),
        }
    }

    fn metric(&self) -> Result<&Metric, CliError> {
        self.p
            .metric
            .as_ref()
            .ok_or_else(|| CliError::Usage("problem declares no metric".into()))
    }

    fn tester(&self, b: &JetBundle) -> ZeroTester {
        ZeroTester::new(self.opts.seed)
            .with_ranges(Ranges::for_bundle(b))
            .with_tol(self.opts.tol)
            .with_env(self.p.env())
    }

    fn variation(&self) -> Result<(Lagrangian, VariationField), CliError> {
        let lag = self.lagrangian()?;
        let eta = match &self.p.variation {
            Some(names) => {
                let names: Vec<&str> = names.iter().map(String::as_str).collect();
                VariationField::adjoin(&lag.bundle, &names)
            }
            None => VariationField::adjoin_default(&lag.bundle),
        }
        .map_err(ctx("liftfields"))?;
        Ok((lag, eta))
    }

    fn field_labels(&self, prefix: &str, es: Vec<Expr>, names: &[String]) -> Vec<Line> {
        if es.len() == 1 {
            return vec![Line::bare(es.into_iter().next().expect("one component"))];
        }
        es.into_iter()
            .zip(names)
            .map(|(e, n)| Line::labeled(format!("{prefix}{n}"), e))
            .collect()
    }

    fn base_names(&self) -> Vec<String> {
        self.bundle().base().iter().map(|c| c.to_string()).collect()
    }

    fn el_lines(&self) -> Result<Vec<Line>, CliError> {
        let lag = self.lagrangian()?;
        let e = euler_lagrange(&lag).map_err(ctx("varcalc"))?;
        Ok(self.field_labels("E_", e.components, lag.bundle.fields()))
    }

    fn momenta(&self) -> Result<Outcome, CliError> {
        let lag = self.lagrangian()?;
        let b = &lag.bundle;
        let table = momenta(&lag).map_err(ctx("varcalc"))?;
        let mut out = Vec::new();
        for ((i, beta, mu), e) in &table.entries {
            if e.is_zero() {
                continue;
            }
            let beta = if beta.order() == 0 {
                "-".to_string()
            } else {
                beta.letters(b.base())
            };
            out.push(Line::labeled(format!("p[{},{},{}]", b.fields()[*i], beta, b.base()[*mu]), e.clone()));
        }
        ok(render::lines(&out, self.opts.format))
    }

    fn selected(&self) -> Result<Vec<&NamedField>, CliError> {
        match &self.opts.field {
            Some(name) => Ok(vec![self
                .p
                .vector(name)
                .ok_or_else(|| CliError::Usage(format!("unknown vector field `{name}`")))?]),
            None if self.p.vectors.is_empty() => Err(CliError::Usage("problem declares no vector field".into())),
            None => Ok(self.p.vectors.iter().collect()),
        }
    }

    fn current_lines(&self, prefix: &str, comps: Vec<Expr>) -> Vec<Line> {
        self.field_labels(prefix, comps, &self.base_names())
    }

    fn noether(&self) -> Result<Outcome, CliError> {
        let lag = self.lagrangian()?;
        let fields = self.selected()?;
        let mut out = String::new();
        let several = fields.len() > 1;
        for nf in fields {
            let eps = noether_current(&lag, &nf.field).map_err(ctx("varcalc"))?;
            let mut ls = self.current_lines("eps_", eps.components);
            if several {
                for l in &mut ls {
                    l.label = Some(match &l.label {
                        Some(x) => format!("{}.{x}", nf.name),
                        None => nf.name.clone(),
                    });
                }
            }
            out.push_str(&render::lines(&ls, self.opts.format));
        }
        ok(out)
    }

    fn symmetry(&self) -> Result<Outcome, CliError> {
        let lag = self.lagrangian()?;
        let tester = self.tester(&lag.bundle);
        let mut out = String::new();
        for nf in self.selected()? {
            let v = is_symmetry_with(&lag, &nf.field, &tester).map_err(ctx("varcalc"))?;
            let how = match &v.decided_by {
                jetcalc::varcalc::Decision::Symbolic => "symbolic".to_string(),
                jetcalc::varcalc::Decision::Numeric(r) => format!("numeric, residual {:.3e}", r.max_residual),
                jetcalc::varcalc::Decision::Undecided(m) => format!("undecided: {m}"),
            };
            let verdict = if v.holds { "symmetry" } else { "not a symmetry" };
            let _ = writeln!(out, "{}: {verdict} ({how})", nf.name);
        }
        ok(out)
    }

    fn source(&self) -> Result<SourceForm, CliError> {
        match (&self.p.source, &self.p.lagrangian) {
            (Some(s), _) => Ok(SourceForm { components: s.clone() }),
            (None, Some(_)) => euler_lagrange(&self.lagrangian()?).map_err(ctx("varcalc")),
            (None, None) => Err(CliError::Usage("problem declares neither source nor lagrangian".into())),
        }
    }

    fn helmholtz(&self) -> Result<Outcome, CliError> {
        let b = self.bundle();
        let rep = helmholtz_check(&b, &self.source()?).map_err(ctx("varcalc"))?;
        if rep.passed {
            return ok("passed\n".into());
        }
        let ls: Vec<Line> = rep
            .violations
            .into_iter()
            .map(|v| Line::labeled(v.label, v.value))
            .collect();
        ok(render::lines(&ls, self.opts.format))
    }

    fn deform(&self) -> Result<Outcome, CliError> {
        let (lag, eta) = self.variation()?;
        let d = deform(&lag, &eta).map_err(ctx("secondvar"))?;
        let mut ls = vec![Line::labeled("raw", d.raw), Line::labeled("integrated", d.integrated)];
        for (c, n) in d.discarded.components.into_iter().zip(self.base_names()) {
            ls.push(Line::labeled(format!("discarded_{n}"), c));
        }
        ok(render::lines(&ls, self.opts.format))
    }

    fn binding(&self, eta: &VariationField, name: &str) -> Result<Binding, CliError> {
        let nb = self
            .p
            .binding(name)
            .ok_or_else(|| CliError::Usage(format!("unknown binding `{name}`")))?;
        let b = &eta.bundle;
        let mut fields = BTreeMap::new();
        for (k, v) in &nb.values {
            let i = b
                .field_index(k)
                .ok_or_else(|| CliError::Usage(format!("binding `{name}` names `{k}`, which is not a field here")))?;
            fields.insert(i, v.clone());
        }
        let target = if nb.target_fields.is_empty() {
            b.clone()
        } else {
            let base = self.base_names();
            let base: Vec<&str> = base.iter().map(String::as_str).collect();
            let tf: Vec<&str> = nb.target_fields.iter().map(String::as_str).collect();
            JetBundle::new(&base, &tf, b.order()).map_err(ctx("jetmodel"))?.with_cap(b.cap())
        };
        Ok(Binding { fields, target })
    }

    fn jacobi(&self, bianchi_form: bool) -> Result<Outcome, CliError> {
        let (lag, eta) = self.variation()?;
        let comps = if bianchi_form {
            bianchi(&lag, &eta).map_err(ctx("secondvar"))?.components
        } else {
            jacobi(&lag, &eta).map_err(ctx("secondvar"))?.components
        };
        let f = self.opts.format;
        match &self.opts.bind {
            None => {
                let prefix = if bianchi_form { "B_" } else { "J_" };
                let names = lag.bundle.fields().to_vec();
                ok(render::lines(&self.field_labels(prefix, comps, &names), f))
            }
            Some(name) => {
                let binding = self.binding(&eta, name)?;
                let tester = self.tester(&binding.target);
                let rep = vanishes_along(&eta.bundle, &comps, &binding, &tester).map_err(ctx("secondvar"))?;
                let nontrivial: Vec<Line> = rep
                    .residuals
                    .iter()
                    .filter(|r| !r.is_zero())
                    .map(|r| Line::equation(sign_normalized(r)))
                    .collect();
                if nontrivial.is_empty() {
                    return ok(render::lines(&[Line::equation(Expr::zero())], f));
                }
                ok(render::lines(&nontrivial, f))
            }
        }
    }

    fn strong_current(&self) -> Result<Outcome, CliError> {
        let (lag, eta) = self.variation()?;
        let s = strong_current(&lag, &eta).map_err(ctx("secondvar"))?;
        let mut ls = Vec::new();
        for (c, n) in s.current.components.into_iter().zip(self.base_names()) {
            ls.push(Line::labeled(format!("H_{n}"), c));
        }
        ls.push(Line::labeled("divergence", s.divergence));
        ok(render::lines(&ls, self.opts.format))
    }

    fn complete_lift(&self) -> Result<Outcome, CliError> {
        let gc = self.metric()?.complete_lift().map_err(ctx("riemann"))?;
        let f = self.opts.format;
        let mut out = String::new();
        match f {
            Format::Tree => {
                let mut ls = Vec::new();
                for (i, row) in gc.g.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        ls.push(Line::labeled(format!("gC[{},{}]", gc.coords[i], gc.coords[j]), e.clone()));
                    }
                }
                out = render::lines(&ls, f);
            }
            Format::Plain => {
                let _ = writeln!(out, "coordinates: {}", gc.coords.join(", "));
                for row in &gc.g {
                    let cells: Vec<String> = row.iter().map(|e| render::expr(e, f)).collect();
                    let _ = writeln!(out, "[{}]", cells.join(", "));
                }
            }
            Format::Latex => {
                out.push_str("\\begin{pmatrix}\n");
                for row in &gc.g {
                    let cells: Vec<String> = row.iter().map(|e| render::expr(e, f)).collect();
                    let _ = writeln!(out, "{} \\\\", cells.join(" & "));
                }
                out.push_str("\\end{pmatrix}\n");
            }
        }
        ok(out)
    }

    fn numeric_problem(&self) -> Result<NumericProblem, CliError> {
        let (t0, t1, step) = self
            .p
            .span
            .ok_or_else(|| CliError::Usage("problem declares no span".into()))?;
        if self.p.initial.is_empty() {
            return Err(CliError::Usage("problem declares no initial values".into()));
        }
        Ok(NumericProblem {
            bundle: self.bundle(),
            equations: self.source()?.components,
            initial: self.p.initial.clone(),
            t0,
            t1,
            step,
            env: self.p.env(),
        })
    }

    fn drift_of(&self, traj: &Trajectory, nf: &NamedField) -> Result<Vec<f64>, CliError> {
        let lag = self.lagrangian()?;
        let eps = noether_current(&lag, &nf.field).map_err(ctx("varcalc"))?;
        let time = lag.bundle.base_symbol(0);
        eps.components
            .iter()
            .map(|e| drift(traj, e, &self.p.env(), &time).map_err(ctx("oracle")))
            .collect()
    }

    fn integrate(&self) -> Result<Outcome, CliError> {
        let np = self.numeric_problem()?;
        let traj = integrate(&np).map_err(ctx("oracle"))?;
        let mut out = String::new();
        let mut header = vec![np.bundle.base()[0].to_string()];
        header.extend(traj.symbols.iter().map(Symbol::to_string));
        let _ = writeln!(out, "{}", header.join("\t"));
        let rows = 10.min(traj.len().saturating_sub(1)).max(1);
        let mut last = usize::MAX;
        for r in 0..=rows {
            let k = r * (traj.len() - 1) / rows;
            if k == last {
                continue;
            }
            last = k;
            let mut cells = vec![format!("{:.6}", traj.times[k])];
            cells.extend(traj.values[k].iter().map(|v| format!("{v:.9}")));
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        if self.p.lagrangian.is_some() && !self.p.vectors.is_empty() {
            let fields = self.selected()?;
            for nf in fields {
                let d = self.drift_of(&traj, nf)?;
                let worst = d.into_iter().fold(0.0f64, f64::max);
                let _ = writeln!(out, "drift({}) = {worst:.3e}", nf.name);
            }
        }
        ok(out)
    }

    fn verify(&self) -> Result<Outcome, CliError> {
        let checks = self.checks()?;
        let mut out = String::new();
        let mut failed = 0;
        for c in &checks {
            if c.ok {
                let _ = writeln!(out, "ok    {}{}", c.name, detail(&c.detail));
            } else {
                failed += 1;
                let _ = writeln!(out, "FAIL  {}{}", c.name, detail(&c.detail));
            }
        }
        let _ = writeln!(out, "{} checks, {} failed", checks.len(), failed);
        Ok(Outcome {
            stdout: out,
            stderr: String::new(),
            code: if failed == 0 { 0 } else { 1 },
        })
    }

    /// Residual check: symbolic zero first, then the random-point oracle.
    fn vanishes(&self, b: &JetBundle, e: &Expr) -> (bool, String) {
        if e.is_zero() {
            return (true, "symbolic".into());
        }
        match self.tester(b).test(e) {
            Ok(r) if r.zero => (true, format!("numeric, residual {:.1e}", r.max_residual)),
            Ok(r) => (false, format!("residual {:.3e}", r.max_residual)),
            Err(err) => (false, err.to_string()),
        }
    }

    fn all_vanish(&self, b: &JetBundle, es: &[Expr]) -> (bool, String) {
        let mut how = "symbolic".to_string();
        for e in es {
            let (good, h) = self.vanishes(b, e);
            if !good {
                return (false, h);
            }
            if h != "symbolic" {
                how = h;
            }
        }
        (true, how)
    }

    fn checks(&self) -> Result<Vec<Check>, CliError> {
        let mut cs = Vec::new();
        let p = self.p;
        if p.lagrangian.is_some() {
            self.lagrangian_checks(&mut cs)?;
        } else if p.source.is_some() {
            let rep = helmholtz_check(&self.bundle(), &self.source()?).map_err(ctx("varcalc"))?;
            let names: Vec<String> = rep.violations.iter().map(|v| v.label.clone()).collect();
            cs.push(Check::new("helmholtz(source)", rep.passed, names.join(", ")));
        }
        if let Some(g) = &p.metric {
            self.metric_checks(g, &mut cs)?;
        }
        Ok(cs)
    }

    fn lagrangian_checks(&self, cs: &mut Vec<Check>) -> Result<(), CliError> {
        let lag = self.lagrangian()?;
        let b = &lag.bundle;
        let e = euler_lagrange(&lag).map_err(ctx("varcalc"))?;
        let rep = helmholtz_check(b, &e).map_err(ctx("varcalc"))?;
        cs.push(Check::new("helmholtz(EL)", rep.passed, ""));

        let (_, eta) = self.variation()?;
        let fv = first_variation_identity(&lag, &eta);
        cs.push(Check::new("first variation", fv.is_ok(), fv.err().map(|e| e.to_string()).unwrap_or_default()));

        let pb = &eta.bundle;
        let lp = lag.on(pb);
        let lie2 = variational_derivative(&lp, &eta.as_field(), 2).map_err(ctx("secondvar"))?;
        let sv = second_variation(&lag, &eta).map_err(ctx("secondvar"))?;
        let diff = lie2.density.sub(&sv.density);
        let orig: Vec<usize> = (0..eta.base_m).collect();
        let el = euler_lagrange_of(pb, &diff, &orig).map_err(ctx("varcalc"))?;
        let (good, how) = self.all_vanish(pb, &el);
        cs.push(Check::new("second variation routes", good, how));

        let d = deform(&lag, &eta);
        cs.push(Check::new("deformed lagrangian", d.is_ok(), d.err().map(|e| e.to_string()).unwrap_or_default()));

        let j = jacobi(&lag, &eta).map_err(ctx("secondvar"))?;
        let bi = bianchi(&lag, &eta).map_err(ctx("secondvar"))?;
        let skew: Vec<Expr> = bi.components.iter().zip(&j.components).map(|(a, c)| a.sub(c)).collect();
        let (good, how) = self.all_vanish(pb, &skew);
        cs.push(Check::new("bianchi = jacobi", good, how));

        let sc = strong_current(&lag, &eta).map_err(ctx("secondvar"))?;
        let (good, how) = self.vanishes(pb, &sc.residual);
        cs.push(Check::new("strong conservation", good, how));

        let traj = match (&self.p.span, self.p.initial.is_empty()) {
            (Some(_), false) => {
                let t = self.numeric_problem().and_then(|np| integrate(&np).map_err(ctx("oracle")));
                cs.push(Check::new(
                    "integrate",
                    t.is_ok(),
                    t.as_ref().err().map(|e| e.to_string()).unwrap_or_default(),
                ));
                t.ok()
            }
            _ => None,
        };

        for nf in &self.p.vectors {
            self.vector_checks(&lag, nf, traj.as_ref(), cs)?;
        }

        for nb in &self.p.bindings {
            let binding = self.binding(&eta, &nb.name)?;
            let tester = self.tester(&binding.target);
            let jr = vanishes_along(pb, &j.components, &binding, &tester).map_err(ctx("secondvar"))?;
            let br = vanishes_along(pb, &bi.components, &binding, &tester).map_err(ctx("secondvar"))?;
            if !nb.target_fields.is_empty() {
                // free fields remain: the reduced systems must coincide
                let diff: Vec<Expr> = jr.residuals.iter().zip(&br.residuals).map(|(a, c)| a.sub(c)).collect();
                let (good, how) = self.all_vanish(&binding.target, &diff);
                cs.push(Check::new(format!("binding {}", nb.name), good, format!("reduced systems agree, {how}")));
                continue;
            }
            let state = if jr.in_kernel {
                "in the Jacobi kernel".to_string()
            } else {
                format!("outside the Jacobi kernel, residual {:.3e}", jr.max_abs)
            };
            cs.push(Check::new(
                format!("binding {}", nb.name),
                jr.in_kernel == br.in_kernel,
                state,
            ));
        }
        Ok(())
    }

    fn vector_checks(
        &self,
        lag: &Lagrangian,
        nf: &NamedField,
        traj: Option<&Trajectory>,
        cs: &mut Vec<Check>,
    ) -> Result<(), CliError> {
        let b = &lag.bundle;
        let v = is_symmetry_with(lag, &nf.field, &self.tester(b)).map_err(ctx("varcalc"))?;
        cs.push(Check::new(format!("symmetry {}", nf.name), v.holds, ""));
        if !v.holds {
            return Ok(());
        }
        let eps = noether_current(lag, &nf.field).map_err(ctx("varcalc"))?;
        let id = noether_identity(lag, &nf.field, &eps).map_err(ctx("varcalc"))?;
        let (good, how) = self.vanishes(b, &id);
        cs.push(Check::new(format!("noether identity {}", nf.name), good, how));
        if let Some(t) = traj {
            let d = self.drift_of(t, nf)?.into_iter().fold(0.0f64, f64::max);
            cs.push(Check::new(format!("noether drift {}", nf.name), d <= 1e-8, format!("{d:.1e}")));
        }
        Ok(())
    }

    fn metric_checks(&self, g: &Metric, cs: &mut Vec<Check>) -> Result<(), CliError> {
        let lag = g.geodesic_energy().map_err(ctx("riemann"))?;
        let b = &lag.bundle;
        let n = g.n();
        let r = g.riemann_tensor().map_err(ctx("riemann"))?;
        let mut cyclic = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        cyclic.push(r[i][j][k][l].add(&r[i][k][l][j]).add(&r[i][l][j][k]));
                    }
                }
            }
        }
        let (good, how) = self.all_vanish(b, &cyclic);
        cs.push(Check::new("first bianchi identity", good, how));

        let names = g.lift_names();
        let lifted = g.complete_lift().map_err(ctx("riemann"))?.geodesic_energy().map_err(ctx("riemann"))?;
        let lb = &lifted.bundle;
        let e = euler_lagrange(&lag).map_err(ctx("varcalc"))?.components;
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let eta = VariationField::adjoin(b, &names).map_err(ctx("liftfields"))?;
        let j = jacobi(&lag, &eta).map_err(ctx("secondvar"))?.components;
        let q: Vec<usize> = (0..n).collect();
        let u: Vec<usize> = (n..2 * n).collect();
        let eu = euler_lagrange_of(lb, &lifted.density, &u).map_err(ctx("varcalc"))?;
        let eq = euler_lagrange_of(lb, &lifted.density, &q).map_err(ctx("varcalc"))?;
        let mut res: Vec<Expr> = eu.iter().zip(&e).map(|(a, c)| a.sub(c)).collect();
        res.extend(eq.iter().zip(&j).map(|(a, c)| a.sub(c)));
        let (good, how) = self.all_vanish(lb, &res);
        cs.push(Check::new("complete lift geodesics", good, how));

        let cj = g.covariant_jacobi().map_err(ctx("riemann"))?;
        let pb = &cj.eta.bundle;
        let jet = jacobi(&lag, &VariationField::adjoin_default(b).map_err(ctx("liftfields"))?)
            .map_err(ctx("secondvar"))?;
        let sub = g.geodesic_substitution(pb).map_err(ctx("riemann"))?;
        let lowered = g.lower(&cj.system.components);
        let mut res = Vec::new();
        for (ji, ci) in jet.components.iter().zip(&lowered) {
            res.push(ji.substitute(&sub).map_err(ctx("riemann"))?.add(ci));
        }
        let (good, how) = self.all_vanish(pb, &res);
        cs.push(Check::new("covariant jacobi", good, how));
        Ok(())
    }
}

struct Check {
    name: String,
    ok: bool,
    detail: String,
}

impl Check {
    fn new(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            ok,
            detail: detail.into(),
        }
    }
}

fn detail(d: &str) -> String {
    if d.is_empty() {
        String::new()
    } else {
        format!(" ({d})")
    }
}

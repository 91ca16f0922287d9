//! Problem-file reader.
//!
//! One statement per line, `#` starts a comment:
//!
//! ```text
//! base t
//! fields th, ph          # or `fields q[2]` for q1, q2
//! angles th
//! params k = 1
//! metric g = [[1, 0], [0, sin(th)^2]]
//! lagrangian order 1 = 1/2*(th_t^2 + sin(th)^2*ph_t^2)    # or `= energy(g)`
//! source = y_tt + y, ...
//! lift spin = tangent(u, v) order (0, 1)
//! vector rot { ph = 1 }  # or `vector name = spin { x = -y, y = x }`
//! variation eta1, eta2
//! initial th = 1, ph = 0, th_t = 0, ph_t = 1
//! span 0 10 step 1/1000
//! bind equator fields eta: th = 1/2*pi, ph = t, eta1 = eta, eta2 = 0
//! ```

use std::collections::BTreeMap;
use std::fmt;

use jetcalc::expr::{parse, Env, Expr, ExprError, Symbol};
use jetcalc::jet::JetBundle;
use jetcalc::lift::{LiftRule, ProjectableVectorField, VariationField};
use jetcalc::riemann::Metric;
use jetcalc::varcalc::Lagrangian;

/// An input error with its 1-based location.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

#[derive(Clone, Debug)]
pub struct NamedField {
    pub name: String,
    pub field: ProjectableVectorField,
}

/// A named substitution of fields by expressions over `target`.
#[derive(Clone, Debug)]
pub struct NamedBinding {
    pub name: String,
    pub target_fields: Vec<String>,
    pub values: Vec<(String, Expr)>,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub bundle: JetBundle,
    pub params: BTreeMap<String, Option<f64>>,
    pub metric: Option<Metric>,
    pub lagrangian: Option<Lagrangian>,
    pub source: Option<Vec<Expr>>,
    pub rules: BTreeMap<String, LiftRule>,
    pub vectors: Vec<NamedField>,
    pub variation: Option<Vec<String>>,
    pub initial: BTreeMap<Symbol, f64>,
    pub span: Option<(f64, f64, f64)>,
    pub bindings: Vec<NamedBinding>,
}

impl Problem {
    /// Numeric values of the declared parameters.
    pub fn env(&self) -> Env {
        let mut env = Env::new();
        for (k, v) in &self.params {
            if let Some(v) = v {
                env.set(Symbol::new(k), *v);
            }
        }
        env
    }

    pub fn vector(&self, name: &str) -> Option<&NamedField> {
        self.vectors.iter().find(|v| v.name == name)
    }

    pub fn binding(&self, name: &str) -> Option<&NamedBinding> {
        self.bindings.iter().find(|b| b.name == name)
    }
}

/// A slice of the current line with its byte offset.
#[derive(Clone, Copy)]
struct Span<'a> {
    text: &'a str,
    at: usize,
}

impl<'a> Span<'a> {
    fn trim(self) -> Span<'a> {
        let lead = self.text.len() - self.text.trim_start().len();
        Span {
            text: self.text.trim(),
            at: self.at + lead,
        }
    }

    fn split_once(self, pat: char) -> Option<(Span<'a>, Span<'a>)> {
        let k = self.text.find(pat)?;
        Some((
            Span {
                text: &self.text[..k],
                at: self.at,
            },
            Span {
                text: &self.text[k + pat.len_utf8()..],
                at: self.at + k + pat.len_utf8(),
            },
        ))
    }

    fn split_word(self) -> (Span<'a>, Span<'a>) {
        let t = self.trim();
        let k = t.text.find(char::is_whitespace).unwrap_or(t.text.len());
        (
            Span {
                text: &t.text[..k],
                at: t.at,
            },
            Span {
                text: &t.text[k..],
                at: t.at + k,
            }
            .trim(),
        )
    }

    /// Split on `sep` outside brackets.
    fn split_top(self, sep: char) -> Vec<Span<'a>> {
        let mut out = Vec::new();
        let mut depth = 0i32;
        let mut start = 0;
        for (k, c) in self.text.char_indices() {
            match c {
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => depth -= 1,
                c if c == sep && depth == 0 => {
                    out.push(Span {
                        text: &self.text[start..k],
                        at: self.at + start,
                    });
                    start = k + c.len_utf8();
                }
                _ => {}
            }
        }
        out.push(Span {
            text: &self.text[start..],
            at: self.at + start,
        });
        out.into_iter().map(Span::trim).filter(|s| !s.text.is_empty()).collect()
    }
}

#[derive(Clone)]
struct Reader {
    line: usize,
    base: Vec<String>,
    fields: Vec<String>,
    angles: Vec<String>,
    params: BTreeMap<String, Option<f64>>,
    metric: Option<(String, Vec<Vec<Expr>>)>,
    lagrangian: Option<(Option<usize>, Expr, usize)>,
    energy_of: Option<String>,
    source: Option<Vec<Expr>>,
    rules: BTreeMap<String, LiftRule>,
    vectors: Vec<(String, Option<String>, Vec<(String, Expr)>, usize)>,
    variation: Option<Vec<String>>,
    initial: Vec<(Symbol, f64)>,
    span: Option<(f64, f64, f64)>,
    bindings: Vec<NamedBinding>,
}

pub fn parse_problem(text: &str) -> Result<Problem, Diagnostic> {
    let mut r = Reader {
        line: 0,
        base: Vec::new(),
        fields: Vec::new(),
        angles: Vec::new(),
        params: BTreeMap::new(),
        metric: None,
        lagrangian: None,
        energy_of: None,
        source: None,
        rules: BTreeMap::new(),
        vectors: Vec::new(),
        variation: None,
        initial: Vec::new(),
        span: None,
        bindings: Vec::new(),
    };
    for (k, raw) in text.lines().enumerate() {
        r.line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        let s = Span { text: body, at: 0 }.trim();
        if s.text.is_empty() {
            continue;
        }
        r.statement(s)?;
    }
    r.finish()
}

impl Reader {
    fn err(&self, at: usize, msg: impl Into<String>) -> Diagnostic {
        Diagnostic {
            line: self.line,
            col: at + 1,
            msg: msg.into(),
        }
    }

    fn statement(&mut self, s: Span) -> Result<(), Diagnostic> {
        let (kw, rest) = s.split_word();
        match kw.text {
            "base" => {
                self.base = self.names(rest)?;
                Ok(())
            }
            "fields" => self.fields_decl(rest),
            "angles" => {
                let names = self.names(rest)?;
                for n in &names {
                    if !self.fields.contains(n) {
                        return Err(self.err(rest.at, format!("unknown field `{n}`")));
                    }
                }
                self.angles.extend(names);
                Ok(())
            }
            "params" => self.params_decl(rest),
            "metric" => self.metric_decl(rest),
            "lagrangian" => self.lagrangian_decl(rest),
            "source" => {
                let (_, rhs) = self.expect_eq(rest)?;
                let comps = rhs
                    .split_top(',')
                    .into_iter()
                    .map(|p| self.expr(p))
                    .collect::<Result<Vec<_>, _>>()?;
                if comps.len() != self.fields.len() {
                    return Err(self.err(rhs.at, format!("source needs {} components", self.fields.len())));
                }
                self.source = Some(comps);
                Ok(())
            }
            "lift" => self.lift_decl(rest),
            "vector" => self.vector_decl(rest),
            "variation" => {
                let names = self.names(rest)?;
                if names.len() != self.fields.len() {
                    return Err(self.err(rest.at, format!("variation needs {} names", self.fields.len())));
                }
                self.variation = Some(names);
                Ok(())
            }
            "initial" => self.initial_decl(rest),
            "span" => self.span_decl(rest),
            "bind" => self.bind_decl(rest),
            other => Err(self.err(kw.at, format!("unknown statement `{other}`"))),
        }
    }

    fn names(&self, s: Span) -> Result<Vec<String>, Diagnostic> {
        let parts = s.split_top(',');
        if parts.is_empty() {
            return Err(self.err(s.at, "expected a name list"));
        }
        parts
            .into_iter()
            .map(|p| {
                if is_ident(p.text) {
                    Ok(p.text.to_string())
                } else {
                    Err(self.err(p.at, format!("`{}` is not a name", p.text)))
                }
            })
            .collect()
    }

    fn fields_decl(&mut self, s: Span) -> Result<(), Diagnostic> {
        self.need_base(s.at)?;
        for p in s.split_top(',') {
            if let Some((head, count)) = p.split_once('[') {
                let count = count.text.strip_suffix(']').and_then(|c| c.trim().parse::<usize>().ok());
                match count {
                    Some(c) if c > 0 && is_ident(head.text.trim()) => {
                        self.fields.extend((1..=c).map(|k| format!("{}{k}", head.text.trim())));
                    }
                    _ => return Err(self.err(p.at, "expected `name[count]`")),
                }
            } else if is_ident(p.text) {
                self.fields.push(p.text.to_string());
            } else {
                return Err(self.err(p.at, format!("`{}` is not a name", p.text)));
            }
        }
        let base: Vec<&str> = self.base.iter().map(String::as_str).collect();
        let fields: Vec<&str> = self.fields.iter().map(String::as_str).collect();
        JetBundle::new(&base, &fields, 1).map_err(|e| self.err(s.at, e.to_string()))?;
        Ok(())
    }

    fn need_base(&self, at: usize) -> Result<(), Diagnostic> {
        if self.base.is_empty() {
            return Err(self.err(at, "`base` must be declared first"));
        }
        Ok(())
    }

    fn need_fields(&self, at: usize) -> Result<(), Diagnostic> {
        if self.fields.is_empty() {
            return Err(self.err(at, "`fields` must be declared first"));
        }
        Ok(())
    }

    fn params_decl(&mut self, s: Span) -> Result<(), Diagnostic> {
        for p in s.split_top(',') {
            let (name, value) = match p.split_once('=') {
                Some((n, v)) => (n.trim(), Some(self.number(v.trim())?)),
                None => (p, None),
            };
            if !is_ident(name.text) || self.base.contains(&name.text.to_string()) || self.fields.contains(&name.text.to_string()) {
                return Err(self.err(name.at, format!("`{}` cannot be a parameter", name.text)));
            }
            self.params.insert(name.text.to_string(), value);
        }
        Ok(())
    }

    fn expect_eq<'a>(&self, s: Span<'a>) -> Result<(Span<'a>, Span<'a>), Diagnostic> {
        match s.split_once('=') {
            Some((l, r)) => Ok((l.trim(), r.trim())),
            None => Err(self.err(s.at, "expected `=`")),
        }
    }

    /// Parse and check every symbol against the declarations.
    fn expr(&self, s: Span) -> Result<Expr, Diagnostic> {
        let e = parse(s.text).map_err(|e| match e {
            ExprError::Parse { pos, msg } => self.err(s.at + pos, msg),
            other => self.err(s.at, other.to_string()),
        })?;
        for sym in e.free_symbols() {
            if !self.known(sym) {
                let col = find_word(s.text, sym.head()).unwrap_or(0);
                return Err(self.err(s.at + col, format!("unknown identifier `{sym}`")));
            }
        }
        Ok(e)
    }

    fn known(&self, sym: &Symbol) -> bool {
        let head = sym.head().to_string();
        let letters_ok = sym.deriv().chars().all(|c| self.base.iter().any(|b| b.starts_with(c) && b.len() == 1));
        if sym.deriv().is_empty() && (head == "pi" || self.base.contains(&head) || self.params.contains_key(&head)) {
            return true;
        }
        self.fields.contains(&head) && letters_ok
    }

    fn number(&self, s: Span) -> Result<f64, Diagnostic> {
        let e = self.expr(s)?;
        let mut env = Env::new();
        for (k, v) in &self.params {
            if let Some(v) = v {
                env.set(Symbol::new(k), *v);
            }
        }
        e.eval(&env).map_err(|err| self.err(s.at, format!("not a number: {err}")))
    }

    fn metric_decl(&mut self, s: Span) -> Result<(), Diagnostic> {
        self.need_fields(s.at)?;
        let (name, rhs) = self.expect_eq(s)?;
        if !is_ident(name.text) {
            return Err(self.err(name.at, "expected a metric name"));
        }
        let rows = self.bracket_list(rhs)?;
        let n = self.fields.len();
        if rows.len() != n {
            return Err(self.err(rhs.at, format!("metric needs {n} rows")));
        }
        let mut g = Vec::new();
        for row in rows {
            let cells = self.bracket_list(row)?;
            if cells.len() != n {
                return Err(self.err(row.at, format!("metric row needs {n} entries")));
            }
            g.push(cells.into_iter().map(|c| self.expr(c)).collect::<Result<Vec<_>, _>>()?);
        }
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                for sym in v.free_symbols() {
                    if !sym.deriv().is_empty() || self.base.iter().any(|b| b == sym.head()) {
                        return Err(self.err(rhs.at, format!("metric entry ({}, {}) must depend on fields only", i + 1, j + 1)));
                    }
                }
            }
        }
        self.metric = Some((name.text.to_string(), g));
        Ok(())
    }

    fn inner<'a>(&self, s: Span<'a>) -> Result<Span<'a>, Diagnostic> {
        let t = s.trim();
        let inner = t
            .text
            .strip_prefix('[')
            .and_then(|x| x.strip_suffix(']'))
            .ok_or_else(|| self.err(t.at, "expected `[...]`"))?;
        Ok(Span {
            text: inner,
            at: t.at + 1,
        })
    }

    fn bracket_list<'a>(&self, s: Span<'a>) -> Result<Vec<Span<'a>>, Diagnostic> {
        Ok(self.inner(s)?.split_top(','))
    }

    fn lagrangian_decl(&mut self, s: Span) -> Result<(), Diagnostic> {
        self.need_fields(s.at)?;
        let (lhs, rhs) = self.expect_eq(s)?;
        let order = if lhs.text.is_empty() {
            None
        } else {
            let (kw, k) = lhs.split_word();
            match (kw.text, k.text.parse::<usize>()) {
                ("order", Ok(k)) if k > 0 => Some(k),
                _ => return Err(self.err(lhs.at, "expected `order <k>`")),
            }
        };
        if self.lagrangian.is_some() || self.energy_of.is_some() {
            return Err(self.err(s.at, "only one Lagrangian per file"));
        }
        if let Some(inner) = rhs.text.strip_prefix("energy(").and_then(|x| x.strip_suffix(')')) {
            match &self.metric {
                Some((g, _)) if g == inner.trim() => {
                    self.energy_of = Some(g.clone());
                    return Ok(());
                }
                _ => return Err(self.err(rhs.at + 7, format!("unknown metric `{}`", inner.trim()))),
            }
        }
        let e = self.expr(rhs)?;
        self.lagrangian = Some((order, e, self.line));
        Ok(())
    }

    fn lift_decl(&mut self, s: Span) -> Result<(), Diagnostic> {
        self.need_fields(s.at)?;
        let (name, rhs) = self.expect_eq(s)?;
        if !is_ident(name.text) {
            return Err(self.err(name.at, "expected a rule name"));
        }
        let (call, order) = match rhs.text.find(" order ") {
            Some(k) => (
                Span {
                    text: &rhs.text[..k],
                    at: rhs.at,
                },
                Some(Span {
                    text: &rhs.text[k + 7..],
                    at: rhs.at + k + 7,
                }),
            ),
            None => (rhs, None),
        };
        let call = call.trim();
        let (kind, args) = match call.split_once('(') {
            Some((k, a)) => {
                let a = Span {
                    text: a.text.strip_suffix(')').ok_or_else(|| self.err(call.at, "missing `)`"))?,
                    at: a.at,
                };
                (k.trim(), Some(a))
            }
            None => (call, None),
        };
        let b = self.bundle(1).map_err(|m| self.err(s.at, m))?;
        let lift_err = |e: jetcalc::lift::LiftError| self.err(call.at, e.to_string());
        let mut rule = match (kind.text, args) {
            ("identity", None) => LiftRule::identity(&b),
            ("tangent", Some(a)) | ("cotangent", Some(a)) => {
                let comps = self.names(a)?;
                let comps: Vec<&str> = comps.iter().map(String::as_str).collect();
                if kind.text == "tangent" {
                    LiftRule::tangent(&b, &comps).map_err(lift_err)?
                } else {
                    LiftRule::cotangent(&b, &comps).map_err(lift_err)?
                }
            }
            ("covariant2", Some(a)) => {
                let rows = self.bracket_list(a)?;
                let mut comps = Vec::new();
                for row in rows {
                    comps.push(self.names(self.inner(row)?)?);
                }
                let comps: Vec<Vec<&str>> = comps.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
                LiftRule::covariant2(&b, &comps).map_err(lift_err)?
            }
            (other, _) => return Err(self.err(kind.at, format!("unknown lift rule `{other}`"))),
        };
        if let Some(o) = order {
            let o = o.trim();
            let pair = o
                .text
                .strip_prefix('(')
                .and_then(|x| x.strip_suffix(')'))
                .and_then(|x| x.split_once(','))
                .and_then(|(a, c)| Some((a.trim().parse().ok()?, c.trim().parse().ok()?)));
            match pair {
                Some(p) => rule.order = p,
                None => return Err(self.err(o.at, "expected `(r, k)`")),
            }
        }
        rule.name = name.text.to_string();
        self.rules.insert(name.text.to_string(), rule);
        Ok(())
    }

    fn vector_decl(&mut self, s: Span) -> Result<(), Diagnostic> {
        self.need_fields(s.at)?;
        let (head, body) = s.split_once('{').ok_or_else(|| self.err(s.at, "expected `{`"))?;
        let body = Span {
            text: body.text.trim_end().strip_suffix('}').ok_or_else(|| self.err(body.at, "expected `}`"))?,
            at: body.at,
        };
        let (name, rule) = match head.split_once('=') {
            Some((n, r)) => (n.trim(), Some(r.trim())),
            None => (head.trim(), None),
        };
        if !is_ident(name.text) {
            return Err(self.err(name.at, "expected a vector name"));
        }
        if let Some(r) = rule {
            if !self.rules.contains_key(r.text) {
                return Err(self.err(r.at, format!("unknown lift rule `{}`", r.text)));
            }
        }
        let mut comps = Vec::new();
        for p in body.split_top(',') {
            let (k, v) = self.expect_eq(p)?;
            let is_base = self.base.iter().any(|b| b == k.text);
            let is_field = self.fields.iter().any(|f| f == k.text);
            if !(is_base || rule.is_none() && is_field) {
                return Err(self.err(k.at, format!("unknown identifier `{}`", k.text)));
            }
            comps.push((k.text.to_string(), self.expr(v)?));
        }
        self.vectors
            .push((name.text.to_string(), rule.map(|r| r.text.to_string()), comps, self.line));
        Ok(())
    }

    fn initial_decl(&mut self, s: Span) -> Result<(), Diagnostic> {
        self.need_fields(s.at)?;
        for p in s.split_top(',') {
            let (k, v) = self.expect_eq(p)?;
            let sym = Symbol::new(k.text);
            if !self.fields.iter().any(|f| f == sym.head()) || !self.known(&sym) {
                return Err(self.err(k.at, format!("unknown identifier `{}`", k.text)));
            }
            let x = self.number(v)?;
            self.initial.push((sym, x));
        }
        Ok(())
    }

    fn span_decl(&mut self, s: Span) -> Result<(), Diagnostic> {
        let parts: Vec<&str> = s.text.split_whitespace().collect();
        let bad = || self.err(s.at, "expected `span <t0> <t1> step <h>`");
        if parts.len() != 4 || parts[2] != "step" {
            return Err(bad());
        }
        let num = |t: &str| -> Result<f64, Diagnostic> {
            let e = parse(t).map_err(|_| bad())?;
            e.eval(&Env::new()).map_err(|_| bad())
        };
        let (t0, t1, h) = (num(parts[0])?, num(parts[1])?, num(parts[3])?);
        if !(h > 0.0 && t1 > t0) {
            return Err(self.err(s.at, "span needs t1 > t0 and a positive step"));
        }
        self.span = Some((t0, t1, h));
        Ok(())
    }

    fn bind_decl(&mut self, s: Span) -> Result<(), Diagnostic> {
        self.need_fields(s.at)?;
        let (head, body) = s.split_once(':').ok_or_else(|| self.err(s.at, "expected `:`"))?;
        let (name, rest) = head.split_word();
        if !is_ident_dash(name.text) {
            return Err(self.err(name.at, "expected a binding name"));
        }
        let mut target_fields = Vec::new();
        if !rest.text.is_empty() {
            let (kw, list) = rest.split_word();
            if kw.text != "fields" {
                return Err(self.err(kw.at, "expected `fields`"));
            }
            target_fields = self.names(list)?;
        }
        // target fields are visible inside the bound values only
        let mut values = Vec::new();
        for p in body.split_top(',') {
            let (k, v) = self.expect_eq(p)?;
            let adjoined = self
                .variation
                .clone()
                .unwrap_or_else(|| VariationField::default_names(self.fields.len()));
            let declared = self.fields.iter().chain(&adjoined).any(|f| f == k.text);
            if !declared {
                return Err(self.err(k.at, format!("unknown identifier `{}`", k.text)));
            }
            let mut scope = self.clone();
            scope.fields = target_fields.clone();
            scope.variation = None;
            values.push((k.text.to_string(), scope.expr(v)?));
        }
        self.bindings.push(NamedBinding {
            name: name.text.to_string(),
            target_fields,
            values,
        });
        Ok(())
    }

    fn bundle(&self, order: usize) -> Result<JetBundle, String> {
        let base: Vec<&str> = self.base.iter().map(String::as_str).collect();
        let fields: Vec<&str> = self.fields.iter().map(String::as_str).collect();
        Ok(JetBundle::new(&base, &fields, order)
            .map_err(|e| e.to_string())?
            .with_angles(&self.angles))
    }

    fn finish(self) -> Result<Problem, Diagnostic> {
        let at_end = |msg: &str| Diagnostic {
            line: self.line.max(1),
            col: 1,
            msg: msg.to_string(),
        };
        if self.base.is_empty() || self.fields.is_empty() {
            return Err(at_end("problem needs `base` and `fields`"));
        }
        let metric = match &self.metric {
            Some((_, g)) => {
                let coords: Vec<&str> = self.fields.iter().map(String::as_str).collect();
                let angles: Vec<&str> = self.angles.iter().map(String::as_str).collect();
                Some(
                    Metric::new(&coords, g.clone())
                        .map_err(|e| at_end(&e.to_string()))?
                        .with_angles(&angles),
                )
            }
            None => None,
        };
        let mut bundle = self.bundle(1).map_err(|m| at_end(&m))?;
        let lagrangian = match (&self.lagrangian, &self.energy_of, &metric) {
            (Some((order, e, line)), _, _) => {
                let found = bundle.expr_order(e).max(1);
                let k = order.unwrap_or(found);
                bundle = bundle.with_order(k).with_cap(4 * k + 1);
                Some(Lagrangian::new(bundle.clone(), e.clone()).map_err(|err| Diagnostic {
                    line: *line,
                    col: 1,
                    msg: err.to_string(),
                })?)
            }
            (None, Some(_), Some(g)) => {
                if self.base != ["t"] {
                    return Err(at_end("`energy(...)` needs `base t`"));
                }
                let lag = g.geodesic_energy().map_err(|e| at_end(&e.to_string()))?;
                bundle = lag.bundle.clone();
                Some(lag)
            }
            _ => None,
        };
        if let Some(src) = &self.source {
            let k = src.iter().map(|e| bundle.expr_order(e)).max().unwrap_or(1).max(1);
            if lagrangian.is_none() {
                bundle = bundle.with_order(k).with_cap(4 * k + 1);
            }
        }
        let mut vectors = Vec::new();
        for (name, rule, comps, line) in &self.vectors {
            let diag = |msg: String| Diagnostic {
                line: *line,
                col: 1,
                msg,
            };
            let mut xi = vec![Expr::zero(); bundle.n()];
            let mut fiber = vec![Expr::zero(); bundle.m()];
            for (k, v) in comps {
                if let Some(mu) = bundle.base_index(k) {
                    xi[mu] = v.clone();
                } else if let Some(i) = bundle.field_index(k) {
                    fiber[i] = v.clone();
                }
            }
            let field = match rule {
                Some(r) => self.rules[r].apply(&bundle, &xi),
                None => ProjectableVectorField::new(&bundle, xi, fiber),
            }
            .map_err(|e| diag(format!("vector `{name}`: {e}")))?;
            vectors.push(NamedField {
                name: name.clone(),
                field,
            });
        }
        let initial = self.initial.into_iter().collect();
        Ok(Problem {
            bundle,
            params: self.params,
            metric,
            lagrangian,
            source: self.source,
            rules: self.rules,
            vectors,
            variation: self.variation,
            initial,
            span: self.span,
            bindings: self.bindings,
        })
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic()) && cs.all(|c| c.is_ascii_alphanumeric())
}

fn is_ident_dash(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic()) && cs.all(|c| c.is_ascii_alphanumeric() || c == '-')
}

/// Byte offset of `w` as a whole word in `s`.
fn find_word(s: &str, w: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let mut from = 0;
    while let Some(k) = s[from..].find(w) {
        let k = from + k;
        let before = k == 0 || !(bytes[k - 1] as char).is_ascii_alphanumeric();
        let end = k + w.len();
        let after = end >= s.len() || !(bytes[end] as char).is_ascii_alphanumeric();
        if before && after {
            return Some(k);
        }
        from = k + w.len();
    }
    None
}

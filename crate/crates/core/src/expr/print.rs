use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Atom, Expr, Monomial, Poly, Symbol};

/// Canonical plain-text rendering; re-parses to the same expression.
pub fn to_plain(e: &Expr) -> String {
    let num = plain_poly(e.num());
    if e.den().is_empty() {
        return num;
    }
    let num = if e.num().terms().len() > 1 && !num.starts_with('-') {
        format!("({num})")
    } else {
        num
    };
    let factors: Vec<String> = e
        .den()
        .iter()
        .map(|(p, k)| {
            if *k == 1 {
                format!("({})", plain_poly(p))
            } else {
                format!("({})^{}", plain_poly(p), k)
            }
        })
        .collect();
    // one division per factor so that re-parsing meets the same factors
    format!("{num}/{}", factors.join("/"))
}

fn plain_poly(p: &Poly) -> String {
    let terms = p.terms();
    if terms.is_empty() {
        return "0".into();
    }
    if terms.len() > 1 && terms[0].coef.is_negative() {
        return format!("-({})", plain_poly(&p.neg()));
    }
    let mut out = String::new();
    for (k, t) in terms.iter().enumerate() {
        let body = plain_term(&t.coef.abs(), &t.mono);
        if k == 0 {
            if t.coef.is_negative() {
                out.push('-');
            }
        } else if t.coef.is_negative() {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        out.push_str(&body);
    }
    out
}

fn rational_text(c: &BigRational) -> String {
    if c.denom() == &BigInt::one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn plain_atom(a: &Atom) -> String {
    match a {
        Atom::Sym(s) => s.to_string(),
        Atom::Func(k, x) => format!("{}({})", k.name(), to_plain(x)),
        Atom::Opaque(o) => {
            let args: Vec<String> = o.args.iter().map(to_plain).collect();
            format!("{}({})", o.key(), args.join(", "))
        }
    }
}

fn plain_factor(a: &Atom, e: i64) -> String {
    if e == 1 {
        plain_atom(a)
    } else {
        format!("{}^{}", plain_atom(a), e)
    }
}

fn plain_term(c: &BigRational, m: &Monomial) -> String {
    let pos: Vec<String> = m
        .factors()
        .iter()
        .filter(|(_, e)| *e > 0)
        .map(|(a, e)| plain_factor(a, *e))
        .collect();
    let neg: Vec<String> = m
        .factors()
        .iter()
        .filter(|(_, e)| *e < 0)
        .map(|(a, e)| plain_factor(a, -e))
        .collect();
    let mut parts = Vec::new();
    if !c.is_one() || pos.is_empty() {
        parts.push(rational_text(c));
    }
    parts.extend(pos);
    let mut s = parts.join("*");
    match neg.len() {
        0 => {}
        1 => {
            s.push('/');
            s.push_str(&neg[0]);
        }
        _ => {
            s.push_str("/(");
            s.push_str(&neg.join("*"));
            s.push(')');
        }
    }
    s
}

/// LaTeX rendering: dotted time derivatives up to order two, subscripts
/// beyond.
pub fn to_latex(e: &Expr) -> String {
    let num = latex_poly(e.num());
    if e.den().is_empty() {
        return num;
    }
    let den: Vec<String> = e
        .den()
        .iter()
        .map(|(p, k)| {
            let body = format!("\\left({}\\right)", latex_poly(p));
            if *k == 1 {
                body
            } else {
                format!("{body}^{{{k}}}")
            }
        })
        .collect();
    format!("\\frac{{{num}}}{{{}}}", den.join(" "))
}

fn latex_poly(p: &Poly) -> String {
    let terms = p.terms();
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, t) in terms.iter().enumerate() {
        let body = latex_term(&t.coef.abs(), &t.mono);
        if k == 0 {
            if t.coef.is_negative() {
                out.push('-');
            }
        } else if t.coef.is_negative() {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        out.push_str(&body);
    }
    out
}

const GREEK: &[(&str, &str)] = &[
    ("alpha", "\\alpha"),
    ("beta", "\\beta"),
    ("gamma", "\\gamma"),
    ("eta", "\\eta"),
    ("theta", "\\theta"),
    ("th", "\\theta"),
    ("phi", "\\phi"),
    ("ph", "\\phi"),
    ("psi", "\\psi"),
    ("xi", "\\xi"),
    ("lambda", "\\lambda"),
    ("omega", "\\omega"),
    ("pi", "\\pi"),
];

fn latex_head(head: &str) -> (String, String) {
    let split = head.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let (letters, digits) = head.split_at(split);
    let base = GREEK
        .iter()
        .find(|(k, _)| *k == letters)
        .map(|(_, v)| v.to_string())
        .unwrap_or_else(|| letters.to_string());
    (base, digits.to_string())
}

fn latex_symbol(s: &Symbol) -> String {
    let (base, digits) = latex_head(s.head());
    let d = s.deriv();
    let dotted = !d.is_empty() && d.len() <= 2 && d.chars().all(|c| c == 't');
    let mut out = if dotted {
        let cmd = if d.len() == 1 { "\\dot" } else { "\\ddot" };
        format!("{cmd}{{{base}}}")
    } else {
        base
    };
    let mut sub = digits;
    if !d.is_empty() && !dotted {
        sub.push_str(d);
    }
    if !sub.is_empty() {
        out.push_str(&format!("_{{{sub}}}"));
    }
    out
}

fn latex_atom(a: &Atom) -> String {
    match a {
        Atom::Sym(s) => latex_symbol(s),
        Atom::Func(k, x) => format!("\\{}\\left({}\\right)", k.name(), to_latex(x)),
        Atom::Opaque(o) => {
            let args: Vec<String> = o.args.iter().map(to_latex).collect();
            let primes = if o.derivs.is_empty() {
                String::new()
            } else {
                let ds: String = o.derivs.iter().map(|d| (d + 1).to_string()).collect();
                format!("_{{,{ds}}}")
            };
            format!("{}{}\\left({}\\right)", o.name, primes, args.join(", "))
        }
    }
}

fn latex_factor(a: &Atom, e: i64) -> String {
    if e == 1 {
        latex_atom(a)
    } else {
        format!("{}^{{{}}}", latex_atom(a), e)
    }
}

fn latex_term(c: &BigRational, m: &Monomial) -> String {
    let pos: Vec<String> = m
        .factors()
        .iter()
        .filter(|(_, e)| *e > 0)
        .map(|(a, e)| latex_factor(a, *e))
        .collect();
    let neg: Vec<String> = m
        .factors()
        .iter()
        .filter(|(_, e)| *e < 0)
        .map(|(a, e)| latex_factor(a, -e))
        .collect();
    let top_coef = c.numer().to_string();
    let bot_coef = c.denom().to_string();
    let mut top = Vec::new();
    if top_coef != "1" || pos.is_empty() {
        top.push(top_coef);
    }
    top.extend(pos);
    let mut bot = Vec::new();
    if bot_coef != "1" {
        bot.push(bot_coef);
    }
    bot.extend(neg);
    if bot.is_empty() {
        top.join(" ")
    } else {
        format!("\\frac{{{}}}{{{}}}", top.join(" "), bot.join(" "))
    }
}

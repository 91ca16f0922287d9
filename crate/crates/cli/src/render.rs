use jetcalc::expr::{normalize, parse_tree_format, to_latex, to_plain, Expr, ExprError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Plain,
    Latex,
    Tree,
}

/// One printed result line.
#[derive(Clone, Debug)]
pub struct Line {
    pub label: Option<String>,
    pub expr: Expr,
    /// Print as an equation `expr = 0`.
    pub equation: bool,
}

impl Line {
    pub fn bare(expr: Expr) -> Line {
        Line {
            label: None,
            expr,
            equation: false,
        }
    }

    pub fn labeled(label: impl Into<String>, expr: Expr) -> Line {
        Line {
            label: Some(label.into()),
            expr,
            equation: false,
        }
    }

    pub fn equation(expr: Expr) -> Line {
        Line {
            label: None,
            expr,
            equation: true,
        }
    }
}

pub fn expr(e: &Expr, f: Format) -> String {
    match f {
        Format::Plain => to_plain(e),
        Format::Latex => to_latex(e),
        Format::Tree => e.to_tree_format(),
    }
}

pub fn lines(ls: &[Line], f: Format) -> String {
    let mut out = String::new();
    for l in ls {
        if let Some(lab) = &l.label {
            out.push_str(lab);
            out.push_str(": ");
        }
        out.push_str(&expr(&l.expr, f));
        if l.equation && f != Format::Tree {
            out.push_str(" = 0");
        }
        out.push('\n');
    }
    out
}

/// `e` or `−e`, whichever prints without a leading minus sign.
pub fn sign_normalized(e: &Expr) -> Expr {
    if to_plain(e).starts_with('-') {
        e.neg()
    } else {
        e.clone()
    }
}

/// Read back `--format tree` output: one optional `label: ` and one tree per
/// line.
pub fn read_tree_output(text: &str) -> Result<Vec<(Option<String>, Expr)>, ExprError> {
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (label, body) = match line.find(": (") {
            Some(k) if !line.starts_with('(') => (Some(line[..k].to_string()), &line[k + 2..]),
            _ => (None, line),
        };
        out.push((label, normalize(&parse_tree_format(body.trim())?)?));
    }
    Ok(out)
}

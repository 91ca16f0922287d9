use std::path::PathBuf;
use std::process::Command as Proc;

use jetcalc::expr::ex;
use jetcalc_cli::render::read_tree_output;
use jetcalc_cli::{parse_problem, run_text, Command, Format, Options};
use proptest::prelude::*;

fn problem(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn plain(cmd: Command, text: &str) -> String {
    let out = run_text(cmd, text, &Options::default());
    assert_eq!(out.code, 0, "{}", out.stderr);
    out.stdout
}

#[test]
fn oscillator_parses() {
    let p = parse_problem(&problem("oscillator.jet")).unwrap();
    let b = &p.lagrangian.as_ref().unwrap().bundle;
    assert_eq!((b.n(), b.m(), b.order()), (1, 1, 1));
    assert_eq!(p.vectors.len(), 1);
    assert_eq!(p.span, Some((0.0, 10.0, 0.001)));
}

#[test]
fn sphere_metric_parses() {
    let p = parse_problem(&problem("sphere.jet")).unwrap();
    let g = p.metric.unwrap();
    assert_eq!(g.n(), 2);
    assert_eq!(g.g[1][1], ex("sin(th)^2"));
}

#[test]
fn undeclared_field_located() {
    let d = parse_problem("base t\nfields y\nlagrangian = 1/2*y_t^2 - z^2\n").unwrap_err();
    assert_eq!((d.line, d.col), (3, 26));
    assert!(d.msg.contains("`z`"));
    let d = parse_problem("base t\nfields y\nvector v { x = 1 }\n").unwrap_err();
    assert_eq!(d.line, 3);
    assert!(d.msg.contains("`x`"));
}

#[test]
fn grammar_errors_located() {
    let d = parse_problem("base t\nfields y\nlagrangian = y_t^2 +* y\n").unwrap_err();
    assert_eq!(d.line, 3);
    assert!(d.col > 13);
    let d = parse_problem("base t\nfields y\nfrobnicate y\n").unwrap_err();
    assert_eq!((d.line, d.col), (3, 1));
    let d = parse_problem("base t\nfields th, ph\nmetric g = [[1, 0]]\n").unwrap_err();
    assert!(d.msg.contains("2 rows"));
    let d = parse_problem("base t\nfields y\nlagrangian = y^2\nlagrangian = y\n").unwrap_err();
    assert_eq!(d.line, 4);
}

#[test]
fn el_outputs() {
    assert_eq!(plain(Command::El, &problem("oscillator.jet")), "-(y_tt + y)\n");
    assert_eq!(plain(Command::El, &problem("free_particle.jet")), "-y_tt\n");
    let s = plain(Command::El, &problem("sphere.jet"));
    assert_eq!(s.lines().count(), 2);
    assert!(s.starts_with("E_th: "));
}

#[test]
fn jacobi_bound_to_great_circle() {
    let opts = Options {
        bind: Some("great-circle".into()),
        ..Options::default()
    };
    let out = run_text(Command::Jacobi, &problem("sphere.jet"), &opts);
    assert_eq!(out.stdout, "eta_tt + eta = 0\n");
    let unbound = plain(Command::Jacobi, &problem("sphere.jet"));
    assert!(unbound.contains("J_th: ") && unbound.contains("J_ph: "));
}

#[test]
fn complete_lift_flat() {
    let s = plain(Command::CompleteLift, &problem("flat_tq.jet"));
    assert_eq!(
        s,
        "coordinates: x, y, u1, u2\n[0, 0, 1, 0]\n[0, 0, 0, 1]\n[1, 0, 0, 0]\n[0, 1, 0, 0]\n"
    );
    let out = run_text(Command::CompleteLift, &problem("oscillator.jet"), &Options::default());
    assert_eq!(out.code, 2);
}

#[test]
fn other_subcommands() {
    let osc = problem("oscillator.jet");
    assert_eq!(plain(Command::Momenta, &osc), "p[y,-,t]: y_t\n");
    assert_eq!(plain(Command::Noether, &osc), "-(1/2*y_t^2 + 1/2*y^2)\n");
    assert_eq!(plain(Command::Symmetry, &osc), "time: symmetry (symbolic)\n");
    assert_eq!(plain(Command::Helmholtz, &osc), "passed\n");
    assert_eq!(plain(Command::SecondVariation, &osc), "-(eta*eta_tt + eta^2)\n");
    assert_eq!(plain(Command::StrongCurrent, &osc), "H_t: 0\ndivergence: 0\n");
    let d = plain(Command::Deform, &osc);
    assert!(d.contains("integrated: eta_t*y_t - eta*y"));
    let s = plain(Command::Integrate, &osc);
    assert!(s.starts_with("t\ty\ty_t\ty_tt\n"));
    assert!(s.contains("drift(time)"));
}

#[test]
fn helmholtz_failure_names_condition() {
    let src = "base t\nfields y\nsource = y_tt + y_t + y\n";
    let out = run_text(Command::Helmholtz, src, &Options::default());
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("H[y, y; t]"), "{}", out.stdout);
    let out = run_text(Command::Verify, src, &Options::default());
    assert_eq!(out.code, 1);
}

#[test]
fn tree_round_trip() {
    let opts = Options {
        format: Format::Tree,
        ..Options::default()
    };
    for file in ["oscillator.jet", "sphere.jet", "flat_tq.jet", "free_particle.jet"] {
        let text = problem(file);
        for cmd in [
            Command::El,
            Command::Momenta,
            Command::Deform,
            Command::Jacobi,
            Command::Bianchi,
            Command::SecondVariation,
            Command::StrongCurrent,
        ] {
            let tree = run_text(cmd, &text, &opts).stdout;
            let plain_out = plain(cmd, &text);
            let back = read_tree_output(&tree).unwrap();
            assert_eq!(back.len(), plain_out.lines().count());
            for ((label, e), line) in back.iter().zip(plain_out.lines()) {
                let rendered = match label {
                    Some(l) => format!("{l}: {e}"),
                    None => e.to_string(),
                };
                assert_eq!(rendered, line);
            }
        }
    }
}

#[test]
fn rendering_is_deterministic() {
    let text = problem("sphere.jet");
    let a = plain(Command::Jacobi, &text);
    for _ in 0..3 {
        assert_eq!(plain(Command::Jacobi, &text), a);
    }
}

#[test]
fn verify_shipped_problems() {
    for file in ["oscillator.jet", "free_particle.jet", "sphere.jet", "flat_tq.jet"] {
        let out = run_text(Command::Verify, &problem(file), &Options::default());
        assert_eq!(out.code, 0, "{file}:\n{}", out.stdout);
        assert!(!out.stdout.contains("FAIL"));
    }
}

#[test]
fn verify_reports_broken_symmetry() {
    let text = "base t\nfields y\nlagrangian = 1/2*y_t^2 - 1/2*y^2\nvector shift { y = 1 }\n";
    let out = run_text(Command::Verify, text, &Options::default());
    assert_eq!(out.code, 1);
    assert!(out.stdout.contains("FAIL  symmetry shift"));
}

#[test]
fn order_cap_is_enforced() {
    let opts = Options {
        order_cap: Some(1),
        ..Options::default()
    };
    let out = run_text(Command::El, &problem("oscillator.jet"), &opts);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("varcalc"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_jetcalc");
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems");
    let out = Proc::new(bin).arg("el").arg(dir.join("oscillator.jet")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "-(y_tt + y)\n");
    let out = Proc::new(bin).arg("el").arg(dir.join("missing.jet")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Proc::new(bin)
        .args(["jacobi", "--bind", "great-circle", "--format", "latex"])
        .arg(dir.join("sphere.jet"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).ends_with("= 0\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn parser_is_total(s in "[ -~\n]{0,120}") {
        let _ = parse_problem(&s);
    }

    #[test]
    fn mutated_problems_never_panic(cut in 0usize..400, junk in "[ -~]{0,6}") {
        let text = problem("sphere.jet");
        let mut k = cut.min(text.len());
        while !text.is_char_boundary(k) {
            k -= 1;
        }
        let mutated = format!("{}{}{}", &text[..k], junk, &text[k..]);
        let out = run_text(Command::El, &mutated, &Options::default());
        prop_assert!(out.code == 0 || out.code == 2);
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use jetcalc_cli::{run_text, Command, Format, Options};

/// Symbolic variational calculus on jet bundles.
#[derive(Parser)]
#[command(name = "jetcalc", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Problem file.
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Plain)]
    format: Format,
    /// Seed of the numeric oracle.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tolerance of the numeric oracle.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Maximal jet order reachable by total derivatives.
    #[arg(long)]
    order_cap: Option<usize>,
    /// Named binding from the problem file.
    #[arg(long)]
    bind: Option<String>,
    /// Named vector field from the problem file.
    #[arg(long)]
    field: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", cli.file.display());
            return ExitCode::from(2);
        }
    };
    let opts = Options {
        format: cli.format,
        seed: cli.seed,
        tol: cli.tol,
        order_cap: cli.order_cap,
        bind: cli.bind,
        field: cli.field,
    };
    let out = run_text(cli.command, &text, &opts);
    print!("{}", out.stdout);
    if !out.stderr.is_empty() {
        eprint!("{}", out.stderr);
    }
    ExitCode::from(out.code as u8)
}

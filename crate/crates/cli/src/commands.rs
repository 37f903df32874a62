//! Argument parsing and dispatch for the `revcurve` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::fixtures::{fixtures, Fixture};
use crate::report::run_scenario;
use crate::scenario::{load_scenario, Analysis, Scenario};
use crate::{exit, Result};

#[derive(Debug, Parser)]
#[command(name = "revcurve", version, about = "Revenue curves, anonymous pricing and closeness checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Args)]
struct Flags {
    /// Rows per sampled curve in curves.csv.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Points used to discretize value distributions for the LP oracle.
    #[arg(long, global = true)]
    oracle_values: Option<usize>,
    /// Points used to discretize budget distributions for the LP oracle.
    #[arg(long, global = true)]
    oracle_budgets: Option<usize>,
    /// Seed for randomized fixtures.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the scenario's `output`, else `revcurve-out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

/// TARGET is a scenario JSON file or a fixture reference such as `mhr-fail:n=5`.
#[derive(Debug, Subcommand)]
enum Command {
    /// Write price-posting curves and their hulls (curves.csv).
    Curve {
        target: String,
        /// Also build and write the ex-ante curves.
        #[arg(long)]
        ex_ante: bool,
    },
    /// Optimize one anonymous price (ap.csv).
    Ap { target: String },
    /// Solve the ex-ante relaxation on the ex-ante curves (ear.csv).
    Ear { target: String },
    /// Per-agent closeness parameters (closeness.csv).
    Closeness { target: String },
    /// Check the approximation ratio against its bounds and any fixture expectations.
    Verify { target: String },
    /// List the built-in fixtures, or check one fixture's expected values.
    Fixtures { reference: Option<String> },
    /// Run every analysis a scenario file requests.
    Report { scenario: PathBuf },
}

/// Runs the command line `args` (program name first), writing human output
/// to `out`. Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(out, "{e}");
            return if e.use_stderr() { exit::INPUT_ERROR } else { exit::PASS };
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            exit::INPUT_ERROR
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    let flags = cli.flags;
    let (target, analyses): (&str, Option<Vec<Analysis>>) = match &cli.command {
        Command::Curve { target, ex_ante: false } => (target, Some(vec![Analysis::Curves])),
        Command::Curve { target, ex_ante: true } => (target, Some(vec![Analysis::Curves, Analysis::Ear])),
        Command::Ap { target } => (target, Some(vec![Analysis::Ap])),
        Command::Ear { target } => (target, Some(vec![Analysis::Ear])),
        Command::Closeness { target } => (target, Some(vec![Analysis::Closeness])),
        Command::Verify { target } => (target, Some(vec![Analysis::Verify])),
        Command::Report { scenario } => {
            let s = load_scenario(scenario)?;
            return execute(s, None, &flags, out);
        }
        Command::Fixtures { reference: None } => {
            list_fixtures(out);
            return Ok(exit::PASS);
        }
        Command::Fixtures { reference: Some(r) } => return check_fixture(r, &flags, out),
    };
    let scenario =
        if Path::new(target).is_file() { load_scenario(Path::new(target))? } else { Scenario::from_fixture(target) };
    execute(scenario, analyses, &flags, out)
}

fn apply(mut s: Scenario, flags: &Flags) -> Result<Scenario> {
    if let Some(g) = flags.grid {
        s.grid = g;
    }
    if let Some(v) = flags.oracle_values {
        s.oracle.value_points = v;
    }
    if let Some(b) = flags.oracle_budgets {
        s.oracle.budget_points = b;
    }
    if let Some(seed) = flags.seed {
        s.seed = seed;
    }
    s.validate()?;
    Ok(s)
}

fn execute(scenario: Scenario, analyses: Option<Vec<Analysis>>, flags: &Flags, out: &mut dyn Write) -> Result<u8> {
    let mut s = apply(scenario, flags)?;
    if let Some(a) = analyses {
        s.analyses = a;
    }
    let dir = flags.out.clone().or_else(|| s.output.clone()).unwrap_or_else(|| PathBuf::from("revcurve-out"));
    let outcome = run_scenario(&s, &dir)?;
    let _ = write!(out, "{}", outcome.summary);
    for f in &outcome.files {
        let _ = writeln!(out, "wrote {}", f.display());
    }
    Ok(if outcome.passed() { exit::PASS } else { exit::VERIFICATION_FAILED })
}

fn list_fixtures(out: &mut dyn Write) {
    for f in fixtures() {
        let _ = writeln!(out, "{}  {}", f.reference, f.summary);
        for e in &f.expectations {
            let _ = writeln!(out, "    {}: {} {} [{}] {}", e.label, e.check, e.target, e.origin, e.note);
        }
    }
}

fn check_fixture(reference: &str, flags: &Flags, out: &mut dyn Write) -> Result<u8> {
    let s = apply(Scenario::from_fixture(reference), flags)?;
    let f = Fixture::parse(reference, s.seed)?;
    let outcomes = f.evaluate(&s.oracle_config())?;
    let _ = writeln!(out, "{}  {}", f.reference, f.summary);
    let mut failed = false;
    for o in &outcomes {
        let _ = writeln!(
            out,
            "{} {}: {} ({} {}) [{}]",
            if o.pass { "PASS" } else { "FAIL" },
            o.label,
            o.actual,
            o.check,
            o.target,
            o.origin
        );
        failed |= !o.pass;
    }
    Ok(if failed { exit::VERIFICATION_FAILED } else { exit::PASS })
}

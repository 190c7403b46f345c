//! `ncfree`: counts, moments, joint moments, free convolution and the
//! verification suites from the command line.
//!
//! Exit codes: 0 success, 1 failed check, 2 usage or input error, 3 degree cap.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde_json::{json, Value};

use ncfree::jacobi::{fock_moment, moment, BWord, JacobiParams};
use ncfree::joint::{free_convolve_moments, joint_moment, joint_moment_free_recursion, ColoredWord, JointModel};
use ncfree::partitions::{count_by_enumeration, count_family, Family};
use ncfree::scalar::{tcnc_counts_by_cumulants, tcnc_recursion};
use ncfree::suites::{run_suite, tcnc_table, SUITE_NAMES};
use ncfree::NcError;

#[derive(Parser)]
#[command(name = "ncfree", version, about = "Operator-valued Jacobi parameters, moments and partition counts")]
struct Cli {
    /// Human-readable output instead of compact JSON / TSV.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size of a partition family.
    Count {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        n: usize,
        /// Depth bound (blue for two-color families).
        #[arg(long)]
        k: Option<usize>,
        /// Red depth bound.
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, value_enum, default_value = "dp")]
        method: Method,
    },
    /// TSV of |TCNC_2^{k,k}(n)| for k = 2..=kmax and even n ≤ nmax.
    Table {
        #[arg(long)]
        kmax: usize,
        #[arg(long)]
        nmax: usize,
    },
    /// Moment of a word under given Jacobi parameters.
    Moments {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        word: PathBuf,
        /// Also evaluate on the Fock space and report the deviation.
        #[arg(long)]
        oracle: bool,
    },
    /// Joint moment of a colored word in two free variables.
    Joint {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        word: PathBuf,
        /// Also evaluate from freeness alone and report the deviation.
        #[arg(long)]
        oracle: bool,
    },
    /// Moment table of the free convolution of two distributions.
    Convolve {
        #[arg(long)]
        p1: PathBuf,
        #[arg(long)]
        p2: PathBuf,
        #[arg(long)]
        degree: usize,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    #[value(name = "NC12")]
    Nc12,
    #[value(name = "NC2")]
    Nc2,
    #[value(name = "TCNC12")]
    Tcnc12,
    #[value(name = "TCNC2")]
    Tcnc2,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Memoized first-element recursion.
    Dp,
    Enumerate,
    Recursion,
    Cumulant,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Table,
    Counterexample,
    #[value(name = "two_by_two")]
    TwoByTwo,
    #[value(name = "poisson_limit")]
    PoissonLimit,
    All,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn check(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

impl From<NcError> for Failure {
    fn from(e: NcError) -> Self {
        let code = match e {
            NcError::DegreeCap { .. } => 3,
            NcError::Schema(_)
            | NcError::Json(_)
            | NcError::InvalidArgument(_)
            | NcError::AlgebraMismatch { .. }
            | NcError::ColorMismatch { .. } => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let result = run(&cli, &mut out);
    print!("{out}");
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli, out: &mut String) -> CliResult {
    match &cli.command {
        Command::Count { family, n, k, l, method } => cmd_count(*family, *n, *k, *l, *method, out),
        Command::Table { kmax, nmax } => {
            let table = tcnc_table(*kmax, *nmax)?;
            let tsv = table.to_tsv();
            out.push_str(&if cli.pretty { align_tsv(&tsv) } else { tsv });
            Ok(0)
        }
        Command::Moments { params, word, oracle } => {
            let params = JacobiParams::from_json(&read_json(params)?)?;
            let word = BWord::from_json(&read_json(word)?)?;
            let value = moment(&params, &word)?;
            let report = if *oracle {
                let other = fock_moment(&params, &word)?;
                json!({ "value": value.to_json(), "oracle": other.to_json(), "max_deviation": value.distance(&other) })
            } else {
                value.to_json()
            };
            emit_json(&report, cli.pretty, out);
            Ok(0)
        }
        Command::Joint { model, word, oracle } => {
            let model = JointModel::from_json(&read_json(model)?)?;
            let word = ColoredWord::from_json(&read_json(word)?)?;
            let value = joint_moment(&model, &word)?;
            let report = if *oracle {
                let other = joint_moment_free_recursion(&model, &word)?;
                json!({ "value": value.to_json(), "oracle": other.to_json(), "max_deviation": value.distance(&other) })
            } else {
                value.to_json()
            };
            emit_json(&report, cli.pretty, out);
            Ok(0)
        }
        Command::Convolve { p1, p2, degree } => {
            let p1 = JacobiParams::from_json(&read_json(p1)?)?;
            let p2 = JacobiParams::from_json(&read_json(p2)?)?;
            let model = JointModel::new(p1, p2)?;
            let table = free_convolve_moments(&model, *degree)?;
            emit_json(&table.to_json(), cli.pretty, out);
            Ok(0)
        }
        Command::Verify { suite } => {
            let names: Vec<&str> = match suite {
                SuiteArg::Table => vec!["table"],
                SuiteArg::Counterexample => vec!["counterexample"],
                SuiteArg::TwoByTwo => vec!["two_by_two"],
                SuiteArg::PoissonLimit => vec!["poisson_limit"],
                SuiteArg::All => SUITE_NAMES.to_vec(),
            };
            let reports = names.iter().map(|n| run_suite(n)).collect::<Result<Vec<_>, _>>()?;
            let passed = reports.iter().all(|r| r.passed());
            let report = json!({
                "passed": passed,
                "suites": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            });
            emit_json(&report, cli.pretty, out);
            if !passed {
                for r in &reports {
                    for c in r.checks.iter().filter(|c| !c.passed) {
                        eprintln!("FAIL {}: {}", r.suite, c.name);
                    }
                }
            }
            Ok(if passed { 0 } else { 1 })
        }
    }
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn emit_json(v: &Value, pretty: bool, out: &mut String) {
    let text = if pretty { serde_json::to_string_pretty(v) } else { serde_json::to_string(v) };
    out.push_str(&text.expect("values serialize"));
    out.push('\n');
}

fn align_tsv(tsv: &str) -> String {
    let rows: Vec<Vec<&str>> = tsv.lines().map(|l| l.split('\t').collect()).collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().enumerate().map(|(c, s)| format!("{s:>w$}", w = widths[c])).collect();
        let _ = writeln!(out, "{}", cells.join("  "));
    }
    out
}

fn cmd_count(
    family: FamilyArg,
    n: usize,
    k: Option<usize>,
    l: Option<usize>,
    method: Method,
    out: &mut String,
) -> CliResult {
    let two_color = matches!(family, FamilyArg::Tcnc12 | FamilyArg::Tcnc2);
    if !two_color && l.is_some() {
        return Err(Failure::usage("--l applies only to two-color families"));
    }
    if two_color && k.is_some() != l.is_some() {
        return Err(Failure::usage("two-color families take both --k and --l or neither"));
    }
    if k == Some(0) || l == Some(0) {
        return Err(Failure::usage("depth bounds start at 1"));
    }
    let fam = match (family, k, l) {
        (FamilyArg::Nc12, None, _) => Family::Nc12,
        (FamilyArg::Nc12, Some(k), _) => Family::Nc12Depth(k),
        (FamilyArg::Nc2, None, _) => Family::Nc2,
        (FamilyArg::Nc2, Some(k), _) => Family::Nc2Depth(k),
        (FamilyArg::Tcnc12, Some(k), Some(l)) => Family::Tcnc12Depth(k, l),
        (FamilyArg::Tcnc12, _, _) => Family::Tcnc12,
        (FamilyArg::Tcnc2, Some(k), Some(l)) => Family::Tcnc2Depth(k, l),
        (FamilyArg::Tcnc2, _, _) => Family::Tcnc2,
    };
    let is_tcnc2 = matches!(family, FamilyArg::Tcnc2);
    // without bounds, depth n/2 + 1 is never reached
    let (kk, ll) = (k.unwrap_or(n / 2 + 1), l.unwrap_or(n / 2 + 1));
    let recursion_ok = is_tcnc2 && kk == ll && kk >= 2;
    match method {
        Method::Recursion if !recursion_ok => {
            return Err(Failure::usage("--method recursion needs --family TCNC2 with k = l ≥ 2"))
        }
        Method::Cumulant if !is_tcnc2 => return Err(Failure::usage("--method cumulant needs --family TCNC2")),
        _ => {}
    }
    let by_recursion = || -> Result<BigInt, Failure> {
        if n % 2 == 1 {
            return Ok(BigInt::from(0));
        }
        if n == 0 {
            return Ok(BigInt::from(1));
        }
        Ok(tcnc_recursion(kk, n / 2)?[n / 2 - 1].clone())
    };
    let by_cumulant = || -> BigInt {
        if n % 2 == 1 {
            return BigInt::from(0);
        }
        if n == 0 {
            return BigInt::from(1);
        }
        tcnc_counts_by_cumulants(kk, ll, n / 2)[n / 2 - 1].clone()
    };
    let values: Vec<(&str, BigInt)> = match method {
        Method::Dp => vec![("dp", count_family(fam, n).into())],
        Method::Enumerate => vec![("enumerate", count_by_enumeration(fam, n).into())],
        Method::Recursion => vec![("recursion", by_recursion()?)],
        Method::Cumulant => vec![("cumulant", by_cumulant())],
        Method::All => {
            let mut v = vec![("enumerate", BigInt::from(count_by_enumeration(fam, n)))];
            if recursion_ok {
                v.push(("recursion", by_recursion()?));
            }
            if is_tcnc2 {
                v.push(("cumulant", by_cumulant()));
            }
            if v.len() == 1 {
                v.push(("dp", count_family(fam, n).into()));
            }
            v
        }
    };
    for (name, value) in &values {
        if method == Method::All {
            let _ = writeln!(out, "{value}");
            eprintln!("{name}: {value}");
        } else {
            let _ = writeln!(out, "{value}");
        }
    }
    if values.iter().any(|(_, v)| *v != values[0].1) {
        return Err(Failure::check("methods disagree"));
    }
    Ok(0)
}

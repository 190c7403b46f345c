//! Named verification suites shared by the command line and the test
//! harness. Each suite returns a JSON-serializable report of its checks.

use num_bigint::{BigInt, BigUint};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::algebra::{add_maps, AlgElement, AlgebraDescriptor, LinMapRep};
use crate::jacobi::{make_named, poisson_limit_check, NamedFamily};
use crate::joint::{free_convolve_moments, two_by_two_model_check, verify_jacobi_consistency, ConsistencyReport, JointModel};
use crate::partitions::{count_by_enumeration, Family};
use crate::scalar::{tcnc_counts_by_cumulants, tcnc_recursion};
use crate::{NcError, Result};

/// Reference values of `|TCNC_2^{k,k}(n)|`, `n = 2, 4, …, 12`, for
/// `k = 2..=6` followed by the stable row.
pub const TCNC_REFERENCE: [[u64; 6]; 6] = [
    [2, 6, 20, 70, 252, 924],
    [2, 8, 38, 196, 1062, 5948],
    [2, 8, 40, 222, 1308, 8014],
    [2, 8, 40, 224, 1342, 8404],
    [2, 8, 40, 224, 1344, 8446],
    [2, 8, 40, 224, 1344, 8448],
];

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: Value) -> Self {
        Check { name: name.into(), passed, detail }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.suite,
            "passed": self.passed(),
            "total": self.checks.len(),
            "passing": self.checks.iter().filter(|c| c.passed).count(),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "passed": c.passed,
                "detail": c.detail,
            })).collect::<Vec<_>>(),
        })
    }
}

pub const SUITE_NAMES: [&str; 4] = ["table", "counterexample", "two_by_two", "poisson_limit"];

pub fn run_suite(name: &str) -> Result<SuiteReport> {
    match name {
        "table" => table_suite(),
        "counterexample" => counterexample_suite(),
        "two_by_two" => two_by_two_suite(),
        "poisson_limit" => poisson_limit_suite(),
        other => Err(NcError::InvalidArgument(format!("unknown suite `{other}`"))),
    }
}

// ---------------------------------------------------------------------------
// Table

/// Rows `k = 2..=kmax` of `|TCNC_2^{k,k}(n)|` for even `n ≤ nmax`, plus the
/// row every larger `k` shares.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TcncTable {
    pub nmax: usize,
    pub rows: Vec<(usize, Vec<BigInt>)>,
    /// `(K, row)`: the row for all `k > K`.
    pub stable: (usize, Vec<BigInt>),
}

impl TcncTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("k");
        for n in (2..=self.nmax).step_by(2) {
            out.push_str(&format!("\tn={n}"));
        }
        out.push('\n');
        let line = |label: String, row: &[BigInt]| {
            let mut s = label;
            for v in row {
                s.push('\t');
                s.push_str(&v.to_string());
            }
            s.push('\n');
            s
        };
        for (k, row) in &self.rows {
            out.push_str(&line(k.to_string(), row));
        }
        out.push_str(&line(format!("k>{}", self.stable.0), &self.stable.1));
        out
    }
}

/// Rows from the even-moment recursion; the stable row is found by
/// extending `k` until two consecutive rows coincide.
pub fn tcnc_table(kmax: usize, nmax: usize) -> Result<TcncTable> {
    if kmax < 2 || nmax < 2 || nmax % 2 == 1 {
        return Err(NcError::InvalidArgument("need kmax ≥ 2 and an even nmax ≥ 2".into()));
    }
    let half = nmax / 2;
    let rows: Vec<(usize, Vec<BigInt>)> =
        (2..=kmax).into_par_iter().map(|k| Ok((k, tcnc_recursion(k, half)?))).collect::<Result<_>>()?;
    // depth never exceeds n/2, so the row is constant from k = n/2 + 1 on
    let mut k = 2;
    let mut prev = rows[0].1.clone();
    loop {
        let next = if k < kmax { rows[k - 1].1.clone() } else { tcnc_recursion(k + 1, half)? };
        if next == prev {
            return Ok(TcncTable { nmax, rows, stable: (k - 1, next) });
        }
        prev = next;
        k += 1;
    }
}

/// One table entry by enumeration, recursion and free cumulants.
#[derive(Clone, Debug)]
pub struct TableEntry {
    pub k: Option<usize>,
    pub n: usize,
    pub enumeration: u64,
    pub recursion: BigInt,
    pub cumulant: BigInt,
    pub reference: u64,
}

impl TableEntry {
    pub fn agrees(&self) -> bool {
        let r = BigInt::from(self.reference);
        BigInt::from(self.enumeration) == r && self.recursion == r && self.cumulant == r
    }
}

/// All 36 reference entries computed three ways. The stable row uses
/// `k = 7`, where no depth bound applies for `n ≤ 12`.
pub fn table_entries() -> Result<Vec<TableEntry>> {
    let ks: Vec<usize> = (2..=7).collect();
    let per_k: Vec<Vec<TableEntry>> = ks
        .par_iter()
        .enumerate()
        .map(|(row, &k)| {
            let rec = tcnc_recursion(k, 6)?;
            let cum = tcnc_counts_by_cumulants(k, k, 6);
            Ok((0..6)
                .into_par_iter()
                .map(|i| {
                    let n = 2 * (i + 1);
                    let family = if k == 7 { Family::Tcnc2 } else { Family::Tcnc2Depth(k, k) };
                    TableEntry {
                        k: (k < 7).then_some(k),
                        n,
                        enumeration: count_by_enumeration(family, n),
                        recursion: rec[i].clone(),
                        cumulant: cum[i].clone(),
                        reference: TCNC_REFERENCE[row][i],
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_k.into_iter().flatten().collect())
}

fn table_suite() -> Result<SuiteReport> {
    let entries = table_entries()?;
    let mut checks: Vec<Check> = entries
        .iter()
        .map(|e| {
            let label = e.k.map_or("k>6".to_string(), |k| format!("k={k}"));
            Check::new(
                format!("{label} n={}", e.n),
                e.agrees(),
                json!({
                    "enumeration": e.enumeration,
                    "recursion": e.recursion.to_string(),
                    "cumulant": e.cumulant.to_string(),
                    "expected": e.reference,
                }),
            )
        })
        .collect();
    let table = tcnc_table(6, 12)?;
    checks.push(Check::new(
        "stabilizes after k=6",
        table.stable.0 == 6 && table.stable.1 == TCNC_REFERENCE[5].iter().map(|&v| BigInt::from(v)).collect::<Vec<_>>(),
        json!({ "K": table.stable.0 }),
    ));
    let central: Vec<BigUint> = (1..=6).map(central_binomial).collect();
    checks.push(Check::new(
        "k=2 row is C(n, n/2)",
        central.iter().zip(TCNC_REFERENCE[0]).all(|(c, r)| *c == BigUint::from(r)),
        json!(central.iter().map(|c| c.to_string()).collect::<Vec<_>>()),
    ));
    Ok(SuiteReport { suite: "table".into(), checks })
}

/// `C(2m, m)`.
pub fn central_binomial(m: usize) -> BigUint {
    (0..m).fold(BigUint::from(1u32), |acc, i| acc * BigUint::from(2 * m - i) / BigUint::from(i + 1))
}

// ---------------------------------------------------------------------------
// Degree-4 counterexample

fn d2_bernoulli(alpha: LinMapRep) -> Result<crate::jacobi::JacobiParams> {
    let zero = AlgElement::zero(AlgebraDescriptor::diagonal(2));
    make_named(&NamedFamily::Bernoulli { lambda1: zero.clone(), lambda2: zero, alpha })
}

fn counterexample_suite() -> Result<SuiteReport> {
    let d2 = AlgebraDescriptor::diagonal(2);
    let model = JointModel::new(d2_bernoulli(LinMapRep::flip())?, d2_bernoulli(LinMapRep::identity(d2))?)?;
    let table = free_convolve_moments(&model, 4)?;
    let report = verify_jacobi_consistency(&table, d2)?;
    let mut checks = vec![Check::new(
        "bernoulli(flip) + bernoulli(id) has no Jacobi parameters",
        !report.is_consistent(),
        report.to_json(),
    )];

    let semi = |alpha: LinMapRep| make_named(&NamedFamily::Semicircular { lambda: None, alpha });
    let model = JointModel::new(semi(LinMapRep::flip())?, semi(LinMapRep::identity(d2))?)?;
    let table = free_convolve_moments(&model, 4)?;
    let report = verify_jacobi_consistency(&table, d2)?;
    let expected = add_maps(&LinMapRep::flip(), &LinMapRep::identity(d2))?;
    let matches = match &report {
        ConsistencyReport::Consistent { params, .. } => d2.basis().iter().all(|e| {
            let want = expected.apply(e);
            params.alpha(1).apply(e).approx_eq(&want, 1e-9, 1e-12) && params.alpha(2).apply(e).approx_eq(&want, 1e-9, 1e-12)
        }),
        ConsistencyReport::Witness(_) => false,
    };
    checks.push(Check::new("semicircular + semicircular is consistent", matches, report.to_json()));
    Ok(SuiteReport { suite: "counterexample".into(), checks })
}

// ---------------------------------------------------------------------------
// 2×2 model

/// Sample points `(λ, γ)` with `λ, γ > 0` and `λγ ≥ 5`; the first three
/// sit on the diagonal.
pub const TWO_BY_TWO_POINTS: [(f64, f64); 10] = [
    (3.0, 3.0),
    (2.5, 2.5),
    (5.0, 5.0),
    (3.0, 2.0),
    (2.0, 4.0),
    (10.0, 0.6),
    (1.5, 4.0),
    (4.0, 7.5),
    (0.5, 12.0),
    (6.0, 1.25),
];

pub const TWO_BY_TWO_TOL: f64 = 1e-8;

fn two_by_two_suite() -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for &(l, g) in &TWO_BY_TWO_POINTS {
        let r = two_by_two_model_check(l, g)?;
        let mut ok = r.residual < TWO_BY_TWO_TOL && r.inverse_residual < TWO_BY_TWO_TOL;
        let mut detail = r.to_json();
        if l == g {
            let z = (l * l - 4.0).sqrt();
            let dev = (r.f_sum_series[0].re - z).abs().max((r.f_sum_series[1].re - z).abs());
            ok &= dev < TWO_BY_TWO_TOL;
            detail["sqrt_z2_minus_4_deviation"] = json!(dev);
        }
        checks.push(Check::new(format!("lambda={l} gamma={g}"), ok, detail));
    }
    Ok(SuiteReport { suite: "two_by_two".into(), checks })
}

// ---------------------------------------------------------------------------
// Poisson limit

pub const POISSON_NS: [usize; 3] = [10, 100, 1000];

/// Degree-4 errors at each `N` of [`POISSON_NS`] for `λ_1 = λ = α = 1`.
pub fn poisson_errors() -> Result<Vec<f64>> {
    let s = AlgebraDescriptor::scalar();
    let one = AlgElement::one(s);
    POISSON_NS
        .par_iter()
        .map(|&n| Ok(poisson_limit_check(n, &one, &one, &LinMapRep::identity(s), 4)?.error_at(4)))
        .collect()
}

fn poisson_limit_suite() -> Result<SuiteReport> {
    let errors = poisson_errors()?;
    let mut checks = Vec::new();
    for (w, pair) in errors.windows(2).enumerate() {
        let ratio = pair[0] / pair[1];
        checks.push(Check::new(
            format!("N={} -> N={}", POISSON_NS[w], POISSON_NS[w + 1]),
            (5.0..=20.0).contains(&ratio),
            json!({ "errors": [pair[0], pair[1]], "ratio": ratio }),
        ));
    }
    Ok(SuiteReport { suite: "poisson_limit".into(), checks })
}

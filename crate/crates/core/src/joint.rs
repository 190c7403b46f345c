//! Joint moments of two free Jacobi–Szegő variables: the two-color partition
//! sum, an independent oracle built from freeness alone, free convolution at
//! the level of moments, and the degree-4 consistency test for Jacobi
//! parameters of a convolution.

use std::collections::HashMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::algebra::{AlgElement, AlgebraDescriptor, LinMapRep, Mat, C64};
use crate::config::{check_degree, degree_cap};
use crate::jacobi::{field, free_binomial_word_moment, moment, BWord, JacobiParams, MomentTable};
use crate::partitions::{enumerate_compatible, Block, Color, ColoredPartition};
use crate::{NcError, Result};

/// `b_0 X_{ε_1} b_1 X_{ε_2} … X_{ε_d} b_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColoredWord {
    algebra: AlgebraDescriptor,
    coeffs: Vec<AlgElement>,
    colors: Vec<Color>,
}

impl ColoredWord {
    /// `coeffs` holds either the `d - 1` inner coefficients (outer ones are
    /// the unit) or all `d + 1` coefficients.
    pub fn new(algebra: AlgebraDescriptor, coeffs: Vec<AlgElement>, colors: Vec<Color>) -> Result<Self> {
        for c in &coeffs {
            algebra.expect(&c.algebra())?;
        }
        let d = colors.len();
        let coeffs = if coeffs.len() == d + 1 {
            coeffs
        } else if d >= 1 && coeffs.len() == d - 1 {
            let mut full = vec![AlgElement::one(algebra)];
            full.extend(coeffs);
            full.push(AlgElement::one(algebra));
            full
        } else {
            return Err(NcError::InvalidArgument(format!(
                "{} coefficients do not fit {d} symbols (need {} or {})",
                coeffs.len(),
                d.saturating_sub(1),
                d + 1
            )));
        };
        Ok(ColoredWord { algebra, coeffs, colors })
    }

    /// Colors the symbols of an ordinary word.
    pub fn from_word(w: &BWord, colors: Vec<Color>) -> Result<Self> {
        if colors.len() != w.degree() {
            return Err(NcError::InvalidArgument(format!(
                "{} colors for a degree-{} word",
                colors.len(),
                w.degree()
            )));
        }
        ColoredWord::new(w.algebra(), w.coeffs().to_vec(), colors)
    }

    pub fn algebra(&self) -> AlgebraDescriptor {
        self.algebra
    }

    /// All coefficients `b_0, …, b_d`.
    pub fn coeffs(&self) -> &[AlgElement] {
        &self.coeffs
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn degree(&self) -> usize {
        self.colors.len()
    }

    pub fn flipped(&self) -> ColoredWord {
        ColoredWord { colors: self.colors.iter().map(|c| c.flip()).collect(), ..self.clone() }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "algebra": self.algebra,
            "colors": self.colors.iter().map(|c| c.index()).collect::<Vec<_>>(),
            "coeffs": self.coeffs.iter().map(AlgElement::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let algebra: AlgebraDescriptor = serde_json::from_value(field(v, "algebra")?.clone())
            .map_err(|e| NcError::Schema(format!("algebra: {e}")))?;
        let colors = field(v, "colors")?
            .as_array()
            .ok_or_else(|| NcError::Schema("`colors` must be an array".into()))?
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.as_u64()
                    .and_then(|x| u8::try_from(x).ok())
                    .ok_or_else(|| NcError::Schema(format!("colors[{i}] must be 1 or 2")))
                    .and_then(|x| Color::from_index(x).map_err(|_| NcError::Schema(format!("colors[{i}] must be 1 or 2"))))
            })
            .collect::<Result<Vec<_>>>()?;
        let coeffs = field(v, "coeffs")?
            .as_array()
            .ok_or_else(|| NcError::Schema("`coeffs` must be an array".into()))?
            .iter()
            .enumerate()
            .map(|(i, x)| AlgElement::from_json(x).map_err(|e| NcError::Schema(format!("coeffs[{i}]: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        ColoredWord::new(algebra, coeffs, colors).map_err(|e| NcError::Schema(e.to_string()))
    }
}

/// Two free variables: blue with `params1`, red with `params2`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointModel {
    pub params1: JacobiParams,
    pub params2: JacobiParams,
}

impl JointModel {
    pub fn new(params1: JacobiParams, params2: JacobiParams) -> Result<Self> {
        params1.algebra().expect(&params2.algebra())?;
        Ok(JointModel { params1, params2 })
    }

    pub fn algebra(&self) -> AlgebraDescriptor {
        self.params1.algebra()
    }

    pub fn params(&self, c: Color) -> &JacobiParams {
        match c {
            Color::Blue => &self.params1,
            Color::Red => &self.params2,
        }
    }

    /// Marginals exchanged.
    pub fn swapped(&self) -> JointModel {
        JointModel { params1: self.params2.clone(), params2: self.params1.clone() }
    }

    pub fn to_json(&self) -> Value {
        json!({ "params1": self.params1.to_json(), "params2": self.params2.to_json() })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let p1 = JacobiParams::from_json(field(v, "params1")?).map_err(|e| NcError::Schema(format!("params1: {e}")))?;
        let p2 = JacobiParams::from_json(field(v, "params2")?).map_err(|e| NcError::Schema(format!("params2: {e}")))?;
        JointModel::new(p1, p2).map_err(|e| NcError::Schema(e.to_string()))
    }

    fn check(&self, w: &ColoredWord) -> Result<()> {
        self.algebra().expect(&w.algebra)?;
        check_degree(w.degree(), degree_cap())
    }
}

/// Depth pair `(blue, red)` after entering a pair of color `c`.
fn enter(c: Color, depths: (usize, usize)) -> (usize, usize) {
    match c {
        Color::Blue => (depths.0 + 1, 1),
        Color::Red => (1, depths.1 + 1),
    }
}

fn depth_of(c: Color, depths: (usize, usize)) -> usize {
    match c {
        Color::Blue => depths.0,
        Color::Red => depths.1,
    }
}

/// `E_π(w)`: blocks draw parameters from their color's marginal, indexed by
/// relative depth.
pub fn e_pi(model: &JointModel, w: &ColoredWord, p: &ColoredPartition) -> Result<AlgElement> {
    model.algebra().expect(&w.algebra)?;
    if p.n() != w.degree() {
        return Err(NcError::InvalidArgument(format!(
            "partition of {} points applied to a degree-{} word",
            p.n(),
            w.degree()
        )));
    }
    let mut partner = vec![0usize; p.n() + 1];
    for (block, color) in p.iter() {
        let (i, j) = match block {
            Block::Singleton(i) => (i, i),
            Block::Pair(i, j) => (i, j),
        };
        for pos in [i, j] {
            if w.colors[pos - 1] != color {
                return Err(NcError::ColorMismatch { position: pos });
            }
        }
        partner[i] = j;
        partner[j] = i;
    }
    Ok(e_pi_rec(model, w, &partner, 1, w.degree(), (1, 1)))
}

fn e_pi_rec(
    model: &JointModel,
    w: &ColoredWord,
    partner: &[usize],
    l: usize,
    r: usize,
    depths: (usize, usize),
) -> AlgElement {
    let mut acc = w.coeffs[l - 1].clone();
    let mut pos = l;
    while pos <= r {
        let j = partner[pos];
        let c = w.colors[pos - 1];
        let params = model.params(c);
        let d = depth_of(c, depths);
        if j == pos {
            acc = &(&acc * params.lambda(d)) * &w.coeffs[pos];
        } else {
            let inner = e_pi_rec(model, w, partner, pos + 1, j - 1, enter(c, depths));
            acc = &(&acc * &params.alpha(d).apply(&inner)) * &w.coeffs[j];
        }
        pos = j + 1;
    }
    acc
}

/// Two-color partition sum over the colorings compatible with the word,
/// evaluated by memoized first-element recursion. Pairs whose parameter map
/// vanishes are skipped, which restricts the sum to the depth-bounded family
/// for truncated marginals.
pub fn joint_moment(model: &JointModel, w: &ColoredWord) -> Result<AlgElement> {
    model.check(w)?;
    let mut memo = HashMap::new();
    Ok(joint_interval(model, w, 1, w.degree(), (1, 1), &mut memo))
}

type JointMemo = HashMap<(usize, usize, usize, usize), AlgElement>;

fn joint_interval(
    model: &JointModel,
    w: &ColoredWord,
    l: usize,
    r: usize,
    depths: (usize, usize),
    memo: &mut JointMemo,
) -> AlgElement {
    if l > r {
        return w.coeffs[l - 1].clone();
    }
    let key = (l, r, depths.0, depths.1);
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let c = w.colors[l - 1];
    let params = model.params(c);
    let d = depth_of(c, depths);
    let head = &w.coeffs[l - 1] * params.lambda(d);
    let mut acc = &head * &joint_interval(model, w, l + 1, r, depths, memo);
    let alpha = params.alpha(d);
    if !alpha.is_zero() {
        for j in (l + 1)..=r {
            if w.colors[j - 1] != c {
                continue;
            }
            let inner = joint_interval(model, w, l + 1, j - 1, enter(c, depths), memo);
            let rest = joint_interval(model, w, j + 1, r, depths, memo);
            acc = &acc + &(&(&w.coeffs[l - 1] * &alpha.apply(&inner)) * &rest);
        }
    }
    memo.insert(key, acc.clone());
    acc
}

/// `joint_moment` as an explicit sum of [`e_pi`]; with `restrict` and two
/// truncated marginals only the depth-bounded partitions are visited.
pub fn joint_moment_by_partitions(model: &JointModel, w: &ColoredWord, restrict: bool) -> Result<AlgElement> {
    model.check(w)?;
    let bounds = if restrict {
        match (model.params1.truncation_depth(), model.params2.truncation_depth()) {
            (Some(k), Some(l)) => Some((k, l)),
            _ => None,
        }
    } else {
        None
    };
    let mut acc = AlgElement::zero(model.algebra());
    for p in enumerate_compatible(&w.colors, bounds) {
        acc = &acc + &e_pi(model, w, &p)?;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Freeness oracle

/// A maximal monochromatic stretch `X b_1 X … X b_k`, stored as the
/// coefficient list `u_0, b_1, …, b_k` of a marginal word.
#[derive(Clone, Debug)]
struct Run {
    color: Color,
    coeffs: Vec<AlgElement>,
}

/// Same value as [`joint_moment`], computed only from the marginal moments
/// and the vanishing of alternating centered products:
/// `E[a_1 ⋯ a_m] = Σ_{S ≠ ∅} (-1)^{|S|+1} E[a_1 ⋯ E[a_i]_{i ∈ S} ⋯ a_m]`.
pub fn joint_moment_free_recursion(model: &JointModel, w: &ColoredWord) -> Result<AlgElement> {
    model.check(w)?;
    let d = w.degree();
    if d == 0 {
        return Ok(w.coeffs[0].clone());
    }
    let one = AlgElement::one(model.algebra());
    let mut runs: Vec<Run> = Vec::new();
    for pos in 1..=d {
        let c = w.colors[pos - 1];
        match runs.last_mut() {
            Some(run) if run.color == c => run.coeffs.push(w.coeffs[pos].clone()),
            _ => runs.push(Run { color: c, coeffs: vec![one.clone(), w.coeffs[pos].clone()] }),
        }
    }
    let mut memo = HashMap::new();
    let value = free_recursion(model, &runs, &mut memo)?;
    Ok(&w.coeffs[0] * &value)
}

fn run_key(runs: &[Run]) -> Vec<u64> {
    let mut key = Vec::new();
    for run in runs {
        key.push(run.color.index() as u64);
        key.push(run.coeffs.len() as u64);
        for c in &run.coeffs {
            for z in c.entries().iter() {
                key.push(z.re.to_bits());
                key.push(z.im.to_bits());
            }
        }
    }
    key
}

fn free_recursion(model: &JointModel, runs: &[Run], memo: &mut HashMap<Vec<u64>, AlgElement>) -> Result<AlgElement> {
    if runs.len() == 1 {
        let run = &runs[0];
        let word = BWord::new(model.algebra(), run.coeffs.clone())?;
        return moment(model.params(run.color), &word);
    }
    let key = run_key(runs);
    if let Some(v) = memo.get(&key) {
        return Ok(v.clone());
    }
    let means: Vec<AlgElement> = runs
        .iter()
        .map(|run| moment(model.params(run.color), &BWord::new(model.algebra(), run.coeffs.clone())?))
        .collect::<Result<_>>()?;
    let m = runs.len();
    let mut acc = AlgElement::zero(model.algebra());
    for mask in 1u32..(1 << m) {
        let mut prefix: Option<AlgElement> = None;
        let mut reduced: Vec<Run> = Vec::new();
        for (i, run) in runs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                match reduced.last_mut() {
                    Some(last) => {
                        let tail = last.coeffs.last_mut().expect("runs are nonempty");
                        *tail = &*tail * &means[i];
                    }
                    None => {
                        prefix = Some(match prefix {
                            Some(p) => &p * &means[i],
                            None => means[i].clone(),
                        })
                    }
                }
            } else {
                match reduced.last_mut() {
                    Some(last) if last.color == run.color => {
                        let tail = last.coeffs.last_mut().expect("runs are nonempty");
                        *tail = &*tail * &run.coeffs[0];
                        last.coeffs.extend(run.coeffs[1..].iter().cloned());
                    }
                    _ => reduced.push(run.clone()),
                }
            }
        }
        let mut term = if reduced.is_empty() {
            AlgElement::one(model.algebra())
        } else {
            free_recursion(model, &reduced, memo)?
        };
        if let Some(p) = prefix {
            term = &p * &term;
        }
        if mask.count_ones() % 2 == 1 {
            acc = &acc + &term;
        } else {
            acc = &acc - &term;
        }
    }
    memo.insert(key, acc.clone());
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Free convolution

/// All `2^n` colorings of `n` symbols, blue-first lexicographic.
pub fn all_colorings(n: usize) -> Vec<Vec<Color>> {
    (0..1u64 << n)
        .map(|mask| {
            (0..n).map(|i| if mask >> (n - 1 - i) & 1 == 1 { Color::Red } else { Color::Blue }).collect()
        })
        .collect()
}

/// `(μ_1 ⊞ μ_2)[w] = Σ_ε E[b_0 X_{ε_1} b_1 … X_{ε_n} b_n]`.
pub fn free_convolution_moment(model: &JointModel, w: &BWord) -> Result<AlgElement> {
    model.algebra().expect(&w.algebra())?;
    check_degree(w.degree(), degree_cap())?;
    let terms: Vec<Result<AlgElement>> = all_colorings(w.degree())
        .into_par_iter()
        .map(|eps| joint_moment(model, &ColoredWord::from_word(w, eps)?))
        .collect();
    let mut acc = AlgElement::zero(model.algebra());
    for t in terms {
        acc = &acc + &t?;
    }
    Ok(acc)
}

/// Moment table of `μ_1 ⊞ μ_2` through `degree`.
pub fn free_convolve_moments(model: &JointModel, degree: usize) -> Result<MomentTable> {
    check_degree(degree, degree_cap())?;
    MomentTable::build(model.algebra(), degree, |w| free_convolution_moment(model, w))
}

// ---------------------------------------------------------------------------
// Degree-4 consistency of Jacobi parameters

/// One scalar equation `Σ coefficient·unknown + known = moment`.
#[derive(Clone, Debug)]
pub struct LinearConstraint {
    /// Matrix entry `(row, col)`, 0-based.
    pub entry: (usize, usize),
    /// `(p, q, c)`: coefficient `c` of the unknown `(β_2(E_q))` at coordinate `p`.
    pub coefficients: Vec<(usize, usize, C64)>,
    pub known: C64,
    pub moment: C64,
}

impl LinearConstraint {
    pub fn describe(&self, basis_labels: &[String]) -> String {
        let mut terms: Vec<String> = self
            .coefficients
            .iter()
            .map(|(p, q, c)| format!("{}·β2({})[{}]", fmt_c(*c), basis_labels[*q], basis_labels[*p]))
            .collect();
        terms.push(fmt_c(self.known));
        format!("{} = {}", terms.join(" + "), fmt_c(self.moment))
    }

    fn to_json(&self, basis_labels: &[String]) -> Value {
        json!({
            "entry": [self.entry.0 + 1, self.entry.1 + 1],
            "coefficients": self.coefficients.iter().map(|(p, q, c)| json!({
                "unknown": format!("β2({})[{}]", basis_labels[*q], basis_labels[*p]),
                "value": [c.re, c.im],
            })).collect::<Vec<_>>(),
            "known": [self.known.re, self.known.im],
            "moment": [self.moment.re, self.moment.im],
            "equation": self.describe(basis_labels),
        })
    }
}

fn fmt_c(c: C64) -> String {
    let clean = |x: f64| if x.abs() < 5e-13 { 0.0 } else { x };
    let (re, im) = (clean(c.re), clean(c.im));
    if im == 0.0 {
        format!("{re}")
    } else {
        format!("({re}{:+}i)", im)
    }
}

/// Two constraints on the same unknowns that no value of `β_2` satisfies.
#[derive(Clone, Debug)]
pub struct InfeasibilityWitness {
    /// Basis indices of `(b_1, b_2, b_3)`.
    pub triple: (usize, usize, usize),
    pub basis_labels: Vec<String>,
    pub constraints: [LinearConstraint; 2],
    /// `c_2 = ratio · c_1` for the coefficient rows.
    pub ratio: C64,
}

impl InfeasibilityWitness {
    pub fn to_json(&self) -> Value {
        let l = &self.basis_labels;
        json!({
            "coefficients": {
                "b1": l[self.triple.0],
                "b2": l[self.triple.1],
                "b3": l[self.triple.2],
            },
            "constraints": self.constraints.iter().map(|c| c.to_json(l)).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug)]
pub enum ConsistencyReport {
    /// `J(0, 0, …; β_1, β_2, β_2, …)` reproducing the table through degree 4.
    Consistent { params: JacobiParams, residual: f64 },
    Witness(InfeasibilityWitness),
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        matches!(self, ConsistencyReport::Consistent { .. })
    }

    pub fn to_json(&self) -> Value {
        match self {
            ConsistencyReport::Consistent { params, residual } => {
                json!({ "params": params.to_json(), "residual": residual })
            }
            ConsistencyReport::Witness(w) => json!({ "witness": w.to_json() }),
        }
    }
}

fn basis_labels(algebra: AlgebraDescriptor) -> Vec<String> {
    algebra.coordinates().into_iter().map(|(i, j)| format!("e{}{}", i + 1, j + 1)).collect()
}

/// Dense form of the map determined by its values on the algebra basis
/// (zero on the complement for the diagonal algebra).
fn map_from_basis_images(algebra: AlgebraDescriptor, images: &[AlgElement]) -> Result<LinMapRep> {
    let d = algebra.dim;
    let mut dense = Mat::zeros(d * d, d * d);
    for ((i, j), img) in algebra.coordinates().into_iter().zip(images) {
        let col = j * d + i;
        for (k, z) in img.entries().iter().enumerate() {
            dense[(k, col)] = *z;
        }
    }
    LinMapRep::dense(algebra, dense)
}

/// Coefficients, known part, moment, basis triple, matrix entry.
type EquationRow = (Vec<C64>, C64, C64, (usize, usize, usize), (usize, usize));

/// Decides whether a symmetric moment table is reproduced through degree 4
/// by Jacobi parameters `(0, β_1), (0, β_2)`, with `β_1(b) = μ[X b X]`;
/// the unknown `β_2` enters the degree-4 moments linearly through
/// `μ[X b_1 X b_2 X b_3 X] = β_1(b_1 β_2(b_2) b_3) + β_1(b_1) b_2 β_1(b_3)`.
pub fn verify_jacobi_consistency(moments: &MomentTable, algebra: AlgebraDescriptor) -> Result<ConsistencyReport> {
    algebra.expect(&moments.algebra())?;
    if moments.max_degree() < 4 {
        return Err(NcError::InvalidArgument("the consistency test needs moments through degree 4".into()));
    }
    let scale = moments.entries().map(|(_, v)| v.max_abs()).fold(1.0, f64::max);
    if !moments.is_symmetric(1e-9 * scale) {
        return Err(NcError::NonSymmetric("odd moments do not vanish".into()));
    }
    let basis = algebra.basis();
    let labels = basis_labels(algebra);
    let coords = algebra.coordinates();
    let l = basis.len();
    let beta1_images: Vec<AlgElement> = (0..l)
        .map(|q| moments.get(2, &[q]).cloned().expect("table covers degree 2"))
        .collect();
    let beta1 = map_from_basis_images(algebra, &beta1_images)?;

    // unknown (p, q) ↦ column p + l q
    let mut rows: Vec<EquationRow> = Vec::new();
    for i in 0..l {
        for q in 0..l {
            for k in 0..l {
                let known = &(&beta1_images[i] * &basis[q]) * &beta1_images[k];
                let mu4 = moments.get(4, &[i, q, k]).expect("table covers degree 4");
                let images: Vec<AlgElement> =
                    (0..l).map(|p| beta1.apply(&(&(&basis[i] * &basis[p]) * &basis[k]))).collect();
                for &(r, s) in &coords {
                    let mut coeff = vec![C64::new(0.0, 0.0); l * l];
                    for (p, img) in images.iter().enumerate() {
                        coeff[p + l * q] = img.entries()[(r, s)];
                    }
                    rows.push((coeff, known.entries()[(r, s)], mu4.entries()[(r, s)], (i, q, k), (r, s)));
                }
            }
        }
    }
    let n_rows = rows.len();
    let a = Mat::from_fn(n_rows, l * l, |r, c| rows[r].0[c]);
    let y = DVector::from_iterator(n_rows, rows.iter().map(|row| row.2 - row.1));
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&y, 1e-10).map_err(|e| NcError::InvalidArgument(format!("least squares failed: {e}")))?;
    let residual = (&a * &x - &y).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-8 * scale;
    if residual <= tol {
        let images: Vec<AlgElement> = (0..l)
            .map(|q| {
                let mut m = Mat::zeros(algebra.dim, algebra.dim);
                for (p, &(r, s)) in coords.iter().enumerate() {
                    m[(r, s)] = x[p + l * q];
                }
                AlgElement::new(algebra, m)
            })
            .collect::<Result<_>>()?;
        let beta2 = map_from_basis_images(algebra, &images)?;
        let zero = AlgElement::zero(algebra);
        let params = JacobiParams::auto(algebra, vec![zero.clone()], vec![beta1], zero, beta2)?;
        return Ok(ConsistencyReport::Consistent { params, residual });
    }

    let constraint = |idx: usize| -> LinearConstraint {
        let (coeff, known, mu, _, entry) = &rows[idx];
        LinearConstraint {
            entry: *entry,
            coefficients: coeff
                .iter()
                .enumerate()
                .filter(|(_, c)| c.norm() > 1e-12)
                .map(|(col, c)| (col % l, col / l, *c))
                .collect(),
            known: *known,
            moment: *mu,
        }
    };
    // look for a pair of rows with proportional coefficients and incompatible
    // right-hand sides, preferring pairs from the same coefficient triple
    let mut best: Option<(usize, usize, C64)> = None;
    'outer: for same_triple in [true, false] {
        for i in 0..n_rows {
            for j in (i + 1)..n_rows {
                if (rows[i].3 == rows[j].3) != same_triple {
                    continue;
                }
                if let Some(ratio) = proportional(&rows[i].0, &rows[j].0, 1e-10) {
                    let gap = (rows[j].2 - rows[j].1) - ratio * (rows[i].2 - rows[i].1);
                    if gap.norm() > tol {
                        best = Some((i, j, ratio));
                        break 'outer;
                    }
                }
            }
        }
    }
    let (i, j, ratio) = best.ok_or_else(|| {
        NcError::InvalidArgument(format!(
            "degree-4 system is inconsistent (residual {residual:e}) but no two-row witness exists"
        ))
    })?;
    Ok(ConsistencyReport::Witness(InfeasibilityWitness {
        triple: rows[i].3,
        basis_labels: labels,
        constraints: [constraint(i), constraint(j)],
        ratio,
    }))
}

/// `Some(c)` with `b = c·a` when `a` is nonzero.
fn proportional(a: &[C64], b: &[C64], tol: f64) -> Option<C64> {
    let (pivot, amax) =
        a.iter().enumerate().map(|(i, z)| (i, z.norm())).fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if amax <= tol {
        return None;
    }
    let c = b[pivot] / a[pivot];
    a.iter().zip(b).all(|(x, y)| (y - c * x).norm() <= tol * (1.0 + amax)).then_some(c)
}

// ---------------------------------------------------------------------------
// The 2×2 model: X = e_12 + e_21 over the diagonal of M_2

#[derive(Clone, Debug)]
pub struct TwoByTwoReport {
    pub lambda: f64,
    pub gamma: f64,
    pub g_mu: [C64; 2],
    pub f_mu: [C64; 2],
    pub f_mu_inverse: [C64; 2],
    /// `F_μ(F_μ^{⟨-1⟩}(b)) - b`.
    pub inverse_residual: f64,
    pub f_sum_closed: [C64; 2],
    pub f_sum_series: [C64; 2],
    pub terms: usize,
    pub residual: f64,
}

impl TwoByTwoReport {
    pub fn to_json(&self) -> Value {
        let pair = |v: &[C64; 2]| json!([[v[0].re, v[0].im], [v[1].re, v[1].im]]);
        json!({
            "lambda": self.lambda,
            "gamma": self.gamma,
            "g_mu": pair(&self.g_mu),
            "f_mu": pair(&self.f_mu),
            "f_mu_inverse": pair(&self.f_mu_inverse),
            "inverse_residual": self.inverse_residual,
            "f_sum_closed": pair(&self.f_sum_closed),
            "f_sum_series": pair(&self.f_sum_series),
            "terms": self.terms,
            "residual": self.residual,
        })
    }
}

/// Largest number of series terms summed before giving up.
const SERIES_TERM_LIMIT: usize = 400;

/// Closed forms of `G_μ`, `F_μ`, `F_μ^{⟨-1⟩}` and `F_{μ⊞μ}` at
/// `b = diag(λ, γ)`, against `F_{μ⊞μ}` from the summed moment series
/// `G_{μ⊞μ}(b) = Σ_m C(2m, m) b^{-1}(a b^{-1} a b^{-1})^m`.
pub fn two_by_two_model_check(lambda: f64, gamma: f64) -> Result<TwoByTwoReport> {
    if lambda == 0.0 || gamma == 0.0 || !lambda.is_finite() || !gamma.is_finite() {
        return Err(NcError::InvalidArgument("λ and γ must be finite and nonzero".into()));
    }
    let prod = lambda * gamma;
    if (0.0..=4.0).contains(&prod) {
        return Err(NcError::Branch(format!("λγ = {prod} lies in [0, 4]")));
    }
    if 4.0 / prod.abs() >= 1.0 {
        return Err(NcError::Branch(format!("series diverges: |4/(λγ)| = {} ≥ 1", 4.0 / prod.abs())));
    }
    let c = |x: f64| C64::new(x, 0.0);
    let (l, g) = (c(lambda), c(gamma));
    let g_mu = [1.0 / (l - 1.0 / g), 1.0 / (g - 1.0 / l)];
    let f_mu = [l - 1.0 / g, g - 1.0 / l];
    let f_mu_inverse = [0.5 * (l + (l * l + 4.0 * l / g).sqrt()), 0.5 * (g + (g * g + 4.0 * g / l).sqrt())];
    let back = [f_mu_inverse[0] - 1.0 / f_mu_inverse[1], f_mu_inverse[1] - 1.0 / f_mu_inverse[0]];
    let inverse_residual = (back[0] - l).norm().max((back[1] - g).norm());
    let f_sum_closed = [(l * l - 4.0 * l / g).sqrt(), (g * g - 4.0 * g / l).sqrt()];
    for (root, x) in f_sum_closed.iter().zip([l, g]) {
        if (root / x).re <= 0.0 {
            return Err(NcError::Branch(format!(
                "principal root {root} does not continue F(b) ~ b at λ = {lambda}, γ = {gamma}"
            )));
        }
    }

    let d2 = AlgebraDescriptor::diagonal(2);
    let a = AlgElement::from_real(AlgebraDescriptor::full(2), &[&[0.0, 1.0], &[1.0, 0.0]])?;
    let b_inv = AlgElement::diag(d2, &[1.0 / lambda, 1.0 / gamma])?;
    let mut g_sum = AlgElement::zero(d2);
    let mut terms = 0;
    let mut converged = false;
    for m in 0..SERIES_TERM_LIMIT {
        let word = BWord::new(d2, vec![b_inv.clone(); 2 * m + 1])?;
        let term = free_binomial_word_moment(&a, &word, 2.0)?;
        g_sum = &g_sum + &term;
        terms = m + 1;
        if term.max_abs() <= 1e-17 * g_sum.max_abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(NcError::Branch(format!("series not converged after {SERIES_TERM_LIMIT} terms")));
    }
    let f_sum_series = [1.0 / g_sum.entries()[(0, 0)], 1.0 / g_sum.entries()[(1, 1)]];
    let residual = (f_sum_series[0] - f_sum_closed[0]).norm().max((f_sum_series[1] - f_sum_closed[1]).norm());
    Ok(TwoByTwoReport {
        lambda,
        gamma,
        g_mu,
        f_mu,
        f_mu_inverse,
        inverse_residual,
        f_sum_closed,
        f_sum_series,
        terms,
        residual,
    })
}

//! Jacobi–Szegő distributions with values in a matrix algebra: parameter
//! sequences, moments (partition sum and Fock-space oracle), coefficient
//! stripping, continued fractions, Boolean powers and the named families.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::algebra::{
    add_maps, amplify_element, amplify_map, compose_maps, scale_map, AlgElement, AlgebraDescriptor, LinMapRep,
    C64, ConditionalExpectation,
};
use crate::config::{check_degree, degree_cap, FOCK_MATRIX_DEGREE_CAP};
use crate::partitions::{Block, Partition12};
use crate::{NcError, Result};

/// Tolerance for structural recognition of parameter layouts.
pub const RECOGNITION_TOL: f64 = 1e-9;

/// Eventually constant Jacobi parameters `(λ_i, α_i)_{i ≥ 1}`: the head
/// entries followed by the tail repeated forever.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiParams {
    algebra: AlgebraDescriptor,
    head_lambda: Vec<AlgElement>,
    head_alpha: Vec<LinMapRep>,
    tail_lambda: AlgElement,
    tail_alpha: LinMapRep,
    positive: bool,
}

impl JacobiParams {
    /// Validates algebra membership. With `positive` set, every `λ_i` must be
    /// self-adjoint and every `α_i` completely positive.
    pub fn new(
        algebra: AlgebraDescriptor,
        head_lambda: Vec<AlgElement>,
        head_alpha: Vec<LinMapRep>,
        tail_lambda: AlgElement,
        tail_alpha: LinMapRep,
        positive: bool,
    ) -> Result<Self> {
        for l in head_lambda.iter().chain(std::iter::once(&tail_lambda)) {
            algebra.expect(&l.algebra())?;
        }
        for a in head_alpha.iter().chain(std::iter::once(&tail_alpha)) {
            algebra.expect(&a.algebra())?;
        }
        let p = JacobiParams { algebra, head_lambda, head_alpha, tail_lambda, tail_alpha, positive: false };
        if positive && !p.is_positive_definite() {
            return Err(NcError::InvalidArgument(
                "positive parameters need self-adjoint λ_i and completely positive α_i".into(),
            ));
        }
        Ok(JacobiParams { positive, ..p })
    }

    /// Like [`JacobiParams::new`], with the `positive` flag set exactly when the
    /// parameters qualify.
    pub fn auto(
        algebra: AlgebraDescriptor,
        head_lambda: Vec<AlgElement>,
        head_alpha: Vec<LinMapRep>,
        tail_lambda: AlgElement,
        tail_alpha: LinMapRep,
    ) -> Result<Self> {
        let mut p = JacobiParams::new(algebra, head_lambda, head_alpha, tail_lambda, tail_alpha, false)?;
        p.positive = p.is_positive_definite();
        Ok(p)
    }

    /// Constant sequences `λ_i = λ`, `α_i = α`.
    pub fn constant(lambda: AlgElement, alpha: LinMapRep) -> Result<Self> {
        JacobiParams::auto(lambda.algebra(), Vec::new(), Vec::new(), lambda, alpha)
    }

    fn is_positive_definite(&self) -> bool {
        self.head_lambda.iter().chain(std::iter::once(&self.tail_lambda)).all(|l| l.is_self_adjoint(1e-9))
            && self.head_alpha.iter().chain(std::iter::once(&self.tail_alpha)).all(LinMapRep::is_cp)
    }

    pub fn algebra(&self) -> AlgebraDescriptor {
        self.algebra
    }

    pub fn positive(&self) -> bool {
        self.positive
    }

    pub fn head_lambda(&self) -> &[AlgElement] {
        &self.head_lambda
    }

    pub fn head_alpha(&self) -> &[LinMapRep] {
        &self.head_alpha
    }

    pub fn tail_lambda(&self) -> &AlgElement {
        &self.tail_lambda
    }

    pub fn tail_alpha(&self) -> &LinMapRep {
        &self.tail_alpha
    }

    /// `λ_i`, 1-based.
    pub fn lambda(&self, i: usize) -> &AlgElement {
        assert!(i >= 1, "Jacobi parameters are indexed from 1");
        self.head_lambda.get(i - 1).unwrap_or(&self.tail_lambda)
    }

    /// `α_i`, 1-based.
    pub fn alpha(&self, i: usize) -> &LinMapRep {
        assert!(i >= 1, "Jacobi parameters are indexed from 1");
        self.head_alpha.get(i - 1).unwrap_or(&self.tail_alpha)
    }

    /// Number of explicitly stored leading entries.
    pub fn head_len(&self) -> usize {
        self.head_lambda.len().max(self.head_alpha.len())
    }

    /// Smallest `k` with `α_k = α_{k+1} = … = 0`, if the tail map vanishes.
    pub fn truncation_depth(&self) -> Option<usize> {
        if !self.tail_alpha.is_zero() {
            return None;
        }
        let mut k = self.head_alpha.len() + 1;
        while k > 1 && self.head_alpha[k - 2].is_zero() {
            k -= 1;
        }
        Some(k)
    }

    /// `max_i max(‖λ_i‖, ‖α_i‖)` over the head and tail.
    pub fn norm_bound(&self) -> f64 {
        let l = self.head_lambda.iter().chain(std::iter::once(&self.tail_lambda)).map(AlgElement::norm);
        let a = self.head_alpha.iter().chain(std::iter::once(&self.tail_alpha)).map(LinMapRep::norm_bound);
        l.chain(a).fold(0.0, f64::max)
    }

    /// The first `len` entries made explicit, as owned vectors.
    fn materialized(&self, len: usize) -> (Vec<AlgElement>, Vec<LinMapRep>) {
        let len = len.max(self.head_len());
        ((1..=len).map(|i| self.lambda(i).clone()).collect(), (1..=len).map(|i| self.alpha(i).clone()).collect())
    }

    fn rebuild(&self, head_lambda: Vec<AlgElement>, head_alpha: Vec<LinMapRep>) -> Result<Self> {
        JacobiParams::auto(self.algebra, head_lambda, head_alpha, self.tail_lambda.clone(), self.tail_alpha.clone())
    }

    /// `I_{d_outer} ⊗ (λ_i, α_i)`, parameters of the fully matricial extension.
    pub fn amplify(&self, d_outer: usize) -> JacobiParams {
        let head_lambda: Vec<_> = self.head_lambda.iter().map(|l| amplify_element(l, d_outer)).collect();
        let head_alpha: Vec<_> = self.head_alpha.iter().map(|a| amplify_map(a, d_outer)).collect();
        let tail_lambda = amplify_element(&self.tail_lambda, d_outer);
        JacobiParams {
            algebra: tail_lambda.algebra(),
            head_lambda,
            head_alpha,
            tail_lambda,
            tail_alpha: amplify_map(&self.tail_alpha, d_outer),
            positive: self.positive,
        }
    }

    /// Entrywise distance over the first `len` parameter pairs.
    pub fn distance(&self, other: &JacobiParams, len: usize) -> f64 {
        (1..=len)
            .map(|i| self.lambda(i).distance(other.lambda(i)).max(self.alpha(i).distance(other.alpha(i))))
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "algebra": self.algebra,
            "head_lambda": self.head_lambda.iter().map(AlgElement::to_json).collect::<Vec<_>>(),
            "head_alpha": self.head_alpha.iter().map(LinMapRep::to_json).collect::<Vec<_>>(),
            "tail_lambda": self.tail_lambda.to_json(),
            "tail_alpha": self.tail_alpha.to_json(),
            "positive": self.positive,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let algebra: AlgebraDescriptor = serde_json::from_value(field(v, "algebra")?.clone())
            .map_err(|e| NcError::Schema(format!("algebra: {e}")))?;
        let list = |key: &str| -> Result<Vec<Value>> {
            match v.get(key) {
                None => Ok(Vec::new()),
                Some(Value::Array(items)) => Ok(items.clone()),
                Some(_) => Err(NcError::Schema(format!("`{key}` must be an array"))),
            }
        };
        let head_lambda = list("head_lambda")?
            .iter()
            .enumerate()
            .map(|(i, x)| AlgElement::from_json(x).map_err(|e| NcError::Schema(format!("head_lambda[{i}]: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let head_alpha = list("head_alpha")?
            .iter()
            .enumerate()
            .map(|(i, x)| {
                LinMapRep::from_json(x, algebra).map_err(|e| NcError::Schema(format!("head_alpha[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let tail_lambda = AlgElement::from_json(field(v, "tail_lambda")?)
            .map_err(|e| NcError::Schema(format!("tail_lambda: {e}")))?;
        let tail_alpha = LinMapRep::from_json(field(v, "tail_alpha")?, algebra)
            .map_err(|e| NcError::Schema(format!("tail_alpha: {e}")))?;
        let positive = match v.get("positive") {
            None => None,
            Some(Value::Bool(b)) => Some(*b),
            Some(_) => return Err(NcError::Schema("`positive` must be a boolean".into())),
        };
        match positive {
            Some(flag) => JacobiParams::new(algebra, head_lambda, head_alpha, tail_lambda, tail_alpha, flag),
            None => JacobiParams::auto(algebra, head_lambda, head_alpha, tail_lambda, tail_alpha),
        }
        .map_err(|e| match e {
            NcError::Schema(_) => e,
            other => NcError::Schema(other.to_string()),
        })
    }
}

pub(crate) fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| NcError::Schema(format!("missing `{key}`")))
}

/// A monomial `b_0 X b_1 X … X b_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BWord {
    algebra: AlgebraDescriptor,
    coeffs: Vec<AlgElement>,
}

impl BWord {
    pub fn new(algebra: AlgebraDescriptor, coeffs: Vec<AlgElement>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(NcError::InvalidArgument("a word needs at least one coefficient".into()));
        }
        for c in &coeffs {
            algebra.expect(&c.algebra())?;
        }
        Ok(BWord { algebra, coeffs })
    }

    /// `X^n` with unit coefficients.
    pub fn power(algebra: AlgebraDescriptor, n: usize) -> Self {
        BWord { algebra, coeffs: vec![AlgElement::one(algebra); n + 1] }
    }

    /// `X b X b … X b` with `n` symbols: the degree-`n` term of `M_μ(b)`.
    pub fn resolvent_term(b: &AlgElement, n: usize) -> Self {
        let mut coeffs = vec![b.clone(); n + 1];
        coeffs[0] = AlgElement::one(b.algebra());
        BWord { algebra: b.algebra(), coeffs }
    }

    pub fn algebra(&self) -> AlgebraDescriptor {
        self.algebra
    }

    pub fn coeffs(&self) -> &[AlgElement] {
        &self.coeffs
    }

    /// Number of `X` symbols.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn amplify(&self, d_outer: usize) -> BWord {
        let coeffs: Vec<_> = self.coeffs.iter().map(|c| amplify_element(c, d_outer)).collect();
        BWord { algebra: coeffs[0].algebra(), coeffs }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "algebra": self.algebra,
            "coeffs": self.coeffs.iter().map(AlgElement::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let algebra: AlgebraDescriptor = serde_json::from_value(field(v, "algebra")?.clone())
            .map_err(|e| NcError::Schema(format!("algebra: {e}")))?;
        let coeffs = field(v, "coeffs")?
            .as_array()
            .ok_or_else(|| NcError::Schema("`coeffs` must be an array".into()))?
            .iter()
            .enumerate()
            .map(|(i, x)| AlgElement::from_json(x).map_err(|e| NcError::Schema(format!("coeffs[{i}]: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        BWord::new(algebra, coeffs).map_err(|e| NcError::Schema(e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Moments

/// `μ[b_0 X b_1 … X b_n]` as the sum over `NC_{1,2}(n)` of the depth-indexed
/// replacement terms, evaluated by memoized first-element recursion.
pub fn moment(params: &JacobiParams, w: &BWord) -> Result<AlgElement> {
    params.algebra.expect(&w.algebra)?;
    check_degree(w.degree(), degree_cap())?;
    let mut memo = HashMap::new();
    Ok(interval_sum(params, &w.coeffs, 1, w.degree(), 1, &mut memo))
}

/// Sum over partitions of the positions `l..=r` at depth `d`, as the element
/// `b_{l-1} X b_l … X b_r` with every `X` replaced.
fn interval_sum(
    params: &JacobiParams,
    b: &[AlgElement],
    l: usize,
    r: usize,
    d: usize,
    memo: &mut HashMap<(usize, usize, usize), AlgElement>,
) -> AlgElement {
    if l > r {
        return b[l - 1].clone();
    }
    if let Some(v) = memo.get(&(l, r, d)) {
        return v.clone();
    }
    let head = &b[l - 1] * params.lambda(d);
    let mut acc = &head * &interval_sum(params, b, l + 1, r, d, memo);
    let alpha = params.alpha(d);
    if !alpha.is_zero() {
        for j in (l + 1)..=r {
            let inner = interval_sum(params, b, l + 1, j - 1, d + 1, memo);
            let rest = interval_sum(params, b, j + 1, r, d, memo);
            let term = &(&b[l - 1] * &alpha.apply(&inner)) * &rest;
            acc = &acc + &term;
        }
    }
    memo.insert((l, r, d), acc.clone());
    acc
}

/// The replacement term `T_π(w)` of a single partition.
pub fn partition_term(params: &JacobiParams, w: &BWord, pi: &Partition12) -> Result<AlgElement> {
    params.algebra.expect(&w.algebra)?;
    if pi.n() != w.degree() {
        return Err(NcError::InvalidArgument(format!(
            "partition of {} points applied to a degree-{} word",
            pi.n(),
            w.degree()
        )));
    }
    let mut partner = vec![0usize; pi.n() + 1];
    for b in pi.blocks() {
        match *b {
            Block::Singleton(i) => partner[i] = i,
            Block::Pair(i, j) => {
                partner[i] = j;
                partner[j] = i;
            }
        }
    }
    Ok(partition_term_rec(params, &w.coeffs, &partner, 1, pi.n(), 1))
}

fn partition_term_rec(
    params: &JacobiParams,
    b: &[AlgElement],
    partner: &[usize],
    l: usize,
    r: usize,
    d: usize,
) -> AlgElement {
    let mut acc = b[l - 1].clone();
    let mut pos = l;
    while pos <= r {
        let j = partner[pos];
        if j == pos {
            acc = &(&acc * params.lambda(d)) * &b[pos];
        } else {
            let inner = partition_term_rec(params, b, partner, pos + 1, j - 1, d + 1);
            acc = &(&acc * &params.alpha(d).apply(&inner)) * &b[j];
        }
        pos = j + 1;
    }
    acc
}

/// `moment` computed as an explicit sum of [`partition_term`] over the
/// enumerated partitions.
pub fn moment_by_enumeration(params: &JacobiParams, w: &BWord) -> Result<AlgElement> {
    check_degree(w.degree(), degree_cap())?;
    let parts = crate::partitions::enumerate_nc12(w.degree());
    let mut acc = AlgElement::zero(params.algebra);
    for pi in &parts {
        acc = &acc + &partition_term(params, w, pi)?;
    }
    Ok(acc)
}

/// `⟨1, b_0 x b_1 x … x b_n 1⟩` on the Fock module, with `x = a* + p + a`
/// applied to elementary tensors.
pub fn fock_moment(params: &JacobiParams, w: &BWord) -> Result<AlgElement> {
    params.algebra.expect(&w.algebra)?;
    let cap = if params.algebra.dim >= 2 { degree_cap().min(FOCK_MATRIX_DEGREE_CAP) } else { degree_cap() };
    check_degree(w.degree(), cap)?;
    let n = w.degree();
    let one = AlgElement::one(params.algebra);
    // a tensor [c_0, …, c_m] has degree m
    let mut state: Vec<Vec<AlgElement>> = vec![vec![w.coeffs[n].clone()]];
    for step in (0..n).rev() {
        let mut next = Vec::with_capacity(state.len() * 3);
        for t in state {
            let deg = t.len() - 1;
            if deg < step {
                let mut u = Vec::with_capacity(t.len() + 1);
                u.push(one.clone());
                u.extend(t.iter().cloned());
                next.push(u);
            }
            if deg <= step {
                let mut u = t.clone();
                u[0] = params.lambda(deg + 1) * &u[0];
                next.push(u);
            }
            if deg >= 1 && deg - 1 <= step {
                let first = params.alpha(deg).apply(&t[0]);
                let mut u = t[1..].to_vec();
                u[0] = &first * &u[0];
                next.push(u);
            }
        }
        for u in next.iter_mut() {
            u[0] = &w.coeffs[step] * &u[0];
        }
        state = next;
    }
    Ok(state
        .into_iter()
        .filter(|t| t.len() == 1)
        .fold(AlgElement::zero(params.algebra), |acc, t| &acc + &t[0]))
}

// ---------------------------------------------------------------------------
// Moment tables

/// Moments on the words `X c_1 X … c_{n-1} X` whose inner coefficients run
/// over the algebra basis; every other word follows by multilinearity and
/// bimodularity.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    algebra: AlgebraDescriptor,
    max_degree: usize,
    entries: BTreeMap<(usize, Vec<usize>), AlgElement>,
}

impl MomentTable {
    /// Fills the table by evaluating `f` on every basis word.
    pub fn build<F>(algebra: AlgebraDescriptor, max_degree: usize, f: F) -> Result<Self>
    where
        F: Fn(&BWord) -> Result<AlgElement> + Sync,
    {
        let basis = algebra.basis();
        let keys: Vec<(usize, Vec<usize>)> = (0..=max_degree).flat_map(|n| basis_keys(basis.len(), n)).collect();
        let values: Vec<Result<AlgElement>> = keys
            .par_iter()
            .map(|(n, inner)| {
                if *n == 0 {
                    return Ok(AlgElement::one(algebra));
                }
                let mut coeffs = vec![AlgElement::one(algebra)];
                coeffs.extend(inner.iter().map(|&i| basis[i].clone()));
                coeffs.push(AlgElement::one(algebra));
                f(&BWord { algebra, coeffs })
            })
            .collect();
        let mut entries = BTreeMap::new();
        for (k, v) in keys.into_iter().zip(values) {
            entries.insert(k, v?);
        }
        Ok(MomentTable { algebra, max_degree, entries })
    }

    /// Scalar moment sequence `m_0, …, m_N`.
    pub fn from_scalar(moments: &[f64]) -> Self {
        let alg = AlgebraDescriptor::scalar();
        let entries = moments
            .iter()
            .enumerate()
            .map(|(n, &m)| ((n, vec![0; n.saturating_sub(1)]), AlgElement::scalar(alg, C64::new(m, 0.0))))
            .collect();
        MomentTable { algebra: alg, max_degree: moments.len().saturating_sub(1), entries }
    }

    pub fn algebra(&self) -> AlgebraDescriptor {
        self.algebra
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, Vec<usize>), &AlgElement)> {
        self.entries.iter()
    }

    /// Entry for inner basis indices (length `degree - 1`).
    pub fn get(&self, degree: usize, inner: &[usize]) -> Option<&AlgElement> {
        self.entries.get(&(degree, inner.to_vec()))
    }

    /// `μ[w]` reconstructed from the table.
    pub fn evaluate(&self, w: &BWord) -> Result<AlgElement> {
        self.algebra.expect(&w.algebra)?;
        let n = w.degree();
        if n > self.max_degree {
            return Err(NcError::InvalidArgument(format!(
                "word degree {n} beyond the table's degree {}",
                self.max_degree
            )));
        }
        let first = &w.coeffs[0];
        if n == 0 {
            return Ok(first.clone());
        }
        let coords: Vec<Vec<C64>> = w.coeffs[1..n].iter().map(AlgElement::coordinates).collect();
        let mut acc = AlgElement::zero(self.algebra);
        for ((deg, inner), value) in self.entries.range((n, Vec::new())..(n + 1, Vec::new())) {
            debug_assert_eq!(*deg, n);
            let mut weight = C64::new(1.0, 0.0);
            for (pos, &idx) in inner.iter().enumerate() {
                weight *= coords[pos][idx];
                if weight == C64::new(0.0, 0.0) {
                    break;
                }
            }
            if weight != C64::new(0.0, 0.0) {
                acc = &acc + &value.scale(weight);
            }
        }
        Ok(&(first * &acc) * &w.coeffs[n])
    }

    /// `m_0, …, m_N` for a scalar table.
    pub fn scalar_sequence(&self) -> Option<Vec<C64>> {
        if !self.algebra.is_scalar() {
            return None;
        }
        Some((0..=self.max_degree).map(|n| self.entries[&(n, vec![0; n.saturating_sub(1)])].entries()[(0, 0)]).collect())
    }

    /// Largest entrywise deviation over the common degrees.
    pub fn distance(&self, other: &MomentTable) -> f64 {
        self.entries
            .iter()
            .filter_map(|(k, v)| other.entries.get(k).map(|w| v.distance(w)))
            .fold(0.0, f64::max)
    }

    /// Largest deviation restricted to one degree.
    pub fn distance_at(&self, other: &MomentTable, degree: usize) -> f64 {
        self.entries
            .iter()
            .filter(|((n, _), _)| *n == degree)
            .filter_map(|(k, v)| other.entries.get(k).map(|w| v.distance(w)))
            .fold(0.0, f64::max)
    }

    /// Odd-degree entries vanish within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.entries.iter().filter(|((n, _), _)| n % 2 == 1).all(|(_, v)| v.max_abs() <= tol)
    }

    pub fn to_json(&self) -> Value {
        let mut out = json!({
            "algebra": self.algebra,
            "max_degree": self.max_degree,
            "entries": self.entries.iter().map(|((n, inner), v)| json!({
                "degree": n,
                "inner": inner,
                "value": v.to_json(),
            })).collect::<Vec<_>>(),
        });
        if let Some(seq) = self.scalar_sequence() {
            out["sequence"] = json!(seq.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
        }
        out
    }
}

fn basis_keys(basis_len: usize, n: usize) -> Vec<(usize, Vec<usize>)> {
    let len = n.saturating_sub(1);
    let mut out = vec![(n, Vec::with_capacity(len))];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|(n, v)| {
                (0..basis_len).map(move |i| {
                    let mut w = v.clone();
                    w.push(i);
                    (n, w)
                })
            })
            .collect();
    }
    out
}

/// Moment table of a Jacobi–Szegő distribution through `degree`.
pub fn moment_table(params: &JacobiParams, degree: usize) -> Result<MomentTable> {
    check_degree(degree, degree_cap())?;
    MomentTable::build(params.algebra, degree, |w| moment(params, w))
}

// ---------------------------------------------------------------------------
// Stripping and continued fractions

/// Drops the first parameter pair.
pub fn strip(params: &JacobiParams) -> JacobiParams {
    let mut p = params.clone();
    if !p.head_lambda.is_empty() {
        p.head_lambda.remove(0);
    }
    if !p.head_alpha.is_empty() {
        p.head_alpha.remove(0);
    }
    p.positive = p.is_positive_definite();
    p
}

fn checked_inverse(x: &AlgElement, level: usize) -> Result<AlgElement> {
    let scale = x.norm().max(1.0);
    let sv = x.entries().clone().svd(false, false).singular_values.min();
    if sv <= 1e-12 * scale {
        return Err(NcError::SingularResolvent { level });
    }
    x.inverse().ok_or(NcError::SingularResolvent { level })
}

/// Depth-`k` finite continued fraction `M_1(b)` where
/// `M_i = (1 - λ_i b - α_i[b M_{i+1}] b)^{-1}` and `M_{k+1} = 1`.
pub fn cf_approximant(params: &JacobiParams, k: usize, b: &AlgElement) -> Result<AlgElement> {
    params.algebra.expect(&b.algebra())?;
    if k == 0 {
        return Err(NcError::InvalidArgument("continued-fraction depth must be at least 1".into()));
    }
    let one = AlgElement::one(params.algebra);
    let mut inner = one.clone();
    for i in (1..=k).rev() {
        let denom = &(&one - &(params.lambda(i) * b)) - &(&params.alpha(i).apply(&(b * &inner)) * b);
        inner = checked_inverse(&denom, i)?;
    }
    Ok(inner)
}

/// Power-series coefficients (in a formal variable `t` scaling `b`) of the
/// depth-`k` continued fraction, through `order`.
pub fn cf_series(params: &JacobiParams, k: usize, b: &AlgElement, order: usize) -> Result<Vec<AlgElement>> {
    params.algebra.expect(&b.algebra())?;
    let alg = params.algebra;
    let mut inner: Vec<AlgElement> = (0..=order)
        .map(|m| if m == 0 { AlgElement::one(alg) } else { AlgElement::zero(alg) })
        .collect();
    for i in (1..=k).rev() {
        // A(t) = t λ_i b + Σ_m t^{m+2} α_i[b inner_m] b, M_i = Σ_j A^j
        let mut a = vec![AlgElement::zero(alg); order + 1];
        if order >= 1 {
            a[1] = params.lambda(i) * b;
        }
        for m in 0..=order.saturating_sub(2) {
            if m + 2 <= order {
                a[m + 2] = &a[m + 2] + &(&params.alpha(i).apply(&(b * &inner[m])) * b);
            }
        }
        let mut out = vec![AlgElement::zero(alg); order + 1];
        out[0] = AlgElement::one(alg);
        for m in 1..=order {
            let mut acc = AlgElement::zero(alg);
            for j in 1..=m {
                acc = &acc + &(&a[j] * &out[m - j]);
            }
            out[m] = acc;
        }
        inner = out;
    }
    Ok(inner)
}

/// `μ[X b X b … X b]` for `n = 0..=order`: the coefficients of `M_μ(tb)`.
pub fn moment_series(params: &JacobiParams, b: &AlgElement, order: usize) -> Result<Vec<AlgElement>> {
    (0..=order).map(|n| moment(params, &BWord::resolvent_term(b, n))).collect()
}

// ---------------------------------------------------------------------------
// Parameter transforms

/// Boolean power: `(λ_1, α_1) ↦ (η[λ_1], η ∘ α_1)`.
pub fn boolean_power(params: &JacobiParams, eta: &LinMapRep) -> Result<JacobiParams> {
    params.algebra.expect(&eta.algebra())?;
    let (mut lam, mut alp) = params.materialized(1);
    lam[0] = eta.apply(&lam[0]);
    alp[0] = compose_maps(eta, &alp[0])?;
    params.rebuild(lam, alp)
}

/// Free convolution with `δ_λ`: every `λ_i ↦ λ_i + λ`.
pub fn shift_by_delta(params: &JacobiParams, lambda: &AlgElement) -> Result<JacobiParams> {
    params.algebra.expect(&lambda.algebra())?;
    let head: Vec<_> = params.head_lambda.iter().map(|l| l + lambda).collect();
    JacobiParams::auto(
        params.algebra,
        head,
        params.head_alpha.clone(),
        &params.tail_lambda + lambda,
        params.tail_alpha.clone(),
    )
}

/// Prepends `(0, I)`.
pub fn phi_transform(params: &JacobiParams) -> JacobiParams {
    let (mut lam, mut alp) = params.materialized(0);
    lam.insert(0, AlgElement::zero(params.algebra));
    alp.insert(0, LinMapRep::identity(params.algebra));
    params.rebuild(lam, alp).expect("same algebra throughout")
}

// ---------------------------------------------------------------------------
// Named families

#[derive(Clone, Debug)]
pub enum NamedFamily {
    /// `J(λ, 0, …; 0, …)`
    PointMass { lambda: AlgElement },
    /// `J(λ, λ, …; α, α, …)`, centered when `lambda` is absent.
    Semicircular { lambda: Option<AlgElement>, alpha: LinMapRep },
    /// `J(λ_1, λ_2, …; α, 0, …)`
    Bernoulli { lambda1: AlgElement, lambda2: AlgElement, alpha: LinMapRep },
    /// Two-point law `t δ_a + (1-t) δ_c` in the Bernoulli layout.
    TwoPoint { t: f64, a: AlgElement, c: AlgElement },
    /// `J(m, m + λ, m + λ, …; α, α, …)`
    FreePoisson { lambda: AlgElement, alpha: LinMapRep, mean: Option<AlgElement> },
    /// `J(0, λ, λ, …; η, η + α, …)`
    Meixner { lambda: AlgElement, alpha: LinMapRep, eta: LinMapRep },
    /// `J(0, …; 2α, α, α, …)`
    Arcsine { alpha: LinMapRep },
    /// `J(0, …; η, η - α, η - α, …)`
    FreeBinomial { eta: LinMapRep, alpha: LinMapRep },
}

pub fn make_named(family: &NamedFamily) -> Result<JacobiParams> {
    match family {
        NamedFamily::PointMass { lambda } => {
            let alg = lambda.algebra();
            JacobiParams::auto(alg, vec![lambda.clone()], Vec::new(), AlgElement::zero(alg), LinMapRep::zero(alg))
        }
        NamedFamily::Semicircular { lambda, alpha } => {
            let alg = alpha.algebra();
            let lambda = lambda.clone().unwrap_or_else(|| AlgElement::zero(alg));
            JacobiParams::constant(lambda, alpha.clone())
        }
        NamedFamily::Bernoulli { lambda1, lambda2, alpha } => {
            let alg = alpha.algebra();
            JacobiParams::auto(
                alg,
                vec![lambda1.clone(), lambda2.clone()],
                vec![alpha.clone()],
                AlgElement::zero(alg),
                LinMapRep::zero(alg),
            )
        }
        NamedFamily::TwoPoint { t, a, c } => {
            if !(*t > 0.0 && *t < 1.0) {
                return Err(NcError::InvalidArgument(format!("two-point weight t must lie in (0, 1), got {t}")));
            }
            a.algebra().expect(&c.algebra())?;
            let alg = a.algebra();
            let t = *t;
            let lambda1 = &a.scale_real(t) + &c.scale_real(1.0 - t);
            let lambda2 = &a.scale_real(1.0 - t) + &c.scale_real(t);
            let diff = (a - c).scale_real((t * (1.0 - t)).sqrt());
            let alpha = LinMapRep::kraus(alg, vec![diff.into_entries()])?;
            make_named(&NamedFamily::Bernoulli { lambda1, lambda2, alpha })
        }
        NamedFamily::FreePoisson { lambda, alpha, mean } => {
            let alg = alpha.algebra();
            let mean = mean.clone().unwrap_or_else(|| AlgElement::zero(alg));
            JacobiParams::auto(alg, vec![mean.clone()], Vec::new(), &mean + lambda, alpha.clone())
        }
        NamedFamily::Meixner { lambda, alpha, eta } => {
            let alg = eta.algebra();
            JacobiParams::auto(
                alg,
                vec![AlgElement::zero(alg)],
                vec![eta.clone()],
                lambda.clone(),
                add_maps(eta, alpha)?,
            )
        }
        NamedFamily::Arcsine { alpha } => {
            let alg = alpha.algebra();
            JacobiParams::auto(alg, Vec::new(), vec![scale_map(alpha, 2.0)], AlgElement::zero(alg), alpha.clone())
        }
        NamedFamily::FreeBinomial { eta, alpha } => {
            let alg = eta.algebra();
            JacobiParams::auto(
                alg,
                Vec::new(),
                vec![eta.clone()],
                AlgElement::zero(alg),
                add_maps(eta, &scale_map(alpha, -1.0))?,
            )
        }
    }
}

/// Parameters `(λ, α; η)` of a free Meixner layout.
#[derive(Clone, Debug)]
pub struct MeixnerForm {
    pub lambda: AlgElement,
    pub alpha: LinMapRep,
    pub eta: LinMapRep,
}

/// Structural match of `J(0, λ, λ, …; η, η + α, …)` within `tol`.
pub fn recognize_meixner(params: &JacobiParams, tol: f64) -> Option<MeixnerForm> {
    if params.lambda(1).max_abs() > tol {
        return None;
    }
    let len = params.head_len().max(2) + 1;
    let lambda = params.lambda(2).clone();
    let upper = params.alpha(2).clone();
    for i in 3..=len {
        if params.lambda(i).distance(&lambda) > tol || params.alpha(i).distance(&upper) > tol {
            return None;
        }
    }
    let eta = params.alpha(1).clone();
    let alpha = add_maps(&upper, &scale_map(&eta, -1.0)).ok()?;
    Some(MeixnerForm { lambda, alpha, eta })
}

/// `fM(λ, α; η_1) ⊞ fM(λ, α; η_2) = fM(λ, α; η_1 + η_2)`.
pub fn meixner_convolve(p1: &JacobiParams, p2: &JacobiParams) -> Result<JacobiParams> {
    p1.algebra.expect(&p2.algebra)?;
    let f1 = recognize_meixner(p1, RECOGNITION_TOL)
        .ok_or_else(|| NcError::NotMeixnerPair("first argument is not of the form fM(λ, α; η)".into()))?;
    let f2 = recognize_meixner(p2, RECOGNITION_TOL)
        .ok_or_else(|| NcError::NotMeixnerPair("second argument is not of the form fM(λ, α; η)".into()))?;
    let lambda_gap = f1.lambda.distance(&f2.lambda);
    let alpha_gap = f1.alpha.distance(&f2.alpha);
    if lambda_gap > RECOGNITION_TOL || alpha_gap > RECOGNITION_TOL {
        return Err(NcError::NotMeixnerPair(format!(
            "λ differ by {lambda_gap:e} and α differ by {alpha_gap:e}"
        )));
    }
    make_named(&NamedFamily::Meixner { lambda: f1.lambda, alpha: f1.alpha, eta: add_maps(&f1.eta, &f2.eta)? })
}

// ---------------------------------------------------------------------------
// Free binomial moments

/// `m_n(t) = t^{2n} - (t/2) Σ_{k=1}^n C(2k,k) (t-1)^k t^{2(n-k)} / (2k-1)`.
pub fn free_binomial_moment_exact(n: usize, t: &BigRational) -> Result<BigRational> {
    if t < &BigRational::one() {
        return Err(NcError::InvalidArgument(format!("free binomial parameter must be at least 1, got {t}")));
    }
    let s = t - BigRational::one();
    let pow = |x: &BigRational, e: usize| -> BigRational { (0..e).fold(BigRational::one(), |acc, _| acc * x) };
    let mut sum = BigRational::zero();
    let mut central = BigInt::one();
    for k in 1..=n {
        // C(2k,k) = C(2k-2,k-1) (2k)(2k-1) / k²
        central = central * BigInt::from(2 * k) * BigInt::from(2 * k - 1) / BigInt::from(k * k);
        let term = BigRational::from_integer(central.clone()) * pow(&s, k) * pow(t, 2 * (n - k))
            / BigRational::from_integer(BigInt::from(2 * k - 1));
        sum += term;
    }
    Ok(pow(t, 2 * n) - t * sum / BigRational::from_integer(BigInt::from(2)))
}

/// Floating-point [`free_binomial_moment_exact`].
pub fn free_binomial_moment(n: usize, t: f64) -> Result<f64> {
    let exact = BigRational::from_float(t)
        .ok_or_else(|| NcError::InvalidArgument(format!("free binomial parameter {t} is not finite")))?;
    let m = free_binomial_moment_exact(n, &exact)?;
    Ok(ratio_to_f64(&m))
}

pub(crate) fn ratio_to_f64(q: &BigRational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => {
            // rescale huge numerators and denominators before dividing
            let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000);
            let n = (q.numer().abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
            let d = (q.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
            let v = n / d;
            if q.is_negative() {
                -v
            } else {
                v
            }
        }
    }
}

/// `μ_a^{⊞t}[b_0 X b_1 … X b_n] = m_{n/2}(t) b_0 a b_1 … a b_n` for even `n`
/// and zero for odd `n`, in the model `E: M_d → D_d` where `E[a] = 0` and
/// `a D_d a ⊆ D_d`.
pub fn free_binomial_word_moment(a: &AlgElement, w: &BWord, t: f64) -> Result<AlgElement> {
    let d = a.dim();
    let e = ConditionalExpectation::onto_diagonal(d);
    if w.algebra != e.target {
        return Err(NcError::AlgebraMismatch { expected: e.target.to_string(), found: w.algebra.to_string() });
    }
    if e.apply(a).max_abs() > 1e-12 {
        return Err(NcError::InvalidArgument("the model requires E[a] = 0".into()));
    }
    let full = AlgebraDescriptor::full(d);
    let a_full = AlgElement::new(full, a.entries().clone())?;
    for basis in e.target.basis() {
        let lifted = AlgElement::new(full, basis.entries().clone())?;
        let sandwiched = &(&a_full * &lifted) * &a_full;
        if !e.target.contains(sandwiched.entries()) {
            return Err(NcError::InvalidArgument("the model requires a B a ⊆ B".into()));
        }
    }
    let n = w.degree();
    if n % 2 == 1 {
        return Ok(AlgElement::zero(e.target));
    }
    let m = free_binomial_moment(n / 2, t)?;
    let mut acc = AlgElement::new(full, w.coeffs[0].entries().clone())?;
    for c in &w.coeffs[1..] {
        acc = &(&acc * &a_full) * &AlgElement::new(full, c.entries().clone())?;
    }
    Ok(e.apply(&acc.scale_real(m)))
}

// ---------------------------------------------------------------------------
// Poisson limit

/// Exact `μ_N^{⊞N}` next to its free Poisson limit.
#[derive(Clone, Debug)]
pub struct PoissonLimitReport {
    pub n: usize,
    pub convolved: JacobiParams,
    pub target: JacobiParams,
    pub convolved_moments: MomentTable,
    pub target_moments: MomentTable,
}

impl PoissonLimitReport {
    /// Largest deviation among the degree-`n` moments.
    pub fn error_at(&self, degree: usize) -> f64 {
        self.convolved_moments.distance_at(&self.target_moments, degree)
    }
}

/// `μ_N = δ_{λ_1/N} ⊞ fM(λ, -α/N; α/N)`; the `N`-fold power is assembled by
/// repeated [`meixner_convolve`] and a final shift by `λ_1`, and compared
/// with `J(λ_1, λ_1 + λ, …; α, α, …)` through `degree`.
pub fn poisson_limit_check(
    n: usize,
    lambda1: &AlgElement,
    lambda: &AlgElement,
    alpha: &LinMapRep,
    degree: usize,
) -> Result<PoissonLimitReport> {
    if n == 0 {
        return Err(NcError::InvalidArgument("N must be at least 1".into()));
    }
    let inv = 1.0 / n as f64;
    let small = scale_map(alpha, inv);
    let block = make_named(&NamedFamily::Meixner {
        lambda: lambda.clone(),
        alpha: scale_map(alpha, -inv),
        eta: small.clone(),
    })?;
    let mut power = block.clone();
    for _ in 1..n {
        power = meixner_convolve(&power, &block)?;
    }
    let convolved = shift_by_delta(&power, lambda1)?;
    let target =
        make_named(&NamedFamily::FreePoisson { lambda: lambda.clone(), alpha: alpha.clone(), mean: Some(lambda1.clone()) })?;
    Ok(PoissonLimitReport {
        n,
        convolved_moments: moment_table(&convolved, degree)?,
        target_moments: moment_table(&target, degree)?,
        convolved,
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d2() -> AlgebraDescriptor {
        AlgebraDescriptor::diagonal(2)
    }

    fn diag(x: f64, y: f64) -> AlgElement {
        AlgElement::diag(d2(), &[x, y]).unwrap()
    }

    fn scalar(x: f64) -> AlgElement {
        AlgElement::scalar(AlgebraDescriptor::scalar(), C64::new(x, 0.0))
    }

    fn sample_params() -> JacobiParams {
        JacobiParams::auto(
            d2(),
            vec![diag(0.5, -1.0), diag(0.25, 2.0)],
            vec![LinMapRep::flip(), scale_map(&LinMapRep::identity(d2()), 0.5)],
            diag(-0.3, 0.7),
            add_maps(&LinMapRep::flip(), &LinMapRep::identity(d2())).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn low_degree_moments_match_closed_forms() {
        let p = sample_params();
        let (b0, b1, b2) = (diag(1.0, 2.0), diag(-1.0, 3.0), diag(0.5, 0.25));
        let w0 = BWord::new(d2(), vec![b0.clone()]).unwrap();
        assert_eq!(moment(&p, &w0).unwrap(), b0);
        let w1 = BWord::new(d2(), vec![b0.clone(), b1.clone()]).unwrap();
        let expect1 = &(&b0 * p.lambda(1)) * &b1;
        assert!(moment(&p, &w1).unwrap().approx_eq(&expect1, 1e-12, 1e-12));
        let w2 = BWord::new(d2(), vec![b0.clone(), b1.clone(), b2.clone()]).unwrap();
        let l1 = p.lambda(1);
        let expect2 = &(&(&(&(&b0 * l1) * &b1) * l1) * &b2) + &(&(&b0 * &p.alpha(1).apply(&b1)) * &b2);
        for f in [moment, fock_moment, moment_by_enumeration] {
            assert!(f(&p, &w2).unwrap().approx_eq(&expect2, 1e-12, 1e-12));
        }
    }

    #[test]
    fn three_engines_agree() {
        let p = sample_params();
        let coeffs: Vec<_> = (0..7).map(|i| diag(1.0 + 0.1 * i as f64, 0.5 - 0.2 * i as f64)).collect();
        let w = BWord::new(d2(), coeffs).unwrap();
        let a = moment(&p, &w).unwrap();
        assert!(a.approx_eq(&fock_moment(&p, &w).unwrap(), 1e-10, 1e-12));
        assert!(a.approx_eq(&moment_by_enumeration(&p, &w).unwrap(), 1e-10, 1e-12));
    }

    #[test]
    fn odd_moments_vanish_without_lambda() {
        let p = make_named(&NamedFamily::Semicircular { lambda: None, alpha: LinMapRep::flip() }).unwrap();
        let w = BWord::new(d2(), vec![diag(1.0, 2.0); 6]).unwrap();
        assert_eq!(fock_moment(&p, &w).unwrap().max_abs(), 0.0);
        assert_eq!(moment(&p, &w).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn degree_cap_is_enforced() {
        let p = sample_params();
        let w = BWord::power(d2(), 40);
        assert!(matches!(moment(&p, &w), Err(NcError::DegreeCap { .. })));
        assert!(matches!(fock_moment(&p, &BWord::power(d2(), 9)), Err(NcError::DegreeCap { .. })));
    }

    #[test]
    fn stripping_examples() {
        let alpha = LinMapRep::flip();
        let semi = make_named(&NamedFamily::Semicircular { lambda: Some(diag(1.0, 0.0)), alpha: alpha.clone() }).unwrap();
        assert_eq!(strip(&semi), semi);
        let poisson =
            make_named(&NamedFamily::FreePoisson { lambda: diag(1.0, 2.0), alpha: alpha.clone(), mean: None }).unwrap();
        let expect = make_named(&NamedFamily::Semicircular { lambda: Some(diag(1.0, 2.0)), alpha }).unwrap();
        assert!(strip(&poisson).distance(&expect, 4) < 1e-15);
        let bern = make_named(&NamedFamily::Bernoulli {
            lambda1: diag(1.0, 1.0),
            lambda2: diag(3.0, -1.0),
            alpha: LinMapRep::flip(),
        })
        .unwrap();
        let point = make_named(&NamedFamily::PointMass { lambda: diag(3.0, -1.0) }).unwrap();
        assert!(strip(&bern).distance(&point, 4) < 1e-15);
        assert!(strip(&phi_transform(&bern)).distance(&bern, 4) < 1e-15);
    }

    #[test]
    fn continued_fraction_examples() {
        let alg = AlgebraDescriptor::scalar();
        let semi = JacobiParams::constant(AlgElement::zero(alg), LinMapRep::identity(alg)).unwrap();
        let b = scalar(0.1);
        let depth1 = cf_approximant(&semi, 1, &b).unwrap().as_scalar().unwrap();
        assert!((depth1.re - 1.0 / (1.0 - 0.01)).abs() < 1e-15);
        assert_eq!(cf_approximant(&semi, 5, &AlgElement::zero(alg)).unwrap(), AlgElement::one(alg));
        let deep = cf_approximant(&semi, 30, &b).unwrap().as_scalar().unwrap().re;
        let mut catalan = 1.0f64;
        let mut sum = 0.0;
        for n in 0..60u32 {
            sum += catalan * 0.01f64.powi(n as i32);
            catalan = catalan * 2.0 * (2 * n + 1) as f64 / (n + 2) as f64;
        }
        assert!((deep - sum).abs() < 1e-10);
    }

    #[test]
    fn singular_level_is_reported() {
        let alg = AlgebraDescriptor::scalar();
        let p = JacobiParams::constant(scalar(1.0), LinMapRep::zero(alg)).unwrap();
        assert!(matches!(cf_approximant(&p, 3, &scalar(1.0)), Err(NcError::SingularResolvent { level: 3 })));
    }

    #[test]
    fn cf_series_matches_moments_through_twice_the_depth() {
        let p = sample_params();
        let b = diag(0.3, -0.2);
        for k in 1..=3 {
            let cf = cf_series(&p, k, &b, 2 * k).unwrap();
            let ms = moment_series(&p, &b, 2 * k).unwrap();
            for (x, y) in cf.iter().zip(&ms) {
                assert!(x.approx_eq(y, 1e-10, 1e-12));
            }
        }
    }

    #[test]
    fn boolean_power_examples() {
        let p = sample_params();
        assert!(boolean_power(&p, &LinMapRep::identity(d2())).unwrap().distance(&p, 4) < 1e-14);
        let alg = AlgebraDescriptor::scalar();
        let semi = make_named(&NamedFamily::Semicircular { lambda: None, alpha: LinMapRep::identity(alg) }).unwrap();
        let doubled = boolean_power(&semi, &LinMapRep::scalar(alg, 2.0)).unwrap();
        let arcsine = make_named(&NamedFamily::Arcsine { alpha: LinMapRep::identity(alg) }).unwrap();
        assert!(doubled.distance(&arcsine, 4) < 1e-14);
        let killed = boolean_power(&p, &LinMapRep::zero(d2())).unwrap();
        for n in 1..5 {
            assert_eq!(moment(&killed, &BWord::power(d2(), n)).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn shift_examples() {
        let p = sample_params();
        assert!(shift_by_delta(&p, &AlgElement::zero(d2())).unwrap().distance(&p, 4) == 0.0);
        let point = make_named(&NamedFamily::PointMass { lambda: diag(1.0, 2.0) }).unwrap();
        let moved = shift_by_delta(&point, &diag(0.5, 0.5)).unwrap();
        let w = BWord::power(d2(), 3);
        assert!(moment(&moved, &w).unwrap().approx_eq(&diag(1.5f64.powi(3), 2.5f64.powi(3)), 1e-12, 1e-12));
    }

    #[test]
    fn named_layouts() {
        let two = make_named(&NamedFamily::TwoPoint { t: 0.25, a: diag(1.0, 0.0), c: diag(0.0, 2.0) }).unwrap();
        assert!(two.lambda(1).approx_eq(&diag(0.25, 1.5), 0.0, 1e-15));
        assert!(two.lambda(2).approx_eq(&diag(0.75, 0.5), 0.0, 1e-15));
        let b = diag(3.0, 5.0);
        assert!(two.alpha(1).apply(&b).approx_eq(&diag(0.1875 * 3.0, 0.1875 * 4.0 * 5.0), 0.0, 1e-14));
        assert!(make_named(&NamedFamily::TwoPoint { t: 1.0, a: diag(1.0, 0.0), c: diag(0.0, 2.0) }).is_err());

        let eta = LinMapRep::identity(d2());
        let mx = make_named(&NamedFamily::Meixner { lambda: diag(1.0, 2.0), alpha: LinMapRep::flip(), eta: eta.clone() })
            .unwrap();
        assert!(mx.lambda(1).max_abs() == 0.0 && mx.lambda(3) == &diag(1.0, 2.0));
        assert!(mx.alpha(1).approx_eq(&eta, 0.0));
        assert!(mx.alpha(4).apply(&diag(1.0, 0.0)).approx_eq(&diag(1.0, 1.0), 0.0, 1e-15));
        let arc = make_named(&NamedFamily::Arcsine { alpha: LinMapRep::flip() }).unwrap();
        assert!(arc.alpha(1).apply(&diag(1.0, 0.0)).approx_eq(&diag(0.0, 2.0), 0.0, 1e-15));
        assert!(arc.alpha(2).apply(&diag(1.0, 0.0)).approx_eq(&diag(0.0, 1.0), 0.0, 1e-15));
    }

    #[test]
    fn phi_of_point_mass_and_gaussian() {
        let alg = AlgebraDescriptor::scalar();
        let delta0 = make_named(&NamedFamily::PointMass { lambda: AlgElement::zero(alg) }).unwrap();
        let phi = phi_transform(&delta0);
        // ±1 Bernoulli: even moments 1
        for n in [2, 4, 6] {
            assert!((moment(&phi, &BWord::power(alg, n)).unwrap().as_scalar().unwrap().re - 1.0).abs() < 1e-15);
        }
        let lam = diag(0.5, 1.0);
        let alpha = LinMapRep::flip();
        let gamma = make_named(&NamedFamily::Semicircular {
            lambda: Some(lam.clone()),
            alpha: add_maps(&LinMapRep::identity(d2()), &alpha).unwrap(),
        })
        .unwrap();
        let mx = make_named(&NamedFamily::Meixner { lambda: lam, alpha, eta: LinMapRep::identity(d2()) }).unwrap();
        assert!(phi_transform(&gamma).distance(&mx, 5) < 1e-14);
    }

    #[test]
    fn meixner_semigroup_parameters() {
        let alpha = LinMapRep::flip();
        let rho = make_named(&NamedFamily::Meixner {
            lambda: AlgElement::zero(d2()),
            alpha: scale_map(&alpha, -1.0),
            eta: alpha.clone(),
        })
        .unwrap();
        let sq = meixner_convolve(&rho, &rho).unwrap();
        let arcsine = make_named(&NamedFamily::Arcsine { alpha }).unwrap();
        assert!(sq.distance(&arcsine, 4) < 1e-14);
        let not_meixner = sample_params();
        assert!(matches!(meixner_convolve(&not_meixner, &rho), Err(NcError::NotMeixnerPair(_))));
    }

    #[test]
    fn free_binomial_values() {
        let two = BigRational::from_integer(BigInt::from(2));
        let mut central = BigInt::one();
        for n in 0..=8usize {
            if n > 0 {
                central = central * BigInt::from(2 * n) * BigInt::from(2 * n - 1) / BigInt::from(n * n);
            }
            assert_eq!(free_binomial_moment_exact(n, &two).unwrap(), BigRational::from_integer(central.clone()));
            assert_eq!(free_binomial_moment_exact(n, &BigRational::one()).unwrap(), BigRational::one());
        }
        assert!((free_binomial_moment(1, 3.5).unwrap() - 3.5).abs() < 1e-12);
        assert!(free_binomial_moment(2, 0.5).is_err());
    }

    #[test]
    fn free_binomial_word_model() {
        let full = AlgebraDescriptor::full(2);
        let a = AlgElement::from_real(full, &[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let w = BWord::new(d2(), vec![diag(1.0, 2.0), diag(3.0, 5.0), diag(1.0, 1.0)]).unwrap();
        // b0 a b1 a b2 = diag(5, 6), times m_1(2) = 2
        let got = free_binomial_word_moment(&a, &w, 2.0).unwrap();
        assert!(got.approx_eq(&diag(10.0, 12.0), 0.0, 1e-12));
        let bad = AlgElement::from_real(full, &[&[1.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!(free_binomial_word_moment(&bad, &w, 2.0).is_err());
    }

    #[test]
    fn moment_table_reconstructs_words() {
        let p = sample_params();
        let table = moment_table(&p, 4).unwrap();
        let w = BWord::new(d2(), vec![diag(1.0, 2.0), diag(-1.0, 0.5), diag(2.0, 3.0), diag(0.5, 1.0), diag(1.0, -2.0)])
            .unwrap();
        assert!(table.evaluate(&w).unwrap().approx_eq(&moment(&p, &w).unwrap(), 1e-12, 1e-12));
    }

    #[test]
    fn poisson_limit_small_n() {
        let alg = AlgebraDescriptor::scalar();
        let one = scalar(1.0);
        let report = poisson_limit_check(1, &one, &one, &LinMapRep::identity(alg), 4).unwrap();
        assert!(report.error_at(4) > 0.1);
        let report = poisson_limit_check(50, &one, &one, &LinMapRep::identity(alg), 4).unwrap();
        assert!(report.error_at(4) < 5.0 / 50.0);
    }

    #[test]
    fn json_roundtrip() {
        let p = sample_params();
        let back = JacobiParams::from_json(&p.to_json()).unwrap();
        assert!(back.distance(&p, 4) == 0.0);
        assert_eq!(back.positive(), p.positive());
        let w = BWord::new(d2(), vec![diag(1.0, 2.0), diag(3.0, 4.0)]).unwrap();
        assert_eq!(BWord::from_json(&w.to_json()).unwrap(), w);
        assert!(matches!(JacobiParams::from_json(&json!({"algebra": {"kind": "full", "dim": 1}})), Err(NcError::Schema(_))));
    }
}

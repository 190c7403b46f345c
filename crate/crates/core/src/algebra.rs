//! Finite-dimensional realizations of the base algebra: the full matrix
//! algebra `M_d` and its diagonal subalgebra `D_d`, their elements, linear
//! self-maps (Kraus or dense form), amplifications and the conditional
//! expectation onto the diagonal.
//!
//! Dense maps act on column-major vectorizations, so that
//! `vec(A b A*) = (conj(A) ⊗ A) vec(b)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{NcError, Result};

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;

/// Absolute tolerance used for structural checks (membership, equality).
pub const ABS_TOL: f64 = 1e-12;
/// Relative tolerance used for equality of computed values.
pub const REL_TOL: f64 = 1e-9;
/// Eigenvalue floor for positive semidefiniteness tests.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraKind {
    Full,
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraDescriptor {
    pub kind: AlgebraKind,
    pub dim: usize,
}

impl AlgebraDescriptor {
    pub fn full(dim: usize) -> Self {
        assert!(dim >= 1, "algebra dimension must be positive");
        AlgebraDescriptor { kind: AlgebraKind::Full, dim }
    }

    pub fn diagonal(dim: usize) -> Self {
        assert!(dim >= 1, "algebra dimension must be positive");
        AlgebraDescriptor { kind: AlgebraKind::Diagonal, dim }
    }

    /// The scalars, realized as `M_1`.
    pub fn scalar() -> Self {
        AlgebraDescriptor::full(1)
    }

    pub fn is_scalar(&self) -> bool {
        self.dim == 1
    }

    /// Vector-space dimension of the algebra.
    pub fn linear_dim(&self) -> usize {
        match self.kind {
            AlgebraKind::Full => self.dim * self.dim,
            AlgebraKind::Diagonal => self.dim,
        }
    }

    /// Matrix units spanning the algebra, in column-major order of their
    /// nonzero entry.
    pub fn basis(&self) -> Vec<AlgElement> {
        let d = self.dim;
        match self.kind {
            AlgebraKind::Full => (0..d)
                .flat_map(|j| (0..d).map(move |i| (i, j)))
                .map(|(i, j)| AlgElement::unit(*self, i, j))
                .collect(),
            AlgebraKind::Diagonal => (0..d).map(|i| AlgElement::unit(*self, i, i)).collect(),
        }
    }

    /// Matrix positions `(row, col)` carrying the algebra's coordinates, in
    /// the same order as [`AlgebraDescriptor::basis`].
    pub fn coordinates(&self) -> Vec<(usize, usize)> {
        let d = self.dim;
        match self.kind {
            AlgebraKind::Full => (0..d).flat_map(|j| (0..d).map(move |i| (i, j))).collect(),
            AlgebraKind::Diagonal => (0..d).map(|i| (i, i)).collect(),
        }
    }

    pub fn contains(&self, m: &Mat) -> bool {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return false;
        }
        match self.kind {
            AlgebraKind::Full => true,
            AlgebraKind::Diagonal => {
                let scale = 1.0 + m.iter().map(|z| z.norm()).fold(0.0, f64::max);
                (0..self.dim).all(|i| {
                    (0..self.dim).all(|j| i == j || m[(i, j)].norm() <= ABS_TOL * scale)
                })
            }
        }
    }

    fn project(&self, mut m: Mat) -> Mat {
        if self.kind == AlgebraKind::Diagonal {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    if i != j {
                        m[(i, j)] = C64::new(0.0, 0.0);
                    }
                }
            }
        }
        m
    }

    pub(crate) fn expect(&self, other: &AlgebraDescriptor) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(NcError::AlgebraMismatch { expected: self.to_string(), found: other.to_string() })
        }
    }
}

impl fmt::Display for AlgebraDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            AlgebraKind::Full => write!(f, "M_{}", self.dim),
            AlgebraKind::Diagonal => write!(f, "D_{}", self.dim),
        }
    }
}

/// An element of a finite-dimensional algebra, stored as its `d×d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgElement {
    algebra: AlgebraDescriptor,
    entries: Mat,
}

impl AlgElement {
    pub fn new(algebra: AlgebraDescriptor, entries: Mat) -> Result<Self> {
        if !algebra.contains(&entries) {
            return Err(NcError::InvalidArgument(format!(
                "a {}x{} matrix is not an element of {algebra}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let entries = algebra.project(entries);
        Ok(AlgElement { algebra, entries })
    }

    pub fn from_real(algebra: AlgebraDescriptor, rows: &[&[f64]]) -> Result<Self> {
        let d = rows.len();
        let m = Mat::from_fn(d, d, |i, j| C64::new(rows[i][j], 0.0));
        AlgElement::new(algebra, m)
    }

    pub fn diag(algebra: AlgebraDescriptor, values: &[f64]) -> Result<Self> {
        let m = Mat::from_fn(values.len(), values.len(), |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        AlgElement::new(algebra, m)
    }

    pub fn zero(algebra: AlgebraDescriptor) -> Self {
        AlgElement { algebra, entries: Mat::zeros(algebra.dim, algebra.dim) }
    }

    pub fn one(algebra: AlgebraDescriptor) -> Self {
        AlgElement { algebra, entries: Mat::identity(algebra.dim, algebra.dim) }
    }

    pub fn scalar(algebra: AlgebraDescriptor, c: C64) -> Self {
        AlgElement { algebra, entries: Mat::identity(algebra.dim, algebra.dim) * c }
    }

    /// Matrix unit `e_{ij}` (0-based indices).
    pub fn unit(algebra: AlgebraDescriptor, i: usize, j: usize) -> Self {
        let mut m = Mat::zeros(algebra.dim, algebra.dim);
        m[(i, j)] = C64::new(1.0, 0.0);
        AlgElement { algebra, entries: m }
    }

    pub fn algebra(&self) -> AlgebraDescriptor {
        self.algebra
    }

    pub fn entries(&self) -> &Mat {
        &self.entries
    }

    pub fn into_entries(self) -> Mat {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim
    }

    /// Scalar value of an element of `M_1`.
    pub fn as_scalar(&self) -> Option<C64> {
        (self.algebra.dim == 1).then(|| self.entries[(0, 0)])
    }

    pub fn adjoint(&self) -> Self {
        AlgElement { algebra: self.algebra, entries: self.entries.adjoint() }
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        (&self.entries - self.entries.adjoint()).iter().all(|z| z.norm() <= tol)
    }

    pub fn scale(&self, c: C64) -> Self {
        AlgElement { algebra: self.algebra, entries: &self.entries * c }
    }

    pub fn scale_real(&self, t: f64) -> Self {
        self.scale(C64::new(t, 0.0))
    }

    /// Operator norm (largest singular value).
    pub fn norm(&self) -> f64 {
        if self.entries.iter().all(|z| z.norm() == 0.0) {
            return 0.0;
        }
        self.entries.clone().svd(false, false).singular_values.max()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn inverse(&self) -> Option<Self> {
        self.entries
            .clone()
            .try_inverse()
            .map(|m| AlgElement { algebra: self.algebra, entries: self.algebra.project(m) })
    }

    /// Entrywise comparison: `|x - y| <= abs + rel * max(|x|, |y|)` over the
    /// largest entries.
    pub fn approx_eq(&self, other: &AlgElement, rel: f64, abs: f64) -> bool {
        self.distance(other) <= abs + rel * self.max_abs().max(other.max_abs())
    }

    /// Largest entrywise deviation.
    pub fn distance(&self, other: &AlgElement) -> f64 {
        (&self.entries - &other.entries).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Coordinates in the basis of [`AlgebraDescriptor::basis`].
    pub fn coordinates(&self) -> Vec<C64> {
        self.algebra.coordinates().into_iter().map(|(i, j)| self.entries[(i, j)]).collect()
    }

    fn result_algebra(&self, other: &AlgElement) -> AlgebraDescriptor {
        debug_assert_eq!(self.algebra.dim, other.algebra.dim, "algebra dimension mismatch");
        if self.algebra == other.algebra {
            self.algebra
        } else {
            AlgebraDescriptor::full(self.algebra.dim)
        }
    }
}

impl fmt::Display for AlgElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", serde_json::to_string(&self.to_json()).map_err(|_| fmt::Error)?)
    }
}

impl<'a> Mul<&'a AlgElement> for &'a AlgElement {
    type Output = AlgElement;
    fn mul(self, rhs: &'a AlgElement) -> AlgElement {
        AlgElement { algebra: self.result_algebra(rhs), entries: &self.entries * &rhs.entries }
    }
}

impl<'a> Add<&'a AlgElement> for &'a AlgElement {
    type Output = AlgElement;
    fn add(self, rhs: &'a AlgElement) -> AlgElement {
        AlgElement { algebra: self.result_algebra(rhs), entries: &self.entries + &rhs.entries }
    }
}

impl<'a> Sub<&'a AlgElement> for &'a AlgElement {
    type Output = AlgElement;
    fn sub(self, rhs: &'a AlgElement) -> AlgElement {
        AlgElement { algebra: self.result_algebra(rhs), entries: &self.entries - &rhs.entries }
    }
}

impl Neg for &AlgElement {
    type Output = AlgElement;
    fn neg(self) -> AlgElement {
        AlgElement { algebra: self.algebra, entries: -&self.entries }
    }
}

impl Add for AlgElement {
    type Output = AlgElement;
    fn add(self, rhs: AlgElement) -> AlgElement {
        &self + &rhs
    }
}

impl Sub for AlgElement {
    type Output = AlgElement;
    fn sub(self, rhs: AlgElement) -> AlgElement {
        &self - &rhs
    }
}

impl Mul for AlgElement {
    type Output = AlgElement;
    fn mul(self, rhs: AlgElement) -> AlgElement {
        &self * &rhs
    }
}

/// Product `b_0 b_1 ... b_n` of a nonempty list.
pub fn product<'a>(items: impl IntoIterator<Item = &'a AlgElement>) -> Option<AlgElement> {
    let mut it = items.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, b| &acc * b))
}

// ---------------------------------------------------------------------------
// Linear maps

#[derive(Clone, Debug, PartialEq)]
pub enum MapForm {
    /// `b ↦ Σ_s A_s b A_s*`
    Kraus(Vec<Mat>),
    /// `d²×d²` matrix acting on column-major vectorizations.
    Dense(Mat),
}

/// A linear self-map of the base algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct LinMapRep {
    algebra: AlgebraDescriptor,
    form: MapForm,
    is_cp: bool,
}

impl LinMapRep {
    pub fn kraus(algebra: AlgebraDescriptor, ops: Vec<Mat>) -> Result<Self> {
        for a in &ops {
            if a.nrows() != algebra.dim || a.ncols() != algebra.dim {
                return Err(NcError::InvalidArgument(format!(
                    "Kraus operator of shape {}x{} on {algebra}",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        let map = LinMapRep { algebra, form: MapForm::Kraus(ops), is_cp: true };
        map.check_preserves_algebra()?;
        Ok(map)
    }

    pub fn dense(algebra: AlgebraDescriptor, matrix: Mat) -> Result<Self> {
        let n = algebra.dim * algebra.dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(NcError::InvalidArgument(format!(
                "dense map on {algebra} must be {n}x{n}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut map = LinMapRep { algebra, form: MapForm::Dense(matrix), is_cp: false };
        map.check_preserves_algebra()?;
        map.is_cp = map.choi_is_psd();
        Ok(map)
    }

    pub fn identity(algebra: AlgebraDescriptor) -> Self {
        LinMapRep {
            algebra,
            form: MapForm::Kraus(vec![Mat::identity(algebra.dim, algebra.dim)]),
            is_cp: true,
        }
    }

    pub fn zero(algebra: AlgebraDescriptor) -> Self {
        LinMapRep { algebra, form: MapForm::Kraus(Vec::new()), is_cp: true }
    }

    /// `b ↦ t·b`.
    pub fn scalar(algebra: AlgebraDescriptor, t: f64) -> Self {
        LinMapRep::identity(algebra).scale(t)
    }

    /// `b ↦ a b a*`.
    pub fn conjugation(a: &AlgElement) -> Self {
        LinMapRep { algebra: a.algebra, form: MapForm::Kraus(vec![a.entries.clone()]), is_cp: true }
    }

    /// The swap `diag(x, y) ↦ diag(y, x)` on `D_2`, with Kraus operators
    /// `e_12`, `e_21`.
    pub fn flip() -> Self {
        let alg = AlgebraDescriptor::diagonal(2);
        let mut e12 = Mat::zeros(2, 2);
        e12[(0, 1)] = C64::new(1.0, 0.0);
        let e21 = e12.transpose();
        LinMapRep { algebra: alg, form: MapForm::Kraus(vec![e12, e21]), is_cp: true }
    }

    pub fn algebra(&self) -> AlgebraDescriptor {
        self.algebra
    }

    pub fn form(&self) -> &MapForm {
        &self.form
    }

    pub fn is_cp(&self) -> bool {
        self.is_cp
    }

    pub fn is_zero(&self) -> bool {
        match &self.form {
            MapForm::Kraus(ops) => ops.iter().all(|a| a.iter().all(|z| z.norm() == 0.0)),
            MapForm::Dense(m) => m.iter().all(|z| z.norm() == 0.0),
        }
    }

    /// Applies the map. Panics on dimension mismatch; see [`apply_map`] for
    /// the checked version.
    pub fn apply(&self, b: &AlgElement) -> AlgElement {
        debug_assert_eq!(self.algebra.dim, b.algebra.dim);
        let d = self.algebra.dim;
        let out = match &self.form {
            MapForm::Kraus(ops) => {
                let mut acc = Mat::zeros(d, d);
                for a in ops {
                    acc += a * &b.entries * a.adjoint();
                }
                acc
            }
            MapForm::Dense(m) => {
                let v = nalgebra::DVector::from_column_slice(b.entries.as_slice());
                let w = m * v;
                Mat::from_column_slice(d, d, w.as_slice())
            }
        };
        let algebra = if b.algebra == self.algebra { self.algebra } else { b.algebra };
        AlgElement { algebra, entries: algebra.project(out) }
    }

    pub fn to_dense(&self) -> Mat {
        match &self.form {
            MapForm::Dense(m) => m.clone(),
            MapForm::Kraus(ops) => {
                let n = self.algebra.dim * self.algebra.dim;
                let mut acc = Mat::zeros(n, n);
                for a in ops {
                    acc += a.conjugate().kronecker(a);
                }
                acc
            }
        }
    }

    /// Same map in dense form.
    pub fn densified(&self) -> LinMapRep {
        LinMapRep { algebra: self.algebra, form: MapForm::Dense(self.to_dense()), is_cp: self.is_cp }
    }

    /// Choi matrix `Σ_{ij} e_ij ⊗ α(e_ij)`.
    pub fn choi(&self) -> Mat {
        let d = self.algebra.dim;
        let mut c = Mat::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let img = self.apply_raw(i, j);
                for r in 0..d {
                    for s in 0..d {
                        c[(i * d + r, j * d + s)] = img[(r, s)];
                    }
                }
            }
        }
        c
    }

    fn apply_raw(&self, i: usize, j: usize) -> Mat {
        let d = self.algebra.dim;
        let full = AlgebraDescriptor::full(d);
        let unit = AlgElement::unit(full, i, j);
        let mut m = self.clone();
        m.algebra = full;
        m.apply(&unit).entries
    }

    /// Complete positivity via the Choi matrix (minimal eigenvalue at least
    /// `-PSD_TOL`).
    pub fn choi_is_psd(&self) -> bool {
        let c = self.choi();
        hermitian_min_eigenvalue(&c).is_some_and(|m| m >= -PSD_TOL)
    }

    fn check_preserves_algebra(&self) -> Result<()> {
        if self.algebra.kind != AlgebraKind::Diagonal {
            return Ok(());
        }
        for (i, _) in self.algebra.coordinates() {
            let img = self.apply_raw(i, i);
            if !self.algebra.contains(&img) {
                return Err(NcError::InvalidArgument(format!(
                    "map does not preserve the diagonal subalgebra (image of e_{}{})",
                    i + 1,
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// `t·α`; Kraus form is kept for `t ≥ 0`.
    pub fn scale(&self, t: f64) -> LinMapRep {
        match &self.form {
            MapForm::Kraus(ops) if t >= 0.0 => LinMapRep {
                algebra: self.algebra,
                form: MapForm::Kraus(ops.iter().map(|a| a * C64::new(t.sqrt(), 0.0)).collect()),
                is_cp: true,
            },
            _ => {
                let m = self.to_dense() * C64::new(t, 0.0);
                let is_cp = (self.is_cp && t >= 0.0) || t == 0.0;
                LinMapRep { algebra: self.algebra, form: MapForm::Dense(m), is_cp }
            }
        }
    }

    /// Upper bound for the operator norm of the map on `(algebra, ‖·‖_op)`.
    pub fn norm_bound(&self) -> f64 {
        if self.is_cp {
            // ‖α‖ = ‖α(1)‖ for completely positive maps
            self.apply(&AlgElement::one(self.algebra)).norm()
        } else {
            let d = self.algebra.dim as f64;
            let m = self.to_dense();
            if m.iter().all(|z| z.norm() == 0.0) {
                return 0.0;
            }
            d.sqrt() * m.svd(false, false).singular_values.max()
        }
    }

    /// Entrywise distance between dense forms.
    pub fn distance(&self, other: &LinMapRep) -> f64 {
        (self.to_dense() - other.to_dense()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &LinMapRep, tol: f64) -> bool {
        self.algebra.dim == other.algebra.dim && self.distance(other) <= tol
    }
}

/// Checked application of a map to an element of the same algebra.
pub fn apply_map(m: &LinMapRep, b: &AlgElement) -> Result<AlgElement> {
    m.algebra.expect(&b.algebra)?;
    Ok(m.apply(b))
}

/// `m1 ∘ m2` in dense form.
pub fn compose_maps(m1: &LinMapRep, m2: &LinMapRep) -> Result<LinMapRep> {
    m1.algebra.expect(&m2.algebra)?;
    LinMapRep::dense(m1.algebra, m1.to_dense() * m2.to_dense())
}

/// `m1 + m2` in dense form.
pub fn add_maps(m1: &LinMapRep, m2: &LinMapRep) -> Result<LinMapRep> {
    m1.algebra.expect(&m2.algebra)?;
    LinMapRep::dense(m1.algebra, m1.to_dense() + m2.to_dense())
}

/// `t·m` in dense form.
pub fn scale_map(m: &LinMapRep, t: f64) -> LinMapRep {
    let is_cp = (m.is_cp && t >= 0.0) || t == 0.0;
    LinMapRep { algebra: m.algebra, form: MapForm::Dense(m.to_dense() * C64::new(t, 0.0)), is_cp }
}

/// `1_{d_outer} ⊗ b`, an element of `M_{d_outer}(B)` realized in `M_{d_outer·d}`.
pub fn amplify_element(b: &AlgElement, d_outer: usize) -> AlgElement {
    let alg = amplified_algebra(b.algebra, d_outer);
    AlgElement { algebra: alg, entries: Mat::identity(d_outer, d_outer).kronecker(&b.entries) }
}

/// `e ⊗ b` for a `d_outer×d_outer` scalar matrix `e`.
pub fn tensor_element(e: &Mat, b: &AlgElement) -> AlgElement {
    let alg = amplified_algebra(b.algebra, e.nrows());
    AlgElement { algebra: alg, entries: e.kronecker(&b.entries) }
}

fn amplified_algebra(inner: AlgebraDescriptor, d_outer: usize) -> AlgebraDescriptor {
    if d_outer == 1 {
        inner
    } else {
        AlgebraDescriptor::full(d_outer * inner.dim)
    }
}

/// `I_{d_outer} ⊗ α`: applies `α` to every `d×d` block.
pub fn amplify_map(m: &LinMapRep, d_outer: usize) -> LinMapRep {
    let alg = amplified_algebra(m.algebra, d_outer);
    match &m.form {
        MapForm::Kraus(ops) => LinMapRep {
            algebra: alg,
            form: MapForm::Kraus(
                ops.iter().map(|a| Mat::identity(d_outer, d_outer).kronecker(a)).collect(),
            ),
            is_cp: true,
        },
        MapForm::Dense(_) => {
            let d = m.algebra.dim;
            let big = d_outer * d;
            let inner_full = AlgebraDescriptor::full(d);
            let mut inner = m.clone();
            inner.algebra = inner_full;
            let mut dense = Mat::zeros(big * big, big * big);
            for col in 0..big {
                for row in 0..big {
                    let (bi, bj) = (row / d, col / d);
                    let unit = AlgElement::unit(inner_full, row % d, col % d);
                    let img = inner.apply(&unit).entries;
                    let src = col * big + row;
                    for s in 0..d {
                        for r in 0..d {
                            let dst = (bj * d + s) * big + (bi * d + r);
                            dense[(dst, src)] = img[(r, s)];
                        }
                    }
                }
            }
            LinMapRep { algebra: alg, form: MapForm::Dense(dense), is_cp: m.is_cp }
        }
    }
}

/// Conditional expectation `M_d → D_d` that zeroes off-diagonal entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConditionalExpectation {
    pub source: AlgebraDescriptor,
    pub target: AlgebraDescriptor,
}

impl ConditionalExpectation {
    pub fn onto_diagonal(dim: usize) -> Self {
        ConditionalExpectation {
            source: AlgebraDescriptor::full(dim),
            target: AlgebraDescriptor::diagonal(dim),
        }
    }

    pub fn apply(&self, x: &AlgElement) -> AlgElement {
        AlgElement { algebra: self.target, entries: self.target.project(x.entries.clone()) }
    }
}

/// Smallest eigenvalue of the Hermitian part; `None` if the matrix is not
/// Hermitian within tolerance.
pub fn hermitian_min_eigenvalue(m: &Mat) -> Option<f64> {
    let scale = 1.0 + m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let skew = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if skew > 1e-9 * scale {
        return None;
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    Some(h.symmetric_eigenvalues().min())
}

/// Positive semidefiniteness of the block matrix `[g_ij]` assembled from a
/// square grid of algebra elements.
pub fn gram_psd_check(grid: &[Vec<AlgElement>]) -> Result<bool> {
    let n = grid.len();
    if grid.iter().any(|row| row.len() != n) {
        return Err(NcError::InvalidArgument("Gram grid is not square".into()));
    }
    if n == 0 {
        return Ok(true);
    }
    let d = grid[0][0].dim();
    let mut big = Mat::zeros(n * d, n * d);
    for (i, row) in grid.iter().enumerate() {
        for (j, g) in row.iter().enumerate() {
            if g.dim() != d {
                return Err(NcError::InvalidArgument("Gram grid mixes algebras".into()));
            }
            big.view_mut((i * d, j * d), (d, d)).copy_from(&g.entries);
        }
    }
    Ok(hermitian_min_eigenvalue(&big).is_some_and(|m| m >= -PSD_TOL))
}

// ---------------------------------------------------------------------------
// JSON wire format: complex as [re, im], matrices as row-major rows.

pub fn mat_to_json(m: &Mat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn mat_from_json(v: &Value) -> Result<Mat> {
    let rows = v.as_array().ok_or_else(|| NcError::Schema("matrix must be an array of rows".into()))?;
    let n = rows.len();
    let mut cells = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| NcError::Schema(format!("matrix row {i} is not an array")))?;
        let parsed: Vec<C64> = row
            .iter()
            .enumerate()
            .map(|(j, c)| complex_from_json(c).map_err(|e| NcError::Schema(format!("entry [{i}][{j}]: {e}"))))
            .collect::<Result<_>>()?;
        cells.push(parsed);
    }
    let m = cells.first().map_or(0, Vec::len);
    if cells.iter().any(|r| r.len() != m) {
        return Err(NcError::Schema("matrix rows have different lengths".into()));
    }
    Ok(Mat::from_fn(n, m, |i, j| cells[i][j]))
}

fn complex_from_json(v: &Value) -> Result<C64> {
    match v {
        Value::Number(x) => Ok(C64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(parts) if parts.len() == 2 => {
            let re = parts[0].as_f64();
            let im = parts[1].as_f64();
            match (re, im) {
                (Some(re), Some(im)) => Ok(C64::new(re, im)),
                _ => Err(NcError::Schema("complex parts must be numbers".into())),
            }
        }
        _ => Err(NcError::Schema("complex number must be [re, im]".into())),
    }
}

impl AlgElement {
    pub fn to_json(&self) -> Value {
        serde_json::json!({ "algebra": self.algebra, "entries": mat_to_json(&self.entries) })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let algebra: AlgebraDescriptor = serde_json::from_value(
            v.get("algebra").cloned().ok_or_else(|| NcError::Schema("missing `algebra`".into()))?,
        )
        .map_err(|e| NcError::Schema(format!("algebra: {e}")))?;
        if algebra.dim == 0 {
            return Err(NcError::Schema("algebra: dim must be positive".into()));
        }
        let entries = mat_from_json(
            v.get("entries").ok_or_else(|| NcError::Schema("missing `entries`".into()))?,
        )?;
        AlgElement::new(algebra, entries).map_err(|e| NcError::Schema(format!("entries: {e}")))
    }
}

impl LinMapRep {
    pub fn to_json(&self) -> Value {
        match &self.form {
            MapForm::Kraus(ops) => {
                serde_json::json!({ "kraus": ops.iter().map(mat_to_json).collect::<Vec<_>>() })
            }
            MapForm::Dense(m) => serde_json::json!({ "dense": mat_to_json(m) }),
        }
    }

    pub fn from_json(v: &Value, algebra: AlgebraDescriptor) -> Result<Self> {
        if let Some(ops) = v.get("kraus") {
            let ops = ops.as_array().ok_or_else(|| NcError::Schema("`kraus` must be an array".into()))?;
            let mats = ops.iter().map(mat_from_json).collect::<Result<Vec<_>>>()?;
            LinMapRep::kraus(algebra, mats).map_err(|e| NcError::Schema(format!("kraus: {e}")))
        } else if let Some(m) = v.get("dense") {
            LinMapRep::dense(algebra, mat_from_json(m)?).map_err(|e| NcError::Schema(format!("dense: {e}")))
        } else {
            Err(NcError::Schema("linear map needs `kraus` or `dense`".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn flip_map_swaps_diagonal() {
        let d2 = AlgebraDescriptor::diagonal(2);
        let b = AlgElement::diag(d2, &[3.0, 2.0]).unwrap();
        let out = apply_map(&LinMapRep::flip(), &b).unwrap();
        assert_eq!(out, AlgElement::diag(d2, &[2.0, 3.0]).unwrap());
        let dense = LinMapRep::flip().densified();
        let e11 = AlgElement::unit(d2, 0, 0);
        assert!(dense.apply(&e11).approx_eq(&AlgElement::unit(d2, 1, 1), 0.0, 1e-15));
    }

    #[test]
    fn identity_and_scaling() {
        let m2 = AlgebraDescriptor::full(2);
        let b = AlgElement::from_real(m2, &[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(apply_map(&LinMapRep::identity(m2), &b).unwrap(), b);
        let tripled = scale_map(&LinMapRep::identity(m2), 3.0).apply(&b);
        assert!(tripled.approx_eq(&b.scale_real(3.0), 0.0, 1e-14));
        let composed = compose_maps(&LinMapRep::identity(AlgebraDescriptor::diagonal(2)), &LinMapRep::flip()).unwrap();
        assert!(composed.approx_eq(&LinMapRep::flip(), 1e-14));
    }

    #[test]
    fn sum_of_flip_and_identity() {
        let d2 = AlgebraDescriptor::diagonal(2);
        let sum = add_maps(&LinMapRep::flip(), &LinMapRep::identity(d2)).unwrap();
        assert!(sum.apply(&AlgElement::unit(d2, 0, 0)).approx_eq(&AlgElement::one(d2), 0.0, 1e-14));
        assert!(sum.is_cp());
    }

    #[test]
    fn negative_map_is_not_cp() {
        let m2 = AlgebraDescriptor::full(2);
        let neg = scale_map(&LinMapRep::identity(m2), -1.0);
        assert!(!neg.is_cp());
        assert!(!LinMapRep::dense(m2, neg.to_dense()).unwrap().is_cp());
        // transpose is positive but not completely positive
        let mut t = Mat::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                t[(i * 2 + j, j * 2 + i)] = c(1.0);
            }
        }
        assert!(!LinMapRep::dense(m2, t).unwrap().is_cp());
    }

    #[test]
    fn non_diagonal_preserving_map_rejected() {
        let d2 = AlgebraDescriptor::diagonal(2);
        let mut a = Mat::zeros(2, 2);
        a[(0, 0)] = c(1.0);
        a[(1, 0)] = c(1.0);
        assert!(LinMapRep::kraus(d2, vec![a]).is_err());
    }

    #[test]
    fn amplification_examples() {
        let m1 = AlgebraDescriptor::scalar();
        let id3 = amplify_map(&LinMapRep::identity(m1), 3);
        let m3 = AlgebraDescriptor::full(3);
        let x = AlgElement::from_real(m3, &[&[1.0, 2.0, 0.5], &[0.0, 1.0, 4.0], &[2.0, 1.0, 0.0]]).unwrap();
        assert!(id3.apply(&x).approx_eq(&x, 0.0, 1e-14));

        let d2 = AlgebraDescriptor::diagonal(2);
        let lam = AlgElement::diag(d2, &[1.0, 2.0]).unwrap();
        let amp = amplify_element(&lam, 2);
        let expect = AlgElement::diag(AlgebraDescriptor::full(4), &[1.0, 2.0, 1.0, 2.0]).unwrap();
        assert_eq!(amp, expect);

        // blockwise flip on a 2x2 matrix of diagonal blocks
        let blocks = [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]];
        let mut big = Mat::zeros(4, 4);
        for (k, vals) in blocks.iter().enumerate() {
            let (bi, bj) = (k / 2, k % 2);
            big[(2 * bi, 2 * bj)] = c(vals[0]);
            big[(2 * bi + 1, 2 * bj + 1)] = c(vals[1]);
        }
        let x = AlgElement::new(AlgebraDescriptor::full(4), big).unwrap();
        for form in [LinMapRep::flip(), LinMapRep::flip().densified()] {
            let y = amplify_map(&form, 2).apply(&x);
            for (k, vals) in blocks.iter().enumerate() {
                let (bi, bj) = (k / 2, k % 2);
                assert!((y.entries()[(2 * bi, 2 * bj)] - c(vals[1])).norm() < 1e-14);
                assert!((y.entries()[(2 * bi + 1, 2 * bj + 1)] - c(vals[0])).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn gram_examples() {
        let m1 = AlgebraDescriptor::scalar();
        let s = |v: f64| AlgElement::scalar(m1, c(v));
        assert!(gram_psd_check(&[vec![s(1.0)]]).unwrap());
        // semicircle Hankel block [[m2, m3], [m3, m4]] = [[1, 0], [0, 2]]
        assert!(gram_psd_check(&[vec![s(1.0), s(0.0)], vec![s(0.0), s(2.0)]]).unwrap());
        assert!(!gram_psd_check(&[vec![s(1.0), s(2.0)], vec![s(2.0), s(1.0)]]).unwrap());
        assert!(gram_psd_check(&[vec![s(1.0), s(2.0)]]).is_err());
    }

    #[test]
    fn conditional_expectation_properties() {
        let e = ConditionalExpectation::onto_diagonal(2);
        let m2 = AlgebraDescriptor::full(2);
        let x = AlgElement::from_real(m2, &[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let ex = e.apply(&x);
        assert_eq!(e.apply(&ex), ex);
        assert_eq!(e.apply(&AlgElement::one(m2)), AlgElement::one(AlgebraDescriptor::diagonal(2)));
    }

    #[test]
    fn json_roundtrip_element_and_map() {
        let d2 = AlgebraDescriptor::diagonal(2);
        let b = AlgElement::diag(d2, &[1.5, -2.0]).unwrap();
        let back = AlgElement::from_json(&b.to_json()).unwrap();
        assert_eq!(back, b);
        let m = LinMapRep::flip();
        let back = LinMapRep::from_json(&m.to_json(), d2).unwrap();
        assert!(back.approx_eq(&m, 0.0));
        assert!(AlgElement::from_json(&serde_json::json!({"algebra": {"kind": "diagonal", "dim": 2},
            "entries": [[[1,0],[1,0]],[[0,0],[1,0]]]})).is_err());
    }
}

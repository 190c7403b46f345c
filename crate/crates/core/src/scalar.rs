//! Scalar-valued machinery: Chebyshev polynomials, the measures `ν_k`,
//! moment/cumulant transforms, free convolution of moment sequences, the
//! subordination identities and the even-moment recursion for `ν_k ⊞ ν_k`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Num, One, Zero};

use crate::jacobi::ratio_to_f64;
use crate::partitions::{enumerate_nc2, odd_compositions};
use crate::{NcError, Result};

/// Minimal distance from the spectrum accepted by Cauchy-transform samples.
pub const SPECTRUM_GUARD: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Formal power series over a field, truncated to a common length.

pub fn series_mul<T: Num + Clone>(a: &[T], b: &[T], len: usize) -> Vec<T> {
    let mut out = vec![T::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

/// `1/a`; requires an invertible constant term.
pub fn series_inv<T: Num + Clone>(a: &[T], len: usize) -> Vec<T> {
    assert!(!a.is_empty() && !a[0].is_zero(), "series constant term must be invertible");
    let mut out = vec![T::zero(); len];
    if len == 0 {
        return out;
    }
    out[0] = T::one() / a[0].clone();
    for n in 1..len {
        let mut acc = T::zero();
        for k in 1..=n.min(a.len() - 1) {
            acc = acc + a[k].clone() * out[n - k].clone();
        }
        out[n] = T::zero() - acc * out[0].clone();
    }
    out
}

/// Square root of a series with constant term 1.
pub fn series_sqrt<T: Num + Clone>(a: &[T], len: usize) -> Vec<T> {
    assert!(!a.is_empty() && a[0].is_one(), "series square root needs constant term 1");
    let two = T::one() + T::one();
    let mut s = vec![T::zero(); len];
    if len == 0 {
        return s;
    }
    s[0] = T::one();
    for n in 1..len {
        let mut acc = a.get(n).cloned().unwrap_or_else(T::zero);
        for i in 1..n {
            acc = acc - s[i].clone() * s[n - i].clone();
        }
        s[n] = acc / two.clone();
    }
    s
}

// ---------------------------------------------------------------------------
// Chebyshev polynomials of the second kind, U_k(2 cos θ) = sin((k+1)θ)/sin θ

/// Integer coefficients of `U_k`, lowest degree first.
pub fn chebyshev_u_coeffs(k: usize) -> Vec<BigInt> {
    let mut prev = vec![BigInt::one()];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![BigInt::zero(), BigInt::one()];
    for _ in 1..k {
        let mut next = vec![BigInt::zero(); cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// `U_k(z)` by the three-term recurrence.
pub fn chebyshev_u(k: usize, z: Complex64) -> Complex64 {
    let (mut prev, mut cur) = (Complex64::new(1.0, 0.0), z);
    if k == 0 {
        return prev;
    }
    for _ in 1..k {
        let next = z * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Moments of `ν_k` read off the expansion of `U_{k-1}(z)/U_k(z)` at infinity.
pub fn chebyshev_ratio_moments(k: usize, n_max: usize) -> Vec<BigInt> {
    assert!(k >= 1, "ν_k needs k ≥ 1");
    // with w = 1/z: U_{k-1}/U_k = w · B(w)/A(w), A, B reversed coefficient lists
    let reversed = |c: Vec<BigInt>| -> Vec<BigInt> { c.into_iter().rev().collect() };
    let a = reversed(chebyshev_u_coeffs(k));
    let b = reversed(chebyshev_u_coeffs(k - 1));
    let mut q = vec![BigInt::zero(); n_max + 1];
    for n in 0..=n_max {
        // A is monic at w^0, so the quotient stays integral
        let mut acc = b.get(n).cloned().unwrap_or_default();
        for j in 1..=n.min(a.len() - 1) {
            acc -= &a[j] * &q[n - j];
        }
        q[n] = acc;
    }
    q
}

// ---------------------------------------------------------------------------
// Atomic measures

#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl AtomicMeasure {
    /// Weights must sum to 1 within `1e-12`; entries down to `-1e-12` are
    /// clamped to zero.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() || atoms.is_empty() {
            return Err(NcError::InvalidArgument("atoms and weights must be nonempty and of equal length".into()));
        }
        if weights.iter().any(|&w| w < -1e-12) {
            return Err(NcError::InvalidArgument("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(NcError::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        let weights = weights.into_iter().map(|w| w.max(0.0)).collect();
        Ok(AtomicMeasure { atoms, weights })
    }

    pub fn dirac(x: f64) -> Self {
        AtomicMeasure { atoms: vec![x], weights: vec![1.0] }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Power sums `Σ a_j x_j^n` for `n = 0..=n_max`.
    pub fn moments(&self, n_max: usize) -> Vec<f64> {
        (0..=n_max)
            .map(|n| self.atoms.iter().zip(&self.weights).map(|(x, a)| a * x.powi(n as i32)).sum())
            .collect()
    }

    /// `G(z) = Σ a_j / (z - x_j)`.
    pub fn cauchy(&self, z: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, a) in self.atoms.iter().zip(&self.weights) {
            let gap = z - x;
            if *a > 0.0 && gap.norm() < SPECTRUM_GUARD {
                return Err(NcError::NearSpectrum { z: z.to_string(), distance: gap.norm() });
            }
            acc += a / gap;
        }
        Ok(acc)
    }
}

/// `ν_k`: atoms `2 cos(jπ/(k+1))`, weights `(1 - cos(2jπ/(k+1)))/(k+1)`.
pub fn nu_k(k: usize) -> Result<AtomicMeasure> {
    if k == 0 {
        return Err(NcError::InvalidArgument("ν_k needs k ≥ 1".into()));
    }
    if k == 1 {
        return Ok(AtomicMeasure::dirac(0.0));
    }
    let m = (k + 1) as f64;
    let pi = std::f64::consts::PI;
    let atoms = (1..=k).map(|j| 2.0 * (j as f64 * pi / m).cos()).collect();
    let mut weights: Vec<f64> = (1..=k).map(|j| (1.0 - (2.0 * j as f64 * pi / m).cos()) / m).collect();
    // absorb rounding so the weights sum to 1 exactly
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    AtomicMeasure::new(atoms, weights)
}

/// Top-left entry of `X_k^n`, where `X_k` is the `k×k` zero-diagonal
/// tridiagonal matrix with unit off-diagonals.
pub fn tridiagonal_moment(k: usize, n: usize) -> BigInt {
    assert!(k >= 1, "matrix size must be positive");
    let mut v = vec![BigInt::zero(); k];
    v[0] = BigInt::one();
    for _ in 0..n {
        let mut next = vec![BigInt::zero(); k];
        for i in 0..k {
            if i > 0 {
                next[i] += &v[i - 1];
            }
            if i + 1 < k {
                next[i] += &v[i + 1];
            }
        }
        v = next;
    }
    v.swap_remove(0)
}

/// `m_0, …, m_{n_max}` of `ν_k` from the tridiagonal matrix.
pub fn nu_k_moments(k: usize, n_max: usize) -> Vec<BigInt> {
    (0..=n_max).map(|n| tridiagonal_moment(k, n)).collect()
}

fn to_rationals(v: &[BigInt]) -> Vec<BigRational> {
    v.iter().map(|x| BigRational::from_integer(x.clone())).collect()
}

// ---------------------------------------------------------------------------
// Moments and free cumulants: m_n = Σ_{π ∈ NC(n)} Π κ_{|V|}

/// `κ_0, κ_1, …, κ_N` from `m_0 = 1, m_1, …, m_N` (index 0 holds zero).
pub fn moments_to_cumulants<T: Num + Clone>(m: &[T]) -> Result<Vec<T>> {
    if m.is_empty() || !m[0].is_one() {
        return Err(NcError::InvalidArgument("moment sequences start with m_0 = 1".into()));
    }
    let n_max = m.len() - 1;
    let mut kappa = vec![T::zero(); n_max + 1];
    // powers[s] = M(z)^s truncated
    let mut powers: Vec<Vec<T>> = vec![unit_series(n_max + 1)];
    for n in 1..=n_max {
        powers.push(series_mul(&powers[n - 1], m, n_max + 1));
        let mut acc = m[n].clone();
        for s in 1..n {
            acc = acc - kappa[s].clone() * powers[s][n - s].clone();
        }
        kappa[n] = acc;
    }
    Ok(kappa)
}

/// Inverse of [`moments_to_cumulants`]; `kappa[0]` is ignored.
pub fn cumulants_to_moments<T: Num + Clone>(kappa: &[T]) -> Vec<T> {
    let n_max = kappa.len().saturating_sub(1);
    let mut m = vec![T::zero(); n_max + 1];
    m[0] = T::one();
    for n in 1..=n_max {
        // [z^{n-s}] M^s only involves m_0..m_{n-1}
        let mut acc = T::zero();
        let mut power = unit_series(n_max + 1);
        for s in 1..=n {
            power = series_mul(&power, &m, n_max + 1);
            acc = acc + kappa[s].clone() * power[n - s].clone();
        }
        m[n] = acc;
    }
    m
}

fn unit_series<T: Num + Clone>(len: usize) -> Vec<T> {
    let mut v = vec![T::zero(); len];
    if len > 0 {
        v[0] = T::one();
    }
    v
}

/// Moments of `μ_1 ⊞ μ_2` through degree `n_max` by adding free cumulants.
pub fn free_convolve_scalar<T: Num + Clone>(m1: &[T], m2: &[T], n_max: usize) -> Result<Vec<T>> {
    if m1.len() <= n_max || m2.len() <= n_max {
        return Err(NcError::InvalidArgument(format!("need moments through degree {n_max}")));
    }
    let k1 = moments_to_cumulants(&m1[..=n_max])?;
    let k2 = moments_to_cumulants(&m2[..=n_max])?;
    let sum: Vec<T> = k1.into_iter().zip(k2).map(|(a, b)| a + b).collect();
    Ok(cumulants_to_moments(&sum))
}

/// Boolean cumulants: coefficients of `1 - 1/M(z)`.
pub fn boolean_cumulants<T: Num + Clone>(m: &[T]) -> Result<Vec<T>> {
    if m.is_empty() || !m[0].is_one() {
        return Err(NcError::InvalidArgument("moment sequences start with m_0 = 1".into()));
    }
    let inv = series_inv(m, m.len());
    Ok(inv.into_iter().enumerate().map(|(i, x)| if i == 0 { T::one() - x } else { T::zero() - x }).collect())
}

/// `|TCNC_2^{k,l}(2n)|` for `n = 1..=n_max` as even moments of `ν_k ⊞ ν_l`.
pub fn tcnc_counts_by_cumulants(k: usize, l: usize, n_max: usize) -> Vec<BigInt> {
    let deg = 2 * n_max;
    let m1 = to_rationals(&nu_k_moments(k, deg));
    let m2 = to_rationals(&nu_k_moments(l, deg));
    let conv = free_convolve_scalar(&m1, &m2, deg).expect("sequences start with 1");
    (1..=n_max)
        .map(|n| {
            let q = &conv[2 * n];
            debug_assert!(q.is_integer());
            q.to_integer()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Cauchy-transform identities

fn guard_real_axis(z: Complex64) -> Result<()> {
    // ν_k has support in [-2, 2]
    let dist = if z.re.abs() <= 2.0 { z.im.abs() } else { (z - Complex64::new(z.re.clamp(-2.0, 2.0), 0.0)).norm() };
    if dist < SPECTRUM_GUARD {
        return Err(NcError::NearSpectrum { z: z.to_string(), distance: dist });
    }
    Ok(())
}

/// `|G_{ν_n}(z) - 1/(z - G_{ν_{n-1}}(z))|` from the atomic sums.
pub fn g_recursion_check(n: usize, z: Complex64) -> Result<f64> {
    if n < 2 {
        return Err(NcError::InvalidArgument("the recursion needs n > 1".into()));
    }
    guard_real_axis(z)?;
    let lhs = nu_k(n)?.cauchy(z)?;
    let rhs = 1.0 / (z - nu_k(n - 1)?.cauchy(z)?);
    Ok((lhs - rhs).norm())
}

/// Cauchy transform of `ν_n ⊞ ν_n`: closed form for `n ≤ 2`, diagonal
/// Padé approximant of the exact moment series otherwise.
#[derive(Clone, Debug)]
pub struct ConvolvedCauchy {
    closed: Option<usize>,
    numer: Vec<f64>,
    denom: Vec<f64>,
}

/// Degree of the moment series feeding the Padé approximant.
pub const PADE_DEGREE: usize = 24;

impl ConvolvedCauchy {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(NcError::InvalidArgument("ν_n needs n ≥ 1".into()));
        }
        if n <= 2 {
            return Ok(ConvolvedCauchy { closed: Some(n), numer: Vec::new(), denom: Vec::new() });
        }
        let m = to_rationals(&nu_k_moments(n, PADE_DEGREE));
        let conv = free_convolve_scalar(&m, &m, PADE_DEGREE)?;
        let (p, q) = pade(&conv, PADE_DEGREE / 2)?;
        Ok(ConvolvedCauchy {
            closed: None,
            numer: p.iter().map(ratio_to_f64).collect(),
            denom: q.iter().map(ratio_to_f64).collect(),
        })
    }

    pub fn g(&self, z: Complex64) -> Complex64 {
        match self.closed {
            // ν_1 ⊞ ν_1 = δ_0
            Some(1) => 1.0 / z,
            // arcsine law on [-2, 2]
            Some(_) => 1.0 / ((z - 2.0).sqrt() * (z + 2.0).sqrt()),
            None => {
                let w = 1.0 / z;
                let eval = |c: &[f64]| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * w + x);
                w * eval(&self.numer) / eval(&self.denom)
            }
        }
    }

    pub fn f(&self, z: Complex64) -> Complex64 {
        1.0 / self.g(z)
    }
}

/// `[L/L]` Padé approximant `P/Q` (with `Q(0) = 1`) of `Σ c_j w^j`, solved
/// exactly; needs `c_0, …, c_{2L}`.
pub fn pade(c: &[BigRational], l: usize) -> Result<(Vec<BigRational>, Vec<BigRational>)> {
    if c.len() <= 2 * l {
        return Err(NcError::InvalidArgument(format!("Padé [{l}/{l}] needs {} coefficients", 2 * l + 1)));
    }
    // Σ_{i=1}^{L} q_i c_{j-i} = -c_j for j = L+1..=2L
    let mut a: Vec<Vec<BigRational>> = (l + 1..=2 * l)
        .map(|j| {
            let mut row: Vec<BigRational> = (1..=l).map(|i| c[j - i].clone()).collect();
            row.push(-c[j].clone());
            row
        })
        .collect();
    let q_tail = solve_exact(&mut a, l).ok_or_else(|| NcError::InvalidArgument("singular Padé system".into()))?;
    let mut q = vec![BigRational::one()];
    q.extend(q_tail);
    let p = (0..=l)
        .map(|j| (0..=j).fold(BigRational::zero(), |acc, i| acc + &q[i] * &c[j - i]))
        .collect();
    Ok((p, q))
}

/// Gauss–Jordan elimination on an augmented `n×(n+1)` system.
fn solve_exact(a: &mut [Vec<BigRational>], n: usize) -> Option<Vec<BigRational>> {
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = BigRational::one() / &a[col][col];
        for x in a[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in col..=n {
                    let delta = &factor * &a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    Some(a.iter().map(|row| row[n].clone()).collect())
}

/// Residual of `F_{ν_n ⊞ ν_n}(z + G_{ν_{n-1}}(z)) = z - G_{ν_{n-1}}(z)`.
pub fn subordination_check(n: usize, z: Complex64) -> Result<f64> {
    if n < 2 {
        return Err(NcError::InvalidArgument("subordination needs n > 1".into()));
    }
    guard_real_axis(z)?;
    let g_prev = nu_k(n - 1)?.cauchy(z)?;
    let conv = ConvolvedCauchy::new(n)?;
    let arg = z + g_prev;
    guard_real_axis(arg)?;
    Ok((conv.f(arg) - (z - g_prev)).norm())
}

// ---------------------------------------------------------------------------
// The even-moment recursion for ν_k ⊞ ν_k

/// One summand of `S_{n,k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SContribution {
    pub i: usize,
    pub binomial: BigInt,
    pub composition_sum: BigInt,
    pub value: BigInt,
}

/// One summand of `T_{n,k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TContribution {
    pub j: usize,
    pub p: usize,
    pub binomial: BigInt,
    pub r_next: BigInt,
    pub r_cur: BigInt,
    pub value: BigInt,
}

/// Constant-term bookkeeping for one `M^{(k)}_{2n} = S - T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecursionStep {
    pub k: usize,
    pub n: usize,
    pub s_terms: Vec<SContribution>,
    pub t_terms: Vec<TContribution>,
    pub s: BigInt,
    pub t: BigInt,
    pub value: BigInt,
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// `Σ_{π ∈ P_O(p, q)} Π_i m_{|π_i| - 1}`.
fn composition_sum(p: usize, q: usize, m: &[BigInt]) -> BigInt {
    odd_compositions(p, q)
        .iter()
        .map(|c| c.parts.iter().fold(BigInt::one(), |acc, &part| acc * &m[part - 1]))
        .sum()
}

/// `M^{(k)}_2, M^{(k)}_4, …, M^{(k)}_{2 n_max}` with full bookkeeping.
pub fn tcnc_recursion_steps(k: usize, n_max: usize) -> Result<Vec<RecursionStep>> {
    if k < 2 || n_max == 0 {
        return Err(NcError::InvalidArgument("the recursion needs k ≥ 2 and n_max ≥ 1".into()));
    }
    let m = nu_k_moments(k - 1, 2 * n_max);
    let mut big_m: Vec<BigInt> = vec![BigInt::one()];
    let mut steps = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut s_terms = Vec::new();
        for i in n..=(2 * n - 1) {
            let binom = binomial(2 * n - 1, i);
            let comp = composition_sum(i, 2 * n - i, &m);
            let value = BigInt::from(2) * &binom * &comp;
            s_terms.push(SContribution { i, binomial: binom, composition_sum: comp, value });
        }
        let mut t_terms = Vec::new();
        for j in 1..=n.saturating_sub(2) {
            let width = 2 * (n - j);
            for p in (n - j - 1)..=(width - 1) {
                let binom = binomial(width - 1, p);
                let r_next = composition_sum(p + 1, width - p - 1, &m);
                let r_cur = composition_sum(p, width - p, &m);
                let value = &big_m[j] * &binom * (&r_next - &r_cur);
                t_terms.push(TContribution { j, p, binomial: binom, r_next, r_cur, value });
            }
        }
        let s: BigInt = s_terms.iter().map(|c| &c.value).sum();
        let t: BigInt = t_terms.iter().map(|c| &c.value).sum();
        let value = &s - &t;
        big_m.push(value.clone());
        steps.push(RecursionStep { k, n, s_terms, t_terms, s, t, value });
    }
    Ok(steps)
}

/// `|TCNC_2^{k,k}(2n)|` for `n = 1..=n_max` by the even-moment recursion.
pub fn tcnc_recursion(k: usize, n_max: usize) -> Result<Vec<BigInt>> {
    Ok(tcnc_recursion_steps(k, n_max)?.into_iter().map(|s| s.value).collect())
}

// ---------------------------------------------------------------------------
// Free binomial laws and exact scalar Jacobi moments

/// Coefficients of `(t - 2 - t√(1 - 4(t-1)z²)) / (2(t²z² - 1))` through `z^N`.
pub fn free_binomial_series(t: &BigRational, n_max: usize) -> Result<Vec<BigRational>> {
    if t < &BigRational::one() {
        return Err(NcError::InvalidArgument(format!("free binomial parameter must be at least 1, got {t}")));
    }
    if n_max > 40 {
        return Err(NcError::InvalidArgument("series degree is limited to 40".into()));
    }
    let len = n_max + 1;
    let four = BigRational::from_integer(BigInt::from(4));
    let two = BigRational::from_integer(BigInt::from(2));
    let mut radicand = vec![BigRational::zero(); len.max(3)];
    radicand[0] = BigRational::one();
    radicand[2] = -(four * (t - BigRational::one()));
    let root = series_sqrt(&radicand, len);
    let mut numer: Vec<BigRational> = root.iter().map(|r| -(t * r)).collect();
    numer[0] += t - &two;
    let mut denom = vec![BigRational::zero(); len.max(3)];
    denom[0] = -two.clone();
    denom[2] = &two * t * t;
    Ok(series_mul(&numer, &series_inv(&denom, len), len))
}

/// `Σ_{π ∈ NC_2(2n)} t^{|outer(π)|} (t-1)^{|inner(π)|}`.
pub fn free_binomial_by_pairings(n: usize, t: &BigRational) -> BigRational {
    let s = t - BigRational::one();
    enumerate_nc2(2 * n)
        .iter()
        .map(|pi| {
            pi.depths().iter().fold(BigRational::one(), |acc, &d| if d == 1 { acc * t } else { acc * &s })
        })
        .sum()
}

/// Scalar Jacobi parameters: the last entry of each list repeats forever.
fn repeat<T: Clone>(v: &[T], i: usize) -> T {
    v.get(i - 1).unwrap_or_else(|| v.last().expect("nonempty parameter list")).clone()
}

/// `m_0, …, m_N` of the scalar law with Jacobi parameters `(λ_i, α_i)`, as
/// weighted Motzkin paths: level steps at height `h` weigh `λ_{h+1}`,
/// returns from height `h` weigh `α_h`.
pub fn scalar_jacobi_moments<T: Num + Clone>(lambda: &[T], alpha: &[T], n_max: usize) -> Vec<T> {
    let height = n_max / 2 + 1;
    // ways[h]: weighted paths of the current length from height h down to 0
    let mut ways = vec![T::zero(); height + 1];
    ways[0] = T::one();
    let mut out = vec![T::one()];
    for _ in 0..n_max {
        let next: Vec<T> = (0..=height)
            .map(|h| {
                let mut acc = repeat(lambda, h + 1) * ways[h].clone();
                if h < height {
                    acc = acc + ways[h + 1].clone();
                }
                if h > 0 {
                    acc = acc + repeat(alpha, h) * ways[h - 1].clone();
                }
                acc
            })
            .collect();
        ways = next;
        out.push(ways[0].clone());
    }
    out
}

/// Series coefficients of the depth-`k` continued fraction
/// `1/(1 - λ_1 z - α_1 z² /(1 - λ_2 z - …))` with innermost tail `1`.
pub fn scalar_cf_series<T: Num + Clone>(lambda: &[T], alpha: &[T], k: usize, n_max: usize) -> Vec<T> {
    let len = n_max + 1;
    let mut inner = unit_series::<T>(len);
    for i in (1..=k).rev() {
        let mut d = vec![T::zero(); len];
        d[0] = T::one();
        if len > 1 {
            d[1] = T::zero() - repeat(lambda, i);
        }
        for m in 0..len.saturating_sub(2) {
            d[m + 2] = d[m + 2].clone() - repeat(alpha, i) * inner[m].clone();
        }
        inner = series_inv(&d, len);
    }
    inner
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev_u_coeffs(2), ints(&[-1, 0, 1]));
        assert_eq!(chebyshev_u_coeffs(3), ints(&[0, -2, 0, 1]));
        for k in 1..8 {
            let root = 2.0 * (std::f64::consts::PI / (k as f64 + 1.0)).cos();
            assert!(chebyshev_u(k, Complex64::new(root, 0.0)).norm() < 1e-12);
        }
        let z = Complex64::new(0.3, 1.7);
        let ratio = chebyshev_u(1, z) / chebyshev_u(2, z);
        assert!((ratio - z / (z * z - 1.0)).norm() < 1e-14);
        assert!((nu_k(2).unwrap().cauchy(z).unwrap() - ratio).norm() < 1e-14);
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu_k(1).unwrap(), AtomicMeasure::dirac(0.0));
        let nu2 = nu_k(2).unwrap();
        assert!((nu2.atoms()[0] - 1.0).abs() < 1e-15 && (nu2.atoms()[1] + 1.0).abs() < 1e-15);
        assert!((nu2.weights()[0] - 0.5).abs() < 1e-15);
        assert!(nu_k(0).is_err());
    }

    #[test]
    fn tridiagonal_examples() {
        for n in 0..6 {
            assert_eq!(tridiagonal_moment(2, 2 * n), BigInt::one());
            assert_eq!(tridiagonal_moment(3, 2 * n + 1), BigInt::zero());
        }
        assert_eq!(tridiagonal_moment(3, 4), BigInt::from(2));
        assert_eq!(tridiagonal_moment(3, 8), BigInt::from(8));
        assert_eq!(chebyshev_ratio_moments(3, 8), nu_k_moments(3, 8));
    }

    #[test]
    fn cumulant_examples() {
        let semi = [1, 0, 1, 0, 2, 0, 5].map(q);
        let k = moments_to_cumulants(&semi).unwrap();
        assert_eq!(k, [0, 0, 1, 0, 0, 0, 0].map(q).to_vec());
        let nu2 = [1, 0, 1, 0, 1, 0, 1].map(q);
        let k = moments_to_cumulants(&nu2).unwrap();
        assert_eq!((k[2].clone(), k[4].clone(), k[6].clone()), (q(1), q(-1), q(2)));
        let lam = q(3);
        let delta: Vec<BigRational> = (0..6).map(|n| (0..n).fold(q(1), |acc, _| acc * &lam)).collect();
        let k = moments_to_cumulants(&delta).unwrap();
        assert_eq!(k[1], lam);
        assert!(k[2..].iter().all(Zero::is_zero));
        assert_eq!(cumulants_to_moments(&moments_to_cumulants(&semi).unwrap()), semi.to_vec());
        assert!(moments_to_cumulants(&[q(2)]).is_err());
    }

    #[test]
    fn free_convolution_rows() {
        assert_eq!(tcnc_counts_by_cumulants(2, 2, 6), ints(&[2, 6, 20, 70, 252, 924]));
        assert_eq!(tcnc_counts_by_cumulants(5, 5, 6), ints(&[2, 8, 40, 224, 1342, 8404]));
        let m = [1.0f64, 0.5, 2.0, 1.0, 7.0];
        let delta0 = [1.0, 0.0, 0.0, 0.0, 0.0];
        let conv = free_convolve_scalar(&m, &delta0, 4).unwrap();
        for (a, b) in conv.iter().zip(&m) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn recursion_rows_and_walkthrough() {
        let step = &tcnc_recursion_steps(2, 3).unwrap()[2];
        assert_eq!((step.s.clone(), step.t.clone(), step.value.clone()), (BigInt::from(20), BigInt::zero(), BigInt::from(20)));
        let t_values: Vec<BigInt> = step.t_terms.iter().map(|c| c.binomial.clone() * (&c.r_next - &c.r_cur)).collect();
        assert_eq!(t_values, ints(&[3, -3, 0]));
        assert_eq!(tcnc_recursion(3, 6).unwrap(), ints(&[2, 8, 38, 196, 1062, 5948]));
        assert_eq!(tcnc_recursion(6, 6).unwrap(), ints(&[2, 8, 40, 224, 1344, 8446]));
        assert!(tcnc_recursion(1, 3).is_err());
    }

    #[test]
    fn cauchy_identities() {
        let z = |re, im| Complex64::new(re, im);
        assert!(g_recursion_check(2, z(0.0, 2.0)).unwrap() < 1e-12);
        assert!(g_recursion_check(6, z(1.0, 1.0)).unwrap() < 1e-10);
        assert!(g_recursion_check(2, z(3.0, 0.0)).unwrap() < 1e-12);
        assert!(matches!(g_recursion_check(3, z(1.0, 0.0)), Err(NcError::NearSpectrum { .. })));
        assert!(subordination_check(2, z(0.0, 2.0)).unwrap() < 1e-8);
        assert!(subordination_check(3, z(1.0, 2.0)).unwrap() < 1e-6);
        assert!(subordination_check(3, z(100.0, 0.0)).unwrap() < 1e-10);
    }

    #[test]
    fn free_binomial_three_ways() {
        for t in [q(1), q(2), q(3), q(3) / q(2)] {
            let series = free_binomial_series(&t, 12).unwrap();
            for n in 0..=6 {
                let closed = crate::jacobi::free_binomial_moment_exact(n, &t).unwrap();
                assert_eq!(series[2 * n], closed);
                assert_eq!(free_binomial_by_pairings(n, &t), closed);
                if n > 0 {
                    assert!(series[2 * n - 1].is_zero());
                }
            }
        }
        assert!(free_binomial_series(&(q(1) / q(2)), 4).is_err());
    }

    #[test]
    fn scalar_jacobi_routes_agree() {
        let lam = [q(1), q(-2), q(3) / q(4)];
        let alp = [q(2), q(1) / q(3), q(5)];
        let moments = scalar_jacobi_moments(&lam, &alp, 10);
        assert_eq!(moments[1], q(1));
        assert_eq!(moments[2], q(1) + q(2));
        for k in 1..=5 {
            let cf = scalar_cf_series(&lam, &alp, k, 2 * k);
            assert_eq!(cf, moments[..=2 * k].to_vec());
        }
    }

    #[test]
    fn boolean_cumulants_of_semicircle() {
        // B(z) = z² M(z) for the standard semicircle
        let semi = [1, 0, 1, 0, 2, 0, 5, 0, 14].map(q);
        let b = boolean_cumulants(&semi).unwrap();
        assert_eq!(b, [0, 0, 1, 0, 1, 0, 2, 0, 5].map(q).to_vec());
    }
}

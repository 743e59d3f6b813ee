//! Small dense complex linear algebra on composite qubit spaces.
//!
//! Everything here works on dimensions of at most a few dozen, so plain
//! row-major `Vec`s are used throughout. Composite indices are big-endian in
//! the declared factor order: for the signal qubit `s` followed by a
//! two-qubit probe `(p1, p2)` the index is `4*s + 2*p1 + p2`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::tolerance::{DEPENDENCE_THRESHOLD, TOL};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// A vector of complex amplitudes.
///
/// [`StateVector::new`] insists on unit norm; intermediates that are not
/// normalized (projected vectors, linear combinations) are built with
/// [`StateVector::unnormalized`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let v = Self::unnormalized(amps)?;
        let n = v.norm();
        if (n * n - 1.0).abs() > TOL.algebraic {
            return invalid(format!("state vector has squared norm {}", n * n));
        }
        Ok(v)
    }

    pub fn unnormalized(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return invalid("state vector must have positive dimension");
        }
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0);
        Self { amps: vec![ZERO; dim] }
    }

    /// The `index`-th computational basis vector.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.amps[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= TOL.algebraic
    }

    /// Rescaled copy with unit norm; fails on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n < 1e-300 {
            return invalid("cannot normalize the zero vector");
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim(), "inner product of mismatched vectors");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, k: C64) -> Self {
        Self { amps: self.amps.iter().map(|a| a * k).collect() }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        Self { amps: self.amps.iter().map(|a| a * k).collect() }
    }

    pub fn conj(&self) -> Self {
        Self { amps: self.amps.iter().map(|a| a.conj()).collect() }
    }

    /// `|self><other|`.
    pub fn outer(&self, other: &Self) -> Operator {
        let n = self.dim();
        assert_eq!(n, other.dim());
        Operator::from_fn(n, |i, j| self.amps[i] * other.amps[j].conj())
    }

    pub fn projector(&self) -> Operator {
        self.outer(self)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Multiplies by the global phase that makes the first component of
    /// modulus above `threshold` real and positive.
    pub fn phase_fixed(&self, threshold: f64) -> Self {
        match self.amps.iter().find(|a| a.norm() > threshold) {
            Some(a) => self.scale(a.conj() / a.norm()),
            None => self.clone(),
        }
    }
}

impl Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.amps[i]
    }
}

impl Add for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        assert_eq!(self.dim(), rhs.dim());
        StateVector { amps: self.amps.iter().zip(&rhs.amps).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &StateVector) -> StateVector {
        assert_eq!(self.dim(), rhs.dim());
        StateVector { amps: self.amps.iter().zip(&rhs.amps).map(|(a, b)| a - b).collect() }
    }
}

impl Mul<&StateVector> for f64 {
    type Output = StateVector;
    fn mul(self, rhs: &StateVector) -> StateVector {
        rhs.scale_real(self)
    }
}

/// Kronecker product `a ⊗ b`; `a` supplies the most significant index.
pub fn tensor(a: &StateVector, b: &StateVector) -> StateVector {
    let mut amps = Vec::with_capacity(a.dim() * b.dim());
    for x in &a.amps {
        for y in &b.amps {
            amps.push(x * y);
        }
    }
    StateVector { amps }
}

/// Tensor product of several factors, first factor most significant.
pub fn tensor_all(factors: &[&StateVector]) -> StateVector {
    let (first, rest) = factors.split_first().expect("at least one factor");
    rest.iter().fold((*first).clone(), |acc, f| tensor(&acc, f))
}

/// A square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0);
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim > 0);
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds an operator from row-major entries; the length must be a
    /// perfect square.
    pub fn from_rows(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != data.len() {
            return invalid(format!("{} entries do not form a square matrix", data.len()));
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return invalid("rows of unequal length");
        }
        Self::from_rows(rows.iter().flat_map(|r| r.iter().map(|&x| C64::new(x, 0.0))).collect())
    }

    pub fn diag_real(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO })
    }

    /// Operator whose `k`-th column is `columns[k]`.
    pub fn from_columns(columns: &[StateVector]) -> Result<Self> {
        let n = columns.len();
        if n == 0 {
            return invalid("no columns");
        }
        if let Some(c) = columns.iter().find(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: c.dim() });
        }
        Ok(Self::from_fn(n, |i, j| columns[j][i]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> StateVector {
        StateVector { amps: (0..self.dim).map(|i| self[(i, j)]).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|a| a.conj()).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul of mismatched operators");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(self.dim, v.dim(), "operator applied to mismatched vector");
        let n = self.dim;
        StateVector {
            amps: (0..n)
                .map(|i| (0..n).map(|j| self.data[i * n + j] * v.amps[j]).sum())
                .collect(),
        }
    }

    /// `<v|self|v>`.
    pub fn expectation(&self, v: &StateVector) -> C64 {
        v.inner(&self.apply(v))
    }

    pub fn scale(&self, k: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|a| a * k).collect() }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|a| a * k).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from `M = M†`.
    pub fn hermitian_residual(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_residual() <= TOL.algebraic
    }

    /// Largest entrywise deviation of `M†M` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        self.adjoint().matmul(self).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_residual() <= TOL.algebraic
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Spectral norm, computed from the eigenvalues of `M†M`.
    pub fn op_norm(&self) -> f64 {
        let gram = self.adjoint().matmul(self);
        eig_hermitian(&gram)
            .map(|e| e.values[0].max(0.0).sqrt())
            .expect("Gram matrix is Hermitian")
    }

    /// Principal square root of a positive semidefinite operator. Small
    /// negative eigenvalues from rounding are clamped to zero.
    pub fn sqrt_psd(&self) -> Result<Self> {
        let eig = eig_hermitian(self)?;
        if let Some(&min) = eig.values.last() {
            if min < -TOL.spectral {
                return invalid(format!("operator is not positive semidefinite (eigenvalue {min})"));
            }
        }
        Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        Operator { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        Operator { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Kronecker product of operators, `a` most significant.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (na, nb) = (a.dim, b.dim);
    Operator::from_fn(na * nb, |i, j| a[(i / nb, j / nb)] * b[(i % nb, j % nb)])
}

pub fn kron_all(factors: &[&Operator]) -> Operator {
    let (first, rest) = factors.split_first().expect("at least one factor");
    rest.iter().fold((*first).clone(), |acc, f| kron(&acc, f))
}

/// A validated density operator: Hermitian, unit trace, positive
/// semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        let herm = op.hermitian_residual();
        if herm > TOL.algebraic {
            return Err(Error::NotHermitian(herm));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > TOL.algebraic {
            return invalid(format!("density matrix has trace {tr}"));
        }
        let eig = eig_hermitian(&op)?;
        let min = *eig.values.last().expect("nonempty spectrum");
        if min < -TOL.spectral {
            return invalid(format!("density matrix has negative eigenvalue {min}"));
        }
        Ok(Self(op))
    }

    /// Wraps an operator known to be a valid state by construction.
    pub(crate) fn trusted(op: Operator) -> Self {
        Self(op)
    }

    pub fn pure(v: &StateVector) -> Result<Self> {
        if !v.is_normalized() {
            return invalid("pure state requires a normalized vector");
        }
        Ok(Self(v.projector()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(Operator::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn as_operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    /// Convex combination `Σ w_k ρ_k`; weights must be nonnegative and sum
    /// to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let (_, first) = parts.first().ok_or_else(|| Error::InvalidInput("empty mixture".into()))?;
        let dim = first.dim();
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > TOL.algebraic {
            return invalid("mixture weights must be nonnegative and sum to one");
        }
        let mut acc = Operator::zeros(dim);
        for (w, rho) in parts {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: rho.dim() });
            }
            acc = &acc + &rho.0.scale_real(*w);
        }
        Ok(Self(acc))
    }
}

impl Index<(usize, usize)> for DensityMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

fn check_factors(dim: usize, factor_dims: &[usize], keep: &[usize]) -> Result<()> {
    if factor_dims.contains(&0) {
        return invalid("factor dimensions must be positive");
    }
    let prod: usize = factor_dims.iter().product();
    if prod != dim {
        return Err(Error::DimensionMismatch { expected: prod, found: dim });
    }
    for (i, &k) in keep.iter().enumerate() {
        if k >= factor_dims.len() {
            return invalid(format!("kept factor {k} out of range"));
        }
        if keep[..i].contains(&k) {
            return invalid(format!("kept factor {k} listed twice"));
        }
    }
    Ok(())
}

/// Splits a composite index into per-factor digits.
fn digits(mut index: usize, factor_dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(factor_dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

/// Partial trace of an arbitrary operator; `keep` lists the surviving
/// factors, which appear in ascending factor order in the result. An empty
/// `keep` traces everything out and leaves a 1×1 matrix.
pub fn partial_trace_op(op: &Operator, factor_dims: &[usize], keep: &[usize]) -> Result<Operator> {
    check_factors(op.dim, factor_dims, keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| factor_dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let mut out = Operator::zeros(out_dim);
    let nf = factor_dims.len();
    let (mut di, mut dj) = (vec![0; nf], vec![0; nf]);
    for i in 0..op.dim {
        digits(i, factor_dims, &mut di);
        for j in 0..op.dim {
            digits(j, factor_dims, &mut dj);
            let traced_match = (0..nf).all(|f| kept.contains(&f) || di[f] == dj[f]);
            if !traced_match {
                continue;
            }
            let (mut oi, mut oj) = (0, 0);
            for (&f, &d) in kept.iter().zip(&kept_dims) {
                oi = oi * d + di[f];
                oj = oj * d + dj[f];
            }
            out[(oi, oj)] += op[(i, j)];
        }
    }
    Ok(out)
}

pub fn partial_trace(rho: &DensityMatrix, factor_dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    partial_trace_op(&rho.0, factor_dims, keep).map(DensityMatrix)
}

/// Reduced state of a bipartite pure vector on its first or second factor.
/// Faster than forming the projector for the common two-factor case.
pub fn reduced_first(v: &StateVector, d_first: usize) -> Operator {
    let d_second = v.dim() / d_first;
    assert_eq!(d_first * d_second, v.dim());
    Operator::from_fn(d_first, |i, j| {
        (0..d_second).map(|k| v[i * d_second + k] * v[j * d_second + k].conj()).sum()
    })
}

pub fn reduced_second(v: &StateVector, d_first: usize) -> Operator {
    let d_second = v.dim() / d_first;
    assert_eq!(d_first * d_second, v.dim());
    Operator::from_fn(d_second, |i, j| {
        (0..d_first).map(|k| v[k * d_second + i] * v[k * d_second + j].conj()).sum()
    })
}

/// Eigendecomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Eigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors matching `values`, phase-fixed so the first
    /// nonzero component is real and positive.
    pub vectors: Vec<StateVector>,
}

impl Eigen {
    pub fn reconstruct(&self) -> Operator {
        self.reconstruct_with(|l| l)
    }

    /// `Σ f(λ_i) |v_i><v_i|`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Operator {
        let n = self.vectors[0].dim();
        let mut out = Operator::zeros(n);
        for (l, v) in self.values.iter().zip(&self.vectors) {
            let w = f(*l);
            if w == 0.0 {
                continue;
            }
            out = &out + &v.projector().scale_real(w);
        }
        out
    }
}

const PHASE_THRESHOLD: f64 = 1e-10;

/// Cyclic complex Jacobi eigensolver.
///
/// Inputs whose anti-Hermitian part exceeds the spectral tolerance are
/// rejected. Ties between eigenvalues (closer than the spectral tolerance)
/// are ordered by comparing the real parts of the phase-fixed eigenvector
/// components lexicographically, larger first.
pub fn eig_hermitian(m: &Operator) -> Result<Eigen> {
    let n = m.dim;
    let scale = m.max_abs().max(1.0);
    let res = m.hermitian_residual();
    if res > TOL.spectral * scale {
        return Err(Error::NotHermitian(res));
    }
    let mut a = m.hermitian_part();
    let mut v = Operator::identity(n);

    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotation block: phase the q coordinate so a_pq is real,
                // then apply the real Jacobi rotation.
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, StateVector)> = (0..n)
        .map(|k| (a[(k, k)].re, v.column(k).phase_fixed(PHASE_THRESHOLD)))
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    // Reorder clusters of (near-)equal eigenvalues deterministically.
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (pairs[end - 1].0 - pairs[end].0).abs() <= TOL.spectral * scale {
            end += 1;
        }
        pairs[start..end].sort_by(|x, y| lex_real_desc(&x.1, &y.1));
        start = end;
    }
    let (values, vectors) = pairs.into_iter().unzip();
    Ok(Eigen { values, vectors })
}

fn lex_real_desc(a: &StateVector, b: &StateVector) -> std::cmp::Ordering {
    for (x, y) in a.amps().iter().zip(b.amps()) {
        let d = y.re - x.re;
        if d.abs() > PHASE_THRESHOLD {
            return d.total_cmp(&0.0);
        }
    }
    std::cmp::Ordering::Equal
}

/// Modified Gram–Schmidt. Fails with [`Error::Degenerate`] when a vector
/// is (nearly) dependent on its predecessors.
pub fn orthonormalize(vectors: &[StateVector]) -> Result<Vec<StateVector>> {
    let mut out: Vec<StateVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let scale = v.norm();
        let mut w = v.clone();
        for _pass in 0..2 {
            for e in &out {
                let c = e.inner(&w);
                w = &w - &e.scale(c);
            }
        }
        let n = w.norm();
        if scale == 0.0 || n <= DEPENDENCE_THRESHOLD * scale.max(1.0) {
            return Err(Error::Degenerate);
        }
        out.push(w.scale_real(1.0 / n));
    }
    Ok(out)
}

/// Extends an orthonormal set to a basis of the full space by trying the
/// standard basis vectors in index order and skipping those that are nearly
/// dependent on what is already present.
pub fn complete_basis(partial: &[StateVector], dim: usize) -> Vec<StateVector> {
    let mut out: Vec<StateVector> = partial.to_vec();
    for k in 0..dim {
        if out.len() == dim {
            break;
        }
        let mut w = StateVector::basis(dim, k);
        for _pass in 0..2 {
            for e in &out {
                let c = e.inner(&w);
                w = &w - &e.scale(c);
            }
        }
        let n = w.norm();
        if n > DEPENDENCE_THRESHOLD {
            out.push(w.scale_real(1.0 / n));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn tensor_basis_ordering() {
        let e0 = StateVector::basis(2, 0);
        let e1 = StateVector::basis(2, 1);
        assert_eq!(tensor(&e0, &e0).amps(), &[ONE, ZERO, ZERO, ZERO]);
        assert_eq!(tensor(&e0, &e1).amps(), &[ZERO, ONE, ZERO, ZERO]);
        let h = StateVector::from_real(&[0.5f64.sqrt(), 0.5f64.sqrt()]).unwrap();
        let t = tensor(&h, &e0);
        let s = 0.5f64.sqrt();
        assert!(t.max_abs_diff(&StateVector::from_real(&[s, 0.0, s, 0.0]).unwrap()) < 1e-15);
    }

    #[test]
    fn unnormalized_vectors_must_use_explicit_constructor() {
        assert!(StateVector::new(vec![c(1.0), c(1.0)]).is_err());
        assert!(StateVector::unnormalized(vec![c(1.0), c(1.0)]).is_ok());
        assert!(StateVector::new(vec![]).is_err());
    }

    #[test]
    fn partial_trace_of_product_state() {
        let ra = DensityMatrix::new(Operator::diag_real(&[0.3, 0.7])).unwrap();
        let rb = DensityMatrix::new(Operator::from_real_rows(&[&[0.6, 0.2], &[0.2, 0.4]]).unwrap()).unwrap();
        let joint = DensityMatrix::new(kron(ra.as_operator(), rb.as_operator())).unwrap();
        let kept_b = partial_trace(&joint, &[2, 2], &[1]).unwrap();
        assert!(kept_b.as_operator().max_abs_diff(rb.as_operator()) < 1e-15);
        let kept_a = partial_trace(&joint, &[2, 2], &[0]).unwrap();
        assert!(kept_a.as_operator().max_abs_diff(ra.as_operator()) < 1e-15);
        let all = partial_trace(&joint, &[2, 2], &[]).unwrap();
        assert_eq!(all.dim(), 1);
        assert!((all[(0, 0)] - ONE).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let s = 0.5f64.sqrt();
        let bell = StateVector::from_real(&[s, 0.0, 0.0, s]).unwrap();
        let rho = DensityMatrix::pure(&bell).unwrap();
        let half = Operator::identity(2).scale_real(0.5);
        for keep in [0, 1] {
            let r = partial_trace(&rho, &[2, 2], &[keep]).unwrap();
            assert!(r.as_operator().max_abs_diff(&half) < 1e-15);
        }
        assert!(reduced_first(&bell, 2).max_abs_diff(&half) < 1e-15);
        assert!(reduced_second(&bell, 2).max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_factors() {
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(matches!(
            partial_trace(&rho, &[2, 3], &[0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(partial_trace(&rho, &[2, 2], &[2]).is_err());
    }

    #[test]
    fn three_factor_partial_trace_matches_reduced_helpers() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let amps: Vec<C64> = (0..8).map(|_| C64::new(rng.random(), rng.random())).collect();
        let v = StateVector::unnormalized(amps).unwrap().normalized().unwrap();
        let rho = DensityMatrix::pure(&v).unwrap();
        let signal = partial_trace(&rho, &[2, 2, 2], &[0]).unwrap();
        assert!(signal.as_operator().max_abs_diff(&reduced_first(&v, 2)) < 1e-14);
        let probe = partial_trace(&rho, &[2, 2, 2], &[1, 2]).unwrap();
        assert!(probe.as_operator().max_abs_diff(&reduced_second(&v, 2)) < 1e-14);
    }

    #[test]
    fn eig_trivial_cases() {
        let e = eig_hermitian(&Operator::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        let e = eig_hermitian(&Operator::diag_real(&[3.0, -1.0])).unwrap();
        assert_eq!(e.values, vec![3.0, -1.0]);
        assert!(e.vectors[0].max_abs_diff(&StateVector::basis(2, 0)) < 1e-15);
        assert!(e.vectors[1].max_abs_diff(&StateVector::basis(2, 1)) < 1e-15);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = Operator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig_complex_hermitian_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let raw = Operator::from_fn(4, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let h = raw.hermitian_part();
            let e = eig_hermitian(&h).unwrap();
            assert!(e.reconstruct().max_abs_diff(&h) < 1e-10);
            for (i, a) in e.vectors.iter().enumerate() {
                for (j, b) in e.vectors.iter().enumerate() {
                    let expect = if i == j { ONE } else { ZERO };
                    assert!((a.inner(b) - expect).norm() < 1e-10);
                }
            }
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigenvector_phase_is_fixed() {
        let i = C64::new(0.0, 1.0);
        let m = Operator::from_rows(vec![c(1.0), i, -i, c(1.0)]).unwrap();
        let e = eig_hermitian(&m).unwrap();
        for v in &e.vectors {
            assert!(v[0].im.abs() < 1e-15 && v[0].re > 0.0);
        }
        assert!((e.values[0] - 2.0).abs() < 1e-14 && e.values[1].abs() < 1e-14);
    }

    #[test]
    fn sqrt_of_projector_is_itself() {
        let s = 0.5f64.sqrt();
        let p = StateVector::from_real(&[s, s]).unwrap().projector();
        assert!(p.sqrt_psd().unwrap().max_abs_diff(&p) < 1e-12);
        let rho = Operator::diag_real(&[0.25, 0.04]);
        assert!(rho.sqrt_psd().unwrap().max_abs_diff(&Operator::diag_real(&[0.5, 0.2])) < 1e-14);
    }

    #[test]
    fn completion_follows_standard_basis_order() {
        let s = 0.5f64.sqrt();
        let v = StateVector::from_real(&[s, s, 0.0]).unwrap();
        let basis = complete_basis(&[v], 3);
        assert_eq!(basis.len(), 3);
        let expected = StateVector::from_real(&[s, -s, 0.0]).unwrap();
        assert!(basis[1].max_abs_diff(&expected) < 1e-15);
        assert!(basis[2].max_abs_diff(&StateVector::basis(3, 2)) < 1e-15);
    }

    #[test]
    fn orthonormalize_flags_dependence() {
        let a = StateVector::from_real(&[1.0, 0.0]).unwrap();
        let b = StateVector::unnormalized(vec![c(2.0), c(1e-12)]).unwrap();
        assert_eq!(orthonormalize(&[a, b]), Err(Error::Degenerate));
    }
}

//! Dense complex linear algebra: Hermitian matrices, a cyclic Jacobi
//! eigensolver and Cholesky factorization.
//!
//! All dimensions handled here are small (operators on (n,q)-form
//! coefficients, n at most a handful), so everything is dense and
//! row-major.

use std::cmp::Ordering;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Jacobi stops once the off-diagonal Frobenius norm drops below this
/// fraction of the full Frobenius norm.
pub const JACOBI_TOLERANCE: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Input(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `‖A - I‖_max` for `A = self · self*`.
    pub fn unitarity_defect(&self) -> f64 {
        self.matmul(&self.adjoint()).sub(&Self::identity(self.rows)).max_abs()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square complex matrix equal to its conjugate transpose.
///
/// Construction replaces the input `H` by `(H + H*)/2`, so finite-difference
/// Hessians that are Hermitian only up to truncation error are accepted and
/// the stored matrix is exactly Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: CMatrix,
}

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::Input(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if m.rows() == 0 {
            return Err(Error::Input("Hermitian matrix must have dim >= 1".into()));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        let n = m.rows();
        let sym = CMatrix::from_fn(n, n, |j, k| {
            if j == k {
                C64::new(m[(j, j)].re, 0.0)
            } else {
                (m[(j, k)] + m[(k, j)].conj()) * 0.5
            }
        });
        Ok(Self { inner: sym })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input("ragged matrix rows".into()));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input("ragged matrix rows".into()));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(CMatrix::from_real_diagonal(diag))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: CMatrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn get(&self, j: usize, k: usize) -> C64 {
        self.inner[(j, k)]
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> CMatrix {
        self.inner
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.inner[(i, i)].re).sum()
    }

    /// `U* H U` for a unitary (or any square) `U`.
    pub fn congruence(&self, u: &CMatrix) -> Result<Self> {
        Self::new(u.adjoint().matmul(&self.inner).matmul(u))
    }

    /// `⟨H x, x⟩ = x* H x`, real for Hermitian `H`.
    pub fn quadratic_form(&self, x: &[C64]) -> f64 {
        let hx = self.inner.matvec(x);
        hx.iter().zip(x).map(|(a, b)| (a * b.conj()).re).sum()
    }

    pub fn add_scaled_identity(&self, c: f64) -> Self {
        let n = self.dim();
        let mut m = self.inner.clone();
        for i in 0..n {
            m[(i, i)] += C64::new(c, 0.0);
        }
        Self { inner: m }
    }
}

/// Eigen-decomposition `H = U diag(λ) U*` with ascending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub unitary: CMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        self.unitary.column(k)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dim();
        let scaled = CMatrix::from_fn(n, n, |i, k| self.unitary[(i, k)] * self.eigenvalues[k]);
        scaled.matmul(&self.unitary.adjoint())
    }

    /// A spectrum carrying only eigenvalues (eigenvectors set to the
    /// identity). Used where only the values matter.
    pub fn from_eigenvalues(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("empty spectrum".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("eigenvalues".into()));
        }
        values.sort_by(|a, b| a.total_cmp(b));
        let n = values.len();
        Ok(Self {
            eigenvalues: values,
            unitary: CMatrix::identity(n),
        })
    }
}

/// Cyclic Jacobi eigen-decomposition of a Hermitian matrix.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a
/// diagonal unitary, then applies the real symmetric Jacobi rotation.
/// Output eigenvalues ascend; each eigenvector is normalized so that its
/// first non-negligible component is real positive, and equal eigenvalues
/// are ordered by the position of that component.
pub fn eig_hermitian(h: &HermitianMatrix) -> Result<Spectrum> {
    let n = h.dim();
    let mut a = h.matrix().clone();
    if !a.is_finite() {
        return Err(Error::NonFinite("eig_hermitian input".into()));
    }
    let mut v = CMatrix::identity(n);
    let norm = a.frobenius();

    if norm > 0.0 {
        let mut converged = false;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off < JACOBI_TOLERANCE * norm {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
        if !converged {
            return Err(Error::EigenNoConvergence(JACOBI_MAX_SWEEPS));
        }
    }

    let mut pairs: Vec<(f64, Vec<C64>, usize)> = (0..n)
        .map(|k| {
            let mut col = v.column(k);
            let lead = normalize_phase(&mut col);
            (a[(k, k)].re, col, lead)
        })
        .collect();
    pairs.sort_by(|x, y| match x.0.total_cmp(&y.0) {
        Ordering::Equal => x.2.cmp(&y.2),
        other => other,
    });

    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let unitary = CMatrix::from_fn(n, n, |i, k| pairs[k].1[i]);
    Ok(Spectrum { eigenvalues, unitary })
}

fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let n = a.rows();
    let apq = a[(p, q)];
    let abs = apq.norm();
    if abs == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Guard against underflow in theta^2 for pivots that are already negligible.
    if abs < 1e-300 {
        return;
    }
    let phase_conj = (apq / abs).conj();
    let theta = (aqq - app) / (2.0 * abs);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let vpp = C64::new(c, 0.0);
    let vpq = C64::new(s, 0.0);
    let vqp = phase_conj * (-s);
    let vqq = phase_conj * c;

    // A <- A V on columns p, q.
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * vpp + akq * vqp;
        a[(k, q)] = akp * vpq + akq * vqq;
    }
    // A <- V* A on rows p, q.
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
        a[(q, k)] = vpq.conj() * apk + vqq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * vpp + vkq * vqp;
        v[(k, q)] = vkp * vpq + vkq * vqq;
    }
}

/// Rotates `x` so its first component above `1e-12·max|x_i|` is real
/// positive. Returns the index of that component.
fn normalize_phase(x: &mut [C64]) -> usize {
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lead = x
        .iter()
        .position(|z| z.norm() > 1e-12 * scale)
        .unwrap_or(0);
    let r = x[lead].norm();
    if r > 0.0 {
        let rot = x[lead].conj() / r;
        for z in x.iter_mut() {
            *z *= rot;
        }
        x[lead] = C64::new(x[lead].re, 0.0);
    }
    lead
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMatrix,
}

impl Cholesky {
    /// Fails with [`Error::Definiteness`] when a pivot is not positive
    /// (relative to the matrix scale).
    pub fn factor(h: &HermitianMatrix) -> Result<Self> {
        let n = h.dim();
        let a = h.matrix();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 1e-14 * scale) {
                return Err(Error::Definiteness(format!(
                    "Cholesky pivot {j} is {d:.3e} (scale {scale:.3e})"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = C64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)].conj() * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Serialize complex numbers as `[re, im]` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair(pub [f64; 2]);

impl From<C64> for Pair {
    fn from(z: C64) -> Self {
        Pair([z.re, z.im])
    }
}

impl From<Pair> for C64 {
    fn from(p: Pair) -> Self {
        C64::new(p.0[0], p.0[1])
    }
}

pub fn to_pairs(z: &[C64]) -> Vec<[f64; 2]> {
    z.iter().map(|z| [z.re, z.im]).collect()
}

pub fn from_pairs(p: &[[f64; 2]]) -> Vec<C64> {
    p.iter().map(|p| C64::new(p[0], p[1])).collect()
}

pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

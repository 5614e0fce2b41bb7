//! Dense complex linear algebra: vectors, matrices, Kronecker products and
//! Hermitian eigensolvers.
//!
//! Everything the quantum constructions need lives here. Matrices are small
//! (the named experiments never exceed 25x25 per party pair), so the
//! eigensolver is cyclic Jacobi. [`largest_eig`] handles operators that are
//! only available through their action on a vector.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Maximum entrywise `|m - m^H|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative residual `|Av - lv| / |l|` accepted for eigenpairs.
pub const EIG_RESIDUAL_TOL: f64 = 1e-8;
/// Maximum deviation from orthonormality of returned eigenvectors.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Jacobi sweep cap.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Restart cap for the Krylov top-eigenpair iteration.
pub const LANCZOS_MAX_RESTARTS: usize = 500;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    entries: Vec<C64>,
}

impl ComplexVector {
    pub fn new(entries: Vec<C64>) -> Self {
        Self { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: vec![C64::new(0.0, 0.0); dim] }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self { entries: values.iter().map(|&v| C64::new(v, 0.0)).collect() }
    }

    /// Computational basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[index] = C64::new(1.0, 0.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &ComplexVector) -> C64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, k: C64) -> Self {
        Self { entries: self.entries.iter().map(|z| z * k).collect() }
    }

    /// Returns the vector scaled to unit norm; a zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scale(C64::new(1.0 / n, 0.0))
    }

    /// `self += k * other`
    pub fn axpy(&mut self, k: C64, other: &ComplexVector) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += k * b;
        }
    }

    pub fn kron(&self, other: &ComplexVector) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.entries {
            for b in &other.entries {
                out.push(a * b);
            }
        }
        Self { entries: out }
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.entries[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.entries[i]
    }
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for col in 0..self.cols {
                let z = self[(r, col)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::from_entries(rows, cols, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// `|v><v|`
    pub fn outer(v: &ComplexVector) -> Self {
        let n = v.dim();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[ComplexVector]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, ComplexVector::dim);
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            if col.dim() != rows {
                return Err(Error::DimensionMismatch("ragged columns".into()));
            }
            for i in 0..rows {
                m[(i, j)] = col[i];
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector::new((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn row(&self, i: usize) -> ComplexVector {
        ComplexVector::new(self.entries[i * self.cols..(i + 1) * self.cols].to_vec())
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * k).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.entries[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.entries[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.cols != v.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix applied to dim {}",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let mut out = ComplexVector::zeros(self.rows);
        for i in 0..self.rows {
            let row = &self.entries[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v.entries()).map(|(a, b)| a * b).sum();
        }
        Ok(out)
    }

    /// Kronecker product; dimensions multiply.
    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Largest entrywise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise `|m - m^H|`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && self
                .adjoint()
                .matmul(self)
                .map(|p| p.max_abs_diff(&Self::identity(self.rows)) <= tol)
                .unwrap_or(false)
    }

    /// `[self, other] = self·other - other·self`
    pub fn commutator(&self, other: &ComplexMatrix) -> Result<Self> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        Ok(&ab - &ba)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.entries[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Kronecker product of a list of matrices, left to right.
pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut acc = ComplexMatrix::identity(1);
    for f in factors {
        acc = acc.kron(f);
    }
    acc
}

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn eigenvector(&self, k: usize) -> ComplexVector {
        self.eigenvectors.column(k)
    }

    /// Largest eigenvalue and its eigenvector.
    pub fn top(&self) -> (f64, ComplexVector) {
        let k = self.eigenvalues.len() - 1;
        (self.eigenvalues[k], self.eigenvector(k))
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let n = m.rows();
    // Symmetrise so round-off in the input does not leak into the rotations.
    let mut a = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);

    let mut converged = n <= 1;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale * n as f64 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: JACOBI_MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok(HermitianEigen { eigenvalues, eigenvectors })
}

/// One Jacobi rotation zeroing `a[p][q]`: a phase making the pivot real,
/// followed by a real plane rotation.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let b = apq.norm();
    if b < 1e-300 {
        return;
    }
    let phase = apq / b; // e^{i phi}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * b);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let cs = 1.0 / (t * t + 1.0).sqrt();
    let sn = t * cs;
    let n = a.rows();
    let ph_conj = phase.conj();

    // J restricted to (p, q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
    let jpp = C64::new(cs, 0.0);
    let jpq = C64::new(sn, 0.0);
    let jqp = ph_conj * (-sn);
    let jqq = ph_conj * cs;

    // a <- a J, v <- v J
    for i in 0..n {
        let (x, y) = (a[(i, p)], a[(i, q)]);
        a[(i, p)] = x * jpp + y * jqp;
        a[(i, q)] = x * jpq + y * jqq;
        let (x, y) = (v[(i, p)], v[(i, q)]);
        v[(i, p)] = x * jpp + y * jqp;
        v[(i, q)] = x * jpq + y * jqq;
    }
    // a <- J^H a
    for j in 0..n {
        let (x, y) = (a[(p, j)], a[(q, j)]);
        a[(p, j)] = jpp.conj() * x + jqp.conj() * y;
        a[(q, j)] = jpq.conj() * x + jqq.conj() * y;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

/// Top eigenpair of a Hermitian operator given only through its action.
///
/// Restarted Lanczos with full reorthogonalisation; the Ritz vector of the
/// largest Ritz value seeds each restart. Stops once
/// `|Av - lv| <= EIG_RESIDUAL_TOL * max(|l|, 1e-300)`.
pub fn largest_eig<F>(apply: F, dim: usize) -> Result<(f64, ComplexVector)>
where
    F: Fn(&ComplexVector) -> ComplexVector,
{
    if dim == 0 {
        return Err(Error::DimensionMismatch("empty operator".into()));
    }
    let krylov = dim.min(40);
    // Deterministic start with no special symmetry.
    let mut start = ComplexVector::new(
        (0..dim)
            .map(|k| C64::new(1.0 + 0.37 * ((k as f64 + 1.0) * 1.618).sin(), 0.11 * (k as f64 * 2.3).cos()))
            .collect(),
    )
    .normalized();

    for _ in 0..LANCZOS_MAX_RESTARTS {
        let mut basis: Vec<ComplexVector> = vec![start.clone()];
        let mut alphas: Vec<f64> = Vec::with_capacity(krylov);
        let mut betas: Vec<f64> = Vec::with_capacity(krylov);
        for j in 0..krylov {
            let mut w = apply(&basis[j]);
            if w.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "operator returned dim {} for dim {dim}",
                    w.dim()
                )));
            }
            let rayleigh = basis[j].inner(&w);
            let wn = w.norm().max(1.0);
            if rayleigh.im.abs() > HERMITIAN_TOL * wn {
                return Err(Error::NotHermitian { deviation: rayleigh.im.abs() });
            }
            alphas.push(rayleigh.re);
            // Two passes of Gram-Schmidt against the whole basis.
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.inner(&w);
                    w.axpy(-proj, b);
                }
            }
            let beta = w.norm();
            if j + 1 == krylov || beta <= 1e-13 * wn {
                break;
            }
            betas.push(beta);
            basis.push(w.scale(C64::new(1.0 / beta, 0.0)));
        }
        let k = alphas.len();
        let mut t = ComplexMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = C64::new(alphas[i], 0.0);
            if i + 1 < k {
                t[(i, i + 1)] = C64::new(betas[i], 0.0);
                t[(i + 1, i)] = C64::new(betas[i], 0.0);
            }
        }
        let eig = hermitian_eig(&t)?;
        let (theta, y) = eig.top();
        let mut x = ComplexVector::zeros(dim);
        for (b, coef) in basis.iter().zip(y.entries()) {
            x.axpy(*coef, b);
        }
        let x = x.normalized();
        let ax = apply(&x);
        let mut resid = ax.clone();
        resid.axpy(C64::new(-theta, 0.0), &x);
        if resid.norm() <= EIG_RESIDUAL_TOL * theta.abs().max(1e-300) || resid.norm() < 1e-300 {
            return Ok((theta, x));
        }
        start = x;
    }
    Err(Error::NoConvergence { iterations: LANCZOS_MAX_RESTARTS })
}

/// Pauli-type matrices used by the GHZ construction: `sigma_1` swaps the
/// basis states, `sigma_2` is `diag(1, -1)`.
pub fn sigma_1() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).expect("2x2")
}

pub fn sigma_2() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).expect("2x2")
}

/// Unitary discrete Fourier transform `Q[x][y] = exp(2 pi i x y / d) / sqrt(d)`.
pub fn fourier(d: usize) -> ComplexMatrix {
    let norm = 1.0 / (d as f64).sqrt();
    let mut m = ComplexMatrix::zeros(d, d);
    for x in 0..d {
        for y in 0..d {
            let phase = 2.0 * std::f64::consts::PI * ((x * y) % d) as f64 / d as f64;
            m[(x, y)] = C64::from_polar(norm, phase);
        }
    }
    m
}

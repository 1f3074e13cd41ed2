//! Dense complex-matrix kernel.
//!
//! [`Operator`] stores entries row-major. Kronecker products follow the
//! row-major lexicographic convention: entry `(i*q.rows + k, j*q.cols + l)`
//! of `kron(p, q)` is `p[i,j] * q[k,l]`. Every tensor-leg ordering elsewhere
//! in the crate is built on this one convention.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dimensions at or below this use a full SVD for the spectral norm.
pub const DEFAULT_SVD_CUTOFF: usize = 256;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

/// Dense complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "OperatorRepr", try_from = "OperatorRepr")]
pub struct Operator {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// On-disk form: rows of `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

impl From<Operator> for OperatorRepr {
    fn from(op: Operator) -> Self {
        OperatorRepr {
            rows: op.rows,
            cols: op.cols,
            entries: op.to_pairs(),
        }
    }
}

impl TryFrom<OperatorRepr> for Operator {
    type Error = Error;

    fn try_from(repr: OperatorRepr) -> Result<Self> {
        let op = Operator::from_pairs(&repr.entries)?;
        if op.rows != repr.rows || op.cols != repr.cols {
            return Err(Error::InvalidShape(format!(
                "declared {}x{} but entries are {}x{}",
                repr.rows, repr.cols, op.rows, op.cols
            )));
        }
        Ok(op)
    }
}

impl Operator {
    /// Builds an operator from row-major entries, rejecting empty shapes and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!("{rows}x{cols} has no entries")));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{} entries for a {rows}x{cols} operator",
                data.len()
            )));
        }
        if let Some(pos) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Operator { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "operator dimensions must be positive");
        Operator {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut op = Self::zeros(size, size);
        for i in 0..size {
            op[(i, i)] = ONE;
        }
        op
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(rows > 0 && cols > 0, "operator dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Operator { rows, cols, data }
    }

    /// Real matrix from nested rows; panics on ragged input.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        assert!(rows.iter().all(|r| r.as_ref().len() == cols), "ragged rows");
        Self::from_fn(rows.len(), cols, |i, j| {
            Complex64::new(rows[i].as_ref()[j], 0.0)
        })
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut op = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            op[(i, i)] = v;
        }
        op
    }

    /// Parses rows of `[re, im]` pairs.
    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::InvalidShape(format!(
                "row {bad} has {} entries, expected {cols}",
                rows[bad].len()
            )));
        }
        let data = rows
            .iter()
            .flatten()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Copies the `rows x cols` window starting at `(row0, col0)`.
    pub fn submatrix(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        assert!(row0 + rows <= self.rows && col0 + cols <= self.cols);
        Self::from_fn(rows, cols, |i, j| self[(row0 + i, col0 + j)])
    }

    pub fn checked_add(&self, other: &Operator) -> Result<Operator> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &Operator) -> Result<Operator> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &Operator,
        op: &'static str,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Operator> {
        if self.shape() != other.shape() {
            return Err(Error::Shape {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(Operator {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self * v` for a column vector `v`.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::Shape {
                op: "apply",
                left: self.shape(),
                right: (v.len(), 1),
            });
        }
        Ok(self
            .data
            .chunks(self.cols)
            .map(|row| row.iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols) {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>10.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// Operator arithmetic panics on shape mismatch; use the checked_* / free
// functions where shapes come from outside.
impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.checked_add(rhs).expect("operator add")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.checked_sub(rhs).expect("operator sub")
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        matmul(self, rhs).expect("operator mul")
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.map(|z| -z)
    }
}

/// Standard matrix product.
pub fn matmul(x: &Operator, y: &Operator) -> Result<Operator> {
    if x.cols != y.rows {
        return Err(Error::Shape {
            op: "matmul",
            left: x.shape(),
            right: y.shape(),
        });
    }
    let mut out = vec![ZERO; x.rows * y.cols];
    for (i, out_row) in out.chunks_mut(y.cols).enumerate() {
        for (k, &a) in x.row(i).iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (o, &b) in out_row.iter_mut().zip(y.row(k)) {
                *o += a * b;
            }
        }
    }
    Ok(Operator {
        rows: x.rows,
        cols: y.cols,
        data: out,
    })
}

/// Conjugate transpose.
pub fn adjoint(x: &Operator) -> Operator {
    Operator::from_fn(x.cols, x.rows, |i, j| x[(j, i)].conj())
}

/// Kronecker product, row-major lexicographic.
pub fn kron(x: &Operator, y: &Operator) -> Operator {
    let rows = x.rows * y.rows;
    let cols = x.cols * y.cols;
    Operator::from_fn(rows, cols, |r, c| {
        let (i, k) = (r / y.rows, r % y.rows);
        let (j, l) = (c / y.cols, c % y.cols);
        x[(i, j)] * y[(k, l)]
    })
}

/// Tunables for [`spectral_norm_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSettings {
    pub svd_cutoff: usize,
    pub max_iterations: usize,
}

impl Default for NormSettings {
    fn default() -> Self {
        NormSettings {
            svd_cutoff: DEFAULT_SVD_CUTOFF,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Largest singular value.
pub fn spectral_norm(x: &Operator, tol: f64) -> Result<f64> {
    spectral_norm_with(x, tol, &NormSettings::default())
}

/// Largest singular value: full SVD up to `settings.svd_cutoff`, power
/// iteration on `x* x` above it.
pub fn spectral_norm_with(x: &Operator, tol: f64, settings: &NormSettings) -> Result<f64> {
    if x.rows.max(x.cols) <= settings.svd_cutoff {
        Ok(svd_norm(x))
    } else {
        power_iteration_norm(x, tol, settings.max_iterations)
    }
}

pub(crate) fn svd_norm(x: &Operator) -> f64 {
    x.to_nalgebra()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Power iteration on `x* x` without forming it.
///
/// Stops once the eigen-residual `‖x*x v − μ v‖` drops below `tol · μ`,
/// which bounds the relative error of `μ = σ²` by `tol`.
pub fn power_iteration_norm(x: &Operator, tol: f64, max_iterations: usize) -> Result<f64> {
    if x.data.iter().all(|&z| z == ZERO) {
        return Ok(0.0);
    }
    let xh = adjoint(x);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f90_1234);
    let mut v: Vec<Complex64> = (0..x.cols)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    normalize(&mut v);

    for _ in 0..max_iterations {
        let xv = x.apply(&v)?;
        let mu: f64 = xv.iter().map(|z| z.norm_sqr()).sum();
        let w = xh.apply(&xv)?;
        if mu == 0.0 {
            // Start vector landed in the kernel; perturb and retry.
            v.iter_mut()
                .enumerate()
                .for_each(|(i, z)| *z += Complex64::new(1.0 + i as f64, 0.0));
            normalize(&mut v);
            continue;
        }
        let residual = w
            .iter()
            .zip(&v)
            .map(|(&wi, &vi)| (wi - vi * mu).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual <= tol * mu {
            return Ok(mu.sqrt());
        }
        v = w;
        normalize(&mut v);
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
    })
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|z| *z /= norm);
    }
}

/// Checks `‖x − x*‖_F ≤ tol · ‖x‖_F` and returns `(x + x*) / 2`.
pub fn symmetrize(x: &Operator, tol: f64) -> Result<Operator> {
    if !x.is_square() {
        return Err(Error::Shape {
            op: "symmetrize",
            left: x.shape(),
            right: (x.cols, x.rows),
        });
    }
    let xh = adjoint(x);
    let asymmetry = (x - &xh).frobenius_norm();
    let allowed = tol * x.frobenius_norm().max(1e-12);
    if asymmetry > allowed {
        return Err(Error::NotHermitian { asymmetry, allowed });
    }
    Ok((x + &xh).scale(Complex64::new(0.5, 0.0)))
}

/// Ascending eigenvalues of the Hermitian part of `x`.
pub fn hermitian_eigenvalues(x: &Operator, tol: f64) -> Result<Vec<f64>> {
    let h = symmetrize(x, tol)?;
    let mut values: Vec<f64> = h
        .to_nalgebra()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Smallest eigenvalue of `(x + x*) / 2`.
pub fn hermitian_min_eig(x: &Operator, tol: f64) -> Result<f64> {
    Ok(hermitian_eigenvalues(x, tol)?[0])
}

/// Positive square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in `[−tol·‖x‖, 0)` are clamped to zero; anything lower is rejected.
pub fn psd_sqrt(x: &Operator, tol: f64) -> Result<Operator> {
    let h = symmetrize(x, tol)?;
    let eig = h.to_nalgebra().symmetric_eigen();
    let scale = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let floor = -tol * scale.max(1e-12);
    let mut roots = Vec::with_capacity(eig.eigenvalues.len());
    for &value in eig.eigenvalues.iter() {
        if value < floor {
            return Err(Error::NotPositive {
                eigenvalue: value,
                floor,
            });
        }
        roots.push(value.max(0.0).sqrt());
    }
    let n = h.rows;
    let u = &eig.eigenvectors;
    Ok(Operator::from_fn(n, n, |i, j| {
        (0..n)
            .map(|m| u[(i, m)] * u[(j, m)].conj() * roots[m])
            .sum()
    }))
}

/// `‖x − y‖_F / max(‖y‖_F, floor)`.
pub fn relative_residual(x: &Operator, y: &Operator, floor: f64) -> Result<f64> {
    Ok(x.checked_sub(y)?.frobenius_norm() / y.frobenius_norm().max(floor))
}

pub fn vector_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨x, y⟩ = Σ x_i conj(y_i)`, linear in the first slot.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(&a, &b)| a * b.conj()).sum()
}

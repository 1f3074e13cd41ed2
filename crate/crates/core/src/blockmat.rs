//! Square block matrices with `d x d` complex blocks, the Schur block
//! product and its `k`-fold matrix lift.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{adjoint, matmul, spectral_norm, Operator};

/// `n x n` array of `d x d` operators, acting on `C^n ⊗ C^d`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "BlockMatrixRepr", try_from = "BlockMatrixRepr")]
pub struct BlockMatrix {
    n: usize,
    d: usize,
    /// Row-major over `(i, j)`.
    blocks: Vec<Operator>,
}

#[derive(Serialize, Deserialize)]
struct BlockMatrixRepr {
    n: usize,
    d: usize,
    blocks: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

impl From<BlockMatrix> for BlockMatrixRepr {
    fn from(a: BlockMatrix) -> Self {
        BlockMatrixRepr {
            n: a.n,
            d: a.d,
            blocks: a
                .blocks
                .chunks(a.n)
                .map(|row| row.iter().map(Operator::to_pairs).collect())
                .collect(),
        }
    }
}

impl TryFrom<BlockMatrixRepr> for BlockMatrix {
    type Error = Error;

    fn try_from(repr: BlockMatrixRepr) -> Result<Self> {
        if repr.blocks.len() != repr.n {
            return Err(Error::InvalidShape(format!(
                "declared n = {} but found {} block rows",
                repr.n,
                repr.blocks.len()
            )));
        }
        let mut rows = Vec::with_capacity(repr.n);
        for (i, row) in repr.blocks.iter().enumerate() {
            let mut parsed = Vec::with_capacity(row.len());
            for (j, block) in row.iter().enumerate() {
                parsed.push(
                    Operator::from_pairs(block)
                        .map_err(|e| Error::InvalidShape(format!("block ({i}, {j}): {e}")))?,
                );
            }
            rows.push(parsed);
        }
        let a = BlockMatrix::from_rows(rows)?;
        if a.d != repr.d {
            return Err(Error::InvalidShape(format!(
                "declared d = {} but blocks are {}x{}",
                repr.d, a.d, a.d
            )));
        }
        Ok(a)
    }
}

impl BlockMatrix {
    /// Validates that `rows` is `n x n` and every block is the same `d x d`.
    pub fn from_rows(rows: Vec<Vec<Operator>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidShape(
                "block matrix needs at least one block".into(),
            ));
        }
        let d = rows[0][0].rows();
        let mut blocks = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidShape(format!(
                    "block row {i} has {} blocks, expected {n}",
                    row.len()
                )));
            }
            for (j, block) in row.into_iter().enumerate() {
                if block.shape() != (d, d) {
                    return Err(Error::InvalidShape(format!(
                        "block ({i}, {j}) is {:?}, expected ({d}, {d})",
                        block.shape()
                    )));
                }
                blocks.push(block);
            }
        }
        Ok(BlockMatrix { n, d, blocks })
    }

    pub fn from_fn(n: usize, d: usize, mut f: impl FnMut(usize, usize) -> Operator) -> Self {
        let mut blocks = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let block = f(i, j);
                assert_eq!(block.shape(), (d, d), "block ({i}, {j}) has wrong shape");
                blocks.push(block);
            }
        }
        BlockMatrix { n, d, blocks }
    }

    /// Scalar blocks (`d = 1`).
    pub fn from_scalars<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        Self::from_fn(n, 1, |i, j| {
            Operator::from_real_rows(&[[rows[i].as_ref()[j]]])
        })
    }

    /// Splits an `(n d)`-square operator into `d x d` blocks.
    pub fn from_flat(x: &Operator, n: usize, d: usize) -> Result<Self> {
        if x.shape() != (n * d, n * d) {
            return Err(Error::InvalidShape(format!(
                "operator {:?} cannot be split into {n}x{n} blocks of size {d}",
                x.shape()
            )));
        }
        Ok(Self::from_fn(n, d, |i, j| x.submatrix(i * d, j * d, d, d)))
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self::from_fn(n, d, |_, _| Operator::zeros(d, d))
    }

    /// Block identity: `I_d` on the diagonal, zero elsewhere.
    pub fn identity(n: usize, d: usize) -> Self {
        Self::from_fn(n, d, |i, j| {
            if i == j {
                Operator::identity(d)
            } else {
                Operator::zeros(d, d)
            }
        })
    }

    /// Unit of the Schur block product: every block is `I_d`.
    pub fn schur_unit(n: usize, d: usize) -> Self {
        Self::from_fn(n, d, |_, _| Operator::identity(d))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Side length of the flattened operator, `n d`.
    pub fn dim(&self) -> usize {
        self.n * self.d
    }

    pub fn block(&self, i: usize, j: usize) -> &Operator {
        assert!(i < self.n && j < self.n, "block ({i}, {j}) out of range");
        &self.blocks[i * self.n + j]
    }

    pub fn block_mut(&mut self, i: usize, j: usize) -> &mut Operator {
        assert!(i < self.n && j < self.n, "block ({i}, {j}) out of range");
        &mut self.blocks[i * self.n + j]
    }

    /// The operator on `C^n ⊗ C^d`: entry `(i d + s, j d + t)` is `a_ij[s, t]`.
    pub fn flatten(&self) -> Operator {
        let d = self.d;
        Operator::from_fn(self.dim(), self.dim(), |r, c| {
            self.block(r / d, c / d)[(r % d, c % d)]
        })
    }

    /// Block-matrix adjoint: block `(i, j)` is `a_ji*`.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, self.d, |i, j| adjoint(self.block(j, i)))
    }

    /// Position-preserving adjoint: block `(i, j)` is `a_ij*`.
    pub fn entrywise_adjoint(&self) -> Self {
        Self::from_fn(self.n, self.d, |i, j| adjoint(self.block(i, j)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_fn(self.n, self.d, |i, j| self.block(i, j).scale(c))
    }

    pub fn checked_add(&self, other: &BlockMatrix) -> Result<Self> {
        check_same_shape("add", self, other)?;
        Ok(Self::from_fn(self.n, self.d, |i, j| {
            self.block(i, j) + other.block(i, j)
        }))
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .map(Operator::max_abs)
            .fold(0.0, f64::max)
    }

    /// Spectral norm of block row `i`, i.e. `‖Σ_j a_ij a_ij*‖^{1/2}`.
    pub fn block_row_norm(&self, i: usize, tol: f64) -> Result<f64> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n,
            });
        }
        let mut gram = Operator::zeros(self.d, self.d);
        for j in 0..self.n {
            let a = self.block(i, j);
            gram = &gram + &matmul(a, &adjoint(a))?;
        }
        Ok(spectral_norm(&gram, tol)?.sqrt())
    }

    /// Spectral norm of block column `j`, i.e. `‖Σ_i a_ij* a_ij‖^{1/2}`.
    pub fn block_col_norm(&self, j: usize, tol: f64) -> Result<f64> {
        if j >= self.n {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.n,
            });
        }
        let mut gram = Operator::zeros(self.d, self.d);
        for i in 0..self.n {
            let a = self.block(i, j);
            gram = &gram + &matmul(&adjoint(a), a)?;
        }
        Ok(spectral_norm(&gram, tol)?.sqrt())
    }
}

impl std::fmt::Debug for BlockMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BlockMatrix(n = {}, d = {}) ", self.n, self.d)?;
        self.flatten().fmt(f)
    }
}

fn check_same_shape(op: &'static str, a: &BlockMatrix, b: &BlockMatrix) -> Result<()> {
    if a.n != b.n || a.d != b.d {
        return Err(Error::Shape {
            op,
            left: (a.n, a.d),
            right: (b.n, b.d),
        });
    }
    Ok(())
}

/// Schur block product: block `(i, j)` is `a_ij b_ij`.
pub fn schur_block_product(a: &BlockMatrix, b: &BlockMatrix) -> Result<BlockMatrix> {
    check_same_shape("schur_block_product", a, b)?;
    let blocks = a
        .blocks
        .iter()
        .zip(&b.blocks)
        .map(|(x, y)| matmul(x, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockMatrix {
        n: a.n,
        d: a.d,
        blocks,
    })
}

/// Ordinary product of block matrices: block `(i, m)` is `Σ_j a_ij b_jm`.
pub fn block_matmul(a: &BlockMatrix, b: &BlockMatrix) -> Result<BlockMatrix> {
    check_same_shape("block_matmul", a, b)?;
    let (n, d) = (a.n, a.d);
    let mut blocks = Vec::with_capacity(n * n);
    for i in 0..n {
        for m in 0..n {
            let mut acc = Operator::zeros(d, d);
            for j in 0..n {
                acc = &acc + &matmul(a.block(i, j), b.block(j, m))?;
            }
            blocks.push(acc);
        }
    }
    Ok(BlockMatrix { n, d, blocks })
}

/// Keeps the diagonal blocks and zeroes the rest.
pub fn diag_block(a: &BlockMatrix) -> BlockMatrix {
    BlockMatrix::from_fn(a.n, a.d, |i, j| {
        if i == j {
            a.block(i, i).clone()
        } else {
            Operator::zeros(a.d, a.d)
        }
    })
}

/// `max_i ‖Σ_j a_ij a_ij*‖^{1/2}`.
pub fn row_norm(a: &BlockMatrix, tol: f64) -> Result<f64> {
    (0..a.n).try_fold(0.0, |acc, i| Ok(f64::max(acc, a.block_row_norm(i, tol)?)))
}

/// `max_j ‖Σ_i a_ij* a_ij‖^{1/2}`.
pub fn col_norm(a: &BlockMatrix, tol: f64) -> Result<f64> {
    (0..a.n).try_fold(0.0, |acc, j| Ok(f64::max(acc, a.block_col_norm(j, tol)?)))
}

/// A `k x k` matrix whose entries are `n x n` block matrices with `d x d` blocks.
#[derive(Clone, PartialEq)]
pub struct Lift {
    k: usize,
    n: usize,
    d: usize,
    entries: Vec<BlockMatrix>,
}

impl Lift {
    pub fn new(entries: Vec<Vec<BlockMatrix>>) -> Result<Self> {
        let k = entries.len();
        if k == 0 {
            return Err(Error::InvalidShape("lift needs at least one entry".into()));
        }
        let (n, d) = (entries[0][0].n, entries[0][0].d);
        let mut flat = Vec::with_capacity(k * k);
        for (p, row) in entries.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidShape(format!(
                    "lift row {p} has {} entries, expected {k}",
                    row.len()
                )));
            }
            for (q, entry) in row.into_iter().enumerate() {
                if entry.n != n || entry.d != d {
                    return Err(Error::InvalidShape(format!(
                        "lift entry ({p}, {q}) has (n, d) = ({}, {}), expected ({n}, {d})",
                        entry.n, entry.d
                    )));
                }
                flat.push(entry);
            }
        }
        Ok(Lift {
            k,
            n,
            d,
            entries: flat,
        })
    }

    /// Identity of the lifted Schur product: `E` on the diagonal, zero elsewhere.
    pub fn schur_identity(k: usize, n: usize, d: usize) -> Self {
        let entries = (0..k)
            .map(|p| {
                (0..k)
                    .map(|q| {
                        if p == q {
                            BlockMatrix::schur_unit(n, d)
                        } else {
                            BlockMatrix::zeros(n, d)
                        }
                    })
                    .collect()
            })
            .collect();
        Lift::new(entries).expect("uniform by construction")
    }

    /// Inverse of [`Lift::flatten`].
    pub fn from_flat(x: &Operator, k: usize, n: usize, d: usize) -> Result<Self> {
        let side = n * d;
        if x.shape() != (k * side, k * side) {
            return Err(Error::InvalidShape(format!(
                "operator {:?} cannot be split into a {k}x{k} lift of ({n}, {d}) block matrices",
                x.shape()
            )));
        }
        let entries = (0..k)
            .map(|p| {
                (0..k)
                    .map(|q| {
                        BlockMatrix::from_flat(&x.submatrix(p * side, q * side, side, side), n, d)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Lift::new(entries)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn entry(&self, p: usize, q: usize) -> &BlockMatrix {
        assert!(
            p < self.k && q < self.k,
            "lift entry ({p}, {q}) out of range"
        );
        &self.entries[p * self.k + q]
    }

    /// Operator on `C^k ⊗ C^n ⊗ C^d`, flat index `(κ n + i) d + s`.
    pub fn flatten(&self) -> Operator {
        let side = self.n * self.d;
        let flats: Vec<Operator> = self.entries.iter().map(BlockMatrix::flatten).collect();
        Operator::from_fn(self.k * side, self.k * side, |r, c| {
            flats[(r / side) * self.k + c / side][(r % side, c % side)]
        })
    }
}

impl std::fmt::Debug for Lift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Lift(k = {}, n = {}, d = {}) ", self.k, self.n, self.d)?;
        self.flatten().fmt(f)
    }
}

/// Lifted Schur product: entry `(p, q)` is `Σ_l a[p][l] □ b[l][q]`, summed in order `l = 0..k`.
pub fn lift_schur_k(a: &Lift, b: &Lift) -> Result<Lift> {
    if (a.k, a.n, a.d) != (b.k, b.n, b.d) {
        return Err(Error::Shape {
            op: "lift_schur_k",
            left: (a.k, a.n * a.d),
            right: (b.k, b.n * b.d),
        });
    }
    let k = a.k;
    let mut entries = Vec::with_capacity(k * k);
    for p in 0..k {
        for q in 0..k {
            let mut acc = BlockMatrix::zeros(a.n, a.d);
            for l in 0..k {
                acc = acc.checked_add(&schur_block_product(a.entry(p, l), b.entry(l, q))?)?;
            }
            entries.push(acc);
        }
    }
    Ok(Lift {
        k,
        n: a.n,
        d: a.d,
        entries,
    })
}

//! Explicit dense realisations of the representations λ, ρ, σ, the flip
//! `F`, the isometry `V` and the projection `Q` on `C^n ⊗ C^d ⊗ C^n`.
//!
//! Basis vector `(i, s, k)` (left index, Hilbert index, right index) has flat
//! index `(i·d + s)·n + k`. Vectors on `C^n ⊗ C^d` use `i·d + s`, matching
//! [`BlockMatrix::flatten`].
//!
//! With these conventions `λ(A) = kron(flatten(A), I_n)`, and the Schur block
//! product factors as `A □ B = V* λ(A) F λ(B) V = V* λ(A) ρ(B) V`.

use num_complex::Complex64;

use crate::blockmat::BlockMatrix;
use crate::error::{Error, Result};
use crate::linalg::{adjoint, matmul, Operator, ONE, ZERO};

/// Above this triple-space dimension callers should prefer the matrix-free routines.
pub const DENSE_LIMIT: usize = 600;

/// Flat index of `(i, s, k)` on `C^n ⊗ C^d ⊗ C^n`.
#[inline]
pub fn triple_index(n: usize, d: usize, i: usize, s: usize, k: usize) -> usize {
    (i * d + s) * n + k
}

/// Dimension `n·d·n` of the triple space.
pub fn triple_dim(n: usize, d: usize) -> usize {
    n * d * n
}

/// `λ(A)`: entry `((i,s,k),(j,t,l)) = a_ij[s,t] δ_kl`.
pub fn build_lambda(a: &BlockMatrix) -> Operator {
    let (n, d) = (a.n(), a.d());
    let dim = triple_dim(n, d);
    let mut out = Operator::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let block = a.block(i, j);
            for s in 0..d {
                for t in 0..d {
                    for k in 0..n {
                        out[(triple_index(n, d, i, s, k), triple_index(n, d, j, t, k))] =
                            block[(s, t)];
                    }
                }
            }
        }
    }
    out
}

/// `ρ(A)`: entry `((i,s,k),(j,t,l)) = δ_ij a_kl[s,t]`.
pub fn build_rho(a: &BlockMatrix) -> Operator {
    let (n, d) = (a.n(), a.d());
    let dim = triple_dim(n, d);
    let mut out = Operator::zeros(dim, dim);
    for k in 0..n {
        for l in 0..n {
            let block = a.block(k, l);
            for s in 0..d {
                for t in 0..d {
                    for i in 0..n {
                        out[(triple_index(n, d, i, s, k), triple_index(n, d, i, t, l))] =
                            block[(s, t)];
                    }
                }
            }
        }
    }
    out
}

/// `σ(A)`: entry `((i,s,k),(j,t,l)) = a_ij[s,t] δ_ik δ_jl`.
pub fn build_sigma(a: &BlockMatrix) -> Operator {
    let (n, d) = (a.n(), a.d());
    let dim = triple_dim(n, d);
    let mut out = Operator::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let block = a.block(i, j);
            for s in 0..d {
                for t in 0..d {
                    out[(triple_index(n, d, i, s, i), triple_index(n, d, j, t, j))] = block[(s, t)];
                }
            }
        }
    }
    out
}

/// Flip `F`: swaps the outer legs, `(i, s, k) ↦ (k, s, i)`.
pub fn build_flip(n: usize, d: usize) -> Operator {
    let dim = triple_dim(n, d);
    let mut out = Operator::zeros(dim, dim);
    for i in 0..n {
        for s in 0..d {
            for k in 0..n {
                out[(triple_index(n, d, k, s, i), triple_index(n, d, i, s, k))] = ONE;
            }
        }
    }
    out
}

/// Isometry `V: C^n ⊗ C^d → C^n ⊗ C^d ⊗ C^n`, `(j, t) ↦ (j, t, j)`.
pub fn build_isometry(n: usize, d: usize) -> Operator {
    let mut out = Operator::zeros(triple_dim(n, d), n * d);
    for j in 0..n {
        for t in 0..d {
            out[(triple_index(n, d, j, t, j), j * d + t)] = ONE;
        }
    }
    out
}

/// Range projection of `V`: ones exactly at the `(i, s, i)` diagonal positions.
pub fn build_projection(n: usize, d: usize) -> Operator {
    let dim = triple_dim(n, d);
    let mut out = Operator::zeros(dim, dim);
    for i in 0..n {
        for s in 0..d {
            let p = triple_index(n, d, i, s, i);
            out[(p, p)] = ONE;
        }
    }
    out
}

/// Kronecker block product `λ(A) ρ(B)`: entry `((i,s,k),(j,t,l)) = (a_ij b_kl)[s,t]`.
pub fn kronecker_block_product(a: &BlockMatrix, b: &BlockMatrix) -> Result<Operator> {
    check_shapes("kronecker_block_product", a, b)?;
    matmul(&build_lambda(a), &build_rho(b))
}

fn check_shapes(op: &'static str, a: &BlockMatrix, b: &BlockMatrix) -> Result<()> {
    if (a.n(), a.d()) != (b.n(), b.d()) {
        return Err(Error::Shape {
            op,
            left: (a.n(), a.d()),
            right: (b.n(), b.d()),
        });
    }
    Ok(())
}

/// The fixed operators `V`, `F`, `Q` for one `(n, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StinespringSystem {
    n: usize,
    d: usize,
    v: Operator,
    v_adj: Operator,
    f: Operator,
    q: Operator,
}

impl StinespringSystem {
    pub fn new(n: usize, d: usize) -> Self {
        assert!(n > 0 && d > 0, "n and d must be positive");
        let v = build_isometry(n, d);
        StinespringSystem {
            n,
            d,
            v_adj: adjoint(&v),
            v,
            f: build_flip(n, d),
            q: build_projection(n, d),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        triple_dim(self.n, self.d)
    }

    pub fn isometry(&self) -> &Operator {
        &self.v
    }

    pub fn isometry_adjoint(&self) -> &Operator {
        &self.v_adj
    }

    pub fn flip(&self) -> &Operator {
        &self.f
    }

    pub fn projection(&self) -> &Operator {
        &self.q
    }

    fn check(&self, a: &BlockMatrix) -> Result<()> {
        if (a.n(), a.d()) != (self.n, self.d) {
            return Err(Error::Shape {
                op: "stinespring",
                left: (self.n, self.d),
                right: (a.n(), a.d()),
            });
        }
        Ok(())
    }

    /// `V* X V` for an operator `X` on the triple space.
    pub fn compress(&self, x: &Operator) -> Result<Operator> {
        matmul(&self.v_adj, &matmul(x, &self.v)?)
    }

    /// `V* λ(A) F λ(B) V`.
    pub fn flip_form(&self, a: &BlockMatrix, b: &BlockMatrix) -> Result<Operator> {
        self.check(a)?;
        self.check(b)?;
        let right = matmul(&self.f, &matmul(&build_lambda(b), &self.v)?)?;
        matmul(&matmul(&self.v_adj, &build_lambda(a))?, &right)
    }

    /// `V* λ(A) ρ(B) V`.
    pub fn rho_form(&self, a: &BlockMatrix, b: &BlockMatrix) -> Result<Operator> {
        self.check(a)?;
        self.check(b)?;
        let right = matmul(&build_rho(b), &self.v)?;
        matmul(&matmul(&self.v_adj, &build_lambda(a))?, &right)
    }
}

/// Matrix-free application of the same operators, for triple spaces too large to materialise.
pub mod matrix_free {
    use super::*;

    fn check_len(op: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected != got {
            return Err(Error::Shape {
                op,
                left: (expected, 1),
                right: (got, 1),
            });
        }
        Ok(())
    }

    /// `λ(A) x`.
    pub fn apply_lambda(a: &BlockMatrix, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let (n, d) = (a.n(), a.d());
        check_len("apply_lambda", triple_dim(n, d), x.len())?;
        let mut y = vec![ZERO; x.len()];
        for i in 0..n {
            for j in 0..n {
                let block = a.block(i, j);
                for s in 0..d {
                    for t in 0..d {
                        let c = block[(s, t)];
                        for k in 0..n {
                            y[triple_index(n, d, i, s, k)] += c * x[triple_index(n, d, j, t, k)];
                        }
                    }
                }
            }
        }
        Ok(y)
    }

    /// `ρ(A) x`.
    pub fn apply_rho(a: &BlockMatrix, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let (n, d) = (a.n(), a.d());
        check_len("apply_rho", triple_dim(n, d), x.len())?;
        let mut y = vec![ZERO; x.len()];
        for k in 0..n {
            for l in 0..n {
                let block = a.block(k, l);
                for s in 0..d {
                    for t in 0..d {
                        let c = block[(s, t)];
                        for i in 0..n {
                            y[triple_index(n, d, i, s, k)] += c * x[triple_index(n, d, i, t, l)];
                        }
                    }
                }
            }
        }
        Ok(y)
    }

    /// `σ(A) x`.
    pub fn apply_sigma(a: &BlockMatrix, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let (n, d) = (a.n(), a.d());
        check_len("apply_sigma", triple_dim(n, d), x.len())?;
        let mut y = vec![ZERO; x.len()];
        for i in 0..n {
            for j in 0..n {
                let block = a.block(i, j);
                for s in 0..d {
                    for t in 0..d {
                        y[triple_index(n, d, i, s, i)] +=
                            block[(s, t)] * x[triple_index(n, d, j, t, j)];
                    }
                }
            }
        }
        Ok(y)
    }

    /// `F x`.
    pub fn apply_flip(n: usize, d: usize, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len("apply_flip", triple_dim(n, d), x.len())?;
        let mut y = vec![ZERO; x.len()];
        for i in 0..n {
            for s in 0..d {
                for k in 0..n {
                    y[triple_index(n, d, k, s, i)] = x[triple_index(n, d, i, s, k)];
                }
            }
        }
        Ok(y)
    }

    /// `V ξ`.
    pub fn apply_isometry(n: usize, d: usize, xi: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len("apply_isometry", n * d, xi.len())?;
        let mut y = vec![ZERO; triple_dim(n, d)];
        for j in 0..n {
            for t in 0..d {
                y[triple_index(n, d, j, t, j)] = xi[j * d + t];
            }
        }
        Ok(y)
    }

    /// `V* x`.
    pub fn apply_isometry_adjoint(n: usize, d: usize, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len("apply_isometry_adjoint", triple_dim(n, d), x.len())?;
        Ok((0..n)
            .flat_map(|j| (0..d).map(move |t| (j, t)))
            .map(|(j, t)| x[triple_index(n, d, j, t, j)])
            .collect())
    }

    /// `V* λ(A) F λ(B) V ξ`.
    pub fn apply_factorization(
        a: &BlockMatrix,
        b: &BlockMatrix,
        xi: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        check_shapes("apply_factorization", a, b)?;
        let (n, d) = (a.n(), a.d());
        let x = apply_isometry(n, d, xi)?;
        let x = apply_lambda(b, &x)?;
        let x = apply_flip(n, d, &x)?;
        let x = apply_lambda(a, &x)?;
        apply_isometry_adjoint(n, d, &x)
    }

    /// `V* λ(A) ρ(B) V ξ`.
    pub fn apply_rho_factorization(
        a: &BlockMatrix,
        b: &BlockMatrix,
        xi: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        check_shapes("apply_rho_factorization", a, b)?;
        let (n, d) = (a.n(), a.d());
        let x = apply_isometry(n, d, xi)?;
        let x = apply_rho(b, &x)?;
        let x = apply_lambda(a, &x)?;
        apply_isometry_adjoint(n, d, &x)
    }

    /// `V* λ(A) F λ(B) V` materialised column by column on `C^n ⊗ C^d` only.
    pub fn factorization_operator(a: &BlockMatrix, b: &BlockMatrix) -> Result<Operator> {
        materialize(a.dim(), |e| apply_factorization(a, b, e))
    }

    /// `V* λ(A) ρ(B) V`, same approach.
    pub fn rho_factorization_operator(a: &BlockMatrix, b: &BlockMatrix) -> Result<Operator> {
        materialize(a.dim(), |e| apply_rho_factorization(a, b, e))
    }

    fn materialize(
        dim: usize,
        apply: impl Fn(&[Complex64]) -> Result<Vec<Complex64>>,
    ) -> Result<Operator> {
        let mut out = Operator::zeros(dim, dim);
        let mut e = vec![ZERO; dim];
        for c in 0..dim {
            e[c] = ONE;
            for (r, v) in apply(&e)?.into_iter().enumerate() {
                out[(r, c)] = v;
            }
            e[c] = ZERO;
        }
        Ok(out)
    }
}

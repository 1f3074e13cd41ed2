//! Checkers for the factorization of the Schur block product and the
//! identities and inequalities that follow from it.
//!
//! Each checker evaluates one instance and returns a [`PropertyResult`] with
//! `trials == 1`. Residuals are normalised so that the instance passes iff
//! `residual <= tol`; suites combine single-instance results with
//! [`PropertyResult::merge`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blockmat::{
    block_matmul, col_norm, diag_block, lift_schur_k, row_norm, schur_block_product, BlockMatrix,
    Lift,
};
use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, hermitian_min_eig, inner, matmul, psd_sqrt, relative_residual, spectral_norm,
    vector_norm, Operator,
};
use crate::stinespring::{
    build_flip, build_lambda, build_rho, build_sigma, kronecker_block_product, matrix_free,
    triple_dim, StinespringSystem, DENSE_LIMIT,
};

/// Absolute floor under every relative denominator.
pub const RELATIVE_FLOOR: f64 = 1e-12;
/// Accuracy requested from spectral-norm evaluations inside the checkers.
pub const NORM_TOL: f64 = 1e-12;
/// Asymmetry allowed before a matrix handed to the eigen-solver counts as non-Hermitian.
const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub property_id: String,
    pub trials: u64,
    pub failures: u64,
    pub worst_residual: f64,
    pub worst_seed: u64,
    pub tolerance_used: f64,
    /// Named side quantities; merged by maximum.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, f64>,
}

impl PropertyResult {
    /// No trials: vacuously passing.
    pub fn empty(property_id: &str, tolerance: f64) -> Self {
        PropertyResult {
            property_id: property_id.to_string(),
            trials: 0,
            failures: 0,
            worst_residual: 0.0,
            worst_seed: 0,
            tolerance_used: tolerance,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn single(property_id: &str, residual: f64, tolerance: f64) -> Self {
        let residual = if residual.is_nan() {
            f64::MAX
        } else {
            residual
        };
        PropertyResult {
            property_id: property_id.to_string(),
            trials: 1,
            failures: u64::from(residual > tolerance),
            worst_residual: residual,
            worst_seed: 0,
            tolerance_used: tolerance,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.diagnostics.insert(name.to_string(), value);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.worst_seed = seed;
        self
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.get(name).copied()
    }

    /// Order-independent combination: counts add, worst residual wins (ties to the smaller seed).
    pub fn merge(&mut self, other: &PropertyResult) {
        debug_assert_eq!(self.property_id, other.property_id);
        if other.trials > 0 {
            let replace = self.trials == 0
                || other.worst_residual > self.worst_residual
                || (other.worst_residual == self.worst_residual
                    && other.worst_seed < self.worst_seed);
            if replace {
                self.worst_residual = other.worst_residual;
                self.worst_seed = other.worst_seed;
            }
        }
        self.trials += other.trials;
        self.failures += other.failures;
        for (name, &value) in &other.diagnostics {
            self.diagnostics
                .entry(name.clone())
                .and_modify(|v| *v = v.max(value))
                .or_insert(value);
        }
    }
}

fn check_pair(op: &'static str, a: &BlockMatrix, b: &BlockMatrix) -> Result<()> {
    if (a.n(), a.d()) != (b.n(), b.d()) {
        return Err(Error::Shape {
            op,
            left: (a.n(), a.d()),
            right: (b.n(), b.d()),
        });
    }
    Ok(())
}

fn rel(x: &Operator, y: &Operator) -> Result<f64> {
    relative_residual(x, y, RELATIVE_FLOOR)
}

/// `A □ B = V* λ(A) F λ(B) V`, and the ρ-form `V* λ(A) ρ(B) V`.
///
/// Residual is `‖flatten(A□B) − form‖_F / max(1, ‖flatten(A□B)‖_F)`, worst of the two forms.
/// Triple spaces above [`DENSE_LIMIT`] are handled matrix-free.
pub fn verify_factorization(a: &BlockMatrix, b: &BlockMatrix, tol: f64) -> Result<PropertyResult> {
    check_pair("verify_factorization", a, b)?;
    let direct = schur_block_product(a, b)?.flatten();
    let (flip_form, rho_form) = if triple_dim(a.n(), a.d()) > DENSE_LIMIT {
        (
            matrix_free::factorization_operator(a, b)?,
            matrix_free::rho_factorization_operator(a, b)?,
        )
    } else {
        let sys = StinespringSystem::new(a.n(), a.d());
        (sys.flip_form(a, b)?, sys.rho_form(a, b)?)
    };
    let denom = direct.frobenius_norm().max(1.0);
    let flip_res = direct.checked_sub(&flip_form)?.frobenius_norm() / denom;
    let rho_res = direct.checked_sub(&rho_form)?.frobenius_norm() / denom;
    Ok(
        PropertyResult::single("factorization", flip_res.max(rho_res), tol)
            .with("flip_residual", flip_res)
            .with("rho_residual", rho_res),
    )
}

/// Structural identities of `V`, `F`, `Q`, λ, ρ and σ on one instance pair.
pub fn verify_structure(a: &BlockMatrix, b: &BlockMatrix, tol: f64) -> Result<PropertyResult> {
    check_pair("verify_structure", a, b)?;
    let (n, d) = (a.n(), a.d());
    let sys = StinespringSystem::new(n, d);
    let v = sys.isometry();
    let vh = sys.isometry_adjoint();
    let f = sys.flip();
    let q = sys.projection();
    let id_small = Operator::identity(n * d);
    let id_big = Operator::identity(sys.dim());
    let lambda_a = build_lambda(a);

    let checks = [
        ("isometry", rel(&matmul(vh, v)?, &id_small)?),
        ("range_projection", rel(&matmul(v, vh)?, q)?),
        ("flip_selfadjoint", rel(&adjoint(f), f)?),
        ("flip_involution", rel(&matmul(f, f)?, &id_big)?),
        ("flip_fixes_range", rel(&matmul(f, v)?, v)?),
        (
            "sigma_unit",
            rel(&build_sigma(&BlockMatrix::identity(n, d)), q)?,
        ),
        (
            "flip_conjugation",
            rel(&matmul(&matmul(f, &lambda_a)?, f)?, &build_rho(a))?,
        ),
        (
            "intertwining",
            rel(&matmul(&build_sigma(a), v)?, &matmul(v, &a.flatten())?)?,
        ),
        (
            "compressed_kronecker",
            rel(
                &matmul(&matmul(q, &kronecker_block_product(a, b)?)?, q)?,
                &build_sigma(&schur_block_product(a, b)?),
            )?,
        ),
    ];
    let worst = checks.iter().map(|c| c.1).fold(0.0, f64::max);
    Ok(checks.iter().fold(
        PropertyResult::single("structure", worst, tol),
        |r, (name, value)| r.with(name, *value),
    ))
}

/// Left and right sides of `‖A □ B‖ ≤ ‖A‖_r ‖B‖_c`.
pub fn livshits_sides(a: &BlockMatrix, b: &BlockMatrix) -> Result<(f64, f64)> {
    check_pair("livshits_sides", a, b)?;
    let lhs = spectral_norm(&schur_block_product(a, b)?.flatten(), NORM_TOL)?;
    let rhs = row_norm(a, NORM_TOL)? * col_norm(b, NORM_TOL)?;
    Ok((lhs, rhs))
}

/// Passes iff `max(0, lhs − rhs) ≤ tol · rhs`.
pub fn verify_livshits(a: &BlockMatrix, b: &BlockMatrix, tol: f64) -> Result<PropertyResult> {
    let (lhs, rhs) = livshits_sides(a, b)?;
    let violation = (lhs - rhs).max(0.0);
    Ok(
        PropertyResult::single("livshits", violation / rhs.max(RELATIVE_FLOOR), tol)
            .with("lhs", lhs)
            .with("rhs", rhs),
    )
}

/// `‖X □ Y‖` where `Y` has `I_d` in every block of row `k` and zeros elsewhere.
pub fn row_norm_via_schur(x: &BlockMatrix, k: usize, tol: f64) -> Result<f64> {
    if k >= x.n() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: x.n(),
        });
    }
    let d = x.d();
    let y = BlockMatrix::from_fn(x.n(), d, |i, _| {
        if i == k {
            Operator::identity(d)
        } else {
            Operator::zeros(d, d)
        }
    });
    spectral_norm(&schur_block_product(x, &y)?.flatten(), tol)
}

/// Every Schur-probed row norm against the block-row Gram norm, and their maximum against `‖X‖_r`.
pub fn verify_sharpness(x: &BlockMatrix, tol: f64) -> Result<PropertyResult> {
    let mut worst: f64 = 0.0;
    let mut best_probe: f64 = 0.0;
    for k in 0..x.n() {
        let probed = row_norm_via_schur(x, k, NORM_TOL)?;
        let exact = x.block_row_norm(k, NORM_TOL)?;
        worst = worst.max((probed - exact).abs() / exact.max(RELATIVE_FLOOR));
        best_probe = best_probe.max(probed);
    }
    let r = row_norm(x, NORM_TOL)?;
    let max_gap = (best_probe - r).abs() / r.max(RELATIVE_FLOOR);
    Ok(PropertyResult::single("sharpness", worst.max(max_gap), tol)
        .with("row_residual", worst)
        .with("max_residual", max_gap))
}

/// Smallest eigenvalues of `diag(A*A) − A*□A` and `diag(A*A) + A*□A`.
pub fn sandwich_gaps(a: &BlockMatrix) -> Result<(f64, f64, f64)> {
    let ah = a.adjoint();
    let d = diag_block(&block_matmul(&ah, a)?).flatten();
    let s = schur_block_product(&ah, a)?.flatten();
    let upper = hermitian_min_eig(&d.checked_sub(&s)?, HERMITIAN_TOL)?;
    let lower = hermitian_min_eig(&d.checked_add(&s)?, HERMITIAN_TOL)?;
    Ok((upper, lower, spectral_norm(&d, NORM_TOL)?))
}

/// `−diag(A*A) ⪯ A*□A ⪯ diag(A*A)`, decided by smallest eigenvalues.
///
/// Residual is the most negative eigenvalue of either gap over `‖diag(A*A)‖`.
pub fn verify_sandwich(a: &BlockMatrix, tol: f64) -> Result<PropertyResult> {
    let (upper, lower, scale) = sandwich_gaps(a)?;
    let residual = (-upper).max(-lower).max(0.0) / scale.max(RELATIVE_FLOOR);
    Ok(PropertyResult::single("sandwich", residual, tol)
        .with("upper_gap_min_eig", upper)
        .with("lower_gap_min_eig", lower)
        .with("diag_norm", scale))
}

/// Both right-hand sides of the Cauchy–Schwarz bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchySchwarzSides {
    pub lhs: f64,
    /// `‖diag(B*B)^{1/2} Ξ‖ · ‖diag(AA*)^{1/2} Γ‖`.
    pub rhs: f64,
    /// `(Σ_ij ‖b_ij ξ_j‖²)^{1/2} · (Σ_ij ‖a_ij* γ_i‖²)^{1/2}`.
    pub rhs_summed: f64,
}

impl CauchySchwarzSides {
    pub fn route_gap(&self) -> f64 {
        (self.rhs - self.rhs_summed).abs() / self.rhs_summed.max(RELATIVE_FLOOR)
    }
}

fn segment(v: &[Complex64], j: usize, d: usize) -> &[Complex64] {
    &v[j * d..(j + 1) * d]
}

pub fn cauchy_schwarz_sides(
    a: &BlockMatrix,
    b: &BlockMatrix,
    xi: &[Complex64],
    gamma: &[Complex64],
    tol: f64,
) -> Result<CauchySchwarzSides> {
    check_pair("verify_cauchy_schwarz", a, b)?;
    let (n, d) = (a.n(), a.d());
    for v in [xi, gamma] {
        if v.len() != n * d {
            return Err(Error::Shape {
                op: "verify_cauchy_schwarz",
                left: (n * d, 1),
                right: (v.len(), 1),
            });
        }
    }
    let lhs = inner(&schur_block_product(a, b)?.flatten().apply(xi)?, gamma).norm();

    // Square roots of the diagonal blocks of diag(B*B) and diag(AA*).
    let mut col_part = 0.0;
    let mut row_part = 0.0;
    for j in 0..n {
        let mut gram_b = Operator::zeros(d, d);
        let mut gram_a = Operator::zeros(d, d);
        for i in 0..n {
            let bij = b.block(i, j);
            gram_b = &gram_b + &matmul(&adjoint(bij), bij)?;
            let aji = a.block(j, i);
            gram_a = &gram_a + &matmul(aji, &adjoint(aji))?;
        }
        col_part += vector_norm(&psd_sqrt(&gram_b, tol)?.apply(segment(xi, j, d))?).powi(2);
        row_part += vector_norm(&psd_sqrt(&gram_a, tol)?.apply(segment(gamma, j, d))?).powi(2);
    }
    let rhs = col_part.sqrt() * row_part.sqrt();

    let mut b_terms = 0.0;
    let mut a_terms = 0.0;
    for i in 0..n {
        for j in 0..n {
            b_terms += vector_norm(&b.block(i, j).apply(segment(xi, j, d))?).powi(2);
            a_terms += vector_norm(&adjoint(a.block(i, j)).apply(segment(gamma, i, d))?).powi(2);
        }
    }
    let rhs_summed = b_terms.sqrt() * a_terms.sqrt();
    Ok(CauchySchwarzSides {
        lhs,
        rhs,
        rhs_summed,
    })
}

/// `|⟨(A□B)Ξ, Γ⟩| ≤ ‖diag(B*B)^{1/2}Ξ‖ ‖diag(AA*)^{1/2}Γ‖`, with the right side computed two ways.
///
/// Residual is the larger of `max(0, lhs − rhs)/(1 + rhs)` and the relative gap between the two
/// right-hand sides.
pub fn verify_cauchy_schwarz(
    a: &BlockMatrix,
    b: &BlockMatrix,
    xi: &[Complex64],
    gamma: &[Complex64],
    tol: f64,
) -> Result<PropertyResult> {
    let sides = cauchy_schwarz_sides(a, b, xi, gamma, tol)?;
    let violation = (sides.lhs - sides.rhs).max(0.0) / (1.0 + sides.rhs);
    let gap = sides.route_gap();
    Ok(
        PropertyResult::single("cauchy_schwarz", violation.max(gap), tol)
            .with("lhs", sides.lhs)
            .with("rhs", sides.rhs)
            .with("rhs_summed", sides.rhs_summed)
            .with("route_gap", gap),
    )
}

/// `A□B = V*λ(A)Pλ(B)V − V*λ(A)(I−P)λ(B)V` with `P = (F + I)/2`, and
/// `V*λ(AB)V = diag(AB)`.
pub fn verify_decomposition(a: &BlockMatrix, b: &BlockMatrix, tol: f64) -> Result<PropertyResult> {
    check_pair("verify_decomposition", a, b)?;
    let sys = StinespringSystem::new(a.n(), a.d());
    let id = Operator::identity(sys.dim());
    let half = Complex64::new(0.5, 0.0);
    let p = (sys.flip() + &id).scale(half);
    let p_perp = &id - &p;
    let projection_res = rel(&matmul(&p, &p)?, &p)?.max(rel(&adjoint(&p), &p)?);

    let lambda_a = build_lambda(a);
    let lambda_b = build_lambda(b);
    let positive = sys.compress(&matmul(&matmul(&lambda_a, &p)?, &lambda_b)?)?;
    let negative = sys.compress(&matmul(&matmul(&lambda_a, &p_perp)?, &lambda_b)?)?;
    let direct = schur_block_product(a, b)?.flatten();
    let difference_res = rel(&positive.checked_sub(&negative)?, &direct)?;

    let ab = block_matmul(a, b)?;
    let diag_ab = diag_block(&ab).flatten();
    let absolute_res = rel(&sys.compress(&build_lambda(&ab))?, &diag_ab)?.max(rel(
        &sys.compress(&matmul(&lambda_a, &lambda_b)?)?,
        &diag_ab,
    )?);

    let worst = projection_res.max(difference_res).max(absolute_res);
    Ok(PropertyResult::single("decomposition", worst, tol)
        .with("projection_residual", projection_res)
        .with("difference_residual", difference_res)
        .with("absolute_residual", absolute_res))
}

/// Ratio `‖□^k(A, B)‖ / (‖A‖ ‖B‖)`; zero when either factor vanishes.
pub fn cb_ratio(a: &Lift, b: &Lift) -> Result<f64> {
    let lifted = lift_schur_k(a, b)?;
    let na = spectral_norm(&a.flatten(), NORM_TOL)?;
    let nb = spectral_norm(&b.flatten(), NORM_TOL)?;
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(spectral_norm(&lifted.flatten(), NORM_TOL)? / (na * nb))
}

/// `‖□^k(A, B)‖ ≤ ‖A‖ ‖B‖ (1 + tol)`; the ratio is kept as a lower witness for `‖□^k‖`.
pub fn verify_cb_level(a: &Lift, b: &Lift, tol: f64) -> Result<PropertyResult> {
    let ratio = cb_ratio(a, b)?;
    Ok(PropertyResult::single("cb_level", (ratio - 1.0).max(0.0), tol).with("ratio", ratio))
}

/// `‖A‖_c = ‖λ(A)V‖` and `‖A‖_r = ‖V*λ(A)‖`.
pub fn verify_lemma_norms(a: &BlockMatrix, tol: f64) -> Result<PropertyResult> {
    let sys = StinespringSystem::new(a.n(), a.d());
    let lambda_a = build_lambda(a);
    let col = col_norm(a, NORM_TOL)?;
    let row = row_norm(a, NORM_TOL)?;
    let col_via = spectral_norm(&matmul(&lambda_a, sys.isometry())?, NORM_TOL)?;
    let row_via = spectral_norm(&matmul(sys.isometry_adjoint(), &lambda_a)?, NORM_TOL)?;
    let col_res = (col - col_via).abs() / col.max(RELATIVE_FLOOR);
    let row_res = (row - row_via).abs() / row.max(RELATIVE_FLOOR);
    Ok(
        PropertyResult::single("lemma_norms", col_res.max(row_res), tol)
            .with("col_residual", col_res)
            .with("row_residual", row_res),
    )
}

/// `diag(A) = V*λ(A)V` and `V*λ(AB)V = V*λ(A)λ(B)V = diag(AB)`.
pub fn verify_lemma_diag(a: &BlockMatrix, b: &BlockMatrix, tol: f64) -> Result<PropertyResult> {
    check_pair("verify_lemma_diag", a, b)?;
    let sys = StinespringSystem::new(a.n(), a.d());
    let diag_res = rel(&sys.compress(&build_lambda(a))?, &diag_block(a).flatten())?;
    let ab = block_matmul(a, b)?;
    let diag_ab = diag_block(&ab).flatten();
    let product_res = rel(&sys.compress(&build_lambda(&ab))?, &diag_ab)?.max(rel(
        &sys.compress(&matmul(&build_lambda(a), &build_lambda(b))?)?,
        &diag_ab,
    )?);
    Ok(
        PropertyResult::single("lemma_diag", diag_res.max(product_res), tol)
            .with("diag_residual", diag_res)
            .with("product_residual", product_res),
    )
}

/// `P = (F + I)/2` for the given shape; exposed for inspection tools.
pub fn flip_positive_projection(n: usize, d: usize) -> Operator {
    let id = Operator::identity(triple_dim(n, d));
    (&build_flip(n, d) + &id).scale(Complex64::new(0.5, 0.0))
}

//! Seeded generation of test operators.
//!
//! All randomness flows through an explicit [`OperatorSampler`]; the same
//! [`RandomSpec`] always reproduces the same matrices bit-for-bit.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::blockmat::{BlockMatrix, Lift};
use crate::linalg::{Operator, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// i.i.d. standard complex Gaussian entries (`E|z|² = 1`).
    #[default]
    GinibreComplex,
    /// Exactly Hermitian; off-diagonal entries standard complex Gaussian, diagonal real Gaussian.
    HermitianGaussian,
    /// Gram-Schmidt orthonormalisation of a Ginibre sample.
    UnitaryHaarApprox,
}

impl Ensemble {
    pub const ALL: [Ensemble; 3] = [
        Ensemble::GinibreComplex,
        Ensemble::HermitianGaussian,
        Ensemble::UnitaryHaarApprox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ensemble::GinibreComplex => "ginibre_complex",
            Ensemble::HermitianGaussian => "hermitian_gaussian",
            Ensemble::UnitaryHaarApprox => "unitary_haar_approx",
        }
    }
}

impl std::str::FromStr for Ensemble {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ensemble::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Ensemble::ALL.iter().map(|e| e.name()).collect();
                format!(
                    "unknown ensemble '{s}', expected one of {}",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub seed: u64,
    pub ensemble: Ensemble,
    /// Entry scale; `None` means `1/sqrt(rows)` for the Gaussian ensembles and 1 for unitaries.
    pub scale: Option<f64>,
}

impl RandomSpec {
    pub fn new(seed: u64, ensemble: Ensemble) -> Self {
        RandomSpec {
            seed,
            ensemble,
            scale: None,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        assert!(
            scale.is_finite() && scale >= 0.0,
            "scale must be finite and nonnegative"
        );
        self.scale = Some(scale);
        self
    }

    pub fn sampler(&self) -> OperatorSampler {
        OperatorSampler {
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            ensemble: self.ensemble,
            scale: self.scale,
        }
    }
}

/// One draw from `spec`. Panics if a Hermitian sample is requested with `rows != cols`.
pub fn random_operator(spec: &RandomSpec, rows: usize, cols: usize) -> Operator {
    spec.sampler().operator(rows, cols)
}

/// splitmix64 finaliser over `(seed, index)`; used for per-trial seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stateful generator; successive draws are independent but reproducible.
#[derive(Debug, Clone)]
pub struct OperatorSampler {
    rng: ChaCha8Rng,
    ensemble: Ensemble,
    scale: Option<f64>,
}

impl OperatorSampler {
    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    fn gaussian(&mut self) -> Complex64 {
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn ginibre(&mut self, rows: usize, cols: usize) -> Operator {
        Operator::from_fn(rows, cols, |_, _| self.gaussian())
    }

    pub fn operator(&mut self, rows: usize, cols: usize) -> Operator {
        let (raw, default_scale) = match self.ensemble {
            Ensemble::GinibreComplex => (self.ginibre(rows, cols), 1.0 / (rows as f64).sqrt()),
            Ensemble::HermitianGaussian => {
                assert_eq!(rows, cols, "Hermitian samples must be square");
                let mut h = Operator::zeros(rows, rows);
                for i in 0..rows {
                    let diag: f64 = StandardNormal.sample(&mut self.rng);
                    h[(i, i)] = Complex64::new(diag, 0.0);
                    for j in i + 1..rows {
                        let z = self.gaussian();
                        h[(i, j)] = z;
                        h[(j, i)] = z.conj();
                    }
                }
                (h, 1.0 / (rows as f64).sqrt())
            }
            Ensemble::UnitaryHaarApprox => {
                let u = if rows >= cols {
                    orthonormal_columns(self.ginibre(rows, cols))
                } else {
                    crate::linalg::adjoint(&orthonormal_columns(self.ginibre(cols, rows)))
                };
                (u, 1.0)
            }
        };
        let scale = self.scale.unwrap_or(default_scale);
        if scale == 0.0 {
            return Operator::zeros(rows, cols);
        }
        raw.scale(Complex64::new(scale, 0.0))
    }

    pub fn vector(&mut self, len: usize) -> Vec<Complex64> {
        (0..len).map(|_| self.gaussian()).collect()
    }

    /// `n x n` blocks of size `d`, drawn as one `(n d) x (n d)` operator.
    pub fn block_matrix(&mut self, n: usize, d: usize) -> BlockMatrix {
        BlockMatrix::from_flat(&self.operator(n * d, n * d), n, d)
            .expect("sampled operator has block-compatible shape")
    }

    /// `k x k` array of `n x n` block matrices, drawn as one `(k n d)`-square operator.
    pub fn lift(&mut self, k: usize, n: usize, d: usize) -> Lift {
        Lift::from_flat(&self.operator(k * n * d, k * n * d), k, n, d)
            .expect("sampled operator has lift-compatible shape")
    }
}

/// Modified Gram-Schmidt on the columns; rank-deficient columns are replaced by zeros.
fn orthonormal_columns(mut x: Operator) -> Operator {
    let (rows, cols) = x.shape();
    for j in 0..cols {
        for p in 0..j {
            let proj: Complex64 = (0..rows).map(|i| x[(i, p)].conj() * x[(i, j)]).sum();
            for i in 0..rows {
                let v = x[(i, p)];
                x[(i, j)] -= proj * v;
            }
        }
        let norm = (0..rows).map(|i| x[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..rows {
            x[(i, j)] = if norm > 0.0 { x[(i, j)] / norm } else { ZERO };
        }
    }
    x
}

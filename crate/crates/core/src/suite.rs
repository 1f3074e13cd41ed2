//! Randomized verification suites and the instance / report file formats.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockmat::{BlockMatrix, Lift};
use crate::error::{Error, Result};
use crate::random::{derive_seed, Ensemble, RandomSpec};
use crate::verify::{self, PropertyResult};

/// Report schema version; bump when the JSON layout changes.
pub const SCHEMA_VERSION: u32 = 1;
/// Largest triple-space dimension `n·d·n` the dense suite accepts.
pub const MAX_DENSE_DIM: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyId {
    Factorization,
    Structure,
    Livshits,
    Sharpness,
    Sandwich,
    CauchySchwarz,
    Decomposition,
    CbLevel,
    LemmaNorms,
    LemmaDiag,
}

impl PropertyId {
    pub const ALL: [PropertyId; 10] = [
        PropertyId::Factorization,
        PropertyId::Structure,
        PropertyId::Livshits,
        PropertyId::Sharpness,
        PropertyId::Sandwich,
        PropertyId::CauchySchwarz,
        PropertyId::Decomposition,
        PropertyId::CbLevel,
        PropertyId::LemmaNorms,
        PropertyId::LemmaDiag,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PropertyId::Factorization => "factorization",
            PropertyId::Structure => "structure",
            PropertyId::Livshits => "livshits",
            PropertyId::Sharpness => "sharpness",
            PropertyId::Sandwich => "sandwich",
            PropertyId::CauchySchwarz => "cauchy_schwarz",
            PropertyId::Decomposition => "decomposition",
            PropertyId::CbLevel => "cb_level",
            PropertyId::LemmaNorms => "lemma_norms",
            PropertyId::LemmaDiag => "lemma_diag",
        }
    }

    /// Identities get 1e-10 (structural and diagonal ones 1e-12), inequalities 1e-8,
    /// the Loewner order 1e-10.
    pub fn default_tolerance(self) -> f64 {
        match self {
            PropertyId::Factorization | PropertyId::Decomposition => 1e-10,
            PropertyId::Structure | PropertyId::LemmaDiag => 1e-12,
            PropertyId::Sandwich => 1e-10,
            PropertyId::Livshits
            | PropertyId::Sharpness
            | PropertyId::CauchySchwarz
            | PropertyId::CbLevel
            | PropertyId::LemmaNorms => 1e-8,
        }
    }

    /// Whether the checker needs the `xi` / `gamma` vectors.
    pub fn needs_vectors(self) -> bool {
        self == PropertyId::CauchySchwarz
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PropertyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PropertyId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<_> = PropertyId::ALL.iter().map(|p| p.as_str()).collect();
                Error::Config(format!(
                    "unknown property '{s}' (known: {})",
                    known.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub ensemble: Ensemble,
    /// Overrides; properties not listed use [`PropertyId::default_tolerance`].
    pub tolerances: BTreeMap<PropertyId, f64>,
    pub properties: Vec<PropertyId>,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            n: 4,
            d: 2,
            k: 2,
            trials: 200,
            seed: 42,
            ensemble: Ensemble::GinibreComplex,
            tolerances: BTreeMap::new(),
            properties: PropertyId::ALL.to_vec(),
        }
    }
}

impl TrialConfig {
    pub fn tolerance(&self, property: PropertyId) -> f64 {
        self.tolerances
            .get(&property)
            .copied()
            .unwrap_or_else(|| property.default_tolerance())
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |name: &str, value: usize, lo: usize, hi: usize| {
            if (lo..=hi).contains(&value) {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} = {value} outside {lo}..={hi}"
                )))
            }
        };
        in_range("n", self.n, 1, 8)?;
        in_range("d", self.d, 1, 4)?;
        in_range("k", self.k, 1, 3)?;
        let dense = self.n * self.d * self.n;
        if dense > MAX_DENSE_DIM {
            return Err(Error::Config(format!(
                "n*d*n = {dense} exceeds the dense limit {MAX_DENSE_DIM}"
            )));
        }
        for (property, &tol) in &self.tolerances {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::Config(format!(
                    "tolerance for {property} must be positive and finite, got {tol}"
                )));
            }
        }
        if self.properties.is_empty() {
            return Err(Error::Config("no properties selected".into()));
        }
        Ok(())
    }
}

/// One random draw for a trial. Every trial draws the same sequence regardless of which
/// properties are selected, so results for a property do not depend on the selection.
#[derive(Debug, Clone)]
pub struct TrialInstance {
    pub seed: u64,
    pub a: BlockMatrix,
    pub b: BlockMatrix,
    pub xi: Vec<Complex64>,
    pub gamma: Vec<Complex64>,
    pub lift_a: Lift,
    pub lift_b: Lift,
}

impl TrialInstance {
    pub fn generate(config: &TrialConfig, trial: u64) -> Self {
        let seed = derive_seed(config.seed, trial);
        let mut sampler = RandomSpec::new(seed, config.ensemble).sampler();
        let (n, d, k) = (config.n, config.d, config.k);
        TrialInstance {
            seed,
            a: sampler.block_matrix(n, d),
            b: sampler.block_matrix(n, d),
            xi: sampler.vector(n * d),
            gamma: sampler.vector(n * d),
            lift_a: sampler.lift(k, n, d),
            lift_b: sampler.lift(k, n, d),
        }
    }
}

/// Runs one property on a trial instance.
pub fn check_trial(property: PropertyId, t: &TrialInstance, tol: f64) -> Result<PropertyResult> {
    let result = match property {
        PropertyId::Factorization => verify::verify_factorization(&t.a, &t.b, tol),
        PropertyId::Structure => verify::verify_structure(&t.a, &t.b, tol),
        PropertyId::Livshits => verify::verify_livshits(&t.a, &t.b, tol),
        PropertyId::Sharpness => verify::verify_sharpness(&t.a, tol),
        PropertyId::Sandwich => verify::verify_sandwich(&t.a, tol),
        PropertyId::CauchySchwarz => {
            verify::verify_cauchy_schwarz(&t.a, &t.b, &t.xi, &t.gamma, tol)
        }
        PropertyId::Decomposition => verify::verify_decomposition(&t.a, &t.b, tol),
        PropertyId::CbLevel => verify::verify_cb_level(&t.lift_a, &t.lift_b, tol),
        PropertyId::LemmaNorms => verify::verify_lemma_norms(&t.a, tol),
        PropertyId::LemmaDiag => verify::verify_lemma_diag(&t.a, &t.b, tol),
    }?;
    Ok(result.with_seed(t.seed))
}

/// Checker errors inside a suite count as failed trials rather than aborting the run.
fn failed_trial(property: PropertyId, seed: u64, tol: f64) -> PropertyResult {
    PropertyResult::single(property.as_str(), f64::MAX, tol)
        .with_seed(seed)
        .with("checker_errors", 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub version: String,
    pub config: TrialConfig,
    pub results: Vec<PropertyResult>,
    pub pass: bool,
    /// Summed checker time per property in milliseconds. Not reproducible.
    pub timings_ms: BTreeMap<String, f64>,
}

impl VerificationReport {
    /// JSON with the timing field removed; identical configs give identical bytes.
    pub fn deterministic_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serialises");
        value
            .as_object_mut()
            .expect("report is an object")
            .remove("timings_ms");
        serde_json::to_string_pretty(&value).expect("report serialises")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// One row per property aggregate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "property_id,trials,failures,worst_residual,worst_seed,tolerance_used,pass,elapsed_ms\n",
        );
        for r in &self.results {
            let elapsed = self.timings_ms.get(&r.property_id).copied().unwrap_or(0.0);
            out.push_str(&format!(
                "{},{},{},{:e},{},{:e},{},{:.3}\n",
                r.property_id,
                r.trials,
                r.failures,
                r.worst_residual,
                r.worst_seed,
                r.tolerance_used,
                r.passed(),
                elapsed
            ));
        }
        out
    }
}

/// Runs every selected property over `config.trials` seeded instances.
///
/// Trials run in parallel; each draws from its own derived seed and results are reduced with
/// the order-independent [`PropertyResult::merge`], so the report does not depend on scheduling.
pub fn run_suite(config: &TrialConfig) -> Result<VerificationReport> {
    config.validate()?;
    let properties: Vec<PropertyId> = {
        let mut p = config.properties.clone();
        p.sort();
        p.dedup();
        p
    };

    let per_trial: Vec<Vec<(PropertyResult, f64)>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let instance = TrialInstance::generate(config, trial);
            properties
                .iter()
                .map(|&p| {
                    let tol = config.tolerance(p);
                    let start = Instant::now();
                    let result = check_trial(p, &instance, tol)
                        .unwrap_or_else(|_| failed_trial(p, instance.seed, tol));
                    (result, start.elapsed().as_secs_f64() * 1e3)
                })
                .collect()
        })
        .collect();

    let mut results: Vec<PropertyResult> = properties
        .iter()
        .map(|&p| PropertyResult::empty(p.as_str(), config.tolerance(p)))
        .collect();
    let mut timings: BTreeMap<String, f64> = properties
        .iter()
        .map(|p| (p.as_str().to_string(), 0.0))
        .collect();
    for trial in &per_trial {
        for (slot, (result, ms)) in results.iter_mut().zip(trial) {
            slot.merge(result);
            *timings.get_mut(&slot.property_id).expect("initialised") += ms;
        }
    }

    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        pass: results.iter().all(PropertyResult::passed),
        config: config.clone(),
        results,
        timings_ms: timings,
    })
}

/// Saved instance: `{"A": ..., "B": ..., "xi": [[re, im], ...]?, "gamma": ...?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(rename = "A")]
    pub a: BlockMatrix,
    #[serde(rename = "B")]
    pub b: BlockMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<[f64; 2]>>,
}

fn to_complex(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

impl InstanceFile {
    pub fn new(a: BlockMatrix, b: BlockMatrix) -> Self {
        InstanceFile {
            a,
            b,
            xi: None,
            gamma: None,
        }
    }

    pub fn with_vectors(mut self, xi: &[Complex64], gamma: &[Complex64]) -> Self {
        self.xi = Some(xi.iter().map(|z| [z.re, z.im]).collect());
        self.gamma = Some(gamma.iter().map(|z| [z.re, z.im]).collect());
        self
    }

    /// Runs exactly one checker on the stored pair. `cb_level` treats the pair as a `k = 1` lift.
    pub fn check(&self, property: PropertyId, tol: f64) -> Result<PropertyResult> {
        let (a, b) = (&self.a, &self.b);
        match property {
            PropertyId::Factorization => verify::verify_factorization(a, b, tol),
            PropertyId::Structure => verify::verify_structure(a, b, tol),
            PropertyId::Livshits => verify::verify_livshits(a, b, tol),
            PropertyId::Sharpness => verify::verify_sharpness(a, tol),
            PropertyId::Sandwich => verify::verify_sandwich(a, tol),
            PropertyId::CauchySchwarz => {
                let (Some(xi), Some(gamma)) = (&self.xi, &self.gamma) else {
                    return Err(Error::Config(
                        "cauchy_schwarz needs both \"xi\" and \"gamma\" in the instance file"
                            .into(),
                    ));
                };
                verify::verify_cauchy_schwarz(a, b, &to_complex(xi), &to_complex(gamma), tol)
            }
            PropertyId::Decomposition => verify::verify_decomposition(a, b, tol),
            PropertyId::CbLevel => verify::verify_cb_level(
                &Lift::new(vec![vec![a.clone()]])?,
                &Lift::new(vec![vec![b.clone()]])?,
                tol,
            ),
            PropertyId::LemmaNorms => verify::verify_lemma_norms(a, tol),
            PropertyId::LemmaDiag => verify::verify_lemma_diag(a, b, tol),
        }
    }
}

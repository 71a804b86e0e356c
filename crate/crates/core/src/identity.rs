//! Quantum identity testing through the Pauli bias collection.
//!
//! Measuring Pauli `P` on `rho` yields outcome 0 with probability
//! `(1 + alpha_P) / 2`, `alpha_P = Tr(rho P)`; likewise `beta_P` for `sigma`.
//! Since `||rho - sigma||_1 > eps` forces `sum_P (alpha_P - beta_P)^2 >= eps^2`
//! and `||p_P - q_P||_2^2 = (alpha_P - beta_P)^2 / 2`, the `m = 4^n` collection
//! has mean squared distance at least `eps^2 / (2 4^n)`, which is the
//! collection tester's promise with `eps' = eps / sqrt(2 4^n)`.

use std::time::Instant;

use crate::binary::Verdict;
use crate::collection::{build_schedule, test_collection, CollectionConfig, DEFAULT_L};
use crate::error::{Error, Result};
use crate::pauli::{pauli_count, PauliString, MAX_DENSE_QUBITS};
use crate::report::TrialReport;
use crate::sampling::{l2_sq_from_biases, PairOracle, QuantumBiases};
use crate::states::{trace_distance, StateSpec};

/// Trace distance below which two states count as identical for promise checks.
pub const IDENTICAL_TOLERANCE: f64 = 1e-9;

/// One identity-testing problem plus tester settings.
#[derive(Clone, Debug)]
pub struct QitInstance {
    pub rho: StateSpec,
    pub sigma: StateSpec,
    pub eps: f64,
    pub l: u64,
    pub mu: Option<f64>,
    pub seed: u64,
    /// Drop the identity Pauli (its distance term is always zero).
    pub exclude_identity: bool,
    pub parallel: bool,
    /// Record wall-clock time in the report; off gives byte-reproducible output.
    pub record_timing: bool,
}

impl QitInstance {
    pub fn new(rho: StateSpec, sigma: StateSpec, eps: f64, seed: u64) -> Self {
        Self {
            rho,
            sigma,
            eps,
            l: DEFAULT_L,
            mu: None,
            seed,
            exclude_identity: false,
            parallel: false,
            record_timing: false,
        }
    }

    pub fn n(&self) -> usize {
        self.rho.n()
    }

    pub fn validate(&self) -> Result<()> {
        self.rho.validate()?;
        self.sigma.validate()?;
        if self.rho.n() != self.sigma.n() {
            return Err(Error::QubitMismatch {
                left: self.rho.n(),
                right: self.sigma.n(),
            });
        }
        if self.n() > MAX_DENSE_QUBITS {
            return Err(Error::QubitCount {
                n: self.n(),
                max: MAX_DENSE_QUBITS,
            });
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Where an instance sits relative to the promise.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Promise {
    Identical,
    Far {
        trace_distance: f64,
    },
    /// Neither identical nor farther than `eps`.
    Violated {
        trace_distance: f64,
    },
}

/// Checks the promise exactly on dense forms.
pub fn check_promise(instance: &QitInstance) -> Result<Promise> {
    instance.validate()?;
    let d = trace_distance(&instance.rho.to_dense()?, &instance.sigma.to_dense()?)?;
    Ok(if d <= IDENTICAL_TOLERANCE {
        Promise::Identical
    } else if d > instance.eps {
        Promise::Far { trace_distance: d }
    } else {
        Promise::Violated { trace_distance: d }
    })
}

/// Collection parameter `eps / sqrt(2 4^n)`.
pub fn reduction_eps(n: usize, eps: f64) -> f64 {
    eps / (2.0 * pauli_count(n) as f64).sqrt()
}

/// Worst-case draw count of the full test (no early exit), `m = 4^n`.
pub fn predicted_budget(n: usize, eps: f64, l: u64, mu: Option<f64>) -> Result<u64> {
    if n == 0 || n > MAX_DENSE_QUBITS {
        return Err(Error::QubitCount {
            n,
            max: MAX_DENSE_QUBITS,
        });
    }
    Ok(build_schedule(pauli_count(n), reduction_eps(n, eps), l, mu)?.total_samples())
}

/// `(1/4^n) sum_P ||p_P - q_P||_2^2`, the exact mean distance of the reduced collection.
pub fn reduced_mean_distance_sq(rho: &StateSpec, sigma: &StateSpec) -> Result<f64> {
    let a = rho.pauli_coefficients()?;
    let b = sigma.pauli_coefficients()?;
    if a.len() != b.len() {
        return Err(Error::QubitMismatch {
            left: rho.n(),
            right: sigma.n(),
        });
    }
    let sum: f64 = a
        .iter()
        .zip(&b)
        .map(|(&x, &y)| l2_sq_from_biases(x, y))
        .sum();
    Ok(sum / a.len() as f64)
}

/// Runs the identity test once.
pub fn test_identity(instance: &QitInstance) -> Result<(Verdict, TrialReport)> {
    let start = Instant::now();
    instance.validate()?;
    let n = instance.n();
    let source = QuantumBiases::new(
        instance.rho.clone(),
        instance.sigma.clone(),
        instance.exclude_identity,
    )?;
    let oracle = PairOracle::new(source, instance.seed);
    let config = CollectionConfig {
        eps: reduction_eps(n, instance.eps),
        l: instance.l,
        mu: instance.mu,
        early_exit: true,
        parallel: instance.parallel,
    };
    let result = test_collection(&oracle, &config)?;
    let triggering_pauli = match result.trigger {
        Some(t) => Some(oracle.source().pauli(t.index)?.to_string()),
        None => None,
    };
    let report = TrialReport {
        verdict: result.verdict,
        n,
        eps: instance.eps,
        l: instance.l,
        mu: instance.mu,
        seed: instance.seed,
        total_samples: result.total_samples,
        per_k_samples: result.per_k_samples,
        triggering_index: result.trigger.map(|t| t.index),
        triggering_pauli,
        wall_ms: instance
            .record_timing
            .then(|| start.elapsed().as_millis() as u64),
        m: oracle.m(),
        rho: instance.rho.to_string(),
        sigma: instance.sigma.to_string(),
    };
    Ok((result.verdict, report))
}

/// The Pauli string that triggered a rejection, if any.
pub fn triggering_pauli(report: &TrialReport) -> Option<PauliString> {
    report
        .triggering_pauli
        .as_deref()
        .and_then(|s| s.parse().ok())
}

//! Query-model access to pairs of binary distributions.
//!
//! Index `i` of a [`PairOracle`] exposes two biased coins with outcome-0
//! probabilities `(1 + alpha_i) / 2` and `(1 + beta_i) / 2`. Every draw runs on
//! its own ChaCha8 stream keyed by `(master seed, index, side, epoch)`, so a
//! run is reproducible regardless of the order or thread that performs draws.

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pauli::{pauli_count, PauliString, MAX_DENSE_QUBITS};
use crate::states::StateSpec;

/// Which collection a draw is taken from: `p` (the state under test) or `q`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    P,
    Q,
}

impl Side {
    fn code(self) -> u64 {
        match self {
            Side::P => 0,
            Side::Q => 1,
        }
    }
}

/// Domain tags keep derived seeds for different purposes apart.
pub mod domain {
    pub const DRAW: u64 = 0x6472_6177;
    pub const SELECT: u64 = 0x7365_6c65;
    pub const TRIAL: u64 = 0x7472_6961;
    pub const TRUTH: u64 = 0x7472_7574;
    pub const INSTANCE: u64 = 0x696e_7374;
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a master seed and a tuple of words into a new 64-bit seed.
pub fn derive_seed(master: u64, words: &[u64]) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut h = mix64(master ^ GOLDEN);
    for (pos, &w) in words.iter().enumerate() {
        let salted = w.wrapping_add(GOLDEN.wrapping_mul(pos as u64 + 1));
        h = mix64(h.rotate_left(23) ^ mix64(salted));
    }
    h
}

/// Seed of the stream used by one draw call.
pub fn derive_substream(master: u64, index: u64, side: Side, epoch: u64) -> u64 {
    derive_seed(master, &[domain::DRAW, index, side.code(), epoch])
}

pub fn stream_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Below this many trials a binomial is drawn as a sum of Bernoulli trials.
pub const DIRECT_BINOMIAL_LIMIT: u64 = 64;

/// Number of successes in `trials` Bernoulli(`p`) trials.
pub fn binomial<R: Rng + ?Sized>(rng: &mut R, trials: u64, p: f64) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    if trials < DIRECT_BINOMIAL_LIMIT {
        (0..trials).filter(|_| rng.random::<f64>() < p).count() as u64
    } else {
        Binomial::new(trials, p).expect("p in (0, 1)").sample(rng)
    }
}

/// The binary distribution `((1 + b) / 2, (1 - b) / 2)` of a two-outcome measurement with bias `b`.
pub fn binary_distribution(bias: f64) -> [f64; 2] {
    [(1.0 + bias) / 2.0, (1.0 - bias) / 2.0]
}

/// `||p - q||_2^2` for binary distributions.
pub fn l2_sq(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
}

/// `||p - q||_2^2` in terms of the biases; equals `(alpha - beta)^2 / 2`.
pub fn l2_sq_from_biases(alpha: f64, beta: f64) -> f64 {
    (alpha - beta).powi(2) / 2.0
}

/// Source of the bias pair `(alpha_i, beta_i)` for each index.
pub trait BiasSource: Send + Sync {
    fn len(&self) -> u64;

    fn bias_pair(&self, index: u64) -> Result<(f64, f64)>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_bias(b: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&b) {
        return Err(Error::InvalidParameter(format!("bias {b} outside [-1, 1]")));
    }
    Ok(())
}

/// Explicit bias lists, for synthetic collections.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasTable {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl BiasTable {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                actual: beta.len(),
            });
        }
        if alpha.is_empty() {
            return Err(Error::InvalidParameter("empty collection".into()));
        }
        alpha.iter().chain(&beta).try_for_each(|&b| check_bias(b))?;
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `||p_i - q_i||_2^2` for every index.
    pub fn distances_sq(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| l2_sq_from_biases(a, b))
            .collect()
    }
}

impl BiasSource for BiasTable {
    fn len(&self) -> u64 {
        self.alpha.len() as u64
    }

    fn bias_pair(&self, index: u64) -> Result<(f64, f64)> {
        let i = index as usize;
        match (self.alpha.get(i), self.beta.get(i)) {
            (Some(&a), Some(&b)) => Ok((a, b)),
            _ => Err(Error::OracleIndex {
                index,
                m: self.len(),
            }),
        }
    }
}

/// Pauli biases `(Tr(rho P_i), Tr(sigma P_i))`, computed on first use.
///
/// With `skip_identity` the collection covers `P_1 .. P_{4^n - 1}`.
#[derive(Debug)]
pub struct QuantumBiases {
    rho: StateSpec,
    sigma: StateSpec,
    offset: u64,
    cache: Vec<OnceLock<(f64, f64)>>,
}

impl QuantumBiases {
    pub fn new(rho: StateSpec, sigma: StateSpec, skip_identity: bool) -> Result<Self> {
        rho.validate()?;
        sigma.validate()?;
        if rho.n() != sigma.n() {
            return Err(Error::QubitMismatch {
                left: rho.n(),
                right: sigma.n(),
            });
        }
        let n = rho.n();
        if n > MAX_DENSE_QUBITS {
            return Err(Error::QubitCount {
                n,
                max: MAX_DENSE_QUBITS,
            });
        }
        let offset = u64::from(skip_identity);
        let m = pauli_count(n) - offset;
        Ok(Self {
            rho,
            sigma,
            offset,
            cache: (0..m).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.rho.n()
    }

    pub fn rho(&self) -> &StateSpec {
        &self.rho
    }

    pub fn sigma(&self) -> &StateSpec {
        &self.sigma
    }

    /// Pauli string measured at collection index `index`.
    pub fn pauli(&self, index: u64) -> Result<PauliString> {
        PauliString::new(self.n(), index + self.offset)
    }
}

impl BiasSource for QuantumBiases {
    fn len(&self) -> u64 {
        self.cache.len() as u64
    }

    fn bias_pair(&self, index: u64) -> Result<(f64, f64)> {
        let slot = self.cache.get(index as usize).ok_or(Error::OracleIndex {
            index,
            m: self.len(),
        })?;
        if let Some(v) = slot.get() {
            return Ok(*v);
        }
        // Concurrent first computations produce the same value; either may win.
        let p = self.pauli(index)?;
        let pair = (self.rho.expectation(&p)?, self.sigma.expectation(&p)?);
        Ok(*slot.get_or_init(|| pair))
    }
}

/// Draw counts per `(index, side)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SampleLedger {
    counts: BTreeMap<(u64, Side), u64>,
    total: u64,
}

impl SampleLedger {
    pub fn record(&mut self, index: u64, side: Side, draws: u64) {
        *self.counts.entry((index, side)).or_default() += draws;
        self.total += draws;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, index: u64, side: Side) -> u64 {
        self.counts.get(&(index, side)).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<(u64, Side), u64> {
        &self.counts
    }

    /// Folds another ledger into this one.
    pub fn merge(&mut self, other: &SampleLedger) {
        for (&(i, s), &c) in &other.counts {
            self.record(i, s, c);
        }
    }
}

/// Seeded, counted sampling access to a [`BiasSource`].
#[derive(Debug)]
pub struct PairOracle<S> {
    source: S,
    seed: u64,
    ledger: Mutex<SampleLedger>,
}

impl<S: BiasSource> PairOracle<S> {
    pub fn new(source: S, seed: u64) -> Self {
        Self {
            source,
            seed,
            ledger: Mutex::new(SampleLedger::default()),
        }
    }

    pub fn m(&self) -> u64 {
        self.source.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn biases(&self, index: u64) -> Result<(f64, f64)> {
        if index >= self.m() {
            return Err(Error::OracleIndex { index, m: self.m() });
        }
        self.source.bias_pair(index)
    }

    /// Takes `count` samples from side `side` at `index` and returns the
    /// number of outcome-0 results. `epoch` distinguishes repeated calls.
    pub fn draw(&self, side: Side, index: u64, count: u64, epoch: u64) -> Result<u64> {
        let (alpha, beta) = self.biases(index)?;
        let bias = match side {
            Side::P => alpha,
            Side::Q => beta,
        };
        let mut rng = stream_rng(derive_substream(self.seed, index, side, epoch));
        let zeros = binomial(&mut rng, count, (1.0 + bias) / 2.0);
        self.ledger
            .lock()
            .expect("ledger lock")
            .record(index, side, count);
        Ok(zeros)
    }

    pub fn ledger(&self) -> SampleLedger {
        self.ledger.lock().expect("ledger lock").clone()
    }

    pub fn total_draws(&self) -> u64 {
        self.ledger.lock().expect("ledger lock").total()
    }
}

/// Oracle over the `4^n` Pauli measurements of `rho` (side P) and `sigma` (side Q).
pub fn make_quantum_oracle(
    rho: StateSpec,
    sigma: StateSpec,
    seed: u64,
) -> Result<PairOracle<QuantumBiases>> {
    Ok(PairOracle::new(
        QuantumBiases::new(rho, sigma, false)?,
        seed,
    ))
}

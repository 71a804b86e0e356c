//! Identity testing for collections of binary distributions in the query model.
//!
//! Given indexed access to pairs `(p_i, q_i)`, `i < m`, the tester accepts when
//! `p_i = q_i` for every `i` and rejects when `(1/m) sum_i ||p_i - q_i||_2^2 > eps^2`.
//! Row `k = 0 ..= ceil(log2 m)` samples `2^k (k^2 + 1) L` indices uniformly with
//! replacement and runs the binary tester on each with gap `2^(k-1) eps^2` and
//! failure budget `L^-2 6^-k`. A row that contains a rejection ends the run.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::binary::{required_samples, test_pair, BinaryTestParams, Verdict};
use crate::error::{Error, Result};
use crate::sampling::{derive_seed, domain, stream_rng, BiasSource, PairOracle, SampleLedger};

/// Default repetition constant `L`.
pub const DEFAULT_L: u64 = 100;

/// Floor on per-test failure probabilities.
pub const MIN_DELTA: f64 = 1e-12;

/// Largest possible `||p - q||_2^2` between binary distributions.
pub const MAX_BINARY_L2_SQ: f64 = 2.0;

/// `C` with `total_samples <= C (ceil(log2 m) + 1)^4 / eps^2` at the default
/// weights and `L = 100`. The ratio is largest at `m = 1` and falls with `m`.
pub const BUDGET_CEILING: f64 = 68_000.0;

/// Indices per parallel batch.
const BATCH: usize = 1 << 14;

/// `ceil(log2 m)` for `m >= 1`.
pub fn ceil_log2(m: u64) -> u32 {
    debug_assert!(m >= 1);
    64 - (m - 1).leading_zeros()
}

/// Row weight: `k^2 + 1` by default, `ceil(k^(1 + mu)) + 1` with `mu` set.
pub fn row_weight(k: u32, mu: Option<f64>) -> u64 {
    match mu {
        None => u64::from(k) * u64::from(k) + 1,
        Some(mu) => (f64::from(k).powf(1.0 + mu)).ceil() as u64 + 1,
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleRow {
    pub k: u32,
    /// Number of indices sampled in this row.
    pub num_indices: u64,
    /// Binary-test gap `2^(k-1) eps^2`.
    pub gap_sq: f64,
    /// Per-test failure probability.
    pub delta: f64,
    /// Samples per side per test; zero for vacuous rows (`gap_sq >= 2`).
    #[serde(rename = "N")]
    pub samples: u64,
}

impl ScheduleRow {
    pub fn is_vacuous(&self) -> bool {
        self.samples == 0
    }

    /// Draws this row performs when run to completion.
    pub fn total_samples(&self) -> u64 {
        self.num_indices * 2 * self.samples
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    pub m: u64,
    pub eps: f64,
    #[serde(rename = "L")]
    pub l: u64,
    pub mu: Option<f64>,
    pub rows: Vec<ScheduleRow>,
}

impl Schedule {
    /// Worst-case draw count (every row run in full).
    pub fn total_samples(&self) -> u64 {
        self.rows.iter().map(ScheduleRow::total_samples).sum()
    }

    /// `total_samples * eps^2 / (ceil(log2 m) + 1)^4`.
    pub fn budget_constant(&self) -> f64 {
        self.total_samples() as f64 * self.eps * self.eps / f64::from(ceil_log2(self.m) + 1).powi(4)
    }

    /// Union bound on the false-rejection probability, `sum_k num_indices_k delta_k`.
    pub fn false_rejection_bound(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| !r.is_vacuous())
            .map(|r| r.num_indices as f64 * r.delta)
            .sum()
    }

    /// CSV with header `k,num_indices,gap_sq,delta,N`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("row serializes");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
    }
}

/// Builds the per-row table for a collection of size `m`.
pub fn build_schedule(m: u64, eps: f64, l: u64, mu: Option<f64>) -> Result<Schedule> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if l == 0 {
        return Err(Error::InvalidParameter("L must be at least 1".into()));
    }
    if let Some(mu) = mu {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mu must be positive, got {mu}"
            )));
        }
    }
    let lf = l as f64;
    let rows = (0..=ceil_log2(m))
        .map(|k| {
            let num_indices = (1u64 << k) * row_weight(k, mu) * l;
            let gap_sq = 2f64.powi(k as i32 - 1) * eps * eps;
            let delta = (1.0 / (lf * lf * 6f64.powi(k as i32))).clamp(MIN_DELTA, 0.5);
            let samples = if gap_sq >= MAX_BINARY_L2_SQ {
                0
            } else {
                required_samples(gap_sq, delta)?
            };
            Ok(ScheduleRow {
                k,
                num_indices,
                gap_sq,
                delta,
                samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Schedule {
        m,
        eps,
        l,
        mu,
        rows,
    })
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CollectionConfig {
    pub eps: f64,
    pub l: u64,
    pub mu: Option<f64>,
    /// Stop after the first row containing a rejection.
    pub early_exit: bool,
    /// Run the tests of a row on the rayon pool.
    pub parallel: bool,
}

impl CollectionConfig {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            l: DEFAULT_L,
            mu: None,
            early_exit: true,
            parallel: false,
        }
    }
}

/// A binary test that returned No.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct Trigger {
    pub k: u32,
    /// Position of the test within its row.
    pub position: u64,
    pub index: u64,
    pub statistic: f64,
}

#[derive(Clone, Debug)]
pub struct CollectionVerdict {
    pub verdict: Verdict,
    /// Smallest `(k, position)` rejection.
    pub trigger: Option<Trigger>,
    /// Every rejection in the rows that ran.
    pub rejections: Vec<Trigger>,
    /// Draws per row, indexed by `k`; rows that did not run count zero.
    pub per_k_samples: Vec<u64>,
    pub total_samples: u64,
    pub ledger: SampleLedger,
    pub wall: Duration,
}

/// Epoch of the test at `position` in row `k`.
pub fn test_epoch(k: u32, position: u64) -> u64 {
    (u64::from(k) << 40) | position
}

/// Runs the collection identity test against `oracle`.
pub fn test_collection<S: BiasSource>(
    oracle: &PairOracle<S>,
    config: &CollectionConfig,
) -> Result<CollectionVerdict> {
    let start = Instant::now();
    let m = oracle.m();
    let schedule = build_schedule(m, config.eps, config.l, config.mu)?;
    let before = oracle.ledger();
    let mut per_k_samples = vec![0u64; schedule.rows.len()];
    let mut rejections = Vec::new();

    for row in &schedule.rows {
        // Vacuous rows accept without sampling.
        if row.is_vacuous() {
            continue;
        }
        let params = BinaryTestParams::new(row.gap_sq, row.delta)?;
        let mut select = stream_rng(derive_seed(
            oracle.seed(),
            &[domain::SELECT, u64::from(row.k)],
        ));
        let mut row_no = Vec::new();
        let mut position = 0u64;
        while position < row.num_indices {
            let len = (row.num_indices - position).min(BATCH as u64) as usize;
            let batch: Vec<(u64, u64)> = (0..len as u64)
                .map(|j| (position + j, select.random_range(0..m)))
                .collect();
            let run = |&(pos, index): &(u64, u64)| -> Result<Option<Trigger>> {
                let out = test_pair(oracle, index, &params, test_epoch(row.k, pos))?;
                Ok(out.verdict.is_no().then_some(Trigger {
                    k: row.k,
                    position: pos,
                    index,
                    statistic: out.statistic,
                }))
            };
            let found: Vec<Option<Trigger>> = if config.parallel {
                batch.par_iter().map(run).collect::<Result<_>>()?
            } else {
                batch.iter().map(run).collect::<Result<_>>()?
            };
            row_no.extend(found.into_iter().flatten());
            position += len as u64;
        }
        per_k_samples[row.k as usize] = row.total_samples();
        let row_rejected = !row_no.is_empty();
        rejections.extend(row_no);
        if row_rejected && config.early_exit {
            break;
        }
    }

    let mut ledger = oracle.ledger();
    // Report only this run's draws when the oracle was used before.
    if before.total() > 0 {
        let mut fresh = SampleLedger::default();
        for (&(i, s), &c) in ledger.counts() {
            let prior = before.count(i, s);
            if c > prior {
                fresh.record(i, s, c - prior);
            }
        }
        ledger = fresh;
    }
    let trigger = rejections.first().copied();
    Ok(CollectionVerdict {
        verdict: if trigger.is_some() {
            Verdict::No
        } else {
            Verdict::Yes
        },
        trigger,
        rejections,
        total_samples: ledger.total(),
        per_k_samples,
        ledger,
        wall: start.elapsed(),
    })
}

/// A level `k` at which many indices are far, as found by [`heavy_level`].
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct HeavyLevel {
    pub k: u32,
    /// `|{i : d_i >= 2^(k-1) eps^2}|`.
    pub count: u64,
    /// `m / (2^k 100 (k^2 + 1))`.
    pub bound: f64,
}

/// Finds the smallest `k <= ceil(log2 m)` with
/// `|{i : d_i >= 2^(k-1) eps^2}| > m / (2^k 100 (k^2 + 1))`, where `d_i` are
/// the exact squared distances. Such a `k` exists whenever the mean of `d`
/// exceeds `eps^2`.
pub fn heavy_level(distances_sq: &[f64], eps: f64) -> Option<HeavyLevel> {
    let m = distances_sq.len() as u64;
    if m == 0 {
        return None;
    }
    (0..=ceil_log2(m)).find_map(|k| {
        let cut = 2f64.powi(k as i32 - 1) * eps * eps;
        let count = distances_sq.iter().filter(|&&d| d >= cut).count() as u64;
        let bound = m as f64 / (2f64.powi(k as i32) * 100.0 * (f64::from(k * k) + 1.0));
        (count as f64 > bound).then_some(HeavyLevel { k, count, bound })
    })
}

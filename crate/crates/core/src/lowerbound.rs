//! Mixedness testing against the needle ensemble.
//!
//! Nature flips a fair coin: heads keeps the maximally mixed state, tails
//! picks `P` uniformly from the family and prepares `(I + eps P) / 2^n`. Only
//! the measurement of `P` itself sees a bias (`eps`); every other Pauli sees
//! a fair coin. The harness measures a budget of single shots spread over
//! Paulis and guesses with a max-deviation rule, so the budget at which the
//! guess becomes reliable can be read off a sweep.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pauli::{pauli_count, Pauli, PauliString, MAX_DENSE_QUBITS};
use crate::sampling::{derive_seed, domain, stream_rng, PairOracle, QuantumBiases, Side};
use crate::states::{NeedleState, StateSpec};
use crate::stats::{wilson_interval, Z95};

/// Default family-wise false-alarm level of the distinguisher.
pub const DEFAULT_FALSE_ALARM: f64 = 0.1;

/// Offset separating the epochs of the adaptive second round.
const ROUND_TWO_EPOCH: u64 = 1 << 32;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Every non-identity Pauli, `4^n - 1` members.
    Full,
    /// Paulis with no identity letter, `3^n` members.
    Xyz,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Full => "full",
            Family::Xyz => "xyz",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Family::Full),
            "xyz" => Ok(Family::Xyz),
            other => Err(Error::Parse(format!("unknown family {other:?}"))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Spread the budget evenly over the family.
    UniformSplit,
    /// Half the budget evenly, the rest on the most deviant quarter.
    AdaptiveGreedy,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::UniformSplit => "uniform-split",
            Strategy::AdaptiveGreedy => "adaptive-greedy",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-split" | "uniform" => Ok(Strategy::UniformSplit),
            "adaptive-greedy" | "adaptive" => Ok(Strategy::AdaptiveGreedy),
            other => Err(Error::Parse(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeedleEnsemble {
    pub n: usize,
    pub eps: f64,
    pub family: Family,
}

impl NeedleEnsemble {
    pub fn new(n: usize, eps: f64, family: Family) -> Result<Self> {
        if n == 0 || n > MAX_DENSE_QUBITS {
            return Err(Error::QubitCount {
                n,
                max: MAX_DENSE_QUBITS,
            });
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "needle eps {eps} outside (0, 1]"
            )));
        }
        Ok(Self { n, eps, family })
    }

    /// Pauli indices of the family, ascending.
    pub fn members(&self) -> Vec<u64> {
        let all = 1..pauli_count(self.n);
        match self.family {
            Family::Full => all.collect(),
            Family::Xyz => all
                .filter(|&i| (0..self.n).all(|q| (i >> (2 * q)) & 3 != 0))
                .collect(),
        }
    }

    pub fn size(&self) -> u64 {
        match self.family {
            Family::Full => pauli_count(self.n) - 1,
            Family::Xyz => 3u64.pow(self.n as u32),
        }
    }

    pub fn needle(&self, index: u64) -> Result<NeedleState> {
        NeedleState::new(PauliString::new(self.n, index)?, self.eps)
    }
}

/// Shots per Pauli index.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSchedule {
    pub rows: Vec<(u64, u64)>,
    pub strategy: Strategy,
}

impl MeasurementSchedule {
    pub fn budget(&self) -> u64 {
        self.rows.iter().map(|r| r.1).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((i, _)) = self.rows.iter().find(|r| r.1 == 0) {
            return Err(Error::InvalidParameter(format!(
                "schedule row for index {i} has zero shots"
            )));
        }
        Ok(())
    }
}

/// Splits `budget` as evenly as possible over `indices`; earlier indices get
/// the remainder. Indices that would get no shot are left out.
pub fn uniform_split(indices: &[u64], budget: u64) -> MeasurementSchedule {
    let k = indices.len() as u64;
    let rows = match budget.checked_div(k) {
        None => Vec::new(),
        Some(base) => {
            let extra = budget % k;
            indices
                .iter()
                .enumerate()
                .map(|(j, &i)| (i, base + u64::from((j as u64) < extra)))
                .filter(|r| r.1 > 0)
                .collect()
        }
    };
    MeasurementSchedule {
        rows,
        strategy: Strategy::UniformSplit,
    }
}

/// Per-index threshold on `|freq_0 - 1/2|`: `sqrt(ln(2 K / delta) / (2 shots))`.
pub fn bonferroni_threshold(num_indices: u64, shots: u64, delta: f64) -> f64 {
    ((2.0 * num_indices as f64 / delta).ln() / (2.0 * shots as f64)).sqrt()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    Mixed,
    Needle,
}

#[derive(Clone, Debug)]
pub struct MixednessTrial {
    pub truth: Hypothesis,
    pub needle: Option<PauliString>,
    pub guess: Hypothesis,
    pub samples: u64,
    /// Shots actually spent, merged per index.
    pub schedule: MeasurementSchedule,
}

impl MixednessTrial {
    pub fn correct(&self) -> bool {
        self.truth == self.guess
    }
}

/// How the trial spends its shots.
#[derive(Clone, Debug)]
pub enum Plan {
    Fixed(MeasurementSchedule),
    Strategy { strategy: Strategy, budget: u64 },
}

#[derive(Clone, Debug, Default)]
struct Tally {
    // (index, shots, zeros), in first-measured order
    rows: Vec<(u64, u64, u64)>,
}

impl Tally {
    fn add(&mut self, index: u64, shots: u64, zeros: u64) {
        match self.rows.iter_mut().find(|r| r.0 == index) {
            Some(r) => {
                r.1 += shots;
                r.2 += zeros;
            }
            None => self.rows.push((index, shots, zeros)),
        }
    }

    fn deviation(row: &(u64, u64, u64)) -> f64 {
        (row.2 as f64 / row.1 as f64 - 0.5).abs()
    }
}

fn measure(
    oracle: &PairOracle<QuantumBiases>,
    rows: &[(u64, u64)],
    epoch_base: u64,
    tally: &mut Tally,
) -> Result<()> {
    for (pos, &(index, shots)) in rows.iter().enumerate() {
        let zeros = oracle.draw(Side::P, index, shots, epoch_base + pos as u64)?;
        tally.add(index, shots, zeros);
    }
    Ok(())
}

/// Runs one trial: draws the truth, spends the plan's shots, and guesses.
pub fn run_mixedness_trial(
    ensemble: &NeedleEnsemble,
    plan: &Plan,
    false_alarm: f64,
    seed: u64,
) -> Result<MixednessTrial> {
    if !(false_alarm > 0.0 && false_alarm < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "false-alarm level {false_alarm} outside (0, 1)"
        )));
    }
    let members = ensemble.members();
    let mut truth_rng = stream_rng(derive_seed(seed, &[domain::TRUTH]));
    let needle = if truth_rng.random::<bool>() {
        None
    } else {
        Some(members[truth_rng.random_range(0..members.len())])
    };
    let mixed = StateSpec::maximally_mixed(ensemble.n)?;
    let state = match needle {
        Some(i) => StateSpec::Needle(ensemble.needle(i)?),
        None => mixed.clone(),
    };
    let oracle = PairOracle::new(QuantumBiases::new(state, mixed, false)?, seed);

    let mut tally = Tally::default();
    let strategy = match plan {
        Plan::Fixed(schedule) => {
            schedule.validate()?;
            measure(&oracle, &schedule.rows, 0, &mut tally)?;
            schedule.strategy
        }
        Plan::Strategy {
            strategy: Strategy::UniformSplit,
            budget,
        } => {
            measure(
                &oracle,
                &uniform_split(&members, *budget).rows,
                0,
                &mut tally,
            )?;
            Strategy::UniformSplit
        }
        Plan::Strategy {
            strategy: Strategy::AdaptiveGreedy,
            budget,
        } => {
            let first = uniform_split(&members, budget / 2);
            measure(&oracle, &first.rows, 0, &mut tally)?;
            let mut ranked: Vec<(u64, u64, u64)> = tally.rows.clone();
            ranked.sort_by(|a, b| {
                Tally::deviation(b)
                    .total_cmp(&Tally::deviation(a))
                    .then(a.0.cmp(&b.0))
            });
            let keep = ranked.len().div_ceil(4).max(1);
            let focus: Vec<u64> = ranked.iter().take(keep).map(|r| r.0).collect();
            let rest = budget - first.budget();
            let second = if focus.is_empty() {
                uniform_split(&members, rest)
            } else {
                uniform_split(&focus, rest)
            };
            measure(&oracle, &second.rows, ROUND_TWO_EPOCH, &mut tally)?;
            Strategy::AdaptiveGreedy
        }
    };

    let measured = tally.rows.len() as u64;
    let guess = if tally
        .rows
        .iter()
        .any(|r| Tally::deviation(r) > bonferroni_threshold(measured, r.1, false_alarm))
    {
        Hypothesis::Needle
    } else {
        Hypothesis::Mixed
    };
    Ok(MixednessTrial {
        truth: if needle.is_some() {
            Hypothesis::Needle
        } else {
            Hypothesis::Mixed
        },
        needle: needle
            .map(|i| PauliString::new(ensemble.n, i))
            .transpose()?,
        guess,
        samples: oracle.total_draws(),
        schedule: MeasurementSchedule {
            rows: tally.rows.iter().map(|r| (r.0, r.1)).collect(),
            strategy,
        },
    })
}

/// Seed of trial `t` in a run; shared across sweep cells.
pub fn trial_seed(seed: u64, t: u64) -> u64 {
    derive_seed(seed, &[domain::TRIAL, t])
}

/// One cell of an advantage sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub n: usize,
    pub eps: f64,
    pub family: Family,
    pub strategy: Strategy,
    pub budget: u64,
    pub trials: u64,
    pub successes: u64,
    /// `2 * success_rate - 1`.
    pub advantage: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

/// Monte Carlo estimate of the distinguishing advantage for one budget and strategy.
pub fn advantage_cell(
    ensemble: &NeedleEnsemble,
    strategy: Strategy,
    budget: u64,
    trials: u64,
    false_alarm: f64,
    seed: u64,
) -> Result<SweepCell> {
    let plan = Plan::Strategy { strategy, budget };
    let successes = (0..trials)
        .into_par_iter()
        .map(|t| {
            run_mixedness_trial(ensemble, &plan, false_alarm, trial_seed(seed, t))
                .map(|r| u64::from(r.correct()))
        })
        .sum::<Result<u64>>()?;
    let (lo, hi) = wilson_interval(successes, trials, Z95);
    Ok(SweepCell {
        n: ensemble.n,
        eps: ensemble.eps,
        family: ensemble.family,
        strategy,
        budget,
        trials,
        successes,
        advantage: 2.0 * successes as f64 / trials as f64 - 1.0,
        ci_low: 2.0 * lo - 1.0,
        ci_high: 2.0 * hi - 1.0,
        seed,
    })
}

/// Advantage table over `budgets x strategies`.
pub fn sweep_advantage(
    ensemble: &NeedleEnsemble,
    budgets: &[u64],
    strategies: &[Strategy],
    trials: u64,
    false_alarm: f64,
    seed: u64,
) -> Result<Vec<SweepCell>> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!(
            "sweeps need at least 100 trials per cell, got {trials}"
        )));
    }
    let mut cells = Vec::with_capacity(budgets.len() * strategies.len());
    for &budget in budgets {
        for &strategy in strategies {
            cells.push(advantage_cell(
                ensemble,
                strategy,
                budget,
                trials,
                false_alarm,
                seed,
            )?);
        }
    }
    Ok(cells)
}

/// Sweep table as CSV with header
/// `n,eps,family,strategy,budget,trials,successes,advantage,ci_low,ci_high,seed`.
pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in cells {
        w.serialize(c).expect("cell serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

/// True when no cell's interval lies entirely below an earlier (smaller-budget)
/// cell's interval, per strategy.
pub fn is_monotone_within_ci(cells: &[SweepCell]) -> bool {
    let strategies: Vec<Strategy> = {
        let mut s: Vec<Strategy> = cells.iter().map(|c| c.strategy).collect();
        s.dedup();
        s
    };
    strategies.iter().all(|&s| {
        let mut row: Vec<&SweepCell> = cells.iter().filter(|c| c.strategy == s).collect();
        row.sort_by_key(|c| c.budget);
        row.iter()
            .enumerate()
            .all(|(j, c)| row[..j].iter().all(|prev| c.ci_high >= prev.ci_low))
    })
}

/// Smallest per-index shot count in `grid` (ascending) whose uniform-split
/// advantage reaches `target`, with the matching total budget.
pub fn threshold_shots(
    ensemble: &NeedleEnsemble,
    grid: &[u64],
    target: f64,
    trials: u64,
    false_alarm: f64,
    seed: u64,
) -> Result<Option<(u64, u64)>> {
    let size = ensemble.size();
    for &shots in grid {
        let cell = advantage_cell(
            ensemble,
            Strategy::UniformSplit,
            shots * size,
            trials,
            false_alarm,
            seed,
        )?;
        if cell.advantage >= target {
            return Ok(Some((shots, shots * size)));
        }
    }
    Ok(None)
}

/// Letters of a family member, for display.
pub fn member_letters(n: usize, index: u64) -> Result<Vec<Pauli>> {
    Ok(PauliString::new(n, index)?.letters())
}

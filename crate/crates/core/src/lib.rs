//! Identity testing of `n`-qubit states with two-outcome Pauli measurements.
//!
//! The pipeline, bottom up:
//!
//! - [`pauli`]: Pauli strings in base-4 encoding and `Tr(rho P)`.
//! - [`states`]: product, needle and dense states with exact distances.
//! - [`sampling`]: seeded, counted query access to binary distributions.
//! - [`binary`]: the single-pair equality tester.
//! - [`collection`]: the multi-scale collection tester.
//! - [`identity`]: reduction of state identity to the `4^n` Pauli collection.
//! - [`lowerbound`]: mixedness testing against the needle ensemble.
//!
//! ```
//! use qit_core::{test_identity, PauliString, NeedleState, QitInstance, StateSpec, Verdict};
//!
//! let p = PauliString::encode("ZX").unwrap();
//! let rho = StateSpec::Needle(NeedleState::new(p, 1.0).unwrap());
//! let sigma = StateSpec::maximally_mixed(2).unwrap();
//! let (verdict, report) = test_identity(&QitInstance::new(rho, sigma, 1.0, 7)).unwrap();
//! assert_eq!(verdict, Verdict::No);
//! assert!(report.total_samples > 0);
//! ```

pub mod binary;
pub mod collection;
pub mod error;
pub mod identity;
pub mod lowerbound;
pub mod pauli;
pub mod report;
pub mod sampling;
pub mod selftest;
pub mod states;
pub mod stats;

pub use binary::{required_samples, test_pair, BinaryTestParams, PairOutcome, Verdict};
pub use collection::{
    build_schedule, heavy_level, test_collection, CollectionConfig, CollectionVerdict, HeavyLevel,
    Schedule, ScheduleRow, Trigger, DEFAULT_L,
};
pub use error::{Error, Result};
pub use identity::{
    check_promise, predicted_budget, reduction_eps, test_identity, Promise, QitInstance,
};
pub use lowerbound::{
    run_mixedness_trial, sweep_advantage, Family, Hypothesis, MeasurementSchedule, MixednessTrial,
    NeedleEnsemble, Plan, Strategy, SweepCell,
};
pub use pauli::{expectation_dense, expectation_product, pauli_pair_trace, Pauli, PauliString};
pub use report::TrialReport;
pub use sampling::{
    derive_substream, make_quantum_oracle, BiasSource, BiasTable, PairOracle, QuantumBiases,
    SampleLedger, Side,
};
pub use states::{
    hs_distance_sq, trace_distance, DenseState, HsPath, NeedleState, ProductState, StateSpec,
};

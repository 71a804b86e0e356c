use proptest::prelude::*;
use qit_core::collection::{build_schedule, heavy_level, test_collection, CollectionConfig};
use qit_core::pauli::{pauli_count, Pauli};
use qit_core::sampling::{binomial, derive_substream, stream_rng};
use qit_core::{
    expectation_dense, expectation_product, hs_distance_sq, required_samples, trace_distance,
    BiasTable, HsPath, PairOracle, PauliString, ProductState, Side, StateSpec, Verdict,
};

fn letter() -> impl Strategy<Value = Pauli> {
    prop_oneof![
        Just(Pauli::I),
        Just(Pauli::X),
        Just(Pauli::Y),
        Just(Pauli::Z)
    ]
}

fn bloch() -> impl Strategy<Value = [f64; 3]> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y, z)| {
        let norm = (x * x + y * y + z * z).sqrt();
        if norm > 1.0 {
            [x / norm, y / norm, z / norm]
        } else {
            [x, y, z]
        }
    })
}

proptest! {
    #[test]
    fn encode_decode_round_trip(word in prop::collection::vec(letter(), 1..=14)) {
        let p = PauliString::from_letters(&word).unwrap();
        prop_assert_eq!(p.letters(), word.clone());
        let text: String = word.iter().map(|l| l.as_char()).collect();
        prop_assert_eq!(PauliString::encode(&text).unwrap(), p);
        prop_assert_eq!(p.to_string(), text);
        prop_assert_eq!(p.is_identity(), word.iter().all(|&l| l == Pauli::I));
    }

    #[test]
    fn product_expectation_matches_dense(blochs in prop::collection::vec(bloch(), 1..=4)) {
        let n = blochs.len();
        let state = ProductState::new(blochs.clone()).unwrap();
        let dense = state.to_dense().unwrap();
        for i in 0..pauli_count(n) {
            let p = PauliString::new(n, i).unwrap();
            let a = expectation_product(&blochs, &p).unwrap();
            let b = expectation_dense(&dense, &p).unwrap();
            prop_assert!((a - b).abs() <= 1e-10, "{} {} {}", p, a, b);
            prop_assert!(a.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn hs_paths_agree(a in prop::collection::vec(bloch(), 3), b in prop::collection::vec(bloch(), 3)) {
        let sa = StateSpec::Product(ProductState::new(a).unwrap());
        let sb = StateSpec::Product(ProductState::new(b).unwrap());
        let d = hs_distance_sq(&sa, &sb, HsPath::Dense).unwrap();
        let p = hs_distance_sq(&sa, &sb, HsPath::Parseval).unwrap();
        prop_assert!((d - p).abs() <= 1e-10);
        let t = trace_distance(&sa.to_dense().unwrap(), &sb.to_dense().unwrap()).unwrap();
        prop_assert!(8.0 * d >= t * t - 1e-9);
    }

    #[test]
    fn heavy_level_exists_when_mean_exceeds_eps(
        d in prop::collection::vec(0.0f64..=2.0, 1..300),
        frac in 0.01f64..0.999,
    ) {
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        prop_assume!(mean > 0.0);
        let eps = (mean * frac).sqrt();
        let h = heavy_level(&d, eps);
        prop_assert!(h.is_some());
        let h = h.unwrap();
        prop_assert!(h.k <= qit_core::collection::ceil_log2(d.len() as u64));
        prop_assert!(h.count as f64 > h.bound);
    }

    #[test]
    fn substreams_differ_for_distinct_tuples(
        seed in any::<u64>(), i in 0u64..1 << 20, j in 0u64..1 << 20, e in 0u64..1 << 30, f in 0u64..1 << 30,
    ) {
        prop_assume!((i, e) != (j, f));
        prop_assert_ne!(derive_substream(seed, i, Side::P, e), derive_substream(seed, j, Side::P, f));
        prop_assert_ne!(derive_substream(seed, i, Side::P, e), derive_substream(seed, i, Side::Q, e));
    }

    #[test]
    fn binomial_stays_in_range(seed in any::<u64>(), trials in 0u64..5000, p in 0.0f64..=1.0) {
        let mut rng = stream_rng(seed);
        prop_assert!(binomial(&mut rng, trials, p) <= trials);
    }

    #[test]
    fn sample_count_monotonicity(g1 in 1e-4f64..2.0, g2 in 1e-4f64..2.0, d1 in 1e-12f64..0.5, d2 in 1e-12f64..0.5) {
        let (glo, ghi) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
        let (dlo, dhi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(required_samples(glo, 0.1).unwrap() >= required_samples(ghi, 0.1).unwrap());
        prop_assert!(required_samples(0.1, dlo).unwrap() >= required_samples(0.1, dhi).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ledger_matches_requested_draws(
        alpha in prop::collection::vec(-1.0f64..=1.0, 1..40),
        shift in -0.5f64..0.5,
        seed in any::<u64>(),
        eps in 0.3f64..1.0,
    ) {
        let beta: Vec<f64> = alpha.iter().map(|a| (a + shift).clamp(-1.0, 1.0)).collect();
        let oracle = PairOracle::new(BiasTable::new(alpha, beta).unwrap(), seed);
        let v = test_collection(&oracle, &CollectionConfig::new(eps)).unwrap();
        prop_assert_eq!(oracle.total_draws(), v.total_samples);
        prop_assert_eq!(v.per_k_samples.iter().sum::<u64>(), v.total_samples);
        let schedule = build_schedule(oracle.m(), eps, 100, None).unwrap();
        prop_assert!(v.total_samples <= schedule.total_samples());
        prop_assert_eq!(v.verdict == Verdict::No, v.trigger.is_some());
    }
}

//! Exact identities behind the reduction, checked on random instances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::identity::reduced_mean_distance_sq;
use crate::pauli::{expectation_product, pauli_count, PauliString};
use crate::sampling::{binary_distribution, l2_sq, l2_sq_from_biases};
use crate::states::{hs_distance_sq, trace_distance, HsPath, NeedleState, ProductState, StateSpec};

/// Outcome of one named check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst residual observed.
    pub worst: f64,
    pub tolerance: f64,
}

fn check(name: &'static str, worst: f64, tolerance: f64) -> Check {
    Check {
        name,
        passed: worst <= tolerance,
        worst,
        tolerance,
    }
}

/// Runs the suite on `pairs` random product-state pairs spread over `n = 1..=4`.
pub fn run(seed: u64, pairs: usize) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parseval = 0.0f64;
    let mut l2_identity = 0.0f64;
    let mut norm_chain = f64::NEG_INFINITY;
    let mut product_vs_dense = 0.0f64;
    let mut reduction = 0.0f64;
    let mut identity_coeff = 0.0f64;

    for j in 0..pairs {
        let n = 1 + j % 4;
        let a = ProductState::random(n, &mut rng)?;
        let b = ProductState::random(n, &mut rng)?;
        let (sa, sb) = (StateSpec::Product(a.clone()), StateSpec::Product(b));
        let da = sa.to_dense()?;
        let db = sb.to_dense()?;
        let dense = hs_distance_sq(&sa, &sb, HsPath::Dense)?;
        let pars = hs_distance_sq(&sa, &sb, HsPath::Parseval)?;
        parseval = parseval.max((dense - pars).abs());

        let td = trace_distance(&da, &db)?;
        // positive means the inequality 2^n ||.||_2^2 >= ||.||_1^2 is violated
        norm_chain = norm_chain.max(td * td - (1u64 << n) as f64 * dense);

        let dim = (1u64 << n) as f64;
        let mut sum_sq = 0.0;
        for i in 0..pauli_count(n) {
            let p = PauliString::new(n, i)?;
            let (alpha, beta) = (sa.expectation(&p)?, sb.expectation(&p)?);
            let direct = l2_sq(binary_distribution(alpha), binary_distribution(beta));
            l2_identity = l2_identity.max((direct - l2_sq_from_biases(alpha, beta)).abs());
            sum_sq += (alpha - beta).powi(2);
            let via_dense = StateSpec::Dense(da.clone()).expectation(&p)?;
            product_vs_dense =
                product_vs_dense.max((expectation_product(a.blochs(), &p)? - via_dense).abs());
            if i == 0 {
                identity_coeff = identity_coeff.max((via_dense - 1.0).abs());
            }
        }
        // mean collection distance equals sum (alpha - beta)^2 / (2 4^n) and 2^n ||.||_2^2 / (2 4^n)
        let mean = reduced_mean_distance_sq(&sa, &sb)?;
        let m = pauli_count(n) as f64;
        reduction = reduction
            .max((mean - sum_sq / (2.0 * m)).abs())
            .max((mean - dim * dense / (2.0 * m)).abs());
    }

    let mut needle = 0.0f64;
    for (letters, eps) in [("X", 1.0), ("ZY", 0.3), ("XIZ", 0.5), ("YYXZ", 0.8)] {
        let p = PauliString::encode(letters)?;
        let s = NeedleState::new(p, eps)?.to_dense()?;
        let mixed = ProductState::maximally_mixed(p.n())?.to_dense()?;
        needle = needle.max((trace_distance(&s, &mixed)? - eps).abs());
    }

    Ok(vec![
        check("parseval_dense_vs_coefficients", parseval, 1e-10),
        check("binary_l2_equals_bias_gap", l2_identity, 1e-15),
        check("norm_inequality", norm_chain.max(0.0), 1e-9),
        check("needle_trace_distance", needle, 1e-10),
        check("product_vs_dense_expectation", product_vs_dense, 1e-10),
        check("reduction_mean_distance", reduction, 1e-9),
        check("identity_coefficient", identity_coeff, 1e-12),
    ])
}

//! Randomized admissible Interior instances for verification runs.

use crate::model::{EconomyParams, PreferenceWeights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sampled instances keep the quantity-quality margin at least this far
/// from zero, so finite differences at the default step never cross a
/// regime boundary and stay well conditioned.
pub const MIN_MARGIN: f64 = 0.05;

/// Draws one admissible Interior instance.
///
/// Plain weights are uniform on `[0.1, 5]`, discount weights on
/// `[0.1, 0.99]` (strictly below 1 so perturbed instances stay
/// admissible), `tau` on `[0.01, 0.5]` and the wage on `[0.5, 10]`.
/// Weight tuples violating the margin floor are rejected and redrawn.
pub fn sample_interior<R: Rng>(rng: &mut R) -> (PreferenceWeights, EconomyParams) {
    let prefs = loop {
        let candidate = PreferenceWeights {
            gamma1: rng.gen_range(0.1..=5.0),
            gamma2: rng.gen_range(0.1..=5.0),
            gamma3: rng.gen_range(0.1..=5.0),
            gamma4: rng.gen_range(0.1..=5.0),
            gamma5: rng.gen_range(0.1..=0.99),
            gamma6: rng.gen_range(0.1..=0.99),
            gamma7: rng.gen_range(0.1..=0.99),
        };
        if candidate.margin() >= MIN_MARGIN {
            break candidate;
        }
    };
    let econ = EconomyParams {
        wage: rng.gen_range(0.5..=10.0),
        tau: rng.gen_range(0.01..=0.5),
        wage_next: rng.gen_range(0.5..=10.0),
        interest: rng.gen_range(0.9..=1.5),
        pension_interest: rng.gen_range(0.9..=1.5),
    };
    (prefs, econ)
}

/// Deterministic batch of Interior instances derived from a base seed.
pub fn interior_instances(seed: u64, count: usize) -> Vec<(PreferenceWeights, EconomyParams)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sample_interior(&mut rng)).collect()
}

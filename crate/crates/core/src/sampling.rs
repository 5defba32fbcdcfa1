//! Seeded randomness and count-based sampling.
//!
//! Samples over a finite domain are drawn as multinomial count vectors. The
//! law of the resulting multiset is identical to that of `n` independent
//! draws, and the cost is linear in the number of atoms instead of `n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

/// The generator used for every seeded run.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws multinomial counts for `n` trials over `probabilities` by sequential
/// conditional binomials. The probabilities need not be normalized.
pub fn multinomial<G: Rng + ?Sized>(rng: &mut G, n: u64, probabilities: &[f64]) -> Vec<u64> {
    let mut counts = vec![0; probabilities.len()];
    let mut remaining_trials = n;
    let mut remaining_mass: f64 = probabilities.iter().sum();
    // The last index with positive mass absorbs whatever is left so that
    // rounding in `remaining_mass` never loses trials.
    let last = probabilities.iter().rposition(|&p| p > 0.0);
    for (j, &p) in probabilities.iter().enumerate() {
        if remaining_trials == 0 {
            break;
        }
        if p <= 0.0 {
            continue;
        }
        if Some(j) == last {
            counts[j] = remaining_trials;
            break;
        }
        let q = (p / remaining_mass).clamp(0.0, 1.0);
        let drawn = Binomial::new(remaining_trials, q)
            .expect("binomial parameter clamped to [0, 1]")
            .sample(rng);
        counts[j] = drawn;
        remaining_trials -= drawn;
        remaining_mass -= p;
    }
    counts
}

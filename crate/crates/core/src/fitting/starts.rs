use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FitBounds;

/// `n` Latin-hypercube starting points over `bounds`, deterministic under
/// `seed`.
///
/// A sample whose charged-state stoichiometry would leave `[0, 1]` has the
/// offending capacity raised just past the feasibility edge (5 % margin),
/// clipped to its upper bound.
pub fn latin_hypercube_starts(bounds: &FitBounds, q_full: f64, n: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = bounds.as_array();
    let mut strata: [Vec<usize>; 4] = Default::default();
    for s in strata.iter_mut() {
        *s = (0..n).collect();
        s.shuffle(&mut rng);
    }
    (0..n)
        .map(|i| {
            let mut p = [0.0; 4];
            for k in 0..4 {
                let u: f64 = rng.random();
                let t = (strata[k][i] as f64 + u) / n as f64;
                p[k] = b[k].0 + t * (b[k].1 - b[k].0);
            }
            repair(&mut p, &b, q_full);
            p
        })
        .collect()
}

fn repair(p: &mut [f64; 4], b: &[(f64, f64); 4], q_full: f64) {
    if p[2] + q_full / p[0] > 1.0 && p[2] < 1.0 {
        p[0] = (1.05 * q_full / (1.0 - p[2])).clamp(b[0].0, b[0].1);
    }
    if p[3] - q_full / p[1] < 0.0 && p[3] > 0.0 {
        p[1] = (1.05 * q_full / p[3]).clamp(b[1].0, b[1].1);
    }
}

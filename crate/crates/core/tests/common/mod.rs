// Shared helpers for integration tests.
#![allow(dead_code)]

use rand::Rng;
use sirsd_koopman::model::StateVec;

/// A point on the simplex with every component at least `floor`.
pub fn interior_point<R: Rng>(rng: &mut R, floor: f64) -> StateVec {
    let w: [f64; 4] = std::array::from_fn(|_| -rng.gen::<f64>().max(1e-12).ln());
    let total: f64 = w.iter().sum();
    let spare = 1.0 - 4.0 * floor;
    let s = floor + spare * w[0] / total;
    let i = floor + spare * w[1] / total;
    let r = floor + spare * w[2] / total;
    StateVec::new(s, i, r, 1.0 - s - i - r)
}

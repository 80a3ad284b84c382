//! Seeded randomness.
//!
//! Every random choice in the toolkit draws from [`ChaCha8Rng`], which is
//! portable across platforms. Work that is split per document uses
//! [`stream_rng`]: the generator is seeded from the run seed and then moved
//! to ChaCha stream number `index`, so document `i` sees the same draws no
//! matter how many documents precede it or which thread handles it.

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

use crate::Scalar;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for the `index`-th independent stream of a run.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw in `[0, 1)`.
pub fn unit<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::of(rng.random::<f64>())
}

/// Inverse-CDF draw from non-negative weights. Returns `None` when the
/// weights carry no mass.
pub fn categorical<T: Scalar, R: Rng + ?Sized>(weights: &[T], rng: &mut R) -> Option<usize> {
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) || !total.is_finite() {
        return None;
    }
    let target = unit::<T, R>(rng) * total;
    let mut acc = T::zero();
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > T::zero() {
            acc = acc + w;
            last_positive = Some(i);
            if target < acc {
                return Some(i);
            }
        }
    }
    // rounding left `target` at the very top of the range
    last_positive
}

//! Seeded random evaluation points for frequency-sampled checks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A point with `Re s` in `[0.5, 3]` and `|Im s| <= 3`.
pub fn point<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(0.5..=3.0), rng.random_range(-3.0..=3.0))
}

pub fn points(count: usize, seed: u64) -> Vec<Complex64> {
    let mut r = rng(seed);
    (0..count).map(|_| point(&mut r)).collect()
}

/// Applies `f` at `count` sample points, redrawing any point that lands on
/// a pole.
pub fn sample<T>(count: usize, seed: u64, mut f: impl FnMut(Complex64) -> Result<T>) -> Result<Vec<T>> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut misses = 0;
    while out.len() < count {
        match f(point(&mut r)) {
            Ok(v) => out.push(v),
            Err(Error::SingularAtS(s)) => {
                misses += 1;
                if misses > 100 {
                    return Err(Error::SingularAtS(s));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

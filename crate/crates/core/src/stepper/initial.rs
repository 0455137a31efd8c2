//! Reproducible initial data.
//!
//! Random data comes from ChaCha8 seeded through `seed_from_u64`, a portable
//! generator whose stream is fixed across platforms and crate releases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::TorusGrid;
use crate::scalar::Real;

/// Mean-zero values in `[-amplitude, amplitude]`.
///
/// Draws uniform values in that interval, subtracts their mean, and shrinks
/// the result back into the interval if the shift pushed any value outside.
pub fn random_meanzero<T: Real>(len: usize, amplitude: T, seed: u64) -> Vec<T> {
    let amp = amplitude.to_f64_lossy();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..len)
        .map(|_| amp * (2.0 * rng.gen::<f64>() - 1.0))
        .collect();
    if len > 0 {
        let mean = values.iter().sum::<f64>() / len as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > amp {
            values.iter_mut().for_each(|v| *v *= amp / peak);
        }
    }
    values.into_iter().map(T::lit).collect()
}

/// Rescales `u` so that `max |u| = target`. Zero data is left alone.
pub fn scale_to_linf<T: Real>(u: &mut [T], target: T) {
    let peak = u.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if peak > T::zero() {
        let s = target / peak;
        u.iter_mut().for_each(|v| *v = *v * s);
    }
}

/// `amplitude · cos(x₁)` sampled on the grid.
pub fn cosine_mode<T: Real>(grid: &TorusGrid, amplitude: T) -> Vec<T> {
    (0..grid.len())
        .map(|flat| amplitude * grid.coordinate::<T>(grid.multi_index(flat)[0]).cos())
        .collect()
}

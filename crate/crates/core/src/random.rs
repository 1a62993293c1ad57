//! Seeded smooth random fields for tests, perturbations and initial guesses.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::ComplexField;
use crate::grid::Grid;

pub type FieldRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> FieldRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sum of `bumps` modulated Gaussians with random centers in `[-2, 2]^N`, widths in
/// `[0.6, 1.5]`, wave vectors in `[-1.5, 1.5]^N` and complex amplitudes.
pub fn smooth_random_field<R: Rng>(grid: &Grid, rng: &mut R, bumps: usize) -> ComplexField {
    let d = grid.dim();
    let params: Vec<([f64; 3], f64, [f64; 3], Complex64)> = (0..bumps)
        .map(|_| {
            let mut c = [0.0; 3];
            let mut k = [0.0; 3];
            for a in 0..d {
                c[a] = rng.gen_range(-2.0..2.0);
                k[a] = rng.gen_range(-1.5..1.5);
            }
            let s = rng.gen_range(0.6..1.5);
            let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (c, s, k, amp)
        })
        .collect();
    ComplexField::from_fn(grid, |x| {
        params
            .iter()
            .map(|(c, s, k, amp)| {
                let mut r2 = 0.0;
                let mut phase = 0.0;
                for a in 0..d {
                    r2 += (x[a] - c[a]).powi(2);
                    phase += k[a] * x[a];
                }
                amp * Complex64::from_polar((-r2 / (2.0 * s * s)).exp(), phase)
            })
            .sum()
    })
}

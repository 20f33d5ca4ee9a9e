#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stencilflow::{PipelineSpec, StencilKernel, Tap};

/// Axis-aligned star of radius `r` with seeded coefficients in `[-0.2, 0.2)`.
pub fn random_star(ndim: usize, r: i32, seed: u64) -> PipelineSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taps = vec![Tap::new([0, 0, 0], rng.gen_range(-0.2f32..0.2))];
    for axis in 0..ndim {
        for d in 1..=r {
            for sign in [-1, 1] {
                let mut off = [0; 3];
                off[axis] = sign * d;
                taps.push(Tap::new(off, rng.gen_range(-0.2f32..0.2)));
            }
        }
    }
    let kernel = StencilKernel::new(format!("star-{ndim}d-r{r}"), ndim, taps, 10).unwrap();
    PipelineSpec::single(kernel)
}

pub fn random_jacobi_coeffs(seed: u64) -> [f32; 7] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::array::from_fn(|_| rng.gen_range(-0.3f32..0.3))
}

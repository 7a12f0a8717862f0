//! Seeded sampling: iid Gaussian vectors, the unit sphere surface, and the closed unit ball.
//!
//! Every sampler is a pure function of its parameters and a [`Seed`]; parallel
//! callers obtain independent streams by deriving one seed per trial index.

use rand::RngExt as _;
use rand::SeedableRng as _;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};

use crate::error::{Error, Result};
use crate::signal::{norm_sq_slice, Signal};

/// A 64-bit seed; equal seeds with equal parameters reproduce output bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed(value)
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed for a trial index, combining the base
/// seed with the index through a splittable mixer.
pub fn derive(seed: Seed, index: u64) -> Seed {
    Seed(mix(seed.0 ^ mix(index)))
}

pub(crate) fn rng_from(seed: Seed) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.0)
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidParam("sample dimension must be at least 1".into()));
    }
    Ok(())
}

fn gaussian_raw(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let mut v = gaussian_raw(rng, dim);
        let n2 = norm_sq_slice(&v);
        if n2 > f64::MIN_POSITIVE {
            let inv = 1.0 / n2.sqrt();
            for x in &mut v {
                *x *= inv;
            }
            return v;
        }
    }
}

/// Vector of iid standard normal coordinates.
pub fn sample_gaussian(dim: usize, seed: Seed) -> Result<Signal> {
    check_dim(dim)?;
    let mut rng = rng_from(seed);
    Ok(Signal::from_raw(gaussian_raw(&mut rng, dim)))
}

/// Uniform draw from the surface of the unit sphere.
pub fn sample_sphere_surface(dim: usize, seed: Seed) -> Result<Signal> {
    check_dim(dim)?;
    let mut rng = rng_from(seed);
    Ok(Signal::from_raw(unit_direction(&mut rng, dim)))
}

/// Uniform draw from the closed unit ball, via an isotropic direction scaled
/// by a radius distributed as U^{1/dim}.
pub fn sample_ball(dim: usize, seed: Seed) -> Result<Signal> {
    check_dim(dim)?;
    let mut rng = rng_from(seed);
    let mut v = unit_direction(&mut rng, dim);
    let u: f64 = rng.random();
    let r = u.powf(1.0 / dim as f64);
    for x in &mut v {
        *x *= r;
    }
    Ok(Signal::from_raw(v))
}

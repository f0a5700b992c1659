//! Deterministic randomness: ChaCha20 streams keyed by a 256-bit seed.
//! Fine for reproducible experiments, not for protecting real data.

use core::f64::consts::PI;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::torus::Torus;

pub type Seed = [u8; 32];

/// Expands a small integer into a seed (little-endian in the first bytes).
pub fn seed_from_u64(v: u64) -> Seed {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&v.to_le_bytes());
    s
}

/// Generator for stream `stream` under `seed`; distinct streams never
/// overlap.
pub fn stream_rng(seed: Seed, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::from_seed(seed);
    rng.set_stream(stream);
    rng
}

pub fn uniform_torus<R: RngCore>(rng: &mut R) -> Torus {
    Torus(rng.next_u64())
}

pub fn uniform_bit<R: RngCore>(rng: &mut R) -> u8 {
    (rng.next_u32() & 1) as u8
}

fn unit_open<R: RngCore>(rng: &mut R) -> f64 {
    // (0, 1] with 53 bits.
    ((rng.next_u64() >> 11) + 1) as f64 * libm::ldexp(1.0, -53)
}

/// Standard normal sample (Box-Muller, one output per call).
pub fn standard_normal<R: RngCore>(rng: &mut R) -> f64 {
    let r = libm::sqrt(-2.0 * libm::log(unit_open(rng)));
    r * libm::cos(2.0 * PI * unit_open(rng))
}

/// Rounded Gaussian torus error of deviation `std` (a torus fraction).
/// `std == 0` yields exactly zero without consuming randomness.
pub fn gaussian_torus<R: RngCore>(rng: &mut R, std: f64) -> Torus {
    if std == 0.0 {
        return Torus::ZERO;
    }
    let x = standard_normal(rng) * std;
    Torus(libm::round(libm::ldexp(x, 64)) as i64 as u64)
}

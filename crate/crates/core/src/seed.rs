//! Master-seed splitting and the few random primitives the simulator needs.
//!
//! Every subsystem draws from its own ChaCha20 stream keyed by
//! `(master seed, label, index)`, so adding draws in one subsystem never
//! shifts another's.

use num_complex::Complex64;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label
        .bytes()
        .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

/// Child seed for `label` (and a per-item `index`) under `master`.
pub fn derive(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(label)) ^ splitmix64(index.wrapping_add(0x5851_F42D)))
}

/// ChaCha20 stream for `(master, label, index)`.
pub fn stream(master: u64, label: &str, index: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(derive(master, label, index))
}

/// Uniform in `(0, 1]`.
pub fn unit_open<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

/// Circularly-symmetric complex Gaussian with unit variance, `CN(0, 1)`.
pub fn complex_gaussian<R: RngCore + ?Sized>(rng: &mut R) -> Complex64 {
    // Box–Muller: the radius carries E|z|^2 = 1
    let u1 = unit_open(rng);
    let u2 = unit_open(rng);
    let radius = libm::sqrt(-libm::log(u1));
    let angle = 2.0 * core::f64::consts::PI * u2;
    Complex64::new(radius * libm::cos(angle), radius * libm::sin(angle))
}

/// Uniform on the annulus `min_radius <= |z| <= 1`.
pub fn annulus<R: RngCore + ?Sized>(rng: &mut R, min_radius: f64) -> Complex64 {
    let lo = min_radius * min_radius;
    let radius = libm::sqrt(lo + (1.0 - lo) * unit_open(rng));
    let angle = 2.0 * core::f64::consts::PI * unit_open(rng);
    Complex64::new(radius * libm::cos(angle), radius * libm::sin(angle))
}

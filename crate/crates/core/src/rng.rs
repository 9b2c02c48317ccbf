//! Counter-based splittable random keys.
//!
//! A [`RngKey`] is a 128-bit value. Every random quantity is a hash of the key
//! together with a domain tag and a counter, so draws are pure functions of
//! the key and never depend on shared generator state. Keys are threaded by
//! splitting: a key used for a split must not also be used for a draw.

use std::f64::consts::TAU;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

const DOMAIN_SPLIT_HI: u64 = 0x5b1f_0c3a_d2e4_1a01;
const DOMAIN_SPLIT_LO: u64 = 0x7c2d_94e1_b806_3f02;
const DOMAIN_UNIFORM: u64 = 0x1e8a_f3b7_6c52_9d03;
const DOMAIN_NORMAL: u64 = 0x3a64_c1d9_0f7e_2b04;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RngKey {
    counter_hi: u64,
    counter_lo: u64,
}

impl RngKey {
    /// Root key for a 64-bit seed.
    pub fn new(seed: u64) -> Self {
        let hi = mix64(seed.wrapping_add(GOLDEN));
        let lo = mix64(hi ^ seed.rotate_left(32) ^ GOLDEN.rotate_left(17));
        RngKey {
            counter_hi: hi,
            counter_lo: lo,
        }
    }

    pub const fn from_parts(counter_hi: u64, counter_lo: u64) -> Self {
        RngKey {
            counter_hi,
            counter_lo,
        }
    }

    pub fn parts(self) -> (u64, u64) {
        (self.counter_hi, self.counter_lo)
    }

    #[inline]
    fn bits(self, domain: u64, index: u64) -> u64 {
        let mut x = mix64(self.counter_hi.wrapping_add(GOLDEN));
        x = mix64(x ^ self.counter_lo);
        x = mix64(x ^ domain);
        mix64(
            x ^ index
                .wrapping_mul(GOLDEN)
                .wrapping_add(domain.rotate_left(29)),
        )
    }

    /// The `index`-th child of this key; `split(n)[i] == child(i)`.
    pub fn child(self, index: u64) -> RngKey {
        RngKey {
            counter_hi: self.bits(DOMAIN_SPLIT_HI, index),
            counter_lo: self.bits(DOMAIN_SPLIT_LO, index),
        }
    }

    pub fn split(self, n: usize) -> Vec<RngKey> {
        (0..n as u64).map(|i| self.child(i)).collect()
    }

    pub fn split2(self) -> (RngKey, RngKey) {
        (self.child(0), self.child(1))
    }

    pub fn split3(self) -> (RngKey, RngKey, RngKey) {
        (self.child(0), self.child(1), self.child(2))
    }

    #[inline]
    fn unit(bits: u64) -> f64 {
        (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(self) -> f64 {
        Self::unit(self.bits(DOMAIN_UNIFORM, 0))
    }

    /// `n` independent uniforms on `[0, 1)`. The stream depends on `n`.
    pub fn uniforms(self, n: usize) -> Vec<f64> {
        let domain = DOMAIN_UNIFORM ^ mix64(n as u64);
        (0..n as u64)
            .map(|i| Self::unit(self.bits(domain, i)))
            .collect()
    }

    pub fn normal(self) -> f64 {
        self.normal_vector(1)[0]
    }

    /// `n` i.i.d. standard normals by Box-Muller. The stream depends on `n`.
    pub fn normal_vector(self, n: usize) -> Vec<f64> {
        let domain = DOMAIN_NORMAL ^ mix64(n as u64);
        let mut out = Vec::with_capacity(n + 1);
        let mut pair = 0u64;
        while out.len() < n {
            // 1 - u lies in (0, 1], keeping the logarithm finite.
            let u1 = 1.0 - Self::unit(self.bits(domain, 2 * pair));
            let u2 = Self::unit(self.bits(domain, 2 * pair + 1));
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (TAU * u2).sin_cos();
            out.push(r * c);
            out.push(r * s);
            pair += 1;
        }
        out.truncate(n);
        out
    }
}

pub fn split_key(key: RngKey, n: usize) -> Vec<RngKey> {
    key.split(n)
}

pub fn uniform(key: RngKey) -> f64 {
    key.uniform()
}

pub fn normal_vector(key: RngKey, n: usize) -> Vec<f64> {
    key.normal_vector(n)
}

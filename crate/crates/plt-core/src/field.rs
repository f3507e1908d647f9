//! Arithmetic in the prime field F_p.
//!
//! Elements are residues stored as `u64`, always reduced into `[0, p)`.
//! The modulus is capped at 2^31 so that a product of two residues fits
//! in a `u64` without overflow; every operation reduces eagerly.

use rand::Rng;

use crate::error::{Error, Result};

/// Largest admissible modulus (exclusive bound 2^31).
pub const MAX_MODULUS: u64 = 1 << 31;

/// A prime modulus, verified at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    /// Builds the field F_p, rejecting composite or oversized moduli.
    pub fn new(p: u64) -> Result<Self> {
        if p > MAX_MODULUS {
            return Err(Error::ModulusTooLarge(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    pub fn modulus(self) -> u64 {
        self.p
    }

    pub fn reduce(self, x: u64) -> u64 {
        x % self.p
    }

    /// Reduces a possibly negative integer into `[0, p)`.
    pub fn reduce_signed(self, x: i64) -> u64 {
        let p = self.p as i64;
        (x.rem_euclid(p)) as u64
    }

    pub fn add(self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.p && b < self.p);
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    pub fn sub(self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.p && b < self.p);
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    pub fn neg(self, a: u64) -> u64 {
        debug_assert!(a < self.p);
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub fn mul(self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.p && b < self.p);
        a * b % self.p
    }

    pub fn pow(self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(self, a: u64) -> Result<u64> {
        if a % self.p == 0 {
            return Err(Error::InversionOfZero);
        }
        let (mut r0, mut r1) = (self.p as i64, (a % self.p) as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1, "modulus is prime, so gcd(a, p) = 1");
        Ok(self.reduce_signed(t0))
    }

    /// Uniform residue in `[0, p)`.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.p)
    }

    /// Uniform residue in `[1, p)`.
    pub fn sample_nonzero<R: Rng + ?Sized>(self, rng: &mut R) -> u64 {
        rng.gen_range(1..self.p)
    }

    /// `count` distinct residues, drawn without replacement.
    pub fn sample_distinct<R: Rng + ?Sized>(self, rng: &mut R, count: usize) -> Result<Vec<u64>> {
        if count as u64 > self.p {
            return Err(Error::FieldTooSmall(format!(
                "{count} distinct points requested from F_{}",
                self.p
            )));
        }
        let mut chosen = Vec::with_capacity(count);
        while chosen.len() < count {
            let x = self.sample(rng);
            if !chosen.contains(&x) {
                chosen.push(x);
            }
        }
        Ok(chosen)
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

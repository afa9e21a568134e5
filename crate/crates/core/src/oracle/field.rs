use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default modulus, the Mersenne prime `2^31 - 1`.
pub const DEFAULT_PRIME: u64 = 2_147_483_647;
/// Second modulus used to corroborate a speciality gap.
pub const SECOND_PRIME: u64 = 2_147_483_629;

/// Arithmetic modulo a prime below `2^31`, so every product fits in a `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 31 || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, a: u64) -> u64 {
        a % self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.p
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
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

    /// Inverse of a non-zero residue by Fermat's little theorem.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(!a.is_multiple_of(self.p));
        self.pow(a, self.p - 2)
    }
}

/// Trial-division primality, adequate below `2^31`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut f = 3;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

/// Largest prime strictly below `n`, if any.
pub fn previous_prime(n: u64) -> Option<u64> {
    (2..n).rev().find(|&c| is_prime(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_primes_are_prime() {
        assert!(PrimeField::new(DEFAULT_PRIME).is_ok());
        assert!(PrimeField::new(SECOND_PRIME).is_ok());
        assert_eq!(previous_prime(DEFAULT_PRIME), Some(SECOND_PRIME));
    }

    #[test]
    fn rejects_composites_and_large() {
        assert!(matches!(PrimeField::new(15), Err(Error::NotPrime(15))));
        assert!(PrimeField::new(1).is_err());
        assert!(PrimeField::new(4_294_967_291).is_err());
    }

    #[test]
    fn inverse_roundtrip() {
        let f = PrimeField::new(101).unwrap();
        for a in 1..101 {
            assert_eq!(f.mul(a, f.inv(a)), 1);
        }
        assert_eq!(f.sub(3, 5), 99);
        assert_eq!(f.add(100, 5), 4);
    }
}

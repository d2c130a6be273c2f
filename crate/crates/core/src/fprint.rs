//! Karp–Rabin equality fingerprints.
//!
//! A fingerprint of a string `S` is `sum_i enc(S[i]) * b^(|S|-i)` over
//! `GF(2^61-1)`, where the base `b` is drawn from the seed. Fingerprints
//! carry their length and `b^len`, so the fingerprint of a concatenation
//! is computable from the fingerprints of the parts in constant time.

use crate::field::Fp;
use crate::sym::Sym;
use rand_core::{RngCore, SeedableRng};

/// The random evaluation base shared by all fingerprints that are meant
/// to be comparable. Compressed strings built under different bases
/// cannot be concatenated or compared.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct FpBasis {
    base: Fp,
}

/// Domain tags for deriving independent random streams from one seed.
#[derive(Clone, Copy, Debug)]
pub enum Domain {
    LceBase = 1,
    CgkHash = 2,
    SketchHash = 3,
    SketchCheck = 4,
    IbltCell = 5,
    ExactMatch = 6,
    Repetition = 16,
}

/// Seeds a ChaCha stream bound to `(seed, domain, lane)`. The same triple
/// yields the same stream on every platform.
pub fn seeded_rng(seed: &[u8; 32], domain: Domain, lane: u64) -> rand_chacha::ChaCha12Rng {
    let mut rng = rand_chacha::ChaCha12Rng::from_seed(*seed);
    rng.set_stream(((domain as u64) << 32) ^ lane);
    rng
}

impl FpBasis {
    /// Derives the base from a seed. Bases are nonzero and distinct from 1.
    pub fn from_seed(seed: &[u8; 32]) -> FpBasis {
        let mut rng = seeded_rng(seed, Domain::LceBase, 0);
        loop {
            let v = Fp::new(rng.next_u64());
            if v != Fp::ZERO && v != Fp::ONE {
                return FpBasis { base: v };
            }
        }
    }

    /// A fixed basis for contexts that do not carry a seed (test helpers).
    pub fn fixed() -> FpBasis {
        FpBasis { base: Fp::new(0x3ac5_2e91_7b04_d16f) }
    }

    /// Rebuilds a basis from its raw base value (wire deserialization).
    pub fn from_raw_base(v: u64) -> FpBasis {
        FpBasis { base: Fp::new(v) }
    }

    #[inline]
    pub fn base(self) -> Fp {
        self.base
    }

    #[inline]
    fn enc(sym: Sym) -> Fp {
        // +1 keeps the all-zero character from being absorbing.
        Fp::new(sym.code()).add(Fp::ONE)
    }

    /// Fingerprint of the empty string.
    pub fn empty(self) -> Fingerprint {
        Fingerprint { val: Fp::ZERO, pow: Fp::ONE, len: 0 }
    }

    pub fn of_sym(self, sym: Sym) -> Fingerprint {
        Fingerprint { val: Self::enc(sym), pow: self.base, len: 1 }
    }

    pub fn of_syms(self, s: &[Sym]) -> Fingerprint {
        let mut f = self.empty();
        for &c in s {
            f = f.push(self, c);
        }
        f
    }

    pub fn of_bytes(self, s: &[u8]) -> Fingerprint {
        let mut f = self.empty();
        for &b in s {
            f = f.push(self, Sym::byte(b));
        }
        f
    }
}

/// A composable fingerprint: value, length, and `base^len`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct Fingerprint {
    val: Fp,
    pow: Fp,
    len: u64,
}

impl Fingerprint {
    /// Rebuilds a fingerprint from a known value and length (the power is
    /// derived); used when cancelling a prefix out of a longer one.
    pub fn from_parts(basis: FpBasis, val: Fp, len: u64) -> Fingerprint {
        Fingerprint { val, pow: basis.base().pow(len), len }
    }

    #[inline]
    pub fn len(&self) -> u64 {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn value(&self) -> Fp {
        self.val
    }

    /// Fingerprint of `self · other`.
    #[inline]
    pub fn concat(self, other: Fingerprint) -> Fingerprint {
        Fingerprint {
            val: self.val.mul(other.pow).add(other.val),
            pow: self.pow.mul(other.pow),
            len: self.len + other.len,
        }
    }

    /// Appends one symbol.
    #[inline]
    pub fn push(self, basis: FpBasis, sym: Sym) -> Fingerprint {
        Fingerprint {
            val: self.val.mul(basis.base).add(FpBasis::enc(sym)),
            pow: self.pow.mul(basis.base),
            len: self.len + 1,
        }
    }

    /// Fingerprint of a power `self^e` (the string repeated `e` times).
    pub fn repeat(self, e: u64) -> Fingerprint {
        let mut acc = Fingerprint { val: Fp::ZERO, pow: Fp::ONE, len: 0 };
        let mut base = self;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.concat(base);
            }
            base = base.concat(base);
            e >>= 1;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sym::str_syms;

    #[test]
    fn concat_matches_direct() {
        let basis = FpBasis::fixed();
        let a = str_syms("mismatch");
        let b = str_syms("machinery");
        let whole = [a.clone(), b.clone()].concat();
        assert_eq!(basis.of_syms(&a).concat(basis.of_syms(&b)), basis.of_syms(&whole));
    }

    #[test]
    fn repeat_matches_direct() {
        let basis = FpBasis::fixed();
        let u = str_syms("ab");
        let mut explicit = alloc::vec::Vec::new();
        for _ in 0..13 {
            explicit.extend_from_slice(&u);
        }
        assert_eq!(basis.of_syms(&u).repeat(13), basis.of_syms(&explicit));
        assert_eq!(basis.of_syms(&u).repeat(0), basis.empty());
    }

    #[test]
    fn derived_rngs_are_stable() {
        let mut a = seeded_rng(&[7u8; 32], Domain::CgkHash, 3);
        let mut b = seeded_rng(&[7u8; 32], Domain::CgkHash, 3);
        assert_eq!(a.next_u64(), b.next_u64());
        let mut c = seeded_rng(&[7u8; 32], Domain::CgkHash, 4);
        assert_ne!(a.next_u64(), c.next_u64());
    }
}

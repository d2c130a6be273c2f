//! Symbols and alphabets.
//!
//! The working alphabet is a 32-bit integer space. The top three codes are
//! reserved: the dummy symbol `#` used for masking, and two sentinels used
//! to reduce quasi-greedy encodings to greedy ones. Enumerated dummies
//! `#_i` (distinct copies of `#`, one per occurrence) carry their ordinal
//! in the upper 32 bits, so they never collide with ordinary characters.

use alloc::vec::Vec;

/// Highest code usable by an ordinary alphabet character.
pub const MAX_CHAR: u32 = 0xFFFF_FFFC;

const HASH_CODE: u64 = 0xFFFF_FFFF;
const S1_CODE: u64 = 0xFFFF_FFFE;
const S2_CODE: u64 = 0xFFFF_FFFD;

/// A symbol: an alphabet character, the dummy `#` (possibly enumerated),
/// one of the sentinels, or the padding symbol emitted by the CGK
/// embedding past the end of the input.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct Sym(u64);

impl Sym {
    /// The dummy symbol `#`.
    pub const HASH: Sym = Sym(HASH_CODE);
    /// Sentinel `$_1`.
    pub const S1: Sym = Sym(S1_CODE);
    /// Sentinel `$_2`.
    pub const S2: Sym = Sym(S2_CODE);
    /// A third sentinel, used when two sentinel-wrapped pairs share a
    /// middle string.
    pub const S3: Sym = Sym(0xFFFF_FFFC);
    /// Padding emitted by the CGK embedding after the walk leaves the
    /// string.
    pub const PAD: Sym = Sym(u64::MAX);

    /// An ordinary alphabet character.
    #[inline]
    pub fn chr(code: u32) -> Sym {
        debug_assert!(code < MAX_CHAR, "character code collides with a reserved symbol");
        Sym(code as u64)
    }

    /// A byte interpreted as a character.
    #[inline]
    pub fn byte(b: u8) -> Sym {
        Sym(b as u64)
    }

    /// The enumerated dummy `#_i` (`ordinal` is 1-based).
    #[inline]
    pub fn dummy(ordinal: u64) -> Sym {
        debug_assert!(ordinal > 0 && ordinal < u32::MAX as u64);
        Sym((ordinal << 32) | HASH_CODE)
    }

    /// True for `#` and every enumerated `#_i`.
    #[inline]
    pub fn is_hash(self) -> bool {
        self.0 & 0xFFFF_FFFF == HASH_CODE
    }

    /// True exactly for the plain (un-enumerated) `#`.
    #[inline]
    pub fn is_plain_hash(self) -> bool {
        self.0 == HASH_CODE
    }

    /// The raw 64-bit code. Distinct symbols have distinct codes.
    #[inline]
    pub fn code(self) -> u64 {
        self.0
    }

    /// The ordinal of an enumerated dummy, or 0 for other symbols.
    #[inline]
    pub fn dummy_ordinal(self) -> u64 {
        if self.is_hash() {
            self.0 >> 32
        } else {
            0
        }
    }
}

impl core::fmt::Debug for Sym {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if *self == Sym::HASH {
            write!(f, "#")
        } else if *self == Sym::S1 {
            write!(f, "$1")
        } else if *self == Sym::S2 {
            write!(f, "$2")
        } else if *self == Sym::S3 {
            write!(f, "$3")
        } else if *self == Sym::PAD {
            write!(f, "_")
        } else if self.is_hash() {
            write!(f, "#{}", self.0 >> 32)
        } else if self.0 >= 0x20 && self.0 < 0x7F {
            write!(f, "{}", self.0 as u8 as char)
        } else {
            write!(f, "<{}>", self.0)
        }
    }
}

/// ASCII helper used pervasively in tests and by the byte-oriented CLI.
pub fn str_syms(s: &str) -> Vec<Sym> {
    s.bytes().map(Sym::byte).collect()
}

/// Replaces the `i`-th leftmost `#` with `#_i` (the `num` transformation).
pub fn enumerate_dummies(s: &[Sym]) -> Vec<Sym> {
    let mut out = Vec::with_capacity(s.len());
    let mut ord = 0u64;
    for &c in s {
        if c.is_plain_hash() {
            ord += 1;
            out.push(Sym::dummy(ord));
        } else {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_codes_do_not_collide() {
        let a = Sym::chr(0);
        let z = Sym::chr(MAX_CHAR - 1);
        for s in [Sym::HASH, Sym::S1, Sym::S2, Sym::PAD] {
            assert_ne!(a, s);
            assert_ne!(z, s);
        }
        assert_ne!(Sym::dummy(1), Sym::HASH);
        assert_ne!(Sym::dummy(1), Sym::dummy(2));
        assert!(Sym::dummy(7).is_hash());
        assert!(!Sym::dummy(7).is_plain_hash());
    }

    #[test]
    fn num_enumerates_left_to_right() {
        let s = [Sym::HASH, Sym::byte(b'a'), Sym::HASH];
        let n = enumerate_dummies(&s);
        assert_eq!(n, alloc::vec![Sym::dummy(1), Sym::byte(b'a'), Sym::dummy(2)]);
    }
}

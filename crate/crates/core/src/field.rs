//! Arithmetic in the prime field `GF(2^61 - 1)`.

/// The Mersenne prime `2^61 - 1`.
pub const P: u64 = (1u64 << 61) - 1;

/// A field element, kept in `[0, P)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Default, Hash)]
pub struct Fp(u64);

impl Fp {
    pub const ZERO: Fp = Fp(0);
    pub const ONE: Fp = Fp(1);

    #[inline]
    pub fn new(v: u64) -> Fp {
        Fp(v % P)
    }

    #[inline]
    pub fn raw(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn add(self, o: Fp) -> Fp {
        let s = self.0 + o.0;
        Fp(if s >= P { s - P } else { s })
    }

    #[inline]
    pub fn sub(self, o: Fp) -> Fp {
        let s = self.0 + P - o.0;
        Fp(if s >= P { s - P } else { s })
    }

    #[inline]
    pub fn neg(self) -> Fp {
        Fp::ZERO.sub(self)
    }

    #[inline]
    pub fn mul(self, o: Fp) -> Fp {
        let prod = self.0 as u128 * o.0 as u128;
        let lo = (prod & P as u128) as u64;
        let hi = (prod >> 61) as u64;
        let s = lo + hi;
        Fp(if s >= P { s - P } else { s })
    }

    pub fn pow(self, mut e: u64) -> Fp {
        let mut base = self;
        let mut acc = Fp::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `self` must be nonzero.
    pub fn inv(self) -> Fp {
        debug_assert_ne!(self.0, 0);
        self.pow(P - 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_spot_checks() {
        let a = Fp::new(0x1234_5678_9abc_def0);
        let b = Fp::new(0x0fed_cba9_8765_4321);
        assert_eq!(a.add(b), b.add(a));
        assert_eq!(a.mul(b), b.mul(a));
        assert_eq!(a.mul(a.inv()), Fp::ONE);
        assert_eq!(a.sub(a), Fp::ZERO);
        assert_eq!(a.mul(Fp::ONE), a);
        assert_eq!(a.pow(3), a.mul(a).mul(a));
    }

    #[test]
    fn reduction_handles_extremes() {
        let m = Fp::new(P - 1);
        assert_eq!(m.add(Fp::ONE), Fp::ZERO);
        assert_eq!(m.mul(m), Fp::ONE); // (-1)^2
    }
}

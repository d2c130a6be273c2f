//! LZ77 factorizations, periodicity, and rotations.

use crate::fprint::FpBasis;
use crate::sym::Sym;
use alloc::vec;
use alloc::vec::Vec;

/// One phrase of an LZ-like factorization. Positions are 1-based; a copy
/// phrase may overlap its own output (self-referential periodic runs).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LzPhrase {
    Literal(Sym),
    Copy { src: usize, len: usize },
}

impl LzPhrase {
    #[inline]
    pub fn len(&self) -> usize {
        match self {
            LzPhrase::Literal(_) => 1,
            LzPhrase::Copy { len, .. } => *len,
        }
    }
}

/// An ordered list of phrases whose expansions concatenate to the input.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LzFactorization {
    pub phrases: Vec<LzPhrase>,
}

impl LzFactorization {
    pub fn total_len(&self) -> usize {
        self.phrases.iter().map(|p| p.len()).sum()
    }

    pub fn expand(&self) -> Vec<Sym> {
        let mut out: Vec<Sym> = Vec::with_capacity(self.total_len());
        for p in &self.phrases {
            match *p {
                LzPhrase::Literal(c) => out.push(c),
                LzPhrase::Copy { src, len } => {
                    for t in 0..len {
                        out.push(out[src - 1 + t]);
                    }
                }
            }
        }
        out
    }

    /// Checks the LZ-like invariants: copies reference strictly earlier
    /// positions and stay in range.
    pub fn is_valid(&self) -> bool {
        let mut pos = 1usize;
        for p in &self.phrases {
            if let LzPhrase::Copy { src, len } = *p {
                if src == 0 || src >= pos || len == 0 {
                    return false;
                }
            }
            pos += p.len();
        }
        true
    }
}

/// The canonical greedy LZ77 factorization: each phrase is the longest
/// previous factor, with the leftmost source among the maximal ones.
pub fn lz77_factorize(s: &[Sym]) -> LzFactorization {
    let lpf = lpf_array(s);
    let basis = FpBasis::fixed();
    // Prefix fingerprints for leftmost-source search.
    let mut pref = Vec::with_capacity(s.len() + 1);
    pref.push(basis.empty());
    for &c in s {
        pref.push(pref.last().unwrap().push(basis, c));
    }
    let sub = |i: usize, len: usize| {
        // fingerprint of s[i..i+len) from the prefix table
        let hi = pref[i + len];
        let lo = pref[i];
        hi.value().sub(lo.value().mul(basis.base().pow(len as u64)))
    };

    let mut phrases = Vec::new();
    let mut i = 0usize;
    while i < s.len() {
        let len = lpf[i].0;
        if len == 0 {
            phrases.push(LzPhrase::Literal(s[i]));
            i += 1;
            continue;
        }
        // Leftmost source: scan candidates by fingerprint, verify on hit.
        let want = sub(i, len);
        let mut src = lpf[i].1;
        for j in 0..i {
            if j + len <= s.len() && sub(j, len) == want && s[j..j + len] == s[i..i + len] {
                src = j;
                break;
            }
            if j + len > s.len() {
                // Overlapping candidate: compare directly.
                if matches_with_overlap(s, j, i, len) {
                    src = j;
                    break;
                }
            }
        }
        phrases.push(LzPhrase::Copy { src: src + 1, len });
        i += len;
    }
    LzFactorization { phrases }
}

/// Number of phrases of the canonical LZ77 factorization, skipping the
/// leftmost-source bookkeeping.
pub fn lz_size(s: &[Sym]) -> usize {
    let lpf = lpf_array(s);
    let mut i = 0usize;
    let mut z = 0usize;
    while i < s.len() {
        i += lpf[i].0.max(1);
        z += 1;
    }
    z
}

fn matches_with_overlap(s: &[Sym], src: usize, dst: usize, len: usize) -> bool {
    (0..len).all(|t| s[src + t] == s[dst + t])
}

/// Longest previous factor per position: `lpf[i] = (len, src)` with `src`
/// some position `< i` achieving the maximum (0 when none). Matches may
/// overlap position `i`.
fn lpf_array(s: &[Sym]) -> Vec<(usize, usize)> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    let sa = suffix_array(s);
    let mut rank = vec![0usize; n];
    for (r, &p) in sa.iter().enumerate() {
        rank[p] = r;
    }
    let lcp = lcp_array(s, &sa, &rank);
    let rmq = SparseMin::new(&lcp);
    let lce = |a: usize, b: usize| -> usize {
        if a == b {
            return n - a;
        }
        let (ra, rb) = (rank[a].min(rank[b]), rank[a].max(rank[b]));
        rmq.min(ra, rb)
    };

    // Process positions right to left over a doubly-linked list in SA
    // order; when position i is processed, only positions <= i remain, so
    // its list neighbours are the best candidates.
    let mut prev = vec![usize::MAX; n + 2];
    let mut next = vec![usize::MAX; n + 2];
    for r in 0..n {
        prev[r + 1] = r;
        next[r + 1] = r + 2;
    }
    let head = 0usize; // sentinel before rank 1
    let tail = n + 1;
    next[head] = 1;
    prev[tail] = n;

    let mut lpf = vec![(0usize, 0usize); n];
    for i in (0..n).rev() {
        let r = rank[i] + 1;
        let (pr, nx) = (prev[r], next[r]);
        let mut best = (0usize, 0usize);
        if pr != head {
            let j = sa[pr - 1];
            let l = lce(i, j);
            if l > best.0 {
                best = (l, j);
            }
        }
        if nx != tail {
            let j = sa[nx - 1];
            let l = lce(i, j);
            if l > best.0 {
                best = (l, j);
            }
        }
        lpf[i] = best;
        next[pr] = nx;
        prev[nx] = pr;
    }
    lpf
}

/// Suffix array by prefix doubling, `O(n log^2 n)`.
fn suffix_array(s: &[Sym]) -> Vec<usize> {
    let n = s.len();
    let mut sa: Vec<usize> = (0..n).collect();
    let mut rank: Vec<u64> = s.iter().map(|c| c.code()).collect();
    let mut tmp = vec![0u64; n];
    let mut k = 1usize;
    loop {
        let key = |i: usize| (rank[i], if i + k < n { rank[i + k] as i128 } else { -1 });
        sa.sort_unstable_by(|&a, &b| key(a).cmp(&key(b)));
        tmp[sa[0]] = 0;
        for w in 1..n {
            tmp[sa[w]] = tmp[sa[w - 1]] + u64::from(key(sa[w - 1]) != key(sa[w]));
        }
        rank.copy_from_slice(&tmp);
        if rank[sa[n - 1]] as usize == n - 1 {
            break;
        }
        k *= 2;
    }
    sa
}

/// Kasai's LCP construction: `lcp[r] = LCE(sa[r], sa[r+1])`.
fn lcp_array(s: &[Sym], sa: &[usize], rank: &[usize]) -> Vec<usize> {
    let n = s.len();
    if n <= 1 {
        return Vec::new();
    }
    let mut lcp = vec![0usize; n - 1];
    let mut h = 0usize;
    for i in 0..n {
        if rank[i] + 1 < n {
            let j = sa[rank[i] + 1];
            while i + h < n && j + h < n && s[i + h] == s[j + h] {
                h += 1;
            }
            lcp[rank[i]] = h;
            h = h.saturating_sub(1);
        } else {
            h = 0;
        }
    }
    lcp
}

struct SparseMin {
    rows: Vec<Vec<usize>>,
}

impl SparseMin {
    fn new(a: &[usize]) -> SparseMin {
        let mut rows = vec![a.to_vec()];
        let mut w = 1usize;
        while 2 * w <= a.len() {
            let prev = rows.last().unwrap();
            let row: Vec<usize> =
                (0..=prev.len().saturating_sub(w + 1)).map(|i| prev[i].min(prev[i + w])).collect();
            if row.is_empty() {
                break;
            }
            rows.push(row);
            w *= 2;
        }
        SparseMin { rows }
    }

    /// min of a[lo..hi] for lo < hi.
    fn min(&self, lo: usize, hi: usize) -> usize {
        let len = hi - lo;
        let lvl = (usize::BITS - 1 - len.leading_zeros()) as usize;
        self.rows[lvl][lo].min(self.rows[lvl][hi - (1 << lvl)])
    }
}

/// Period and primitivity data.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PeriodInfo {
    pub shortest_period_length: usize,
    pub is_primitive: bool,
}

/// Length of the shortest period: the smallest `p` with
/// `s[i] = s[i+p]` for all valid `i`. Input must be non-empty.
pub fn shortest_period(s: &[Sym]) -> usize {
    assert!(!s.is_empty(), "shortest_period of an empty string");
    let n = s.len();
    // KMP border array: per(s) = n - longest proper border.
    let mut border = vec![0usize; n];
    for i in 1..n {
        let mut b = border[i - 1];
        while b > 0 && s[i] != s[b] {
            b = border[b - 1];
        }
        if s[i] == s[b] {
            b += 1;
        }
        border[i] = b;
    }
    n - border[n - 1]
}

pub fn period_info(s: &[Sym]) -> PeriodInfo {
    let p = shortest_period(s);
    PeriodInfo {
        shortest_period_length: p,
        is_primitive: !(p < s.len() && s.len() % p == 0),
    }
}

/// Cyclic rotation with shift `s` (negative shifts rotate backwards).
/// Input must be non-empty.
pub fn rotate(q: &[Sym], shift: i64) -> Vec<Sym> {
    assert!(!q.is_empty(), "rotate of an empty string");
    let n = q.len() as i64;
    let s = shift.rem_euclid(n) as usize;
    let mut out = Vec::with_capacity(q.len());
    out.extend_from_slice(&q[s..]);
    out.extend_from_slice(&q[..s]);
    out
}

/// Character `i` (1-based) of the infinite power `d^∞`.
#[inline]
pub fn periodic_at(d: &[Sym], i: u64) -> Sym {
    d[((i - 1) % d.len() as u64) as usize]
}

/// Prefix of length `len` of `d^∞`.
pub fn periodic_prefix(d: &[Sym], len: usize) -> Vec<Sym> {
    (1..=len as u64).map(|i| periodic_at(d, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sym::str_syms;
    use rand::{Rng, SeedableRng};

    /// Reference factorization: direct greedy scan, leftmost maximal.
    fn lz77_naive(s: &[Sym]) -> LzFactorization {
        let mut phrases = Vec::new();
        let mut i = 0usize;
        while i < s.len() {
            let mut best = (0usize, 0usize);
            for j in 0..i {
                let mut l = 0usize;
                while i + l < s.len() && s[j + l] == s[i + l] {
                    l += 1;
                }
                if l > best.0 {
                    best = (l, j);
                }
            }
            if best.0 == 0 {
                phrases.push(LzPhrase::Literal(s[i]));
                i += 1;
            } else {
                phrases.push(LzPhrase::Copy { src: best.1 + 1, len: best.0 });
                i += best.0;
            }
        }
        LzFactorization { phrases }
    }

    #[test]
    fn empty_and_singleton() {
        assert_eq!(lz77_factorize(&[]).phrases.len(), 0);
        let f = lz77_factorize(&str_syms("a"));
        assert_eq!(f.phrases, vec![LzPhrase::Literal(Sym::byte(b'a'))]);
    }

    #[test]
    fn uniform_run_compresses_to_two_phrases() {
        let f = lz77_factorize(&str_syms("aaaa"));
        assert_eq!(
            f.phrases,
            vec![LzPhrase::Literal(Sym::byte(b'a')), LzPhrase::Copy { src: 1, len: 3 }]
        );
        assert_eq!(f.expand(), str_syms("aaaa"));
    }

    #[test]
    fn abab_has_three_phrases() {
        let f = lz77_factorize(&str_syms("abab"));
        assert_eq!(f.phrases.len(), 3);
        assert_eq!(f.phrases[2], LzPhrase::Copy { src: 1, len: 2 });
    }

    #[test]
    fn matches_naive_on_random_strings() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.gen_range(0..48);
            let sigma = rng.gen_range(1..4u32);
            let s: Vec<Sym> = (0..n).map(|_| Sym::chr(rng.gen_range(0..sigma))).collect();
            let fast = lz77_factorize(&s);
            let slow = lz77_naive(&s);
            assert_eq!(fast, slow, "input {:?}", s);
            assert!(fast.is_valid());
            assert_eq!(fast.expand(), s);
            assert_eq!(lz_size(&s), slow.phrases.len());
        }
    }

    #[test]
    fn lz_subadditivity() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(0..24);
            let m = rng.gen_range(0..24);
            let x: Vec<Sym> = (0..n).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
            let y: Vec<Sym> = (0..m).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
            let xy = [x.clone(), y.clone()].concat();
            let zx = lz_size(&x);
            let zy = lz_size(&y);
            let zxy = lz_size(&xy);
            assert!(zx <= zxy && zxy <= zx + zy);
        }
    }

    #[test]
    fn periods() {
        assert_eq!(shortest_period(&str_syms("abab")), 2);
        assert_eq!(shortest_period(&str_syms("aaaa")), 1);
        assert_eq!(shortest_period(&str_syms("abcab")), 3);
        assert!(period_info(&str_syms("aabaa")).is_primitive);
        assert!(!period_info(&str_syms("abab")).is_primitive);
        assert!(period_info(&str_syms("ab")).is_primitive);
    }

    #[test]
    fn rotations() {
        let q = str_syms("abc");
        assert_eq!(rotate(&q, 1), str_syms("bca"));
        assert_eq!(rotate(&q, 0), q);
        assert_eq!(rotate(&q, -1), str_syms("cab"));
        assert_eq!(rotate(&q, 3), q);
        // rot^(a+b) = rot^b . rot^a
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = rng.gen_range(-10i64..10);
            let b = rng.gen_range(-10i64..10);
            assert_eq!(rotate(&q, a + b), rotate(&rotate(&q, a), b));
        }
    }
}

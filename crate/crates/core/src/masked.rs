//! The masked-pair encoding `E^M(X, Y)`: a compressed string over the
//! concatenation `X^M Y^M` plus dummy rank/select for both halves and the
//! list of masked segment pairs.
//!
//! LCE queries on the *enumerated* masked strings (`num`, where the i-th
//! `#` becomes the distinct `#_i`) are answered by a case split on dummy
//! ranks; the capped edit distance runs Landau–Vishkin over those LCEs,
//! and a Landau–Myers–Schmidt style frontier table provides capped edit
//! distances between arbitrary suffixes.

use crate::fprint::FpBasis;
use crate::grammar::{lce_generic, CompressedString};
use crate::rank::DummyRankSelect;
use crate::sym::Sym;
use alloc::vec;
use alloc::vec::Vec;

/// One masked diagonal run: `X[x..x+len)` paired with `Y[y..y+len)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SegPair {
    pub x: u64,
    pub y: u64,
    pub len: u64,
}

/// Which half of the pair a query addresses.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    X,
    Y,
}

/// `E^M(X,Y)`.
#[derive(Clone, Debug)]
pub struct MaskedPair {
    pair: CompressedString,
    x_len: u64,
    y_len: u64,
    rs_x: DummyRankSelect,
    rs_y: DummyRankSelect,
    seg_pairs: Vec<SegPair>,
}

/// Merges adjacent diagonal runs that continue each other.
pub fn normalize_seg_pairs(mut pairs: Vec<SegPair>) -> Vec<SegPair> {
    pairs.sort_by_key(|p| p.x);
    let mut out: Vec<SegPair> = Vec::with_capacity(pairs.len());
    for p in pairs {
        if p.len == 0 {
            continue;
        }
        if let Some(last) = out.last_mut() {
            if last.x + last.len == p.x && last.y + last.len == p.y {
                last.len += p.len;
                continue;
            }
        }
        out.push(p);
    }
    out
}

fn side_segments(pairs: &[SegPair], side: Side) -> Vec<(u64, u64)> {
    let mut segs: Vec<(u64, u64)> = pairs
        .iter()
        .map(|p| match side {
            Side::X => (p.x, p.x + p.len),
            Side::Y => (p.y, p.y + p.len),
        })
        .collect();
    segs.sort_unstable();
    // Merge touching segments so rank/select sees maximal runs.
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(segs.len());
    for (l, r) in segs {
        if let Some(last) = out.last_mut() {
            assert!(l >= last.1, "overlapping masked segments");
            if l == last.1 {
                last.1 = r;
                continue;
            }
        }
        out.push((l, r));
    }
    out
}

impl MaskedPair {
    /// Builds from explicit strings, masking the given segment pairs.
    pub fn from_explicit(
        x: &[Sym],
        y: &[Sym],
        seg_pairs: Vec<SegPair>,
        basis: FpBasis,
    ) -> MaskedPair {
        let seg_pairs = normalize_seg_pairs(seg_pairs);
        let mut xm = x.to_vec();
        let mut ym = y.to_vec();
        for p in &seg_pairs {
            for t in 0..p.len {
                xm[(p.x + t - 1) as usize] = Sym::HASH;
                ym[(p.y + t - 1) as usize] = Sym::HASH;
            }
        }
        let mut both = xm;
        both.extend_from_slice(&ym);
        let pair = CompressedString::from_syms(&both, basis);
        MaskedPair::from_parts(pair, x.len() as u64, y.len() as u64, seg_pairs)
    }

    /// Builds from an already-compressed `D(X^M Y^M)` and the segment
    /// pairs describing `M`.
    pub fn from_parts(
        pair: CompressedString,
        x_len: u64,
        y_len: u64,
        seg_pairs: Vec<SegPair>,
    ) -> MaskedPair {
        assert_eq!(pair.len(), x_len + y_len, "pair length mismatch");
        let seg_pairs = normalize_seg_pairs(seg_pairs);
        let rs_x = DummyRankSelect::from_segments(&side_segments(&seg_pairs, Side::X), x_len);
        let rs_y = DummyRankSelect::from_segments(&side_segments(&seg_pairs, Side::Y), y_len);
        MaskedPair { pair, x_len, y_len, rs_x, rs_y, seg_pairs }
    }

    pub fn basis(&self) -> FpBasis {
        self.pair.basis()
    }

    pub fn x_len(&self) -> u64 {
        self.x_len
    }

    pub fn y_len(&self) -> u64 {
        self.y_len
    }

    pub fn seg_pairs(&self) -> &[SegPair] {
        &self.seg_pairs
    }

    pub fn rs(&self, side: Side) -> &DummyRankSelect {
        match side {
            Side::X => &self.rs_x,
            Side::Y => &self.rs_y,
        }
    }

    pub fn pair_string(&self) -> &CompressedString {
        &self.pair
    }

    pub fn grammar_size(&self) -> usize {
        self.pair.grammar_size()
    }

    fn side_len(&self, side: Side) -> u64 {
        match side {
            Side::X => self.x_len,
            Side::Y => self.y_len,
        }
    }

    /// `D(X^M)` resp. `D(Y^M)`.
    pub fn side_string(&mut self, side: Side) -> CompressedString {
        match side {
            Side::X => self.pair.extract(1, self.x_len),
            Side::Y => self.pair.extract(self.x_len + 1, self.x_len + self.y_len),
        }
    }

    /// The masked string of one side, expanded (plain `#`s).
    pub fn side_syms(&self, side: Side) -> Vec<Sym> {
        let all = self.pair.expand();
        match side {
            Side::X => all[..self.x_len as usize].to_vec(),
            Side::Y => all[self.x_len as usize..].to_vec(),
        }
    }

    /// The pair `(X, Y)` with masked characters restored is not stored;
    /// this returns the enumerated masked side `num(X^M)` for oracles.
    pub fn side_num_syms(&self, side: Side) -> Vec<Sym> {
        crate::sym::enumerate_dummies(&self.side_syms(side))
    }

    /// The masked side with the other pair's characters, for swapping.
    pub fn swapped(&mut self) -> MaskedPair {
        let x = self.pair.extract(1, self.x_len);
        let y = self.pair.extract(self.x_len + 1, self.x_len + self.y_len);
        let pair = CompressedString::concat(&y, &x);
        let seg_pairs =
            self.seg_pairs.iter().map(|p| SegPair { x: p.y, y: p.x, len: p.len }).collect();
        MaskedPair::from_parts(pair, self.y_len, self.x_len, seg_pairs)
    }

    fn abs_fwd(&self, side: Side, i: u64) -> u64 {
        match side {
            Side::X => i,
            Side::Y => self.x_len + i,
        }
    }

    /// `LCE(num(A^M)[i..], num(B^M)[j..])` for sides `A`, `B`. Indices may
    /// be `len + 1` (empty suffix).
    pub fn masked_lce_fwd(&self, side_a: Side, i: u64, side_b: Side, j: u64) -> u64 {
        let (na, nb) = (self.side_len(side_a), self.side_len(side_b));
        assert!(i >= 1 && i <= na + 1 && j >= 1 && j <= nb + 1, "lce index out of range");
        let cap = (na + 1 - i).min(nb + 1 - j);
        if cap == 0 {
            return 0;
        }
        let (g, root) = self.pair.fwd_parts();
        let root = root.unwrap();
        let plain = lce_generic(
            g,
            root,
            self.abs_fwd(side_a, i) - 1,
            g,
            root,
            self.abs_fwd(side_b, j) - 1,
        )
        .min(cap);
        let (ra, rb) = (self.rs(side_a), self.rs(side_b));
        if ra.rank(i) == rb.rank(j) {
            return plain;
        }
        let mut out = plain;
        if let Some(d) = ra.next_dummy_at_or_after(i) {
            out = out.min(d - i);
        }
        if let Some(d) = rb.next_dummy_at_or_after(j) {
            out = out.min(d - j);
        }
        out
    }

    fn abs_rev(&self, side: Side, u: u64) -> u64 {
        // reverse(X^M Y^M) = reverse(Y^M) . reverse(X^M)
        match side {
            Side::X => self.y_len + u,
            Side::Y => u,
        }
    }

    /// `LCE(reverse(num(A^M))[u..], reverse(num(B^M))[v..])`.
    pub fn masked_lce_rev(&self, side_a: Side, u: u64, side_b: Side, v: u64) -> u64 {
        let (na, nb) = (self.side_len(side_a), self.side_len(side_b));
        assert!(u >= 1 && u <= na + 1 && v >= 1 && v <= nb + 1, "lce index out of range");
        let cap = (na + 1 - u).min(nb + 1 - v);
        if cap == 0 {
            return 0;
        }
        let (g, root) = self.pair.rev_parts();
        let root = root.unwrap();
        let plain = lce_generic(
            g,
            root,
            self.abs_rev(side_a, u) - 1,
            g,
            root,
            self.abs_rev(side_b, v) - 1,
        )
        .min(cap);
        // Forward positions corresponding to the reverse suffix heads.
        let fa = na - u + 1;
        let fb = nb - v + 1;
        let (ra, rb) = (self.rs(side_a), self.rs(side_b));
        if ra.rank(fa + 1) == rb.rank(fb + 1) {
            return plain;
        }
        let mut out = plain;
        if let Some(d) = ra.prev_dummy_at_or_before(fa) {
            out = out.min(fa - d);
        }
        if let Some(d) = rb.prev_dummy_at_or_before(fb) {
            out = out.min(fb - d);
        }
        out
    }

    /// `min(k + 1, ed(num(X^M), num(Y^M)))` by Landau–Vishkin over masked
    /// LCE queries. When `M` is contained in the common matches and the
    /// true distance is at most `k`, this equals `ed(X, Y)`.
    pub fn capped_edit_distance(&self, k: u32) -> u64 {
        let (nu, nv) = (self.x_len, self.y_len);
        if nu.abs_diff(nv) > k as u64 {
            return k as u64 + 1;
        }
        let kk = k as i64;
        let width = (2 * kk + 1) as usize;
        const NEG: i64 = i64::MIN / 4;
        let mut prev = vec![NEG; width];
        let target = nv as i64 - nu as i64;
        let slide = |i: i64, delta: i64| -> i64 {
            let i = i.min(nu as i64).min(nv as i64 - delta);
            i + self.masked_lce_fwd(Side::X, i as u64 + 1, Side::Y, (i + delta) as u64 + 1) as i64
        };
        for h in 0..=kk {
            let mut cur = vec![NEG; width];
            let lo = (-h).max(-(nu as i64));
            let hi = h.min(nv as i64);
            for delta in lo..=hi {
                let w = (delta + kk) as usize;
                let mut best = NEG;
                if h == 0 {
                    best = 0;
                } else {
                    let get = |d: i64| -> i64 {
                        if d.abs() <= h - 1 && d.abs() <= kk {
                            prev[(d + kk) as usize]
                        } else {
                            NEG
                        }
                    };
                    best = best.max(get(delta - 1));
                    best = best.max(get(delta).saturating_add(1));
                    best = best.max(get(delta + 1).saturating_add(1));
                    if h == delta.abs() {
                        // Fresh diagonal: reachable purely by h edits from
                        // the origin.
                        best = best.max(if delta < 0 { -delta } else { 0 });
                    }
                }
                if best < 0 {
                    continue;
                }
                let v = slide(best.min(nu as i64).min(nv as i64 - delta), delta);
                cur[w] = v;
                if delta == target && v >= nu as i64 {
                    return h as u64;
                }
            }
            prev = cur;
        }
        k as u64 + 1
    }

    /// Frontier table answering `min(k+1, ed(num(X^M)[u..], num(Y^M)[v..]))`.
    pub fn suffix_distance_oracle(&self, k: u32) -> SuffixDistOracle<'_> {
        SuffixDistOracle::build(self, k)
    }
}

/// Capped edit distances between suffixes, from the reverse-prefix
/// frontier table `L^h(delta) = max{ i : ed(rev(U)[1..i], rev(V)[1..i+delta]) <= h }`.
pub struct SuffixDistOracle<'a> {
    enc: &'a MaskedPair,
    k: u32,
    /// `table[h][delta + k]`.
    table: Vec<Vec<i64>>,
}

const NEG: i64 = i64::MIN / 4;

impl<'a> SuffixDistOracle<'a> {
    fn build(enc: &'a MaskedPair, k: u32) -> SuffixDistOracle<'a> {
        let (nu, nv) = (enc.x_len as i64, enc.y_len as i64);
        let kk = k as i64;
        let width = (2 * kk + 1) as usize;
        let slide = |i: i64, delta: i64| -> i64 {
            let i = i.min(nu).min(nv - delta);
            i + enc.masked_lce_rev(Side::X, i as u64 + 1, Side::Y, (i + delta) as u64 + 1) as i64
        };
        let mut table: Vec<Vec<i64>> = Vec::with_capacity(k as usize + 1);
        for h in 0..=kk {
            let mut row = vec![NEG; width];
            let lo = (-h).max(-nu);
            let hi = h.min(nv);
            for delta in lo..=hi {
                let w = (delta + kk) as usize;
                let mut best = NEG;
                if h == 0 {
                    best = 0;
                } else {
                    let get = |d: i64| -> i64 {
                        if d.abs() <= h - 1 {
                            table[(h - 1) as usize][(d + kk) as usize]
                        } else {
                            NEG
                        }
                    };
                    best = best.max(get(delta - 1));
                    best = best.max(get(delta).saturating_add(1));
                    best = best.max(get(delta + 1).saturating_add(1));
                    if h == delta.abs() {
                        best = best.max(if delta < 0 { -delta } else { 0 });
                    }
                }
                if best < 0 {
                    continue;
                }
                row[w] = slide(best.min(nu).min(nv - delta), delta);
            }
            table.push(row);
        }
        SuffixDistOracle { enc, k, table }
    }

    /// `min(k+1, ed(num(X^M)[u..], num(Y^M)[v..]))`; `u`, `v` may be one
    /// past the end.
    pub fn query(&self, u: u64, v: u64) -> u64 {
        let (nu, nv) = (self.enc.x_len, self.enc.y_len);
        debug_assert!(u >= 1 && u <= nu + 1 && v >= 1 && v <= nv + 1);
        let i = (nu + 1 - u) as i64; // reverse-prefix length of U suffix
        let j = (nv + 1 - v) as i64;
        let delta = j - i;
        let cap = self.k as u64 + 1;
        if delta.unsigned_abs() > self.k as u64 {
            return cap;
        }
        for h in delta.unsigned_abs() as usize..=self.k as usize {
            if self.table[h][(delta + self.k as i64) as usize] >= i {
                return h as u64;
            }
        }
        cap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::edit_distance_dp;
    use crate::sym::{enumerate_dummies, str_syms};
    use rand::{Rng, SeedableRng};

    fn basis() -> FpBasis {
        FpBasis::fixed()
    }

    /// Random diagonal non-crossing segment pairs for strings of the given
    /// lengths (no character-equality requirement: the query layer is
    /// purely string-level).
    fn random_pairs(
        rng: &mut rand_chacha::ChaCha12Rng,
        n: u64,
        m: u64,
        tries: usize,
    ) -> Vec<SegPair> {
        let mut out: Vec<SegPair> = Vec::new();
        let (mut nx, mut ny) = (1u64, 1u64);
        for _ in 0..tries {
            if nx > n || ny > m {
                break;
            }
            let x = rng.gen_range(nx..=n);
            let y = rng.gen_range(ny..=m);
            let maxlen = (n - x + 1).min(m - y + 1);
            let len = rng.gen_range(1..=maxlen.min(4));
            out.push(SegPair { x, y, len });
            nx = x + len + rng.gen_range(0..3);
            ny = y + len + rng.gen_range(0..3);
        }
        out
    }

    fn naive_lce(a: &[Sym], b: &[Sym]) -> u64 {
        let mut l = 0usize;
        while l < a.len() && l < b.len() && a[l] == b[l] {
            l += 1;
        }
        l as u64
    }

    #[test]
    fn simple_cases() {
        // No dummies, equal strings.
        let e = MaskedPair::from_explicit(&str_syms("ab"), &str_syms("ab"), vec![], basis());
        assert_eq!(e.masked_lce_fwd(Side::X, 1, Side::Y, 1), 2);
        // Aligned first-rank dummies match as enumerated pairs.
        let e = MaskedPair::from_explicit(
            &str_syms("xb"),
            &str_syms("xc"),
            vec![SegPair { x: 1, y: 1, len: 1 }],
            basis(),
        );
        assert_eq!(e.side_syms(Side::X), [Sym::HASH, Sym::byte(b'b')]);
        assert_eq!(e.masked_lce_fwd(Side::X, 1, Side::Y, 1), 1);
    }

    #[test]
    fn masked_lce_matches_enumerated_oracle() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(211);
        for _ in 0..250 {
            let n = rng.gen_range(1..=16u64);
            let m = rng.gen_range(1..=16u64);
            let x: Vec<Sym> = (0..n).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
            let y: Vec<Sym> = (0..m).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
            let pairs = random_pairs(&mut rng, n, m, 3);
            let e = MaskedPair::from_explicit(&x, &y, pairs, basis());
            let nx = enumerate_dummies(&e.side_syms(Side::X));
            let ny = enumerate_dummies(&e.side_syms(Side::Y));
            let mut rx = nx.clone();
            rx.reverse();
            let mut ry = ny.clone();
            ry.reverse();
            for i in 1..=n + 1 {
                for j in 1..=m + 1 {
                    assert_eq!(
                        e.masked_lce_fwd(Side::X, i, Side::Y, j),
                        naive_lce(&nx[(i - 1) as usize..], &ny[(j - 1) as usize..]),
                        "fwd ({i},{j}) X'={nx:?} Y'={ny:?}"
                    );
                    // Symmetry in the suffix arguments.
                    assert_eq!(
                        e.masked_lce_fwd(Side::X, i, Side::Y, j),
                        e.masked_lce_fwd(Side::Y, j, Side::X, i)
                    );
                    assert_eq!(
                        e.masked_lce_rev(Side::X, i, Side::Y, j),
                        naive_lce(&rx[(i - 1) as usize..], &ry[(j - 1) as usize..]),
                        "rev ({i},{j}) X'={nx:?} Y'={ny:?}"
                    );
                }
            }
            // Same-side queries see enumerated dummies too.
            for i in 1..=n + 1 {
                for j in 1..=n + 1 {
                    assert_eq!(
                        e.masked_lce_fwd(Side::X, i, Side::X, j),
                        naive_lce(&nx[(i - 1) as usize..], &nx[(j - 1) as usize..])
                    );
                }
            }
        }
    }

    #[test]
    fn capped_distance_on_empty_mask_equals_dp() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(223);
        for _ in 0..300 {
            let n = rng.gen_range(0..=10u64);
            let m = rng.gen_range(0..=10u64);
            let x: Vec<Sym> = (0..n).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
            let y: Vec<Sym> = (0..m).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
            let e = MaskedPair::from_explicit(&x, &y, vec![], basis());
            let dp = edit_distance_dp(&x, &y) as u64;
            for k in 1..=4u32 {
                assert_eq!(
                    e.capped_edit_distance(k),
                    dp.min(k as u64 + 1),
                    "x={x:?} y={y:?} k={k}"
                );
            }
        }
    }

    #[test]
    fn capped_distance_with_masks_is_num_distance() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(227);
        for _ in 0..200 {
            let n = rng.gen_range(1..=8u64);
            let m = rng.gen_range(1..=8u64);
            let x: Vec<Sym> = (0..n).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
            let y: Vec<Sym> = (0..m).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
            let pairs = random_pairs(&mut rng, n, m, 2);
            let mut y = y;
            for p in &pairs {
                // Keep M a genuine matching: matched characters are equal.
                for t in 0..p.len {
                    y[(p.y + t - 1) as usize] = x[(p.x + t - 1) as usize];
                }
            }
            let e = MaskedPair::from_explicit(&x, &y, pairs, basis());
            let nx = e.side_num_syms(Side::X);
            let ny = e.side_num_syms(Side::Y);
            let num_dp = edit_distance_dp(&nx, &ny) as u64;
            let raw_dp = edit_distance_dp(&x, &y) as u64;
            for k in 1..=3u32 {
                let d = e.capped_edit_distance(k);
                assert_eq!(d, num_dp.min(k as u64 + 1));
                // Masking never shrinks the distance.
                assert!(d >= raw_dp.min(k as u64 + 1));
            }
        }
    }

    #[test]
    fn worked_pair_distance_is_one() {
        let e = MaskedPair::from_explicit(
            &str_syms("abababcbcbc"),
            &str_syms("abbabcbcbc"),
            vec![],
            basis(),
        );
        assert_eq!(e.capped_edit_distance(5), 1);
        let eq = MaskedPair::from_explicit(&str_syms("xyz"), &str_syms("xyz"), vec![], basis());
        assert_eq!(eq.capped_edit_distance(1), 0);
    }

    #[test]
    fn suffix_oracle_matches_dp_per_suffix_pair() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(229);
        for _ in 0..150 {
            let n = rng.gen_range(1..=6u64);
            let m = rng.gen_range(1..=6u64);
            let x: Vec<Sym> = (0..n).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
            let y: Vec<Sym> = (0..m).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
            let pairs = random_pairs(&mut rng, n, m, 2);
            let e = MaskedPair::from_explicit(&x, &y, pairs, basis());
            let nx = e.side_num_syms(Side::X);
            let ny = e.side_num_syms(Side::Y);
            for k in 1..=3u32 {
                let oracle = e.suffix_distance_oracle(k);
                for u in 1..=n + 1 {
                    for v in 1..=m + 1 {
                        let dp = edit_distance_dp(
                            &nx[(u - 1) as usize..],
                            &ny[(v - 1) as usize..],
                        ) as u64;
                        assert_eq!(
                            oracle.query(u, v),
                            dp.min(k as u64 + 1),
                            "u={u} v={v} k={k} X'={nx:?} Y'={ny:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn suffix_oracle_simple_cases() {
        let e = MaskedPair::from_explicit(&str_syms("abc"), &str_syms("abc"), vec![], basis());
        let o = e.suffix_distance_oracle(1);
        for u in 1..=4 {
            assert_eq!(o.query(u, u), 0);
        }
        let e = MaskedPair::from_explicit(&str_syms("ab"), &str_syms("b"), vec![], basis());
        let o = e.suffix_distance_oracle(1);
        assert_eq!(o.query(1, 1), 1);
    }

    #[test]
    fn swapped_encoding_mirrors_queries() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(233);
        let x: Vec<Sym> = (0..8).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
        let y: Vec<Sym> = (0..6).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
        let pairs = random_pairs(&mut rng, 8, 6, 2);
        let mut e = MaskedPair::from_explicit(&x, &y, pairs, basis());
        let s = e.swapped();
        assert_eq!(s.side_syms(Side::X), e.side_syms(Side::Y));
        assert_eq!(s.side_syms(Side::Y), e.side_syms(Side::X));
        for k in 1..=3 {
            assert_eq!(s.capped_edit_distance(k), e.capped_edit_distance(k));
        }
    }
}

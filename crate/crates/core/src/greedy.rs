//! Greedy and quasi-greedy encodings.
//!
//! `GR_k(X,Y)` masks out the characters matched by *every* greedy
//! alignment of cost at most `k` and keeps the rest in a [`MaskedPair`];
//! it is `⊥` when `ed(X,Y) > k`. The quasi-greedy variant `qGR_k` uses
//! alignments that may first delete a prefix of one string, which makes
//! encodings concatenatable; it is interconvertible with
//! `GR_{k+1}($_1 X, $_2 Y)` by sentinel wrapping.
//!
//! The dummy segments are produced by a priority-queue traversal of the
//! breakpoints of all live alignments: whenever exactly one frontier
//! point survives, the run just matched is common to every alignment.

use crate::fprint::FpBasis;
use crate::grammar::CompressedString;
use crate::lz::{LzFactorization, LzPhrase};
use crate::masked::{normalize_seg_pairs, MaskedPair, SegPair, Side};
use crate::sym::Sym;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

/// Greedy (`GR`) or quasi-greedy (`qGR`) family.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Flavor {
    Greedy,
    Quasi,
}

/// A (quasi-)greedy encoding: threshold plus payload, where a missing
/// payload is `⊥` (the strings are further apart than the threshold).
#[derive(Clone, Debug)]
pub struct GrEncoding {
    pub flavor: Flavor,
    pub threshold: u32,
    pub payload: Option<MaskedPair>,
}

impl GrEncoding {
    pub fn bottom(flavor: Flavor, threshold: u32) -> GrEncoding {
        GrEncoding { flavor, threshold, payload: None }
    }

    pub fn is_bottom(&self) -> bool {
        self.payload.is_none()
    }

    /// Masked strings of both sides, expanded (test and debug surface).
    pub fn masked_sides(&self) -> Option<(Vec<Sym>, Vec<Sym>)> {
        let p = self.payload.as_ref()?;
        Some((p.side_syms(Side::X), p.side_syms(Side::Y)))
    }

    /// `min(threshold + 1, ed(X, Y))` recovered from the payload.
    pub fn capped_distance(&self) -> u64 {
        match &self.payload {
            None => self.threshold as u64 + 1,
            Some(p) => p.capped_edit_distance(self.threshold),
        }
    }
}

/// `D(#^len)` — a run of dummies.
fn hash_run(len: u64, basis: FpBasis) -> CompressedString {
    if len == 0 {
        return CompressedString::empty(basis);
    }
    let mut phrases = vec![LzPhrase::Literal(Sym::HASH)];
    if len > 1 {
        phrases.push(LzPhrase::Copy { src: 1, len: len as usize - 1 });
    }
    CompressedString::build_from_lz_like(
        &LzFactorization { phrases },
        crate::grammar::Direction::Forward,
        basis,
    )
    .unwrap()
}

/// Runs the frontier traversal and returns the masked segment pairs of
/// `X^{M_k}` and `Y^{M_k}` (as diagonal runs, in order).
///
/// `enc` provides the LCE oracle on the enumerated masked strings; the
/// suffix-distance oracle prunes branches. The caller must ensure
/// `ed(X, Y) <= k` and that `enc`'s own mask is contained in the common
/// matches.
pub fn greedy_match_segments(enc: &MaskedPair, k: u32) -> Vec<SegPair> {
    let dist = enc.suffix_distance_oracle(k);
    let (nx, ny) = (enc.x_len(), enc.y_len());
    // Frontier: point -> (credit, jump that produced it).
    let mut q: BTreeMap<(u64, u64), (i64, SegPair)> = BTreeMap::new();
    let mut segs: Vec<SegPair> = Vec::new();

    let try_match = |q: &mut BTreeMap<(u64, u64), (i64, SegPair)>,
                     x: u64,
                     y: u64,
                     credit: i64|
     -> bool {
        if credit < 0 || dist.query(x, y) as i64 > credit {
            return false;
        }
        let l = enc.masked_lce_fwd(Side::X, x, Side::Y, y);
        let key = (x + l, y + l);
        let jump = SegPair { x, y, len: l };
        q.entry(key)
            .and_modify(|e| {
                e.0 = e.0.max(credit);
                // Later pushes come from lexicographically larger
                // predecessors and produce the shorter, valid jump.
                e.1 = jump;
            })
            .or_insert((credit, jump));
        true
    };

    let emit_if_single = |q: &BTreeMap<(u64, u64), (i64, SegPair)>,
                          pushed: &[(u64, u64)],
                          segs: &mut Vec<SegPair>| {
        if q.len() == 1 {
            let (&key, &(_, jump)) = q.iter().next().unwrap();
            if jump.len > 0 && pushed.contains(&key) {
                segs.push(jump);
            }
        }
    };

    let mut pushed = Vec::new();
    if try_match(&mut q, 1, 1, k as i64) {
        pushed.push(*q.keys().next().unwrap());
    }
    emit_if_single(&q, &pushed, &mut segs);

    while let Some((&(x, y), &(credit, _))) = q.iter().next() {
        q.remove(&(x, y));
        pushed.clear();
        let mut record = |q: &mut BTreeMap<(u64, u64), (i64, SegPair)>,
                          pushed: &mut Vec<(u64, u64)>,
                          x: u64,
                          y: u64,
                          c: i64| {
            if try_match(q, x, y, c) {
                let l = enc.masked_lce_fwd(Side::X, x, Side::Y, y);
                pushed.push((x + l, y + l));
            }
        };
        if x <= nx {
            record(&mut q, &mut pushed, x + 1, y, credit - 1);
        }
        if y <= ny {
            record(&mut q, &mut pushed, x, y + 1, credit - 1);
        }
        if x <= nx && y <= ny {
            record(&mut q, &mut pushed, x + 1, y + 1, credit - 1);
        }
        emit_if_single(&q, &pushed, &mut segs);
    }
    normalize_seg_pairs(segs)
}

/// Rebuilds the payload masked pair with the given segments: characters
/// outside them are taken from the input sides, inside them `#`.
fn remask(enc: &mut MaskedPair, segs: &[SegPair]) -> MaskedPair {
    let basis = enc.basis();
    let (nx, ny) = (enc.x_len(), enc.y_len());
    let xs = enc.side_string(Side::X);
    let ys = enc.side_string(Side::Y);
    let splice = |src: &CompressedString, n: u64, runs: &[(u64, u64)]| -> CompressedString {
        let mut out = CompressedString::empty(basis);
        let mut at = 1u64;
        let mut src = src.clone();
        for &(l, r) in runs {
            if at < l {
                out = CompressedString::concat(&out, &src.extract(at, l - 1));
            }
            out = CompressedString::concat(&out, &hash_run(r - l, basis));
            at = r;
        }
        if at <= n {
            out = CompressedString::concat(&out, &src.extract(at, n));
        }
        out
    };
    let x_runs: Vec<(u64, u64)> = segs.iter().map(|p| (p.x, p.x + p.len)).collect();
    let mut y_runs: Vec<(u64, u64)> = segs.iter().map(|p| (p.y, p.y + p.len)).collect();
    y_runs.sort_unstable();
    let xm = splice(&xs, nx, &x_runs);
    let ym = splice(&ys, ny, &y_runs);
    let pair = CompressedString::concat(&xm, &ym);
    MaskedPair::from_parts(pair, nx, ny, segs.to_vec())
}

/// `GR_k(X, Y)` from any `E^M(X, Y)` whose mask is contained in the
/// common matches whenever `ed(X, Y) <= k`.
pub fn greedify(enc: &mut MaskedPair, k: u32) -> GrEncoding {
    assert!(k > 0, "threshold must be positive");
    let d = enc.capped_edit_distance(k);
    if d > k as u64 {
        return GrEncoding::bottom(Flavor::Greedy, k);
    }
    let segs = greedy_match_segments(enc, k);
    GrEncoding { flavor: Flavor::Greedy, threshold: k, payload: Some(remask(enc, &segs)) }
}

/// `GR_k(X, Y)` built directly from the strings.
pub fn gr_short(x: &[Sym], y: &[Sym], k: u32, basis: FpBasis) -> GrEncoding {
    let mut e = MaskedPair::from_explicit(x, y, vec![], basis);
    greedify(&mut e, k)
}

/// Wraps `E^M(X, Y)` into `E^{M'}(s1 X, s2 Y)` (segments shift by one).
fn wrap_sentinels(enc: &mut MaskedPair, s1: Sym, s2: Sym) -> MaskedPair {
    let basis = enc.basis();
    let xs = enc.side_string(Side::X);
    let ys = enc.side_string(Side::Y);
    let d1 = CompressedString::from_syms(&[s1], basis);
    let d2 = CompressedString::from_syms(&[s2], basis);
    let pair = CompressedString::concat(
        &CompressedString::concat(&d1, &xs),
        &CompressedString::concat(&d2, &ys),
    );
    let segs = enc
        .seg_pairs()
        .iter()
        .map(|p| SegPair { x: p.x + 1, y: p.y + 1, len: p.len })
        .collect();
    MaskedPair::from_parts(pair, enc.x_len() + 1, enc.y_len() + 1, segs)
}

/// Removes the sentinel wrap (segments shift back by one).
fn strip_sentinels(enc: &mut MaskedPair) -> MaskedPair {
    let (nx, ny) = (enc.x_len(), enc.y_len());
    assert!(nx >= 1 && ny >= 1);
    let xs = enc.side_string(Side::X);
    let ys = enc.side_string(Side::Y);
    let mut xs = xs;
    let mut ys = ys;
    let xtail = xs.extract(2, nx);
    let ytail = ys.extract(2, ny);
    let pair = CompressedString::concat(&xtail, &ytail);
    let segs = enc
        .seg_pairs()
        .iter()
        .map(|p| {
            debug_assert!(p.x >= 2 && p.y >= 2, "sentinel position masked");
            SegPair { x: p.x - 1, y: p.y - 1, len: p.len }
        })
        .collect();
    MaskedPair::from_parts(pair, nx - 1, ny - 1, segs)
}

/// `qGR_k(X, Y)` from any `E^M(X, Y)` whose mask is contained in the
/// quasi-common matches whenever `ed(X, Y) <= k`.
pub fn qgreedify(enc: &mut MaskedPair, k: u32) -> GrEncoding {
    qgreedify_with(enc, k, Sym::S1, Sym::S2)
}

fn qgreedify_with(enc: &mut MaskedPair, k: u32, s1: Sym, s2: Sym) -> GrEncoding {
    let mut wrapped = wrap_sentinels(enc, s1, s2);
    let g = greedify(&mut wrapped, k + 1);
    match g.payload {
        None => GrEncoding::bottom(Flavor::Quasi, k),
        Some(mut p) => GrEncoding {
            flavor: Flavor::Quasi,
            threshold: k,
            payload: Some(strip_sentinels(&mut p)),
        },
    }
}

/// `qGR_k(X, Y)` built directly from the strings.
pub fn qgr_short(x: &[Sym], y: &[Sym], k: u32, basis: FpBasis) -> GrEncoding {
    let mut e = MaskedPair::from_explicit(x, y, vec![], basis);
    qgreedify(&mut e, k)
}

/// `qGR_{k'}(X, Y)` from `qGR_k(X, Y)`, `k' <= k`.
pub fn lower_threshold(e: &GrEncoding, k_new: u32) -> GrEncoding {
    assert_eq!(e.flavor, Flavor::Quasi);
    assert!(k_new <= e.threshold);
    if k_new == e.threshold {
        return e.clone();
    }
    match &e.payload {
        None => GrEncoding::bottom(Flavor::Quasi, k_new),
        Some(p) => {
            let mut p = p.clone();
            qgreedify(&mut p, k_new)
        }
    }
}

/// Converts `qGR_k(X, Y)` to `GR_{k+1}($_1X, $_2Y)`.
pub fn quasi_to_greedy(e: &GrEncoding) -> GrEncoding {
    quasi_to_greedy_with(e, Sym::S1, Sym::S2)
}

fn quasi_to_greedy_with(e: &GrEncoding, s1: Sym, s2: Sym) -> GrEncoding {
    assert_eq!(e.flavor, Flavor::Quasi);
    GrEncoding {
        flavor: Flavor::Greedy,
        threshold: e.threshold + 1,
        payload: e.payload.clone().map(|mut p| wrap_sentinels(&mut p, s1, s2)),
    }
}

/// Converts `GR_{k+1}($_1X, $_2Y)` back to `qGR_k(X, Y)`.
pub fn greedy_to_quasi(e: &GrEncoding) -> GrEncoding {
    assert_eq!(e.flavor, Flavor::Greedy);
    assert!(e.threshold >= 1);
    GrEncoding {
        flavor: Flavor::Quasi,
        threshold: e.threshold - 1,
        payload: e.payload.clone().map(|mut p| strip_sentinels(&mut p)),
    }
}

/// Concatenation of quasi-greedy encodings
/// (`qGR(X_p,Y_p) * qGR(X_s,Y_s) -> qGR_k(X_pX_s, Y_pY_s)`).
///
/// The prefix must carry threshold at least `k + ||X_s|-|Y_s||` and the
/// suffix at least `k + ||X_p|-|Y_p||`.
pub fn qgr_concat(prefix: &mut GrEncoding, suffix: &mut GrEncoding, k: u32) -> GrEncoding {
    assert_eq!(prefix.flavor, Flavor::Quasi);
    assert_eq!(suffix.flavor, Flavor::Quasi);
    let (pp, ps) = match (&mut prefix.payload, &mut suffix.payload) {
        (Some(a), Some(b)) => (a, b),
        _ => return GrEncoding::bottom(Flavor::Quasi, k),
    };
    let skew_s = ps.x_len().abs_diff(ps.y_len());
    let skew_p = pp.x_len().abs_diff(pp.y_len());
    assert!(prefix.threshold as u64 >= k as u64 + skew_s, "prefix threshold too small");
    assert!(suffix.threshold as u64 >= k as u64 + skew_p, "suffix threshold too small");

    let xp = pp.side_string(Side::X);
    let yp = pp.side_string(Side::Y);
    let xs = ps.side_string(Side::X);
    let ys = ps.side_string(Side::Y);
    let x = CompressedString::concat(&xp, &xs);
    let y = CompressedString::concat(&yp, &ys);
    let pair = CompressedString::concat(&x, &y);
    let mut segs: Vec<SegPair> = pp.seg_pairs().to_vec();
    segs.extend(ps.seg_pairs().iter().map(|p| SegPair {
        x: p.x + pp.x_len(),
        y: p.y + pp.y_len(),
        len: p.len,
    }));
    let mut joint = MaskedPair::from_parts(pair, x.len(), y.len(), segs);
    qgreedify(&mut joint, k)
}

/// Random-access reference strings for the streaming builder.
pub trait RefString {
    fn len(&self) -> u64;
    fn at(&self, i: u64) -> Sym;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn slice(&self, i: u64, j: u64) -> Vec<Sym> {
        (i..=j).map(|p| self.at(p)).collect()
    }
}

impl RefString for &[Sym] {
    fn len(&self) -> u64 {
        <[Sym]>::len(self) as u64
    }
    fn at(&self, i: u64) -> Sym {
        self[(i - 1) as usize]
    }
}

/// The infinite power `d^∞` truncated to `len`.
#[derive(Clone, Debug)]
pub struct PeriodicRef {
    pub d: Vec<Sym>,
    pub len: u64,
}

impl RefString for PeriodicRef {
    fn len(&self) -> u64 {
        self.len
    }
    fn at(&self, i: u64) -> Sym {
        crate::lz::periodic_at(&self.d, i)
    }
}

/// Streaming construction of `qGR_k(X[..y], Y[..y])`: the reference `X`
/// is random-access, `Y` arrives one character at a time, and snapshots
/// lag by less than one block.
#[derive(Clone)]
pub struct QgrStreamBuilder<R: RefString> {
    reference: R,
    k: u32,
    basis: FpBasis,
    block_len: usize,
    block: Vec<Sym>,
    acc: GrEncoding,
    consumed: u64,
}

impl<R: RefString> QgrStreamBuilder<R> {
    pub fn new(reference: R, k: u32, block_len: usize, basis: FpBasis) -> Self {
        let acc = GrEncoding {
            flavor: Flavor::Quasi,
            threshold: k,
            payload: Some(MaskedPair::from_explicit(&[], &[], vec![], basis)),
        };
        QgrStreamBuilder {
            reference,
            k,
            basis,
            block_len: block_len.max(1),
            block: Vec::new(),
            acc,
            consumed: 0,
        }
    }

    /// Number of aligned characters covered by [`Self::snapshot`].
    pub fn aligned_len(&self) -> u64 {
        self.consumed
    }

    pub fn reference_len(&self) -> u64 {
        self.reference.len()
    }

    pub fn pushed_len(&self) -> u64 {
        self.consumed + self.block.len() as u64
    }

    pub fn push(&mut self, c: Sym) {
        assert!(self.pushed_len() < self.reference.len(), "stream overflow");
        self.block.push(c);
        if self.block.len() >= self.block_len {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if self.block.is_empty() {
            return;
        }
        let lo = self.consumed + 1;
        let hi = self.consumed + self.block.len() as u64;
        let xb = self.reference.slice(lo, hi);
        let mut qb = qgr_short(&xb, &self.block, self.k, self.basis);
        self.acc = qgr_concat(&mut self.acc, &mut qb, self.k);
        self.consumed = hi;
        self.block.clear();
    }

    /// `qGR_k(X[..y'], Y[..y'])` for the completed prefix
    /// (`y - y' < block_len`).
    pub fn snapshot(&self) -> GrEncoding {
        self.acc.clone()
    }

    /// Forces the pending partial block and returns the encoding of the
    /// full pushed prefix.
    pub fn snapshot_now(&self) -> GrEncoding {
        if self.block.is_empty() {
            return self.acc.clone();
        }
        let lo = self.consumed + 1;
        let hi = self.consumed + self.block.len() as u64;
        let xb = self.reference.slice(lo, hi);
        let mut qb = qgr_short(&xb, &self.block, self.k, self.basis);
        let mut acc = self.acc.clone();
        qgr_concat(&mut acc, &mut qb, self.k)
    }
}

/// Composes `E^{M_xy}(X,Y)` and `E^{M_yz}(Y,Z)` (both greedy, neither
/// `⊥`) into `E^M(X,Z)` with `M` the composed matching: masked windows of
/// one encoding are filled with the other's characters.
pub fn product_pair_encoding(
    g_xy: &mut GrEncoding,
    g_yz: &mut GrEncoding,
    _k: u32,
) -> MaskedPair {
    assert_eq!(g_xy.flavor, Flavor::Greedy);
    assert_eq!(g_yz.flavor, Flavor::Greedy);
    let pxy = g_xy.payload.as_mut().expect("product of bottom encoding");
    let pyz = g_yz.payload.as_mut().expect("product of bottom encoding");
    assert_eq!(pxy.y_len(), pyz.x_len(), "middle string length mismatch");
    let basis = pxy.basis();

    // X side: X^{M_xy} with each masked window replaced by the
    // corresponding window of Y^{M_yz}.
    let splice_through = |outer: &mut MaskedPair,
                          outer_side: Side,
                          donor: &mut MaskedPair,
                          donor_side: Side|
     -> CompressedString {
        let n = match outer_side {
            Side::X => outer.x_len(),
            Side::Y => outer.y_len(),
        };
        let mut own = outer.side_string(outer_side);
        let mut dnr = donor.side_string(donor_side);
        let mut runs: Vec<(u64, u64, u64)> = outer
            .seg_pairs()
            .iter()
            .map(|p| match outer_side {
                Side::X => (p.x, p.x + p.len, p.y),
                Side::Y => (p.y, p.y + p.len, p.x),
            })
            .collect();
        runs.sort_unstable();
        let mut out = CompressedString::empty(basis);
        let mut at = 1u64;
        for (l, r, partner) in runs {
            if at < l {
                out = CompressedString::concat(&out, &own.extract(at, l - 1));
            }
            out = CompressedString::concat(&out, &dnr.extract(partner, partner + (r - l) - 1));
            at = r;
        }
        if at <= n {
            out = CompressedString::concat(&out, &own.extract(at, n));
        }
        out
    };

    let xm = splice_through(pxy, Side::X, pyz, Side::X);
    let zm = splice_through(pyz, Side::Y, pxy, Side::Y);

    // Composed segment pairs: intersections of the masked y-windows.
    let mut composed: Vec<SegPair> = Vec::new();
    for a in pxy.seg_pairs() {
        for b in pyz.seg_pairs() {
            let lo = a.y.max(b.x);
            let hi = (a.y + a.len).min(b.x + b.len);
            if lo < hi {
                composed.push(SegPair {
                    x: a.x + (lo - a.y),
                    y: b.y + (lo - b.x),
                    len: hi - lo,
                });
            }
        }
    }
    let pair = CompressedString::concat(&xm, &zm);
    MaskedPair::from_parts(pair, xm.len(), zm.len(), composed)
}

/// `min(k+1, ed(X, Z))` from `GR_d(X,Y)` and `GR_d(Y,Z)`; `⊥` on either
/// side legitimately answers `k + 1`.
pub fn product_distance(g_xy: &mut GrEncoding, g_yz: &mut GrEncoding, k: u32) -> u64 {
    if g_xy.is_bottom() || g_yz.is_bottom() {
        return k as u64 + 1;
    }
    let enc = product_pair_encoding(g_xy, g_yz, k);
    enc.capped_edit_distance(k)
}

/// Quasi-greedy product: `min(k+1, ed(X, Z))` from `qGR_d(X,Y)` and
/// `qGR_d(Y,Z)` sharing the middle string `Y`.
pub fn product_distance_quasi(q_xy: &GrEncoding, q_yz: &GrEncoding, k: u32) -> u64 {
    if q_xy.is_bottom() || q_yz.is_bottom() {
        return k as u64 + 1;
    }
    // Wrap so the middle string is identically `$_2 Y` on both sides.
    let mut g1 = quasi_to_greedy_with(q_xy, Sym::S1, Sym::S2);
    let mut g2 = quasi_to_greedy_with(q_yz, Sym::S2, Sym::S3);
    let d = product_distance(&mut g1, &mut g2, k + 1);
    debug_assert!(d >= 1, "sentinel edit must be counted");
    d - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{enumerate_ga, EnumVariant};
    use crate::oracle::edit_distance_dp;
    use crate::sym::str_syms;
    use rand::{Rng, SeedableRng};

    fn basis() -> FpBasis {
        FpBasis::fixed()
    }

    fn bin_string(rng: &mut rand_chacha::ChaCha12Rng, n: usize) -> Vec<Sym> {
        (0..n).map(|_| Sym::chr(rng.gen_range(0..2))).collect()
    }

    /// Plants up to `e` random edits into a copy of `x`.
    fn plant_edits(rng: &mut rand_chacha::ChaCha12Rng, x: &[Sym], e: usize) -> Vec<Sym> {
        let mut y = x.to_vec();
        for _ in 0..e {
            if y.is_empty() {
                y.push(Sym::chr(rng.gen_range(0..2)));
                continue;
            }
            let i = rng.gen_range(0..y.len());
            match rng.gen_range(0..3) {
                0 => y[i] = Sym::chr(rng.gen_range(0..2)),
                1 => {
                    y.remove(i);
                }
                _ => y.insert(i, Sym::chr(rng.gen_range(0..2))),
            }
        }
        y
    }

    /// Masking derived from the exhaustive enumeration.
    fn oracle_masked(x: &[Sym], y: &[Sym], k: usize, quasi: bool) -> (Vec<Sym>, Vec<Sym>) {
        let variant = if quasi { EnumVariant::QuasiGreedy } else { EnumVariant::Greedy };
        let fam = enumerate_ga(x, y, k, variant);
        let mut xm = x.to_vec();
        let mut ym = y.to_vec();
        for &(px, py) in &fam.common_matches {
            xm[px as usize - 1] = Sym::HASH;
            ym[py as usize - 1] = Sym::HASH;
        }
        (xm, ym)
    }

    #[test]
    fn identical_strings_fully_masked() {
        let x = str_syms("abc");
        let g = gr_short(&x, &x, 1, basis());
        let (xm, ym) = g.masked_sides().unwrap();
        assert!(xm.iter().all(|c| c.is_hash()));
        assert!(ym.iter().all(|c| c.is_hash()));
        assert_eq!(g.capped_distance(), 0);
    }

    #[test]
    fn distant_strings_are_bottom() {
        let g = gr_short(&str_syms("aaaa"), &str_syms("bbbb"), 1, basis());
        assert!(g.is_bottom());
        assert_eq!(g.capped_distance(), 2);
    }

    #[test]
    fn worked_example_pair_is_not_bottom_at_four() {
        let g = gr_short(&str_syms("abbaabcb"), &str_syms("acabaabab"), 4, basis());
        assert!(!g.is_bottom());
    }

    #[test]
    fn figure_pair_segments_match_enumeration() {
        let x = str_syms("abababcbcbc");
        let y = str_syms("abbabcbcbc");
        let g = gr_short(&x, &y, 5, basis());
        let (xm, ym) = g.masked_sides().unwrap();
        let (ox, oy) = oracle_masked(&x, &y, 5, false);
        assert_eq!(xm, ox);
        assert_eq!(ym, oy);
    }

    #[test]
    fn greedy_masking_matches_enumeration_on_random_small_pairs() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(301);
        for _ in 0..400 {
            let nx = rng.gen_range(0..=6);
            let x = bin_string(&mut rng, nx);
            let ny = rng.gen_range(0..=6);
            let y = bin_string(&mut rng, ny);
            let k = rng.gen_range(1..=3u32);
            let g = gr_short(&x, &y, k, basis());
            let dp = edit_distance_dp(&x, &y);
            assert_eq!(g.is_bottom(), dp > k as usize, "x={x:?} y={y:?} k={k}");
            if let Some((xm, ym)) = g.masked_sides() {
                let (ox, oy) = oracle_masked(&x, &y, k as usize, false);
                assert_eq!(xm, ox, "x={x:?} y={y:?} k={k}");
                assert_eq!(ym, oy, "x={x:?} y={y:?} k={k}");
                assert_eq!(g.capped_distance(), dp as u64);
            }
        }
    }

    #[test]
    fn quasi_masking_matches_enumeration() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(307);
        for _ in 0..250 {
            let nx = rng.gen_range(0..=5);
            let x = bin_string(&mut rng, nx);
            let ny = rng.gen_range(0..=5);
            let y = bin_string(&mut rng, ny);
            let k = rng.gen_range(1..=3u32);
            let g = qgr_short(&x, &y, k, basis());
            let dp = edit_distance_dp(&x, &y);
            assert_eq!(g.is_bottom(), dp > k as usize);
            if let Some((xm, ym)) = g.masked_sides() {
                let (ox, oy) = oracle_masked(&x, &y, k as usize, true);
                assert_eq!(xm, ox, "x={x:?} y={y:?} k={k}");
                assert_eq!(ym, oy);
            }
        }
    }

    #[test]
    fn convert_round_trips() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(311);
        for _ in 0..60 {
            let nx = rng.gen_range(0..=16);
            let x = bin_string(&mut rng, nx);
            let ne = rng.gen_range(0..=2);
            let y = plant_edits(&mut rng, &x, ne);
            let k = rng.gen_range(1..=3u32);
            let q = qgr_short(&x, &y, k, basis());
            let g = quasi_to_greedy(&q);
            assert_eq!(g.threshold, k + 1);
            let back = greedy_to_quasi(&g);
            assert_eq!(back.threshold, k);
            match (&q.payload, &back.payload) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    assert_eq!(a.side_syms(Side::X), b.side_syms(Side::X));
                    assert_eq!(a.side_syms(Side::Y), b.side_syms(Side::Y));
                    assert_eq!(a.seg_pairs(), b.seg_pairs());
                }
                _ => panic!("bottom-ness changed over conversion"),
            }
            // Direct construction with sentinels agrees with convert.
            if !q.is_bottom() {
                let xs = [vec![Sym::S1], x.clone()].concat();
                let ys = [vec![Sym::S2], y.clone()].concat();
                let direct = gr_short(&xs, &ys, k + 1, basis());
                let g = quasi_to_greedy(&q);
                assert_eq!(
                    g.payload.as_ref().unwrap().side_syms(Side::X),
                    direct.payload.as_ref().unwrap().side_syms(Side::X)
                );
                assert_eq!(
                    g.payload.as_ref().unwrap().side_syms(Side::Y),
                    direct.payload.as_ref().unwrap().side_syms(Side::Y)
                );
            }
        }
    }

    #[test]
    fn lower_threshold_matches_direct_construction() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(313);
        for _ in 0..60 {
            let nx = rng.gen_range(0..=12);
            let x = bin_string(&mut rng, nx);
            let ne = rng.gen_range(0..=3);
            let y = plant_edits(&mut rng, &x, ne);
            let k = rng.gen_range(2..=4u32);
            let kp = rng.gen_range(1..=k);
            let q = qgr_short(&x, &y, k, basis());
            let lowered = lower_threshold(&q, kp);
            let direct = qgr_short(&x, &y, kp, basis());
            assert_eq!(lowered.is_bottom(), direct.is_bottom());
            if let (Some(a), Some(b)) = (&lowered.payload, &direct.payload) {
                assert_eq!(a.side_syms(Side::X), b.side_syms(Side::X));
                assert_eq!(a.side_syms(Side::Y), b.side_syms(Side::Y));
            }
        }
    }

    #[test]
    fn concat_matches_whole_construction() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(317);
        for _ in 0..50 {
            let k = rng.gen_range(1..=3u32);
            let np = rng.gen_range(0..=12);
            let xp = bin_string(&mut rng, np);
            let ns = rng.gen_range(0..=12);
            let xs = bin_string(&mut rng, ns);
            let ep = rng.gen_range(0..=1);
            let yp = plant_edits(&mut rng, &xp, ep);
            let es = rng.gen_range(0..=1);
            let ys = plant_edits(&mut rng, &xs, es);
            let skew_s = (xs.len() as i64 - ys.len() as i64).unsigned_abs() as u32;
            let skew_p = (xp.len() as i64 - yp.len() as i64).unsigned_abs() as u32;
            let mut qp = qgr_short(&xp, &yp, k + skew_s, basis());
            let mut qs = qgr_short(&xs, &ys, k + skew_p, basis());
            let joint = qgr_concat(&mut qp, &mut qs, k);
            let x = [xp, xs].concat();
            let y = [yp, ys].concat();
            let direct = qgr_short(&x, &y, k, basis());
            assert_eq!(joint.is_bottom(), direct.is_bottom(), "x={x:?} y={y:?} k={k}");
            if let (Some(a), Some(b)) = (&joint.payload, &direct.payload) {
                assert_eq!(a.side_syms(Side::X), b.side_syms(Side::X), "x={x:?} y={y:?} k={k}");
                assert_eq!(a.side_syms(Side::Y), b.side_syms(Side::Y));
            }
        }
    }

    #[test]
    fn concat_is_split_point_independent() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(331);
        for _ in 0..25 {
            let k = 2u32;
            let x = bin_string(&mut rng, 16);
            let y = plant_edits(&mut rng, &x, 2);
            if y.len() != x.len() {
                continue;
            }
            let results: Vec<_> = [4usize, 8, 12]
                .iter()
                .map(|&cut| {
                    let mut qp = qgr_short(&x[..cut], &y[..cut], k, basis());
                    let mut qs = qgr_short(&x[cut..], &y[cut..], k, basis());
                    let j = qgr_concat(&mut qp, &mut qs, k);
                    (j.is_bottom(), j.masked_sides())
                })
                .collect();
            for w in results.windows(2) {
                assert_eq!(w[0], w[1]);
            }
        }
    }

    #[test]
    fn stream_builder_matches_direct() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(337);
        for _ in 0..20 {
            let k = rng.gen_range(1..=3u32);
            let n = rng.gen_range(1..=96usize);
            let x = bin_string(&mut rng, n);
            let mut y = x.clone();
            for _ in 0..rng.gen_range(0..=k) {
                let i = rng.gen_range(0..y.len());
                y[i] = Sym::chr(rng.gen_range(0..2));
            }
            let mut b = QgrStreamBuilder::new(&x[..], k, (k * k) as usize, basis());
            for (t, &c) in y.iter().enumerate() {
                if t + 1 < n {
                    b.push(c);
                }
            }
            // Snapshot lag stays within one block.
            assert!(b.pushed_len() - b.aligned_len() < (k * k).max(1) as u64);
            let snap = b.snapshot_now();
            let m = b.pushed_len() as usize;
            let direct = qgr_short(&x[..m], &y[..m], k, basis());
            assert_eq!(snap.is_bottom(), direct.is_bottom());
            assert_eq!(snap.masked_sides(), direct.masked_sides());
        }
    }

    #[test]
    fn products_recover_capped_distance() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(347);
        for _ in 0..60 {
            let k = rng.gen_range(1..=3u32);
            let ny = rng.gen_range(0..=16);
            let y = bin_string(&mut rng, ny);
            let ex = rng.gen_range(0..=k as usize);
            let x = plant_edits(&mut rng, &y, ex);
            let ez = rng.gen_range(0..=k as usize + 1);
            let z = plant_edits(&mut rng, &y, ez);
            let ed_xy = edit_distance_dp(&x, &y) as u32;
            let d = ed_xy + 2 * k;
            let mut gx = gr_short(&x, &y, d, basis());
            let mut gz = gr_short(&y, &z, d, basis());
            let got = product_distance(&mut gx, &mut gz, k);
            let want = (edit_distance_dp(&x, &z) as u64).min(k as u64 + 1);
            assert_eq!(got, want, "x={x:?} y={y:?} z={z:?} k={k}");
            // Quasi route through the same middle string.
            let qx = qgr_short(&x, &y, d + 1, basis());
            let qz = qgr_short(&y, &z, d + 1, basis());
            let got_q = product_distance_quasi(&qx, &qz, k);
            assert_eq!(got_q, want, "quasi x={x:?} y={y:?} z={z:?} k={k}");
        }
    }

    #[test]
    fn product_identity_cases() {
        let x = str_syms("abcabc");
        let k = 2u32;
        let mut g1 = gr_short(&x, &x, 2 * k, basis());
        let mut g2 = gr_short(&x, &x, 2 * k, basis());
        assert_eq!(product_distance(&mut g1, &mut g2, k), 0);
        let mut b = GrEncoding::bottom(Flavor::Greedy, 2 * k);
        let mut g3 = gr_short(&x, &x, 2 * k, basis());
        assert_eq!(product_distance(&mut b, &mut g3, k), k as u64 + 1);
    }

    #[test]
    fn masked_sizes_stay_small_on_planted_edits() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(353);
        for k in 1..=3u32 {
            for _ in 0..10 {
                let x = bin_string(&mut rng, 64);
                let y = plant_edits(&mut rng, &x, k as usize);
                let g = gr_short(&x, &y, k, basis());
                if let Some(p) = &g.payload {
                    let xm = p.side_syms(Side::X);
                    let zx = crate::lz::lz_size(&xm);
                    assert!(
                        zx <= 8 * (k as usize) * (k as usize) + 16,
                        "LZ size {zx} too large for k={k}"
                    );
                    assert!(p.rs(Side::X).segment_count() <= 4 * k as usize + 4);
                }
            }
        }
    }
}

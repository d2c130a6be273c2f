//! Pattern matching with `k` edits, semi-streaming and fully streaming.
//!
//! The pattern is preprocessed into a ladder of prefixes; level `i`
//! receives the `k`-edit occurrences of the previous prefix and decides
//! which of them extend. Short steps run a per-character dynamic-program
//! transition; long steps keep the active occurrences of the previous
//! prefix — as chains of an arithmetic progression when that prefix is
//! periodic — and answer extension queries with banded dynamic
//! programming (semi-streaming) or with quasi-greedy encodings assembled
//! from cached period powers, per-chain builders, and sketch decodes
//! (fully streaming).

use crate::fprint::{FpBasis, Fingerprint};
use crate::greedy::{
    lower_threshold, product_distance_quasi, qgr_concat, qgr_short, Flavor, GrEncoding,
    PeriodicRef, QgrStreamBuilder, RefString,
};
use crate::lz::{period_info, periodic_at, periodic_prefix, rotate};
use crate::masked::MaskedPair;
use crate::oracle::edit_distance_capped;
use crate::sketch::{skq_build, skq_decode, AmplifiedSketch, AmplifiedSketchBuilder, SkqOutcome};
use crate::sym::Sym;
use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

/// A reported occurrence: right endpoint (1-based) and the smallest
/// distance class.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct OccurrenceReport {
    pub r: u64,
    pub class: u32,
}

/// Gaps up to this length run as unit-step dynamic-program levels.
fn unit_cutoff(k: u32) -> u64 {
    (8 * k as u64).max(16)
}

// ---------------------------------------------------------------------
// Periodicity detection
// ---------------------------------------------------------------------

/// The `k`-period of `x` if one exists: a primitive `Q` with
/// `|Q| <= |x| / 128k` and `ed(x, prefix of Q^∞) <= 2k`. A qualifying
/// period occurs verbatim inside `x`, so substrings are the candidate
/// set; the canonical representative is the lexicographically smallest
/// shortest qualifier.
pub fn detect_k_periodic(x: &[Sym], k: u32) -> Option<Vec<Sym>> {
    assert!(!x.is_empty() && k >= 1);
    let qmax = x.len() / (128 * k as usize);
    let mut candidates: Vec<Vec<Sym>> = Vec::new();
    for q in 1..=qmax {
        for i in 0..=(x.len() - q) {
            let cand = x[i..i + q].to_vec();
            if period_info(&cand).is_primitive && !candidates.contains(&cand) {
                candidates.push(cand);
            }
        }
    }
    candidates.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    for cand in candidates {
        if periodic_distance(x, &cand, 2 * k as usize) <= 2 * k as usize {
            return Some(cand);
        }
    }
    None
}

/// `min(cap + 1, min over L of ed(x, Q^∞[1..L]))`.
fn periodic_distance(x: &[Sym], q: &[Sym], cap: usize) -> usize {
    let mut best = cap + 1;
    let lo = x.len().saturating_sub(cap);
    for l in lo..=x.len() + cap {
        let pref = periodic_prefix(q, l);
        best = best.min(edit_distance_capped(x, &pref, cap));
        if best == 0 {
            break;
        }
    }
    best
}

// ---------------------------------------------------------------------
// Online banded dynamic program (the per-candidate worker)
// ---------------------------------------------------------------------

/// Streams a text chunk against a fixed reference and reports, after each
/// character, `min(k+1, ed(reference, chunk so far))`, in `O(k)` state.
#[derive(Clone, Debug)]
pub struct BandedWorker {
    k: u32,
    ref_len: u64,
    pushed: u64,
    /// `band[d + k] = ed(reference[1..j+d], chunk[1..j])` capped, where
    /// `j` is the current chunk length.
    band: Vec<u32>,
}

impl BandedWorker {
    pub fn new(ref_len: u64, k: u32) -> BandedWorker {
        let cap = k + 1;
        let mut band = vec![cap; 2 * k as usize + 1];
        for d in 0..=k as u64 {
            if d <= ref_len {
                band[(d + k as u64) as usize] = d as u32;
            }
        }
        BandedWorker { k, ref_len, pushed: 0, band }
    }

    /// Feeds the next chunk character; `reference(i)` resolves the fixed
    /// string (1-based).
    pub fn push<F: Fn(u64) -> Sym>(&mut self, c: Sym, reference: F) -> u32 {
        let k = self.k as i64;
        let cap = self.k + 1;
        let j = self.pushed as i64 + 1;
        let old = self.band.clone();
        for d in -k..=k {
            let i = j + d; // reference prefix length at this diagonal
            let w = (d + k) as usize;
            if i < 0 || i as u64 > self.ref_len {
                self.band[w] = cap;
                continue;
            }
            let mut best = cap;
            if i == 0 {
                best = if j <= cap as i64 { j as u32 } else { cap };
            } else {
                // Diagonal: match or substitution.
                let same = reference(i as u64) == c;
                best = best.min(old[w].saturating_add(u32::from(!same)));
                // Deleting a reference character moves from diagonal d-1
                // in the *new* column.
                if w >= 1 {
                    best = best.min(self.band[w - 1].saturating_add(1));
                }
            }
            // Deleting the chunk character moves from diagonal d+1 in the
            // old column.
            if w + 1 < old.len() {
                best = best.min(old[w + 1].saturating_add(1));
            }
            self.band[w] = best.min(cap);
        }
        self.pushed = j as u64;
        self.current()
    }

    /// `min(k+1, ed(reference, chunk))` for the chunk consumed so far.
    pub fn current(&self) -> u32 {
        let d = self.ref_len as i64 - self.pushed as i64;
        if d.unsigned_abs() > self.k as u64 {
            return self.k + 1;
        }
        self.band[(d + self.k as i64) as usize]
    }

    pub fn pushed(&self) -> u64 {
        self.pushed
    }
}

// ---------------------------------------------------------------------
// Exact rotation matchers
// ---------------------------------------------------------------------

/// Deterministic streaming exact matcher (prefix-function automaton).
#[derive(Clone, Debug)]
pub struct KmpMatcher {
    needle: Vec<Sym>,
    fail: Vec<usize>,
    state: usize,
}

impl KmpMatcher {
    pub fn new(needle: Vec<Sym>) -> KmpMatcher {
        assert!(!needle.is_empty());
        let mut fail = vec![0usize; needle.len()];
        for i in 1..needle.len() {
            let mut b = fail[i - 1];
            while b > 0 && needle[i] != needle[b] {
                b = fail[b - 1];
            }
            if needle[i] == needle[b] {
                b += 1;
            }
            fail[i] = b;
        }
        KmpMatcher { needle, fail, state: 0 }
    }

    /// Feeds one character; true when an occurrence ends here.
    pub fn push(&mut self, c: Sym) -> bool {
        while self.state > 0 && self.needle[self.state] != c {
            self.state = self.fail[self.state - 1];
        }
        if self.needle[self.state] == c {
            self.state += 1;
        }
        if self.state == self.needle.len() {
            self.state = self.fail[self.state - 1];
            true
        } else {
            false
        }
    }
}

/// Randomized streaming exact matcher: candidates are verified against
/// stored needle prefix fingerprints at doubling lengths; no text window
/// is kept.
#[derive(Clone, Debug)]
pub struct FingerprintMatcher {
    basis: FpBasis,
    first: Sym,
    len: u64,
    /// `(length, needle prefix fingerprint)` checkpoints.
    checks: Vec<(u64, Fingerprint)>,
    text_fp: Fingerprint,
    r: u64,
    /// `(start, text prefix fp before start, next checkpoint)`.
    cands: VecDeque<(u64, Fingerprint, usize)>,
}

impl FingerprintMatcher {
    pub fn new(needle: &[Sym], basis: FpBasis) -> FingerprintMatcher {
        assert!(!needle.is_empty());
        let mut checks = Vec::new();
        let mut l = 2u64;
        while l < needle.len() as u64 {
            checks.push((l, basis.of_syms(&needle[..l as usize])));
            l *= 2;
        }
        if needle.len() > 1 {
            checks.push((needle.len() as u64, basis.of_syms(needle)));
        }
        FingerprintMatcher {
            basis,
            first: needle[0],
            len: needle.len() as u64,
            checks,
            text_fp: basis.empty(),
            r: 0,
            cands: VecDeque::new(),
        }
    }

    /// Feeds one text character; true when an occurrence ends here.
    pub fn push(&mut self, c: Sym) -> bool {
        self.r += 1;
        let before = self.text_fp;
        self.text_fp = self.text_fp.push(self.basis, c);
        let mut hit = false;
        let mut keep = VecDeque::new();
        while let Some((start, fp0, ci)) = self.cands.pop_front() {
            let (clen, cfp) = self.checks[ci];
            if self.r < start + clen - 1 {
                keep.push_back((start, fp0, ci));
                continue;
            }
            debug_assert_eq!(self.r, start + clen - 1);
            if fp0.concat(cfp) != self.text_fp {
                continue; // candidate dies
            }
            if clen == self.len {
                hit = true;
            } else {
                keep.push_back((start, fp0, ci + 1));
            }
        }
        self.cands = keep;
        if c == self.first {
            if self.len == 1 {
                hit = true;
            } else if self.cands.len() < 192 {
                self.cands.push_back((self.r, before, 0));
            }
        }
        hit
    }
}

// ---------------------------------------------------------------------
// Ladder construction
// ---------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LadderMode {
    Semi,
    Streaming,
}

#[derive(Clone, Debug)]
struct RotData {
    /// The rotation `D` of the period.
    d: Vec<Sym>,
    /// `qGR_{30k}(π_i, D^∞[1..Δ_i])`.
    gp: GrEncoding,
    /// `qGR_{32k}(D, D)` (semi mode, prebuilt).
    base_dd: Option<GrEncoding>,
    /// Streaming mode: `sk^q_{32k}(D)` and `sk^q_{32k}(D[1..Δ_i mod |D|])`.
    skq_d: Option<AmplifiedSketch>,
    #[allow(dead_code)]
    skq_dmod: Option<AmplifiedSketch>,
}

#[derive(Clone, Debug)]
enum Plan {
    /// Level 1 (single character).
    First,
    /// Unit step: per-character transition from the previous level.
    Dp,
    /// Long step, previous prefix not periodic: per-occurrence workers.
    Sparse,
    /// Long step, both prefixes periodic with the shared period.
    Chained { q: u64, rots: Vec<RotData> },
}

#[derive(Clone, Debug)]
struct LevelData {
    len: u64,
    dl: u64,
    last_char: Sym,
    plan: Plan,
    /// Streaming: `sk^q_k(π_i)` for singleton-worker decodes.
    skq_pi: Option<AmplifiedSketch>,
    /// `π_i` as a range of `P` (semi mode resolves it; streaming never
    /// reads it).
    pi_range: (u64, u64),
}

/// The preprocessed pattern: ladder levels with per-mode precomputes. A
/// streaming matcher works from this structure alone.
#[derive(Clone, Debug)]
pub struct PrefixLadder {
    pub m: u64,
    pub k: u32,
    pub mode: LadderMode,
    pub seed: [u8; 32],
    pub delta_log2: u32,
    levels: Vec<LevelData>,
    basis: FpBasis,
}

impl PrefixLadder {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_lengths(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.len).collect()
    }

    /// Longest pattern fragment stored anywhere in the ladder.
    pub fn max_stored_fragment(&self) -> u64 {
        let mut best = 1u64;
        for l in &self.levels {
            if let Plan::Chained { rots, .. } = &l.plan {
                for r in rots {
                    best = best.max(r.d.len() as u64);
                }
            }
        }
        best
    }
}

/// Builds the prefix ladder. Preprocessing has full access to `P` and is
/// not accounted against the matcher's space.
pub fn build_prefix_ladder(
    p: &[Sym],
    k: u32,
    seed: [u8; 32],
    delta_log2: u32,
    mode: LadderMode,
) -> PrefixLadder {
    let m = p.len() as u64;
    assert!(k >= 1 && (k as u64) <= m, "threshold must satisfy 1 <= k <= m");
    let basis = FpBasis::from_seed(&seed);
    let cutoff = unit_cutoff(k).min(m);
    let mut lens: Vec<u64> = (1..=cutoff).collect();
    let mut l = cutoff.next_power_of_two();
    if l <= cutoff {
        l *= 2;
    }
    while l < m {
        lens.push(l);
        l *= 2;
    }
    if *lens.last().unwrap() != m {
        lens.push(m);
    }
    let mut cache: BTreeMap<u64, Option<Vec<Sym>>> = BTreeMap::new();
    let mut periodic = |len: u64, cache: &mut BTreeMap<u64, Option<Vec<Sym>>>| {
        cache.entry(len).or_insert_with(|| detect_k_periodic(&p[..len as usize], k)).clone()
    };
    // Boundary pair insertion where periodicity is lost along a long step.
    let mut with_bounds: Vec<u64> = Vec::new();
    for w in 0..lens.len() {
        with_bounds.push(lens[w]);
        if w + 1 < lens.len() && lens[w + 1] - lens[w] > 1 {
            let qa = periodic(lens[w], &mut cache);
            let qb = periodic(lens[w + 1], &mut cache);
            if qa.is_some() && qb.is_none() {
                let mut best = lens[w];
                for cand in lens[w] + 1..lens[w + 1] {
                    if periodic(cand, &mut cache).is_some() {
                        best = cand;
                    }
                }
                if best > lens[w] {
                    with_bounds.push(best);
                }
                if best + 1 < lens[w + 1] {
                    with_bounds.push(best + 1);
                }
            }
        }
    }
    with_bounds.sort_unstable();
    with_bounds.dedup();

    let mut levels: Vec<LevelData> = Vec::new();
    for (i, &len) in with_bounds.iter().enumerate() {
        let dl = if i == 0 { len } else { len - with_bounds[i - 1] };
        let last_char = p[(len - 1) as usize];
        let pi_lo = len - dl;
        let plan = if i == 0 {
            Plan::First
        } else if dl == 1 {
            Plan::Dp
        } else {
            let prev_len = with_bounds[i - 1];
            match (periodic(prev_len, &mut cache), periodic(len, &mut cache)) {
                (Some(qp), Some(qc)) => {
                    debug_assert_eq!(qp, qc, "period changed along the ladder");
                    let q = qp.len() as u64;
                    let delta_i = dl + k as u64;
                    let pi = &p[pi_lo as usize..len as usize];
                    let shifts: Vec<u64> = if q <= 20 * k as u64 + 1 {
                        (0..q).collect()
                    } else {
                        let lo = prev_len as i64 - 10 * k as i64;
                        let mut v: Vec<u64> = (0..=(20 * k as i64))
                            .map(|t| (lo + t).rem_euclid(q as i64) as u64)
                            .collect();
                        v.sort_unstable();
                        v.dedup();
                        v
                    };
                    let mut rots = Vec::new();
                    for (ri, &sft) in shifts.iter().enumerate() {
                        let d = rotate(&qp, sft as i64);
                        let mu = periodic_prefix(&d, delta_i as usize);
                        let gp = qgr_short(pi, &mu, 30 * k, basis);
                        let (base_dd, skq_d, skq_dmod) = match mode {
                            LadderMode::Semi => {
                                (Some(qgr_short(&d, &d, 32 * k, basis)), None, None)
                            }
                            LadderMode::Streaming => {
                                let skd = skq_build(q, 32 * k, seed, delta_log2, &d);
                                let dmod = &mu[..(delta_i % q) as usize];
                                let skm = skq_build(q, 32 * k, seed, delta_log2, dmod);
                                (None, Some(skd), Some(skm))
                            }
                        };
                        rots.push(RotData { d, gp, base_dd, skq_d, skq_dmod });
                    }
                    Plan::Chained { q, rots }
                }
                _ => Plan::Sparse,
            }
        };
        let skq_pi = match (&mode, &plan) {
            (LadderMode::Streaming, Plan::Sparse)
            | (LadderMode::Streaming, Plan::Chained { .. }) => {
                let delta_i = dl + k as u64;
                Some(skq_build(delta_i, k, seed, delta_log2, &p[pi_lo as usize..len as usize]))
            }
            _ => None,
        };
        levels.push(LevelData { len, dl, last_char, plan, skq_pi, pi_range: (pi_lo, len) });
    }
    PrefixLadder { m, k, mode, seed, delta_log2, levels, basis }
}

// ---------------------------------------------------------------------
// Runtime state
// ---------------------------------------------------------------------

#[derive(Clone)]
enum ChunkWorker {
    Semi(BandedWorker),
    Streaming { builder: AmplifiedSketchBuilder, pushed: u64 },
}

#[derive(Clone)]
struct Chain {
    lp: u64,
    size: u64,
    class: u32,
    rot: Option<usize>,
    first: u64,
    /// Worker streaming `T(first..]` against `π_i` (used while size 1).
    single: Option<ChunkWorker>,
    /// Encoding builder from the rightmost member (semi).
    enc_sem: Option<QgrStreamBuilder<PeriodicRef>>,
    /// Block accumulator from the rightmost member (streaming).
    enc_str: Option<BlockAccum>,
    /// Text prefix fingerprint at the rightmost member.
    right_fp: Fingerprint,
    degraded: bool,
}

impl Chain {
    fn rightmost(&self, q: u64) -> u64 {
        self.lp + (self.size - 1) * q
    }
}

#[derive(Clone)]
struct BlockAccum {
    acc: GrEncoding,
    done: u64,
    partial: Vec<Sym>,
}

#[derive(Default)]
struct LevelRt {
    cur_class: u32,
    prev_class: u32,
    ring: VecDeque<(u64, u32)>,
    chains: Vec<Chain>,
    kmp: Vec<KmpMatcher>,
    fpm: Vec<FingerprintMatcher>,
    rot_hits: Vec<bool>,
    /// `(rot, exponent)` -> `qGR_{32k}(D^{2^e}, D^{2^e})`.
    power_cache: BTreeMap<(usize, u32), GrEncoding>,
    /// `(rot, j)` -> assembled power for exact exponents seen.
    power_exact: BTreeMap<(usize, u64), GrEncoding>,
    /// Case-3 products keyed by rotation, chunk fingerprint, and tail.
    prod_cache: BTreeMap<(usize, u64, u64, u64), u32>,
    /// Block decode memo (streaming).
    block_cache: BTreeMap<(usize, Vec<Sym>), GrEncoding>,
    decode_failures: u64,
}

/// Structural space probe of a matcher's live state.
#[derive(Clone, Copy, Debug, Default)]
pub struct StateProbe {
    /// Longest contiguous pattern fragment held (streaming mode: stored
    /// rotations and single characters only).
    pub max_pattern_fragment: u64,
    /// Longest live text window (verbatim worker chunks, partial blocks,
    /// context windows inside sketch builders).
    pub max_text_window: u64,
    pub live_chains: u64,
}

/// Streaming-mode failure counters.
#[derive(Clone, Copy, Debug, Default)]
pub struct Diagnostics {
    pub decode_failures: u64,
}

pub struct Matcher {
    ladder: PrefixLadder,
    /// Present in semi-streaming mode only.
    pattern: Option<Vec<Sym>>,
    r: u64,
    text_fp: Fingerprint,
    rt: Vec<LevelRt>,
    ended: bool,
}

/// Builds a semi-streaming matcher (deterministic; retains read-only
/// access to the pattern).
pub fn semi_streaming_matcher(p: &[Sym], k: u32, seed: [u8; 32]) -> Matcher {
    let ladder = build_prefix_ladder(p, k, seed, 4, LadderMode::Semi);
    Matcher::new(ladder, Some(p.to_vec()))
}

/// Builds a fully streaming matcher from a preprocessed ladder; the
/// matcher holds no reference to the raw pattern or past text.
pub fn streaming_matcher(ladder: PrefixLadder) -> Matcher {
    assert_eq!(ladder.mode, LadderMode::Streaming);
    Matcher::new(ladder, None)
}

impl Matcher {
    fn new(ladder: PrefixLadder, pattern: Option<Vec<Sym>>) -> Matcher {
        let basis = ladder.basis;
        let k = ladder.k;
        let mut rt = Vec::with_capacity(ladder.levels.len());
        for lvl in &ladder.levels {
            // Against the empty text the distance is the prefix length.
            let init = (lvl.len.min(k as u64 + 1)) as u32;
            let mut state = LevelRt { cur_class: init, prev_class: init, ..Default::default() };
            if let Plan::Chained { rots, .. } = &lvl.plan {
                for rd in rots {
                    match ladder.mode {
                        LadderMode::Semi => state.kmp.push(KmpMatcher::new(rd.d.clone())),
                        LadderMode::Streaming => {
                            state.fpm.push(FingerprintMatcher::new(&rd.d, basis))
                        }
                    }
                }
                state.rot_hits = vec![false; rots.len()];
            }
            rt.push(state);
        }
        Matcher { ladder, pattern, r: 0, text_fp: basis.empty(), rt, ended: false }
    }

    pub fn k(&self) -> u32 {
        self.ladder.k
    }

    pub fn position(&self) -> u64 {
        self.r
    }

    pub fn diagnostics(&self) -> Diagnostics {
        Diagnostics { decode_failures: self.rt.iter().map(|l| l.decode_failures).sum() }
    }

    /// Marks end-of-text; further pushes are rejected.
    pub fn end(&mut self) {
        self.ended = true;
    }

    pub fn probe(&self) -> StateProbe {
        let mut p = StateProbe {
            max_pattern_fragment: if self.pattern.is_some() {
                self.ladder.m
            } else {
                self.ladder.max_stored_fragment().max(1)
            },
            ..Default::default()
        };
        for l in &self.rt {
            p.live_chains += l.chains.len() as u64;
            for c in &l.chains {
                if let Some(b) = &c.enc_str {
                    p.max_text_window = p.max_text_window.max(b.partial.len() as u64);
                }
                if let Some(ChunkWorker::Streaming { builder, .. }) = &c.single {
                    p.max_text_window = p.max_text_window.max(builder.peak_state() as u64);
                }
            }
        }
        p
    }

    /// Feeds one text character and returns the full-pattern occurrences
    /// ending here.
    pub fn push(&mut self, c: Sym) -> Vec<OccurrenceReport> {
        assert!(!self.ended, "push after end of text");
        self.r += 1;
        let r = self.r;
        let k = self.ladder.k;
        self.text_fp = self.text_fp.push(self.ladder.basis, c);
        let text_fp = self.text_fp;
        let mut reports = Vec::new();
        let mut levels = core::mem::take(&mut self.rt);
        for i in 0..self.ladder.levels.len() {
            let (pred_cur, pred_prev) = if i == 0 {
                (0, 0)
            } else {
                (levels[i - 1].cur_class, levels[i - 1].prev_class)
            };
            let pred_occurrence = (i > 0 && pred_cur <= k).then_some((r, pred_cur));
            let data = &self.ladder.levels[i];
            let cap = k + 1;
            let class = match &data.plan {
                Plan::First => u32::from(c != data.last_char),
                Plan::Dp => {
                    let own_prev = levels[i].cur_class;
                    pred_cur
                        .saturating_add(1)
                        .min(pred_prev.saturating_add(u32::from(data.last_char != c)))
                        .min(own_prev.saturating_add(1))
                        .min(cap)
                }
                _ => self.long_level(i, &mut levels, c, r, text_fp, pred_occurrence),
            };
            let lrt = &mut levels[i];
            lrt.prev_class = lrt.cur_class;
            lrt.cur_class = class;
            if class <= k {
                lrt.ring.push_back((r, class));
            }
            let keep = if i + 1 < self.ladder.levels.len() {
                self.ladder.levels[i + 1].dl + k as u64 + 2
            } else {
                2
            };
            while let Some(&(rr, _)) = lrt.ring.front() {
                if rr + keep < r {
                    lrt.ring.pop_front();
                } else {
                    break;
                }
            }
            if i + 1 == self.ladder.levels.len() && class <= k {
                reports.push(OccurrenceReport { r, class });
            }
        }
        self.rt = levels;
        reports
    }

    /// Long-step level logic: feed workers, flush blocks, test candidates,
    /// then maintain the chains.
    fn long_level(
        &self,
        i: usize,
        levels: &mut [LevelRt],
        c: Sym,
        r: u64,
        text_fp: Fingerprint,
        pred_occurrence: Option<(u64, u32)>,
    ) -> u32 {
        let data = &self.ladder.levels[i];
        let k = self.ladder.k;
        let cap = k + 1;
        let dl = data.dl;
        let delta_i = dl + k as u64;
        let (q, chained) = match &data.plan {
            Plan::Chained { q, .. } => (*q, true),
            _ => (1, false),
        };

        // 1. Feed matchers, workers, and builders.
        {
            let lrt = &mut levels[i];
            for (ri, m) in lrt.kmp.iter_mut().enumerate() {
                lrt.rot_hits[ri] = m.push(c);
            }
            for (ri, m) in lrt.fpm.iter_mut().enumerate() {
                lrt.rot_hits[ri] = m.push(c);
            }
            for chain in lrt.chains.iter_mut() {
                if r <= chain.first + delta_i + k as u64 {
                    match &mut chain.single {
                        Some(ChunkWorker::Semi(b)) => {
                            let range = data.pi_range;
                            let p = self.pattern.as_ref().expect("semi worker needs the pattern");
                            b.push(c, |idx| p[(range.0 + idx - 1) as usize]);
                        }
                        Some(ChunkWorker::Streaming { builder, pushed }) => {
                            if *pushed < delta_i {
                                builder.push(c);
                                *pushed += 1;
                            }
                        }
                        None => {}
                    }
                }
                if let Some(b) = &mut chain.enc_sem {
                    if b.pushed_len() + 1 < b.reference_len() {
                        b.push(c);
                    }
                }
                if let Some(b) = &mut chain.enc_str {
                    if b.done * q + (b.partial.len() as u64) < delta_i + 2 * k as u64 {
                        b.partial.push(c);
                    }
                }
            }
        }

        // 2. Flush full blocks (streaming chained levels).
        if chained && self.ladder.mode == LadderMode::Streaming {
            self.flush_blocks(i, levels, q);
        }

        // 3. Candidate tests: d = class(r') + ed(π_i, T(r'..r]). The
        // split of an optimal alignment lands within k of the length
        // skew, so r' ranges over [r - dl - k .. r - dl + k].
        let mut best = cap;
        {
            let lo = r.saturating_sub(dl + k as u64).max(1);
            let hi = (r + k as u64).saturating_sub(dl).min(r);
            let mut tests: Vec<(u64, u32, usize)> = Vec::new();
            for (ci, chain) in levels[i].chains.iter().enumerate() {
                for t in 0..chain.size {
                    let m = chain.lp + t * q;
                    if m >= lo && m <= hi {
                        tests.push((m, chain.class, ci));
                    }
                }
            }
            for (rp, cls, ci) in tests {
                if cls >= cap || (r - rp).abs_diff(dl) > k as u64 {
                    continue;
                }
                let d2 = self.extension_distance(i, levels, ci, rp, r, text_fp);
                best = best.min(cls.saturating_add(d2).min(cap));
            }
        }

        // 4. Chain maintenance: expiry, then the new occurrence.
        {
            let expire_before = (r + 1).saturating_sub(data.len + k as u64);
            let lrt = &mut levels[i];
            for chain in lrt.chains.iter_mut() {
                while chain.size > 0 && chain.lp < expire_before {
                    chain.lp += q;
                    chain.size -= 1;
                }
            }
            lrt.chains.retain(|ch| ch.size > 0);
        }
        if let Some((rp, cls)) = pred_occurrence {
            debug_assert_eq!(rp, r);
            let mut appended = false;
            if chained && r > q {
                let hits: Vec<usize> = levels[i]
                    .rot_hits
                    .iter()
                    .enumerate()
                    .filter(|(_, h)| **h)
                    .map(|(ri, _)| ri)
                    .collect();
                let mut append_at: Option<usize> = None;
                for (ci, chain) in levels[i].chains.iter().enumerate() {
                    if chain.rightmost(q) + q == r && chain.class == cls {
                        let rot_ok = match chain.rot {
                            Some(rot) => hits.contains(&rot),
                            None => !hits.is_empty(),
                        };
                        if rot_ok {
                            append_at = Some(ci);
                            break;
                        }
                    }
                }
                if let Some(ci) = append_at {
                    let chain = &mut levels[i].chains[ci];
                    if chain.rot.is_none() {
                        chain.rot = Some(hits[0]);
                    }
                    chain.size += 1;
                    chain.single = None;
                    chain.right_fp = text_fp;
                    let rot = chain.rot.unwrap();
                    self.install_enc_builder(i, &mut levels[i].chains[ci], rot);
                    appended = true;
                }
            }
            if !appended {
                let single = self.start_single_worker(i);
                levels[i].chains.push(Chain {
                    lp: r,
                    size: 1,
                    class: cls,
                    rot: None,
                    first: r,
                    single,
                    enc_sem: None,
                    enc_str: None,
                    right_fp: text_fp,
                    degraded: false,
                });
            }
        }
        best
    }

    fn start_single_worker(&self, i: usize) -> Option<ChunkWorker> {
        let data = &self.ladder.levels[i];
        match self.ladder.mode {
            LadderMode::Semi => Some(ChunkWorker::Semi(BandedWorker::new(data.dl, self.ladder.k))),
            LadderMode::Streaming => {
                let sk = data.skq_pi.as_ref()?;
                Some(ChunkWorker::Streaming {
                    builder: AmplifiedSketchBuilder::new(sk.n, sk.k, sk.seed, sk.delta_log2),
                    pushed: 0,
                })
            }
        }
    }

    fn install_enc_builder(&self, i: usize, chain: &mut Chain, rot: usize) {
        let data = &self.ladder.levels[i];
        let k = self.ladder.k;
        let delta_i = data.dl + k as u64;
        let Plan::Chained { rots, .. } = &data.plan else { return };
        match self.ladder.mode {
            LadderMode::Semi => {
                let reference =
                    PeriodicRef { d: rots[rot].d.clone(), len: delta_i + 2 * k as u64 + 4 };
                chain.enc_sem = Some(QgrStreamBuilder::new(
                    reference,
                    32 * k,
                    (k as usize).max(1),
                    self.ladder.basis,
                ));
                chain.enc_str = None;
            }
            LadderMode::Streaming => {
                chain.enc_str = Some(BlockAccum {
                    acc: empty_quasi(32 * k, self.ladder.basis),
                    done: 0,
                    partial: Vec::new(),
                });
                chain.enc_sem = None;
            }
        }
    }

    fn flush_blocks(&self, i: usize, levels: &mut [LevelRt], q: u64) {
        let data = &self.ladder.levels[i];
        let k = self.ladder.k;
        let Plan::Chained { rots, .. } = &data.plan else { return };
        let lrt = &mut levels[i];
        let mut pending: Vec<(usize, Vec<Sym>)> = Vec::new();
        for (ci, chain) in lrt.chains.iter().enumerate() {
            if chain.rot.is_some() {
                if let Some(b) = &chain.enc_str {
                    if b.partial.len() as u64 >= q {
                        pending.push((ci, b.partial[..q as usize].to_vec()));
                    }
                }
            }
        }
        for (ci, block) in pending {
            let rot = lrt.chains[ci].rot.unwrap();
            let cached = lrt.block_cache.get(&(rot, block.clone())).cloned();
            let decoded = match cached {
                Some(e) => e,
                None => {
                    let rd = &rots[rot];
                    let sk = rd.skq_d.as_ref().expect("streaming rotation sketch");
                    let skb = skq_build(sk.n, sk.k, sk.seed, sk.delta_log2, &block);
                    // Accumulators hold (reference, text) sides.
                    let out = match skq_decode(sk, &skb) {
                        SkqOutcome::Decoded(e) => e,
                        SkqOutcome::Failure => GrEncoding::bottom(Flavor::Quasi, 32 * k),
                    };
                    lrt.block_cache.insert((rot, block.clone()), out.clone());
                    if lrt.block_cache.len() > 4096 {
                        lrt.block_cache.clear();
                    }
                    out
                }
            };
            let failed = decoded.is_bottom() && block == rots[rot].d;
            let chain = &mut lrt.chains[ci];
            if failed {
                chain.degraded = true;
                lrt.decode_failures += 1;
            }
            if let Some(b) = &mut chain.enc_str {
                let mut acc = b.acc.clone();
                let mut blk = decoded;
                b.acc = qgr_concat(&mut acc, &mut blk, 32 * k);
                b.partial.drain(..q as usize);
                b.done += 1;
            }
        }
    }

    /// `min(k+1, ed(π_i, T(r'..r]))` for a candidate chain member.
    fn extension_distance(
        &self,
        i: usize,
        levels: &mut [LevelRt],
        ci: usize,
        rp: u64,
        r: u64,
        text_fp: Fingerprint,
    ) -> u32 {
        let data = &self.ladder.levels[i];
        let k = self.ladder.k;
        let cap = k + 1;
        if levels[i].chains[ci].degraded {
            return cap;
        }
        if levels[i].chains[ci].size == 1 {
            return self.singleton_distance(i, levels, ci);
        }
        let Plan::Chained { q, rots } = &data.plan else { return cap };
        let q = *q;
        let delta_i = data.dl + k as u64;
        let s = delta_i - (r - rp);
        // Read phase: everything needed from the chain.
        let (rot, p_c, j, chunk_key, b_enc) = {
            let chain = &levels[i].chains[ci];
            let rot = chain.rot.expect("multi-member chain carries its rotation");
            let p_c = chain.rightmost(q);
            let j = (p_c - rp) / q;
            let win = suffix_fp(chain.right_fp, text_fp, self.ladder.basis);
            let dfp = self.ladder.basis.of_syms(&rots[rot].d);
            let full = dfp.repeat(j).concat(win);
            let key = (rot, full.value().raw(), full.len(), s);
            if let Some(&v) = levels[i].prod_cache.get(&key) {
                return v;
            }
            let b_enc = match self.ladder.mode {
                LadderMode::Semi => chain.enc_sem.as_ref().map(|b| b.snapshot_now()),
                LadderMode::Streaming => chain.enc_str.as_ref().map(|b| {
                    let mut acc = b.acc.clone();
                    if b.partial.is_empty() {
                        acc
                    } else {
                        let lo = b.done * q + 1;
                        let hi = b.done * q + b.partial.len() as u64;
                        let dref: Vec<Sym> =
                            (lo..=hi).map(|t| periodic_at(&rots[rot].d, t)).collect();
                        let mut tail = qgr_short(&dref, &b.partial, 32 * k, self.ladder.basis);
                        qgr_concat(&mut acc, &mut tail, 32 * k)
                    }
                }),
            };
            (rot, p_c, j, key, b_enc)
        };
        let _ = p_c;
        let Some(b_enc) = b_enc else { return cap };
        let mut ab = if j > 0 {
            let mut a = self.power_encoding(i, levels, rot, j);
            let mut b = b_enc;
            qgr_concat(&mut a, &mut b, 32 * k)
        } else {
            b_enc
        };
        // Builders accumulate (reference, text) = (D^∞ prefix, τ); the
        // remaining D^∞ tail extends the reference side.
        let g_t = if s > 0 {
            let mut lowered = lower_threshold(&ab, 30 * k + s as u32);
            let tail: Vec<Sym> =
                ((r - rp + 1)..=delta_i).map(|t| periodic_at(&rots[rot].d, t)).collect();
            let mut ctail = qgr_short(&tail, &[], 30 * k, self.ladder.basis);
            qgr_concat(&mut lowered, &mut ctail, 30 * k)
        } else {
            lower_threshold(&ab, 30 * k)
        };
        let d2 = product_distance_quasi(&rots[rot].gp, &g_t, k) as u32;
        let lrt = &mut levels[i];
        lrt.prod_cache.insert(chunk_key, d2);
        if lrt.prod_cache.len() > 8192 {
            lrt.prod_cache.clear();
        }
        d2
    }

    fn singleton_distance(&self, i: usize, levels: &mut [LevelRt], ci: usize) -> u32 {
        let k = self.ladder.k;
        let cap = k + 1;
        let data = &self.ladder.levels[i];
        let chain = &levels[i].chains[ci];
        match &chain.single {
            Some(ChunkWorker::Semi(b)) => b.current(),
            Some(ChunkWorker::Streaming { builder, .. }) => {
                let Some(skp) = data.skq_pi.as_ref() else { return cap };
                let snap = builder.snapshot();
                match skq_decode(skp, &snap) {
                    SkqOutcome::Decoded(e) => {
                        if e.is_bottom() {
                            cap
                        } else {
                            e.capped_distance() as u32
                        }
                    }
                    SkqOutcome::Failure => cap,
                }
            }
            None => cap,
        }
    }

    /// `qGR_{32k}(D^j, D^j)` assembled from cached powers of two.
    fn power_encoding(&self, i: usize, levels: &mut [LevelRt], rot: usize, j: u64) -> GrEncoding {
        let k = self.ladder.k;
        let data = &self.ladder.levels[i];
        let Plan::Chained { rots, .. } = &data.plan else { unreachable!() };
        if let Some(e) = levels[i].power_exact.get(&(rot, j)).cloned() {
            return e;
        }
        // Base power.
        let base = match levels[i].power_cache.get(&(rot, 0)).cloned() {
            Some(e) => e,
            None => {
                let e = match &rots[rot].base_dd {
                    Some(e) => e.clone(),
                    None => {
                        let sk = rots[rot].skq_d.as_ref().expect("rotation sketch");
                        match skq_decode(sk, sk) {
                            SkqOutcome::Decoded(e) => e,
                            SkqOutcome::Failure => GrEncoding::bottom(Flavor::Quasi, 32 * k),
                        }
                    }
                };
                levels[i].power_cache.insert((rot, 0), e.clone());
                e
            }
        };
        let mut acc: Option<GrEncoding> = None;
        let mut exp = 0u32;
        let mut rem = j;
        let mut cur = base;
        loop {
            if rem & 1 == 1 {
                acc = Some(match acc {
                    None => cur.clone(),
                    Some(mut a) => {
                        let mut c = cur.clone();
                        qgr_concat(&mut a, &mut c, 32 * k)
                    }
                });
            }
            rem >>= 1;
            if rem == 0 {
                break;
            }
            exp += 1;
            cur = match levels[i].power_cache.get(&(rot, exp)).cloned() {
                Some(v) => v,
                None => {
                    let mut a = cur.clone();
                    let mut b = cur;
                    let v = qgr_concat(&mut a, &mut b, 32 * k);
                    levels[i].power_cache.insert((rot, exp), v.clone());
                    v
                }
            };
        }
        let out = acc.unwrap();
        let lrt = &mut levels[i];
        lrt.power_exact.insert((rot, j), out.clone());
        if lrt.power_exact.len() > 1024 {
            lrt.power_exact.clear();
        }
        out
    }
}

fn empty_quasi(threshold: u32, basis: FpBasis) -> GrEncoding {
    GrEncoding {
        flavor: Flavor::Quasi,
        threshold,
        payload: Some(MaskedPair::from_explicit(&[], &[], vec![], basis)),
    }
}

/// `fp(T(a..b])` given `fp(T[1..a])` and `fp(T[1..b])`.
fn suffix_fp(pref: Fingerprint, full: Fingerprint, basis: FpBasis) -> Fingerprint {
    let len = full.len() - pref.len();
    let shift = basis.base().pow(len);
    let val = full.value().sub(pref.value().mul(shift));
    Fingerprint::from_parts(basis, val, len)
}

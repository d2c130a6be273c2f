//! The CGK random walk and embedding.
//!
//! A walk over `S` advances by one hash bit per step while inside the
//! string and emits padding afterwards; two walks under the same spec zip
//! into an edit distance alignment whose cost is quadratic and width
//! linear in `ed(X, Y)` with good probability. Specs below the small-`n`
//! threshold use the deterministic walk `s_t = min(t, |S|+1)` instead.

use crate::align::{zip_walks, Alignment};
use crate::config::SMALL_WALK_N;
use crate::fprint::{seeded_rng, Domain};
use crate::sym::Sym;
use alloc::vec::Vec;
use rand_core::RngCore;

/// Identifies one walk's hash sequence: capacity, seed, and lane (used to
/// derive independent repetitions from one seed).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct WalkSpec {
    pub n: u64,
    pub seed: [u8; 32],
    pub lane: u64,
}

impl WalkSpec {
    pub fn new(n: u64, seed: [u8; 32]) -> WalkSpec {
        WalkSpec { n, seed, lane: 0 }
    }

    pub fn with_lane(n: u64, seed: [u8; 32], lane: u64) -> WalkSpec {
        WalkSpec { n, seed, lane }
    }

    /// Below this capacity the walk is deterministic.
    pub fn is_small(&self) -> bool {
        self.n < SMALL_WALK_N
    }

    pub fn steps(&self) -> u64 {
        3 * self.n
    }

    fn hash_stream(&self) -> rand_chacha::ChaCha12Rng {
        seeded_rng(&self.seed, Domain::CgkHash, self.lane)
    }
}

/// `R_t(a)`: parity of the set bits of `(2a+1) & h_t`. The `2a+1`
/// injection keeps every symbol nonzero and pairwise-distinct, so the
/// advance probability is exactly one half and two distinct symbols
/// disagree with probability one half.
#[inline]
fn hash_bit(h: u64, sym: Sym) -> u64 {
    (((2 * sym.code() + 1) & h).count_ones() & 1) as u64
}

/// Raw CGK walk plus embedding.
#[derive(Clone, Debug)]
pub struct CgkWalk {
    /// `s_1..s_{3n+1}`.
    pub steps: Vec<u64>,
    /// The embedding: `S[s_t]` while inside, padding afterwards.
    pub embedding: Vec<Sym>,
    /// Whether the raw walk reached `|S| + 1`.
    pub complete: bool,
}

/// Runs the CGK algorithm. Requires `|s| <= spec.n`.
pub fn cgk_walk(spec: &WalkSpec, s: &[Sym]) -> CgkWalk {
    assert!(s.len() as u64 <= spec.n, "walk capacity exceeded");
    let m = spec.steps();
    let len = s.len() as u64;
    let mut steps = Vec::with_capacity(m as usize + 1);
    let mut embedding = Vec::with_capacity(m as usize);
    let mut pos = 1u64;
    steps.push(pos);
    if spec.is_small() {
        for t in 1..=m {
            if pos <= len {
                embedding.push(s[(pos - 1) as usize]);
            } else {
                embedding.push(Sym::PAD);
            }
            pos = (t + 1).min(len + 1);
            steps.push(pos);
        }
        return CgkWalk { steps, embedding, complete: true };
    }
    let mut rng = spec.hash_stream();
    for _ in 1..=m {
        let h = rng.next_u64();
        if pos <= len {
            embedding.push(s[(pos - 1) as usize]);
            pos += hash_bit(h, s[(pos - 1) as usize]);
        } else {
            embedding.push(Sym::PAD);
        }
        steps.push(pos);
    }
    let complete = pos == len + 1;
    CgkWalk { steps, embedding, complete }
}

/// The forced-complete walk `W(n, r, S)`: equal to the raw walk whenever
/// that one is complete, otherwise pushed forward to end at `|S| + 1`.
pub fn complete_walk(spec: &WalkSpec, s: &[Sym]) -> Vec<u64> {
    let raw = cgk_walk(spec, s);
    force_complete(spec, s.len() as u64, raw.steps)
}

fn force_complete(spec: &WalkSpec, len: u64, mut steps: Vec<u64>) -> Vec<u64> {
    let m = spec.steps();
    for (idx, v) in steps.iter_mut().enumerate() {
        let t = idx as u64 + 1;
        let floor = (t + len).saturating_sub(m + 1);
        // max(t - 3n + |S|, s_t), clamped into the walk's range
        *v = (*v).max(floor).min(len + 1);
    }
    debug_assert_eq!(steps[m as usize], len + 1);
    steps
}

/// Statistics of the zip alignment of the two complete walks, plus the
/// Hamming distance of the raw embeddings.
#[derive(Clone, Debug)]
pub struct WalkQuality {
    pub zip_cost: u64,
    pub zip_width: u64,
    pub zip_is_greedy: bool,
    pub hd_embeddings: u64,
    pub both_raw_complete: bool,
    pub alignment: Alignment,
}

pub fn walk_quality(spec: &WalkSpec, x: &[Sym], y: &[Sym]) -> WalkQuality {
    let wx = cgk_walk(spec, x);
    let wy = cgk_walk(spec, y);
    let both_raw_complete = wx.complete && wy.complete;
    let hd_embeddings =
        wx.embedding.iter().zip(&wy.embedding).filter(|(a, b)| a != b).count() as u64;
    let fx = force_complete(spec, x.len() as u64, wx.steps);
    let fy = force_complete(spec, y.len() as u64, wy.steps);
    let a = zip_walks(&fx, &fy);
    debug_assert!(a.is_valid(x.len(), y.len()));
    let c = a.classify(x, y);
    WalkQuality {
        zip_cost: c.cost as u64,
        zip_width: a.width() as u64,
        zip_is_greedy: a.is_greedy(x, y),
        hd_embeddings,
        both_raw_complete,
        alignment: a,
    }
}

/// Incremental walk driver: feeds characters one at a time and reports,
/// for each character, the inclusive range of walk times spent on it.
/// Consumers see each element `s_t <= |S|` while its character is
/// processed.
#[derive(Clone)]
pub struct WalkStream {
    spec: WalkSpec,
    rng: rand_chacha::ChaCha12Rng,
    /// Next walk time to execute (1-based).
    t: u64,
    /// Current walk position (the next character index to consume).
    pos: u64,
}

impl WalkStream {
    pub fn new(spec: WalkSpec) -> WalkStream {
        let rng = spec.hash_stream();
        WalkStream { spec, rng, t: 1, pos: 1 }
    }

    pub fn spec(&self) -> &WalkSpec {
        &self.spec
    }

    /// Feeds the character at the walk's current position and returns the
    /// walk times `[t0..t1]` spent on it (empty when the step budget ran
    /// out, which makes the raw walk incomplete).
    pub fn push(&mut self, c: Sym) -> (u64, u64) {
        let m = self.spec.steps();
        assert!(self.pos <= self.spec.n, "walk capacity exceeded");
        let t0 = self.t;
        if self.spec.is_small() {
            // Deterministic walk: exactly one step per character.
            if self.t <= m {
                self.t += 1;
                self.pos += 1;
                return (t0, t0);
            }
            return (t0, t0 - 1);
        }
        while self.t <= m {
            let h = self.rng.next_u64();
            let advance = hash_bit(h, c) == 1;
            self.t += 1;
            if advance {
                self.pos += 1;
                return (t0, self.t - 1);
            }
        }
        (t0, m) // stuck on this character until the budget ran out
    }

    /// True when every pushed character was consumed within the budget.
    pub fn raw_complete(&self) -> bool {
        self.t <= self.spec.steps() + 1
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn position(&self) -> u64 {
        self.pos
    }
}

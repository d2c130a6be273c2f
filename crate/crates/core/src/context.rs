//! Contexts and the context encoding.
//!
//! The compressibility measure is `rev-maxLZ(S)`: the maximum over all
//! substrings of the LZ77 size of the reversed substring. The *context*
//! of a position is the longest prefix staying below a threshold, a
//! *double context* chains two, and the context encoding `CE_k(W)` of a
//! complete walk stores, at walk times selected by a dyadic rule, the LZ
//! factorization of the reversed double context plus a position delta.

use crate::cgk::{WalkSpec, WalkStream};
use crate::lz::{lz77_factorize, lz_size, LzFactorization, LzPhrase};
use crate::sym::Sym;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

/// `rev-maxLZ(S)`: by prefix monotonicity of LZ77, the maximum over all
/// substrings reduces to a maximum over prefixes of reversed prefixes.
pub fn rev_max_lz(s: &[Sym]) -> usize {
    let mut best = 0usize;
    for r in 1..=s.len() {
        let mut w: Vec<Sym> = s[..r].to_vec();
        w.reverse();
        best = best.max(lz_size(&w));
    }
    best
}

/// End (exclusive, 1-based) of the context `C_k(S, p)`: the longest
/// prefix `S[p..q)` with `rev-maxLZ <= k`.
pub fn context(s: &[Sym], p: usize, k: usize) -> usize {
    assert!(p >= 1 && p <= s.len(), "position out of range");
    let mut q = p; // window [p..q) valid so far
    let mut w: Vec<Sym> = Vec::new();
    while q <= s.len() {
        w.insert(0, s[q - 1]);
        if lz_size(&w) > k {
            return q;
        }
        q += 1;
    }
    q
}

/// `(r, q)`: the double context `C²_k(S, p) = S[p..q)` splits into the
/// context of `p` ending at `r` and the context of `r` ending at `q`.
pub fn double_context(s: &[Sym], p: usize, k: usize) -> (usize, usize) {
    let r = context(s, p, k);
    if r > s.len() {
        (r, r)
    } else {
        (r, context(s, r, k))
    }
}

/// The integer in `[t..v)` divisible by the largest power of two.
pub fn mu(t: u64, v: u64) -> u64 {
    assert!(t < v, "mu needs a non-empty range");
    for j in (0..63).rev() {
        let step = 1u64 << j;
        let w = t.div_ceil(step) * step;
        if w < v {
            return w;
        }
    }
    t
}

/// One slot of a context encoding.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ContextEntry {
    Blank,
    Payload {
        /// `LZ(reverse(C²_k(S, s_t)))`.
        lz_rev_double: LzFactorization,
        /// `s_t - s_u` with `u` the previous payload time (`s_0 = 0`).
        delta: u64,
    },
}

impl ContextEntry {
    pub fn is_blank(&self) -> bool {
        matches!(self, ContextEntry::Blank)
    }

    /// The position weight used by prefix-mismatch sketches.
    pub fn weight(&self) -> u64 {
        match self {
            ContextEntry::Blank => 0,
            ContextEntry::Payload { delta, .. } => *delta,
        }
    }

    /// Canonical byte serialization; equal entries serialize equally.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            ContextEntry::Blank => out.push(0u8),
            ContextEntry::Payload { lz_rev_double, delta } => {
                out.push(1u8);
                out.extend_from_slice(&delta.to_le_bytes());
                out.extend_from_slice(&(lz_rev_double.phrases.len() as u32).to_le_bytes());
                for ph in &lz_rev_double.phrases {
                    match *ph {
                        LzPhrase::Literal(c) => {
                            out.push(0u8);
                            out.extend_from_slice(&c.code().to_le_bytes());
                        }
                        LzPhrase::Copy { src, len } => {
                            out.push(1u8);
                            out.extend_from_slice(&(src as u32).to_le_bytes());
                            out.extend_from_slice(&(len as u32).to_le_bytes());
                        }
                    }
                }
            }
        }
        out
    }

    /// Inverse of [`Self::canonical_bytes`].
    pub fn from_canonical_bytes(b: &[u8]) -> Option<ContextEntry> {
        match b.first()? {
            0 => Some(ContextEntry::Blank),
            1 => {
                let delta = u64::from_le_bytes(b.get(1..9)?.try_into().ok()?);
                let count = u32::from_le_bytes(b.get(9..13)?.try_into().ok()?) as usize;
                let mut at = 13usize;
                let mut phrases = Vec::with_capacity(count);
                for _ in 0..count {
                    match b.get(at)? {
                        0 => {
                            let code =
                                u64::from_le_bytes(b.get(at + 1..at + 9)?.try_into().ok()?);
                            phrases.push(LzPhrase::Literal(crate::sym::Sym::chr(0)));
                            // Rebuild the exact symbol from its code.
                            let s = unsafe_sym(code);
                            *phrases.last_mut().unwrap() = LzPhrase::Literal(s);
                            at += 9;
                        }
                        1 => {
                            let src =
                                u32::from_le_bytes(b.get(at + 1..at + 5)?.try_into().ok()?);
                            let len =
                                u32::from_le_bytes(b.get(at + 5..at + 9)?.try_into().ok()?);
                            phrases.push(LzPhrase::Copy { src: src as usize, len: len as usize });
                            at += 9;
                        }
                        _ => return None,
                    }
                }
                if at != b.len() {
                    return None;
                }
                Some(ContextEntry::Payload {
                    lz_rev_double: LzFactorization { phrases },
                    delta,
                })
            }
            _ => None,
        }
    }
}

fn unsafe_sym(code: u64) -> Sym {
    // Round-trips any symbol code, including reserved ones.
    if code < crate::sym::MAX_CHAR as u64 {
        Sym::chr(code as u32)
    } else if code == Sym::HASH.code() {
        Sym::HASH
    } else if code == Sym::S1.code() {
        Sym::S1
    } else if code == Sym::S2.code() {
        Sym::S2
    } else if code == Sym::S3.code() {
        Sym::S3
    } else {
        Sym::PAD
    }
}

/// A full context encoding, one entry per walk step.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ContextEncoding {
    pub entries: Vec<ContextEntry>,
}

impl ContextEncoding {
    pub fn payload_times(&self) -> Vec<u64> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_blank())
            .map(|(i, _)| i as u64 + 1)
            .collect()
    }
}

/// Offline construction of `CE_k(W)` for a complete walk over `s`.
/// Requires `k >= 1`.
pub fn build_ce(k: usize, s: &[Sym], walk: &[u64]) -> ContextEncoding {
    assert!(k >= 1);
    let n = s.len() as u64;
    let m = walk.len() - 1;
    assert_eq!(walk[0], 1, "walk must start at 1");
    assert_eq!(walk[m], n + 1, "walk must be complete");
    // Context ends for every position, by a monotone two-pointer.
    let mut ctx_end = vec![0u64; s.len() + 2];
    {
        let mut q = 1usize; // window [p..q) holds the property
        for p in 1..=s.len() {
            if q < p {
                q = p;
            }
            while q <= s.len() {
                let mut w: Vec<Sym> = s[p - 1..q].to_vec();
                w.reverse();
                if lz_size(&w) > k {
                    break;
                }
                q += 1;
            }
            ctx_end[p] = q as u64;
        }
        ctx_end[s.len() + 1] = n + 1;
    }
    let mut first_at = BTreeMap::new();
    for (idx, &pos) in walk.iter().enumerate() {
        first_at.entry(pos).or_insert(idx as u64 + 1);
    }
    let mut entries = vec![ContextEntry::Blank; m];
    let mut mu_prev = 0u64;
    let mut s_u = 0u64;
    for t in 1..=m as u64 {
        let pos = walk[(t - 1) as usize];
        if pos > n {
            continue;
        }
        let q = ctx_end[pos as usize];
        let v = *first_at.get(&q).expect("complete walk visits every position");
        let mu_t = mu(t, v);
        if mu_t > mu_prev {
            let r = if q > n { q } else { ctx_end[q as usize] };
            let mut dc: Vec<Sym> = s[(pos - 1) as usize..(r - 1) as usize].to_vec();
            dc.reverse();
            entries[(t - 1) as usize] = ContextEntry::Payload {
                lz_rev_double: lz77_factorize(&dc),
                delta: pos - s_u,
            };
            s_u = pos;
        }
        mu_prev = mu_t;
    }
    ContextEncoding { entries }
}

/// Exact LZ77 size of the reversed window, with a fast path for periodic
/// windows. `at(i)` returns `S[i]` (1-based absolute), window is
/// `[p..=q]`, and `rho` is a known period of the window if any.
fn rev_window_lz_size<F: Fn(u64) -> Sym>(at: &F, p: u64, q: u64, rho: Option<u64>) -> usize {
    let w = q - p + 1;
    if let Some(rho) = rho {
        if w > 512 && 2 * rho <= w {
            return periodic_rev_lz_size(at, p, q, rho);
        }
    }
    if w <= 4096 {
        let mut v: Vec<Sym> = Vec::with_capacity(w as usize);
        let mut i = q;
        loop {
            v.push(at(i));
            if i == p {
                break;
            }
            i -= 1;
        }
        return lz_size(&v);
    }
    // Very long aperiodic low-complexity window: fall back to the direct
    // computation (correct, potentially slow on adversarial input).
    let mut v: Vec<Sym> = Vec::with_capacity(w as usize);
    let mut i = q;
    loop {
        v.push(at(i));
        if i == p {
            break;
        }
        i -= 1;
    }
    lz_size(&v)
}

/// Exact LZ size for a window with period `rho <= w/2`: the reversed
/// window has the same period, any greedy phrase starting after the first
/// period runs to the end, and matches between positions inside the first
/// period either die within `rho` steps or persist to the end.
fn periodic_rev_lz_size<F: Fn(u64) -> Sym>(at: &F, p: u64, q: u64, rho: u64) -> usize {
    let w = q - p + 1;
    let v = |j: u64| at(q + 1 - j); // reversed window, 1-based
    let lce = |a: u64, b: u64| -> u64 {
        // LCE of the reversed window's suffixes at a < b, both <= rho.
        let mut t = 0u64;
        while t < rho && b + t <= w && v(a + t) == v(b + t) {
            t += 1;
        }
        if t == rho {
            w - b + 1 // periodic agreement persists to the end
        } else {
            t
        }
    };
    let mut j = 1u64;
    let mut phrases = 0usize;
    while j <= w {
        if j > rho {
            return phrases + 1;
        }
        let mut best = 0u64;
        for j2 in 1..j {
            best = best.max(lce(j2, j));
        }
        j += best.max(1);
        phrases += 1;
    }
    phrases
}

/// Streaming construction of `CE_k(W(n, r, S))`.
///
/// Characters are pushed one at a time; payload entries are emitted as
/// `(walk_time, entry)` events as soon as the double context and the
/// dyadic rule are decided, matching [`build_ce`] exactly. The state
/// holds the active context window, the per-position walk times, and a
/// queue of positions whose entries are not yet decidable.
#[derive(Clone)]
pub struct StreamingCe {
    k: usize,
    walk: WalkStream,
    n: u64,
    cur: u64,
    buf: Vec<Sym>,
    buf_off: u64,
    // Context window engine: window = S[p..=cur] (satisfies the measure).
    p: u64,
    rho: Option<u64>,
    ctx_end: BTreeMap<u64, u64>,
    times: BTreeMap<u64, (u64, u64)>,
    first_at: BTreeMap<u64, u64>,
    next_pos: u64,
    mu_prev: u64,
    s_u: u64,
    emitted: Vec<(u64, ContextEntry)>,
    finished: bool,
    forced: bool,
    peak_buf: usize,
    peak_payload: usize,
}

impl StreamingCe {
    pub fn new(k: usize, spec: WalkSpec) -> StreamingCe {
        assert!(k >= 1);
        let n = spec.n;
        StreamingCe {
            k,
            walk: WalkStream::new(spec),
            n,
            cur: 0,
            buf: Vec::new(),
            buf_off: 0,
            p: 1,
            rho: None,
            ctx_end: BTreeMap::new(),
            times: BTreeMap::new(),
            first_at: BTreeMap::new(),
            next_pos: 1,
            mu_prev: 0,
            s_u: 0,
            emitted: Vec::new(),
            finished: false,
            forced: false,
            peak_buf: 0,
            peak_payload: 0,
        }
    }

    fn at(&self, i: u64) -> Sym {
        self.buf[(i - self.buf_off - 1) as usize]
    }

    /// Largest observed live character buffer (space probe).
    pub fn peak_buffer(&self) -> usize {
        self.peak_buf
    }

    /// Largest emitted payload factorization (space probe).
    pub fn peak_payload_phrases(&self) -> usize {
        self.peak_payload
    }

    /// Whether the raw walk ran out of steps (astronomically rare; the
    /// produced encoding then disagrees with the forced-complete walk).
    pub fn walk_forced(&self) -> bool {
        self.forced
    }

    pub fn pushed(&self) -> u64 {
        self.cur
    }

    pub fn push(&mut self, c: Sym) -> Vec<(u64, ContextEntry)> {
        assert!(!self.finished, "push after finish");
        assert!(self.cur < self.n, "stream overflow");
        self.cur += 1;
        self.buf.push(c);
        self.peak_buf = self.peak_buf.max(self.buf.len());
        let (t0, t1) = self.walk.push(c);
        if t1 < t0 {
            self.forced = true;
        }
        self.times.insert(self.cur, (t0, t1.max(t0)));
        self.first_at.insert(self.cur, t0);

        // Maintain the window period incrementally.
        let q = self.cur;
        if q > self.p {
            match self.rho {
                Some(r) if q - r >= self.p && self.at(q) == self.at(q - r) => {}
                _ => self.rho = self.window_period(),
            }
        } else {
            self.rho = Some(1);
        }
        // Shrink until the measure holds again.
        while self.p <= q {
            let ok = {
                let buf = &self.buf;
                let off = self.buf_off;
                let at = move |i: u64| buf[(i - off - 1) as usize];
                rev_window_lz_size(&at, self.p, q, self.rho) <= self.k
            };
            if ok {
                break;
            }
            self.ctx_end.insert(self.p, q);
            self.p += 1;
            if self.p <= q {
                self.rho = self.window_period();
            }
        }
        self.drain(false)
    }

    fn window_period(&self) -> Option<u64> {
        let (p, q) = (self.p, self.cur);
        if p > q {
            return Some(1);
        }
        let w = (q - p + 1) as usize;
        if w > 4096 {
            return None; // too long to recompute eagerly
        }
        let mut border = vec![0usize; w];
        for i in 1..w {
            let mut b = border[i - 1];
            while b > 0 && self.at(p + i as u64) != self.at(p + b as u64) {
                b = border[b - 1];
            }
            if self.at(p + i as u64) == self.at(p + b as u64) {
                b += 1;
            }
            border[i] = b;
        }
        let rho = (w - border[w - 1]) as u64;
        if rho <= 64 {
            Some(rho)
        } else {
            None
        }
    }

    /// Finishes the stream and returns the remaining events.
    pub fn finish(&mut self) -> Vec<(u64, ContextEntry)> {
        assert!(!self.finished);
        self.finished = true;
        for pos in self.p..=self.cur {
            self.ctx_end.insert(pos, self.cur + 1);
        }
        self.ctx_end.insert(self.cur + 1, self.cur + 1);
        if self.cur < self.n || self.walk.position() <= self.cur {
            // The walk leaves the string only now (or never: forced).
            if self.walk.position() > self.cur {
                self.first_at.insert(self.cur + 1, self.walk.time());
            } else {
                self.forced = true;
                self.first_at.insert(self.cur + 1, self.walk.spec().steps() + 1);
            }
        } else {
            self.first_at.insert(self.cur + 1, self.walk.time());
        }
        self.drain(true)
    }

    /// All events emitted so far, in walk-time order.
    pub fn events(&self) -> &[(u64, ContextEntry)] {
        &self.emitted
    }

    /// The full encoding (available after `finish`).
    pub fn into_encoding(self, m: u64) -> ContextEncoding {
        assert!(self.finished);
        let mut entries = vec![ContextEntry::Blank; m as usize];
        for (t, e) in self.emitted {
            entries[(t - 1) as usize] = e;
        }
        ContextEncoding { entries }
    }

    fn drain(&mut self, at_end: bool) -> Vec<(u64, ContextEntry)> {
        let mut out = Vec::new();
        while self.next_pos <= self.cur {
            let pos = self.next_pos;
            let Some(&q) = self.ctx_end.get(&pos) else { break };
            let Some(&v) = self.first_at.get(&q) else {
                if at_end {
                    unreachable!("finish filled all arrival times")
                }
                break;
            };
            let r = if q > self.cur {
                q
            } else {
                match self.ctx_end.get(&q) {
                    Some(&r) => r,
                    None => break, // second context still open
                }
            };
            // Characters S[pos..r) must be buffered.
            debug_assert!(self.buf_off < pos);
            let (t0, t1) = self.times[&pos];
            for t in t0..=t1 {
                let mu_t = mu(t, v.max(t + 1));
                debug_assert!(v > t, "context end must be reached after its start");
                if mu_t > self.mu_prev {
                    let mut dc: Vec<Sym> = (pos..r).map(|i| self.at(i)).collect();
                    dc.reverse();
                    let lz = lz77_factorize(&dc);
                    self.peak_payload = self.peak_payload.max(lz.phrases.len());
                    let entry = ContextEntry::Payload { lz_rev_double: lz, delta: pos - self.s_u };
                    self.emitted.push((t, entry.clone()));
                    out.push((t, entry));
                    self.s_u = pos;
                }
                self.mu_prev = mu_t;
            }
            self.next_pos += 1;
            self.times.remove(&pos);
            // Garbage-collect: the window engine needs S[p..], pending
            // entries need S[next_pos..].
            let keep_from = self.p.min(self.next_pos);
            while self.buf_off + 1 < keep_from {
                self.buf.remove(0);
                self.buf_off += 1;
            }
            let drop_ctx: Vec<u64> =
                self.ctx_end.range(..self.next_pos.min(self.p)).map(|(&a, _)| a).collect();
            for a in drop_ctx {
                if a + 1 < self.next_pos.min(self.p) {
                    self.ctx_end.remove(&a);
                }
            }
            let drop_fa: Vec<u64> =
                self.first_at.range(..self.next_pos.saturating_sub(1)).map(|(&a, _)| a).collect();
            for a in drop_fa {
                self.first_at.remove(&a);
            }
        }
        out
    }
}

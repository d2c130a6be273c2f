//! Rank/select over dummy segments.
//!
//! The dummy positions of a masked string form few maximal segments; the
//! structure stores the sorted segment list `(l, r, rank_before)` and
//! answers rank and select by binary search.

use crate::sym::Sym;
use alloc::vec::Vec;

/// Rank/select support for the `#` positions of a masked string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DummyRankSelect {
    /// `(l, r, rank_before)`: segment `[l..r)` (1-based), with
    /// `rank_before` dummies strictly before `l`.
    segs: Vec<(u64, u64, u64)>,
    n: u64,
    total: u64,
}

impl DummyRankSelect {
    /// Builds from sorted, disjoint, non-empty segments `[l..r)`.
    pub fn from_segments(segments: &[(u64, u64)], n: u64) -> DummyRankSelect {
        let mut segs = Vec::with_capacity(segments.len());
        let mut before = 0u64;
        let mut prev_end = 0u64;
        for &(l, r) in segments {
            assert!(l >= 1 && l < r && r <= n + 1, "segment out of range");
            assert!(l >= prev_end.max(1), "segments must be sorted and disjoint");
            segs.push((l, r, before));
            before += r - l;
            prev_end = r;
        }
        DummyRankSelect { segs, n, total: before }
    }

    /// Scans an explicit string for its dummy segments.
    pub fn from_string(s: &[Sym]) -> DummyRankSelect {
        let mut segments = Vec::new();
        let mut i = 0usize;
        while i < s.len() {
            if s[i].is_hash() {
                let l = i;
                while i < s.len() && s[i].is_hash() {
                    i += 1;
                }
                segments.push((l as u64 + 1, i as u64 + 1));
            } else {
                i += 1;
            }
        }
        DummyRankSelect::from_segments(&segments, s.len() as u64)
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Total number of dummies.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn segments(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.segs.iter().map(|&(l, r, _)| (l, r))
    }

    pub fn segment_count(&self) -> usize {
        self.segs.len()
    }

    /// Number of dummies strictly before position `i`, for `i` in
    /// `[1..n+1]`.
    pub fn rank(&self, i: u64) -> u64 {
        assert!(i >= 1 && i <= self.n + 1, "rank index out of range");
        let p = self.segs.partition_point(|&(l, _, _)| l <= i);
        if p == 0 {
            return 0;
        }
        let (l, r, before) = self.segs[p - 1];
        before + i.min(r) - l
    }

    /// Position of the `j`-th dummy, for `j` in `[1..total]`.
    pub fn select(&self, j: u64) -> u64 {
        assert!(j >= 1 && j <= self.total, "select index out of range");
        let p = self.segs.partition_point(|&(_, _, b)| b < j);
        let (l, _, before) = self.segs[p - 1];
        l + (j - 1 - before)
    }

    /// Position of the first dummy at or after `i`, if any.
    pub fn next_dummy_at_or_after(&self, i: u64) -> Option<u64> {
        if i > self.n {
            return None;
        }
        let r = self.rank(i);
        if r < self.total {
            Some(self.select(r + 1).max(i))
        } else {
            None
        }
    }

    /// Position of the last dummy at or before `i`, if any.
    pub fn prev_dummy_at_or_before(&self, i: u64) -> Option<u64> {
        if i == 0 {
            return None;
        }
        let r = self.rank((i + 1).min(self.n + 1));
        if r == 0 {
            None
        } else {
            Some(self.select(r))
        }
    }
}

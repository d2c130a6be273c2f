//! Run-length straight-line programs and the compressed string
//! representation built on them.
//!
//! A [`CompressedString`] stores one RLSLP for the string and one for its
//! reverse, both carrying per-node lengths, heights, and Karp–Rabin
//! fingerprints. Longest-common-extension queries are answered by direct
//! expansion for short strings and by fingerprint-guided binary search for
//! long ones; everything else (access, extract, concatenation, LZ
//! conversion) walks the grammar.

use crate::config::{height_cap, NAIVE_LCE_LEN};
use crate::fprint::{FpBasis, Fingerprint};
use crate::lz::{lz77_factorize, LzFactorization, LzPhrase};
use crate::sym::Sym;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

pub type NodeId = u32;

/// Wire-facing node description.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeSpec {
    Term(Sym),
    Bin(NodeId, NodeId),
    Run(NodeId, u32),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum NodeKind {
    Term(Sym),
    Bin(NodeId, NodeId),
    /// `Run(u, e)` expands to `exp(u)` repeated `e >= 2` times.
    Run(NodeId, u32),
}

#[derive(Clone, Copy, Debug)]
struct Node {
    kind: NodeKind,
    len: u64,
    height: u32,
    fp: Fingerprint,
}

/// Errors from building or combining compressed strings.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BuildError {
    /// A copy phrase references a position at or after its own start.
    MalformedFactorization,
}

/// An RLSLP arena. Node ids are indices; children always precede parents.
#[derive(Clone, Debug)]
pub struct Grammar {
    nodes: Vec<Node>,
    basis: FpBasis,
}

impl Grammar {
    pub fn new(basis: FpBasis) -> Grammar {
        Grammar { nodes: Vec::new(), basis }
    }

    #[inline]
    pub fn basis(&self) -> FpBasis {
        self.basis
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    #[inline]
    pub fn len_of(&self, id: NodeId) -> u64 {
        self.node(id).len
    }

    #[inline]
    pub fn height_of(&self, id: NodeId) -> u32 {
        self.node(id).height
    }

    #[inline]
    pub fn fp_of(&self, id: NodeId) -> Fingerprint {
        self.node(id).fp
    }

    /// Exports the node table (children precede parents).
    pub fn export_nodes(&self) -> Vec<NodeSpec> {
        self.nodes
            .iter()
            .map(|n| match n.kind {
                NodeKind::Term(s) => NodeSpec::Term(s),
                NodeKind::Bin(a, b) => NodeSpec::Bin(a, b),
                NodeKind::Run(u, e) => NodeSpec::Run(u, e),
            })
            .collect()
    }

    /// Rebuilds a grammar from exported nodes, recomputing lengths,
    /// heights, and fingerprints. Children must precede parents.
    pub fn import(basis: FpBasis, specs: &[NodeSpec]) -> Option<Grammar> {
        let mut g = Grammar::new(basis);
        for (i, sp) in specs.iter().enumerate() {
            let id = match *sp {
                NodeSpec::Term(s) => g.term(s),
                NodeSpec::Bin(a, b) => {
                    if a as usize >= i || b as usize >= i {
                        return None;
                    }
                    g.bin(a, b)
                }
                NodeSpec::Run(u, e) => {
                    if u as usize >= i || e < 2 {
                        return None;
                    }
                    g.run(u, e)
                }
            };
            debug_assert_eq!(id as usize, i);
        }
        Some(g)
    }

    fn push_node(&mut self, n: Node) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(n);
        id
    }

    pub fn term(&mut self, s: Sym) -> NodeId {
        let fp = self.basis.of_sym(s);
        self.push_node(Node { kind: NodeKind::Term(s), len: 1, height: 0, fp })
    }

    pub fn bin(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (na, nb) = (*self.node(a), *self.node(b));
        self.push_node(Node {
            kind: NodeKind::Bin(a, b),
            len: na.len + nb.len,
            height: na.height.max(nb.height) + 1,
            fp: na.fp.concat(nb.fp),
        })
    }

    pub fn run(&mut self, u: NodeId, e: u32) -> NodeId {
        debug_assert!(e >= 2);
        let nu = *self.node(u);
        self.push_node(Node {
            kind: NodeKind::Run(u, e),
            len: nu.len * e as u64,
            height: nu.height + 1,
            fp: nu.fp.repeat(e as u64),
        })
    }

    /// Appends a piece to a forest stack kept in strictly decreasing
    /// height order; collapsing such a stack right-to-left yields a tree
    /// of height at most one above its tallest piece.
    fn push_piece(&mut self, stack: &mut Vec<NodeId>, mut s: NodeId) {
        while let Some(&top) = stack.last() {
            if self.height_of(top) <= self.height_of(s) {
                stack.pop();
                s = self.bin(top, s);
            } else {
                break;
            }
        }
        stack.push(s);
    }

    fn collapse(&mut self, stack: &mut Vec<NodeId>) -> Option<NodeId> {
        let mut acc = stack.pop()?;
        while let Some(top) = stack.pop() {
            acc = self.bin(top, acc);
        }
        Some(acc)
    }

    /// Maximal nodes covering `[lo..hi)` (0-based) under `root`, in order.
    /// May create new `Run` nodes when slicing repetitions.
    pub fn extract_forest(&mut self, root: NodeId, lo: u64, hi: u64) -> Vec<NodeId> {
        debug_assert!(lo <= hi && hi <= self.len_of(root));
        let mut out = Vec::new();
        if lo < hi {
            self.collect(root, 0, lo, hi, &mut out);
        }
        out
    }

    fn collect(&mut self, id: NodeId, at: u64, lo: u64, hi: u64, out: &mut Vec<NodeId>) {
        let n = *self.node(id);
        let end = at + n.len;
        if hi <= at || end <= lo {
            return;
        }
        if lo <= at && end <= hi {
            out.push(id);
            return;
        }
        match n.kind {
            NodeKind::Term(_) => unreachable!("terminal is either inside or disjoint"),
            NodeKind::Bin(a, b) => {
                let mid = at + self.len_of(a);
                self.collect(a, at, lo, hi, out);
                self.collect(b, mid, lo, hi, out);
            }
            NodeKind::Run(u, e) => {
                let ul = self.len_of(u);
                let c0 = (lo.saturating_sub(at)) / ul;
                let c1 = ((hi - at - 1) / ul).min(e as u64 - 1);
                let mut full_from: Option<u64> = None;
                for c in c0..=c1 {
                    let cat = at + c * ul;
                    if lo <= cat && cat + ul <= hi {
                        if full_from.is_none() {
                            full_from = Some(c);
                        }
                    } else {
                        if let Some(f) = full_from.take() {
                            self.emit_run_slice(u, c - f, out);
                        }
                        self.collect(u, cat, lo, hi, out);
                    }
                }
                if let Some(f) = full_from.take() {
                    self.emit_run_slice(u, c1 + 1 - f, out);
                }
            }
        }
    }

    fn emit_run_slice(&mut self, u: NodeId, cnt: u64, out: &mut Vec<NodeId>) {
        if cnt == 1 {
            out.push(u);
        } else if cnt >= 2 {
            let r = self.run(u, cnt as u32);
            out.push(r);
        }
    }

    /// Character at 0-based position `i` under `root`.
    pub fn access(&self, root: NodeId, mut i: u64) -> Sym {
        debug_assert!(i < self.len_of(root));
        let mut id = root;
        loop {
            match self.node(id).kind {
                NodeKind::Term(s) => return s,
                NodeKind::Bin(a, b) => {
                    let la = self.len_of(a);
                    if i < la {
                        id = a;
                    } else {
                        i -= la;
                        id = b;
                    }
                }
                NodeKind::Run(u, _) => {
                    let ul = self.len_of(u);
                    i %= ul;
                    id = u;
                }
            }
        }
    }

    pub fn expand_into(&self, id: NodeId, out: &mut Vec<Sym>) {
        match self.node(id).kind {
            NodeKind::Term(s) => out.push(s),
            NodeKind::Bin(a, b) => {
                self.expand_into(a, out);
                self.expand_into(b, out);
            }
            NodeKind::Run(u, e) => {
                let start = out.len();
                self.expand_into(u, out);
                let ul = out.len() - start;
                for _ in 1..e as usize {
                    for j in 0..ul {
                        let c = out[start + j];
                        out.push(c);
                    }
                }
            }
        }
    }

    pub fn expand(&self, root: Option<NodeId>) -> Vec<Sym> {
        let mut out = Vec::new();
        if let Some(r) = root {
            out.reserve(self.len_of(r) as usize);
            self.expand_into(r, &mut out);
        }
        out
    }

    /// Fingerprint of the 0-based window `[lo..hi)` under `id`.
    pub fn range_fp(&self, id: NodeId, lo: u64, hi: u64) -> Fingerprint {
        let n = self.node(id);
        debug_assert!(lo <= hi && hi <= n.len);
        if lo == hi {
            return self.basis.empty();
        }
        if lo == 0 && hi == n.len {
            return n.fp;
        }
        match n.kind {
            NodeKind::Term(_) => unreachable!(),
            NodeKind::Bin(a, b) => {
                let la = self.len_of(a);
                if hi <= la {
                    self.range_fp(a, lo, hi)
                } else if lo >= la {
                    self.range_fp(b, lo - la, hi - la)
                } else {
                    self.range_fp(a, lo, la).concat(self.range_fp(b, 0, hi - la))
                }
            }
            NodeKind::Run(u, _) => {
                let ul = self.len_of(u);
                let c0 = lo / ul;
                let c1 = (hi - 1) / ul;
                if c0 == c1 {
                    return self.range_fp(u, lo - c0 * ul, hi - c0 * ul);
                }
                let mut f = self.range_fp(u, lo - c0 * ul, ul);
                let full = c1 - c0 - 1;
                if full > 0 {
                    f = f.concat(self.fp_of(u).repeat(full));
                }
                f.concat(self.range_fp(u, 0, hi - c1 * ul))
            }
        }
    }

    /// Copies the subgraph reachable from `root` into `target`, returning
    /// the translated root.
    pub fn compact_into(&self, root: NodeId, target: &mut Grammar) -> NodeId {
        debug_assert_eq!(self.basis, target.basis);
        let mut memo: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        self.copy_rec(root, target, &mut memo, false)
    }

    /// Copies the subgraph reachable from `root` into `target`, reversed.
    pub fn mirror_into(&self, root: NodeId, target: &mut Grammar) -> NodeId {
        debug_assert_eq!(self.basis, target.basis);
        let mut memo: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        self.copy_rec(root, target, &mut memo, true)
    }

    fn copy_rec(
        &self,
        id: NodeId,
        target: &mut Grammar,
        memo: &mut BTreeMap<NodeId, NodeId>,
        mirror: bool,
    ) -> NodeId {
        if let Some(&t) = memo.get(&id) {
            return t;
        }
        let t = match self.node(id).kind {
            NodeKind::Term(s) => target.term(s),
            NodeKind::Bin(a, b) => {
                if mirror {
                    let tb = self.copy_rec(b, target, memo, mirror);
                    let ta = self.copy_rec(a, target, memo, mirror);
                    target.bin(tb, ta)
                } else {
                    let ta = self.copy_rec(a, target, memo, mirror);
                    let tb = self.copy_rec(b, target, memo, mirror);
                    target.bin(ta, tb)
                }
            }
            NodeKind::Run(u, e) => {
                let tu = self.copy_rec(u, target, memo, mirror);
                target.run(tu, e)
            }
        };
        memo.insert(id, t);
        t
    }

    /// An LZ-like factorization of `exp(root)` with `O(g)` phrases: the
    /// first occurrence of each distinct symbol is expanded, later ones
    /// become copy phrases, and run tails copy their own first period.
    pub fn to_lz_like(&self, root: NodeId) -> LzFactorization {
        let mut phrases = Vec::new();
        let mut seen: BTreeMap<NodeId, u64> = BTreeMap::new();
        self.lz_rec(root, 0, &mut seen, &mut phrases);
        LzFactorization { phrases }
    }

    fn lz_rec(
        &self,
        id: NodeId,
        pos: u64,
        seen: &mut BTreeMap<NodeId, u64>,
        phrases: &mut Vec<LzPhrase>,
    ) {
        if self.len_of(id) > 1 {
            if let Some(&p) = seen.get(&id) {
                phrases
                    .push(LzPhrase::Copy { src: p as usize + 1, len: self.len_of(id) as usize });
                return;
            }
            seen.insert(id, pos);
        }
        match self.node(id).kind {
            NodeKind::Term(s) => phrases.push(LzPhrase::Literal(s)),
            NodeKind::Bin(a, b) => {
                self.lz_rec(a, pos, seen, phrases);
                self.lz_rec(b, pos + self.len_of(a), seen, phrases);
            }
            NodeKind::Run(u, e) => {
                self.lz_rec(u, pos, seen, phrases);
                let ul = self.len_of(u);
                phrases.push(LzPhrase::Copy {
                    src: pos as usize + 1,
                    len: (ul * (e as u64 - 1)) as usize,
                });
            }
        }
    }

    /// Builds a tree for an LZ-like factorization with the forest-stack
    /// builder. Returns the root (`None` for the empty string).
    fn build_sequence(&mut self, f: &LzFactorization) -> Result<Option<NodeId>, BuildError> {
        if !f.is_valid() {
            return Err(BuildError::MalformedFactorization);
        }
        let mut stack: Vec<NodeId> = Vec::new();
        let mut built = 0u64;
        for p in &f.phrases {
            match *p {
                LzPhrase::Literal(c) => {
                    let t = self.term(c);
                    self.push_piece(&mut stack, t);
                    built += 1;
                }
                LzPhrase::Copy { src, len } => {
                    let s = (src - 1) as u64;
                    let len = len as u64;
                    if s + len <= built {
                        let pieces = self.forest_slice(&stack, s, s + len);
                        for pc in pieces {
                            self.push_piece(&mut stack, pc);
                        }
                    } else {
                        // Self-referential copy: periodic extension with
                        // period `built - s`.
                        let q = built - s;
                        let upieces = self.forest_slice(&stack, s, built);
                        let u = self.assemble(upieces);
                        let reps = len / q;
                        let rem = len % q;
                        if reps >= 2 {
                            let r = self.run(u, reps as u32);
                            self.push_piece(&mut stack, r);
                        } else if reps == 1 {
                            self.push_piece(&mut stack, u);
                        }
                        if rem > 0 {
                            let tail = self.node_slice(u, 0, rem);
                            for pc in tail {
                                self.push_piece(&mut stack, pc);
                            }
                        }
                    }
                    built += len;
                }
            }
        }
        Ok(self.collapse(&mut stack))
    }

    /// Slices `[lo..hi)` out of the current forest stack.
    fn forest_slice(&mut self, stack: &[NodeId], lo: u64, hi: u64) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut at = 0u64;
        let ids: Vec<NodeId> = stack.to_vec();
        for id in ids {
            let end = at + self.len_of(id);
            if end > lo && at < hi {
                self.collect(id, at, lo, hi, &mut out);
            }
            at = end;
        }
        out
    }

    fn node_slice(&mut self, id: NodeId, lo: u64, hi: u64) -> Vec<NodeId> {
        let mut out = Vec::new();
        if lo < hi {
            self.collect(id, 0, lo, hi, &mut out);
        }
        out
    }

    fn assemble(&mut self, pieces: Vec<NodeId>) -> NodeId {
        debug_assert!(!pieces.is_empty());
        let mut stack = Vec::new();
        for p in pieces {
            self.push_piece(&mut stack, p);
        }
        self.collapse(&mut stack).unwrap()
    }
}

/// Which string a factorization describes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Direction {
    Forward,
    Reverse,
}

/// The compressed representation `D(X)`: grammars for `X` and its
/// reverse, answering length, access, extract, forward and reverse LCE,
/// LZ conversion, and concatenation.
#[derive(Clone, Debug)]
pub struct CompressedString {
    fwd: Grammar,
    root_fwd: Option<NodeId>,
    rev: Grammar,
    root_rev: Option<NodeId>,
}

impl CompressedString {
    /// `D(ε)`.
    pub fn empty(basis: FpBasis) -> CompressedString {
        CompressedString {
            fwd: Grammar::new(basis),
            root_fwd: None,
            rev: Grammar::new(basis),
            root_rev: None,
        }
    }

    /// Builds `D(X)` from an LZ-like factorization of `X`
    /// (`Direction::Forward`) or of `reverse(X)` (`Direction::Reverse`).
    pub fn build_from_lz_like(
        f: &LzFactorization,
        dir: Direction,
        basis: FpBasis,
    ) -> Result<CompressedString, BuildError> {
        let mut g = Grammar::new(basis);
        let root = g.build_sequence(f)?;
        let mut out = match root {
            None => CompressedString::empty(basis),
            Some(r) => {
                let mut other = Grammar::new(basis);
                let ro = g.mirror_into(r, &mut other);
                match dir {
                    Direction::Forward => CompressedString {
                        fwd: g,
                        root_fwd: Some(r),
                        rev: other,
                        root_rev: Some(ro),
                    },
                    Direction::Reverse => CompressedString {
                        fwd: other,
                        root_fwd: Some(ro),
                        rev: g,
                        root_rev: Some(r),
                    },
                }
            }
        };
        out.rebalance_if_needed();
        Ok(out)
    }

    /// Builds `D(X)` from the plain string (trivial length-1 phrases).
    pub fn from_syms(s: &[Sym], basis: FpBasis) -> CompressedString {
        let f = LzFactorization { phrases: s.iter().map(|&c| LzPhrase::Literal(c)).collect() };
        CompressedString::build_from_lz_like(&f, Direction::Forward, basis).unwrap()
    }

    pub fn basis(&self) -> FpBasis {
        self.fwd.basis()
    }

    pub fn len(&self) -> u64 {
        self.root_fwd.map_or(0, |r| self.fwd.len_of(r))
    }

    pub fn is_empty(&self) -> bool {
        self.root_fwd.is_none()
    }

    /// Total node count of both grammars; the size measure used by the
    /// space-discipline probes.
    pub fn grammar_size(&self) -> usize {
        self.fwd.node_count() + self.rev.node_count()
    }

    pub fn height(&self) -> u32 {
        self.root_fwd.map_or(0, |r| self.fwd.height_of(r))
    }

    /// `X[i]`, 1-based.
    pub fn access(&self, i: u64) -> Sym {
        assert!(i >= 1 && i <= self.len(), "access out of range");
        self.fwd.access(self.root_fwd.unwrap(), i - 1)
    }

    pub fn expand(&self) -> Vec<Sym> {
        self.fwd.expand(self.root_fwd)
    }

    pub fn full_fp(&self) -> Fingerprint {
        match self.root_fwd {
            None => self.basis().empty(),
            Some(r) => self.fwd.fp_of(r),
        }
    }

    /// Fingerprint of `X[i..j]` (1-based, inclusive; empty when `j < i`).
    pub fn fp_range(&self, i: u64, j: u64) -> Fingerprint {
        if j < i {
            return self.basis().empty();
        }
        assert!(i >= 1 && j <= self.len());
        self.fwd.range_fp(self.root_fwd.unwrap(), i - 1, j)
    }

    /// `D(X[i..j])` (1-based, inclusive; `j < i` yields `D(ε)`).
    pub fn extract(&mut self, i: u64, j: u64) -> CompressedString {
        if j < i {
            return CompressedString::empty(self.basis());
        }
        assert!(i >= 1 && j <= self.len(), "extract out of range");
        let basis = self.basis();
        let root = self.root_fwd.unwrap();
        let pieces = self.fwd.extract_forest(root, i - 1, j);
        let sub = self.fwd.assemble(pieces);
        let mut fwd = Grammar::new(basis);
        let rf = self.fwd.compact_into(sub, &mut fwd);
        let mut rev = Grammar::new(basis);
        let rr = self.fwd.mirror_into(sub, &mut rev);
        let mut out = CompressedString { fwd, root_fwd: Some(rf), rev, root_rev: Some(rr) };
        out.rebalance_if_needed();
        out
    }

    /// `D(A · B)`.
    pub fn concat(a: &CompressedString, b: &CompressedString) -> CompressedString {
        assert_eq!(a.basis(), b.basis(), "fingerprint basis mismatch");
        if a.is_empty() {
            return b.clone();
        }
        if b.is_empty() {
            return a.clone();
        }
        let mut fa = a.fwd.to_lz_like(a.root_fwd.unwrap());
        let fb = b.fwd.to_lz_like(b.root_fwd.unwrap());
        let shift = a.len() as usize;
        fa.phrases.extend(fb.phrases.into_iter().map(|p| match p {
            LzPhrase::Literal(c) => LzPhrase::Literal(c),
            LzPhrase::Copy { src, len } => LzPhrase::Copy { src: src + shift, len },
        }));
        CompressedString::build_from_lz_like(&fa, Direction::Forward, a.basis()).unwrap()
    }

    fn rebalance_if_needed(&mut self) {
        let n = self.len();
        if n == 0 {
            return;
        }
        if self.height() > height_cap(n) {
            let f = self.fwd.to_lz_like(self.root_fwd.unwrap());
            *self = CompressedString::build_from_lz_like(&f, Direction::Forward, self.basis())
                .unwrap();
        }
    }

    /// `LCE(X[i..], X[j..])`, 1-based.
    pub fn lce_forward(&self, i: u64, j: u64) -> u64 {
        let n = self.len();
        assert!(i >= 1 && i <= n && j >= 1 && j <= n, "lce index out of range");
        lce_generic(&self.fwd, self.root_fwd.unwrap(), i - 1, &self.fwd, self.root_fwd.unwrap(), j - 1)
    }

    /// `LCE(reverse(X)[i..], reverse(X)[j..])`, 1-based.
    pub fn lce_reverse(&self, i: u64, j: u64) -> u64 {
        let n = self.len();
        assert!(i >= 1 && i <= n && j >= 1 && j <= n, "lce index out of range");
        lce_generic(&self.rev, self.root_rev.unwrap(), i - 1, &self.rev, self.root_rev.unwrap(), j - 1)
    }

    pub(crate) fn fwd_parts(&self) -> (&Grammar, Option<NodeId>) {
        (&self.fwd, self.root_fwd)
    }

    /// Exports the forward grammar and root for serialization.
    pub fn export_fwd(&self) -> (Vec<NodeSpec>, Option<NodeId>) {
        (self.fwd.export_nodes(), self.root_fwd)
    }

    /// Rebuilds from an exported forward grammar (the reverse grammar is
    /// re-derived by mirroring).
    pub fn import_fwd(
        basis: FpBasis,
        specs: &[NodeSpec],
        root: Option<NodeId>,
    ) -> Option<CompressedString> {
        let g = Grammar::import(basis, specs)?;
        match root {
            None => Some(CompressedString::empty(basis)),
            Some(r) => {
                if (r as usize) >= g.node_count() {
                    return None;
                }
                let mut rev = Grammar::new(basis);
                let rr = g.mirror_into(r, &mut rev);
                Some(CompressedString { fwd: g, root_fwd: Some(r), rev, root_rev: Some(rr) })
            }
        }
    }

    pub(crate) fn rev_parts(&self) -> (&Grammar, Option<NodeId>) {
        (&self.rev, self.root_rev)
    }

    /// `LZ(X)`: expansion-backed canonical factorization, with each copy
    /// phrase re-checked against the grammar by one LCE query.
    pub fn to_lz(&self) -> LzFactorization {
        let s = self.expand();
        let f = lz77_factorize(&s);
        self.check_factorization(&f);
        f
    }

    /// `LZ(reverse(X))`.
    pub fn to_lz_reverse(&self) -> LzFactorization {
        let mut s = self.expand();
        s.reverse();
        lz77_factorize(&s)
    }

    fn check_factorization(&self, f: &LzFactorization) {
        let mut pos = 1u64;
        for p in &f.phrases {
            if let LzPhrase::Copy { src, len } = *p {
                assert!(
                    self.lce_forward(src as u64, pos) >= len as u64,
                    "LZ phrase mismatch against grammar"
                );
            }
            pos += p.len() as u64;
        }
    }
}

/// LCE of the suffix of `exp(ra)` at 0-based `ia` against the suffix of
/// `exp(rb)` at `ib`. The grammars must share a basis; they may be the
/// same grammar.
pub fn lce_generic(ga: &Grammar, ra: NodeId, ia: u64, gb: &Grammar, rb: NodeId, ib: u64) -> u64 {
    let la = ga.len_of(ra) - ia;
    let lb = gb.len_of(rb) - ib;
    let max = la.min(lb);
    if max == 0 {
        return 0;
    }
    if ga.len_of(ra) + gb.len_of(rb) <= NAIVE_LCE_LEN {
        let ea = ga.expand(Some(ra));
        let eb = gb.expand(Some(rb));
        let mut l = 0u64;
        while l < max && ea[(ia + l) as usize] == eb[(ib + l) as usize] {
            l += 1;
        }
        return l;
    }
    let agree = |l: u64| -> bool { ga.range_fp(ra, ia, ia + l) == gb.range_fp(rb, ib, ib + l) };
    if agree(max) {
        return max;
    }
    let mut lo = 0u64; // agrees
    let mut step = 1u64;
    while lo + step < max && agree(lo + step) {
        lo += step;
        step *= 2;
    }
    let mut hi = (lo + step).min(max); // disagrees
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if agree(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sym::str_syms;
    use rand::{Rng, SeedableRng};

    fn basis() -> FpBasis {
        FpBasis::fixed()
    }

    fn rand_string(rng: &mut rand_chacha::ChaCha12Rng, n: usize, sigma: u32) -> Vec<Sym> {
        (0..n).map(|_| Sym::chr(rng.gen_range(0..sigma))).collect()
    }

    #[test]
    fn empty_and_uniform() {
        let d = CompressedString::build_from_lz_like(
            &LzFactorization::default(),
            Direction::Forward,
            basis(),
        )
        .unwrap();
        assert_eq!(d.len(), 0);
        let f = lz77_factorize(&str_syms("aaaa"));
        let d = CompressedString::build_from_lz_like(&f, Direction::Forward, basis()).unwrap();
        assert_eq!(d.len(), 4);
        for i in 1..=4 {
            assert_eq!(d.access(i), Sym::byte(b'a'));
        }
    }

    #[test]
    fn malformed_factorization_rejected() {
        let f = LzFactorization {
            phrases: vec![LzPhrase::Literal(Sym::byte(b'a')), LzPhrase::Copy { src: 2, len: 1 }],
        };
        assert_eq!(
            CompressedString::build_from_lz_like(&f, Direction::Forward, basis()).unwrap_err(),
            BuildError::MalformedFactorization
        );
    }

    #[test]
    fn round_trips_random_strings() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(101);
        for _ in 0..200 {
            let n = rng.gen_range(0..=256);
            let sigma = rng.gen_range(1..5);
            let s = rand_string(&mut rng, n, sigma);
            let f = lz77_factorize(&s);
            let d = CompressedString::build_from_lz_like(&f, Direction::Forward, basis()).unwrap();
            assert_eq!(d.expand(), s);
            assert_eq!(d.len() as usize, s.len());
            let mut rs = s.clone();
            rs.reverse();
            let fr = lz77_factorize(&rs);
            let dr = CompressedString::build_from_lz_like(&fr, Direction::Reverse, basis()).unwrap();
            assert_eq!(dr.expand(), s);
            if n > 0 {
                assert!(d.height() <= height_cap(d.len()));
            }
        }
    }

    #[test]
    fn access_extract_concat_roundtrip() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(102);
        for _ in 0..100 {
            let n = rng.gen_range(1..=128);
            let s = rand_string(&mut rng, n, 3);
            let f = lz77_factorize(&s);
            let mut d = CompressedString::build_from_lz_like(&f, Direction::Forward, basis()).unwrap();
            let i = rng.gen_range(1..=n as u64);
            assert_eq!(d.access(i), s[i as usize - 1]);
            let j = rng.gen_range(i..=n as u64);
            let sub = d.extract(i, j);
            assert_eq!(sub.expand(), s[(i - 1) as usize..j as usize].to_vec());
            let split = rng.gen_range(0..=n as u64);
            let left = d.extract(1, split);
            let right = d.extract(split + 1, n as u64);
            let whole = CompressedString::concat(&left, &right);
            assert_eq!(whole.expand(), s);
        }
    }

    #[test]
    fn concat_with_empty_is_identity() {
        let d = CompressedString::from_syms(&str_syms("abba"), basis());
        let e = CompressedString::empty(basis());
        assert_eq!(CompressedString::concat(&e, &d).expand(), d.expand());
        assert_eq!(CompressedString::concat(&d, &e).expand(), d.expand());
        let g = CompressedString::from_syms(&str_syms("ba"), basis());
        let h =
            CompressedString::concat(&CompressedString::from_syms(&str_syms("ab"), basis()), &g);
        assert_eq!(h.expand(), str_syms("abba"));
    }

    #[test]
    fn random_concats_match_plain() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(103);
        for _ in 0..100 {
            let na = rng.gen_range(0..=128);
            let nb = rng.gen_range(0..=128);
            let a = rand_string(&mut rng, na, 2);
            let b = rand_string(&mut rng, nb, 2);
            let da = CompressedString::from_syms(&a, basis());
            let db = CompressedString::from_syms(&b, basis());
            let dc = CompressedString::concat(&da, &db);
            assert_eq!(dc.expand(), [a, b].concat());
        }
    }

    #[test]
    fn lce_matches_naive() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(104);
        for _ in 0..40 {
            let n = rng.gen_range(1..=64);
            let s = rand_string(&mut rng, n, 2);
            let d = CompressedString::from_syms(&s, basis());
            let mut rs = s.clone();
            rs.reverse();
            for i in 1..=n as u64 {
                for j in 1..=n as u64 {
                    let naive = |v: &Vec<Sym>| {
                        let mut l = 0u64;
                        while (i + l) <= n as u64
                            && (j + l) <= n as u64
                            && v[(i + l - 1) as usize] == v[(j + l - 1) as usize]
                        {
                            l += 1;
                        }
                        l
                    };
                    assert_eq!(d.lce_forward(i, j), naive(&s), "fwd lce at ({i},{j}) of {s:?}");
                    assert_eq!(d.lce_reverse(i, j), naive(&rs));
                }
            }
        }
    }

    #[test]
    fn lce_on_long_strings_uses_fingerprints() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(105);
        let mut s = Vec::new();
        for i in 0..2048usize {
            s.push(Sym::chr((i % 3) as u32));
        }
        for _ in 0..5 {
            let i = rng.gen_range(0..s.len());
            s[i] = Sym::chr(7);
        }
        let d = CompressedString::from_syms(&s, basis());
        for _ in 0..200 {
            let i = rng.gen_range(1..=s.len() as u64);
            let j = rng.gen_range(1..=s.len() as u64);
            let mut l = 0u64;
            while (i + l) <= s.len() as u64
                && (j + l) <= s.len() as u64
                && s[(i + l - 1) as usize] == s[(j + l - 1) as usize]
            {
                l += 1;
            }
            assert_eq!(d.lce_forward(i, j), l);
        }
    }

    #[test]
    fn to_lz_matches_direct_factorization() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(106);
        let d = CompressedString::from_syms(&str_syms("abab"), basis());
        let f = d.to_lz();
        assert_eq!(f.phrases.len(), 3);
        assert_eq!(d.lce_forward(1, 3), 2);
        for _ in 0..50 {
            let n = rng.gen_range(0..=96);
            let s = rand_string(&mut rng, n, 2);
            let d = CompressedString::from_syms(&s, basis());
            assert_eq!(d.to_lz(), lz77_factorize(&s));
            let mut rs = s.clone();
            rs.reverse();
            assert_eq!(d.to_lz_reverse(), lz77_factorize(&rs));
        }
    }

    #[test]
    fn compressed_inputs_stay_compressed() {
        let mut s = Vec::new();
        for _ in 0..4096usize {
            s.extend_from_slice(&str_syms("ab"));
        }
        let f = lz77_factorize(&s);
        assert!(f.phrases.len() <= 4);
        let d = CompressedString::build_from_lz_like(&f, Direction::Forward, basis()).unwrap();
        assert_eq!(d.len(), 8192);
        assert!(d.grammar_size() < 200, "grammar blew up: {}", d.grammar_size());
        assert_eq!(d.access(8192), Sym::byte(b'b'));
        assert_eq!(d.lce_forward(1, 3), 8190);
        // Extract of a huge periodic slice stays small too.
        let mut d2 = d.clone();
        let sub = d2.extract(3, 8000);
        assert!(sub.grammar_size() < 400);
        assert_eq!(sub.len(), 7998);
    }
}

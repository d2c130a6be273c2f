//! Edit distance alignments: classification, greedy and quasi-greedy
//! predicates, induced alignments, zips, products, and the exhaustive
//! enumerators used as ground truth for the encoding machinery.

use crate::config::ENUM_GUARD;
use crate::sym::Sym;
use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

/// A monotone sequence of pairs from `(1,1)` to `(|X|+1, |Y|+1)` with
/// steps in `{(1,1), (1,0), (0,1)}`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Alignment {
    pub pairs: Vec<(u32, u32)>,
}

/// Role of one alignment element with respect to the aligned strings.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Role {
    Match,
    Substitute,
    DeleteX,
    DeleteY,
}

/// Per-element classification of an alignment.
#[derive(Clone, Debug)]
pub struct Classification {
    /// Role of element `t` for `t` in `[1..m)`; the final element has none.
    pub roles: Vec<Role>,
    /// Elements whose characters match (pairs `(x_t, y_t)`).
    pub matches: Vec<(u32, u32)>,
    /// The remaining elements, including the final one.
    pub breakpoints: Vec<(u32, u32)>,
    /// Deletions plus substitutions.
    pub cost: usize,
}

impl Alignment {
    /// The alignment matching two equal-length prefixes diagonally.
    pub fn diagonal(n: usize) -> Alignment {
        Alignment { pairs: (1..=n as u32 + 1).map(|i| (i, i)).collect() }
    }

    pub fn is_valid(&self, x_len: usize, y_len: usize) -> bool {
        if self.pairs.is_empty()
            || self.pairs[0] != (1, 1)
            || *self.pairs.last().unwrap() != (x_len as u32 + 1, y_len as u32 + 1)
        {
            return false;
        }
        self.pairs.windows(2).all(|w| {
            let (dx, dy) = (w[1].0 as i64 - w[0].0 as i64, w[1].1 as i64 - w[0].1 as i64);
            matches!((dx, dy), (1, 1) | (1, 0) | (0, 1))
        })
    }

    pub fn width(&self) -> usize {
        self.pairs.iter().map(|&(x, y)| x.abs_diff(y) as usize).max().unwrap_or(0)
    }

    pub fn cost(&self, x: &[Sym], y: &[Sym]) -> usize {
        self.classify(x, y).cost
    }

    /// Splits the elements into matches and breakpoints and derives the
    /// cost. The alignment must be valid for `(x, y)`.
    pub fn classify(&self, x: &[Sym], y: &[Sym]) -> Classification {
        assert!(self.is_valid(x.len(), y.len()), "invalid alignment for these strings");
        let m = self.pairs.len();
        let mut roles = Vec::with_capacity(m - 1);
        let mut matches = Vec::new();
        let mut breakpoints = Vec::new();
        let mut cost = 0usize;
        for t in 0..m - 1 {
            let (x0, y0) = self.pairs[t];
            let (x1, y1) = self.pairs[t + 1];
            let role = match (x1 - x0, y1 - y0) {
                (1, 1) => {
                    if x[x0 as usize - 1] == y[y0 as usize - 1] {
                        Role::Match
                    } else {
                        Role::Substitute
                    }
                }
                (1, 0) => Role::DeleteX,
                _ => Role::DeleteY,
            };
            if role == Role::Match {
                matches.push((x0, y0));
            } else {
                cost += 1;
                breakpoints.push((x0, y0));
            }
            roles.push(role);
        }
        breakpoints.push(self.pairs[m - 1]);
        Classification { roles, matches, breakpoints, cost }
    }

    /// Greedy: every breakpoint inside the character grid sits on a pair
    /// of distinct characters.
    pub fn is_greedy(&self, x: &[Sym], y: &[Sym]) -> bool {
        self.classify(x, y).breakpoints.iter().all(|&(bx, by)| {
            bx as usize > x.len()
                || by as usize > y.len()
                || x[bx as usize - 1] != y[by as usize - 1]
        })
    }

    /// Quasi-greedy: greedy except that a prefix of one of the strings may
    /// be deleted wholesale. Both symmetric witnesses are checked.
    pub fn is_quasi_greedy(&self, x: &[Sym], y: &[Sym]) -> bool {
        let breakpoints = self.classify(x, y).breakpoints;
        let grid_ok = |lo_x: u32, lo_y: u32| {
            breakpoints.iter().all(|&(bx, by)| {
                bx < lo_x
                    || by < lo_y
                    || bx as usize > x.len()
                    || by as usize > y.len()
                    || x[bx as usize - 1] != y[by as usize - 1]
            })
        };
        // Largest delta with (delta, 1) on the path gives the weakest
        // form of each witness.
        let dx = self.pairs.iter().filter(|&&(_, yt)| yt == 1).map(|&(xt, _)| xt).max().unwrap();
        let dy = self.pairs.iter().filter(|&&(xt, _)| xt == 1).map(|&(_, yt)| yt).max().unwrap();
        grid_ok(dx, 1) || grid_ok(1, dy)
    }

    /// The alignment induced on `X[x0..x1)` and `Y[y0..y1)` (1-based,
    /// half-open), as an alignment of the two fragments.
    pub fn induced(&self, x0: u32, x1: u32, y0: u32, y1: u32) -> Alignment {
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for &(xt, yt) in &self.pairs {
            let px = xt.clamp(x0, x1) - x0 + 1;
            let py = yt.clamp(y0, y1) - y0 + 1;
            if pairs.last() != Some(&(px, py)) {
                pairs.push((px, py));
            }
        }
        Alignment { pairs }
    }

    /// Match pairs as a set.
    pub fn match_set(&self, x: &[Sym], y: &[Sym]) -> BTreeSet<(u32, u32)> {
        self.classify(x, y).matches.into_iter().collect()
    }
}

/// The zip alignment of two synchronized complete walks: pair the steps
/// and drop consecutive repeats.
pub fn zip_walks(wx: &[u64], wy: &[u64]) -> Alignment {
    assert_eq!(wx.len(), wy.len(), "walks must have the same step count");
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for (&a, &b) in wx.iter().zip(wy) {
        let p = (a as u32, b as u32);
        if pairs.last() != Some(&p) {
            pairs.push(p);
        }
    }
    Alignment { pairs }
}

/// Whether `a_xz` is a product of `a_xy` and `a_yz`: every pair `(x, z)`
/// of `a_xz` factors through some `y`.
pub fn is_product(a_xz: &Alignment, a_xy: &Alignment, a_yz: &Alignment) -> bool {
    let xy: BTreeSet<(u32, u32)> = a_xy.pairs.iter().copied().collect();
    let yz: BTreeSet<(u32, u32)> = a_yz.pairs.iter().copied().collect();
    let ys: Vec<u32> = {
        let mut v: Vec<u32> = a_xy.pairs.iter().map(|&(_, y)| y).collect();
        v.dedup();
        v
    };
    a_xz.pairs.iter().all(|&(x, z)| {
        ys.iter().any(|&y| xy.contains(&(x, y)) && yz.contains(&(y, z)))
    })
}

/// Which family an enumeration produces.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EnumVariant {
    /// Greedy alignments of cost at most `k`.
    Greedy,
    /// Quasi-greedy alignments of cost at most `k`.
    QuasiGreedy,
    /// All alignments of cost at most `k`.
    All,
}

/// Exhaustive enumeration result: the family itself plus the common
/// matches and the breakpoint union.
#[derive(Clone, Debug)]
pub struct GaSummary {
    pub alignments: Vec<Alignment>,
    /// Pairs matched by every member (`M_k`, resp. `qM_k`).
    pub common_matches: BTreeSet<(u32, u32)>,
    /// Union of the members' breakpoint sets (`B_k`).
    pub breakpoint_union: BTreeSet<(u32, u32)>,
}

/// Enumerates the requested family by a depth-first search over the edit
/// grid with budget pruning; greedy variants force a match whenever the
/// current characters agree. Guarded to grids of side at most
/// [`ENUM_GUARD`].
pub fn enumerate_ga(x: &[Sym], y: &[Sym], k: usize, variant: EnumVariant) -> GaSummary {
    assert!(
        x.len() <= ENUM_GUARD && y.len() <= ENUM_GUARD,
        "exhaustive enumeration guard exceeded"
    );
    let mut out = Vec::new();
    match variant {
        EnumVariant::Greedy => dfs(x, y, k, true, &mut vec![(1, 1)], &mut out),
        EnumVariant::All => dfs(x, y, k, false, &mut vec![(1, 1)], &mut out),
        EnumVariant::QuasiGreedy => {
            dfs(x, y, k, false, &mut vec![(1, 1)], &mut out);
            out.retain(|a| a.is_quasi_greedy(x, y));
        }
    }
    summarize(x, y, out)
}

fn summarize(x: &[Sym], y: &[Sym], alignments: Vec<Alignment>) -> GaSummary {
    let mut common: Option<BTreeSet<(u32, u32)>> = None;
    let mut union = BTreeSet::new();
    for a in &alignments {
        let c = a.classify(x, y);
        let m: BTreeSet<(u32, u32)> = c.matches.into_iter().collect();
        common = Some(match common {
            None => m,
            Some(prev) => prev.intersection(&m).copied().collect(),
        });
        union.extend(c.breakpoints);
    }
    GaSummary {
        alignments,
        common_matches: common.unwrap_or_default(),
        breakpoint_union: union,
    }
}

fn dfs(
    x: &[Sym],
    y: &[Sym],
    budget: usize,
    greedy: bool,
    path: &mut Vec<(u32, u32)>,
    out: &mut Vec<Alignment>,
) {
    let &(i, j) = path.last().unwrap();
    let (n, m) = (x.len() as u32, y.len() as u32);
    // Remaining length skew is a lower bound on the remaining cost.
    if ((n + 1 - i).abs_diff(m + 1 - j)) as usize > budget {
        return;
    }
    if i == n + 1 && j == m + 1 {
        out.push(Alignment { pairs: path.clone() });
        return;
    }
    let chars_equal =
        i <= n && j <= m && x[i as usize - 1] == y[j as usize - 1];
    if i <= n && j <= m && (chars_equal || budget > 0) {
        path.push((i + 1, j + 1));
        dfs(x, y, budget - usize::from(!chars_equal), greedy, path, out);
        path.pop();
    }
    if greedy && chars_equal {
        return; // a greedy alignment must take the match
    }
    if budget > 0 {
        if i <= n {
            path.push((i + 1, j));
            dfs(x, y, budget - 1, greedy, path, out);
            path.pop();
        }
        if j <= m {
            path.push((i, j + 1));
            dfs(x, y, budget - 1, greedy, path, out);
            path.pop();
        }
    }
}

//! Reference dynamic programs. These are the ground truth the rest of the
//! crate is tested against; they favour clarity over speed and are meant
//! for desk-scale inputs.

use crate::sym::Sym;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

/// Exact edit distance by the full-matrix dynamic program.
pub fn edit_distance_dp(x: &[Sym], y: &[Sym]) -> usize {
    let (n, m) = (x.len(), y.len());
    let mut row: Vec<usize> = (0..=m).collect();
    for i in 1..=n {
        let mut diag = row[0];
        row[0] = i;
        for j in 1..=m {
            let up = row[j];
            row[j] = (diag + usize::from(x[i - 1] != y[j - 1])).min(up + 1).min(row[j - 1] + 1);
            diag = up;
        }
    }
    row[m]
}

/// `min(cap + 1, ed(x, y))` by a banded dynamic program.
pub fn edit_distance_capped(x: &[Sym], y: &[Sym], cap: usize) -> usize {
    let (n, m) = (x.len(), y.len());
    if n.abs_diff(m) > cap {
        return cap + 1;
    }
    let big = cap + 1;
    // Band of diagonals j - i in [-cap .. cap].
    let width = 2 * cap + 1;
    let mut row = vec![big; width];
    let idx = |i: usize, j: usize| -> Option<usize> {
        let d = j as isize - i as isize;
        if d < -(cap as isize) || d > cap as isize {
            None
        } else {
            Some((d + cap as isize) as usize)
        }
    };
    for (j, c) in row.iter_mut().enumerate().take(width) {
        let jj = j as isize - cap as isize;
        if (0..=m as isize).contains(&jj) {
            *c = jj as usize;
        }
    }
    for i in 1..=n {
        let prev = row.clone();
        for c in row.iter_mut() {
            *c = big;
        }
        for j in 0..=m {
            let Some(w) = idx(i, j) else { continue };
            let mut v = big;
            if let Some(wu) = idx(i - 1, j) {
                v = v.min(prev[wu].saturating_add(1));
            }
            if j > 0 {
                if let Some(wd) = idx(i - 1, j - 1) {
                    v = v.min(prev[wd].saturating_add(usize::from(x[i - 1] != y[j - 1])));
                }
                if let Some(wl) = idx(i, j - 1) {
                    v = v.min(row[wl].saturating_add(1));
                }
            }
            row[w] = v.min(big);
        }
    }
    match idx(n, m) {
        Some(w) => row[w].min(big),
        None => big,
    }
}

/// Right endpoints of the `k`-edit occurrences of `p` in `t` (1-based),
/// each mapped to the smallest `k'` with an occurrence of distance `k'`
/// ending there. Computed by the dynamic program with a free starting
/// position in the text.
pub fn occ_k_edits_naive(p: &[Sym], t: &[Sym], k: usize) -> BTreeMap<usize, usize> {
    let m = p.len();
    // col[j] = min over start l of ed(p[1..j], t[l..r]) for the current r.
    let mut col: Vec<usize> = (0..=m).collect();
    let mut out = BTreeMap::new();
    for (r, &c) in t.iter().enumerate() {
        let mut next = vec![0usize; m + 1];
        for j in 1..=m {
            next[j] = (col[j - 1] + usize::from(p[j - 1] != c))
                .min(col[j] + 1)
                .min(next[j - 1] + 1);
        }
        col = next;
        if col[m] <= k {
            out.insert(r + 1, col[m]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sym::str_syms;
    use rand::{Rng, SeedableRng};

    #[test]
    fn textbook_distances() {
        assert_eq!(edit_distance_dp(&[], &str_syms("abc")), 3);
        assert_eq!(edit_distance_dp(&str_syms("kitten"), &str_syms("sitting")), 3);
        // The worked pair: one deletion turns the first into the second.
        assert_eq!(
            edit_distance_dp(&str_syms("abababcbcbc"), &str_syms("abbabcbcbc")),
            1
        );
        // DP value for this pair must not exceed the exhibited cost-4 alignment.
        assert!(edit_distance_dp(&str_syms("abbaabcb"), &str_syms("acabaabab")) <= 4);
    }

    #[test]
    fn metric_on_small_binary_strings() {
        let strings: Vec<Vec<Sym>> = (0..=4u32)
            .flat_map(|n| (0..(1u32 << n)).map(move |bits| {
                (0..n).map(|i| Sym::chr((bits >> i) & 1)).collect()
            }))
            .collect();
        for x in &strings {
            assert_eq!(edit_distance_dp(x, x), 0);
            for y in &strings {
                let dxy = edit_distance_dp(x, y);
                assert_eq!(dxy, edit_distance_dp(y, x));
                assert_eq!(dxy == 0, x == y);
                for z in &strings {
                    assert!(dxy <= edit_distance_dp(x, z) + edit_distance_dp(z, y));
                }
            }
        }
    }

    #[test]
    fn capped_matches_full() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        for _ in 0..400 {
            let n = rng.gen_range(0..20);
            let m = rng.gen_range(0..20);
            let x: Vec<Sym> = (0..n).map(|_| Sym::chr(rng.gen_range(0..3))).collect();
            let y: Vec<Sym> = (0..m).map(|_| Sym::chr(rng.gen_range(0..3))).collect();
            for cap in 0..6 {
                assert_eq!(
                    edit_distance_capped(&x, &y, cap),
                    edit_distance_dp(&x, &y).min(cap + 1)
                );
            }
        }
    }

    #[test]
    fn occurrence_endpoints() {
        let occ = occ_k_edits_naive(&str_syms("a"), &str_syms("aaa"), 0);
        assert_eq!(occ.into_iter().collect::<Vec<_>>(), vec![(1, 0), (2, 0), (3, 0)]);
        let occ = occ_k_edits_naive(&str_syms("ab"), &str_syms("b"), 1);
        assert_eq!(occ.into_iter().collect::<Vec<_>>(), vec![(1, 1)]);
    }

    #[test]
    fn occurrences_match_per_substring_dp() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(29);
        for _ in 0..60 {
            let m = rng.gen_range(1..6);
            let n = rng.gen_range(0..14);
            let p: Vec<Sym> = (0..m).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
            let t: Vec<Sym> = (0..n).map(|_| Sym::chr(rng.gen_range(0..2))).collect();
            let k = rng.gen_range(0..3);
            let got = occ_k_edits_naive(&p, &t, k);
            for r in 1..=n {
                let best = (0..r + 1)
                    .map(|l| edit_distance_dp(&p, &t[l..r]))
                    .min()
                    .unwrap();
                match got.get(&r) {
                    Some(&v) => assert_eq!(v, best),
                    None => assert!(best > k),
                }
            }
        }
    }
}

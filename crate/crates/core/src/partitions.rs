//! Segmented partial pair partitions, crossing numbers and inversion counts.
//! Indices are 1-based throughout.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentShape {
    sizes: Vec<usize>,
}

impl SegmentShape {
    /// Returns `None` when the shape is empty or has a zero-size segment.
    pub fn new(sizes: &[usize]) -> Option<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return None;
        }
        Some(Self { sizes: sizes.to_vec() })
    }

    /// Shape that drops empty segments; `None` if nothing remains.
    pub fn nonempty(sizes: &[usize]) -> Option<Self> {
        let s: Vec<usize> = sizes.iter().copied().filter(|&x| x > 0).collect();
        Self::new(&s)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Segment number (0-based) of a 1-based index.
    pub fn segment_of(&self, idx: usize) -> usize {
        let mut acc = 0;
        for (s, &n) in self.sizes.iter().enumerate() {
            acc += n;
            if idx <= acc {
                return s;
            }
        }
        panic!("index {idx} outside shape of total {}", self.total());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPartition {
    pub pairs: Vec<(usize, usize)>,
    pub singletons: Vec<usize>,
    pub shape: SegmentShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Crossings {
    pub c: usize,
    pub d: usize,
    pub cr: usize,
}

impl PairPartition {
    /// Checks coverage, distinctness, ordering and the no-pair-inside-a-segment rule.
    pub fn is_valid(&self) -> bool {
        let n = self.shape.total();
        let mut seen = vec![false; n + 1];
        let mut mark = |i: usize| -> bool {
            if i == 0 || i > n || seen[i] {
                return false;
            }
            seen[i] = true;
            true
        };
        for &(l, r) in &self.pairs {
            if l >= r || !mark(l) || !mark(r) {
                return false;
            }
            if self.shape.segment_of(l) == self.shape.segment_of(r) {
                return false;
            }
        }
        for &s in &self.singletons {
            if !mark(s) {
                return false;
            }
        }
        seen[1..].iter().all(|&b| b)
    }

    pub fn crossings(&self) -> Crossings {
        crossing_number(self)
    }

    /// Number of pairs with one end in segment `s1` and the other in `s2`.
    pub fn pairs_between(&self, s1: usize, s2: usize) -> usize {
        self.pairs
            .iter()
            .filter(|&&(l, r)| {
                let (a, b) = (self.shape.segment_of(l), self.shape.segment_of(r));
                (a == s1 && b == s2) || (a == s2 && b == s1)
            })
            .count()
    }
}

impl fmt::Display for PairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cr = self.crossings();
        let pairs: Vec<String> = self.pairs.iter().map(|(l, r)| format!("({l},{r})")).collect();
        let singles: Vec<String> = self.singletons.iter().map(|s| s.to_string()).collect();
        write!(
            f,
            "pairs=[{}] singles=[{}] c={} d={} cr={}",
            pairs.join(","),
            singles.join(","),
            cr.c,
            cr.d,
            cr.cr
        )
    }
}

/// All partitions of the shape into pairs and singletons, with no pair inside
/// a segment. Sorted lexicographically by pair list.
pub fn enumerate_partitions(shape: &SegmentShape) -> Vec<PairPartition> {
    let n = shape.total();
    let seg: Vec<usize> = (1..=n).map(|i| shape.segment_of(i)).collect();
    let mut used = vec![false; n + 1];
    let mut pairs = Vec::new();
    let mut out = Vec::new();

    fn rec(
        i: usize,
        n: usize,
        seg: &[usize],
        used: &mut [bool],
        pairs: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let mut i = i;
        while i <= n && used[i] {
            i += 1;
        }
        if i > n {
            out.push(pairs.clone());
            return;
        }
        used[i] = true;
        // singleton
        rec(i + 1, n, seg, used, pairs, out);
        for j in (i + 1)..=n {
            if !used[j] && seg[j - 1] != seg[i - 1] {
                used[j] = true;
                pairs.push((i, j));
                rec(i + 1, n, seg, used, pairs, out);
                pairs.pop();
                used[j] = false;
            }
        }
        used[i] = false;
    }

    rec(1, n, &seg, &mut used, &mut pairs, &mut out);
    out.sort();
    out.into_iter()
        .map(|pairs| {
            let mut in_pair = vec![false; n + 1];
            for &(l, r) in &pairs {
                in_pair[l] = true;
                in_pair[r] = true;
            }
            let singletons = (1..=n).filter(|&i| !in_pair[i]).collect();
            PairPartition { pairs, singletons, shape: shape.clone() }
        })
        .collect()
}

/// c counts crossing pairs l₁<l₂<r₁<r₂; d counts singletons nested under a pair.
pub fn crossing_number(p: &PairPartition) -> Crossings {
    let mut c = 0;
    for (a, &(l1, r1)) in p.pairs.iter().enumerate() {
        for &(l2, r2) in &p.pairs[a + 1..] {
            if (l1 < l2 && l2 < r1 && r1 < r2) || (l2 < l1 && l1 < r2 && r2 < r1) {
                c += 1;
            }
        }
    }
    let mut d = 0;
    for &(l, r) in &p.pairs {
        d += p.singletons.iter().filter(|&&s| l < s && s < r).count();
    }
    Crossings { c, d, cr: c + d }
}

/// Inversions of a permutation given as a sequence of distinct values.
pub fn inversions_perm(sigma: &[usize]) -> usize {
    let mut inv = 0;
    for i in 0..sigma.len() {
        for j in (i + 1)..sigma.len() {
            if sigma[i] > sigma[j] {
                inv += 1;
            }
        }
    }
    inv
}

/// Σ (i_l − l) for the sorted subset A = {i₁ < … < i_n} (1-based).
pub fn inversions_subset(a: &[usize]) -> usize {
    let mut s = a.to_vec();
    s.sort_unstable();
    s.iter().enumerate().map(|(l, &i)| i - (l + 1)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(s: &[usize]) -> SegmentShape {
        SegmentShape::new(s).unwrap()
    }

    /// Every way of splitting {1..n} into blocks of size ≤ 2, by brute force
    /// over involutions, filtered by the segment rule.
    fn brute_force(sh: &SegmentShape) -> Vec<Vec<(usize, usize)>> {
        let n = sh.total();
        let mut out = Vec::new();
        let mut perm: Vec<usize> = (1..=n).collect();
        fn all_involutions(k: usize, perm: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == perm.len() {
                out.push(perm.clone());
                return;
            }
            for j in k..perm.len() {
                perm.swap(k, j);
                all_involutions(k + 1, perm, out);
                perm.swap(k, j);
            }
        }
        let mut perms = Vec::new();
        all_involutions(0, &mut perm, &mut perms);
        for p in perms {
            let inv = (1..=n).all(|i| p[p[i - 1] - 1] == i);
            if !inv {
                continue;
            }
            let pairs: Vec<(usize, usize)> =
                (1..=n).filter(|&i| p[i - 1] > i).map(|i| (i, p[i - 1])).collect();
            if pairs.iter().all(|&(l, r)| sh.segment_of(l) != sh.segment_of(r)) {
                out.push(pairs);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn small_shapes() {
        assert_eq!(enumerate_partitions(&shape(&[2])).len(), 1);
        let p = enumerate_partitions(&shape(&[1, 1]));
        assert_eq!(p.len(), 2);
        assert!(p[0].pairs.is_empty());
        assert_eq!(p[1].pairs, vec![(1, 2)]);
        let p = enumerate_partitions(&shape(&[1, 1, 1]));
        let got: Vec<_> = p.iter().map(|x| x.pairs.clone()).collect();
        assert_eq!(got, vec![vec![], vec![(1, 2)], vec![(1, 3)], vec![(2, 3)]]);
    }

    #[test]
    fn figure_partition() {
        let p = PairPartition {
            pairs: vec![(2, 7), (4, 9), (8, 10)],
            singletons: vec![1, 3, 5, 6, 11],
            shape: shape(&[4, 4, 3]),
        };
        assert!(p.is_valid());
        assert_eq!(p.crossings(), Crossings { c: 2, d: 5, cr: 7 });
        assert_eq!(
            p.to_string(),
            "pairs=[(2,7),(4,9),(8,10)] singles=[1,3,5,6,11] c=2 d=5 cr=7"
        );
    }

    #[test]
    fn crossing_examples() {
        let p = PairPartition { pairs: vec![(1, 2)], singletons: vec![], shape: shape(&[1, 1]) };
        assert_eq!(p.crossings().cr, 0);
        let p = PairPartition { pairs: vec![(1, 3)], singletons: vec![2], shape: shape(&[1, 1, 1]) };
        assert_eq!(p.crossings(), Crossings { c: 0, d: 1, cr: 1 });
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(inversions_perm(&[1, 2, 3, 4]), 0);
        assert_eq!(inversions_perm(&[5, 4, 3, 2, 1]), 10);
        assert_eq!(inversions_perm(&[2, 1, 3]), 1);
        assert_eq!(inversions_subset(&[1, 2, 3]), 0);
        assert_eq!(inversions_subset(&[3, 4, 5]), 6);
        assert_eq!(inversions_subset(&[1, 3]), 1);
    }

    #[test]
    fn involution_numbers() {
        // partial matchings of k points: 1, 1, 2, 4, 10, 26, 76, 232, 764
        let expected = [1usize, 2, 4, 10, 26, 76, 232, 764];
        for k in 1..=8 {
            let sh = shape(&vec![1; k]);
            assert_eq!(enumerate_partitions(&sh).len(), expected[k - 1], "k={k}");
        }
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for sizes in [vec![2, 2], vec![1, 2, 1], vec![3, 1, 2], vec![2, 2, 2], vec![1, 3, 1, 2]] {
            let sh = shape(&sizes);
            let got: Vec<_> = enumerate_partitions(&sh).into_iter().map(|p| p.pairs).collect();
            assert_eq!(got, brute_force(&sh), "{sizes:?}");
        }
    }

    /// Brute-force crossing count straight from the definition via index scans.
    fn scan_crossings(p: &PairPartition) -> (usize, usize) {
        let n = p.shape.total();
        let partner = |i: usize| p.pairs.iter().find_map(|&(l, r)| {
            if l == i { Some(r) } else if r == i { Some(l) } else { None }
        });
        let mut c = 0;
        let mut d = 0;
        for a in 1..=n {
            for b in (a + 1)..=n {
                for x in (b + 1)..=n {
                    if partner(a) == Some(x) && partner(b).is_none() {
                        d += 1;
                    }
                    for y in (x + 1)..=n {
                        if partner(a) == Some(x) && partner(b) == Some(y) {
                            c += 1;
                        }
                    }
                }
            }
        }
        (c, d)
    }

    fn arb_shape() -> impl Strategy<Value = SegmentShape> {
        prop::collection::vec(1usize..4, 1..5)
            .prop_filter("total ≤ 9", |v| v.iter().sum::<usize>() <= 9)
            .prop_map(|v| SegmentShape::new(&v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn crossings_match_scan(sh in arb_shape()) {
            for p in enumerate_partitions(&sh) {
                prop_assert!(p.is_valid());
                let cr = p.crossings();
                prop_assert_eq!((cr.c, cr.d), scan_crossings(&p));
            }
        }

        #[test]
        fn subset_inversions_match_perm(n in 1usize..6, k in 0usize..5, seed in 0u64..1000) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut all: Vec<usize> = (1..=n + k).collect();
            all.shuffle(&mut rng);
            let mut a = all[..n].to_vec();
            a.sort_unstable();
            let mut rest = all[n..].to_vec();
            rest.sort_unstable();
            let seq: Vec<usize> = a.iter().chain(rest.iter()).copied().collect();
            prop_assert_eq!(inversions_subset(&a), inversions_perm(&seq));
        }
    }
}

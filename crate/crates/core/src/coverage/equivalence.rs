use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::{BehaviorMap, FragmentKey, IndexSubset};
use crate::unionfind::UnionFind;

/// Shared-complement statistics for one fragment pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairEvidence {
    /// Distinct complements observed with both fragments and equal outputs.
    pub agreeing: u32,
    /// Some shared complement produced different outputs.
    pub contradicted: bool,
}

impl PairEvidence {
    pub fn supports(self, k: usize) -> bool {
        !self.contradicted && self.agreeing as usize >= k
    }
}

/// Evidence for every fragment pair of one subset with at least one shared
/// complement, keyed by `(lo_id, hi_id)` packed as `lo << 32 | hi`.
///
/// Pairs are generated through the complement → fragments inverted index,
/// so pairs that never co-occur are never touched.
#[derive(Debug, Clone)]
pub struct EvidenceTable {
    subset: IndexSubset,
    /// Sorted by key.
    pairs: Vec<(u64, PairEvidence)>,
}

pub(crate) fn pair_key(a: u32, b: u32) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ((lo as u64) << 32) | hi as u64
}

fn unpack(key: u64) -> (u32, u32) {
    ((key >> 32) as u32, key as u32)
}

impl EvidenceTable {
    pub fn from_behavior(map: &BehaviorMap) -> Self {
        let mut acc: HashMap<u64, PairEvidence> = HashMap::new();
        for list in map.by_complement() {
            for (i, &(fa, ya)) in list.iter().enumerate() {
                for &(fb, yb) in &list[i + 1..] {
                    let e = acc.entry(pair_key(fa, fb)).or_default();
                    if ya == yb {
                        e.agreeing += 1;
                    } else {
                        e.contradicted = true;
                    }
                }
            }
        }
        let mut pairs: Vec<_> = acc.into_iter().collect();
        pairs.sort_unstable_by_key(|&(k, _)| k);
        EvidenceTable { subset: map.subset(), pairs }
    }

    pub fn subset(&self) -> IndexSubset {
        self.subset
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, a: u32, b: u32) -> Option<PairEvidence> {
        let key = pair_key(a, b);
        self.pairs.binary_search_by_key(&key, |&(k, _)| k).ok().map(|i| self.pairs[i].1)
    }

    /// All co-occurring pairs as `(lo_id, hi_id, evidence)`, in id order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, PairEvidence)> + '_ {
        self.pairs.iter().map(|&(k, e)| {
            let (a, b) = unpack(k);
            (a, b, e)
        })
    }

    /// Largest agreeing count of any uncontradicted pair.
    pub fn max_support(&self) -> u32 {
        self.pairs.iter().filter(|(_, e)| !e.contradicted).map(|(_, e)| e.agreeing).max().unwrap_or(0)
    }
}

/// Functional k-equivalence classes of one subset's fragments.
#[derive(Debug, Clone)]
pub struct EquivalenceIndex<'a> {
    behavior: &'a BehaviorMap,
    evidence: Arc<EvidenceTable>,
    k: usize,
    union_find: UnionFind,
}

impl<'a> EquivalenceIndex<'a> {
    /// Merges every pair with `agreeing >= k` and no contradiction.
    pub fn new(behavior: &'a BehaviorMap, evidence: Arc<EvidenceTable>, k: usize) -> Self {
        assert!(k >= 1, "evidence threshold must be at least 1");
        debug_assert_eq!(behavior.subset(), evidence.subset());
        let mut union_find = UnionFind::new(behavior.fragment_count());
        for (a, b, e) in evidence.iter() {
            if e.supports(k) {
                union_find.union(a, b);
            }
        }
        EquivalenceIndex { behavior, evidence, k, union_find }
    }

    pub fn subset(&self) -> IndexSubset {
        self.behavior.subset()
    }

    pub fn threshold(&self) -> usize {
        self.k
    }

    pub fn behavior(&self) -> &'a BehaviorMap {
        self.behavior
    }

    pub fn evidence(&self) -> &EvidenceTable {
        &self.evidence
    }

    /// Class representative of a fragment id.
    pub fn root(&self, id: u32) -> u32 {
        self.union_find.find_immutable(id)
    }

    /// Class representative of an input's fragment, if the fragment was seen
    /// in training.
    pub fn root_of_input(&self, input: &[crate::task::TokenId]) -> Option<u32> {
        self.behavior.fragment_id_of(input).map(|id| self.root(id))
    }

    pub fn equivalent(&self, a: &FragmentKey, b: &FragmentKey) -> bool {
        match (self.behavior.fragment_id(a), self.behavior.fragment_id(b)) {
            (Some(x), Some(y)) => self.root(x) == self.root(y),
            _ => a == b,
        }
    }

    /// Pairs merged directly (before transitive closure), as fragment ids.
    pub fn merged_pairs(&self) -> Vec<(u32, u32)> {
        self.evidence.iter().filter(|(_, _, e)| e.supports(self.k)).map(|(a, b, _)| (a, b)).collect()
    }

    /// Classes with at least two fragments, each sorted, ordered by first id.
    pub fn classes(&self) -> Vec<Vec<u32>> {
        let mut by_root: HashMap<u32, Vec<u32>> = HashMap::new();
        for id in 0..self.behavior.fragment_count() as u32 {
            by_root.entry(self.root(id)).or_default().push(id);
        }
        let mut classes: Vec<Vec<u32>> = by_root.into_values().filter(|c| c.len() > 1).collect();
        classes.sort_unstable_by_key(|c| c[0]);
        classes
    }
}

/// Equivalence classes at threshold `k` for each behavior map.
pub fn compute_equivalence(maps: &[BehaviorMap], k: usize) -> Vec<EquivalenceIndex<'_>> {
    maps.par_iter()
        .map(|m| EquivalenceIndex::new(m, Arc::new(EvidenceTable::from_behavior(m)), k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::build_behavior_maps;
    use crate::dataset::{Example, Split};
    use crate::task::{tokens, TokenId};

    fn ex(x: &[u32], y: u32) -> Example {
        Example { input: tokens(x), target: TokenId(y), intermediates: vec![], split: Split::Train }
    }

    fn at_12<'a>(eq: &'a [EquivalenceIndex<'a>]) -> &'a EquivalenceIndex<'a> {
        eq.iter().find(|e| e.subset().mask() == 0b011).unwrap()
    }

    #[test]
    fn threshold_boundary() {
        let train = [ex(&[0, 1, 2], 5), ex(&[3, 4, 2], 5)];
        let maps = build_behavior_maps(&train).unwrap();
        let k1 = compute_equivalence(&maps, 1);
        let e = at_12(&k1);
        assert_eq!(e.merged_pairs(), vec![(0, 1)]);
        assert_eq!(e.root(0), e.root(1));
        let k2 = compute_equivalence(&maps, 2);
        assert!(at_12(&k2).merged_pairs().is_empty());
    }

    #[test]
    fn one_contradiction_blocks_merge_at_every_k() {
        // three shared complements: outputs agree on two, disagree on one
        let train = [
            ex(&[0, 1, 0], 5),
            ex(&[3, 4, 0], 5),
            ex(&[0, 1, 1], 6),
            ex(&[3, 4, 1], 6),
            ex(&[0, 1, 2], 7),
            ex(&[3, 4, 2], 8),
        ];
        let maps = build_behavior_maps(&train).unwrap();
        for k in 1..=3 {
            let eq = compute_equivalence(&maps, k);
            let e = at_12(&eq);
            let ev = e.evidence().get(0, 1).unwrap();
            assert_eq!(ev, PairEvidence { agreeing: 2, contradicted: true });
            assert!(e.merged_pairs().is_empty());
        }
    }

    #[test]
    fn merging_is_transitive() {
        // a~b via complement 0, b~c via complement 1; a and c never co-occur
        let train = [ex(&[0, 0, 0], 1), ex(&[1, 1, 0], 1), ex(&[1, 1, 1], 2), ex(&[2, 2, 1], 2)];
        let maps = build_behavior_maps(&train).unwrap();
        let eq = compute_equivalence(&maps, 1);
        let e = at_12(&eq);
        assert_eq!(e.merged_pairs().len(), 2);
        assert_eq!(e.classes(), vec![vec![0, 1, 2]]);
    }
}

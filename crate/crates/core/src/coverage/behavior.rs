use std::collections::HashMap;

use rayon::prelude::*;

use super::{common_arity, CoverageError, FragmentKey, IndexSubset, Input, Projector};
use crate::dataset::Example;
use crate::task::TokenId;

/// For one subset `I`: every training fragment `x_I` with the outputs it
/// produced under each complement it was observed with.
#[derive(Debug, Clone)]
pub struct BehaviorMap {
    pub(crate) projector: Projector,
    fragments: Vec<FragmentKey>,
    fragment_ids: HashMap<FragmentKey, u32>,
    complements: Vec<FragmentKey>,
    complement_ids: HashMap<FragmentKey, u32>,
    /// Per fragment id: (complement id, output), sorted by complement id.
    rows: Vec<Vec<(u32, TokenId)>>,
}

impl BehaviorMap {
    fn build(subset: IndexSubset, n: usize, max_token: u32, data: &[(Input, TokenId)]) -> Self {
        let projector = Projector::new(subset, n, max_token);
        let mut map = BehaviorMap {
            projector,
            fragments: Vec::new(),
            fragment_ids: HashMap::new(),
            complements: Vec::new(),
            complement_ids: HashMap::new(),
            rows: Vec::new(),
        };
        for (x, y) in data {
            let f = intern(&mut map.fragment_ids, &mut map.fragments, map.projector.fragment(x));
            let c = intern(&mut map.complement_ids, &mut map.complements, map.projector.complement(x));
            if f as usize == map.rows.len() {
                map.rows.push(Vec::new());
            }
            map.rows[f as usize].push((c, *y));
        }
        for row in &mut map.rows {
            row.sort_unstable_by_key(|&(c, _)| c);
        }
        map
    }

    pub fn subset(&self) -> IndexSubset {
        self.projector.subset
    }

    pub fn fragment_count(&self) -> usize {
        self.fragments.len()
    }

    pub fn complement_count(&self) -> usize {
        self.complements.len()
    }

    /// Number of distinct (fragment, complement) pairs.
    pub fn entry_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn fragment_key(&self, id: u32) -> &FragmentKey {
        &self.fragments[id as usize]
    }

    pub fn fragment_tokens(&self, id: u32) -> Vec<TokenId> {
        self.fragments[id as usize].tokens(self.projector.inside().len())
    }

    pub fn fragment_id(&self, key: &FragmentKey) -> Option<u32> {
        self.fragment_ids.get(key).copied()
    }

    /// Id of the fragment of `input` at this subset, if it occurs in training.
    pub fn fragment_id_of(&self, input: &[TokenId]) -> Option<u32> {
        self.fragment_id(&self.projector.fragment(input))
    }

    /// (complement id, output) pairs observed for a fragment.
    pub fn behavior(&self, id: u32) -> &[(u32, TokenId)] {
        &self.rows[id as usize]
    }

    /// Observed output for the input with this fragment and complement.
    pub fn lookup(&self, fragment: &[TokenId], complement: &[TokenId]) -> Option<TokenId> {
        let n = fragment.len() + complement.len();
        let mut x = vec![TokenId(0); n];
        let (mut fi, mut ci) = (fragment.iter(), complement.iter());
        for (p, slot) in x.iter_mut().enumerate() {
            *slot = if self.subset().contains(p) { *fi.next()? } else { *ci.next()? };
        }
        let f = self.fragment_id_of(&x)?;
        let c = *self.complement_ids.get(&self.projector.complement(&x))?;
        let row = self.behavior(f);
        row.binary_search_by_key(&c, |&(cc, _)| cc).ok().map(|i| row[i].1)
    }

    /// Inverted index: per complement id, the (fragment id, output) pairs
    /// observed with it, ordered by fragment id.
    pub(crate) fn by_complement(&self) -> Vec<Vec<(u32, TokenId)>> {
        let mut inv: Vec<Vec<(u32, TokenId)>> = vec![Vec::new(); self.complements.len()];
        for (f, row) in self.rows.iter().enumerate() {
            for &(c, y) in row {
                inv[c as usize].push((f as u32, y));
            }
        }
        inv
    }
}

fn intern(ids: &mut HashMap<FragmentKey, u32>, keys: &mut Vec<FragmentKey>, key: FragmentKey) -> u32 {
    if let Some(&id) = ids.get(&key) {
        return id;
    }
    let id = keys.len() as u32;
    ids.insert(key.clone(), id);
    keys.push(key);
    id
}

/// Deduplicated (input, label) pairs in first-occurrence order.
pub(crate) fn labeled_inputs(train: &[Example]) -> Result<Vec<(Input, TokenId)>, CoverageError> {
    if train.is_empty() {
        return Err(CoverageError::EmptyTrain);
    }
    common_arity(train.iter().map(|e| e.input.as_slice()))?;
    let mut seen: HashMap<&[TokenId], TokenId> = HashMap::with_capacity(train.len());
    let mut out = Vec::with_capacity(train.len());
    for e in train {
        match seen.get(e.input.as_slice()) {
            Some(&y) if y != e.target => {
                return Err(CoverageError::ConflictingLabels {
                    input: e.input.iter().map(|t| t.0).collect(),
                    first: y.0,
                    second: e.target.0,
                })
            }
            Some(_) => {}
            None => {
                seen.insert(&e.input, e.target);
                out.push((e.input.clone(), e.target));
            }
        }
    }
    Ok(out)
}

/// One behavior map per nonempty proper subset of positions.
pub fn build_behavior_maps(train: &[Example]) -> Result<Vec<BehaviorMap>, CoverageError> {
    let n = train.first().map(|e| e.input.len()).ok_or(CoverageError::EmptyTrain)?;
    build_behavior_maps_for(train, &IndexSubset::all(n))
}

/// Behavior maps for the given subsets only.
pub fn build_behavior_maps_for(train: &[Example], subsets: &[IndexSubset]) -> Result<Vec<BehaviorMap>, CoverageError> {
    let data = labeled_inputs(train)?;
    let n = data[0].0.len();
    let max_token = data.iter().flat_map(|(x, _)| x.iter()).map(|t| t.0).max().unwrap_or(0);
    Ok(subsets.par_iter().map(|&s| BehaviorMap::build(s, n, max_token, &data)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Split;
    use crate::task::tokens;

    fn ex(x: &[u32], y: u32) -> Example {
        Example { input: tokens(x), target: TokenId(y), intermediates: vec![], split: Split::Train }
    }

    #[test]
    fn single_example_gives_singleton_maps() {
        let maps = build_behavior_maps(&[ex(&[1, 2, 3], 0)]).unwrap();
        assert_eq!(maps.len(), 6);
        for m in &maps {
            assert_eq!(m.fragment_count(), 1);
            assert_eq!(m.behavior(0).len(), 1);
        }
    }

    #[test]
    fn shared_complement() {
        // (x1,x2,x3) and (x1',x2',x3) share the complement x3 at I = {1,2}
        let maps = build_behavior_maps(&[ex(&[0, 1, 2], 5), ex(&[3, 4, 2], 5)]).unwrap();
        let m = maps.iter().find(|m| m.subset().mask() == 0b011).unwrap();
        assert_eq!(m.fragment_count(), 2);
        assert_eq!(m.complement_count(), 1);
        assert_eq!(m.behavior(0)[0].0, m.behavior(1)[0].0);
        assert_eq!(m.lookup(&tokens(&[3, 4]), &tokens(&[2])), Some(TokenId(5)));
        assert_eq!(m.lookup(&tokens(&[3, 4]), &tokens(&[1])), None);
    }

    #[test]
    fn errors() {
        assert_eq!(build_behavior_maps(&[]).unwrap_err(), CoverageError::EmptyTrain);
        assert!(matches!(build_behavior_maps(&[ex(&[1, 2, 3], 0), ex(&[1, 2], 0)]), Err(CoverageError::MixedArity(3, 2))));
        assert!(matches!(
            build_behavior_maps(&[ex(&[1, 2, 3], 0), ex(&[1, 2, 3], 1)]),
            Err(CoverageError::ConflictingLabels { .. })
        ));
        // duplicates with the same label collapse
        let maps = build_behavior_maps(&[ex(&[1, 2, 3], 0), ex(&[1, 2, 3], 0)]).unwrap();
        assert!(maps.iter().all(|m| m.entry_count() == 1));
    }
}

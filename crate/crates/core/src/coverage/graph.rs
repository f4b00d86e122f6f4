use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use super::{common_arity, CoverageError, EquivalenceIndex, FragmentKey, Input, TruthOracle};
use crate::task::TokenId;
use crate::unionfind::UnionFind;

/// Substitution graph over a fixed vertex list.
///
/// Edges come in cliques: within one subset `I`, all vertices sharing the
/// complement, the fragment class at `I` and the true output are pairwise
/// adjacent. [`edges`](Self::edges) expands them.
#[derive(Debug, Clone)]
pub struct SubstitutionGraph {
    n_vertices: usize,
    cliques: Vec<Vec<u32>>,
    exact_truth: bool,
}

impl SubstitutionGraph {
    pub fn vertex_count(&self) -> usize {
        self.n_vertices
    }

    pub fn cliques(&self) -> &[Vec<u32>] {
        &self.cliques
    }

    /// False when edges were filtered on dataset labels rather than an
    /// evaluator, so unlabeled vertices were left unconstrained.
    pub fn exact_truth(&self) -> bool {
        self.exact_truth
    }

    /// Deduplicated undirected edge list `(lo, hi)`.
    pub fn edges(&self) -> BTreeSet<(u32, u32)> {
        let mut out = BTreeSet::new();
        for c in &self.cliques {
            for (i, &a) in c.iter().enumerate() {
                for &b in &c[i + 1..] {
                    out.insert((a.min(b), a.max(b)));
                }
            }
        }
        out
    }
}

/// Links inputs that differ only inside some subset `I`, whose fragments at
/// `I` are in one equivalence class, and whose true outputs agree.
pub fn build_substitution_graph(
    vertices: &[Input],
    equivalence: &[EquivalenceIndex<'_>],
    truth: &dyn TruthOracle,
) -> Result<SubstitutionGraph, CoverageError> {
    let labels: Vec<Option<TokenId>> = vertices.par_iter().map(|x| truth.label(x)).collect();
    build_with_labels(vertices, equivalence, &labels, truth.is_exact())
}

pub(crate) fn build_with_labels(
    vertices: &[Input],
    equivalence: &[EquivalenceIndex<'_>],
    labels: &[Option<TokenId>],
    exact_truth: bool,
) -> Result<SubstitutionGraph, CoverageError> {
    let n = common_arity(vertices.iter().map(|v| v.as_slice()))?;
    if let (Some(found), Some(eq)) = (n, equivalence.first()) {
        let expected = eq.behavior().projector.n;
        if expected != found {
            return Err(CoverageError::VertexArity { expected, found });
        }
    }
    let per_subset: Vec<Vec<Vec<u32>>> = equivalence
        .par_iter()
        .map(|eq| {
            let projector = &eq.behavior().projector;
            let mut groups: HashMap<(FragmentKey, u32), Vec<u32>> = HashMap::new();
            for (v, x) in vertices.iter().enumerate() {
                if let Some(root) = eq.root_of_input(x) {
                    groups.entry((projector.complement(x), root)).or_default().push(v as u32);
                }
            }
            let mut cliques = Vec::new();
            for members in groups.into_values().filter(|g| g.len() > 1) {
                split_by_label(&members, labels, &mut cliques);
            }
            cliques.sort_unstable();
            cliques
        })
        .collect();
    Ok(SubstitutionGraph {
        n_vertices: vertices.len(),
        cliques: per_subset.into_iter().flatten().collect(),
        exact_truth,
    })
}

/// Same-label vertices form a clique; unlabeled ones join every clique.
fn split_by_label(members: &[u32], labels: &[Option<TokenId>], out: &mut Vec<Vec<u32>>) {
    let mut by_label: HashMap<TokenId, Vec<u32>> = HashMap::new();
    let mut free = Vec::new();
    for &v in members {
        match labels[v as usize] {
            Some(y) => by_label.entry(y).or_default().push(v),
            None => free.push(v),
        }
    }
    if by_label.is_empty() {
        if free.len() > 1 {
            out.push(free);
        }
        return;
    }
    for mut clique in by_label.into_values() {
        clique.extend_from_slice(&free);
        if clique.len() > 1 {
            clique.sort_unstable();
            out.push(clique);
        }
    }
}

/// Coverage of one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coverage {
    pub covered: Vec<bool>,
    /// Component label per vertex: the smallest vertex index in its component.
    pub component: Vec<u32>,
}

impl Coverage {
    pub fn covered_count(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }
}

/// A vertex is covered when its connected component contains a vertex with
/// `is_train` set.
pub fn compute_coverage(graph: &SubstitutionGraph, is_train: &[bool]) -> Coverage {
    assert_eq!(is_train.len(), graph.vertex_count(), "one train flag per vertex");
    let mut uf = UnionFind::new(graph.vertex_count());
    for clique in graph.cliques() {
        for &v in &clique[1..] {
            uf.union(clique[0], v);
        }
    }
    let component = uf.canonical_labels();
    let mut has_train = vec![false; graph.vertex_count()];
    for (v, &t) in is_train.iter().enumerate() {
        if t {
            has_train[component[v] as usize] = true;
        }
    }
    let covered = component.iter().map(|&c| has_train[c as usize]).collect();
    Coverage { covered, component }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{build_behavior_maps, compute_equivalence, KnownLabels};
    use crate::dataset::{Example, Split};
    use crate::task::tokens;

    fn ex(x: &[u32], y: u32) -> Example {
        Example { input: tokens(x), target: TokenId(y), intermediates: vec![], split: Split::Train }
    }

    /// (a,c) and (a',c) agree, (a,c'') observed, (a',c'') is reachable.
    #[test]
    fn safe_substitution_reaches_unseen_input() {
        let train = [ex(&[0, 1, 2], 5), ex(&[3, 4, 2], 5), ex(&[0, 1, 7], 6)];
        let test = ex(&[3, 4, 7], 6);
        let maps = build_behavior_maps(&train).unwrap();
        let eq = compute_equivalence(&maps, 1);
        let mut vertices: Vec<Input> = train.iter().map(|e| e.input.clone()).collect();
        vertices.push(test.input.clone());
        let truth = KnownLabels::from_examples(train.iter().chain([&test]));
        let g = build_substitution_graph(&vertices, &eq, &truth).unwrap();
        assert!(g.edges().contains(&(2, 3)));
        assert!(!g.exact_truth());
        let cov = compute_coverage(&g, &[true, true, true, false]);
        assert!(cov.covered[3]);

        // different true output: the edge is filtered
        let truth = KnownLabels::from_examples(train.iter().chain([&ex(&[3, 4, 7], 9)]));
        let g = build_substitution_graph(&vertices, &eq, &truth).unwrap();
        assert!(!g.edges().contains(&(2, 3)));
        assert!(!compute_coverage(&g, &[true, true, true, false]).covered[3]);
    }

    #[test]
    fn no_self_edges_and_unlabeled_vertices_are_free() {
        let train = [ex(&[0, 1, 2], 5), ex(&[3, 4, 2], 5)];
        let maps = build_behavior_maps(&train).unwrap();
        let eq = compute_equivalence(&maps, 1);
        let vertices = vec![tokens(&[0, 1, 9]), tokens(&[3, 4, 9]), tokens(&[0, 1, 9])];
        let g = build_substitution_graph(&vertices[..2], &eq, &KnownLabels::default()).unwrap();
        assert_eq!(g.edges().into_iter().collect::<Vec<_>>(), vec![(0, 1)]);
        assert!(g.edges().iter().all(|(a, b)| a != b));
        let cov = compute_coverage(&g, &[false, false]);
        assert_eq!(cov.component, vec![0, 0]);
        assert_eq!(cov.covered_count(), 0);
    }
}

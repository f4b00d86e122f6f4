use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::behavior::{build_behavior_maps_for, labeled_inputs};
use super::graph::build_with_labels;
use super::{
    common_arity, compute_coverage, BehaviorMap, Coverage, CoverageError, EquivalenceIndex, EvidenceTable,
    IndexSubset, Input, TruthOracle,
};
use crate::dataset::{Example, Split};
use crate::task::TokenId;

/// Which index subsets the engine examines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetScope {
    #[default]
    All,
    /// Only runs of adjacent positions. Faster, may miss equivalences.
    Contiguous,
}

/// Vertex set of the substitution graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexScope {
    #[default]
    TrainAndTest,
    /// Train and test inputs plus every input one equivalent-fragment swap
    /// away from one of them.
    OneSubstitutionClosure,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageOptions {
    pub subsets: SubsetScope,
    pub vertex_scope: VertexScope,
}

/// Per-example result of a sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExampleCoverage {
    /// Position of the example within its split.
    pub example_id: usize,
    pub split: Split,
    pub input: Input,
    /// Graph vertex of the input.
    pub vertex: u32,
    /// `covered_at[k - 1]` for `k = 1..=k_max`.
    pub covered_at: Vec<bool>,
    pub k_cutoff: usize,
}

/// Coverage of a set of examples for `k = 1..=k_max`.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub k_max: usize,
    pub rows: Vec<ExampleCoverage>,
    /// Per `k`, the component label of every vertex; `None` for thresholds
    /// skipped because nothing outside training was covered any more.
    pub component_ids: Vec<Option<Vec<u32>>>,
    pub vertices: Vec<Input>,
    /// Whether the edge filter used an exact evaluator.
    pub truth_exact: bool,
    /// Largest threshold actually evaluated.
    pub k_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub split: Split,
    pub count: usize,
    /// Fraction covered at `k = 1..=k_max`.
    pub covered_fraction: Vec<f64>,
    /// `cutoff_histogram[c]` = number of examples with cutoff `c`.
    pub cutoff_histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub k_max: usize,
    pub truth_exact: bool,
    pub splits: Vec<SplitSummary>,
}

impl CoverageReport {
    pub fn rows_for(&self, split: Split) -> impl Iterator<Item = &ExampleCoverage> {
        self.rows.iter().filter(move |r| r.split == split)
    }

    /// Inputs covered at threshold `k` among the reported examples.
    pub fn covered_inputs(&self, k: usize) -> HashSet<&Input> {
        self.rows.iter().filter(|r| r.covered_at[k - 1]).map(|r| &r.input).collect()
    }

    pub fn summary(&self) -> CoverageSummary {
        let splits = [Split::Train, Split::IdTest, Split::OodTest]
            .into_iter()
            .filter_map(|split| {
                let rows: Vec<&ExampleCoverage> = self.rows_for(split).collect();
                if rows.is_empty() {
                    return None;
                }
                let count = rows.len();
                let covered_fraction = (0..self.k_max)
                    .map(|k| rows.iter().filter(|r| r.covered_at[k]).count() as f64 / count as f64)
                    .collect();
                let mut cutoff_histogram = vec![0; self.k_max + 1];
                for r in &rows {
                    cutoff_histogram[r.k_cutoff] += 1;
                }
                Some(SplitSummary { split, count, covered_fraction, cutoff_histogram })
            })
            .collect();
        CoverageSummary { k_max: self.k_max, truth_exact: self.truth_exact, splits }
    }
}

/// Training-side state shared by every threshold: behavior maps and pair
/// evidence are computed once.
#[derive(Debug)]
pub struct CoverageEngine {
    maps: Vec<BehaviorMap>,
    evidence: Vec<Arc<EvidenceTable>>,
    train: Vec<(Input, TokenId)>,
    options: CoverageOptions,
}

impl CoverageEngine {
    pub fn new(train: &[Example], options: CoverageOptions) -> Result<Self, CoverageError> {
        let data = labeled_inputs(train)?;
        let n = data[0].0.len();
        let subsets = match options.subsets {
            SubsetScope::All => IndexSubset::all(n),
            SubsetScope::Contiguous => IndexSubset::contiguous(n),
        };
        let maps = build_behavior_maps_for(train, &subsets)?;
        let evidence = maps.par_iter().map(|m| Arc::new(EvidenceTable::from_behavior(m))).collect();
        Ok(CoverageEngine { maps, evidence, train: data, options })
    }

    pub fn arity(&self) -> usize {
        self.train[0].0.len()
    }

    pub fn behavior_maps(&self) -> &[BehaviorMap] {
        &self.maps
    }

    pub fn equivalence(&self, k: usize) -> Result<Vec<EquivalenceIndex<'_>>, CoverageError> {
        if k == 0 {
            return Err(CoverageError::ZeroK);
        }
        Ok(self.maps.par_iter().zip(&self.evidence).map(|(m, e)| EquivalenceIndex::new(m, e.clone(), k)).collect())
    }

    /// Deduplicated vertex list: training inputs first, then unseen test
    /// inputs in order. Returns the vertices and the vertex of each test example.
    fn base_vertices(&self, test: &[Example]) -> Result<(Vec<Input>, Vec<u32>, HashMap<Input, TokenId>), CoverageError> {
        let n = self.arity();
        if let Some(found) = common_arity(test.iter().map(|e| e.input.as_slice()))? {
            if found != n {
                return Err(CoverageError::VertexArity { expected: n, found });
            }
        }
        let mut index: HashMap<Input, u32> = HashMap::with_capacity(self.train.len() + test.len());
        let mut vertices = Vec::with_capacity(self.train.len() + test.len());
        let mut known: HashMap<Input, TokenId> = HashMap::with_capacity(self.train.len() + test.len());
        for (x, y) in &self.train {
            index.insert(x.clone(), vertices.len() as u32);
            vertices.push(x.clone());
            known.insert(x.clone(), *y);
        }
        let mut test_vertex = Vec::with_capacity(test.len());
        for e in test {
            let v = *index.entry(e.input.clone()).or_insert_with(|| {
                vertices.push(e.input.clone());
                vertices.len() as u32 - 1
            });
            known.entry(e.input.clone()).or_insert(e.target);
            test_vertex.push(v);
        }
        Ok((vertices, test_vertex, known))
    }

    fn closure(&self, base: &[Input], eq: &[EquivalenceIndex<'_>]) -> Vec<Input> {
        let seen: HashSet<&Input> = base.iter().collect();
        let per_subset: Vec<Vec<Input>> = eq
            .par_iter()
            .map(|e| {
                let mut members: HashMap<u32, Vec<u32>> = HashMap::new();
                for class in e.classes() {
                    let root = e.root(class[0]);
                    members.insert(root, class);
                }
                let inside = e.behavior().projector.inside().to_vec();
                let mut out = Vec::new();
                for x in base {
                    let Some(id) = e.behavior().fragment_id_of(x) else { continue };
                    let Some(class) = members.get(&e.root(id)) else { continue };
                    for &other in class {
                        if other == id {
                            continue;
                        }
                        let mut y = x.clone();
                        for (p, t) in inside.iter().zip(e.behavior().fragment_tokens(other)) {
                            y[*p] = t;
                        }
                        if !seen.contains(&y) {
                            out.push(y);
                        }
                    }
                }
                out
            })
            .collect();
        let mut extra: Vec<Input> = per_subset.into_iter().flatten().collect();
        extra.sort_unstable();
        extra.dedup();
        extra
    }

    fn coverage_on(
        &self,
        vertices: &[Input],
        known: &HashMap<Input, TokenId>,
        k: usize,
        truth: &dyn TruthOracle,
    ) -> Result<(Coverage, Vec<Input>), CoverageError> {
        let eq = self.equivalence(k)?;
        let mut all = vertices.to_vec();
        if self.options.vertex_scope == VertexScope::OneSubstitutionClosure {
            all.extend(self.closure(vertices, &eq));
        }
        let labels: Vec<Option<TokenId>> =
            all.par_iter().map(|x| truth.label(x).or_else(|| known.get(x).copied())).collect();
        let graph = build_with_labels(&all, &eq, &labels, truth.is_exact())?;
        let mut is_train = vec![false; all.len()];
        is_train[..self.train.len()].iter_mut().for_each(|t| *t = true);
        Ok((compute_coverage(&graph, &is_train), all))
    }

    /// Coverage at one threshold over the training inputs and `test`.
    /// Vertex `i < train_len` is the `i`-th distinct training input.
    pub fn coverage(&self, test: &[Example], k: usize, truth: &dyn TruthOracle) -> Result<Coverage, CoverageError> {
        let (vertices, _, known) = self.base_vertices(test)?;
        let (mut cov, _) = self.coverage_on(&vertices, &known, k, truth)?;
        cov.covered.truncate(vertices.len());
        cov.component.truncate(vertices.len());
        Ok(cov)
    }

    /// Runs `k = 1..=k_max`. Rows cover the training examples (deduplicated)
    /// followed by every test example.
    pub fn sweep(&self, test: &[Example], k_max: usize, truth: &dyn TruthOracle) -> Result<CoverageReport, CoverageError> {
        if k_max == 0 {
            return Err(CoverageError::ZeroK);
        }
        let (vertices, test_vertex, known) = self.base_vertices(test)?;
        let n_train = self.train.len();
        let mut covered: Vec<Vec<bool>> = vec![Vec::with_capacity(k_max); vertices.len()];
        let mut component_ids = Vec::with_capacity(k_max);
        let mut k_evaluated = 0;
        let mut live = true;
        for k in 1..=k_max {
            if !live {
                for (v, c) in covered.iter_mut().enumerate() {
                    c.push(v < n_train);
                }
                component_ids.push(None);
                continue;
            }
            let (cov, _) = self.coverage_on(&vertices, &known, k, truth)?;
            for (v, c) in covered.iter_mut().enumerate() {
                c.push(cov.covered[v]);
            }
            live = cov.covered[n_train..vertices.len()].iter().any(|&c| c);
            component_ids.push(Some(cov.component[..vertices.len()].to_vec()));
            k_evaluated = k;
        }
        let row = |example_id, split, v: u32| {
            let covered_at = covered[v as usize].clone();
            let k_cutoff = covered_at.iter().rposition(|&c| c).map_or(0, |i| i + 1);
            ExampleCoverage { example_id, split, input: vertices[v as usize].clone(), vertex: v, covered_at, k_cutoff }
        };
        let mut rows: Vec<ExampleCoverage> = (0..n_train).map(|v| row(v, Split::Train, v as u32)).collect();
        let mut per_split: HashMap<Split, usize> = HashMap::new();
        for (e, &v) in test.iter().zip(&test_vertex) {
            let id = per_split.entry(e.split).or_default();
            rows.push(row(*id, e.split, v));
            *id += 1;
        }
        Ok(CoverageReport { k_max, rows, component_ids, vertices, truth_exact: truth.is_exact(), k_evaluated })
    }
}

/// Builds a [`CoverageEngine`] and sweeps `k = 1..=k_max`.
pub fn k_cutoff_sweep(
    train: &[Example],
    test: &[Example],
    k_max: usize,
    truth: &dyn TruthOracle,
    options: CoverageOptions,
) -> Result<CoverageReport, CoverageError> {
    CoverageEngine::new(train, options)?.sweep(test, k_max, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::KnownLabels;
    use crate::task::tokens;

    fn ex(x: &[u32], y: u32, split: Split) -> Example {
        Example { input: tokens(x), target: TokenId(y), intermediates: vec![], split }
    }

    #[test]
    fn covered_at_three_not_four_has_cutoff_three() {
        // fragments (0,0) and (1,1) share three agreeing contexts at I = {1,2}
        let mut train = Vec::new();
        for c in 0..3 {
            train.push(ex(&[0, 0, c], c, Split::Train));
            train.push(ex(&[1, 1, c], c, Split::Train));
        }
        train.push(ex(&[0, 0, 9], 9, Split::Train));
        let test = [ex(&[1, 1, 9], 9, Split::OodTest)];
        let truth = KnownLabels::from_examples(train.iter().chain(&test));
        let report = k_cutoff_sweep(&train, &test, 5, &truth, CoverageOptions::default()).unwrap();
        let last = report.rows.last().unwrap();
        assert_eq!(last.covered_at, vec![true, true, true, false, false]);
        assert_eq!(last.k_cutoff, 3);
        assert_eq!(report.k_evaluated, 4);
        assert!(report.component_ids[4].is_none());
        assert!(report.rows_for(Split::Train).all(|r| r.k_cutoff == 5));
        let s = report.summary();
        let ood = s.splits.iter().find(|s| s.split == Split::OodTest).unwrap();
        assert_eq!(ood.covered_fraction, vec![1.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(ood.cutoff_histogram, vec![0, 0, 0, 1, 0, 0]);
    }

    #[test]
    fn single_training_example_covers_only_itself() {
        let train = [ex(&[1, 2, 3], 0, Split::Train)];
        let test = [ex(&[1, 2, 4], 0, Split::IdTest), ex(&[1, 2, 3], 0, Split::IdTest)];
        let report = k_cutoff_sweep(&train, &test, 2, &KnownLabels::default(), CoverageOptions::default()).unwrap();
        let cutoffs: Vec<usize> = report.rows.iter().map(|r| r.k_cutoff).collect();
        assert_eq!(cutoffs, vec![2, 0, 2]);
        assert_eq!(report.vertices.len(), 2);
    }

    #[test]
    fn closure_reaches_through_external_vertex() {
        // (0,0)~(1,1)~(5,5) at {1,2}; the train input (5,5,9) has a different
        // label from the test input (1,1,9), but the unlabeled (0,0,9) links both
        let mut train = Vec::new();
        for c in 0..2 {
            train.push(ex(&[0, 0, c], c, Split::Train));
            train.push(ex(&[1, 1, c], c, Split::Train));
        }
        train.push(ex(&[5, 5, 8], 3, Split::Train));
        train.push(ex(&[0, 0, 8], 3, Split::Train));
        train.push(ex(&[5, 5, 9], 3, Split::Train));
        let test = [ex(&[1, 1, 9], 7, Split::OodTest)];
        let truth = KnownLabels::from_examples(train.iter().chain(&test));
        let plain = k_cutoff_sweep(&train, &test, 1, &truth, CoverageOptions::default()).unwrap();
        assert_eq!(plain.rows.last().unwrap().k_cutoff, 0);
        let options = CoverageOptions { vertex_scope: VertexScope::OneSubstitutionClosure, ..Default::default() };
        let closed = k_cutoff_sweep(&train, &test, 1, &truth, options).unwrap();
        assert_eq!(closed.rows.last().unwrap().k_cutoff, 1);
    }

    #[test]
    fn zero_k_and_arity_errors() {
        let train = [ex(&[1, 2, 3], 0, Split::Train)];
        let engine = CoverageEngine::new(&train, CoverageOptions::default()).unwrap();
        assert_eq!(engine.sweep(&[], 0, &KnownLabels::default()).unwrap_err(), CoverageError::ZeroK);
        assert_eq!(
            engine.sweep(&[ex(&[1, 2, 3, 4], 0, Split::IdTest)], 1, &KnownLabels::default()).unwrap_err(),
            CoverageError::VertexArity { expected: 3, found: 4 }
        );
    }
}

//! Direct instantiation of the coverage definitions, for cross-checking the
//! pipeline on small instances. Everything here is quadratic or worse.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{CoverageError, IndexSubset, Input, TruthOracle};
use crate::dataset::Example;
use crate::task::TokenId;

/// Largest `vocab^n` accepted by [`OracleScope::FullDomain`].
pub const FULL_DOMAIN_LIMIT: u64 = 1_000_000;

/// Vertex set for [`brute_force_coverage`].
#[derive(Clone, Copy)]
pub enum OracleScope<'a> {
    /// Every input in `vocab^n`. Edges join pairs that form an `I`-co-occurrence
    /// of directly `k`-equivalent fragments; no output filter.
    FullDomain { vocab: u32 },
    /// Only the given inputs. Edges additionally require equal true outputs,
    /// and fragment equivalence is the transitive closure of the direct relation.
    Vertices { vertices: &'a [Input], truth: &'a dyn TruthOracle },
}

fn training_table(train: &[Example]) -> Result<(usize, HashMap<Input, TokenId>), CoverageError> {
    let n = train.first().ok_or(CoverageError::EmptyTrain)?.input.len();
    if !(2..=31).contains(&n) {
        return Err(CoverageError::Arity(n));
    }
    let mut table: HashMap<Input, TokenId> = HashMap::new();
    for e in train {
        if e.input.len() != n {
            return Err(CoverageError::MixedArity(n, e.input.len()));
        }
        if let Some(&y) = table.get(&e.input) {
            if y != e.target {
                return Err(CoverageError::ConflictingLabels {
                    input: e.input.iter().map(|t| t.0).collect(),
                    first: y.0,
                    second: e.target.0,
                });
            }
        }
        table.insert(e.input.clone(), e.target);
    }
    Ok((n, table))
}

fn project(x: &[TokenId], positions: &[usize]) -> Vec<TokenId> {
    positions.iter().map(|&p| x[p]).collect()
}

fn splice(inside: &[usize], fragment: &[TokenId], outside: &[usize], complement: &[TokenId], n: usize) -> Input {
    let mut x = vec![TokenId(0); n];
    for (&p, &t) in inside.iter().zip(fragment) {
        x[p] = t;
    }
    for (&p, &t) in outside.iter().zip(complement) {
        x[p] = t;
    }
    x
}

fn direct_pairs(table: &HashMap<Input, TokenId>, n: usize, subset: IndexSubset, k: usize) -> BTreeSet<(Input, Input)> {
    let inside: Vec<usize> = subset.positions().collect();
    let outside: Vec<usize> = subset.complement_positions(n).collect();
    let fragments: BTreeSet<Input> = table.keys().map(|x| project(x, &inside)).collect();
    let complements: BTreeSet<Input> = table.keys().map(|x| project(x, &outside)).collect();
    let fragments: Vec<Input> = fragments.into_iter().collect();
    let mut out = BTreeSet::new();
    for (i, a) in fragments.iter().enumerate() {
        for b in &fragments[i + 1..] {
            let mut agreeing = 0;
            let mut consistent = true;
            for c in &complements {
                let ya = table.get(&splice(&inside, a, &outside, c, n));
                let yb = table.get(&splice(&inside, b, &outside, c, n));
                if let (Some(ya), Some(yb)) = (ya, yb) {
                    if ya == yb {
                        agreeing += 1;
                    } else {
                        consistent = false;
                    }
                }
            }
            if consistent && agreeing >= k {
                out.insert((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// Fragment pairs `(a, b)`, `a < b`, that are functionally `k`-equivalent at
/// `subset` by a pairwise scan over every training complement.
pub fn definitional_equivalent_pairs(
    train: &[Example],
    subset: IndexSubset,
    k: usize,
) -> Result<BTreeSet<(Input, Input)>, CoverageError> {
    if k == 0 {
        return Err(CoverageError::ZeroK);
    }
    let (n, table) = training_table(train)?;
    Ok(direct_pairs(&table, n, subset, k))
}

/// Transitive closure of the direct relation: fragment → class label.
fn closure_classes(pairs: &BTreeSet<(Input, Input)>) -> HashMap<Input, usize> {
    let mut adj: BTreeMap<&Input, Vec<&Input>> = BTreeMap::new();
    for (a, b) in pairs {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut class = HashMap::new();
    let mut next = 0;
    for &start in adj.keys() {
        if class.contains_key(start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        class.insert(start.clone(), next);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !class.contains_key(v) {
                    class.insert(v.clone(), next);
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    class
}

/// Edges of the restricted substitution graph by scanning all vertex pairs.
pub fn brute_force_edges(
    train: &[Example],
    vertices: &[Input],
    k: usize,
    truth: &dyn TruthOracle,
) -> Result<BTreeSet<(u32, u32)>, CoverageError> {
    if k == 0 {
        return Err(CoverageError::ZeroK);
    }
    let (n, table) = training_table(train)?;
    let classes: Vec<(IndexSubset, HashMap<Input, usize>)> = IndexSubset::all(n)
        .into_iter()
        .map(|s| (s, closure_classes(&direct_pairs(&table, n, s, k))))
        .collect();
    let label = |x: &Input| truth.label(x).or_else(|| table.get(x).copied());
    let labels: Vec<Option<TokenId>> = vertices.iter().map(label).collect();
    let mut edges = BTreeSet::new();
    for (i, x) in vertices.iter().enumerate() {
        for (j, y) in vertices.iter().enumerate().skip(i + 1) {
            if x == y || x.len() != n || y.len() != n {
                continue;
            }
            if let (Some(a), Some(b)) = (labels[i], labels[j]) {
                if a != b {
                    continue;
                }
            }
            let diff: u32 = (0..n).filter(|&p| x[p] != y[p]).fold(0, |m, p| m | 1 << p);
            let linked = classes.iter().any(|(s, cls)| {
                if diff & !s.mask() != 0 {
                    return false;
                }
                let inside: Vec<usize> = s.positions().collect();
                match (cls.get(&project(x, &inside)), cls.get(&project(y, &inside))) {
                    (Some(a), Some(b)) => a == b,
                    _ => false,
                }
            });
            if linked {
                edges.insert((i as u32, j as u32));
            }
        }
    }
    Ok(edges)
}

fn reach(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>, sources: &[usize]) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n_vertices];
    for (a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n_vertices];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &s in sources {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// `Cover_k(D)` computed from the definitions over the chosen vertex set.
pub fn brute_force_coverage(
    train: &[Example],
    k: usize,
    scope: OracleScope<'_>,
) -> Result<BTreeSet<Input>, CoverageError> {
    if k == 0 {
        return Err(CoverageError::ZeroK);
    }
    let (n, table) = training_table(train)?;
    match scope {
        OracleScope::Vertices { vertices, truth } => {
            let mut all: Vec<Input> = table.keys().cloned().collect();
            all.sort();
            for v in vertices {
                if !table.contains_key(v) && !all.contains(v) {
                    all.push(v.clone());
                }
            }
            let edges = brute_force_edges(train, &all, k, truth)?;
            let sources: Vec<usize> = (0..table.len()).collect();
            let seen = reach(all.len(), edges.into_iter().map(|(a, b)| (a as usize, b as usize)), &sources);
            Ok(all.into_iter().zip(seen).filter(|(_, s)| *s).map(|(x, _)| x).collect())
        }
        OracleScope::FullDomain { vocab } => {
            let size = (vocab as u64).checked_pow(n as u32).filter(|&s| s <= FULL_DOMAIN_LIMIT);
            let Some(size) = size else {
                return Err(CoverageError::DomainTooLarge { vocab, n });
            };
            if table.keys().flatten().any(|t| t.0 >= vocab) {
                return Err(CoverageError::DomainTooLarge { vocab, n });
            }
            let decode = |mut code: u64| -> Input {
                let mut x = vec![TokenId(0); n];
                for slot in x.iter_mut().rev() {
                    *slot = TokenId((code % vocab as u64) as u32);
                    code /= vocab as u64;
                }
                x
            };
            let encode = |x: &[TokenId]| x.iter().fold(0u64, |c, t| c * vocab as u64 + t.0 as u64) as usize;
            let mut edges = Vec::new();
            for s in IndexSubset::all(n) {
                let inside: Vec<usize> = s.positions().collect();
                let outside: Vec<usize> = s.complement_positions(n).collect();
                let pairs = direct_pairs(&table, n, s, k);
                if pairs.is_empty() {
                    continue;
                }
                let comp_size = (vocab as u64).pow(outside.len() as u32);
                let comp_n = outside.len();
                for code in 0..comp_size {
                    let c: Input = decode(code)[n - comp_n..].to_vec();
                    for (a, b) in &pairs {
                        let x = splice(&inside, a, &outside, &c, n);
                        let y = splice(&inside, b, &outside, &c, n);
                        edges.push((encode(&x), encode(&y)));
                    }
                }
            }
            let sources: Vec<usize> = table.keys().map(|x| encode(x)).collect();
            let seen = reach(size as usize, edges, &sources);
            Ok((0..size).filter(|&c| seen[c as usize]).map(decode).collect())
        }
    }
}

/// Per-vertex cutoffs (largest covered `k`, 0 if uncovered at 1) by running
/// the restricted oracle once per threshold.
pub fn brute_force_cutoffs(
    train: &[Example],
    vertices: &[Input],
    k_max: usize,
    truth: &dyn TruthOracle,
) -> Result<Vec<usize>, CoverageError> {
    let mut cutoffs = vec![0; vertices.len()];
    for k in 1..=k_max {
        let covered = brute_force_coverage(train, k, OracleScope::Vertices { vertices, truth })?;
        for (c, v) in cutoffs.iter_mut().zip(vertices) {
            if covered.contains(v) {
                *c = k;
            }
        }
    }
    Ok(cutoffs)
}

/// Disagreement between restricted and full-domain coverage on a vertex set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Divergence {
    /// Covered over the full domain but not within the vertex set.
    pub full_only: Vec<Input>,
    /// Covered within the vertex set but not over the full domain.
    pub restricted_only: Vec<Input>,
}

impl Divergence {
    pub fn count(&self) -> usize {
        self.full_only.len() + self.restricted_only.len()
    }
}

/// Compares the two oracle scopes on `vertices`.
pub fn full_domain_divergence(
    train: &[Example],
    vertices: &[Input],
    k: usize,
    vocab: u32,
    truth: &dyn TruthOracle,
) -> Result<Divergence, CoverageError> {
    let full = brute_force_coverage(train, k, OracleScope::FullDomain { vocab })?;
    let restricted = brute_force_coverage(train, k, OracleScope::Vertices { vertices, truth })?;
    let mut d = Divergence::default();
    let unique: BTreeSet<&Input> = vertices.iter().collect();
    for v in unique {
        match (full.contains(v), restricted.contains(v)) {
            (true, false) => d.full_only.push(v.clone()),
            (false, true) => d.restricted_only.push(v.clone()),
            _ => {}
        }
    }
    Ok(d)
}

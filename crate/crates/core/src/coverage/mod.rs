//! k-coverage of a training set.
//!
//! Pipeline, per nonempty proper index subset `I`:
//!
//! 1. [`build_behavior_maps`]: fragment `x_I` → (complement `x_{[n]\I}` → output).
//! 2. [`compute_equivalence`]: fragments sharing at least `k` complements with
//!    equal outputs, and never a disagreeing one, are merged in a union-find.
//! 3. [`build_substitution_graph`]: inputs agreeing outside `I`, with the same
//!    true output and fragments in one class at `I`, are linked.
//! 4. [`compute_coverage`]: an input is covered when its component holds a
//!    training input.
//!
//! [`k_cutoff_sweep`] runs the pipeline for `k = 1..=k_max` and assigns each
//! example the largest `k` at which it is still covered (0 if it is not
//! covered even at `k = 1`). Note that this is the *largest* such `k`: an
//! example covered at `k = 3` but not at `k = 4` has cutoff 3.
//!
//! The graph is built over the supplied train and test inputs, not the
//! whole input space. [`oracle`] holds a direct, unoptimised instantiation of
//! the definitions (including the full-space variant) for cross-checking.

mod behavior;
mod equivalence;
mod graph;
pub mod oracle;
mod report;

use std::fmt;
use std::hash::Hash;

use thiserror::Error;

use crate::task::{CompositionStructure, PrimitiveTable, TokenId};

pub use behavior::{build_behavior_maps, build_behavior_maps_for, BehaviorMap};
pub use equivalence::{compute_equivalence, EquivalenceIndex, EvidenceTable, PairEvidence};
pub use graph::{build_substitution_graph, compute_coverage, Coverage, SubstitutionGraph};
pub use report::{
    k_cutoff_sweep, CoverageEngine, CoverageOptions, CoverageReport, CoverageSummary, ExampleCoverage,
    SplitSummary, SubsetScope, VertexScope,
};

pub type Input = Vec<TokenId>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("training set is empty")]
    EmptyTrain,
    #[error("inputs mix arities {0} and {1}")]
    MixedArity(usize, usize),
    #[error("input arity {0} is unsupported (need 2..=31 positions)")]
    Arity(usize),
    #[error("input {input:?} appears with labels {first} and {second}")]
    ConflictingLabels { input: Vec<u32>, first: u32, second: u32 },
    #[error("vertex has {found} positions but the training inputs have {expected}")]
    VertexArity { expected: usize, found: usize },
    #[error("evidence threshold k must be at least 1")]
    ZeroK,
    #[error("input space {vocab}^{n} exceeds the brute-force limit")]
    DomainTooLarge { vocab: u32, n: usize },
}

/// Nonempty proper subset of input positions, stored as a bitmask
/// (bit `i` = position `i`, zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSubset(u32);

impl IndexSubset {
    pub fn new(mask: u32, n: usize) -> Option<Self> {
        let full = full_mask(n);
        (mask != 0 && mask & !full == 0 && mask != full).then_some(IndexSubset(mask))
    }

    pub fn from_positions(positions: &[usize], n: usize) -> Option<Self> {
        let mask = positions.iter().try_fold(0u32, |m, &p| (p < n).then_some(m | (1 << p)))?;
        Self::new(mask, n)
    }

    /// All `2^n - 2` nonempty proper subsets in increasing mask order.
    pub fn all(n: usize) -> Vec<IndexSubset> {
        (1..full_mask(n)).map(IndexSubset).collect()
    }

    /// Subsets whose positions form one contiguous run.
    pub fn contiguous(n: usize) -> Vec<IndexSubset> {
        Self::all(n).into_iter().filter(|s| (s.0 >> s.0.trailing_zeros()).trailing_ones() == s.0.count_ones()).collect()
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, position: usize) -> bool {
        self.0 & (1 << position) != 0
    }

    pub fn positions(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.0 & (1 << i) != 0)
    }

    /// Positions outside the subset, for inputs of length `n`.
    pub fn complement_positions(self, n: usize) -> impl Iterator<Item = usize> {
        (0..n).filter(move |&i| self.0 & (1 << i) == 0)
    }
}

impl fmt::Display for IndexSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.positions().map(|p| (p + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Hash key for a projected subsequence.
///
/// Up to four tokens below 2^16 are packed into one `u64`; anything else
/// spills to a boxed slice. Keys of one subset always use the same encoding.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FragmentKey {
    Packed(u64),
    Spilled(Box<[u32]>),
}

impl FragmentKey {
    fn project(input: &[TokenId], positions: &[usize], packed: bool) -> Self {
        if packed {
            FragmentKey::Packed(positions.iter().fold(0u64, |acc, &p| (acc << 16) | input[p].0 as u64))
        } else {
            FragmentKey::Spilled(positions.iter().map(|&p| input[p].0).collect())
        }
    }

    /// Token values, given the number of positions the key was built from.
    pub fn tokens(&self, len: usize) -> Vec<TokenId> {
        match self {
            FragmentKey::Packed(v) => (0..len).rev().map(|i| TokenId(((v >> (16 * i)) & 0xFFFF) as u32)).collect(),
            FragmentKey::Spilled(s) => s.iter().copied().map(TokenId).collect(),
        }
    }
}

/// Projection of inputs onto one subset and its complement.
#[derive(Debug, Clone)]
pub(crate) struct Projector {
    pub(crate) subset: IndexSubset,
    pub(crate) n: usize,
    inside: Vec<usize>,
    outside: Vec<usize>,
    pack_inside: bool,
    pack_outside: bool,
}

impl Projector {
    pub(crate) fn new(subset: IndexSubset, n: usize, max_token: u32) -> Self {
        let inside: Vec<usize> = subset.positions().collect();
        let outside: Vec<usize> = subset.complement_positions(n).collect();
        let small = max_token < (1 << 16);
        Projector {
            subset,
            n,
            pack_inside: small && inside.len() <= 4,
            pack_outside: small && outside.len() <= 4,
            inside,
            outside,
        }
    }

    pub(crate) fn fragment(&self, input: &[TokenId]) -> FragmentKey {
        FragmentKey::project(input, &self.inside, self.pack_inside)
    }

    pub(crate) fn complement(&self, input: &[TokenId]) -> FragmentKey {
        FragmentKey::project(input, &self.outside, self.pack_outside)
    }

    pub(crate) fn inside(&self) -> &[usize] {
        &self.inside
    }
}

/// Ground truth used by the substitution-graph edge filter.
pub trait TruthOracle: Sync {
    /// True output for `input`, if known.
    fn label(&self, input: &[TokenId]) -> Option<TokenId>;
    /// Whether every input gets a label (synthetic evaluator) rather than
    /// only those seen with one.
    fn is_exact(&self) -> bool;
}

/// Exact truth from the generating composition.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator<'a> {
    pub structure: &'a CompositionStructure,
    pub primitives: &'a [PrimitiveTable],
}

impl TruthOracle for Evaluator<'_> {
    fn label(&self, input: &[TokenId]) -> Option<TokenId> {
        crate::task::evaluate(self.structure, self.primitives, input).ok().map(|e| e.output)
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// Truth from dataset labels only. Inputs without a label are unconstrained
/// by the edge filter.
#[derive(Debug, Clone, Default)]
pub struct KnownLabels(pub std::collections::HashMap<Input, TokenId>);

impl KnownLabels {
    pub fn from_examples<'a>(examples: impl IntoIterator<Item = &'a crate::dataset::Example>) -> Self {
        KnownLabels(examples.into_iter().map(|e| (e.input.clone(), e.target)).collect())
    }
}

impl TruthOracle for KnownLabels {
    fn label(&self, input: &[TokenId]) -> Option<TokenId> {
        self.0.get(input).copied()
    }

    fn is_exact(&self) -> bool {
        false
    }
}

/// Common arity of a set of inputs.
pub(crate) fn common_arity<'a>(inputs: impl IntoIterator<Item = &'a [TokenId]>) -> Result<Option<usize>, CoverageError> {
    let mut n = None;
    for x in inputs {
        match n {
            None => n = Some(x.len()),
            Some(m) if m != x.len() => return Err(CoverageError::MixedArity(m, x.len())),
            _ => {}
        }
    }
    if let Some(m) = n {
        if !(2..=31).contains(&m) {
            return Err(CoverageError::Arity(m));
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::tokens;

    #[test]
    fn subsets() {
        assert_eq!(IndexSubset::all(3).len(), 6);
        assert_eq!(IndexSubset::all(4).len(), 14);
        let c: Vec<String> = IndexSubset::contiguous(3).iter().map(|s| s.to_string()).collect();
        assert_eq!(c, ["{1}", "{2}", "{1,2}", "{3}", "{2,3}"]);
        assert!(IndexSubset::new(0b111, 3).is_none());
        assert!(IndexSubset::new(0, 3).is_none());
        assert!(IndexSubset::new(0b1000, 3).is_none());
        let s = IndexSubset::from_positions(&[0, 2], 3).unwrap();
        assert_eq!(s.complement_positions(3).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn fragment_keys_roundtrip() {
        let x = tokens(&[7, 65535, 3, 9, 1]);
        let s = IndexSubset::from_positions(&[0, 1, 3], 5).unwrap();
        let p = Projector::new(s, 5, 65535);
        assert!(matches!(p.fragment(&x), FragmentKey::Packed(_)));
        assert_eq!(p.fragment(&x).tokens(3), tokens(&[7, 65535, 9]));
        let p = Projector::new(s, 5, 70000);
        assert!(matches!(p.fragment(&x), FragmentKey::Spilled(_)));
        assert_eq!(p.complement(&x).tokens(2), tokens(&[3, 1]));
    }
}

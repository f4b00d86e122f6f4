//! Token sets, composition structures and primitive lookup tables.
//!
//! A task is a DAG of primitive-function nodes over input positions. Each
//! node is realised by an explicit [`PrimitiveTable`] mapping argument tuples
//! to an output token; a seen mask marks the part of the table's domain that
//! in-domain data may use.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rng::{self, streams};

/// Upper bound on a primitive table's domain size.
pub const MAX_TABLE_ENTRIES: usize = 1 << 28;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("vocabulary size {0} is too small (need at least 2)")]
    VocabTooSmall(u32),
    #[error("arity must be at least 1")]
    ZeroArity,
    #[error("table domain {vocab}^{arity} exceeds the supported size")]
    TableTooLarge { vocab: u32, arity: usize },
    #[error("node {node} reads {reference} which is not an input or an earlier node")]
    BadSource { node: usize, reference: String },
    #[error("node {node} declares arity {arity} but lists {args} argument sources")]
    NodeArity { node: usize, arity: usize, args: usize },
    #[error("output node {output} out of range ({nodes} nodes)")]
    BadOutput { output: usize, nodes: usize },
    #[error("structure has no nodes")]
    Empty,
    #[error("structure needs {expected} primitive tables, got {found}")]
    PrimitiveCount { expected: usize, found: usize },
    #[error("node {node} has arity {expected} but its primitive table has arity {found}")]
    ArityMismatch { node: usize, expected: usize, found: usize },
    #[error("primitive tables disagree on vocabulary size ({0} vs {1})")]
    VocabMismatch(u32, u32),
    #[error("input has {found} tokens, structure expects {expected}")]
    InputLength { expected: usize, found: usize },
    #[error("token {token} at position {position} is outside the token set of size {vocab}")]
    TokenOutOfRange { position: usize, token: u32, vocab: u32 },
    #[error("seen fraction {0} is outside [0, 1]")]
    SeenFraction(f64),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("invalid primitive table: {0}")]
    InvalidTable(String),
    #[error("position range {lo}..{hi} for input {position} is empty or exceeds the token set")]
    BadPositionRange { position: usize, lo: u32, hi: u32 },
}

/// Index into the shared token set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for TokenId {
    fn from(v: u32) -> Self {
        TokenId(v)
    }
}

/// Converts plain integers into a token tuple.
pub fn tokens(values: &[u32]) -> Vec<TokenId> {
    values.iter().copied().map(TokenId).collect()
}

/// Where a node argument comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Input(usize),
    Node(usize),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Input(i) => write!(f, "x{}", i + 1),
            Source::Node(j) => write!(f, "node {j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeSpec {
    pub arity: usize,
    pub args: Vec<Source>,
}

impl NodeSpec {
    pub fn new(args: Vec<Source>) -> Self {
        NodeSpec { arity: args.len(), args }
    }
}

/// Half-open token range `[lo, hi)` allowed at one input position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PositionRange {
    pub lo: u32,
    pub hi: u32,
}

/// Wiring of primitive nodes over input positions.
///
/// Argument sources may only reference input positions or strictly earlier
/// nodes, so node order is a topological order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompositionStructure {
    #[serde(default)]
    pub name: Option<String>,
    pub n_inputs: usize,
    pub nodes: Vec<NodeSpec>,
    pub output: usize,
    /// Position-specific sub-domains of the shared token set. `None` means
    /// every position ranges over the whole token set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_ranges: Option<Vec<PositionRange>>,
}

impl CompositionStructure {
    pub fn new(n_inputs: usize, nodes: Vec<NodeSpec>, output: usize) -> Result<Self, TaskError> {
        let s = CompositionStructure {
            name: None,
            n_inputs,
            nodes,
            output,
            position_ranges: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        if self.nodes.is_empty() {
            return Err(TaskError::Empty);
        }
        for (j, node) in self.nodes.iter().enumerate() {
            if node.arity == 0 {
                return Err(TaskError::ZeroArity);
            }
            if node.arity != node.args.len() {
                return Err(TaskError::NodeArity { node: j, arity: node.arity, args: node.args.len() });
            }
            for src in &node.args {
                let ok = match *src {
                    Source::Input(i) => i < self.n_inputs,
                    Source::Node(p) => p < j,
                };
                if !ok {
                    return Err(TaskError::BadSource { node: j, reference: src.to_string() });
                }
            }
        }
        if self.output >= self.nodes.len() {
            return Err(TaskError::BadOutput { output: self.output, nodes: self.nodes.len() });
        }
        if let Some(ranges) = &self.position_ranges {
            if ranges.len() != self.n_inputs {
                return Err(TaskError::InputLength { expected: self.n_inputs, found: ranges.len() });
            }
        }
        Ok(())
    }

    /// Restricts each input position to its own token range.
    pub fn with_position_ranges(mut self, ranges: Vec<PositionRange>) -> Result<Self, TaskError> {
        self.position_ranges = Some(ranges);
        self.validate()?;
        Ok(self)
    }

    /// Token range allowed at `position` for a token set of size `vocab`.
    pub fn input_range(&self, position: usize, vocab: u32) -> std::ops::Range<u32> {
        match &self.position_ranges {
            Some(r) => r[position].lo..r[position].hi.min(vocab),
            None => 0..vocab,
        }
    }

    pub fn check_ranges(&self, vocab: u32) -> Result<(), TaskError> {
        if let Some(ranges) = &self.position_ranges {
            for (position, r) in ranges.iter().enumerate() {
                if r.lo >= r.hi || r.hi > vocab {
                    return Err(TaskError::BadPositionRange { position, lo: r.lo, hi: r.hi });
                }
            }
        }
        Ok(())
    }

    /// Number of non-output nodes, i.e. the length of the intermediate list.
    pub fn n_intermediates(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Catalog name, or `dag-<hash>` for custom wirings.
    pub fn id(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        let canonical = serde_json::to_vec(&(&self.n_inputs, &self.nodes, &self.output, &self.position_ranges))
            .expect("structure serializes");
        let digest = Sha256::digest(&canonical);
        let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        format!("dag-{hex}")
    }

    /// Checks that `primitives` fit this structure (count, arity, shared vocab)
    /// and returns the vocabulary size.
    pub fn check_primitives(&self, primitives: &[PrimitiveTable]) -> Result<u32, TaskError> {
        if primitives.len() != self.nodes.len() {
            return Err(TaskError::PrimitiveCount { expected: self.nodes.len(), found: primitives.len() });
        }
        let vocab = primitives[0].vocab();
        for (j, (node, table)) in self.nodes.iter().zip(primitives).enumerate() {
            if node.arity != table.arity() {
                return Err(TaskError::ArityMismatch { node: j, expected: node.arity, found: table.arity() });
            }
            if table.vocab() != vocab {
                return Err(TaskError::VocabMismatch(vocab, table.vocab()));
            }
        }
        self.check_ranges(vocab)?;
        Ok(vocab)
    }
}

/// Built-in task shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    /// `h`-hop chain: `t = f_h(... f_2(f_1(x1, x2), x3) ..., x_{h+1})`.
    /// `Chain(2)` is the 2-hop task and `Chain(3)` the 3-hop task.
    Chain(usize),
    /// `t = f3(f1(x1, x2), f2(x3, x4))`.
    ParallelTwoHop,
    /// `t = f2(f1(x1, x2), x2, x3)`: x2 reaches the output along two paths.
    NonTree,
}

impl TaskKind {
    pub const TWO_HOP: TaskKind = TaskKind::Chain(2);
    pub const THREE_HOP: TaskKind = TaskKind::Chain(3);

    pub fn structure(self) -> CompositionStructure {
        let name = self.to_string();
        let s = match self {
            TaskKind::Chain(h) => {
                assert!(h >= 2, "chains need at least two hops");
                let mut nodes = vec![NodeSpec::new(vec![Source::Input(0), Source::Input(1)])];
                for j in 1..h {
                    nodes.push(NodeSpec::new(vec![Source::Node(j - 1), Source::Input(j + 1)]));
                }
                CompositionStructure::new(h + 1, nodes, h - 1)
            }
            TaskKind::ParallelTwoHop => CompositionStructure::new(
                4,
                vec![
                    NodeSpec::new(vec![Source::Input(0), Source::Input(1)]),
                    NodeSpec::new(vec![Source::Input(2), Source::Input(3)]),
                    NodeSpec::new(vec![Source::Node(0), Source::Node(1)]),
                ],
                2,
            ),
            TaskKind::NonTree => CompositionStructure::new(
                3,
                vec![
                    NodeSpec::new(vec![Source::Input(0), Source::Input(1)]),
                    NodeSpec::new(vec![Source::Node(0), Source::Input(1), Source::Input(2)]),
                ],
                1,
            ),
        };
        s.expect("catalog structures are valid").named(name)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Chain(h) => write!(f, "{h}hop"),
            TaskKind::ParallelTwoHop => f.write_str("parallel2hop"),
            TaskKind::NonTree => f.write_str("nontree"),
        }
    }
}

impl FromStr for TaskKind {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.to_ascii_lowercase().chars().filter(|c| !matches!(c, '-' | '_' | ' ')).collect();
        match norm.as_str() {
            "parallel2hop" => return Ok(TaskKind::ParallelTwoHop),
            "nontree" => return Ok(TaskKind::NonTree),
            _ => {}
        }
        if let Some(h) = norm.strip_suffix("hop").and_then(|h| h.parse::<usize>().ok()) {
            if h >= 2 {
                return Ok(TaskKind::Chain(h));
            }
        }
        Err(TaskError::UnknownTask(s.to_string()))
    }
}

/// Explicit lookup table for one primitive function over a shared token set,
/// plus the seen mask over its domain.
///
/// Argument tuples are laid out row-major: `(a_0, ..., a_{m-1})` lives at
/// `sum a_i * vocab^(m-1-i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct PrimitiveTable {
    arity: usize,
    vocab: u32,
    table: Vec<u32>,
    seen: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    arity: usize,
    vocab: u32,
    table: Vec<u32>,
    seen_mask: Vec<u8>,
}

impl TryFrom<RawTable> for PrimitiveTable {
    type Error = TaskError;

    fn try_from(raw: RawTable) -> Result<Self, Self::Error> {
        let size = domain_size(raw.arity, raw.vocab)?;
        if raw.table.len() != size {
            return Err(TaskError::InvalidTable(format!("table has {} entries, expected {size}", raw.table.len())));
        }
        if raw.seen_mask.len() != size {
            return Err(TaskError::InvalidTable(format!("seen_mask has {} entries, expected {size}", raw.seen_mask.len())));
        }
        if let Some(v) = raw.table.iter().find(|&&v| v >= raw.vocab) {
            return Err(TaskError::InvalidTable(format!("output {v} outside token set of size {}", raw.vocab)));
        }
        if let Some(v) = raw.seen_mask.iter().find(|&&v| v > 1) {
            return Err(TaskError::InvalidTable(format!("seen_mask value {v} is not 0/1")));
        }
        Ok(PrimitiveTable {
            arity: raw.arity,
            vocab: raw.vocab,
            table: raw.table,
            seen: raw.seen_mask.into_iter().map(|b| b == 1).collect(),
        })
    }
}

impl From<PrimitiveTable> for RawTable {
    fn from(t: PrimitiveTable) -> Self {
        RawTable {
            arity: t.arity,
            vocab: t.vocab,
            table: t.table,
            seen_mask: t.seen.into_iter().map(u8::from).collect(),
        }
    }
}

fn domain_size(arity: usize, vocab: u32) -> Result<usize, TaskError> {
    if vocab < 2 {
        return Err(TaskError::VocabTooSmall(vocab));
    }
    if arity == 0 {
        return Err(TaskError::ZeroArity);
    }
    (vocab as usize)
        .checked_pow(arity as u32)
        .filter(|&s| s <= MAX_TABLE_ENTRIES)
        .ok_or(TaskError::TableTooLarge { vocab, arity })
}

impl PrimitiveTable {
    /// Builds a table from explicit outputs; every tuple starts out seen.
    pub fn from_outputs(arity: usize, vocab: u32, table: Vec<u32>) -> Result<Self, TaskError> {
        let size = domain_size(arity, vocab)?;
        RawTable { arity, vocab, table, seen_mask: vec![1; size] }.try_into()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn vocab(&self) -> u32 {
        self.vocab
    }

    pub fn domain_size(&self) -> usize {
        self.table.len()
    }

    pub fn outputs(&self) -> &[u32] {
        &self.table
    }

    pub fn seen_mask(&self) -> &[bool] {
        &self.seen
    }

    pub fn seen_count(&self) -> usize {
        self.seen.iter().filter(|&&s| s).count()
    }

    /// Row-major domain index of an argument tuple.
    #[inline]
    pub fn index_of(&self, args: &[TokenId]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        args.iter().fold(0usize, |acc, a| acc * self.vocab as usize + a.index())
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn args_of(&self, mut index: usize) -> Vec<TokenId> {
        let v = self.vocab as usize;
        let mut out = vec![TokenId(0); self.arity];
        for slot in out.iter_mut().rev() {
            *slot = TokenId((index % v) as u32);
            index /= v;
        }
        out
    }

    #[inline]
    pub fn apply_index(&self, index: usize) -> TokenId {
        TokenId(self.table[index])
    }

    #[inline]
    pub fn apply(&self, args: &[TokenId]) -> TokenId {
        self.apply_index(self.index_of(args))
    }

    #[inline]
    pub fn is_seen_index(&self, index: usize) -> bool {
        self.seen[index]
    }

    pub fn is_seen(&self, args: &[TokenId]) -> bool {
        self.seen[self.index_of(args)]
    }

    /// Replaces the seen mask with exactly `round(p_seen * domain_size)`
    /// tuples chosen uniformly without replacement.
    ///
    /// Draw order: one `rand::seq::index::sample` call on the stream
    /// `SEEN_MASK` of `seed`.
    pub fn with_seen_fraction(mut self, p_seen: f64, seed: u64) -> Result<Self, TaskError> {
        if !(0.0..=1.0).contains(&p_seen) || p_seen.is_nan() {
            return Err(TaskError::SeenFraction(p_seen));
        }
        let size = self.table.len();
        let count = seen_count_for(p_seen, size);
        let mut rng = rng::stream(seed, streams::SEEN_MASK);
        self.seen = vec![false; size];
        for i in index::sample(&mut rng, size, count) {
            self.seen[i] = true;
        }
        Ok(self)
    }

    /// Replaces the seen mask wholesale.
    pub fn with_seen_mask(mut self, mask: Vec<bool>) -> Result<Self, TaskError> {
        if mask.len() != self.table.len() {
            return Err(TaskError::InvalidTable(format!("mask has {} entries, expected {}", mask.len(), self.table.len())));
        }
        self.seen = mask;
        Ok(self)
    }

    /// Preimage sizes `|E_b|` for every output token `b`.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.vocab as usize];
        for &o in &self.table {
            sizes[o as usize] += 1;
        }
        sizes
    }
}

/// Number of seen tuples for a fraction, rounded to the nearest integer.
pub fn seen_count_for(p_seen: f64, size: usize) -> usize {
    ((p_seen * size as f64).round() as usize).min(size)
}

/// Random primitive: every domain tuple maps to an independently, uniformly
/// drawn output token. All tuples are marked seen.
///
/// Draw order: one `random_range(0..vocab)` per tuple in row-major order on
/// the stream `PRIMITIVE_TABLE` of `seed`.
pub fn make_random_primitive(arity: usize, vocab: u32, seed: u64) -> Result<PrimitiveTable, TaskError> {
    let size = domain_size(arity, vocab)?;
    let mut rng = rng::stream(seed, streams::PRIMITIVE_TABLE);
    let table = (0..size).map(|_| rng.random_range(0..vocab)).collect();
    Ok(PrimitiveTable { arity, vocab, table, seen: vec![true; size] })
}

/// Binary primitive whose output classes all have exactly `vocab` preimages:
/// the `vocab^2` tuples are shuffled and cut into `vocab` consecutive chunks,
/// chunk `b` mapping to token `b`.
pub fn make_balanced_primitive(vocab: u32, seed: u64) -> Result<PrimitiveTable, TaskError> {
    let size = domain_size(2, vocab)?;
    let mut rng = rng::stream(seed, streams::PRIMITIVE_TABLE);
    let mut order: Vec<usize> = (0..size).collect();
    order.shuffle(&mut rng);
    let mut table = vec![0u32; size];
    for (class, chunk) in order.chunks(vocab as usize).enumerate() {
        for &tuple in chunk {
            table[tuple] = class as u32;
        }
    }
    Ok(PrimitiveTable { arity: 2, vocab, table, seen: vec![true; size] })
}

/// Result of evaluating a composition on one input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub output: TokenId,
    /// Values of every non-output node, in node (topological) order.
    pub intermediates: Vec<TokenId>,
}

/// Per-node trace: the value and the domain index of the applied tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Application {
    pub value: TokenId,
    pub domain_index: usize,
}

fn check_input(structure: &CompositionStructure, vocab: u32, input: &[TokenId]) -> Result<(), TaskError> {
    if input.len() != structure.n_inputs {
        return Err(TaskError::InputLength { expected: structure.n_inputs, found: input.len() });
    }
    if let Some((position, t)) = input.iter().enumerate().find(|(_, t)| t.0 >= vocab) {
        return Err(TaskError::TokenOutOfRange { position, token: t.0, vocab });
    }
    Ok(())
}

/// Applies every node in order, returning value and applied tuple per node.
/// Assumes the structure, tables and input were already checked.
pub fn trace_unchecked(
    structure: &CompositionStructure,
    primitives: &[PrimitiveTable],
    input: &[TokenId],
    out: &mut Vec<Application>,
) {
    out.clear();
    for (node, table) in structure.nodes.iter().zip(primitives) {
        let v = table.vocab as usize;
        let mut index = 0usize;
        for src in &node.args {
            let tok = match *src {
                Source::Input(i) => input[i],
                Source::Node(p) => out[p].value,
            };
            index = index * v + tok.index();
        }
        out.push(Application { value: table.apply_index(index), domain_index: index });
    }
}

/// Per-node applications for `input`, validated.
pub fn trace(
    structure: &CompositionStructure,
    primitives: &[PrimitiveTable],
    input: &[TokenId],
) -> Result<Vec<Application>, TaskError> {
    let vocab = structure.check_primitives(primitives)?;
    check_input(structure, vocab, input)?;
    let mut out = Vec::with_capacity(structure.nodes.len());
    trace_unchecked(structure, primitives, input, &mut out);
    Ok(out)
}

/// Evaluates the composition on `input`.
pub fn evaluate(
    structure: &CompositionStructure,
    primitives: &[PrimitiveTable],
    input: &[TokenId],
) -> Result<Evaluation, TaskError> {
    let apps = trace(structure, primitives, input)?;
    Ok(evaluation_from_trace(structure, &apps))
}

pub(crate) fn evaluation_from_trace(structure: &CompositionStructure, apps: &[Application]) -> Evaluation {
    let intermediates = apps
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != structure.output)
        .map(|(_, a)| a.value)
        .collect();
    Evaluation { output: apps[structure.output].value, intermediates }
}

/// One independently seeded random table per node of `structure`.
///
/// Node `j` uses seed `derive_seed(seed, j)`; its seen mask is drawn from the
/// same derived seed.
pub fn random_primitives_for(
    structure: &CompositionStructure,
    vocab: u32,
    p_seen: f64,
    seed: u64,
) -> Result<Vec<PrimitiveTable>, TaskError> {
    structure.check_ranges(vocab)?;
    structure
        .nodes
        .iter()
        .enumerate()
        .map(|(j, node)| {
            let node_seed = rng::derive_seed(seed, j as u64);
            make_random_primitive(node.arity, vocab, node_seed)?.with_seen_fraction(p_seen, node_seed)
        })
        .collect()
}

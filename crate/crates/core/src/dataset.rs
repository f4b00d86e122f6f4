//! Training and test set construction, plus the text and JSONL formats.
//!
//! In-domain (ID) combinations are the inputs on which every node applies its
//! primitive to a tuple inside that primitive's seen mask. Training sets are
//! drawn uniformly without replacement from them. Test inputs are split by
//! what the *training set* actually exercised: an ID test input only uses
//! node applications that occur somewhere in training, an OOD test input
//! uses at least one that never does.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, streams};
use crate::task::{
    evaluation_from_trace, random_primitives_for, trace_unchecked, Application, CompositionStructure,
    PrimitiveTable, TaskError, TokenId,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("requested {requested} examples but only {available} combinations are available")]
    Capacity { requested: usize, available: usize },
    #[error("input space {vocab}^{n} is too large to enumerate")]
    DomainTooLarge { vocab: u32, n: usize },
    #[error("test set size must be at least 1")]
    EmptyTestRequest,
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: {source}")]
    Text { line: usize, source: ParseError },
    #[error("example {index} is inconsistent with the composition: {detail}")]
    Inconsistent { index: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    IdTest,
    OodTest,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::IdTest => "id_test",
            Split::OodTest => "ood_test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled input. JSONL form:
/// `{"input":[5,12,3],"target":17,"intermediates":[9],"split":"train"}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Example {
    pub input: Vec<TokenId>,
    pub target: TokenId,
    #[serde(default)]
    pub intermediates: Vec<TokenId>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub structure_id: String,
    pub vocab_size: u32,
    pub p_seen: f64,
    pub seed: u64,
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Re-evaluates every example and checks target and intermediates.
    pub fn verify(&self, structure: &CompositionStructure, primitives: &[PrimitiveTable]) -> Result<(), DatasetError> {
        verify_examples(&self.examples, structure, primitives)
    }
}

pub fn verify_examples(
    examples: &[Example],
    structure: &CompositionStructure,
    primitives: &[PrimitiveTable],
) -> Result<(), DatasetError> {
    for (i, ex) in examples.iter().enumerate() {
        let e = crate::task::evaluate(structure, primitives, &ex.input)?;
        if e.output != ex.target || e.intermediates != ex.intermediates {
            return Err(DatasetError::Inconsistent {
                index: i,
                detail: format!("expected target {} / intermediates {:?}", e.output, e.intermediates),
            });
        }
    }
    Ok(())
}

/// Mixed-radix packing of full inputs into `u64` codes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct InputCodec {
    vocab: u64,
    n: usize,
}

impl InputCodec {
    pub(crate) fn new(vocab: u32, n: usize) -> Result<Self, DatasetError> {
        (vocab as u64)
            .checked_pow(n as u32)
            .ok_or(DatasetError::DomainTooLarge { vocab, n })?;
        Ok(InputCodec { vocab: vocab as u64, n })
    }

    pub(crate) fn encode(&self, input: &[TokenId]) -> u64 {
        input.iter().fold(0u64, |acc, t| acc * self.vocab + t.0 as u64)
    }

    pub(crate) fn decode(&self, mut code: u64) -> Vec<TokenId> {
        let mut out = vec![TokenId(0); self.n];
        for slot in out.iter_mut().rev() {
            *slot = TokenId((code % self.vocab) as u32);
            code /= self.vocab;
        }
        out
    }
}

/// Largest input space we are willing to enumerate exhaustively.
pub const MAX_ENUMERATION: u64 = 1 << 34;

fn enumeration_ranges(
    structure: &CompositionStructure,
    vocab: u32,
) -> Result<Vec<std::ops::Range<u32>>, DatasetError> {
    let ranges: Vec<_> = (0..structure.n_inputs).map(|i| structure.input_range(i, vocab)).collect();
    let total = ranges
        .iter()
        .try_fold(1u64, |acc, r| acc.checked_mul(r.len() as u64))
        .filter(|&t| t <= MAX_ENUMERATION);
    if total.is_none() {
        return Err(DatasetError::DomainTooLarge { vocab, n: structure.n_inputs });
    }
    Ok(ranges)
}

/// Visits every input with the given first token, in lexicographic order.
fn for_each_input_with_prefix(
    ranges: &[std::ops::Range<u32>],
    first: u32,
    mut visit: impl FnMut(&[TokenId]),
) {
    let n = ranges.len();
    let mut cur: Vec<TokenId> = ranges.iter().map(|r| TokenId(r.start)).collect();
    cur[0] = TokenId(first);
    if ranges[1..].iter().any(|r| r.is_empty()) {
        return;
    }
    loop {
        visit(&cur);
        // odometer increment over positions 1..n
        let mut pos = n;
        loop {
            if pos == 1 {
                return;
            }
            pos -= 1;
            cur[pos].0 += 1;
            if cur[pos].0 < ranges[pos].end {
                break;
            }
            cur[pos].0 = ranges[pos].start;
        }
    }
}

fn all_seen(structure: &CompositionStructure, primitives: &[PrimitiveTable], apps: &[Application]) -> bool {
    debug_assert_eq!(structure.nodes.len(), apps.len());
    primitives.iter().zip(apps).all(|(t, a)| t.is_seen_index(a.domain_index))
}

fn example_from(structure: &CompositionStructure, input: &[TokenId], apps: &[Application], split: Split) -> Example {
    let e = evaluation_from_trace(structure, apps);
    Example { input: input.to_vec(), target: e.output, intermediates: e.intermediates, split }
}

/// Lazily enumerates the in-domain combinations in lexicographic input order.
pub struct IdCombinations<'a> {
    structure: &'a CompositionStructure,
    primitives: &'a [PrimitiveTable],
    ranges: Vec<std::ops::Range<u32>>,
    cur: Option<Vec<TokenId>>,
    apps: Vec<Application>,
}

impl Iterator for IdCombinations<'_> {
    type Item = Example;

    fn next(&mut self) -> Option<Example> {
        loop {
            let cur = self.cur.as_mut()?;
            trace_unchecked(self.structure, self.primitives, cur, &mut self.apps);
            let hit = all_seen(self.structure, self.primitives, &self.apps)
                .then(|| example_from(self.structure, cur, &self.apps, Split::Train));
            // advance
            let mut pos = cur.len();
            let mut done = true;
            while pos > 0 {
                pos -= 1;
                cur[pos].0 += 1;
                if cur[pos].0 < self.ranges[pos].end {
                    done = false;
                    break;
                }
                cur[pos].0 = self.ranges[pos].start;
            }
            if done {
                self.cur = None;
            }
            if hit.is_some() {
                return hit;
            }
        }
    }
}

/// Stream of inputs whose every node application is inside the seen mask.
pub fn enumerate_id_combinations<'a>(
    structure: &'a CompositionStructure,
    primitives: &'a [PrimitiveTable],
) -> Result<IdCombinations<'a>, DatasetError> {
    let vocab = structure.check_primitives(primitives)?;
    let ranges = enumeration_ranges(structure, vocab)?;
    let cur = ranges.iter().all(|r| !r.is_empty()).then(|| ranges.iter().map(|r| TokenId(r.start)).collect());
    Ok(IdCombinations { structure, primitives, ranges, cur, apps: Vec::new() })
}

/// Same set as [`enumerate_id_combinations`], sharded over the first input
/// position and concatenated in shard order (so still lexicographic).
pub fn collect_id_combinations(
    structure: &CompositionStructure,
    primitives: &[PrimitiveTable],
) -> Result<Vec<Example>, DatasetError> {
    let vocab = structure.check_primitives(primitives)?;
    let ranges = enumeration_ranges(structure, vocab)?;
    let shards: Vec<Vec<Example>> = ranges[0]
        .clone()
        .into_par_iter()
        .map(|first| {
            let mut apps = Vec::with_capacity(structure.nodes.len());
            let mut out = Vec::new();
            for_each_input_with_prefix(&ranges, first, |input| {
                trace_unchecked(structure, primitives, input, &mut apps);
                if all_seen(structure, primitives, &apps) {
                    out.push(example_from(structure, input, &apps, Split::Train));
                }
            });
            out
        })
        .collect();
    Ok(shards.into_iter().flatten().collect())
}

/// Draws `n` distinct examples uniformly without replacement from `pool`.
///
/// Draw order: one `rand::seq::index::sample(len, n)` call on stream
/// `TRAIN_SAMPLE` of `seed`; chosen indices are then sorted, so the result
/// keeps the pool's order.
pub fn sample_training_set(pool: &[Example], n: usize, seed: u64) -> Result<Vec<Example>, DatasetError> {
    if n > pool.len() {
        return Err(DatasetError::Capacity { requested: n, available: pool.len() });
    }
    let mut rng = rng::stream(seed, streams::TRAIN_SAMPLE);
    let mut picked = index::sample(&mut rng, pool.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked
        .into_iter()
        .map(|i| Example { split: Split::Train, ..pool[i].clone() })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSets {
    pub id_test: Vec<Example>,
    pub ood_test: Vec<Example>,
    /// Candidate pool sizes before sampling.
    pub id_pool: usize,
    pub ood_pool: usize,
    /// Set when a pool was smaller than the requested size and was returned whole.
    pub id_short: bool,
    pub ood_short: bool,
}

/// Per-node record of which argument tuples the training set applies.
pub fn observed_applications(
    structure: &CompositionStructure,
    primitives: &[PrimitiveTable],
    train: &[Example],
) -> Result<Vec<Vec<bool>>, DatasetError> {
    structure.check_primitives(primitives)?;
    let mut observed: Vec<Vec<bool>> = primitives.iter().map(|t| vec![false; t.domain_size()]).collect();
    for ex in train {
        let apps = crate::task::trace(structure, primitives, &ex.input)?;
        for (seen, a) in observed.iter_mut().zip(&apps) {
            seen[a.domain_index] = true;
        }
    }
    Ok(observed)
}

/// Builds ID and OOD test sets of up to `size` examples each.
///
/// Candidates are all inputs not in `train`. An input is an ID candidate
/// when each of its node applications occurs in `train`, and an OOD
/// candidate otherwise. Each set is sampled uniformly without replacement
/// (streams `ID_TEST_SAMPLE` / `OOD_TEST_SAMPLE`) and sorted by input.
pub fn build_test_sets(
    structure: &CompositionStructure,
    primitives: &[PrimitiveTable],
    train: &[Example],
    size: usize,
    seed: u64,
) -> Result<TestSets, DatasetError> {
    if size == 0 {
        return Err(DatasetError::EmptyTestRequest);
    }
    let vocab = structure.check_primitives(primitives)?;
    let ranges = enumeration_ranges(structure, vocab)?;
    let codec = InputCodec::new(vocab, structure.n_inputs)?;
    let observed = observed_applications(structure, primitives, train)?;
    let train_codes: HashSet<u64> = train.iter().map(|e| codec.encode(&e.input)).collect();

    let shards: Vec<(Vec<u64>, Vec<u64>)> = ranges[0]
        .clone()
        .into_par_iter()
        .map(|first| {
            let mut apps = Vec::with_capacity(structure.nodes.len());
            let (mut id, mut ood) = (Vec::new(), Vec::new());
            for_each_input_with_prefix(&ranges, first, |input| {
                let code = codec.encode(input);
                if train_codes.contains(&code) {
                    return;
                }
                trace_unchecked(structure, primitives, input, &mut apps);
                if observed.iter().zip(&apps).all(|(seen, a)| seen[a.domain_index]) {
                    id.push(code);
                } else {
                    ood.push(code);
                }
            });
            (id, ood)
        })
        .collect();
    let (mut id_pool, mut ood_pool) = (Vec::new(), Vec::new());
    for (id, ood) in shards {
        id_pool.extend(id);
        ood_pool.extend(ood);
    }

    let draw = |pool: &[u64], stream: u64, split: Split| -> Vec<Example> {
        let take = size.min(pool.len());
        let mut rng = rng::stream(seed, stream);
        let mut picked = index::sample(&mut rng, pool.len(), take).into_vec();
        picked.sort_unstable();
        let mut apps = Vec::with_capacity(structure.nodes.len());
        picked
            .into_iter()
            .map(|i| {
                let input = codec.decode(pool[i]);
                trace_unchecked(structure, primitives, &input, &mut apps);
                example_from(structure, &input, &apps, split)
            })
            .collect()
    };

    Ok(TestSets {
        id_test: draw(&id_pool, streams::ID_TEST_SAMPLE, Split::IdTest),
        ood_test: draw(&ood_pool, streams::OOD_TEST_SAMPLE, Split::OodTest),
        id_pool: id_pool.len(),
        ood_pool: ood_pool.len(),
        id_short: id_pool.len() < size,
        ood_short: ood_pool.len() < size,
    })
}

/// Everything needed to regenerate one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub structure: CompositionStructure,
    pub vocab: u32,
    pub p_seen: f64,
    pub n_train: usize,
    pub test_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub primitives: Vec<PrimitiveTable>,
    pub id_pool_size: usize,
    pub train: Dataset,
    pub tests: TestSets,
}

/// Primitives, ID enumeration, training sample and test sets from one seed.
pub fn generate(config: &GenConfig) -> Result<Generated, DatasetError> {
    let primitives = random_primitives_for(&config.structure, config.vocab, config.p_seen, config.seed)?;
    let pool = collect_id_combinations(&config.structure, &primitives)?;
    let examples = sample_training_set(&pool, config.n_train, config.seed)?;
    let tests = build_test_sets(&config.structure, &primitives, &examples, config.test_size, config.seed)?;
    Ok(Generated {
        primitives,
        id_pool_size: pool.len(),
        train: Dataset {
            structure_id: config.structure.id(),
            vocab_size: config.vocab,
            p_seen: config.p_seen,
            seed: config.seed,
            examples,
        },
        tests,
    })
}

/// Primitive-application examples (`<t_a><t_b>` → `<t_c></a>`) for every
/// tuple of `table`, optionally only the seen ones.
pub fn partial_examples(table: &PrimitiveTable, seen_only: bool) -> Vec<Example> {
    (0..table.domain_size())
        .filter(|&i| !seen_only || table.is_seen_index(i))
        .map(|i| Example {
            input: table.args_of(i),
            target: table.apply_index(i),
            intermediates: Vec::new(),
            split: Split::Train,
        })
        .collect()
}

pub fn write_jsonl<W: Write>(mut w: W, examples: &[Example]) -> Result<(), DatasetError> {
    for ex in examples {
        serde_json::to_writer(&mut w, ex).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<Example>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| DatasetError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Text format

pub const END_MARKER: &str = "</a>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextFormat {
    /// `<t_5><t_12><t_3>\t<t_17></a>`
    Plain,
    /// `<t_5><t_12><t_3>\t<t_9><t_17></a>`: intermediates precede the target.
    Cot,
    /// `<t_5><t_12>\t<t_9></a>`: a single primitive application.
    Partial,
}

impl FromStr for TextFormat {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(TextFormat::Plain),
            "cot" => Ok(TextFormat::Cot),
            "partial" => Ok(TextFormat::Partial),
            _ => Err(ParseError { kind: ParseErrorKind::UnknownFormat(s.to_string()), offset: 0 }),
        }
    }
}

impl fmt::Display for TextFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TextFormat::Plain => "plain",
            TextFormat::Cot => "cot",
            TextFormat::Partial => "partial",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MalformedToken,
    Truncated,
    MissingEndMarker,
    InputArity { expected: usize, found: usize },
    TargetCount { expected: usize, found: usize },
    UnknownFormat(String),
}

/// Text parse failure at a byte offset into the line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::MalformedToken => f.write_str("malformed token"),
            ParseErrorKind::Truncated => f.write_str("truncated line"),
            ParseErrorKind::MissingEndMarker => f.write_str("missing end marker"),
            ParseErrorKind::InputArity { expected, found } => {
                write!(f, "expected {expected} input tokens, found {found}")
            }
            ParseErrorKind::TargetCount { expected, found } => {
                write!(f, "expected {expected} target tokens, found {found}")
            }
            ParseErrorKind::UnknownFormat(s) => write!(f, "unknown text format `{s}`"),
        }
    }
}

fn push_token(out: &mut String, t: TokenId) {
    use std::fmt::Write as _;
    let _ = write!(out, "<t_{}>", t.0);
}

/// Renders one example as a text line (no trailing newline).
pub fn serialize_example(example: &Example, format: TextFormat) -> String {
    let mut s = String::with_capacity(8 * (example.input.len() + example.intermediates.len() + 2));
    for &t in &example.input {
        push_token(&mut s, t);
    }
    s.push('\t');
    if format == TextFormat::Cot {
        for &t in &example.intermediates {
            push_token(&mut s, t);
        }
    }
    push_token(&mut s, example.target);
    s.push_str(END_MARKER);
    s
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

enum Item {
    Token(TokenId),
    Tab,
    End,
    Eol,
}

impl Cursor<'_> {
    fn err(&self, kind: ParseErrorKind, offset: usize) -> ParseError {
        ParseError { kind, offset }
    }

    /// `lit` must match at the cursor; a line ending inside it is a truncation.
    fn expect_literal(&mut self, lit: &[u8], start: usize) -> Result<(), ParseError> {
        for &b in lit {
            match self.bytes.get(self.pos) {
                None => return Err(self.err(ParseErrorKind::Truncated, self.pos)),
                Some(&c) if c == b => self.pos += 1,
                Some(_) => return Err(self.err(ParseErrorKind::MalformedToken, start)),
            }
        }
        Ok(())
    }

    fn next_item(&mut self) -> Result<Item, ParseError> {
        let start = self.pos;
        match self.bytes.get(self.pos) {
            None => Ok(Item::Eol),
            Some(b'\t') => {
                self.pos += 1;
                Ok(Item::Tab)
            }
            Some(b'<') => match self.bytes.get(self.pos + 1) {
                Some(b'/') => {
                    self.expect_literal(END_MARKER.as_bytes(), start)?;
                    Ok(Item::End)
                }
                _ => {
                    self.expect_literal(b"<t_", start)?;
                    let digits_start = self.pos;
                    while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
                        self.pos += 1;
                    }
                    let digits = &self.bytes[digits_start..self.pos];
                    if self.pos >= self.bytes.len() {
                        return Err(self.err(ParseErrorKind::Truncated, self.pos));
                    }
                    if digits.is_empty() || (digits.len() > 1 && digits[0] == b'0') || self.bytes[self.pos] != b'>' {
                        return Err(self.err(ParseErrorKind::MalformedToken, start));
                    }
                    self.pos += 1;
                    let value = std::str::from_utf8(digits)
                        .ok()
                        .and_then(|d| d.parse::<u32>().ok())
                        .ok_or_else(|| self.err(ParseErrorKind::MalformedToken, start))?;
                    Ok(Item::Token(TokenId(value)))
                }
            },
            Some(_) => Err(self.err(ParseErrorKind::MalformedToken, start)),
        }
    }
}

/// Parses one text line (a trailing `\n` or `\r\n` is ignored).
///
/// `n_inputs` is the expected number of input tokens: the structure's input
/// count for `plain`/`cot`, the primitive arity for `partial`. For `cot` the
/// last target-side token is the target and the ones before it are the
/// intermediates. Parsed examples carry `Split::Train`; plain and partial
/// lines have no intermediates.
pub fn parse_example(line: &str, format: TextFormat, n_inputs: usize) -> Result<Example, ParseError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let mut cur = Cursor { bytes: line.as_bytes(), pos: 0 };

    let mut input = Vec::with_capacity(n_inputs);
    loop {
        let at = cur.pos;
        match cur.next_item()? {
            Item::Token(t) => input.push(t),
            Item::Tab => {
                if input.len() != n_inputs {
                    return Err(cur.err(ParseErrorKind::InputArity { expected: n_inputs, found: input.len() }, at));
                }
                break;
            }
            Item::Eol => return Err(cur.err(ParseErrorKind::Truncated, at)),
            Item::End => return Err(cur.err(ParseErrorKind::MalformedToken, at)),
        }
    }

    let mut outputs = Vec::new();
    loop {
        let at = cur.pos;
        match cur.next_item()? {
            Item::Token(t) => outputs.push(t),
            Item::End => {
                if cur.pos != line.len() {
                    return Err(cur.err(ParseErrorKind::MalformedToken, cur.pos));
                }
                break;
            }
            Item::Eol if outputs.is_empty() => return Err(cur.err(ParseErrorKind::Truncated, at)),
            Item::Eol => return Err(cur.err(ParseErrorKind::MissingEndMarker, at)),
            Item::Tab => return Err(cur.err(ParseErrorKind::MalformedToken, at)),
        }
    }

    let target = match (format, outputs.len()) {
        (_, 0) => return Err(cur.err(ParseErrorKind::TargetCount { expected: 1, found: 0 }, cur.pos)),
        (TextFormat::Cot, _) => outputs.pop().expect("nonempty"),
        (_, 1) => outputs.pop().expect("nonempty"),
        (_, found) => return Err(cur.err(ParseErrorKind::TargetCount { expected: 1, found }, cur.pos)),
    };
    Ok(Example { input, target, intermediates: outputs, split: Split::Train })
}

/// Reads a text export back, one example per nonempty line.
pub fn read_text<R: BufRead>(r: R, format: TextFormat, n_inputs: usize) -> Result<Vec<Example>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        out.push(parse_example(&line, format, n_inputs).map_err(|source| DatasetError::Text { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn write_text<W: Write>(mut w: W, examples: &[Example], format: TextFormat) -> Result<(), DatasetError> {
    for ex in examples {
        w.write_all(serialize_example(ex, format).as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

//! Representation metrics on supplied numbers: intra/inter cosine gap,
//! indirect effect of a patched activation, and mean reciprocal rank.
//!
//! MRR follows the usual convention: 1 means the target is ranked first in
//! every row, values near 0 mean it is ranked far down.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("vector {0} has zero norm")]
    ZeroVector(usize),
    #[error("vector data of length {len} does not split into rows of dimension {dim}")]
    Dimension { dim: usize, len: usize },
    #[error("{what} has {found} entries, expected {expected}")]
    Count { what: &'static str, expected: usize, found: usize },
    #[error("need at least one same-group and one cross-group pair (got {intra} and {inter})")]
    TooFewPairs { intra: usize, inter: usize },
    #[error("clean and corrupted probabilities differ by {0}, below the tolerance")]
    DegenerateTrace(f64),
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityRange(f64),
    #[error("no rows")]
    Empty,
    #[error("row {row}: target {target} is out of range for {len} scores")]
    TargetOutOfRange { row: usize, target: usize, len: usize },
    #[error("row {0} contains a non-finite score")]
    NonFinite(usize),
    #[error("unknown grouping key {0:?}")]
    UnknownKey(String),
    #[error("vector file: {0}")]
    Format(String),
}

/// Vectors of one dimension, each with a group label and optional named tags.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVectorSet<F> {
    dim: usize,
    data: Vec<F>,
    labels: Vec<String>,
    /// Tag name → one value per vector.
    tags: BTreeMap<String, Vec<String>>,
}

impl<F: Real> LabeledVectorSet<F> {
    /// `data` holds the vectors row by row.
    pub fn new(dim: usize, data: Vec<F>, labels: Vec<String>) -> Result<Self, MetricsError> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(MetricsError::Dimension { dim, len: data.len() });
        }
        let count = data.len() / dim;
        if labels.len() != count {
            return Err(MetricsError::Count { what: "labels", expected: count, found: labels.len() });
        }
        Ok(LabeledVectorSet { dim, data, labels, tags: BTreeMap::new() })
    }

    pub fn from_rows(rows: &[Vec<F>], labels: Vec<String>) -> Result<Self, MetricsError> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(MetricsError::Dimension { dim, len: r.len() });
        }
        Self::new(dim, rows.concat(), labels)
    }

    pub fn with_tag(mut self, name: impl Into<String>, values: Vec<String>) -> Result<Self, MetricsError> {
        if values.len() != self.len() {
            return Err(MetricsError::Count { what: "tag values", expected: self.len(), found: values.len() });
        }
        self.tags.insert(name.into(), values);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[F] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn tags(&self) -> &BTreeMap<String, Vec<String>> {
        &self.tags
    }

    /// Group key of every vector. `key` is `label`, a tag name, or several
    /// of those joined with `+` for a composite key.
    pub fn group_keys(&self, key: &str) -> Result<Vec<String>, MetricsError> {
        let parts: Vec<&[String]> = key
            .split('+')
            .map(|k| match k.trim() {
                "label" => Ok(self.labels.as_slice()),
                t => self.tags.get(t).map(Vec::as_slice).ok_or_else(|| MetricsError::UnknownKey(t.to_string())),
            })
            .collect::<Result<_, _>>()?;
        Ok((0..self.len()).map(|i| parts.iter().map(|p| p[i].as_str()).collect::<Vec<_>>().join("|")).collect())
    }

    /// The vectors at `indices`, with their labels and tags.
    pub fn select(&self, indices: &[usize]) -> Self {
        let data = indices.iter().flat_map(|&i| self.vector(i).iter().copied()).collect();
        let pick = |v: &[String]| indices.iter().map(|&i| v[i].clone()).collect();
        LabeledVectorSet {
            dim: self.dim,
            data,
            labels: pick(&self.labels),
            tags: self.tags.iter().map(|(k, v)| (k.clone(), pick(v))).collect(),
        }
    }

    /// Splits by the value of one tag, in sorted tag-value order.
    pub fn split_by_tag(&self, tag: &str) -> Result<Vec<(String, Self)>, MetricsError> {
        let values = self.tags.get(tag).ok_or_else(|| MetricsError::UnknownKey(tag.to_string()))?;
        let mut by_value: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, v) in values.iter().enumerate() {
            by_value.entry(v).or_default().push(i);
        }
        Ok(by_value.into_iter().map(|(v, idx)| (v.to_string(), self.select(&idx))).collect())
    }

    pub fn iicg(&self, weighting: PairWeighting) -> Result<F, MetricsError> {
        self.iicg_by("label", weighting)
    }

    pub fn iicg_by(&self, key: &str, weighting: PairWeighting) -> Result<F, MetricsError> {
        let keys = self.group_keys(key)?;
        iicg(self.dim, &self.data, &keys, weighting)
    }
}

/// How pairs are averaged in [`iicg`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairWeighting {
    /// Every unordered pair counts once.
    #[default]
    Pairs,
    /// Mean over groups of the within-group mean, minus mean over group
    /// pairs of the between-group mean.
    GroupBalanced,
}

fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Intra–inter cosine gap: mean cosine similarity of same-group pairs minus
/// that of different-group pairs.
///
/// Uses `Σ_{i<j} û_i·û_j = (|Σ û_i|² - m) / 2` on unit vectors, per group
/// and overall, so the cost is linear in the number of vectors.
pub fn iicg<F: Real, K: Eq + std::hash::Hash>(
    dim: usize,
    data: &[F],
    groups: &[K],
    weighting: PairWeighting,
) -> Result<F, MetricsError> {
    if dim == 0 || data.len() != dim * groups.len() {
        return Err(MetricsError::Dimension { dim, len: data.len() });
    }
    let mut group_of: HashMap<&K, usize> = HashMap::new();
    let mut members: Vec<usize> = Vec::new();
    let gid: Vec<usize> = groups
        .iter()
        .map(|g| {
            let next = group_of.len();
            let id = *group_of.entry(g).or_insert(next);
            if id == members.len() {
                members.push(0);
            }
            members[id] += 1;
            id
        })
        .collect();
    let n_groups = members.len();
    let mut sums = vec![F::zero(); n_groups * dim];
    let mut total = vec![F::zero(); dim];
    for (i, row) in data.chunks_exact(dim).enumerate() {
        let norm = dot(row, row).sqrt();
        if !(norm > F::zero()) {
            return Err(MetricsError::ZeroVector(i));
        }
        let s = &mut sums[gid[i] * dim..(gid[i] + 1) * dim];
        for ((acc, t), &x) in s.iter_mut().zip(total.iter_mut()).zip(row) {
            *acc = *acc + x / norm;
            *t = *t + x / norm;
        }
    }
    let m = groups.len();
    let pairs = |c: usize| c * c.saturating_sub(1) / 2;
    let intra_pairs: usize = members.iter().map(|&c| pairs(c)).sum();
    let inter_pairs = pairs(m) - intra_pairs;
    if intra_pairs == 0 || inter_pairs == 0 {
        return Err(MetricsError::TooFewPairs { intra: intra_pairs, inter: inter_pairs });
    }
    let half = F::of(0.5);
    let group_sum = |g: usize| &sums[g * dim..(g + 1) * dim];
    let intra_of = |g: usize| (dot(group_sum(g), group_sum(g)) - F::of_usize(members[g])) * half;
    match weighting {
        PairWeighting::Pairs => {
            let intra: F = (0..n_groups).map(intra_of).sum();
            let all = (dot(&total, &total) - F::of_usize(m)) * half;
            let inter = all - intra;
            Ok(intra / F::of_usize(intra_pairs) - inter / F::of_usize(inter_pairs))
        }
        PairWeighting::GroupBalanced => {
            let multi: Vec<usize> = (0..n_groups).filter(|&g| members[g] >= 2).collect();
            let intra = multi.iter().map(|&g| intra_of(g) / F::of_usize(pairs(members[g]))).sum::<F>()
                / F::of_usize(multi.len());
            let mut inter = F::zero();
            for g in 0..n_groups {
                for h in g + 1..n_groups {
                    inter = inter + dot(group_sum(g), group_sum(h)) / F::of_usize(members[g] * members[h]);
                }
            }
            inter = inter / F::of_usize(pairs(n_groups));
            Ok(intra - inter)
        }
    }
}

/// Tolerance on `|p_corrupt - p_clean|` used by [`indirect_effect`].
pub const DEGENERATE_TRACE_EPSILON: f64 = 1e-9;

/// `(p_patched - p_clean) / (p_corrupt - p_clean)`.
pub fn indirect_effect<F: Real>(p_clean: F, p_corrupt: F, p_patched: F) -> Result<F, MetricsError> {
    indirect_effect_with_epsilon(p_clean, p_corrupt, p_patched, F::of(DEGENERATE_TRACE_EPSILON))
}

pub fn indirect_effect_with_epsilon<F: Real>(
    p_clean: F,
    p_corrupt: F,
    p_patched: F,
    epsilon: F,
) -> Result<F, MetricsError> {
    for p in [p_clean, p_corrupt, p_patched] {
        if !(p >= F::zero() && p <= F::one()) {
            return Err(MetricsError::ProbabilityRange(p.to_f64_lossy()));
        }
    }
    let denom = p_corrupt - p_clean;
    if denom.abs() < epsilon {
        return Err(MetricsError::DegenerateTrace(denom.to_f64_lossy()));
    }
    Ok((p_patched - p_clean) / denom)
}

/// Scores over the vocabulary and the index of the target token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow<F> {
    pub scores: Vec<F>,
    pub target: usize,
}

/// `1 + #{scores strictly above the target's}`; ties rank the target first.
pub fn target_rank<F: Real>(row: &ScoreRow<F>) -> usize {
    let t = row.scores[row.target];
    1 + row.scores.iter().filter(|&&s| s > t).count()
}

/// Mean reciprocal rank of the targets.
pub fn mrr<F: Real>(rows: &[ScoreRow<F>]) -> Result<F, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut total = F::zero();
    for (i, row) in rows.iter().enumerate() {
        if row.target >= row.scores.len() {
            return Err(MetricsError::TargetOutOfRange { row: i, target: row.target, len: row.scores.len() });
        }
        if row.scores.iter().any(|s| !s.is_finite()) {
            return Err(MetricsError::NonFinite(i));
        }
        total = total + F::of_usize(target_rank(row)).recip();
    }
    Ok(total / F::of_usize(rows.len()))
}

/// First line of a vector file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorHeader {
    pub dim: usize,
    pub count: usize,
    pub labels: Vec<Value>,
    /// Per-vector arrays, or scalars shared by every vector.
    #[serde(default)]
    pub tags: BTreeMap<String, Value>,
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Reads a vector file: a JSON header line, then either `count·dim`
/// little-endian `f32`s or `count` JSON arrays, one per line.
pub fn read_vector_file(bytes: &[u8]) -> Result<LabeledVectorSet<f32>, MetricsError> {
    let fmt = |m: String| MetricsError::Format(m);
    let split = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| fmt("missing header line".into()))?;
    let header: VectorHeader =
        serde_json::from_slice(&bytes[..split]).map_err(|e| fmt(format!("header: {e}")))?;
    let body = &bytes[split + 1..];
    let expected = header.count * header.dim;
    let data: Vec<f32> = if body.len() == expected * 4 {
        body.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect()
    } else {
        let text = std::str::from_utf8(body).map_err(|_| fmt(format!("body is neither {expected} f32 values nor JSON lines")))?;
        let mut data = Vec::with_capacity(expected);
        for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let row: Vec<f32> = serde_json::from_str(line).map_err(|e| fmt(format!("row {i}: {e}")))?;
            if row.len() != header.dim {
                return Err(fmt(format!("row {i} has {} values, expected {}", row.len(), header.dim)));
            }
            data.extend(row);
        }
        data
    };
    if data.len() != expected {
        return Err(MetricsError::Count { what: "vector values", expected, found: data.len() });
    }
    let labels = header.labels.iter().map(value_text).collect();
    let mut set = LabeledVectorSet::new(header.dim, data, labels)?;
    for (name, v) in &header.tags {
        let values = match v {
            Value::Array(items) => items.iter().map(value_text).collect(),
            scalar => vec![value_text(scalar); header.count],
        };
        set = set.with_tag(name.clone(), values)?;
    }
    Ok(set)
}

fn header_of(set: &LabeledVectorSet<f32>) -> VectorHeader {
    VectorHeader {
        dim: set.dim,
        count: set.len(),
        labels: set.labels.iter().cloned().map(Value::String).collect(),
        tags: set.tags.iter().map(|(k, v)| (k.clone(), Value::from(v.clone()))).collect(),
    }
}

/// Writes the binary form read by [`read_vector_file`].
pub fn write_vector_file_binary<W: Write>(mut w: W, set: &LabeledVectorSet<f32>) -> std::io::Result<()> {
    serde_json::to_writer(&mut w, &header_of(set))?;
    w.write_all(b"\n")?;
    for x in &set.data {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Writes the JSON-lines form read by [`read_vector_file`].
pub fn write_vector_file_jsonl<W: Write>(mut w: W, set: &LabeledVectorSet<f32>) -> std::io::Result<()> {
    serde_json::to_writer(&mut w, &header_of(set))?;
    w.write_all(b"\n")?;
    for row in set.data.chunks_exact(set.dim) {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

use std::path::PathBuf;

use clap::Args;
use compgen::metrics::{self, read_vector_file, MetricsError, PairWeighting, ScoreRow};
use serde::{Deserialize, Serialize};

use crate::config::{default_out, sibling};
use crate::error::{CliError, CliResult};
use crate::manifest::{json_bytes, read_input, Artifact, Run};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IicgArgs {
    /// Vector file: JSON header line, then f32 rows or JSON arrays
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Grouping key: label, a tag name, or several joined with + [default: label]
    #[arg(long)]
    pub group_by: Option<String>,
    /// Tags that define the table rows, comma separated; `none` pools every vector [default: every tag]
    #[arg(long, value_delimiter = ',')]
    pub per_tag: Option<Vec<String>>,
    /// pairs or group_balanced [default: pairs]
    #[arg(long)]
    pub weighting: Option<String>,
    /// IICG CSV [default: $COMPGEN_OUT_DIR/iicg.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl IicgArgs {
    pub fn resolve(mut self) -> CliResult<Self> {
        if self.vectors.is_none() {
            return Err(CliError::usage("--vectors is required"));
        }
        self.group_by.get_or_insert_with(|| "label".into());
        self.weighting.get_or_insert_with(|| "pairs".into());
        self.out.get_or_insert_with(|| default_out("iicg.csv"));
        Ok(self)
    }
}

pub fn iicg(a: &IicgArgs) -> CliResult<Run> {
    let weighting = match a.weighting.as_deref() {
        Some("pairs") => PairWeighting::Pairs,
        Some("group_balanced") => PairWeighting::GroupBalanced,
        other => return Err(CliError::usage(format!("--weighting must be pairs or group_balanced, got {other:?}"))),
    };
    let path = a.vectors.clone().unwrap_or_default();
    let set = read_vector_file(&read_input(&path)?).map_err(|e| CliError::from(e).context(path.display()))?;
    let group_by = a.group_by.clone().unwrap_or_default();
    set.group_keys(&group_by)?;
    let tags: Vec<String> = match &a.per_tag {
        Some(t) if t.iter().all(|x| x == "none" || x.is_empty()) => Vec::new(),
        Some(t) => t.clone(),
        None => set.tags().keys().cloned().collect(),
    };
    let key = tags.join("+");
    // slices keyed by the joined tag values, in first-seen order
    let slices: Vec<(String, Vec<usize>)> = if tags.is_empty() {
        vec![("all".into(), (0..set.len()).collect())]
    } else {
        let values = set.group_keys(&key)?;
        let mut order: Vec<(String, Vec<usize>)> = Vec::new();
        for (i, v) in values.iter().enumerate() {
            match order.iter_mut().find(|(k, _)| k == v) {
                Some((_, idx)) => idx.push(i),
                None => order.push((v.clone(), vec![i])),
            }
        }
        order
            .into_iter()
            .map(|(v, idx)| {
                let label = tags.iter().zip(v.split('|')).map(|(t, x)| format!("{t}={x}")).collect::<Vec<_>>().join(";");
                (label, idx)
            })
            .collect()
    };
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["tag", "group_key", "iicg"])?;
    let mut report = Vec::new();
    for (label, idx) in &slices {
        let value = match set.select(idx).iicg_by(&group_by, weighting) {
            Ok(v) => v.to_string(),
            Err(MetricsError::TooFewPairs { intra, inter }) => {
                report.push(format!("{label}: undefined ({intra} same-group, {inter} cross-group pairs)"));
                String::new()
            }
            Err(e) => return Err(CliError::from(e).context(label)),
        };
        csv.write_record([label.as_str(), group_by.as_str(), value.as_str()])?;
    }
    report.insert(0, format!("{} slices of {} vectors grouped by {group_by}", slices.len(), set.len()));
    let out = a.out.clone().unwrap_or_default();
    Ok(Run {
        artifacts: vec![Artifact {
            path: out.clone(),
            bytes: csv.into_inner().map_err(|e| CliError::internal(e.to_string()))?,
        }],
        manifest: sibling(&out, "manifest.json"),
        inputs: vec![path],
        seeds: vec![],
        report: report.join("\n"),
        violation: None,
    })
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IeArgs {
    #[arg(long)]
    pub clean: Option<f64>,
    #[arg(long)]
    pub corrupt: Option<f64>,
    #[arg(long)]
    pub patched: Option<f64>,
    /// CSV with p_clean, p_corrupt, p_patched columns (instead of the three flags)
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Smallest allowed |p_corrupt - p_clean| [default: 1e-9]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Output CSV [default: $COMPGEN_OUT_DIR/ie.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl IeArgs {
    pub fn resolve(mut self) -> CliResult<Self> {
        let single = [self.clean, self.corrupt, self.patched];
        match (self.input.is_some(), single.iter().filter(|v| v.is_some()).count()) {
            (true, 0) | (false, 3) => {}
            (true, _) => return Err(CliError::usage("--in cannot be combined with --clean/--corrupt/--patched")),
            (false, _) => return Err(CliError::usage("give --clean, --corrupt and --patched, or --in")),
        }
        self.epsilon.get_or_insert(metrics::DEGENERATE_TRACE_EPSILON);
        self.out.get_or_insert_with(|| default_out("ie.csv"));
        Ok(self)
    }
}

#[derive(Deserialize)]
struct IeRow {
    p_clean: f64,
    p_corrupt: f64,
    p_patched: f64,
}

pub fn ie(a: &IeArgs) -> CliResult<Run> {
    let mut inputs = Vec::new();
    let rows: Vec<IeRow> = match &a.input {
        Some(path) => {
            let bytes = read_input(path)?;
            inputs.push(path.clone());
            csv::Reader::from_reader(&bytes[..]).deserialize().collect::<Result<_, _>>()?
        }
        None => vec![IeRow {
            p_clean: a.clean.unwrap_or_default(),
            p_corrupt: a.corrupt.unwrap_or_default(),
            p_patched: a.patched.unwrap_or_default(),
        }],
    };
    let eps = a.epsilon.unwrap_or_default();
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["p_clean", "p_corrupt", "p_patched", "ie"])?;
    let mut last = 0.0;
    for (i, r) in rows.iter().enumerate() {
        let v = metrics::indirect_effect_with_epsilon(r.p_clean, r.p_corrupt, r.p_patched, eps)
            .map_err(|e| CliError::from(e).context(format!("row {}", i + 1)))?;
        csv.write_record([r.p_clean.to_string(), r.p_corrupt.to_string(), r.p_patched.to_string(), v.to_string()])?;
        last = v;
    }
    let report = if rows.len() == 1 { format!("IE = {last}") } else { format!("{} rows", rows.len()) };
    let out = a.out.clone().unwrap_or_default();
    Ok(Run {
        artifacts: vec![Artifact {
            path: out.clone(),
            bytes: csv.into_inner().map_err(|e| CliError::internal(e.to_string()))?,
        }],
        manifest: sibling(&out, "manifest.json"),
        inputs,
        seeds: vec![],
        report,
        violation: None,
    })
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MrrArgs {
    /// JSONL rows {"scores": [...], "target": i}
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Result JSON [default: $COMPGEN_OUT_DIR/mrr.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl MrrArgs {
    pub fn resolve(mut self) -> CliResult<Self> {
        if self.input.is_none() {
            return Err(CliError::usage("--in is required"));
        }
        self.out.get_or_insert_with(|| default_out("mrr.json"));
        Ok(self)
    }
}

pub fn mrr(a: &MrrArgs) -> CliResult<Run> {
    let path = a.input.clone().unwrap_or_default();
    let bytes = read_input(&path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<ScoreRow<f64>>(l).map_err(|e| CliError::data(format!("line {}: {e}", i + 1)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let value = metrics::mrr(&rows)?;
    let out = a.out.clone().unwrap_or_default();
    Ok(Run {
        artifacts: vec![Artifact {
            path: out.clone(),
            bytes: json_bytes(&serde_json::json!({ "rows": rows.len(), "mrr": value }))?,
        }],
        manifest: sibling(&out, "manifest.json"),
        inputs: vec![path],
        seeds: vec![],
        report: format!("MRR = {value} over {} rows", rows.len()),
        violation: None,
    })
}

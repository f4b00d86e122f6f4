use std::path::{Path, PathBuf};

use clap::Args;
use compgen::coverage::{
    CoverageEngine, CoverageOptions, CoverageSummary, Evaluator, KnownLabels, SubsetScope, TruthOracle, VertexScope,
};
use compgen::dataset::{self, Example, Split};
use serde::{Deserialize, Serialize};

use super::gen::PrimitivesFile;
use crate::config::{default_out, sibling};
use crate::error::{CliError, CliResult};
use crate::manifest::{json_bytes, read_input, Artifact, Run};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverArgs {
    /// Directory written by `gen` (train.jsonl, test splits, primitives.json)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Largest evidence threshold k [default: 10]
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Test splits to stratify [default: id_test,ood_test]
    #[arg(long, value_delimiter = ',')]
    pub splits: Option<Vec<String>>,
    /// Index subsets: all or contiguous [default: all]
    #[arg(long)]
    pub subsets: Option<String>,
    /// Add every one-substitution neighbour of the examples as a vertex
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub closure: Option<bool>,
    /// Ignore primitives.json and filter edges on dataset labels only
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub labels_only: Option<bool>,
    /// Also emit rows for the training examples
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub include_train: Option<bool>,
    /// Coverage CSV [default: $COMPGEN_OUT_DIR/coverage.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON [default: next to --out, *.summary.json]
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

impl CoverArgs {
    pub fn resolve(mut self) -> CliResult<Self> {
        if self.data.is_none() {
            return Err(CliError::usage("--data is required"));
        }
        self.k_max.get_or_insert(10);
        self.splits.get_or_insert_with(|| vec!["id_test".into(), "ood_test".into()]);
        self.subsets.get_or_insert_with(|| "all".into());
        self.closure.get_or_insert(false);
        self.labels_only.get_or_insert(false);
        self.include_train.get_or_insert(false);
        let out = self.out.get_or_insert_with(|| default_out("coverage.csv")).clone();
        self.summary.get_or_insert_with(|| sibling(&out, "summary.json"));
        Ok(self)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    k_evaluated: usize,
    train_vertices: usize,
    #[serde(flatten)]
    coverage: &'a CoverageSummary,
}

fn load_split(path: &Path, inputs: &mut Vec<PathBuf>) -> CliResult<Vec<Example>> {
    let bytes = read_input(path)?;
    inputs.push(path.to_path_buf());
    dataset::read_jsonl(&bytes[..]).map_err(|e| CliError::from(e).context(path.display()))
}

fn parse_split(name: &str) -> CliResult<Split> {
    match name {
        "id_test" => Ok(Split::IdTest),
        "ood_test" => Ok(Split::OodTest),
        "train" => Err(CliError::usage("train is always included; use --include-train to emit its rows")),
        _ => Err(CliError::usage(format!("unknown split {name}"))),
    }
}

pub fn run(a: &CoverArgs) -> CliResult<Run> {
    let dir = a.data.clone().unwrap_or_default();
    let k_max = a.k_max.unwrap_or_default();
    if k_max == 0 {
        return Err(CliError::usage("--k-max must be at least 1"));
    }
    let subsets = match a.subsets.as_deref() {
        Some("all") => SubsetScope::All,
        Some("contiguous") => SubsetScope::Contiguous,
        other => return Err(CliError::usage(format!("--subsets must be all or contiguous, got {other:?}"))),
    };
    let vertex_scope =
        if a.closure == Some(true) { VertexScope::OneSubstitutionClosure } else { VertexScope::TrainAndTest };
    let splits = a.splits.iter().flatten().map(|s| parse_split(s)).collect::<CliResult<Vec<_>>>()?;

    let mut inputs = Vec::new();
    let train = load_split(&dir.join("train.jsonl"), &mut inputs)?;
    let mut test = Vec::new();
    for split in &splits {
        let mut examples = load_split(&dir.join(format!("{}.jsonl", split.as_str())), &mut inputs)?;
        if let Some(bad) = examples.iter().find(|e| e.split != *split) {
            return Err(CliError::data(format!("{}.jsonl holds a {} example", split.as_str(), bad.split)));
        }
        test.append(&mut examples);
    }
    let prims_path = dir.join("primitives.json");
    let prims: Option<PrimitivesFile> = if a.labels_only != Some(true) && prims_path.exists() {
        let bytes = read_input(&prims_path)?;
        inputs.push(prims_path.clone());
        Some(serde_json::from_slice(&bytes).map_err(|e| CliError::data(format!("{}: {e}", prims_path.display())))?)
    } else {
        None
    };
    let known;
    let evaluator;
    let truth: &dyn TruthOracle = match &prims {
        Some(p) => {
            evaluator = Evaluator { structure: &p.structure, primitives: &p.primitives };
            dataset::verify_examples(&train, &p.structure, &p.primitives)
                .map_err(|e| CliError::from(e).context("train.jsonl disagrees with primitives.json"))?;
            &evaluator
        }
        None => {
            known = KnownLabels::from_examples(train.iter().chain(&test));
            &known
        }
    };

    let engine = CoverageEngine::new(&train, CoverageOptions { subsets, vertex_scope })?;
    let report = engine.sweep(&test, k_max, truth)?;

    let mut csv = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["example_id".to_string(), "split".into(), "input".into(), "k_cutoff".into()];
    header.extend((1..=k_max).map(|k| format!("covered_k{k}")));
    csv.write_record(&header)?;
    for r in report.rows.iter().filter(|r| a.include_train == Some(true) || r.split != Split::Train) {
        let input: Vec<String> = r.input.iter().map(|t| t.to_string()).collect();
        let mut rec = vec![r.example_id.to_string(), r.split.to_string(), input.join(" "), r.k_cutoff.to_string()];
        rec.extend(r.covered_at.iter().map(|&c| if c { "1" } else { "0" }.to_string()));
        csv.write_record(&rec)?;
    }
    let csv_bytes = csv.into_inner().map_err(|e| CliError::internal(e.to_string()))?;

    let coverage = report.summary();
    let summary = Summary {
        k_evaluated: report.k_evaluated,
        train_vertices: report.rows_for(Split::Train).count(),
        coverage: &coverage,
    };
    let out = a.out.clone().unwrap_or_default();
    let summary_path = a.summary.clone().unwrap_or_default();
    let mut text = format!("coverage over k = 1..={k_max} (exact truth: {})", report.truth_exact);
    for s in coverage.splits.iter().filter(|s| s.split != Split::Train) {
        let frac: Vec<String> = s.covered_fraction.iter().map(|f| format!("{f:.3}")).collect();
        text.push_str(&format!("\n{:>8}: n={} covered[k]={}", s.split.as_str(), s.count, frac.join(" ")));
    }
    Ok(Run {
        artifacts: vec![
            Artifact { path: out.clone(), bytes: csv_bytes },
            Artifact { path: summary_path, bytes: json_bytes(&summary)? },
        ],
        manifest: sibling(&out, "manifest.json"),
        inputs,
        seeds: vec![],
        report: text,
        violation: None,
    })
}

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use compgen::scaling::{fit_power_law, run_scaling, theoretical_exponent, PowerLawFit, ScalingConfig, ScalingResult, SearchOptions};
use serde::{Deserialize, Serialize};

use crate::config::{default_out, sibling};
use crate::error::{CliError, CliResult};
use crate::manifest::{json_bytes, read_input, Artifact, Run};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingArgs {
    /// Evidence thresholds, comma separated [default: 1]
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Vocabulary sizes, strictly increasing [default: 16,24,32,48,64]
    #[arg(long, value_delimiter = ',')]
    pub vocab: Option<Vec<u32>>,
    /// Simulated datasets per vocabulary size [default: 200]
    #[arg(long)]
    pub trials: Option<usize>,
    /// Connectivity probability that defines n_req [default: 0.5]
    #[arg(long)]
    pub success_prob: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative bracket width at which bisection stops [default: 0.05]
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Largest N searched [default: 64 |X|^3]
    #[arg(long)]
    pub ceiling: Option<u64>,
    /// Scaling CSV [default: $COMPGEN_OUT_DIR/scaling.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON with fits [default: next to --out, *.summary.json]
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

impl ScalingArgs {
    pub fn resolve(mut self) -> CliResult<Self> {
        self.k.get_or_insert_with(|| vec![1]);
        self.vocab.get_or_insert_with(|| vec![16, 24, 32, 48, 64]);
        self.trials.get_or_insert(200);
        self.success_prob.get_or_insert(0.5);
        self.seed.get_or_insert(0);
        self.rel_tol.get_or_insert(0.05);
        let out = self.out.get_or_insert_with(|| default_out("scaling.csv")).clone();
        self.summary.get_or_insert_with(|| sibling(&out, "summary.json"));
        Ok(self)
    }
}

#[derive(Serialize)]
struct ScalingSummary<'a> {
    trials: usize,
    success_prob: f64,
    seed: u64,
    results: &'a [ScalingResult],
}

pub fn run(a: &ScalingArgs) -> CliResult<Run> {
    let rel_tol = a.rel_tol.unwrap_or_default();
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(CliError::usage(format!("--rel-tol must lie in (0, 1), got {rel_tol}")));
    }
    let ks = a.k.clone().unwrap_or_default();
    if ks.is_empty() {
        return Err(CliError::usage("--k needs at least one value"));
    }
    let seed = a.seed.unwrap_or_default();
    let configs: Vec<ScalingConfig> = ks
        .iter()
        .map(|&k| ScalingConfig {
            vocab_sizes: a.vocab.clone().unwrap_or_default(),
            k,
            trials: a.trials.unwrap_or_default(),
            success_prob: a.success_prob.unwrap_or_default(),
            seed,
            search: SearchOptions { rel_tol, ceiling: a.ceiling },
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let results = configs.iter().map(run_scaling).collect::<Result<Vec<_>, _>>()?;

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["vocab_size", "k", "n_req", "ci_low", "ci_high"])?;
    for r in &results {
        for p in &r.points {
            csv.write_record([
                p.vocab_size.to_string(),
                r.k.to_string(),
                p.n_req.to_string(),
                p.ci_low.to_string(),
                p.ci_high.to_string(),
            ])?;
        }
    }
    let csv_bytes = csv.into_inner().map_err(|e| CliError::internal(e.to_string()))?;
    let summary = ScalingSummary {
        trials: configs[0].trials,
        success_prob: configs[0].success_prob,
        seed,
        results: &results,
    };
    let mut report = String::new();
    for r in &results {
        match r.fit {
            Some(f) => report.push_str(&format!(
                "k={}: slope {:.3} (R² {:.4}), theory {:.3}\n",
                r.k, f.exponent, f.r_squared, r.theoretical_exponent
            )),
            None => report.push_str(&format!("k={}: fewer than 3 points, no fit\n", r.k)),
        }
    }
    let out = a.out.clone().unwrap_or_default();
    Ok(Run {
        artifacts: vec![
            Artifact { path: out.clone(), bytes: csv_bytes },
            Artifact { path: a.summary.clone().unwrap_or_default(), bytes: json_bytes(&summary)? },
        ],
        manifest: sibling(&out, "manifest.json"),
        inputs: vec![],
        seeds: vec![seed],
        report: report.trim_end().to_string(),
        violation: None,
    })
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitArgs {
    /// CSV with vocab_size and n_req columns (and optionally k)
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Fit JSON [default: next to --in, *.fit.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl FitArgs {
    pub fn resolve(mut self) -> CliResult<Self> {
        let input = self.input.clone().ok_or_else(|| CliError::usage("--in is required"))?;
        self.out.get_or_insert_with(|| sibling(&input, "fit.json"));
        Ok(self)
    }
}

#[derive(Serialize)]
struct FitRecord {
    k: Option<usize>,
    points: usize,
    #[serde(flatten)]
    fit: PowerLawFit<f64>,
    theoretical_exponent: Option<f64>,
}

#[derive(Deserialize)]
struct Row {
    vocab_size: f64,
    n_req: f64,
    k: Option<usize>,
}

pub fn fit(a: &FitArgs) -> CliResult<Run> {
    let input = a.input.clone().unwrap_or_default();
    let bytes = read_input(&input)?;
    let mut reader = csv::Reader::from_reader(&bytes[..]);
    let mut groups: BTreeMap<Option<usize>, Vec<(f64, f64)>> = BTreeMap::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        groups.entry(row.k).or_default().push((row.vocab_size, row.n_req));
    }
    if groups.is_empty() {
        return Err(CliError::data(format!("{} has no rows", input.display())));
    }
    let mut fits = Vec::new();
    let mut report = Vec::new();
    for (k, pts) in &groups {
        let fit = fit_power_law(pts).map_err(|e| CliError::from(e).context(format!("k = {k:?}")))?;
        let theory = k.map(theoretical_exponent::<f64>);
        report.push(format!(
            "k={}: exponent {:.4}, intercept {:.4}, R² {:.4}",
            k.map_or("-".into(), |k| k.to_string()),
            fit.exponent,
            fit.intercept,
            fit.r_squared
        ));
        fits.push(FitRecord { k: *k, points: pts.len(), fit, theoretical_exponent: theory });
    }
    let out = a.out.clone().unwrap_or_default();
    Ok(Run {
        artifacts: vec![Artifact { path: out.clone(), bytes: json_bytes(&serde_json::json!({ "fits": fits }))? }],
        manifest: sibling(&out, "manifest.json"),
        inputs: vec![input],
        seeds: vec![],
        report: report.join("\n"),
        violation: None,
    })
}

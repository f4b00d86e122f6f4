use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use compgen::coverage::oracle::{brute_force_cutoffs, full_domain_divergence};
use compgen::coverage::{k_cutoff_sweep, CoverageOptions, Evaluator};
use compgen::dataset::{self, Example, GenConfig, Split};
use compgen::rng::{derive_seed, stream};
use compgen::task::TaskKind;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gen::PrimitivesFile;
use crate::config::{default_out, sibling};
use crate::error::{CliError, CliResult};
use crate::manifest::{json_bytes, Artifact, Run};

const FIXTURE_TRAIN: &str = include_str!("../../fixtures/x4/train.jsonl");
const FIXTURE_ID: &str = include_str!("../../fixtures/x4/id_test.jsonl");
const FIXTURE_OOD: &str = include_str!("../../fixtures/x4/ood_test.jsonl");
const FIXTURE_PRIMITIVES: &str = include_str!("../../fixtures/x4/primitives.json");

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfcheckArgs {
    /// Random instances (|X| in 4..=6, n = 3, at most 40 training inputs) [default: 200]
    #[arg(long)]
    pub instances: Option<usize>,
    /// Largest k compared [default: 2]
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report JSON [default: $COMPGEN_OUT_DIR/selfcheck.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SelfcheckArgs {
    pub fn resolve(mut self) -> CliResult<Self> {
        self.instances.get_or_insert(200);
        self.k_max.get_or_insert(2);
        self.seed.get_or_insert(0);
        self.out.get_or_insert_with(|| default_out("selfcheck.json"));
        Ok(self)
    }
}

#[derive(Debug, Default, Serialize)]
struct Check {
    vertices: usize,
    /// Vertices whose pipeline cutoff differs from the brute-force one.
    cutoff_mismatches: usize,
    monotonicity_violations: usize,
    /// Per k: vertices on which full-domain and restricted coverage disagree.
    full_domain_divergence: Vec<usize>,
}

#[derive(Serialize)]
struct Report {
    instances: usize,
    k_max: usize,
    seed: u64,
    random: Check,
    fixture: Check,
    failed_instances: Vec<usize>,
}

fn check(
    train: &[Example],
    test: &[Example],
    truth: &Evaluator<'_>,
    vocab: u32,
    k_max: usize,
    into: &mut Check,
) -> CliResult<bool> {
    let report = k_cutoff_sweep(train, test, k_max, truth, CoverageOptions::default())?;
    let want = brute_force_cutoffs(train, &report.vertices, k_max, truth)?;
    let mut ok = true;
    for r in &report.rows {
        into.vertices += 1;
        if r.k_cutoff != want[r.vertex as usize] {
            into.cutoff_mismatches += 1;
            ok = false;
        }
        let monotone = r.covered_at.windows(2).all(|w| w[0] >= w[1]);
        if !monotone || (r.split == Split::Train && !r.covered_at.iter().all(|&c| c)) {
            into.monotonicity_violations += 1;
            ok = false;
        }
    }
    into.full_domain_divergence.resize(k_max, 0);
    let vertices: Vec<_> = test.iter().map(|e| e.input.clone()).collect();
    for k in 1..=k_max {
        into.full_domain_divergence[k - 1] += full_domain_divergence(train, &vertices, k, vocab, truth)?.count();
    }
    Ok(ok)
}

fn parse_jsonl(text: &str) -> CliResult<Vec<Example>> {
    Ok(dataset::read_jsonl(text.as_bytes())?)
}

pub fn run(a: &SelfcheckArgs) -> CliResult<Run> {
    let (instances, k_max, seed) = (a.instances.unwrap_or_default(), a.k_max.unwrap_or_default(), a.seed.unwrap_or_default());
    if k_max == 0 {
        return Err(CliError::usage("--k-max must be at least 1"));
    }
    let mut random = Check::default();
    let mut failed = Vec::new();
    for i in 0..instances {
        let inst_seed = derive_seed(seed, i as u64);
        let mut r = stream(inst_seed, 0);
        let vocab = r.random_range(4..=6u32);
        let kind = if r.random_bool(0.5) { TaskKind::TWO_HOP } else { TaskKind::NonTree };
        let config = GenConfig {
            structure: kind.structure(),
            vocab,
            p_seen: 1.0,
            n_train: r.random_range(4..=40),
            test_size: 10,
            seed: inst_seed,
        };
        let g = dataset::generate(&config)?;
        let test: Vec<Example> = g.tests.id_test.iter().chain(&g.tests.ood_test).cloned().collect();
        let truth = Evaluator { structure: &config.structure, primitives: &g.primitives };
        if !check(&g.train.examples, &test, &truth, vocab, k_max, &mut random)? {
            failed.push(i);
        }
    }

    let prims: PrimitivesFile = serde_json::from_str(FIXTURE_PRIMITIVES)?;
    let train = parse_jsonl(FIXTURE_TRAIN)?;
    let mut test = parse_jsonl(FIXTURE_ID)?;
    test.extend(parse_jsonl(FIXTURE_OOD)?);
    let truth = Evaluator { structure: &prims.structure, primitives: &prims.primitives };
    let mut fixture = Check::default();
    let fixture_ok = check(&train, &test, &truth, prims.vocab, k_max, &mut fixture)?;

    let distinct: BTreeSet<usize> = failed.iter().copied().collect();
    let report = Report { instances, k_max, seed, random, fixture, failed_instances: distinct.into_iter().collect() };
    let summary = format!(
        "{} random instances ({} vertices): {} cutoff mismatches, {} monotonicity violations; fixture: {}; full-domain divergences per k: {:?}",
        instances,
        report.random.vertices,
        report.random.cutoff_mismatches,
        report.random.monotonicity_violations,
        if fixture_ok { "ok" } else { "MISMATCH" },
        report.random.full_domain_divergence,
    );
    let violation = (!report.failed_instances.is_empty() || !fixture_ok)
        .then(|| format!("pipeline disagrees with the brute-force oracle (instances {:?})", report.failed_instances));
    let out = a.out.clone().unwrap_or_default();
    Ok(Run {
        artifacts: vec![Artifact { path: out.clone(), bytes: json_bytes(&report)? }],
        manifest: sibling(&out, "manifest.json"),
        inputs: vec![],
        seeds: vec![seed],
        report: summary,
        violation,
    })
}

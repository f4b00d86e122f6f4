use std::path::PathBuf;

use clap::Args;
use compgen::dataset::{self, Example, GenConfig, TextFormat};
use compgen::task::{CompositionStructure, PrimitiveTable, TaskKind};
use serde::{Deserialize, Serialize};

use crate::config::default_out;
use crate::error::{CliError, CliResult};
use crate::manifest::{json_bytes, Artifact, Run};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenArgs {
    /// Task family: 2hop, 3hop, <h>hop, parallel2hop or nontree [default: 2hop]
    #[arg(long)]
    pub task: Option<String>,
    /// Token set size |X| [default: 50]
    #[arg(long)]
    pub vocab: Option<u32>,
    /// Training examples [default: 10000]
    #[arg(long)]
    pub n: Option<usize>,
    /// Seen fraction of every primitive's domain [default: 0.7]
    #[arg(long)]
    pub p_seen: Option<f64>,
    /// Examples per test split [default: 2000]
    #[arg(long)]
    pub test_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also export `<t_i>` text files in this format (plain or cot)
    #[arg(long)]
    pub text: Option<String>,
    /// Output directory [default: $COMPGEN_OUT_DIR or ./out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl GenArgs {
    pub fn resolve(mut self) -> CliResult<Self> {
        self.task.get_or_insert_with(|| "2hop".into());
        self.vocab.get_or_insert(50);
        self.n.get_or_insert(10_000);
        self.p_seen.get_or_insert(0.7);
        self.test_size.get_or_insert(2000);
        self.seed.get_or_insert(0);
        self.out.get_or_insert_with(|| default_out(""));
        Ok(self)
    }
}

/// Contents of `primitives.json`: enough to re-evaluate any input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimitivesFile {
    pub task: String,
    pub structure: CompositionStructure,
    pub vocab: u32,
    pub p_seen: f64,
    pub seed: u64,
    pub id_pool_size: usize,
    pub id_test_pool: usize,
    pub ood_test_pool: usize,
    pub primitives: Vec<PrimitiveTable>,
}

fn jsonl(examples: &[Example]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    dataset::write_jsonl(&mut buf, examples)?;
    Ok(buf)
}

pub fn run(a: &GenArgs) -> CliResult<Run> {
    let task = a.task.clone().unwrap_or_default();
    let kind: TaskKind = task.parse()?;
    let (vocab, p_seen) = (a.vocab.unwrap_or_default(), a.p_seen.unwrap_or_default());
    if !(0.0..=1.0).contains(&p_seen) {
        return Err(CliError::usage(format!("--p-seen must lie in [0, 1], got {p_seen}")));
    }
    let text = a
        .text
        .as_deref()
        .map(|t| match t.parse::<TextFormat>() {
            Ok(f @ (TextFormat::Plain | TextFormat::Cot)) => Ok(f),
            _ => Err(CliError::usage(format!("--text must be plain or cot, got {t}"))),
        })
        .transpose()?;
    let config = GenConfig {
        structure: kind.structure(),
        vocab,
        p_seen,
        n_train: a.n.unwrap_or_default(),
        test_size: a.test_size.unwrap_or_default(),
        seed: a.seed.unwrap_or_default(),
    };
    let g = dataset::generate(&config)?;
    let dir = a.out.clone().unwrap_or_default();
    let splits = [
        ("train", &g.train.examples),
        ("id_test", &g.tests.id_test),
        ("ood_test", &g.tests.ood_test),
    ];
    let mut artifacts = Vec::new();
    for (name, examples) in splits {
        artifacts.push(Artifact { path: dir.join(format!("{name}.jsonl")), bytes: jsonl(examples)? });
        if let Some(format) = text {
            let mut buf = Vec::new();
            dataset::write_text(&mut buf, examples, format)?;
            artifacts.push(Artifact { path: dir.join(format!("{name}.txt")), bytes: buf });
        }
    }
    let prims = PrimitivesFile {
        task: kind.to_string(),
        structure: config.structure.clone(),
        vocab,
        p_seen,
        seed: config.seed,
        id_pool_size: g.id_pool_size,
        id_test_pool: g.tests.id_pool,
        ood_test_pool: g.tests.ood_pool,
        primitives: g.primitives.clone(),
    };
    artifacts.push(Artifact { path: dir.join("primitives.json"), bytes: json_bytes(&prims)? });
    let mut report = format!(
        "{}: {} train, {} id_test (pool {}), {} ood_test (pool {}) -> {}",
        kind,
        g.train.len(),
        g.tests.id_test.len(),
        g.tests.id_pool,
        g.tests.ood_test.len(),
        g.tests.ood_pool,
        dir.display()
    );
    if g.tests.id_short || g.tests.ood_short {
        report.push_str("\nwarning: a test pool was smaller than --test-size and was used whole");
    }
    Ok(Run {
        artifacts,
        manifest: dir.join("manifest.json"),
        inputs: vec![],
        seeds: vec![config.seed],
        report,
        violation: None,
    })
}

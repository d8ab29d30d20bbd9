//! `plcembed generate` — synthetic multi-dialect corpus.

use std::path::PathBuf;

use clap::Args;
use plcembed::corpus::Toolchain;
use plcembed::synthgen::{default_dialects, generate_corpus, GeneratorConfig};

use crate::config::load_file_config;
use crate::error::CliError;
use crate::manifest::{write_manifest, RunManifest};

#[derive(Args)]
pub struct GenerateArgs {
    /// Directory that receives Binary/, Metadata/, and the corpus README
    #[arg(long)]
    pub out: PathBuf,
    /// JSON configuration file; its `generator` section applies here
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Programs per dialect (each program is emitted once per dialect)
    #[arg(long)]
    pub programs: Option<usize>,
    /// Number of functionality categories
    #[arg(long)]
    pub categories: Option<usize>,
    /// Fraction of payload content shared between categories, in [0, 1)
    #[arg(long)]
    pub overlap: Option<f64>,
    /// Encode categories as banded fingerprints in distant file regions
    /// instead of single category-specific motifs
    #[arg(long)]
    pub banded_fingerprints: bool,
    /// Generation seed
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: GenerateArgs) -> Result<(), CliError> {
    let file = load_file_config(args.config.as_deref())?;
    let mut cfg = GeneratorConfig::default();
    file.generator.apply(&mut cfg);
    if let Some(v) = args.programs {
        cfg.programs_per_dialect = v;
    }
    if let Some(v) = args.categories {
        cfg.categories = v;
    }
    if let Some(v) = args.overlap {
        cfg.payload_overlap = v;
    }
    if args.banded_fingerprints {
        cfg.banded_fingerprints = true;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }

    let dialects = default_dialects();
    let index = generate_corpus(&cfg, &dialects, &args.out)?;

    println!("corpus written to {}", args.out.display());
    println!(
        "programs: {}  binaries: {}  categories: {}",
        index.program_count(),
        index.total_binaries(),
        index.taxonomy.len()
    );

    let config_json = serde_json::json!({ "generator": cfg, "dialects": dialects });
    let mut manifest = RunManifest::new("generate", cfg.seed, config_json);
    manifest.artifacts.push("Metadata/index.csv".into());
    manifest.artifacts.push("README.md".into());
    for t in Toolchain::ALL {
        manifest.artifacts.push(format!("Binary/{}", t.dir_name()));
    }
    write_manifest(&manifest, &args.out)?;
    Ok(())
}

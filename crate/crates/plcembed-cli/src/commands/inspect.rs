//! `plcembed inspect` — dataset summary.

use std::path::PathBuf;

use clap::Args;
use plcembed::corpus::{load_index, Toolchain};

use crate::commands::{ensure_dir, write_text};
use crate::error::CliError;
use crate::manifest::{write_manifest, RunManifest};

#[derive(Args)]
pub struct InspectArgs {
    /// Dataset root containing Binary/ and Metadata/index.csv
    #[arg(long)]
    pub dataset: PathBuf,
    /// Optional directory that receives histogram.csv and a run manifest
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: InspectArgs) -> Result<(), CliError> {
    let index = load_index(&args.dataset)?;

    println!("programs: {}", index.program_count());
    for t in Toolchain::ALL {
        println!("{:<12} binaries: {}", t.name(), index.binary_count(t));
    }
    println!("total binaries: {}", index.total_binaries());
    println!("functionality categories: {}", index.taxonomy.len());
    let histogram = index.category_histogram();
    for (label, count) in index.taxonomy.iter().zip(&histogram) {
        println!("  [{:>3}] {:<40} {:>6}", label.id, label.name, count);
    }

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let mut csv = String::from("functionality_id,functionality_name,programs\n");
        for (label, count) in index.taxonomy.iter().zip(&histogram) {
            csv.push_str(&format!("{},{},{}\n", label.id, label.name, count));
        }
        write_text(&out.join("histogram.csv"), &csv)?;

        let mut manifest = RunManifest::new("inspect", 0, serde_json::json!({}));
        manifest.artifacts.push("histogram.csv".into());
        write_manifest(&manifest, out)?;
    }
    Ok(())
}

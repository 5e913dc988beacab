use std::fs;
use std::path::PathBuf;

use clap::Args;
use lpc_core::data::{ingest_csv, Instance, PreprocessSpec};
use serde_json::json;

use crate::settings::Settings;
use crate::Failure;

#[derive(Args, Debug)]
pub struct IngestArgs {
    csv: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    /// Categorical column whose groups become candidate clusters.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    max_features: Option<usize>,
    #[arg(long)]
    p_threshold: Option<f64>,
    #[arg(long)]
    sample_cap: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Instance output file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional separate copy of the preprocessing report.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn run(a: &IngestArgs) -> Result<(), Failure> {
    let s = Settings::load(a.config.as_deref())?;
    let spec = resolve_spec(a, &s)?;
    let out: Option<PathBuf> = s.value("out", a.out.clone())?;
    let report_path: Option<PathBuf> = s.value("report", a.report.clone())?;
    s.reject_unknown()?;
    let out = out.ok_or_else(|| Failure::usage("missing --out (or `out` key)"))?;

    let ing = ingest_csv(&a.csv, &spec)?;
    let source = a.csv.file_name().map(|f| f.to_string_lossy().into_owned());
    let provenance = json!({
        "generator": "ingest",
        "source": source,
        "preprocess": spec,
        "report": ing.report,
    });
    let inst = Instance {
        reference_labels: Some(ing.labels.labels().to_vec()),
        reference_coefficients: Some(ing.coefficients.to_rows()),
        provenance,
        ..Instance::from_dataset(&ing.dataset)
    };
    inst.write(&out)?;
    if let Some(p) = report_path {
        fs::write(p, serde_json::to_string_pretty(&ing.report)? + "\n")?;
    }
    let (g1, g2) = &ing.report.selected_pair;
    println!(
        "{}\t{}\trows {}\tpair {g1} / {g2}",
        out.display(),
        inst.hash()?,
        ing.report.rows_out
    );
    Ok(())
}

pub fn resolve_spec(a: &IngestArgs, s: &Settings) -> Result<PreprocessSpec, Failure> {
    let target: Option<String> = s.value("target", a.target.clone())?;
    let split: Option<String> = s.value("split", a.split.clone())?;
    let mut spec = PreprocessSpec::new(
        target.ok_or_else(|| Failure::usage("missing --target (or `target` key)"))?,
        split.ok_or_else(|| Failure::usage("missing --split (or `split` key)"))?,
    );
    spec.max_features = s.value_or("max_features", a.max_features, spec.max_features)?;
    spec.p_threshold = s.value_or("p_threshold", a.p_threshold, spec.p_threshold)?;
    spec.sample_cap = s.value_or("sample_cap", a.sample_cap, spec.sample_cap)?;
    spec.lambda = s.value_or("lambda", a.lambda, spec.lambda)?;
    spec.seed = s.seed(a.seed)?;
    spec.validate()?;
    Ok(spec)
}

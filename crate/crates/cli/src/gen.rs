use std::fs;
use std::path::PathBuf;

use clap::Args;
use lpc_core::data::{dimension_coefficients, generate, generate_regime_suite, Instance, Regime, SyntheticSpec};
use serde_json::json;

use crate::settings::{List, Matrix, Settings};
use crate::Failure;

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Key-value spec file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// sd1, sd2, sd4 or table1.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Feature count, bias excluded.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    regime: Option<Regime>,
    #[arg(long)]
    outlier_fraction: Option<f64>,
    /// Relative cluster sizes, comma separated.
    #[arg(long)]
    weights: Option<List<f64>>,
    /// Ground-truth coefficients: rows split by `;`, bias last.
    #[arg(long)]
    coefficients: Option<Matrix>,
    #[arg(long)]
    feature_mu: Option<f64>,
    #[arg(long)]
    feature_sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the four separability regimes into the `--out` directory.
    #[arg(long)]
    regime_suite: bool,
    /// Output file, or directory with `--regime-suite`.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(a: &GenArgs) -> Result<(), Failure> {
    let s = Settings::load(a.config.as_deref())?;
    let seed = s.seed(a.seed)?;
    let suite = s.value_or("regime_suite", a.regime_suite.then_some(true), false)?;
    let out: Option<PathBuf> = s.value("out", a.out.clone())?;
    let spec = build_spec(a, &s, seed)?;
    s.reject_unknown()?;
    let out = out.ok_or_else(|| Failure::usage("missing --out (or `out` key)"))?;

    if suite {
        fs::create_dir_all(&out)?;
        for (regime, g) in generate_regime_suite(seed)? {
            let inst = Instance::from_generated(&g, json!({"generator": "regime_suite", "regime": regime.as_str(), "seed": seed}));
            let path = out.join(format!("{}.json", regime.as_str()));
            inst.write(&path)?;
            println!("{}\t{}", path.display(), inst.hash()?);
        }
        return Ok(());
    }

    let spec = spec?;
    spec.validate()?;
    let g = generate(&spec)?;
    let inst = Instance::from_generated(&g, json!({"generator": "synthetic", "spec": spec}));
    inst.write(&out)?;
    println!("{}\t{}", out.display(), inst.hash()?);
    Ok(())
}

/// Reads every spec key so unknown-key detection sees them; the outer result
/// is a config error, the inner one a spec error reported only when the spec
/// is actually used.
fn build_spec(a: &GenArgs, s: &Settings, seed: u64) -> Result<Result<SyntheticSpec, Failure>, Failure> {
    let preset: String = s.value_or("preset", a.preset.clone(), "sd1".into())?;
    let n = s.value_or("n", a.n, 100)?;
    let noise = s.value_or("noise", a.noise, 1.0)?;
    let d: Option<usize> = s.value("d", a.d)?;
    let k: Option<usize> = s.value("k", a.k)?;
    let regime: Option<Regime> = s.value("regime", a.regime)?;
    let outliers: Option<f64> = s.value("outlier_fraction", a.outlier_fraction)?;
    let weights: Option<List<f64>> = s.value("weights", a.weights.clone())?;
    let coefficients: Option<Matrix> = s.value("coefficients", a.coefficients.clone())?;
    let mu: Option<f64> = s.value("feature_mu", a.feature_mu)?;
    let sigma: Option<f64> = s.value("feature_sigma", a.feature_sigma)?;

    let mut spec = match SyntheticSpec::preset(&preset, n, noise, seed) {
        Ok(spec) => spec,
        Err(e) => return Ok(Err(e.into())),
    };
    match (coefficients, k, d) {
        (Some(Matrix(rows)), _, _) => {
            spec.k = rows.len();
            spec.d = rows.first().map_or(0, |r| r.len().saturating_sub(1));
            spec.coefficients = rows;
            if let Some(k) = k {
                spec.k = k;
            }
            if let Some(d) = d {
                spec.d = d;
            }
        }
        (None, None, None) => {}
        (None, k, d) => {
            let k = k.unwrap_or(spec.k);
            let d = d.unwrap_or(spec.d);
            if k == 0 {
                spec.k = 0;
            } else if (k, d) != (spec.k, spec.d) {
                match dimension_coefficients(k, d) {
                    Ok(c) => {
                        spec.k = k;
                        spec.d = d;
                        spec.coefficients = c;
                    }
                    Err(e) => return Ok(Err(e.into())),
                }
            }
        }
    }
    if let Some(r) = regime {
        spec.regime = r;
    }
    if let Some(f) = outliers {
        spec.outlier_fraction = f;
    }
    if let Some(List(w)) = weights {
        spec.cluster_weights = Some(w);
    }
    if let Some(m) = mu {
        spec.feature_mu = m;
    }
    if let Some(sd) = sigma {
        spec.feature_sigma = sd;
    }
    Ok(Ok(spec))
}

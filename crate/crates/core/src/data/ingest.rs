//! CSV to two-cluster instance.
//!
//! Steps, in order: drop rows with missing cells, seeded subsample, one-hot
//! encode categoricals, drop constant columns and z-score the numeric ones,
//! F-test feature selection, then keep the pair of split groups whose ridge
//! fits are farthest apart.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{LpcError, Result};
use crate::linalg;
use crate::regression::ClusterStats;
use crate::types::{Assignment, CoefKind, CoefficientSet, Dataset};

/// Cell values treated as missing.
pub const MISSING: [&str; 3] = ["", "NA", "?"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    pub target_column: String,
    pub split_column: String,
    pub max_features: usize,
    pub p_threshold: f64,
    pub sample_cap: usize,
    /// Ridge penalty for the per-group fits.
    pub lambda: f64,
    pub seed: u64,
}

impl PreprocessSpec {
    pub fn new(target_column: impl Into<String>, split_column: impl Into<String>) -> Self {
        Self {
            target_column: target_column.into(),
            split_column: split_column.into(),
            max_features: 15,
            p_threshold: 0.05,
            sample_cap: 600,
            lambda: 1e-6,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| {
            Err(LpcError::InvalidSpec {
                field: field.into(),
                reason: reason.into(),
            })
        };
        if self.max_features == 0 {
            return bad("max_features", "must be positive");
        }
        if self.sample_cap == 0 {
            return bad("sample_cap", "must be positive");
        }
        if !(self.p_threshold > 0.0 && self.p_threshold < 1.0) {
            return bad("p_threshold", "must lie in (0, 1)");
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad("lambda", "must be finite and nonnegative");
        }
        if self.target_column == self.split_column {
            return bad("split_column", "must differ from the target column");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FScore {
    pub column: String,
    pub f: f64,
    pub p_value: f64,
}

/// What the pipeline did, for the instance's provenance record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_dropped_missing: usize,
    pub rows_after_subsample: usize,
    pub one_hot_columns: Vec<String>,
    pub dropped_constant: Vec<String>,
    /// Empty when no selection was needed.
    pub f_scores: Vec<FScore>,
    pub selected_features: Vec<String>,
    /// Fit-eligible groups and their sizes.
    pub eligible_groups: Vec<(String, usize)>,
    pub selected_pair: (String, String),
    pub pair_distance: f64,
    pub rows_out: usize,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset<f64>,
    pub labels: Assignment,
    pub coefficients: CoefficientSet<f64>,
    pub report: IngestReport,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec?.iter().map(|c| c.trim().to_string()).collect());
    }
    Ok(Table { header, rows })
}

fn column(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| LpcError::MissingColumn(name.to_string()))
}

pub fn ingest_csv(path: &Path, spec: &PreprocessSpec) -> Result<Ingested> {
    spec.validate()?;
    let table = read_table(path)?;
    ingest_table(table, spec)
}

/// Same pipeline on CSV text already in memory.
pub fn ingest_csv_str(text: &str, spec: &PreprocessSpec) -> Result<Ingested> {
    spec.validate()?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec?.iter().map(|c| c.trim().to_string()).collect());
    }
    ingest_table(Table { header, rows }, spec)
}

fn ingest_table(table: Table, spec: &PreprocessSpec) -> Result<Ingested> {
    let target_col = column(&table.header, &spec.target_column)?;
    let split_col = column(&table.header, &spec.split_column)?;
    let rows_read = table.rows.len();

    let rows: Vec<Vec<String>> = table
        .rows
        .into_iter()
        .filter(|r| r.len() == table.header.len() && !r.iter().any(|c| MISSING.contains(&c.as_str())))
        .collect();
    let rows_dropped_missing = rows_read - rows.len();
    if rows.is_empty() {
        return Err(LpcError::DegenerateAfterFilter("every row has a missing value".into()));
    }
    let mut targets = Vec::with_capacity(rows.len());
    for (row, r) in rows.iter().enumerate() {
        let v = &r[target_col];
        match v.parse::<f64>() {
            Ok(y) if y.is_finite() => targets.push(y),
            _ => {
                return Err(LpcError::NonNumericTarget {
                    column: spec.target_column.clone(),
                    row,
                    value: v.clone(),
                })
            }
        }
    }

    // Subsample, keeping file order.
    let keep: Vec<usize> = if rows.len() > spec.sample_cap {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut idx = rand::seq::index::sample(&mut rng, rows.len(), spec.sample_cap).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..rows.len()).collect()
    };
    let rows: Vec<&Vec<String>> = keep.iter().map(|&i| &rows[i]).collect();
    let targets: Vec<f64> = keep.iter().map(|&i| targets[i]).collect();
    let n = rows.len();

    // Encode.
    let mut names = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut numeric = Vec::new();
    let mut one_hot_columns = Vec::new();
    for (c, name) in table.header.iter().enumerate() {
        if c == target_col || c == split_col {
            continue;
        }
        let parsed: Option<Vec<f64>> = rows.iter().map(|r| r[c].parse::<f64>().ok().filter(|v| v.is_finite())).collect();
        match parsed {
            Some(values) => {
                names.push(name.clone());
                cols.push(values);
                numeric.push(true);
            }
            None => {
                let levels: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[c].as_str()).collect();
                for level in levels {
                    let col_name = format!("{name}={level}");
                    one_hot_columns.push(col_name.clone());
                    names.push(col_name);
                    cols.push(rows.iter().map(|r| f64::from(u8::from(r[c] == level))).collect());
                    numeric.push(false);
                }
            }
        }
    }

    // Drop constants, standardize numeric columns (population σ).
    let mut dropped_constant = Vec::new();
    let mut kept_names = Vec::new();
    let mut kept_cols = Vec::new();
    for ((name, mut values), is_numeric) in names.into_iter().zip(cols).zip(numeric) {
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            dropped_constant.push(name);
            continue;
        }
        if is_numeric {
            for v in &mut values {
                *v = (*v - mean) / sd;
            }
        }
        kept_names.push(name);
        kept_cols.push(values);
    }

    // Univariate F-test selection.
    let mut f_scores = Vec::new();
    if kept_cols.len() > spec.max_features {
        f_scores = kept_names
            .iter()
            .zip(&kept_cols)
            .map(|(name, col)| {
                let (f, p) = f_test(col, &targets);
                FScore {
                    column: name.clone(),
                    f,
                    p_value: p,
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..kept_cols.len()).collect();
        order.sort_by(|&a, &b| f_scores[b].f.total_cmp(&f_scores[a].f).then(a.cmp(&b)));
        let mut chosen: Vec<usize> = order
            .into_iter()
            .filter(|&i| f_scores[i].p_value <= spec.p_threshold)
            .take(spec.max_features)
            .collect();
        chosen.sort_unstable();
        if chosen.is_empty() {
            return Err(LpcError::DegenerateAfterFilter(format!(
                "no feature passes p <= {}",
                spec.p_threshold
            )));
        }
        kept_names = chosen.iter().map(|&i| kept_names[i].clone()).collect();
        kept_cols = chosen.iter().map(|&i| kept_cols[i].clone()).collect();
    }
    let d = kept_cols.len();

    let mut features = Array2::<f64>::ones((n, d + 1));
    for (j, col) in kept_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            features[[i, j]] = v;
        }
    }

    // Group fits.
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        groups.entry(r[split_col].as_str()).or_default().push(i);
    }
    let mut eligible = Vec::new();
    for (name, members) in &groups {
        if members.len() >= d + 2 {
            let mut stats = ClusterStats::empty(d + 1);
            for &i in members {
                stats.add(features.row(i), targets[i]);
            }
            eligible.push((name.to_string(), members.clone(), stats.ridge_lenient(spec.lambda)?));
        }
    }
    if eligible.len() < 2 {
        return Err(LpcError::TooFewGroups(eligible.len()));
    }
    let mut best = (0, 1, f64::NEG_INFINITY);
    for a in 0..eligible.len() {
        for b in a + 1..eligible.len() {
            let dist = linalg::l2_norm((&eligible[a].2 - &eligible[b].2).view());
            if dist > best.2 {
                best = (a, b, dist);
            }
        }
    }
    let (ga, gb, pair_distance) = best;
    let mut selected: Vec<(usize, usize)> = eligible[ga]
        .1
        .iter()
        .map(|&i| (i, 0))
        .chain(eligible[gb].1.iter().map(|&i| (i, 1)))
        .collect();
    selected.sort_unstable();
    let mut out = Array2::<f64>::zeros((selected.len(), d + 1));
    for (r, &(i, _)) in selected.iter().enumerate() {
        out.row_mut(r).assign(&features.row(i));
    }
    let y = Array1::from(selected.iter().map(|&(i, _)| targets[i]).collect::<Vec<_>>());
    let labels = Assignment::new(selected.iter().map(|&(_, l)| l).collect(), 2)?;
    let dataset = Dataset::new(out, y, 2)?;
    let coefficients = CoefficientSet::new(
        vec![eligible[ga].2.clone(), eligible[gb].2.clone()],
        spec.lambda,
        CoefKind::Exact,
    )?;
    let report = IngestReport {
        rows_read,
        rows_dropped_missing,
        rows_after_subsample: n,
        one_hot_columns,
        dropped_constant,
        f_scores,
        selected_features: kept_names,
        eligible_groups: eligible.iter().map(|(g, m, _)| (g.clone(), m.len())).collect(),
        selected_pair: (eligible[ga].0.clone(), eligible[gb].0.clone()),
        pair_distance,
        rows_out: dataset.n(),
    };
    Ok(Ingested {
        dataset,
        labels,
        coefficients,
        report,
    })
}

/// Univariate regression F statistic `r²(n−2)/(1−r²)` and its upper-tail
/// p-value under `F(1, n−2)`.
pub fn f_test(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n < 3 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return (0.0, 1.0);
    }
    let r2 = (sxy * sxy / (sxx * syy)).min(1.0);
    if r2 >= 1.0 {
        return (f64::INFINITY, 0.0);
    }
    let f = r2 * (nf - 2.0) / (1.0 - r2);
    let p = FisherSnedecor::new(1.0, nf - 2.0)
        .map(|dist| dist.sf(f))
        .unwrap_or(1.0);
    (f, p)
}

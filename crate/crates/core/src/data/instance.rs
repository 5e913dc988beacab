//! JSON instance files.
//!
//! ```json
//! {
//!   "features": [[x11, x12, 1.0], ...],   // row-major, bias column last
//!   "targets": [y1, ...],
//!   "k": 2,
//!   "reference_labels": [0, 1, ...],       // optional
//!   "reference_coefficients": [[...], ...],// optional, one row per cluster
//!   "provenance": { ... }                  // free-form
//! }
//! ```

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LpcError, Result};
use crate::types::{Assignment, CoefKind, CoefficientSet, Dataset};

use super::synthetic::Generated;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_coefficients: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

impl Instance {
    pub fn from_dataset(ds: &Dataset<f64>) -> Self {
        Self {
            features: ds.features().rows().into_iter().map(|r| r.to_vec()).collect(),
            targets: ds.targets().to_vec(),
            k: ds.k(),
            reference_labels: None,
            reference_coefficients: None,
            provenance: serde_json::Value::Null,
        }
    }

    pub fn from_generated(g: &Generated, provenance: serde_json::Value) -> Self {
        Self {
            reference_labels: Some(g.labels.labels().to_vec()),
            reference_coefficients: Some(g.coefficients.to_rows()),
            provenance,
            ..Self::from_dataset(&g.dataset)
        }
    }

    pub fn dataset(&self) -> Result<Dataset<f64>> {
        let n = self.features.len();
        let cols = self.features.first().map_or(0, Vec::len);
        if let Some(i) = self.features.iter().position(|r| r.len() != cols) {
            return Err(LpcError::InvalidDataset(format!("feature row {i} has a different length")));
        }
        let flat: Vec<f64> = self.features.iter().flatten().copied().collect();
        let features = Array2::from_shape_vec((n, cols), flat)
            .map_err(|e| LpcError::InvalidDataset(e.to_string()))?;
        Dataset::new(features, Array1::from(self.targets.clone()), self.k)
    }

    pub fn reference_assignment(&self) -> Result<Option<Assignment>> {
        self.reference_labels
            .as_ref()
            .map(|l| {
                if l.len() != self.targets.len() {
                    return Err(LpcError::InvalidAssignment(format!(
                        "{} reference labels for {} samples",
                        l.len(),
                        self.targets.len()
                    )));
                }
                Assignment::new(l.clone(), self.k)
            })
            .transpose()
    }

    pub fn reference_coefficient_set(&self) -> Result<Option<CoefficientSet<f64>>> {
        self.reference_coefficients
            .as_ref()
            .map(|rows| CoefficientSet::new(rows.iter().map(|r| Array1::from(r.clone())).collect(), 0.0, CoefKind::Exact))
            .transpose()
    }

    /// Compact serialization; the hash is computed over these bytes.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(self)?)
    }

    /// Hex SHA-256 of [`to_bytes`](Self::to_bytes).
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_bytes()?)))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        fs::write(path, bytes)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

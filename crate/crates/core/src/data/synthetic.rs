//! Seeded synthetic instances with known labels and coefficients.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{LpcError, Result};
use crate::types::{Assignment, CoefKind, CoefficientSet, Dataset};

/// How cluster feature distributions relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// One feature block, duplicated for every cluster.
    Identical,
    /// Independent draws from the same distribution.
    NonSeparable,
    /// Same mean, cluster `k` has standard deviation `σ(1 + k)`.
    SemiSeparable,
    /// Cluster `k` has its mean shifted by `4σk`.
    Separable,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::Identical,
        Regime::NonSeparable,
        Regime::SemiSeparable,
        Regime::Separable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Identical => "identical",
            Regime::NonSeparable => "non_separable",
            Regime::SemiSeparable => "semi_separable",
            Regime::Separable => "separable",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = LpcError;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| LpcError::InvalidSpec {
                field: "regime".into(),
                reason: format!("unknown regime `{s}`"),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    /// Feature count, bias excluded.
    pub d: usize,
    pub k: usize,
    /// `K` vectors of length `d + 1`, bias weight last.
    pub coefficients: Vec<Vec<f64>>,
    pub feature_mu: f64,
    pub feature_sigma: f64,
    pub noise_sigma: f64,
    pub regime: Regime,
    pub outlier_fraction: f64,
    /// Relative cluster sizes; `None` is uniform.
    pub cluster_weights: Option<Vec<f64>>,
    pub seed: u64,
}

/// A generated instance and its ground truth.
#[derive(Debug, Clone)]
pub struct Generated {
    pub dataset: Dataset<f64>,
    pub labels: Assignment,
    pub coefficients: CoefficientSet<f64>,
}

pub const SD1_COEFFICIENTS: [[f64; 3]; 2] = [[0.2, 0.4, -10.0], [-0.2, -0.4, 10.0]];

pub const SD2_COEFFICIENTS: [[f64; 4]; 3] = [
    [-1.4359, -1.0259, -1.5496, -10.0],
    [1.5646, 1.5796, 1.6696, 1.0],
    [0.1, 0.1, 0.1, 10.0],
];

pub const SD4_EXTRA: [f64; 4] = [-3.4360, -3.02593, -3.5497, 5.0];

pub const TABLE1_COEFFICIENTS: [[f64; 3]; 2] = [[2.0, 4.0, -5.0], [-2.0, -4.0, 5.0]];

const DIM_K2: [[f64; 16]; 2] = [
    [
        -1.2668, -1.6211, -1.5291, -1.1345, -1.5135, -1.1844, -1.7853, -1.8539, -1.4942, -1.8465, -1.0797, -1.5052,
        -1.0652, -1.4281, -1.0965, -1.127,
    ],
    [
        1.4032, 1.7739, 1.8930, 1.7796, 1.6501, 1.5322, 1.7982, 1.3596, 1.5170, 1.49476, 1.6131, 1.2063, 1.4200,
        1.8377, 1.2992, 1.0354,
    ],
];
const DIM_K2_BIAS: [f64; 2] = [10.0, -10.0];

const DIM_K3: [[f64; 8]; 3] = [
    [-1.2668, -1.6211, -1.5291, -1.1345, -1.5135, -1.1844, -1.7853, -1.8539],
    [1.4032, 1.7739, 1.8930, 1.7796, 1.6501, 1.5322, 1.7982, 1.3596],
    [0.1; 8],
];
const DIM_K3_BIAS: [f64; 3] = [-10.0, 1.0, 10.0];

/// Dimension-sweep coefficients: the first `d` slopes of each cluster plus
/// its bias. Defined for `K = 2, d ≤ 16` and `K = 3, d ≤ 8`.
pub fn dimension_coefficients(k: usize, d: usize) -> Result<Vec<Vec<f64>>> {
    let pick = |slopes: &[f64], bias: f64| {
        let mut w = slopes[..d].to_vec();
        w.push(bias);
        w
    };
    match (k, d) {
        (2, 1..=16) => Ok((0..2).map(|c| pick(&DIM_K2[c], DIM_K2_BIAS[c])).collect()),
        (3, 1..=8) => Ok((0..3).map(|c| pick(&DIM_K3[c], DIM_K3_BIAS[c])).collect()),
        _ => Err(LpcError::InvalidSpec {
            field: "d".into(),
            reason: format!("no dimension preset for K={k}, D={d}"),
        }),
    }
}

impl SyntheticSpec {
    /// Defaults: `μ = 1`, `σ = 2`, no outliers, uniform weights,
    /// non-separable features.
    pub fn new(n: usize, coefficients: Vec<Vec<f64>>, noise_sigma: f64, seed: u64) -> Self {
        let k = coefficients.len();
        let d = coefficients.first().map_or(0, |w| w.len().saturating_sub(1));
        Self {
            n,
            d,
            k,
            coefficients,
            feature_mu: 1.0,
            feature_sigma: 2.0,
            noise_sigma,
            regime: Regime::NonSeparable,
            outlier_fraction: 0.0,
            cluster_weights: None,
            seed,
        }
    }

    /// `K = 2`, `D = 2` high-noise preset.
    pub fn sd1(n: usize, noise_sigma: f64, seed: u64) -> Self {
        Self::new(n, SD1_COEFFICIENTS.iter().map(|w| w.to_vec()).collect(), noise_sigma, seed)
    }

    /// `K = 3`, `D = 3` preset.
    pub fn sd2(n: usize, noise_sigma: f64, seed: u64) -> Self {
        Self::new(n, SD2_COEFFICIENTS.iter().map(|w| w.to_vec()).collect(), noise_sigma, seed)
    }

    /// `K = 4`, `D = 3` preset.
    pub fn sd4(n: usize, noise_sigma: f64, seed: u64) -> Self {
        let mut coefs: Vec<Vec<f64>> = SD2_COEFFICIENTS.iter().map(|w| w.to_vec()).collect();
        coefs.push(SD4_EXTRA.to_vec());
        Self::new(n, coefs, noise_sigma, seed)
    }

    /// Two-line `D = 2` instance used for the regime comparison.
    pub fn table1(n: usize, noise_sigma: f64, regime: Regime, seed: u64) -> Self {
        let mut s = Self::new(n, TABLE1_COEFFICIENTS.iter().map(|w| w.to_vec()).collect(), noise_sigma, seed);
        s.regime = regime;
        s
    }

    /// Looks up a preset by name: `sd1`, `sd2`, `sd4`, `table1`.
    pub fn preset(name: &str, n: usize, noise_sigma: f64, seed: u64) -> Result<Self> {
        match name {
            "sd1" => Ok(Self::sd1(n, noise_sigma, seed)),
            "sd2" => Ok(Self::sd2(n, noise_sigma, seed)),
            "sd4" => Ok(Self::sd4(n, noise_sigma, seed)),
            "table1" => Ok(Self::table1(n, noise_sigma, Regime::NonSeparable, seed)),
            other => Err(LpcError::InvalidSpec {
                field: "preset".into(),
                reason: format!("unknown preset `{other}` (expected sd1, sd2, sd4 or table1)"),
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| {
            Err(LpcError::InvalidSpec {
                field: field.into(),
                reason,
            })
        };
        if self.k == 0 {
            return bad("k", "must be at least 1".into());
        }
        if self.n < self.k {
            return bad("n", format!("{} samples cannot fill {} clusters", self.n, self.k));
        }
        if self.coefficients.len() != self.k {
            return bad("coefficients", format!("expected {} vectors, got {}", self.k, self.coefficients.len()));
        }
        if let Some(w) = self.coefficients.iter().find(|w| w.len() != self.d + 1) {
            return bad("coefficients", format!("expected length {}, got {}", self.d + 1, w.len()));
        }
        if self.coefficients.iter().flatten().any(|v| !v.is_finite()) {
            return bad("coefficients", "must be finite".into());
        }
        if !self.feature_mu.is_finite() {
            return bad("feature_mu", "must be finite".into());
        }
        if !(self.feature_sigma >= 0.0) || !self.feature_sigma.is_finite() {
            return bad("feature_sigma", "must be finite and nonnegative".into());
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad("noise_sigma", "must be finite and nonnegative".into());
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return bad("outlier_fraction", format!("must lie in [0, 1), got {}", self.outlier_fraction));
        }
        if let Some(w) = &self.cluster_weights {
            if w.len() != self.k {
                return bad("cluster_weights", format!("expected {} weights, got {}", self.k, w.len()));
            }
            if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return bad("cluster_weights", "weights must be positive".into());
            }
        }
        let sizes = self.cluster_sizes();
        if sizes.contains(&0) {
            return bad("cluster_weights", format!("a cluster would be empty (sizes {sizes:?})"));
        }
        if self.regime == Regime::Identical && sizes.iter().any(|&s| s != sizes[0]) {
            return bad("regime", format!("identical regime needs balanced clusters (sizes {sizes:?})"));
        }
        Ok(())
    }

    /// Sizes proportional to the weights, rounded by largest remainder
    /// (lowest index first on ties).
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let weights = self.cluster_weights.clone().unwrap_or_else(|| vec![1.0; self.k]);
        let total: f64 = weights.iter().sum();
        let exact: Vec<f64> = weights.iter().map(|w| w / total * self.n as f64).collect();
        let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut rest = self.n - sizes.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..self.k).collect();
        order.sort_by(|&a, &b| {
            let fa = exact[a] - exact[a].floor();
            let fb = exact[b] - exact[b].floor();
            fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        for &c in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            sizes[c] += 1;
            rest -= 1;
        }
        sizes
    }
}

fn invalid(field: &str, e: impl std::fmt::Display) -> LpcError {
    LpcError::InvalidSpec {
        field: field.into(),
        reason: e.to_string(),
    }
}

/// Draws features per cluster, targets `y = x·w_k + ε`, shuffles rows, then
/// shifts a seeded fraction of targets by `±10·noise_sigma`.
pub fn generate(spec: &SyntheticSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, d, k) = (spec.n, spec.d, spec.k);
    let sizes = spec.cluster_sizes();
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| invalid("noise_sigma", e))?;

    let mut rows: Vec<(Vec<f64>, usize)> = Vec::with_capacity(n);
    if spec.regime == Regime::Identical {
        let dist = Normal::new(spec.feature_mu, spec.feature_sigma).map_err(|e| invalid("feature_sigma", e))?;
        let block: Vec<Vec<f64>> = (0..sizes[0]).map(|_| (0..d).map(|_| dist.sample(&mut rng)).collect()).collect();
        for c in 0..k {
            rows.extend(block.iter().map(|x| (x.clone(), c)));
        }
    } else {
        for (c, &size) in sizes.iter().enumerate() {
            let shift = c as f64;
            let (mu, sigma) = match spec.regime {
                Regime::SemiSeparable => (spec.feature_mu, spec.feature_sigma * (1.0 + shift)),
                Regime::Separable => (spec.feature_mu + 4.0 * spec.feature_sigma * shift, spec.feature_sigma),
                _ => (spec.feature_mu, spec.feature_sigma),
            };
            let dist = Normal::new(mu, sigma).map_err(|e| invalid("feature_sigma", e))?;
            for _ in 0..size {
                rows.push(((0..d).map(|_| dist.sample(&mut rng)).collect(), c));
            }
        }
    }
    rows.shuffle(&mut rng);

    let mut features = Array2::<f64>::ones((n, d + 1));
    let mut targets = Array1::<f64>::zeros(n);
    let mut labels = Vec::with_capacity(n);
    for (i, (x, c)) in rows.iter().enumerate() {
        let w = &spec.coefficients[*c];
        let mut y = w[d];
        for j in 0..d {
            features[[i, j]] = x[j];
            y += x[j] * w[j];
        }
        targets[i] = y + noise.sample(&mut rng);
        labels.push(*c);
    }

    let outliers = (spec.outlier_fraction * n as f64).round() as usize;
    if outliers > 0 {
        let picked = rand::seq::index::sample(&mut rng, n, outliers.min(n));
        let mut picked = picked.into_vec();
        picked.sort_unstable();
        for i in picked {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            targets[i] += sign * 10.0 * spec.noise_sigma;
        }
    }

    let dataset = Dataset::new(features, targets, k)?;
    let coefficients = CoefficientSet::new(
        spec.coefficients.iter().map(|w| Array1::from(w.clone())).collect(),
        0.0,
        CoefKind::Exact,
    )?;
    Ok(Generated {
        dataset,
        labels: Assignment::new(labels, k)?,
        coefficients,
    })
}

/// Sample count used by [`generate_regime_suite`].
pub const REGIME_SUITE_N: usize = 50;
/// Target noise used by [`generate_regime_suite`].
pub const REGIME_SUITE_NOISE: f64 = 0.5;

/// The four feature regimes with shared coefficients, in increasing order of
/// separability.
pub fn generate_regime_suite(seed: u64) -> Result<Vec<(Regime, Generated)>> {
    Regime::ALL
        .into_iter()
        .map(|r| generate(&SyntheticSpec::table1(REGIME_SUITE_N, REGIME_SUITE_NOISE, r, seed)).map(|g| (r, g)))
        .collect()
}

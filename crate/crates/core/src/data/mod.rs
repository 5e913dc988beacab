//! Instance sources: seeded synthetic generators, CSV ingestion and the JSON
//! instance format.

mod ingest;
mod instance;
mod synthetic;

pub use ingest::{f_test, ingest_csv, ingest_csv_str, FScore, IngestReport, Ingested, PreprocessSpec, MISSING};
pub use instance::Instance;
pub use synthetic::{
    dimension_coefficients, generate, generate_regime_suite, Generated, Regime, SyntheticSpec, REGIME_SUITE_N,
    REGIME_SUITE_NOISE, SD1_COEFFICIENTS, SD2_COEFFICIENTS, SD4_EXTRA, TABLE1_COEFFICIENTS,
};

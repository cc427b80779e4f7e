//! Experiment drivers: Monte Carlo ROC on simulated data, windowed detection
//! on recorded pairs, and result emission.

pub mod emit;
pub mod ingest;
pub mod roc;
pub mod windowed;

pub use emit::{emit, read_csv, write_table, OutputFormat, Tabular};
pub use ingest::{ingest_pair, parse_pair, IngestOptions};
pub use roc::{
    default_pfa_levels, monte_carlo_statistics, run_roc, threshold_grid, trapezoid_auc, RocCurve, RocMeta, RocPoint,
};
pub use windowed::{run_windowed, WindowedMeta, WindowedPoint, WindowedResult};

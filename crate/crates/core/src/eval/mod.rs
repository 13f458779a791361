//! Metrics, significance testing, score interpolation, embedding neighbours
//! and the model-size sweep.

mod fisher;
mod interpolate;
mod metrics;
mod neighbors;
pub mod pipeline;
mod scores;
mod sweep;

pub use fisher::fisher_exact;
pub use interpolate::{combine, interpolate, lambda_grid, Interpolation};
pub use metrics::{decide, evaluate, evaluate_with_scores, f1_score, EvalReport, REPORT_CSV_HEADER};
pub use neighbors::{cosine, neighbors, Neighbor, NeighborList, TableRef};
pub use pipeline::{run_pipeline, PipelineResult, PreparedData};
pub use scores::{read_scores, write_scores, ScoreRecord};
pub use sweep::{size_sweep, sweep_csv, SweepCell, SWEEP_CSV_HEADER};

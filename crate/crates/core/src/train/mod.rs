//! Training loop, pair sampling and metrics.

pub mod metrics;
pub mod run;
pub mod sampler;
pub mod trainer;

pub use metrics::{read_metrics, MetricRecord, MetricsWriter};
pub use run::{resume_run, run_training, start_run, RunDir};
pub use sampler::{sample_snn_batch, LabelIndex, SnnPair, TrajectoryPool};
pub use trainer::{games_digest, load_model, Losses, StepOutput, Trainer};

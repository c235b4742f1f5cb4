//! Game-playing score, pair accuracy, clustering quality and embedding export.

pub mod cluster;
pub mod export;
pub mod kmeans;
pub mod play;
pub mod report;
pub mod snn;
pub mod vmeasure;

pub use cluster::{cluster_eval, cluster_points, filter_frequent, gather_corpus, ClusterReport, CORPUS_SIZE, MIN_LABEL_COUNT};
pub use export::{export_embeddings, parse_embeddings};
pub use kmeans::{kmeans_pp, KMeans, MAX_ITERATIONS, RESTARTS};
pub use play::{for_each_game, play_episode, play_eval, play_logs, summarize, tokenize_actions, Agent, EpisodeLog, EpisodeSummary, PlayReport, Policy, RandomPolicy};
pub use report::EvalReport;
pub use snn::{accuracy_with, episode_memory, pair_corpus, snn_accuracy};
pub use vmeasure::{v_measure, VMeasure};

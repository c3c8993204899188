//! Rank evaluation over TREC-format files: MRR, MAP and Recall@10, overall
//! and per dataset subset.

mod metrics;
mod trec;

pub use metrics::{
    average_precision, evaluate, recall_at_k, reciprocal_rank, MetricsReport, SubsetMetrics,
    OVERALL,
};
pub use trec::{read_subset_map, Qrels, QueryRun, RunEntry, RunFile};

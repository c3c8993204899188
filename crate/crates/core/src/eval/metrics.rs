//! Per-query metrics at full ranking depth (no cutoff for RR or AP).

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use super::trec::{Qrels, RunFile};

/// Key of the all-queries block in a [`MetricsReport`].
pub const OVERALL: &str = "overall";

/// `1 / rank` of the first relevant passage, 0 if none is retrieved.
pub fn reciprocal_rank<S: AsRef<str>>(ranking: &[S], relevant: &HashSet<&str>) -> f64 {
    ranking
        .iter()
        .position(|p| relevant.contains(p.as_ref()))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Mean of precision@r over the ranks r holding a relevant passage, divided
/// by the total number of relevant passages. `None` for an empty relevant set.
pub fn average_precision<S: AsRef<str>>(ranking: &[S], relevant: &HashSet<&str>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, p) in ranking.iter().enumerate() {
        if relevant.contains(p.as_ref()) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / relevant.len() as f64)
}

/// Fraction of relevant passages in the first `k`. `None` for an empty
/// relevant set.
pub fn recall_at_k<S: AsRef<str>>(
    ranking: &[S],
    relevant: &HashSet<&str>,
    k: usize,
) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let found = ranking
        .iter()
        .take(k)
        .filter(|p| relevant.contains(p.as_ref()))
        .count();
    Some(found as f64 / relevant.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsetMetrics {
    pub mrr: f64,
    pub map: f64,
    pub recall_at_10: f64,
    pub query_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    /// Subset label to metrics; always contains [`OVERALL`].
    pub subsets: BTreeMap<String, SubsetMetrics>,
    pub warnings: Vec<String>,
}

impl MetricsReport {
    pub fn overall(&self) -> &SubsetMetrics {
        &self.subsets[OVERALL]
    }

    /// `{subset: {mrr, map, recall_at_10, query_count}}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.subsets).expect("metrics serialize")
    }
}

#[derive(Default)]
struct Sums {
    rr: f64,
    ap: f64,
    recall: f64,
    count: usize,
}

impl Sums {
    fn add(&mut self, rr: f64, ap: f64, recall: f64) {
        self.rr += rr;
        self.ap += ap;
        self.recall += recall;
        self.count += 1;
    }

    fn mean(&self) -> SubsetMetrics {
        let n = self.count.max(1) as f64;
        SubsetMetrics {
            mrr: self.rr / n,
            map: self.ap / n,
            recall_at_10: self.recall / n,
            query_count: self.count,
        }
    }
}

/// Scores `run` against `qrels`.
///
/// Only qrels queries with at least one relevant passage are evaluated; one
/// missing from the run scores 0. Run queries without such judgments are
/// skipped with a warning. Queries are grouped into subsets by
/// `subset_map`; unlabeled queries count toward the overall block only.
pub fn evaluate(
    run: &RunFile,
    qrels: &Qrels,
    subset_map: &HashMap<String, String>,
) -> MetricsReport {
    let mut warnings = Vec::new();
    for q in run.queries() {
        if qrels.relevant(&q.query_id).is_empty() {
            warnings.push(format!(
                "run query {} has no relevant judgments; excluded",
                q.query_id
            ));
        }
    }

    let mut overall = Sums::default();
    let mut by_subset: BTreeMap<String, Sums> = BTreeMap::new();
    for query_id in qrels.query_ids() {
        let relevant = qrels.relevant(query_id);
        if relevant.is_empty() {
            continue;
        }
        let (rr, ap, recall) = match run.get(query_id) {
            Some(q) => {
                let ranking = q.passage_ids();
                (
                    reciprocal_rank(&ranking, &relevant),
                    average_precision(&ranking, &relevant).unwrap_or(0.0),
                    recall_at_k(&ranking, &relevant, 10).unwrap_or(0.0),
                )
            }
            None => (0.0, 0.0, 0.0),
        };
        overall.add(rr, ap, recall);
        match subset_map.get(query_id) {
            Some(label) => by_subset
                .entry(label.clone())
                .or_default()
                .add(rr, ap, recall),
            None if !subset_map.is_empty() => {
                warnings.push(format!("query {query_id} has no subset label"));
            }
            None => {}
        }
    }

    let mut subsets: BTreeMap<String, SubsetMetrics> =
        by_subset.into_iter().map(|(k, s)| (k, s.mean())).collect();
    subsets.insert(OVERALL.to_owned(), overall.mean());
    MetricsReport { subsets, warnings }
}

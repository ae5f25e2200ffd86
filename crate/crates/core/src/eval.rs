//! Ranking and retrieval metrics for person re-identification and signal matching.
//!
//! This is the only module that reads ground-truth identity labels.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{AffinityMatrix, Distance, Scenario, SequenceId, TrajDistanceMatrix};

/// Which gallery items a re-identification query is ranked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GalleryFilter {
    /// Drop gallery items with the query's identity seen by the query's camera.
    pub exclude_same_camera: bool,
}

impl Default for GalleryFilter {
    fn default() -> Self {
        GalleryFilter { exclude_same_camera: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedItem {
    /// Row or column index of the item in the scored matrix.
    pub index: usize,
    pub relevant: bool,
}

/// Gallery in retrieval order for one query.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedList {
    pub query: SequenceId,
    pub items: Vec<RankedItem>,
}

impl RankedList {
    /// 1-based rank of the first relevant item.
    pub fn first_hit(&self) -> Option<usize> {
        self.items.iter().position(|it| it.relevant).map(|p| p + 1)
    }

    pub fn order(&self) -> Vec<usize> {
        self.items.iter().map(|it| it.index).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    /// `cmc[r]` is the fraction of queries whose first match is within rank `r + 1`.
    pub cmc: Vec<f64>,
    pub map: f64,
    pub per_query_ap: Vec<f64>,
}

impl MetricReport {
    pub fn rank(&self, r: usize) -> Option<f64> {
        r.checked_sub(1).and_then(|i| self.cmc.get(i).copied())
    }
}

fn query_index(scenario: &Scenario, query: SequenceId) -> Result<usize> {
    scenario.sequence_index(query).ok_or(Error::UnknownQuery(query))
}

/// Gallery sequences for `query`, ordered by descending affinity.
pub fn reid_rank(s: &AffinityMatrix, scenario: &Scenario, query: SequenceId, filter: GalleryFilter) -> Result<RankedList> {
    let qi = query_index(scenario, query)?;
    if qi >= s.rows() || s.cols() != scenario.sequences.len() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "affinity is {}x{} for {} sequences",
            s.rows(),
            s.cols(),
            scenario.sequences.len()
        )));
    }
    let q = &scenario.sequences[qi];
    let row = s.row(qi);
    let mut gallery: Vec<usize> = (0..scenario.sequences.len())
        .filter(|&j| j != qi)
        .filter(|&j| {
            let g = &scenario.sequences[j];
            !(filter.exclude_same_camera && q.identity.is_some() && g.identity == q.identity && g.camera == q.camera)
        })
        .collect();
    gallery.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    let items = gallery
        .into_iter()
        .map(|j| RankedItem { index: j, relevant: q.identity.is_some() && scenario.sequences[j].identity == q.identity })
        .collect();
    Ok(RankedList { query, items })
}

/// Signals for `query`, nearest first, signals without temporal overlap last.
pub fn signal_rank(d: &TrajDistanceMatrix, scenario: &Scenario, query: SequenceId) -> Result<RankedList> {
    let qi = query_index(scenario, query)?;
    if qi >= d.rows() || d.cols() != scenario.signals.len() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "distances are {}x{} for {} signals",
            d.rows(),
            d.cols(),
            scenario.signals.len()
        )));
    }
    let identity = scenario.sequences[qi].identity;
    let row = d.row(qi);
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| match Distance::total_cmp(&row[a], &row[b]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    let items = order
        .into_iter()
        .map(|m| RankedItem { index: m, relevant: identity.is_some() && scenario.signals[m].identity == identity })
        .collect();
    Ok(RankedList { query, items })
}

/// Cumulative matching characteristic up to `max_rank`.
pub fn cmc(lists: &[RankedList], max_rank: usize) -> Result<Vec<f64>> {
    let mut hits = alloc::vec![0usize; max_rank];
    for list in lists {
        let first = list.first_hit().ok_or(Error::NoRelevantItem(list.query))?;
        if first <= max_rank {
            hits[first - 1] += 1;
        }
    }
    let n = lists.len().max(1) as f64;
    let mut acc = 0usize;
    Ok(hits
        .into_iter()
        .map(|h| {
            acc += h;
            acc as f64 / n
        })
        .collect())
}

/// Mean of precision-at-k over the positions of relevant items.
pub fn average_precision(list: &RankedList) -> Result<f64> {
    let mut found = 0usize;
    let mut sum = 0.0;
    for (pos, item) in list.items.iter().enumerate() {
        if item.relevant {
            found += 1;
            sum += found as f64 / (pos + 1) as f64;
        }
    }
    if found == 0 {
        return Err(Error::NoRelevantItem(list.query));
    }
    Ok(sum / found as f64)
}

pub fn mean_ap(lists: &[RankedList]) -> Result<f64> {
    Ok(per_query_ap(lists)?.iter().sum::<f64>() / lists.len().max(1) as f64)
}

fn per_query_ap(lists: &[RankedList]) -> Result<Vec<f64>> {
    lists.iter().map(average_precision).collect()
}

pub fn report(lists: &[RankedList], max_rank: usize) -> Result<MetricReport> {
    let per_query_ap = per_query_ap(lists)?;
    let map = per_query_ap.iter().sum::<f64>() / lists.len().max(1) as f64;
    Ok(MetricReport { cmc: cmc(lists, max_rank)?, map, per_query_ap })
}

/// Re-identification metrics over `queries`.
pub fn reid_report(
    s: &AffinityMatrix,
    scenario: &Scenario,
    queries: &[SequenceId],
    filter: GalleryFilter,
    max_rank: usize,
) -> Result<MetricReport> {
    let lists = queries
        .iter()
        .map(|&q| reid_rank(s, scenario, q, filter))
        .collect::<Result<Vec<_>>>()?;
    report(&lists, max_rank)
}

/// Queries whose person carries a signal; only these take part in signal matching.
pub fn signal_queries(scenario: &Scenario, queries: &[SequenceId]) -> Vec<SequenceId> {
    queries
        .iter()
        .copied()
        .filter(|&q| {
            scenario
                .sequence_index(q)
                .and_then(|i| scenario.sequences[i].identity)
                .is_some_and(|id| scenario.signal_of(id).is_some())
        })
        .collect()
}

/// Signal-matching metrics over the queries that own a signal.
pub fn signal_report(
    d: &TrajDistanceMatrix,
    scenario: &Scenario,
    queries: &[SequenceId],
    max_rank: usize,
) -> Result<MetricReport> {
    for q in queries {
        query_index(scenario, *q)?;
    }
    let lists = signal_queries(scenario, queries)
        .into_iter()
        .map(|q| signal_rank(d, scenario, q))
        .collect::<Result<Vec<_>>>()?;
    report(&lists, max_rank)
}

/// Signal matching by sorting the raw trajectory distances.
pub fn sm_baseline(
    d0: &TrajDistanceMatrix,
    scenario: &Scenario,
    queries: &[SequenceId],
    max_rank: usize,
) -> Result<MetricReport> {
    signal_report(d0, scenario, queries, max_rank)
}

//! Corpus-level structures: venue frequencies, the citation threshold,
//! moving windows over publication years, and per-window whole-count
//! occurrence matrices (citing documents x cited venues).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::ingest::Corpus;

/// Per-venue citation totals across the whole corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VenueFrequencyTable {
    pub entries: BTreeMap<String, u64>,
}

impl VenueFrequencyTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by descending count, ties by ascending name.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<(&str, u64)> = self
            .entries
            .iter()
            .map(|(name, &count)| (name.as_str(), count))
            .collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }
}

/// Exact per-venue totals over all documents and years (whole counting:
/// a document citing a venue twice contributes two).
pub fn venue_frequencies(corpus: &Corpus) -> VenueFrequencyTable {
    let mut entries = BTreeMap::new();
    for doc in &corpus.docs {
        for r in &doc.refs {
            if let Some(venue) = r.venue_raw.as_deref() {
                *entries.entry(venue.to_string()).or_insert(0u64) += 1;
            }
        }
    }
    VenueFrequencyTable { entries }
}

/// Venues cited strictly more than `min_count` times.
pub fn apply_threshold(table: &VenueFrequencyTable, min_count: u64) -> BTreeSet<String> {
    table
        .entries
        .iter()
        .filter(|(_, &c)| c > min_count)
        .map(|(name, _)| name.clone())
        .collect()
}

/// One aggregation window, labeled by its final year.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub label: i32,
    pub year_start: i32,
    pub year_end: i32,
    pub doc_ids: Vec<String>,
}

/// Slice the corpus into moving windows of `span` consecutive years,
/// advanced one year at a time and labeled by the last year covered.
///
/// Leading windows are emitted only once the full span is available
/// unless `ragged_leading` is set. A corpus whose year range is shorter
/// than the span collapses to a single window covering all years (the
/// caller should warn).
pub fn moving_windows(corpus: &Corpus, span: usize, ragged_leading: bool) -> Result<Vec<Window>> {
    if span == 0 {
        return Err(Error::Config("window span must be at least 1".into()));
    }
    if corpus.docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let min_year = corpus.docs.iter().map(|d| d.pub_year).min().unwrap();
    let max_year = corpus.docs.iter().map(|d| d.pub_year).max().unwrap();
    let range = (max_year - min_year + 1) as usize;

    let labels: Vec<i32> = if range < span {
        vec![max_year]
    } else if ragged_leading {
        (min_year..=max_year).collect()
    } else {
        (min_year + span as i32 - 1..=max_year).collect()
    };

    let mut windows = Vec::with_capacity(labels.len());
    for label in labels {
        let year_start = if range < span {
            min_year
        } else {
            (label - span as i32 + 1).max(min_year)
        };
        let doc_ids: Vec<String> = corpus
            .docs
            .iter()
            .filter(|d| d.pub_year >= year_start && d.pub_year <= label)
            .map(|d| d.id.clone())
            .collect();
        windows.push(Window {
            label,
            year_start,
            year_end: label,
            doc_ids,
        });
    }
    Ok(windows)
}

/// Whole-count documents x venues matrix for one window, stored sparse
/// by column. Columns are restricted to venues actually cited within the
/// window, so no all-zero column exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceMatrix {
    pub window_label: i32,
    /// Row ids (citing documents), in corpus order.
    pub docs: Vec<String>,
    /// Column names (cited venues), sorted.
    pub venues: Vec<String>,
    /// Per column: (row index, count) sorted by row index.
    cols: Vec<Vec<(u32, u32)>>,
}

impl OccurrenceMatrix {
    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn n_venues(&self) -> usize {
        self.venues.len()
    }

    pub fn column(&self, j: usize) -> &[(u32, u32)] {
        &self.cols[j]
    }

    pub fn count(&self, row: usize, col: usize) -> u32 {
        self.cols[col]
            .binary_search_by_key(&(row as u32), |&(r, _)| r)
            .map(|i| self.cols[col][i].1)
            .unwrap_or(0)
    }

    /// Column total (within-window venue frequency).
    pub fn column_total(&self, j: usize) -> u64 {
        self.cols[j].iter().map(|&(_, c)| c as u64).sum()
    }

    /// Sparse dot product of two columns over document rows.
    pub fn column_dot(&self, a: usize, b: usize) -> f64 {
        let (mut i, mut j) = (0usize, 0usize);
        let (ca, cb) = (&self.cols[a], &self.cols[b]);
        let mut acc = 0.0;
        while i < ca.len() && j < cb.len() {
            match ca[i].0.cmp(&cb[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += ca[i].1 as f64 * cb[j].1 as f64;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn triplets(&self) -> impl Iterator<Item = (&str, &str, u32)> + '_ {
        self.cols.iter().enumerate().flat_map(move |(j, col)| {
            col.iter()
                .map(move |&(r, c)| (self.docs[r as usize].as_str(), self.venues[j].as_str(), c))
        })
    }

    /// Rebuild a matrix from (doc, venue, count) triplets, e.g. read back
    /// from the sparse CSV serialization.
    pub fn from_triplets(
        window_label: i32,
        triplets: &[(String, String, u32)],
    ) -> Result<OccurrenceMatrix> {
        let mut docs: Vec<String> = Vec::new();
        let mut seen: HashMap<&str, u32> = HashMap::new();
        for (d, _, _) in triplets {
            if !seen.contains_key(d.as_str()) {
                seen.insert(d.as_str(), docs.len() as u32);
                docs.push(d.clone());
            }
        }
        let venues: BTreeSet<&str> = triplets.iter().map(|(_, v, _)| v.as_str()).collect();
        let venues: Vec<String> = venues.into_iter().map(String::from).collect();
        let venue_idx: HashMap<&str, usize> = venues
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let mut cols: Vec<Vec<(u32, u32)>> = vec![Vec::new(); venues.len()];
        for (d, v, c) in triplets {
            if *c == 0 {
                continue;
            }
            cols[venue_idx[v.as_str()]].push((seen[d.as_str()], *c));
        }
        for col in &mut cols {
            col.sort_by_key(|&(r, _)| r);
        }
        Ok(OccurrenceMatrix {
            window_label,
            docs,
            venues,
            cols,
        })
    }
}

/// Build the whole-count matrix for one window, restricted to the given
/// venue set. Venues uncited within the window get no column.
pub fn build_matrix(
    window: &Window,
    corpus: &Corpus,
    venues: &BTreeSet<String>,
) -> Result<OccurrenceMatrix> {
    if venues.is_empty() {
        return Err(Error::Config("admitted venue set is empty".into()));
    }
    if window.doc_ids.is_empty() {
        return Err(Error::InsufficientData(format!(
            "window {} holds no documents",
            window.label
        )));
    }
    let index = corpus.doc_index();
    let mut counts: BTreeMap<&str, BTreeMap<u32, u32>> = BTreeMap::new();
    for (row, id) in window.doc_ids.iter().enumerate() {
        let doc = &corpus.docs[*index.get(id.as_str()).ok_or_else(|| {
            Error::Format {
                path: "window".into(),
                message: format!("document {id} not in corpus"),
            }
        })?];
        for r in &doc.refs {
            if let Some(v) = r.venue_raw.as_deref() {
                if venues.contains(v) {
                    *counts
                        .entry(v)
                        .or_default()
                        .entry(row as u32)
                        .or_insert(0) += 1;
                }
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no document in window {} cites an admitted venue",
            window.label
        )));
    }
    let venues_in: Vec<String> = counts.keys().map(|v| v.to_string()).collect();
    let cols: Vec<Vec<(u32, u32)>> = counts
        .values()
        .map(|m| m.iter().map(|(&r, &c)| (r, c)).collect())
        .collect();
    Ok(OccurrenceMatrix {
        window_label: window.label,
        docs: window.doc_ids.clone(),
        venues: venues_in,
        cols,
    })
}

/// Least-squares line through (log10 rank, log10 frequency), with tied
/// frequencies sharing the mean rank. Returns (slope, intercept, r^2).
pub fn loglog_fit(table: &VenueFrequencyTable) -> Result<(f64, f64, f64)> {
    if table.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "log-log fit needs at least 3 venues, got {}",
            table.len()
        )));
    }
    let ranked = table.ranked();
    // Mean rank per tied frequency group.
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(ranked.len());
    let mut i = 0;
    while i < ranked.len() {
        let mut j = i;
        while j < ranked.len() && ranked[j].1 == ranked[i].1 {
            j += 1;
        }
        let mean_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        for _ in i..j {
            points.push((mean_rank.log10(), (ranked[i].1 as f64).log10()));
        }
        i = j;
    }

    let distinct: BTreeSet<(u64, u64)> = points
        .iter()
        .map(|&(x, y)| (x.to_bits(), y.to_bits()))
        .collect();
    let constant_freq = ranked.iter().all(|&(_, c)| c == ranked[0].1);
    if distinct.len() < 3 && !constant_freq {
        return Err(Error::InsufficientData(format!(
            "log-log fit needs 3 distinct points, got {}",
            distinct.len()
        )));
    }

    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();

    if sxx < 1e-300 || syy < 1e-300 {
        // Degenerate variance: slope 0, r^2 defined as 0.
        return Ok((0.0, mean_y, 0.0));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = (sxy * sxy) / (sxx * syy);
    Ok((slope, intercept, r_squared))
}

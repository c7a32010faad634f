//! The batch pipeline: a declarative run configuration and one function
//! per stage. Stages communicate only through plain files under the
//! output directory, so each is independently re-runnable on the
//! products of the previous ones and a full run is exactly the
//! concatenation of the stages.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community::{louvain, modularity, Partition};
use crate::corpus::{
    apply_threshold, build_matrix, loglog_fit, moving_windows, venue_frequencies,
    OccurrenceMatrix, VenueFrequencyTable, Window,
};
use crate::error::{Error, Result};
use crate::export::{
    clu_string, continuation_colors, loadings_report_string, metrics_report_string,
    pajek_string, read_pajek, MetricsRow,
};
use crate::factors::{
    correlation, eigenvalue_scree, principal_components, rotate_varimax,
};
use crate::flow::{
    align_communities, alluvial_layout, detect_events, series_from_slices, AlluvialGeometry,
    Band, FlowEdge, Ribbon,
};
use crate::ingest::{
    clean_corpus, decode_export, parse_export, to_documents, CitedReference, Corpus,
    DocumentRecord, NormalizationRules,
};
use crate::layout::{
    aggregated_stress, dissimilarity_from_similarity, dynamic_layout, frame_seed,
    kruskal_stress,
};
use crate::plot::line_chart_string;
use crate::seeding;
use crate::simnet::{avg_clustering, cosine_matrix, density, threshold_network, SimilarityMatrix};

/// All knobs of a run. Defaults follow the choices the analysis was
/// designed around: four-year windows, venues cited more than 20 times,
/// cosine > 0.2, five factors, four-point smoothing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub span: usize,
    pub min_count: u64,
    pub tau: f64,
    pub k_factors: usize,
    pub alpha: f64,
    pub smooth_span: usize,
    pub min_overlap: f64,
    pub seed: u64,
    pub weighted: bool,
    pub ragged_windows: bool,
    pub kaiser: bool,
    pub highlight_venue: Option<String>,
    pub rules_file: Option<PathBuf>,
    pub workers: usize,
    pub layout_tol: f64,
    pub layout_max_iter: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            out_dir: PathBuf::from("out"),
            span: 4,
            min_count: 20,
            tau: 0.2,
            k_factors: 5,
            alpha: 1.0,
            smooth_span: 4,
            min_overlap: 0.3,
            seed: 42,
            weighted: true,
            ragged_windows: false,
            kaiser: true,
            highlight_venue: None,
            rules_file: None,
            workers: 0,
            layout_tol: 1e-7,
            layout_max_iter: 500,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.span == 0 {
            return Err(Error::Config("span must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::Config(format!(
                "tau must lie in [0, 1), got {}",
                self.tau
            )));
        }
        if self.k_factors == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.min_overlap > 0.0 && self.min_overlap <= 1.0) {
            return Err(Error::Config(format!(
                "min-overlap must lie in (0, 1], got {}",
                self.min_overlap
            )));
        }
        if self.alpha < 0.0 {
            return Err(Error::Config(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.smooth_span == 0 {
            return Err(Error::Config("smooth-span must be at least 1".into()));
        }
        if self.layout_max_iter == 0 {
            return Err(Error::Config("layout-max-iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Parse a `key = value` config file; later lines win. Keys mirror
    /// the CLI flags with underscores.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
                path: path.display().to_string(),
                message: format!("line {}: expected key = value", lineno + 1),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Format {
                path: path.display().to_string(),
                message: format!("line {}: bad {what}: {value:?}", lineno + 1),
            };
            match key {
                "input" => self.inputs.push(PathBuf::from(value)),
                "out" => self.out_dir = PathBuf::from(value),
                "span" => self.span = value.parse().map_err(|_| bad("span"))?,
                "min_count" => self.min_count = value.parse().map_err(|_| bad("min_count"))?,
                "tau" => self.tau = value.parse().map_err(|_| bad("tau"))?,
                "k" => self.k_factors = value.parse().map_err(|_| bad("k"))?,
                "alpha" => self.alpha = value.parse().map_err(|_| bad("alpha"))?,
                "smooth_span" => {
                    self.smooth_span = value.parse().map_err(|_| bad("smooth_span"))?
                }
                "min_overlap" => {
                    self.min_overlap = value.parse().map_err(|_| bad("min_overlap"))?
                }
                "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
                "weighted" => self.weighted = value.parse().map_err(|_| bad("weighted"))?,
                "ragged_windows" => {
                    self.ragged_windows = value.parse().map_err(|_| bad("ragged_windows"))?
                }
                "kaiser" => self.kaiser = value.parse().map_err(|_| bad("kaiser"))?,
                "highlight_venue" => self.highlight_venue = Some(value.to_string()),
                "rules" => self.rules_file = Some(PathBuf::from(value)),
                "workers" => self.workers = value.parse().map_err(|_| bad("workers"))?,
                "layout_tol" => self.layout_tol = value.parse().map_err(|_| bad("layout_tol"))?,
                "layout_max_iter" => {
                    self.layout_max_iter = value.parse().map_err(|_| bad("layout_max_iter"))?
                }
                other => {
                    return Err(Error::Format {
                        path: path.display().to_string(),
                        message: format!("line {}: unknown key {other:?}", lineno + 1),
                    })
                }
            }
        }
        Ok(())
    }
}

/// What one stage did: event counts plus advisory notes.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct StageReport {
    pub name: String,
    pub counts: BTreeMap<String, u64>,
    pub notes: Vec<String>,
    pub wall_ms: u64,
}

impl StageReport {
    fn new(name: &str) -> StageReport {
        StageReport {
            name: name.to_string(),
            ..StageReport::default()
        }
    }

    fn count(&mut self, key: &str, value: u64) {
        self.counts.insert(key.to_string(), value);
    }
}

/// Everything a finished run records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub stages: Vec<StageReport>,
}

// ---------------------------------------------------------------------------
// File locations and small CSV helpers.

fn p_documents(out: &Path) -> PathBuf {
    out.join("documents.csv")
}
fn p_references(out: &Path) -> PathBuf {
    out.join("references.csv")
}
fn p_references_clean(out: &Path) -> PathBuf {
    out.join("references_clean.csv")
}
fn p_cleaning_report(out: &Path) -> PathBuf {
    out.join("cleaning_report.csv")
}
fn p_frequencies(out: &Path) -> PathBuf {
    out.join("venue_frequencies.csv")
}
fn p_loglog(out: &Path) -> PathBuf {
    out.join("loglog_fit.csv")
}
fn p_windows(out: &Path) -> PathBuf {
    out.join("windows.csv")
}
fn p_matrix_meta(out: &Path) -> PathBuf {
    out.join("matrices").join("meta.csv")
}
fn p_matrix(out: &Path, label: i32) -> PathBuf {
    out.join("matrices").join(format!("window_{label}.csv"))
}
fn p_similarity(out: &Path, label: i32) -> PathBuf {
    out.join("similarities").join(format!("window_{label}.csv"))
}
fn p_network(out: &Path, label: i32) -> PathBuf {
    out.join("networks").join(format!("window_{label}.net"))
}
fn p_edges(out: &Path, label: i32) -> PathBuf {
    out.join("networks").join(format!("window_{label}_edges.csv"))
}
fn p_clu(out: &Path, label: i32) -> PathBuf {
    out.join("partitions").join(format!("window_{label}.clu"))
}
fn p_partition(out: &Path, label: i32) -> PathBuf {
    out.join("partitions").join(format!("window_{label}.csv"))
}
fn p_metrics(out: &Path) -> PathBuf {
    out.join("metrics.csv")
}
fn p_loadings(out: &Path, label: i32) -> PathBuf {
    out.join("factors").join(format!("window_{label}_loadings.csv"))
}
fn p_scree(out: &Path, label: i32) -> PathBuf {
    out.join("factors").join(format!("window_{label}_scree.csv"))
}
fn p_flow_edges(out: &Path) -> PathBuf {
    out.join("flow").join("edges.csv")
}
fn p_flow_events(out: &Path) -> PathBuf {
    out.join("flow").join("events.csv")
}
fn p_flow_bands(out: &Path) -> PathBuf {
    out.join("flow").join("bands.csv")
}
fn p_flow_ribbons(out: &Path) -> PathBuf {
    out.join("flow").join("ribbons.csv")
}
fn p_alluvial(out: &Path) -> PathBuf {
    out.join("flow").join("alluvial.svg")
}
fn p_frame(out: &Path, label: i32) -> PathBuf {
    out.join("layout").join(format!("frame_{label}.csv"))
}
fn p_layout_stress(out: &Path) -> PathBuf {
    out.join("layout").join("stress.csv")
}
fn p_plots(out: &Path) -> PathBuf {
    out.join("plots")
}
fn p_manifest(out: &Path) -> PathBuf {
    out.join("manifest.json")
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| format_err(path, e.to_string()))?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| format_err(path, e.to_string()))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

// ---------------------------------------------------------------------------
// Stage 1: parse.

pub fn stage_parse(cfg: &RunConfig) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = StageReport::new("parse");
    if cfg.inputs.is_empty() {
        return Err(Error::Config("no input files given".into()));
    }
    let mut all_docs: Vec<DocumentRecord> = Vec::new();
    let mut n_records = 0u64;
    let mut rejected = 0u64;
    for input in &cfg.inputs {
        let bytes = fs::read(input)?;
        let text = decode_export(&bytes);
        let records = parse_export(&text)?;
        n_records += records.len() as u64;
        let (docs, warnings) = to_documents(&records);
        rejected += warnings.rejected_missing_year as u64;
        all_docs.extend(docs);
    }

    let mut docs_csv = String::from("id,pub_year,n_refs\n");
    let mut refs_csv = String::from("doc_id,first_author,year,venue_raw,volume,page\n");
    let mut n_refs = 0u64;
    for doc in &all_docs {
        docs_csv.push_str(&format!(
            "{},{},{}\n",
            csv_field(&doc.id),
            doc.pub_year,
            doc.refs.len()
        ));
        for r in &doc.refs {
            n_refs += 1;
            refs_csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&doc.id),
                csv_field(r.first_author.as_deref().unwrap_or("")),
                r.year.map(|y| y.to_string()).unwrap_or_default(),
                csv_field(r.venue_raw.as_deref().unwrap_or("")),
                csv_field(r.volume.as_deref().unwrap_or("")),
                csv_field(r.page.as_deref().unwrap_or("")),
            ));
        }
    }
    write_file(&p_documents(&cfg.out_dir), &docs_csv)?;
    write_file(&p_references(&cfg.out_dir), &refs_csv)?;

    report.count("records", n_records);
    report.count("documents", all_docs.len() as u64);
    report.count("references", n_refs);
    report.count("rejected_missing_year", rejected);
    if rejected > 0 {
        report
            .notes
            .push(format!("{rejected} records rejected for missing year"));
    }
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

/// Documents with their raw references, rebuilt from the parse stage.
fn read_parsed_docs(out: &Path) -> Result<Vec<DocumentRecord>> {
    let doc_rows = read_csv_rows(&p_documents(out))?;
    let ref_rows = read_csv_rows(&p_references(out))?;
    let mut docs: Vec<DocumentRecord> = Vec::with_capacity(doc_rows.len());
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for row in &doc_rows {
        if row.len() < 2 {
            return Err(format_err(&p_documents(out), "short row"));
        }
        let id = row[0].clone();
        let pub_year: i32 = row[1]
            .parse()
            .map_err(|_| format_err(&p_documents(out), format!("bad year {:?}", row[1])))?;
        index.insert(id.clone(), docs.len());
        docs.push(DocumentRecord {
            id,
            pub_year,
            refs: Vec::new(),
        });
    }
    for row in &ref_rows {
        if row.len() < 6 {
            return Err(format_err(&p_references(out), "short row"));
        }
        let doc = index
            .get(&row[0])
            .ok_or_else(|| format_err(&p_references(out), format!("unknown doc {:?}", row[0])))?;
        let opt = |s: &String| {
            if s.is_empty() {
                None
            } else {
                Some(s.clone())
            }
        };
        docs[*doc].refs.push(CitedReference {
            first_author: opt(&row[1]),
            year: row[2].parse().ok(),
            venue_raw: opt(&row[3]),
            volume: opt(&row[4]),
            page: opt(&row[5]),
        });
    }
    Ok(docs)
}

// ---------------------------------------------------------------------------
// Stage 2: clean.

pub fn stage_clean(cfg: &RunConfig) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = StageReport::new("clean");
    let docs = read_parsed_docs(&cfg.out_dir)?;
    let rules = match &cfg.rules_file {
        Some(path) => NormalizationRules::from_tsv(&fs::read_to_string(path)?)?,
        None => NormalizationRules::default(),
    };
    let (corpus, cleaning) = clean_corpus(&docs, &rules)?;

    let mut out = String::from("doc_id,venue\n");
    for doc in &corpus.docs {
        for r in &doc.refs {
            out.push_str(&format!(
                "{},{}\n",
                csv_field(&doc.id),
                csv_field(r.venue_raw.as_deref().expect("cleaned refs carry venues"))
            ));
        }
    }
    write_file(&p_references_clean(&cfg.out_dir), &out)?;

    let report_csv = format!(
        "metric,value\nrefs_in,{}\nrefs_dropped_by_rule,{}\nrefs_dropped_singleton,{}\nrefs_out,{}\npct_retained,{:.1}\nrefs_missing_year,{}\n",
        cleaning.refs_in,
        cleaning.refs_dropped_by_rule,
        cleaning.refs_dropped_singleton,
        cleaning.refs_out,
        cleaning.pct_retained(),
        cleaning.refs_missing_year,
    );
    write_file(&p_cleaning_report(&cfg.out_dir), &report_csv)?;

    report.count("refs_in", cleaning.refs_in as u64);
    report.count("refs_dropped_by_rule", cleaning.refs_dropped_by_rule as u64);
    report.count(
        "refs_dropped_singleton",
        cleaning.refs_dropped_singleton as u64,
    );
    report.count("refs_out", cleaning.refs_out as u64);
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

/// Cleaned corpus rebuilt from documents.csv + references_clean.csv.
fn read_clean_corpus(out: &Path) -> Result<Corpus> {
    let doc_rows = read_csv_rows(&p_documents(out))?;
    let ref_rows = read_csv_rows(&p_references_clean(out))?;
    let mut docs: Vec<DocumentRecord> = Vec::with_capacity(doc_rows.len());
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for row in &doc_rows {
        let pub_year: i32 = row[1]
            .parse()
            .map_err(|_| format_err(&p_documents(out), format!("bad year {:?}", row[1])))?;
        index.insert(row[0].clone(), docs.len());
        docs.push(DocumentRecord {
            id: row[0].clone(),
            pub_year,
            refs: Vec::new(),
        });
    }
    for row in &ref_rows {
        let doc = index.get(&row[0]).ok_or_else(|| {
            format_err(&p_references_clean(out), format!("unknown doc {:?}", row[0]))
        })?;
        docs[*doc].refs.push(CitedReference {
            first_author: None,
            year: None,
            venue_raw: Some(row[1].clone()),
            volume: None,
            page: None,
        });
    }
    Ok(Corpus { docs })
}

// ---------------------------------------------------------------------------
// Stage 3: freq.

pub fn stage_freq(cfg: &RunConfig) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = StageReport::new("freq");
    let corpus = read_clean_corpus(&cfg.out_dir)?;
    let table = venue_frequencies(&corpus);

    let mut out = String::from("venue,count\n");
    for (venue, count) in table.ranked() {
        out.push_str(&format!("{},{}\n", csv_field(venue), count));
    }
    write_file(&p_frequencies(&cfg.out_dir), &out)?;

    match loglog_fit(&table) {
        Ok((slope, intercept, r2)) => {
            write_file(
                &p_loglog(&cfg.out_dir),
                &format!(
                    "slope,intercept,r_squared\n{slope:.6},{intercept:.6},{r2:.6}\n"
                ),
            )?;
        }
        Err(e) => {
            report.notes.push(format!("log-log fit skipped: {e}"));
        }
    }
    report.count("venues", table.len() as u64);
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn read_frequencies(out: &Path) -> Result<VenueFrequencyTable> {
    let rows = read_csv_rows(&p_frequencies(out))?;
    let mut table = VenueFrequencyTable::default();
    for row in rows {
        let count: u64 = row[1]
            .parse()
            .map_err(|_| format_err(&p_frequencies(out), format!("bad count {:?}", row[1])))?;
        table.entries.insert(row[0].clone(), count);
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Stage 4: windows.

pub fn stage_windows(cfg: &RunConfig) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = StageReport::new("windows");
    let corpus = read_clean_corpus(&cfg.out_dir)?;
    let windows = moving_windows(&corpus, cfg.span, cfg.ragged_windows)?;
    if windows.len() == 1 {
        let w = &windows[0];
        if ((w.year_end - w.year_start + 1) as usize) < cfg.span {
            report.notes.push(format!(
                "corpus year range {}-{} is shorter than span {}; emitted a single window",
                w.year_start, w.year_end, cfg.span
            ));
        }
    }
    let mut out = String::from("label,year_start,year_end,doc_id\n");
    for w in &windows {
        for id in &w.doc_ids {
            out.push_str(&format!(
                "{},{},{},{}\n",
                w.label,
                w.year_start,
                w.year_end,
                csv_field(id)
            ));
        }
    }
    write_file(&p_windows(&cfg.out_dir), &out)?;
    report.count("windows", windows.len() as u64);
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn read_windows(out: &Path) -> Result<Vec<Window>> {
    let rows = read_csv_rows(&p_windows(out))?;
    let mut windows: Vec<Window> = Vec::new();
    for row in rows {
        let label: i32 = row[0]
            .parse()
            .map_err(|_| format_err(&p_windows(out), format!("bad label {:?}", row[0])))?;
        let year_start: i32 = row[1].parse().map_err(|_| format_err(&p_windows(out), "bad year"))?;
        let year_end: i32 = row[2].parse().map_err(|_| format_err(&p_windows(out), "bad year"))?;
        match windows.last_mut() {
            Some(w) if w.label == label => w.doc_ids.push(row[3].clone()),
            _ => windows.push(Window {
                label,
                year_start,
                year_end,
                doc_ids: vec![row[3].clone()],
            }),
        }
    }
    Ok(windows)
}

/// Labels recorded by the net stage, the anchor for every later stage.
fn read_meta_labels(out: &Path) -> Result<Vec<(i32, i32, i32, usize, usize)>> {
    let rows = read_csv_rows(&p_matrix_meta(out))?;
    let mut meta = Vec::new();
    for row in rows {
        let parse_i32 = |s: &String| -> Result<i32> {
            s.parse()
                .map_err(|_| format_err(&p_matrix_meta(out), format!("bad field {s:?}")))
        };
        meta.push((
            parse_i32(&row[0])?,
            parse_i32(&row[1])?,
            parse_i32(&row[2])?,
            row[3].parse().map_err(|_| format_err(&p_matrix_meta(out), "bad count"))?,
            row[4].parse().map_err(|_| format_err(&p_matrix_meta(out), "bad count"))?,
        ));
    }
    Ok(meta)
}

// ---------------------------------------------------------------------------
// Stage 5: net (matrices, similarities, thresholded networks).

fn run_worker_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        job()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool");
        pool.install(job)
    }
}

pub fn stage_net(cfg: &RunConfig) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = StageReport::new("net");
    let corpus = read_clean_corpus(&cfg.out_dir)?;
    let windows = read_windows(&cfg.out_dir)?;
    let table = read_frequencies(&cfg.out_dir)?;
    let venues = apply_threshold(&table, cfg.min_count);
    if venues.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no venue exceeds the citation threshold {}",
            cfg.min_count
        )));
    }

    let out_dir = cfg.out_dir.clone();
    let results: Result<Vec<(i32, usize, usize, usize)>> = run_worker_pool(cfg.workers, || {
        windows
            .par_iter()
            .map(|w| {
                let m = build_matrix(w, &corpus, &venues)?;
                let mut matrix_csv = String::from("doc_id,venue,count\n");
                for (doc, venue, count) in m.triplets() {
                    matrix_csv.push_str(&format!(
                        "{},{},{}\n",
                        csv_field(doc),
                        csv_field(venue),
                        count
                    ));
                }
                write_file(&p_matrix(&out_dir, w.label), &matrix_csv)?;

                let s = cosine_matrix(&m)?;
                let mut sim_csv = String::from("venue_a,venue_b,cosine\n");
                for i in 0..s.len() {
                    for j in i + 1..s.len() {
                        sim_csv.push_str(&format!(
                            "{},{},{:.6}\n",
                            csv_field(&s.venues[i]),
                            csv_field(&s.venues[j]),
                            s.value(i, j)
                        ));
                    }
                }
                write_file(&p_similarity(&out_dir, w.label), &sim_csv)?;

                let net = threshold_network(&s, cfg.tau)?;
                write_file(&p_network(&out_dir, w.label), &pajek_string(&net))?;
                let mut edges_csv = String::from("venue_a,venue_b,weight\n");
                for e in &net.edges {
                    edges_csv.push_str(&format!(
                        "{},{},{:.4}\n",
                        csv_field(&net.nodes[e.u]),
                        csv_field(&net.nodes[e.v]),
                        e.weight
                    ));
                }
                write_file(&p_edges(&out_dir, w.label), &edges_csv)?;
                Ok((w.label, w.doc_ids.len(), m.n_venues(), net.n_edges()))
            })
            .collect()
    });
    let mut results = results?;
    results.sort_by_key(|r| r.0);

    let mut meta = String::from("label,year_start,year_end,n_documents,n_venues\n");
    for ((label, n_docs, n_venues, _), w) in results.iter().zip(&windows) {
        debug_assert_eq!(*label, w.label);
        meta.push_str(&format!(
            "{},{},{},{},{}\n",
            label, w.year_start, w.year_end, n_docs, n_venues
        ));
    }
    write_file(&p_matrix_meta(&cfg.out_dir), &meta)?;

    report.count("windows", results.len() as u64);
    report.count("admitted_venues", venues.len() as u64);
    report.count(
        "edges_total",
        results.iter().map(|r| r.3 as u64).sum::<u64>(),
    );
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn read_matrix(out: &Path, label: i32) -> Result<OccurrenceMatrix> {
    let rows = read_csv_rows(&p_matrix(out, label))?;
    let triplets: Vec<(String, String, u32)> = rows
        .into_iter()
        .map(|row| {
            let count: u32 = row[2]
                .parse()
                .map_err(|_| format_err(&p_matrix(out, label), format!("bad count {:?}", row[2])))?;
            Ok((row[0].clone(), row[1].clone(), count))
        })
        .collect::<Result<_>>()?;
    OccurrenceMatrix::from_triplets(label, &triplets)
}

fn read_similarity(out: &Path, label: i32) -> Result<SimilarityMatrix> {
    let path = p_similarity(out, label);
    let rows = read_csv_rows(&path)?;
    let mut venues: Vec<String> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for row in &rows {
        for name in [&row[0], &row[1]] {
            if !seen.contains_key(name) {
                seen.insert(name.clone(), venues.len());
                venues.push(name.clone());
            }
        }
    }
    let n = venues.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
    }
    for row in &rows {
        let (i, j) = (seen[&row[0]], seen[&row[1]]);
        let c: f64 = row[2]
            .parse()
            .map_err(|_| format_err(&path, format!("bad cosine {:?}", row[2])))?;
        values[i * n + j] = c;
        values[j * n + i] = c;
    }
    Ok(SimilarityMatrix::new(venues, values))
}

fn read_network(out: &Path, label: i32, tau: f64) -> Result<crate::simnet::SimilarityNetwork> {
    let path = p_network(out, label);
    let text = fs::read_to_string(&path)?;
    read_pajek(&text, tau)
}

fn read_partition(out: &Path, label: i32) -> Result<(Vec<String>, Partition)> {
    let path = p_partition(out, label);
    let rows = read_csv_rows(&path)?;
    let mut nodes = Vec::with_capacity(rows.len());
    let mut raw = Vec::with_capacity(rows.len());
    for row in rows {
        let c: usize = row[1]
            .parse()
            .map_err(|_| format_err(&path, format!("bad community {:?}", row[1])))?;
        nodes.push(row[0].clone());
        raw.push(c);
    }
    Ok((nodes, Partition::new(raw)))
}

// ---------------------------------------------------------------------------
// Stage 6: communities.

pub fn stage_communities(cfg: &RunConfig) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = StageReport::new("communities");
    let meta = read_meta_labels(&cfg.out_dir)?;
    let out_dir = cfg.out_dir.clone();
    let results: Result<Vec<(i32, usize)>> = run_worker_pool(cfg.workers, || {
        meta.par_iter()
            .map(|&(label, ..)| {
                let net = read_network(&out_dir, label, cfg.tau)?;
                let seed = seeding::window_seed(cfg.seed, "communities", label);
                let p = louvain(&net, seed, cfg.weighted);
                write_file(&p_clu(&out_dir, label), &clu_string(&p, &net.nodes)?)?;
                let mut csv_out = String::from("venue,community\n");
                for (i, node) in net.nodes.iter().enumerate() {
                    csv_out.push_str(&format!("{},{}\n", csv_field(node), p.community_of(i)));
                }
                write_file(&p_partition(&out_dir, label), &csv_out)?;
                Ok((label, p.n_communities()))
            })
            .collect()
    });
    let mut results = results?;
    results.sort_by_key(|r| r.0);
    report.count("windows", results.len() as u64);
    if let Some((_, max)) = results.iter().max_by_key(|r| r.1) {
        report.count("max_communities", *max as u64);
    }
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Stage 7: metrics.

pub fn stage_metrics(cfg: &RunConfig) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = StageReport::new("metrics");
    let meta = read_meta_labels(&cfg.out_dir)?;
    let mut rows = Vec::with_capacity(meta.len());
    for &(label, year_start, year_end, n_documents, _) in &meta {
        let net = read_network(&cfg.out_dir, label, cfg.tau)?;
        let (nodes, partition) = read_partition(&cfg.out_dir, label)?;
        if nodes != net.nodes {
            return Err(format_err(
                &p_partition(&cfg.out_dir, label),
                "partition node order does not match the network",
            ));
        }
        rows.push(MetricsRow {
            year_start,
            year_end,
            n_documents,
            n_cited_venues: net.n_nodes(),
            n_edge_endpoints: net.n_edge_endpoints(),
            n_communities: partition.n_communities(),
            modularity: modularity(&net, &partition, cfg.weighted)?,
            avg_clustering: avg_clustering(&net),
            density: density(&net)?,
        });
    }
    write_file(&p_metrics(&cfg.out_dir), &metrics_report_string(&rows)?)?;
    report.count("rows", rows.len() as u64);
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Stage 8: factors.

pub fn stage_factors(cfg: &RunConfig) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = StageReport::new("factors");
    let meta = read_meta_labels(&cfg.out_dir)?;
    let out_dir = cfg.out_dir.clone();
    let results: Result<Vec<(i32, usize)>> = run_worker_pool(cfg.workers, || {
        meta.par_iter()
            .map(|&(label, ..)| {
                let m = read_matrix(&out_dir, label)?;
                let c = correlation(&m)?;
                let k = cfg.k_factors.min(c.len());
                let unrotated = principal_components(&c, k)?;
                let sol = rotate_varimax(&unrotated, cfg.kaiser);
                write_file(
                    &p_loadings(&out_dir, label),
                    &loadings_report_string(&sol, cfg.highlight_venue.as_deref()),
                )?;
                let scree = eigenvalue_scree(&c);
                let mut scree_csv = String::from("factor,eigenvalue\n");
                for (i, ev) in scree.iter().enumerate() {
                    scree_csv.push_str(&format!("{},{:.6}\n", i + 1, ev));
                }
                write_file(&p_scree(&out_dir, label), &scree_csv)?;
                Ok((label, k))
            })
            .collect()
    });
    let mut results = results?;
    results.sort_by_key(|r| r.0);
    for (label, k) in &results {
        if *k < cfg.k_factors {
            report.notes.push(format!(
                "window {label}: only {k} venues, extracted {k} factors instead of {}",
                cfg.k_factors
            ));
        }
    }
    report.count("windows", results.len() as u64);
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Stage 9: flow.

pub fn stage_flow(cfg: &RunConfig) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = StageReport::new("flow");
    let meta = read_meta_labels(&cfg.out_dir)?;
    if meta.len() < 2 {
        report
            .notes
            .push("fewer than 2 windows; flow stage skipped".into());
        report.wall_ms = start.elapsed().as_millis() as u64;
        return Ok(report);
    }
    let mut slices = Vec::with_capacity(meta.len());
    for &(label, ..) in &meta {
        let (nodes, partition) = read_partition(&cfg.out_dir, label)?;
        slices.push((label, nodes, partition));
    }
    let series = series_from_slices(slices);
    let graph = align_communities(&series, cfg.min_overlap)?;
    for w in &graph.warnings {
        report.notes.push(w.clone());
    }

    let mut edges_csv =
        String::from("slice_from,comm_from,slice_to,comm_to,mass,overlap,significant\n");
    for e in &graph.edges {
        edges_csv.push_str(&format!(
            "{},{},{},{},{},{:.6},{}\n",
            e.from_slice,
            e.from_community,
            e.from_slice + 1,
            e.to_community,
            e.mass,
            e.overlap,
            e.significant
        ));
    }
    write_file(&p_flow_edges(&cfg.out_dir), &edges_csv)?;

    let events = detect_events(&graph);
    let mut events_csv = String::from("kind,slice,label,community,counterparts\n");
    for e in &events {
        events_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            e.kind.as_str(),
            e.slice,
            graph.labels[e.slice],
            e.community,
            e.counterparts
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("|")
        ));
    }
    write_file(&p_flow_events(&cfg.out_dir), &events_csv)?;

    let geo = alluvial_layout(&graph);
    let mut bands_csv = String::from("slice,label,community,x,y0,y1\n");
    for b in &geo.bands {
        bands_csv.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6}\n",
            b.slice, graph.labels[b.slice], b.community, b.x, b.y0, b.y1
        ));
    }
    write_file(&p_flow_bands(&cfg.out_dir), &bands_csv)?;
    let mut ribbons_csv = String::from(
        "slice_from,comm_from,comm_to,mass,x0,from_top,from_bottom,x1,to_top,to_bottom,significant\n",
    );
    for r in &geo.ribbons {
        ribbons_csv.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
            r.from_slice,
            r.from_community,
            r.to_community,
            r.mass,
            r.x0,
            r.from_top,
            r.from_bottom,
            r.x1,
            r.to_top,
            r.to_bottom,
            r.significant
        ));
    }
    write_file(&p_flow_ribbons(&cfg.out_dir), &ribbons_csv)?;

    use crate::flow::event_counts;
    let counts = event_counts(&events);
    for (kind, n) in &counts {
        report.count(&kind.as_str().to_lowercase(), *n as u64);
    }
    report.count("flow_edges", graph.edges.len() as u64);
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Stage 10: layout.

pub fn stage_layout(cfg: &RunConfig) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = StageReport::new("layout");
    let meta = read_meta_labels(&cfg.out_dir)?;
    let mut series = Vec::with_capacity(meta.len());
    for &(label, ..) in &meta {
        let s = read_similarity(&cfg.out_dir, label)?;
        series.push((label, dissimilarity_from_similarity(&s, Some(cfg.tau))));
    }
    let layout_seed = seeding::stage_seed(cfg.seed, "layout");
    let ls = dynamic_layout(
        &series,
        cfg.alpha,
        cfg.smooth_span,
        layout_seed,
        cfg.layout_tol,
        cfg.layout_max_iter,
    )?;

    for (label, config) in &ls.frames {
        let mut frame_csv = String::from("venue,x,y\n");
        for (venue, pos) in config.venues.iter().zip(&config.positions) {
            frame_csv.push_str(&format!(
                "{},{:.6},{:.6}\n",
                csv_field(venue),
                pos[0],
                pos[1]
            ));
        }
        write_file(&p_frame(&cfg.out_dir, *label), &frame_csv)?;
    }

    let mut stress_csv = String::from("label,alpha,seed,stress\n");
    for ((label, config), (_, d)) in ls.frames.iter().zip(&series) {
        let stress = kruskal_stress(d, config)?;
        stress_csv.push_str(&format!(
            "{},{},{},{:.6}\n",
            label,
            cfg.alpha,
            frame_seed(layout_seed, *label),
            stress
        ));
    }
    let total = aggregated_stress(&ls, &series)?;
    stress_csv.push_str(&format!("aggregate,{},,{:.6}\n", cfg.alpha, total));
    write_file(&p_layout_stress(&cfg.out_dir), &stress_csv)?;

    report.count("frames", ls.frames.len() as u64);
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Stage 11: export (alluvial SVG from the flow geometry).

pub fn stage_export(cfg: &RunConfig) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = StageReport::new("export");
    let meta = read_meta_labels(&cfg.out_dir)?;
    if meta.len() < 2 {
        report
            .notes
            .push("fewer than 2 windows; nothing to render".into());
        report.wall_ms = start.elapsed().as_millis() as u64;
        return Ok(report);
    }
    let labels: Vec<i32> = meta.iter().map(|m| m.0).collect();

    let band_rows = read_csv_rows(&p_flow_bands(&cfg.out_dir))?;
    let parse_f = |s: &String, path: &Path| -> Result<f64> {
        s.parse()
            .map_err(|_| format_err(path, format!("bad number {s:?}")))
    };
    let bands_path = p_flow_bands(&cfg.out_dir);
    let mut bands = Vec::new();
    for row in &band_rows {
        bands.push(Band {
            slice: row[0].parse().map_err(|_| format_err(&bands_path, "bad slice"))?,
            community: row[2].parse().map_err(|_| format_err(&bands_path, "bad community"))?,
            x: parse_f(&row[3], &bands_path)?,
            y0: parse_f(&row[4], &bands_path)?,
            y1: parse_f(&row[5], &bands_path)?,
        });
    }
    let ribbons_path = p_flow_ribbons(&cfg.out_dir);
    let ribbon_rows = read_csv_rows(&ribbons_path)?;
    let mut ribbons = Vec::new();
    for row in &ribbon_rows {
        ribbons.push(Ribbon {
            from_slice: row[0].parse().map_err(|_| format_err(&ribbons_path, "bad slice"))?,
            from_community: row[1].parse().map_err(|_| format_err(&ribbons_path, "bad community"))?,
            to_community: row[2].parse().map_err(|_| format_err(&ribbons_path, "bad community"))?,
            mass: row[3].parse().map_err(|_| format_err(&ribbons_path, "bad mass"))?,
            x0: parse_f(&row[4], &ribbons_path)?,
            from_top: parse_f(&row[5], &ribbons_path)?,
            from_bottom: parse_f(&row[6], &ribbons_path)?,
            x1: parse_f(&row[7], &ribbons_path)?,
            to_top: parse_f(&row[8], &ribbons_path)?,
            to_bottom: parse_f(&row[9], &ribbons_path)?,
            significant: row[10] == "true",
        });
    }
    let edges_path = p_flow_edges(&cfg.out_dir);
    let edge_rows = read_csv_rows(&edges_path)?;
    let mut edges = Vec::new();
    for row in &edge_rows {
        edges.push(FlowEdge {
            from_slice: row[0].parse().map_err(|_| format_err(&edges_path, "bad slice"))?,
            from_community: row[1].parse().map_err(|_| format_err(&edges_path, "bad community"))?,
            to_community: row[3].parse().map_err(|_| format_err(&edges_path, "bad community"))?,
            mass: row[4].parse().map_err(|_| format_err(&edges_path, "bad mass"))?,
            overlap: parse_f(&row[5], &edges_path)?,
            overlap_incoming: 0.0,
            significant: row[6] == "true",
        });
    }

    // Community sizes per slice, up to the proportionality constant the
    // colors need: band heights already encode them.
    let n_slices = labels.len();
    let mut sizes: Vec<Vec<usize>> = vec![Vec::new(); n_slices];
    for b in &bands {
        if sizes[b.slice].len() <= b.community {
            sizes[b.slice].resize(b.community + 1, 0);
        }
        sizes[b.slice][b.community] = 1;
    }
    let colors = continuation_colors(n_slices, &sizes, &edges);
    let geo = AlluvialGeometry { bands, ribbons };
    crate::export::render_alluvial_svg(&geo, &colors, &labels, &p_alluvial(&cfg.out_dir))?;

    report.count("bands", geo.bands.len() as u64);
    report.count("ribbons", geo.ribbons.len() as u64);
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Stage 12: plot.

pub fn stage_plot(cfg: &RunConfig) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = StageReport::new("plot");
    let path = p_metrics(&cfg.out_dir);
    let rows = read_csv_rows(&path)?;
    let mut labels: Vec<i32> = Vec::new();
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); 7];
    for row in &rows {
        if row[0].starts_with("Sum") {
            continue; // footer
        }
        let label: i32 = row[0]
            .split('-')
            .nth(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err(&path, format!("bad window span {:?}", row[0])))?;
        labels.push(label);
        for (i, col) in (1..8).enumerate() {
            let v: f64 = row[col]
                .parse()
                .map_err(|_| format_err(&path, format!("bad value {:?}", row[col])))?;
            series[i].push(v);
        }
    }
    let names = [
        "documents",
        "cited_venues",
        "edge_endpoints",
        "communities",
        "modularity",
        "clustering",
        "density",
    ];
    let plots_dir = p_plots(&cfg.out_dir);
    fs::create_dir_all(&plots_dir)?;
    for (name, values) in names.iter().zip(&series) {
        let points: Vec<(i32, f64)> = labels.iter().copied().zip(values.iter().copied()).collect();
        let svg = line_chart_string(name, &points)?;
        write_file(&plots_dir.join(format!("{name}.svg")), &svg)?;
    }
    report.count("charts", names.len() as u64);
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

// ---------------------------------------------------------------------------
// The full pipeline.

type StageFn = fn(&RunConfig) -> Result<StageReport>;

/// Stage names in execution order with their entry points.
pub const STAGES: [(&str, StageFn); 12] = [
    ("parse", stage_parse),
    ("clean", stage_clean),
    ("freq", stage_freq),
    ("windows", stage_windows),
    ("net", stage_net),
    ("communities", stage_communities),
    ("metrics", stage_metrics),
    ("factors", stage_factors),
    ("flow", stage_flow),
    ("layout", stage_layout),
    ("export", stage_export),
    ("plot", stage_plot),
];

/// Run every stage in order and write the manifest. A failing stage
/// aborts with its name attached; the products of earlier stages stay
/// on disk untouched.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunManifest> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let mut manifest = RunManifest {
        tool: "refmap".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        stages: Vec::with_capacity(STAGES.len()),
    };
    for (name, stage) in STAGES {
        let report = stage(cfg).map_err(|e| e.in_stage(name))?;
        manifest.stages.push(report);
    }
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&p_manifest(&cfg.out_dir), &(json + "\n"))?;
    Ok(manifest)
}

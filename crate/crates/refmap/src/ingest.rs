//! Ingestion of field-tagged citation-index exports.
//!
//! An export file is a plain-text sequence of records. Each record starts
//! with a `PT` line, carries two-character tags (`PY`, `UT`, `CR`, ...)
//! with optional indented continuation lines, and ends with `ER`. The file
//! may close with `EF`. Cited references live one per line under `CR` as
//! comma-separated subfields, the third of which holds the abbreviated
//! venue name.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// One raw record: ordered (tag, lines) pairs, uninterpreted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldTaggedRecord {
    pub tags: Vec<(String, Vec<String>)>,
}

impl FieldTaggedRecord {
    /// First line of the first occurrence of `tag`.
    pub fn first(&self, tag: &str) -> Option<&str> {
        self.tags
            .iter()
            .find(|(t, _)| t == tag)
            .and_then(|(_, lines)| lines.first().map(String::as_str))
    }

    /// All lines under every occurrence of `tag`, in order.
    pub fn lines(&self, tag: &str) -> Vec<&str> {
        self.tags
            .iter()
            .filter(|(t, _)| t == tag)
            .flat_map(|(_, lines)| lines.iter().map(String::as_str))
            .collect()
    }
}

/// One parsed cited-reference string.
///
/// Subfields keep their source order; anything unrecognized is simply
/// absent. `venue_raw` is uppercased at parse time because the index mixes
/// cases across years.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitedReference {
    pub first_author: Option<String>,
    pub year: Option<i32>,
    pub venue_raw: Option<String>,
    pub volume: Option<String>,
    pub page: Option<String>,
}

/// One citing document: stable id, publication year, cited references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    pub id: String,
    pub pub_year: i32,
    pub refs: Vec<CitedReference>,
}

/// Venue cleaning policy: sequence-number stripping, merge rules,
/// names to delete, and removal of corpus-wide singletons.
#[derive(Debug, Clone)]
pub struct NormalizationRules {
    pub strip_sequence_numbers: bool,
    /// (pattern, canonical) pairs; `*` in a pattern matches any run of
    /// characters; first match wins, order fixed.
    pub merge_map: Vec<(String, String)>,
    pub drop_list: Vec<String>,
    pub drop_singletons: bool,
}

impl Default for NormalizationRules {
    fn default() -> Self {
        NormalizationRules {
            strip_sequence_numbers: true,
            merge_map: vec![
                ("ANN C COGN SCI".into(), "ANN M COGN SCI".into()),
                ("P * INT JOINT C AR".into(), "P INT JOINT C AR".into()),
            ],
            drop_list: vec!["THESIS".into()],
            drop_singletons: true,
        }
    }
}

impl NormalizationRules {
    /// Parse rules from a plain-text TSV table: `action<TAB>pattern<TAB>replacement`.
    ///
    /// Actions: `merge` (pattern -> replacement), `drop` (pattern only),
    /// `strip_sequence_numbers` and `drop_singletons` (pattern is `true`
    /// or `false`). Lines starting with `#` and blank lines are skipped.
    pub fn from_tsv(text: &str) -> Result<NormalizationRules> {
        let mut rules = NormalizationRules {
            strip_sequence_numbers: true,
            merge_map: Vec::new(),
            drop_list: Vec::new(),
            drop_singletons: true,
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let action = parts.next().unwrap_or("").trim();
            let pattern = parts.next().unwrap_or("").trim();
            let replacement = parts.next().unwrap_or("").trim();
            let bad = |message: String| Error::Format {
                path: format!("rules line {}", lineno + 1),
                message,
            };
            match action {
                "merge" => {
                    if pattern.is_empty() || replacement.is_empty() {
                        return Err(bad("merge needs pattern and replacement".into()));
                    }
                    rules
                        .merge_map
                        .push((canonical_text(pattern), canonical_text(replacement)));
                }
                "drop" => {
                    if pattern.is_empty() {
                        return Err(bad("drop needs a pattern".into()));
                    }
                    rules.drop_list.push(canonical_text(pattern));
                }
                "strip_sequence_numbers" => {
                    rules.strip_sequence_numbers = parse_bool(pattern).ok_or_else(|| {
                        bad(format!("expected true/false, got {pattern:?}"))
                    })?;
                }
                "drop_singletons" => {
                    rules.drop_singletons = parse_bool(pattern).ok_or_else(|| {
                        bad(format!("expected true/false, got {pattern:?}"))
                    })?;
                }
                other => {
                    return Err(bad(format!("unknown action {other:?}")));
                }
            }
        }
        Ok(rules)
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Decode export bytes: valid UTF-8 passes through (minus a BOM),
/// anything else is read as Latin-1.
pub fn decode_export(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.strip_prefix('\u{feff}').unwrap_or(s).to_string(),
        Err(_) => bytes.iter().map(|&b| b as char).collect(),
    }
}

fn is_tag_byte(b: u8) -> bool {
    b.is_ascii_uppercase() || b.is_ascii_digit()
}

/// A line opens a new tag when it starts with exactly two tag characters
/// followed by a space (or end of line). Everything else continues the
/// current tag.
fn split_tag(line: &str) -> Option<(&str, &str)> {
    let b = line.as_bytes();
    if b.len() >= 2 && is_tag_byte(b[0]) && is_tag_byte(b[1]) {
        if b.len() == 2 {
            return Some((&line[..2], ""));
        }
        if b[2] == b' ' {
            return Some((&line[..2], &line[3..]));
        }
    }
    None
}

/// Parse a full export file into raw records.
///
/// Records begin at `PT` and end at `ER`; `EF` closes the file. Header
/// lines (`FN`, `VR`) and blank lines between records are skipped. A
/// record left open at end of input is a truncation error.
pub fn parse_export(text: &str) -> Result<Vec<FieldTaggedRecord>> {
    let mut records = Vec::new();
    let mut current: Option<FieldTaggedRecord> = None;
    let mut record_start = 0usize;
    let mut offset = 0usize;

    for line in text.split('\n') {
        let line_offset = offset;
        offset += line.len() + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);

        match split_tag(line) {
            Some(("EF", _)) => {
                if let Some(rec) = current {
                    return Err(truncated(record_start, &rec));
                }
                return Ok(records);
            }
            Some(("PT", value)) => {
                if let Some(rec) = current {
                    return Err(truncated(record_start, &rec));
                }
                record_start = line_offset;
                current = Some(FieldTaggedRecord {
                    tags: vec![("PT".into(), vec![value.to_string()])],
                });
            }
            Some(("ER", _)) => match current.take() {
                Some(rec) => records.push(rec),
                None => {
                    return Err(Error::MalformedExport {
                        offset: line_offset,
                        last_tag: None,
                        message: "end-of-record tag outside a record".into(),
                    })
                }
            },
            Some((tag, value)) => match current.as_mut() {
                Some(rec) => rec.tags.push((tag.into(), vec![value.to_string()])),
                None => {
                    // Header tags before the first record; anything else
                    // here is a malformed header.
                    if !(tag == "FN" || tag == "VR") {
                        return Err(Error::MalformedExport {
                            offset: line_offset,
                            last_tag: None,
                            message: format!("unexpected tag {tag:?} before first record"),
                        });
                    }
                }
            },
            None => {
                if line.trim().is_empty() {
                    continue;
                }
                match current.as_mut() {
                    Some(rec) => {
                        // Continuation line: attach to the most recent tag.
                        let (_, lines) = rec.tags.last_mut().expect("record opened with PT");
                        lines.push(line.trim_start().to_string());
                    }
                    None => {
                        return Err(Error::MalformedExport {
                            offset: line_offset,
                            last_tag: None,
                            message: "continuation line outside any record".into(),
                        })
                    }
                }
            }
        }
    }

    if let Some(rec) = current {
        return Err(truncated(record_start, &rec));
    }
    Ok(records)
}

fn truncated(offset: usize, rec: &FieldTaggedRecord) -> Error {
    Error::MalformedExport {
        offset,
        last_tag: rec.tags.last().map(|(t, _)| t.clone()),
        message: "record not closed by end-of-record tag".into(),
    }
}

fn parse_year_token(s: &str) -> Option<i32> {
    if s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

fn prefixed_value(token: &str, prefix: u8) -> Option<&str> {
    let b = token.as_bytes();
    if b.len() >= 2
        && b[0] == prefix
        && b[1].is_ascii_digit()
        && b[1..].iter().all(|c| c.is_ascii_alphanumeric())
    {
        Some(&token[1..])
    } else {
        None
    }
}

/// Parse one cited-reference line. Total: unparseable parts become absent
/// fields, never errors.
///
/// The venue is the third comma-separated subfield unless the second
/// subfield is not a four-digit year, in which case the second subfield
/// is taken as the venue (author-less references). `V`-prefixed volume
/// and `P`-prefixed page tokens are recognized anywhere after the venue.
pub fn parse_cited_reference(line: &str) -> CitedReference {
    let tokens: Vec<&str> = line.split(',').map(str::trim).collect();
    let first_author = tokens
        .first()
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string());
    let year = tokens.get(1).copied().and_then(parse_year_token);
    let venue_idx = if year.is_some() { 2 } else { 1 };
    let venue_raw = tokens
        .get(venue_idx)
        .filter(|t| !t.is_empty())
        .map(|t| t.to_uppercase());

    let mut volume = None;
    let mut page = None;
    if venue_raw.is_some() {
        for token in &tokens[venue_idx + 1..] {
            if volume.is_none() {
                if let Some(v) = prefixed_value(token, b'V') {
                    volume = Some(v.to_string());
                    continue;
                }
            }
            if page.is_none() {
                if let Some(p) = prefixed_value(token, b'P') {
                    page = Some(p.to_string());
                }
            }
        }
    }

    CitedReference {
        first_author,
        year,
        venue_raw,
        volume,
        page,
    }
}

/// Interpret a raw record as a citing document.
///
/// The id comes from the accession-number tag (`UT`), falling back to a
/// stable hash of the record body. A missing or unparseable `PY` rejects
/// the record.
pub fn to_document(rec: &FieldTaggedRecord) -> Result<DocumentRecord> {
    let pub_year = rec
        .first("PY")
        .and_then(|s| s.trim().parse::<i32>().ok())
        .ok_or_else(|| Error::MissingYear {
            record_id: rec.first("UT").unwrap_or("<no id>").to_string(),
        })?;
    let id = match rec.first("UT") {
        Some(ut) if !ut.trim().is_empty() => ut.trim().to_string(),
        _ => format!("REC:{:016x}", record_hash(rec)),
    };
    let refs = rec
        .lines("CR")
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .map(parse_cited_reference)
        .collect();
    Ok(DocumentRecord { id, pub_year, refs })
}

fn record_hash(rec: &FieldTaggedRecord) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for (tag, lines) in &rec.tags {
        eat(tag.as_bytes());
        eat(b"\x1f");
        for line in lines {
            eat(line.as_bytes());
            eat(b"\x1e");
        }
    }
    h
}

/// Counters for records rejected during document conversion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestWarnings {
    pub rejected_missing_year: usize,
}

/// Convert all records, counting rejects instead of failing.
pub fn to_documents(records: &[FieldTaggedRecord]) -> (Vec<DocumentRecord>, IngestWarnings) {
    let mut docs = Vec::with_capacity(records.len());
    let mut warnings = IngestWarnings::default();
    for rec in records {
        match to_document(rec) {
            Ok(doc) => docs.push(doc),
            Err(Error::MissingYear { .. }) => warnings.rejected_missing_year += 1,
            Err(_) => unreachable!("to_document only rejects on missing year"),
        }
    }
    (docs, warnings)
}

/// Uppercase and collapse internal whitespace.
fn canonical_text(s: &str) -> String {
    s.to_uppercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Ordinal or bare-number token: `5`, `5TH`, `23RD`, `101ST`.
fn is_sequence_token(token: &str) -> bool {
    let digits: String = token.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() {
        return false;
    }
    let rest = &token[digits.len()..];
    matches!(rest, "" | "ST" | "ND" | "RD" | "TH")
}

/// Match `pattern` against `text` where `*` matches any run of characters.
fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0usize, 0usize);
    let (mut star, mut mark) = (usize::MAX, 0usize);
    while ti < t.len() {
        if pi < p.len() && p[pi] == '*' {
            star = pi;
            mark = ti;
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if star != usize::MAX {
            pi = star + 1;
            mark += 1;
            ti = mark;
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '*' {
        pi += 1;
    }
    pi == p.len()
}

/// Normalize a raw venue name. Returns `None` when the name is deleted
/// by the drop list (or reduces to nothing).
pub fn normalize_venue(venue_raw: &str, rules: &NormalizationRules) -> Option<String> {
    let mut name = canonical_text(venue_raw);
    if rules.strip_sequence_numbers {
        loop {
            let Some(first) = name.split(' ').next().filter(|t| !t.is_empty()) else {
                break;
            };
            if is_sequence_token(first) {
                name = name[first.len()..].trim_start().to_string();
            } else {
                break;
            }
        }
    }
    if name.is_empty() {
        return None;
    }
    for (pattern, canonical) in &rules.merge_map {
        if glob_match(pattern, &name) {
            name = canonical.clone();
            break;
        }
    }
    if rules.drop_list.iter().any(|d| d == &name) {
        return None;
    }
    Some(name)
}

/// Totals from a cleaning run. Conservation holds exactly:
/// `refs_in = refs_out + refs_dropped_by_rule + refs_dropped_singleton`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleaningReport {
    pub refs_in: usize,
    pub refs_dropped_by_rule: usize,
    pub refs_dropped_singleton: usize,
    pub refs_out: usize,
    /// References whose year subfield could not be read; they are kept
    /// (when a venue is present) but flagged here because they are
    /// indistinguishable from venue-in-second-position lines.
    pub refs_missing_year: usize,
}

impl CleaningReport {
    pub fn pct_retained(&self) -> f64 {
        if self.refs_in == 0 {
            0.0
        } else {
            100.0 * self.refs_out as f64 / self.refs_in as f64
        }
    }
}

/// The cleaned corpus: documents whose surviving references carry
/// canonical venue names in `venue_raw`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub docs: Vec<DocumentRecord>,
}

impl Corpus {
    pub fn doc_index(&self) -> BTreeMap<&str, usize> {
        self.docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.as_str(), i))
            .collect()
    }
}

/// Normalize every reference, delete dropped names, then remove venues
/// occurring exactly once corpus-wide (misspellings are often occurring
/// only once). Singleton removal runs after the merge rules so that
/// merging may lift a variant above count 1.
pub fn clean_corpus(
    docs: &[DocumentRecord],
    rules: &NormalizationRules,
) -> Result<(Corpus, CleaningReport)> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut report = CleaningReport::default();
    let mut normalized: Vec<DocumentRecord> = Vec::with_capacity(docs.len());
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();

    for doc in docs {
        let mut kept = Vec::with_capacity(doc.refs.len());
        for r in &doc.refs {
            report.refs_in += 1;
            if r.year.is_none() {
                report.refs_missing_year += 1;
            }
            let venue = r.venue_raw.as_deref().and_then(|v| normalize_venue(v, rules));
            match venue {
                Some(name) => {
                    *counts.entry(name.clone()).or_insert(0) += 1;
                    kept.push(CitedReference {
                        venue_raw: Some(name),
                        ..r.clone()
                    });
                }
                None => report.refs_dropped_by_rule += 1,
            }
        }
        normalized.push(DocumentRecord {
            id: doc.id.clone(),
            pub_year: doc.pub_year,
            refs: kept,
        });
    }

    if rules.drop_singletons {
        for doc in &mut normalized {
            doc.refs.retain(|r| {
                let keep = counts[r.venue_raw.as_deref().expect("normalized")] > 1;
                if !keep {
                    report.refs_dropped_singleton += 1;
                }
                keep
            });
        }
    }
    report.refs_out =
        report.refs_in - report.refs_dropped_by_rule - report.refs_dropped_singleton;
    Ok((Corpus { docs: normalized }, report))
}
